#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "maple/dataset.hpp"
#include "maple/devicesim.hpp"
#include "maple/search_space.hpp"

namespace maple {

// Per-device operator latency table plus the fixed skeleton overhead taken
// from the all-None architecture, so the baseline is not handicapped by
// unmodelled stem/reduction/head time.
struct LatencyLUT {
    std::string device_id;
    std::array<double, kNumWorkloads> entries_ms{};
    double fixed_overhead_ms = 0;
};

LatencyLUT build_lut(const SimDevice& device);
LatencyLUT build_lut_host(const std::string& device_id, const NetworkSkeleton& skel,
                          int repeats = 50);

double lut_predict(const LatencyLUT& lut, ArchId arch, const NetworkSkeleton& skel,
                   bool include_overhead = true);

// Least-squares (through the origin) fit of latency against FLOPs.
double fit_flops_scale(std::span<const LatencySample> samples, const NetworkSkeleton& skel);
double flops_predict(double scale, ArchId arch, const NetworkSkeleton& skel);

// Same sum as lut_predict, but from freshly measured per-operator latencies
// (mean of `repeats` measurements per operator).
double layerwise_predict(const SimDevice& device, ArchId arch, const NetworkSkeleton& skel,
                         std::uint64_t seed = 0, int repeats = 25);
double layerwise_predict_host(const std::string& device_id, ArchId arch,
                              const NetworkSkeleton& skel, int repeats = 25);

void save_lut(const LatencyLUT& lut, const std::filesystem::path& path);
LatencyLUT load_lut(const std::filesystem::path& path);

}  // namespace maple
