#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "maple/devicesim.hpp"
#include "maple/hwcounters.hpp"
#include "maple/search_space.hpp"

namespace maple {

struct LatencySample {
    std::string device_id;
    ArchId arch = 0;
    double latency_ms = 0;
    double weight = 1.0;

    bool operator==(const LatencySample&) const = default;
};

using DescriptorMap = std::map<std::string, HardwareDescriptor>;

// A set of (architecture, device, latency) samples together with the
// descriptor of every referenced device.
struct SampleSet {
    std::vector<LatencySample> samples;
    DescriptorMap descriptors;
};

// n distinct ids sampled uniformly without replacement, deterministic in seed.
std::vector<ArchId> select_training_architectures(int n, std::uint64_t seed);

// k ids for adaptation, drawn uniformly from the whole space (not restricted
// to any training selection), deterministic in seed.
std::vector<ArchId> select_adaptation_architectures(int k, std::uint64_t seed);

// One noisy measured sample per (device, arch) pair from the simulator.
SampleSet collect_initial_sim(const std::vector<SimDevice>& devices,
                              const std::vector<ArchId>& archs, const NetworkSkeleton& skel,
                              std::uint64_t seed);

SampleSet collect_adaptation_sim(const SimDevice& device, int k, std::uint64_t seed,
                                 const NetworkSkeleton& skel);

// Host-measured collection (perf descriptor + wall-clock network latency,
// mean over `repeats` runs per architecture).
SampleSet collect_initial_host(const std::string& device_id, const std::vector<ArchId>& archs,
                               const NetworkSkeleton& skel, int repeats = 50,
                               int counter_iterations = 100);
SampleSet collect_adaptation_host(const std::string& device_id, int k, std::uint64_t seed,
                                  const NetworkSkeleton& skel, int repeats = 50,
                                  int counter_iterations = 100);

// The weighted training set: initial samples get weight 1/sqrt(|initial|),
// adaptation samples 1/sqrt(|adaptation|). An empty adaptation set is allowed.
// (device, arch) duplicates keep the adaptation copy.
SampleSet build_training_set(const SampleSet& initial, const SampleSet& adaptation);

// CSV: header `device_id,arch_id,latency_ms,weight`, one row per sample, full
// double precision. Descriptors live in their own files; load validates every
// referenced device against `descriptors`.
void save_samples(const SampleSet& set, const std::filesystem::path& path);
SampleSet load_samples(const std::filesystem::path& path, const DescriptorMap& descriptors);

}  // namespace maple
