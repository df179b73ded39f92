#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "maple/hwcounters.hpp"
#include "maple/search_space.hpp"

namespace maple {

// Synthetic devices with deterministic latency and counter oracles. The
// latency model is additive per-operator cost with an interaction surcharge
// per adjacent conv-conv edge pair, so a plain operator-sum predictor is
// systematically wrong while the problem stays learnable.

struct CounterResponse {
    double scale = 0;
    double exponent = 1;
};

struct SimDeviceConfig {
    bool gpu_like = false;
    // When nonzero, the counter-response block is derived from this seed
    // instead of the device seed, modelling two accelerators characterized
    // through the same host processor.
    std::uint64_t proxy_cpu_seed = 0;
    double noise_cv = 0.02;
};

// Pool convention: seeds 1-3 are cpu-like, everything else gpu-like; seeds 7
// and 8 share one proxy processor block.
SimDeviceConfig default_config_for_seed(std::uint64_t seed);

struct SimDevice {
    std::string device_id;
    std::uint64_t seed = 0;
    bool gpu_like = false;
    double base_overhead_ms = 0;
    std::array<double, kNumWorkloads> op_cost_ms{};  // None workloads cost 0
    double interaction_coeff = 0;
    double noise_cv = 0;
    std::array<CounterResponse, kNumCounterEvents> counter_profile{};
};

SimDevice make_device(std::uint64_t seed, const SimDeviceConfig& cfg);
SimDevice make_device(std::uint64_t seed);  // default_config_for_seed
std::vector<SimDevice> make_pool(const std::vector<std::uint64_t>& seeds);
std::vector<SimDevice> make_default_pool();  // seeds 1..8

// Deterministic ground-truth latency; with `noisy`, one multiplicative
// log-normal draw of coefficient-of-variation noise_cv is applied, taken
// from `rng` (or derived from (device seed, arch) when rng is null).
double sim_latency(const SimDevice& d, ArchId arch, const NetworkSkeleton& skel, bool noisy = false,
                   std::mt19937_64* rng = nullptr);

HardwareDescriptor sim_descriptor(const SimDevice& d);

// Architecture-quality oracle in [0, 1]: weakly increasing in cell FLOPs with
// a bounded seeded perturbation; the all-None cell floors it.
double sim_accuracy(ArchId arch);

void save_pool(const std::vector<SimDevice>& pool, const std::filesystem::path& path);
std::vector<SimDevice> load_pool(const std::filesystem::path& path);
const SimDevice& find_device(const std::vector<SimDevice>& pool, const std::string& device_id);

}  // namespace maple
