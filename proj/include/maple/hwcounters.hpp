#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

#include "maple/search_space.hpp"

namespace maple {

// The ten events characterizing a device, in fixed descriptor order.
enum class CounterEvent : int {
    CpuCycles = 0,
    Instructions,
    CacheReferences,
    CacheMisses,
    L1DcacheLoads,
    L1DcacheLoadMisses,
    LlcLoadMisses,
    LlcLoads,
    LlcStoreMisses,
    LlcStores,
};

inline constexpr int kNumCounterEvents = 10;
inline constexpr int kDescriptorCounterValues = kNumWorkloads * kNumCounterEvents;  // 150
inline constexpr int kDescriptorLength = kDescriptorCounterValues + kNumWorkloads;  // 165

const std::array<std::string_view, kNumCounterEvents>& counter_event_names();

// Per-device feature block: one row of counter readings per operator
// workload, plus the per-operator latency. Counter values are normalized per
// workload-loop iteration. Flattening puts the 150 counter values first
// (workload-major: workload i, event j at index i*10 + j) and the 15
// latencies after them.
struct HardwareDescriptor {
    std::string device_id;
    std::array<std::array<double, kNumCounterEvents>, kNumWorkloads> counters{};
    std::array<double, kNumWorkloads> op_latency_ms{};

    std::array<double, kDescriptorLength> flattened() const;
};

void save_descriptor(const HardwareDescriptor& d, const std::filesystem::path& path);
HardwareDescriptor load_descriptor(const std::filesystem::path& path);

// True when the OS performance-monitoring interface is usable from this
// process; otherwise fills `reason` with the OS error.
bool counters_available(std::string* reason = nullptr);

struct CounterReading {
    std::array<double, kNumCounterEvents> per_iteration{};
    double duration_ms = 0;  // per iteration as well
};

// Runs run_workload_loop(w, iterations) with the ten counters enabled around
// it. Throws UnsupportedError when the interface is missing or forbidden.
CounterReading measure_counters(const OperatorWorkload& w, int iterations);

// Measures all 15 workloads in canonical order on the host.
HardwareDescriptor build_descriptor(const std::string& device_id, int iterations = 100);

}  // namespace maple
