#include "maple/hwcounters.hpp"

#include <cstdint>
#include <fstream>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "maple/errors.hpp"
#include "maple/kernels.hpp"

#if defined(__linux__)
#include <linux/perf_event.h>
#include <sys/ioctl.h>
#include <sys/syscall.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#endif

namespace maple {

namespace {

constexpr std::array<std::string_view, kNumCounterEvents> kEventNames{
    "cpu-cycles",         "instructions",    "cache-references", "cache-misses",
    "L1-dcache-loads",    "L1-dcache-load-misses", "LLC-load-misses", "LLC-loads",
    "LLC-store-misses",   "LLC-stores",
};

}  // namespace

const std::array<std::string_view, kNumCounterEvents>& counter_event_names() { return kEventNames; }

std::array<double, kDescriptorLength> HardwareDescriptor::flattened() const {
    std::array<double, kDescriptorLength> flat{};
    for (int i = 0; i < kNumWorkloads; ++i) {
        for (int j = 0; j < kNumCounterEvents; ++j) {
            flat[i * kNumCounterEvents + j] = counters[i][j];
        }
    }
    for (int i = 0; i < kNumWorkloads; ++i) {
        flat[kDescriptorCounterValues + i] = op_latency_ms[i];
    }
    return flat;
}

void save_descriptor(const HardwareDescriptor& d, const std::filesystem::path& path) {
    nlohmann::json j;
    j["device_id"] = d.device_id;
    j["events"] = kEventNames;
    nlohmann::json workloads = nlohmann::json::array();
    nlohmann::json counters = nlohmann::json::array();
    for (int i = 0; i < kNumWorkloads; ++i) {
        workloads.push_back(workload_name(operator_workloads()[i]));
        counters.push_back(d.counters[i]);
    }
    j["workloads"] = std::move(workloads);
    j["counters"] = std::move(counters);
    j["op_latency_ms"] = d.op_latency_ms;

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
}

HardwareDescriptor load_descriptor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid descriptor JSON: ") + e.what());
    }
    HardwareDescriptor d;
    try {
        d.device_id = j.at("device_id").get<std::string>();
        const auto& counters = j.at("counters");
        const auto& latencies = j.at("op_latency_ms");
        if (counters.size() != kNumWorkloads || latencies.size() != kNumWorkloads) {
            throw ValidationError("descriptor must have " + std::to_string(kNumWorkloads) +
                                  " workload rows");
        }
        for (int i = 0; i < kNumWorkloads; ++i) {
            if (counters[i].size() != kNumCounterEvents) {
                throw ValidationError("counter row " + std::to_string(i) + " must have " +
                                      std::to_string(kNumCounterEvents) + " entries");
            }
            for (int jj = 0; jj < kNumCounterEvents; ++jj) {
                d.counters[i][jj] = counters[i][jj].get<double>();
                if (d.counters[i][jj] < 0) {
                    throw ValidationError("counter values must be non-negative");
                }
            }
            d.op_latency_ms[i] = latencies[i].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid descriptor JSON: ") + e.what());
    }
    return d;
}

#if defined(__linux__)

namespace {

struct EventSpec {
    std::uint32_t type;
    std::uint64_t config;
};

constexpr std::uint64_t cache_config(std::uint64_t cache, std::uint64_t op, std::uint64_t result) {
    return cache | (op << 8) | (result << 16);
}

const std::array<EventSpec, kNumCounterEvents>& event_specs() {
    static const std::array<EventSpec, kNumCounterEvents> specs{{
        {PERF_TYPE_HARDWARE, PERF_COUNT_HW_CPU_CYCLES},
        {PERF_TYPE_HARDWARE, PERF_COUNT_HW_INSTRUCTIONS},
        {PERF_TYPE_HARDWARE, PERF_COUNT_HW_CACHE_REFERENCES},
        {PERF_TYPE_HARDWARE, PERF_COUNT_HW_CACHE_MISSES},
        {PERF_TYPE_HW_CACHE, cache_config(PERF_COUNT_HW_CACHE_L1D, PERF_COUNT_HW_CACHE_OP_READ,
                                          PERF_COUNT_HW_CACHE_RESULT_ACCESS)},
        {PERF_TYPE_HW_CACHE, cache_config(PERF_COUNT_HW_CACHE_L1D, PERF_COUNT_HW_CACHE_OP_READ,
                                          PERF_COUNT_HW_CACHE_RESULT_MISS)},
        {PERF_TYPE_HW_CACHE, cache_config(PERF_COUNT_HW_CACHE_LL, PERF_COUNT_HW_CACHE_OP_READ,
                                          PERF_COUNT_HW_CACHE_RESULT_MISS)},
        {PERF_TYPE_HW_CACHE, cache_config(PERF_COUNT_HW_CACHE_LL, PERF_COUNT_HW_CACHE_OP_READ,
                                          PERF_COUNT_HW_CACHE_RESULT_ACCESS)},
        {PERF_TYPE_HW_CACHE, cache_config(PERF_COUNT_HW_CACHE_LL, PERF_COUNT_HW_CACHE_OP_WRITE,
                                          PERF_COUNT_HW_CACHE_RESULT_MISS)},
        {PERF_TYPE_HW_CACHE, cache_config(PERF_COUNT_HW_CACHE_LL, PERF_COUNT_HW_CACHE_OP_WRITE,
                                          PERF_COUNT_HW_CACHE_RESULT_ACCESS)},
    }};
    return specs;
}

long perf_event_open(perf_event_attr* attr, pid_t pid, int cpu, int group_fd, unsigned long flags) {
    return syscall(SYS_perf_event_open, attr, pid, cpu, group_fd, flags);
}

// One opened group of events, read with PERF_FORMAT_GROUP.
class CounterGroup {
  public:
    explicit CounterGroup(std::span<const int> event_indices) {
        fds_.reserve(event_indices.size());
        for (int idx : event_indices) {
            const EventSpec& spec = event_specs()[idx];
            perf_event_attr attr{};
            attr.size = sizeof(attr);
            attr.type = spec.type;
            attr.config = spec.config;
            attr.disabled = fds_.empty() ? 1 : 0;
            attr.exclude_kernel = 1;
            attr.exclude_hv = 1;
            attr.read_format = PERF_FORMAT_GROUP;
            const int group_fd = fds_.empty() ? -1 : fds_.front();
            const long fd = perf_event_open(&attr, 0, -1, group_fd, 0);
            if (fd < 0) {
                const int err = errno;
                close_all();
                throw UnsupportedError("perf_event_open failed for " +
                                       std::string(kEventNames[idx]) + ": " + std::strerror(err));
            }
            fds_.push_back(static_cast<int>(fd));
        }
    }

    ~CounterGroup() { close_all(); }
    CounterGroup(const CounterGroup&) = delete;
    CounterGroup& operator=(const CounterGroup&) = delete;

    void reset_and_enable() {
        ioctl(fds_.front(), PERF_EVENT_IOC_RESET, PERF_IOC_FLAG_GROUP);
        ioctl(fds_.front(), PERF_EVENT_IOC_ENABLE, PERF_IOC_FLAG_GROUP);
    }

    void disable() { ioctl(fds_.front(), PERF_EVENT_IOC_DISABLE, PERF_IOC_FLAG_GROUP); }

    std::vector<std::uint64_t> read_values() {
        // layout: { u64 nr; u64 values[nr]; }
        std::vector<std::uint64_t> buf(1 + fds_.size());
        const ssize_t want = static_cast<ssize_t>(buf.size() * sizeof(std::uint64_t));
        const ssize_t got = read(fds_.front(), buf.data(), want);
        if (got != want) {
            throw MeasurementError("short read from perf group fd");
        }
        if (buf[0] != fds_.size()) {
            throw MeasurementError("perf group reported " + std::to_string(buf[0]) +
                                   " events, expected " + std::to_string(fds_.size()));
        }
        return {buf.begin() + 1, buf.end()};
    }

  private:
    void close_all() {
        for (int fd : fds_) close(fd);
        fds_.clear();
    }

    std::vector<int> fds_;
};

// Runs the workload loop under one counter group; returns raw event counts
// and the loop duration.
std::pair<std::vector<std::uint64_t>, double> measure_group(std::span<const int> event_indices,
                                                            const OperatorWorkload& w,
                                                            int iterations) {
    CounterGroup group(event_indices);
    group.reset_and_enable();
    const double duration_ms = run_workload_loop(w, iterations);
    group.disable();
    return {group.read_values(), duration_ms};
}

}  // namespace

bool counters_available(std::string* reason) {
    perf_event_attr attr{};
    attr.size = sizeof(attr);
    attr.type = PERF_TYPE_HARDWARE;
    attr.config = PERF_COUNT_HW_INSTRUCTIONS;
    attr.disabled = 1;
    attr.exclude_kernel = 1;
    attr.exclude_hv = 1;
    const long fd = perf_event_open(&attr, 0, -1, -1, 0);
    if (fd < 0) {
        if (reason) *reason = std::strerror(errno);
        return false;
    }
    close(static_cast<int>(fd));
    return true;
}

CounterReading measure_counters(const OperatorWorkload& w, int iterations) {
    if (iterations < 1) throw DomainError("iterations must be >= 1");

    std::array<int, kNumCounterEvents> all{};
    for (int i = 0; i < kNumCounterEvents; ++i) all[i] = i;

    std::vector<std::uint64_t> counts(kNumCounterEvents, 0);
    double duration_ms = 0;
    try {
        // preferred: one group so every event sees the identical run
        auto [values, dur] = measure_group(std::span<const int>(all), w, iterations);
        for (int i = 0; i < kNumCounterEvents; ++i) counts[i] = values[i];
        duration_ms = dur;
    } catch (const UnsupportedError&) {
        // not enough hardware counters for one group: two groups of five over
        // separate identical runs (avoids OS-level multiplexing scaling)
        auto [va, da] = measure_group(std::span<const int>(all).first(5), w, iterations);
        auto [vb, db] = measure_group(std::span<const int>(all).last(5), w, iterations);
        for (int i = 0; i < 5; ++i) counts[i] = va[i];
        for (int i = 0; i < 5; ++i) counts[5 + i] = vb[i];
        duration_ms = (da + db) / 2.0;
    }

    CounterReading reading;
    for (int i = 0; i < kNumCounterEvents; ++i) {
        reading.per_iteration[i] = static_cast<double>(counts[i]) / iterations;
    }
    reading.duration_ms = duration_ms / iterations;
    return reading;
}

#else  // !__linux__

bool counters_available(std::string* reason) {
    if (reason) *reason = "perf_event interface is Linux-only";
    return false;
}

CounterReading measure_counters(const OperatorWorkload&, int) {
    throw UnsupportedError("perf_event interface is Linux-only");
}

#endif

HardwareDescriptor build_descriptor(const std::string& device_id, int iterations) {
    HardwareDescriptor d;
    d.device_id = device_id;
    for (int i = 0; i < kNumWorkloads; ++i) {
        const CounterReading r = measure_counters(operator_workloads()[i], iterations);
        d.counters[i] = r.per_iteration;
        d.op_latency_ms[i] = r.duration_ms;
    }
    return d;
}

}  // namespace maple
