#include "maple/baselines.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "maple/errors.hpp"
#include "maple/kernels.hpp"

namespace maple {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double sum_lut_entries(const std::array<double, kNumWorkloads>& entries, ArchId arch,
                       const NetworkSkeleton& skel) {
    const auto ops = edge_ops(arch);
    double sum = 0;
    for (int width : skel.stage_widths) {
        for (int e = 0; e < kNumEdges; ++e) {
            sum += entries[workload_index(ops[e], width)];
        }
    }
    return sum * skel.cells_per_stage;
}

}  // namespace

LatencyLUT build_lut(const SimDevice& device) {
    LatencyLUT lut;
    lut.device_id = device.device_id;
    lut.entries_ms = device.op_cost_ms;
    lut.fixed_overhead_ms = sim_latency(device, 0, NetworkSkeleton{});  // all-None: pure overhead
    return lut;
}

LatencyLUT build_lut_host(const std::string& device_id, const NetworkSkeleton& skel, int repeats) {
    LatencyLUT lut;
    lut.device_id = device_id;
    for (int i = 0; i < kNumWorkloads; ++i) {
        const OperatorWorkload& w = operator_workloads()[i];
        const Tensor input = Tensor::seeded(w.width, 32, 32, 0xba5eu + w.width);
        double sum = 0;
        for (int r = 0; r < repeats; ++r) {
            sum += run_operator(w, input).duration_ms;
        }
        lut.entries_ms[i] = sum / repeats;
    }
    lut.fixed_overhead_ms = run_network(0, skel, repeats).mean_ms;
    return lut;
}

double lut_predict(const LatencyLUT& lut, ArchId arch, const NetworkSkeleton& skel,
                   bool include_overhead) {
    return (include_overhead ? lut.fixed_overhead_ms : 0.0) +
           sum_lut_entries(lut.entries_ms, arch, skel);
}

double fit_flops_scale(std::span<const LatencySample> samples, const NetworkSkeleton& skel) {
    double num = 0, den = 0;
    for (const auto& s : samples) {
        const double f = static_cast<double>(flops(s.arch, skel));
        num += f * s.latency_ms;
        den += f * f;
    }
    if (den == 0) throw DomainError("cannot fit a FLOPs scale on zero-FLOP samples");
    return num / den;
}

double flops_predict(double scale, ArchId arch, const NetworkSkeleton& skel) {
    return scale * static_cast<double>(flops(arch, skel));
}

double layerwise_predict(const SimDevice& device, ArchId arch, const NetworkSkeleton& skel,
                         std::uint64_t seed, int repeats) {
    if (device.noise_cv == 0) {
        // measurement is exact, so this collapses to the stored-table sum
        return lut_predict(build_lut(device), arch, skel);
    }
    // fresh per-operator measurements: `repeats` noisy draws of each op cost
    std::array<double, kNumWorkloads> measured{};
    const double sigma = std::sqrt(std::log1p(device.noise_cv * device.noise_cv));
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(device.seed ^ 0x1a7e2ull)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < kNumWorkloads; ++i) {
        double sum = 0;
        for (int r = 0; r < repeats; ++r) {
            sum += device.op_cost_ms[i] * std::exp(sigma * gauss(rng) - 0.5 * sigma * sigma);
        }
        measured[i] = sum / repeats;
    }
    double overhead = 0;
    for (int r = 0; r < repeats; ++r) {
        overhead += sim_latency(device, 0, skel) * std::exp(sigma * gauss(rng) - 0.5 * sigma * sigma);
    }
    overhead /= repeats;
    return overhead + sum_lut_entries(measured, arch, skel);
}

double layerwise_predict_host(const std::string& device_id, ArchId arch,
                              const NetworkSkeleton& skel, int repeats) {
    const LatencyLUT lut = build_lut_host(device_id, skel, repeats);
    return lut_predict(lut, arch, skel);
}

void save_lut(const LatencyLUT& lut, const std::filesystem::path& path) {
    nlohmann::json j;
    j["device_id"] = lut.device_id;
    j["fixed_overhead_ms"] = lut.fixed_overhead_ms;
    nlohmann::json entries;
    for (int i = 0; i < kNumWorkloads; ++i) {
        entries[workload_name(operator_workloads()[i])] = lut.entries_ms[i];
    }
    j["entries"] = std::move(entries);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
}

LatencyLUT load_lut(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid LUT JSON: ") + e.what());
    }
    LatencyLUT lut;
    try {
        lut.device_id = j.at("device_id").get<std::string>();
        lut.fixed_overhead_ms = j.at("fixed_overhead_ms").get<double>();
        const auto& entries = j.at("entries");
        if (entries.size() != kNumWorkloads) {
            throw ValidationError("LUT must have " + std::to_string(kNumWorkloads) + " entries");
        }
        for (int i = 0; i < kNumWorkloads; ++i) {
            lut.entries_ms[i] = entries.at(workload_name(operator_workloads()[i])).get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid LUT JSON: ") + e.what());
    }
    return lut;
}

}  // namespace maple
