#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "maple/dataset.hpp"
#include "maple/devicesim.hpp"
#include "maple/predictor.hpp"
#include "maple/search_space.hpp"

namespace maple {

inline constexpr std::array<double, 3> kErrorBounds{0.01, 0.05, 0.10};

// Fraction of samples with |pred - truth| / truth <= bound.
double error_bound_accuracy(std::span<const double> preds, std::span<const double> truths,
                            double bound);

struct ErrorBoundReport {
    double acc_1pct = 0;
    double acc_5pct = 0;
    double acc_10pct = 0;
    int n = 0;
};

ErrorBoundReport error_bound_report(std::span<const double> preds, std::span<const double> truths);

struct LoocvRow {
    std::string held_out_device;  // "mean" for the averaged row
    std::string method;           // maple | lut | flops | layerwise
    int k_adapt = 0;
    ErrorBoundReport acc;
    std::vector<std::string> train_devices;
    std::string error;  // non-empty when the method failed on this row
};

struct LoocvReport {
    std::vector<LoocvRow> rows;
};

struct LoocvOptions {
    int n_train = 900;
    std::vector<int> ks{0, 3, 10};
    std::vector<std::string> methods{"maple", "lut", "flops", "layerwise"};
    std::uint64_t seed = 0;
    NetworkSkeleton skeleton;
    ModelConfig model;
    // Architectures each trained model is scored on; 0 means the whole space.
    int eval_limit = 0;
};

// Rotates every pool device through the held-out slot: trains on the other
// devices' samples plus k adaptation samples from the held-out device, scores
// on the full architecture space against noiseless ground truth, and appends
// one mean row per (method, k).
LoocvReport loocv(const std::vector<SimDevice>& pool, const LoocvOptions& opts);

std::vector<std::vector<double>> euclidean_distance_matrix(
    const std::vector<std::vector<double>>& vectors);

// Distances between flattened descriptors, on the log1p+z-scored feature
// representation the model consumes (or raw values when normalized=false).
std::vector<std::vector<double>> descriptor_distance_matrix(
    const std::vector<HardwareDescriptor>& descriptors, bool normalized = true);

struct ParetoPoint {
    ArchId arch = 0;
    double latency_ms = 0;
    double accuracy = 0;
};

// Non-dominated points (lower latency, higher accuracy), latency-ascending.
// Ties on both coordinates are all kept.
std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points);

// |intersection of architecture ids| / |true front|.
double pareto_agreement(const std::vector<ParetoPoint>& predicted_front,
                        const std::vector<ParetoPoint>& true_front);

void emit_report(const LoocvReport& report, const std::string& format,
                 const std::filesystem::path& path);
LoocvReport load_report_json(const std::filesystem::path& path);

}  // namespace maple
