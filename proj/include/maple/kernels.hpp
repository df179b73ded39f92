#pragma once

#include <cstdint>
#include <vector>

#include "maple/search_space.hpp"

namespace maple {

// Reference single-threaded operator implementations. Plain direct loops on
// dense CHW tensors; these are the measured workloads, so they stay naive and
// auditable. Values are deterministic, timings of course are not.

struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    static Tensor zeros(int c, int h, int w);
    // Deterministic pseudo-random fill in [-1, 1).
    static Tensor seeded(int c, int h, int w, std::uint64_t seed);

    std::size_t size() const { return data.size(); }
    const float& at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    bool operator==(const Tensor&) const = default;
};

struct LatencyMeasurement {
    double mean_ms = 0;
    int runs = 0;
    std::vector<double> raw_ms;
};

struct OperatorResult {
    Tensor output;
    double duration_ms = 0;
};

// Same-spatial-size direct convolution with a square kernel and padding
// kernel/2; weights laid out [c_out][c_in][ky][kx].
Tensor conv2d(const Tensor& input, const std::vector<float>& weights, int c_out, int kernel);

// One cell: node j's input is the elementwise sum of all edge outputs into j;
// the cell output is node 3's tensor.
Tensor run_cell(const std::array<OpKind, kNumEdges>& ops, int width, const Tensor& input);

// Applies one search-space operator. Conv weights are fixed pseudo-random,
// seeded by (kind, width); avgpool averages valid (in-bounds) elements only.
OperatorResult run_operator(const OperatorWorkload& w, const Tensor& input);

// Full forward pass latency of the cell repeated through the skeleton:
// 3 warm-up runs, then `repeats` timed runs on a fixed seeded input.
LatencyMeasurement run_network(ArchId arch, const NetworkSkeleton& skel, int repeats = 50);

// Applies the operator `iterations` times to a fixed seeded 32x32 tensor of
// matching width; total wall-clock ms. This is the workload that runs under
// counter measurement.
double run_workload_loop(const OperatorWorkload& w, int iterations = 100);

}  // namespace maple
