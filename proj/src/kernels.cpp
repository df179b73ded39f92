#include "maple/kernels.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "maple/errors.hpp"

namespace maple {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = a * 0x9e3779b97f4a7c15ull + b;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Seed tags keeping the stem/reduction/head weight streams apart from the
// per-operator streams.
constexpr std::uint64_t kStemSeedTag = 0x57454d1ull;
constexpr std::uint64_t kReductionSeedTag = 0x4ed0c7ull;
constexpr std::uint64_t kHeadSeedTag = 0x4ead00ull;
constexpr std::uint64_t kLoopInputSeedTag = 0x100b1ull;

std::vector<float> seeded_weights(std::size_t count, std::uint64_t seed, float scale) {
    std::vector<float> w(count);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(-scale, scale);
    for (auto& v : w) v = dist(rng);
    return w;
}

}  // namespace

Tensor conv2d(const Tensor& in, const std::vector<float>& weights, int c_out, int kernel) {
    const int pad = kernel / 2;
    Tensor out = Tensor::zeros(c_out, in.height, in.width);
    for (int oc = 0; oc < c_out; ++oc) {
        for (int ic = 0; ic < in.channels; ++ic) {
            const float* wbase =
                &weights[(static_cast<std::size_t>(oc) * in.channels + ic) * kernel * kernel];
            for (int y = 0; y < in.height; ++y) {
                for (int ky = 0; ky < kernel; ++ky) {
                    const int iy = y + ky - pad;
                    if (iy < 0 || iy >= in.height) continue;
                    for (int kx = 0; kx < kernel; ++kx) {
                        const float wv = wbase[ky * kernel + kx];
                        const int x0 = kx - pad;
                        float* orow = &out.at(oc, y, 0);
                        const float* irow = &in.at(ic, iy, 0);
                        const int lo = std::max(0, -x0);
                        const int hi = std::min(in.width, in.width - x0);
                        for (int x = lo; x < hi; ++x) {
                            orow[x] += wv * irow[x + x0];
                        }
                    }
                }
            }
        }
    }
    return out;
}

namespace {

Tensor avgpool3x3(const Tensor& in) {
    Tensor out = Tensor::zeros(in.channels, in.height, in.width);
    for (int c = 0; c < in.channels; ++c) {
        for (int y = 0; y < in.height; ++y) {
            for (int x = 0; x < in.width; ++x) {
                float sum = 0;
                int count = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    const int iy = y + dy;
                    if (iy < 0 || iy >= in.height) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int ix = x + dx;
                        if (ix < 0 || ix >= in.width) continue;
                        sum += in.at(c, iy, ix);
                        ++count;
                    }
                }
                out.at(c, y, x) = sum / static_cast<float>(count);
            }
        }
    }
    return out;
}

Tensor avgpool2x2_stride2(const Tensor& in) {
    Tensor out = Tensor::zeros(in.channels, in.height / 2, in.width / 2);
    for (int c = 0; c < in.channels; ++c) {
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                out.at(c, y, x) = 0.25f * (in.at(c, 2 * y, 2 * x) + in.at(c, 2 * y, 2 * x + 1) +
                                           in.at(c, 2 * y + 1, 2 * x) + in.at(c, 2 * y + 1, 2 * x + 1));
            }
        }
    }
    return out;
}

std::vector<float> op_conv_weights(OpKind kind, int width, int kernel) {
    const std::size_t count = static_cast<std::size_t>(width) * width * kernel * kernel;
    const float scale = 1.0f / std::sqrt(static_cast<float>(width * kernel * kernel));
    return seeded_weights(count, mix_seed(static_cast<std::uint64_t>(kind), width), scale);
}

Tensor apply_op(const OperatorWorkload& w, const Tensor& input) {
    switch (w.kind) {
        case OpKind::None:
            return Tensor::zeros(input.channels, input.height, input.width);
        case OpKind::Skip:
            return input;
        case OpKind::Conv1x1:
            return conv2d(input, op_conv_weights(w.kind, w.width, 1), w.width, 1);
        case OpKind::Conv3x3:
            return conv2d(input, op_conv_weights(w.kind, w.width, 3), w.width, 3);
        case OpKind::AvgPool3x3:
            return avgpool3x3(input);
    }
    throw DomainError("invalid operator kind");
}

void accumulate(Tensor& into, const Tensor& t) {
    for (std::size_t i = 0; i < into.data.size(); ++i) into.data[i] += t.data[i];
}

}  // namespace

Tensor run_cell(const std::array<OpKind, kNumEdges>& ops, int width, const Tensor& input) {
    std::array<Tensor, 4> nodes;
    nodes[0] = input;
    for (int j = 1; j < 4; ++j) {
        nodes[j] = Tensor::zeros(input.channels, input.height, input.width);
        for (int e = 0; e < kNumEdges; ++e) {
            if (kEdgeHead[e] != j) continue;
            accumulate(nodes[j], apply_op({ops[e], width}, nodes[kEdgeTail[e]]));
        }
    }
    return nodes[3];
}

namespace {

Tensor forward_network(ArchId arch, const NetworkSkeleton& skel, const Tensor& input) {
    const auto ops = edge_ops(arch);

    // stem conv3x3 to the first stage width
    const std::size_t stem_count =
        static_cast<std::size_t>(skel.stage_widths[0]) * skel.input_channels * 9;
    const float stem_scale = 1.0f / std::sqrt(static_cast<float>(skel.input_channels * 9));
    Tensor t = conv2d(input, seeded_weights(stem_count, mix_seed(kStemSeedTag, 0), stem_scale),
                      skel.stage_widths[0], 3);

    for (std::size_t s = 0; s < skel.stage_widths.size(); ++s) {
        if (s > 0) {
            t = avgpool2x2_stride2(t);
            const int c_in = skel.stage_widths[s - 1];
            const int c_out = skel.stage_widths[s];
            const float scale = 1.0f / std::sqrt(static_cast<float>(c_in));
            t = conv2d(t,
                       seeded_weights(static_cast<std::size_t>(c_out) * c_in,
                                      mix_seed(kReductionSeedTag, s), scale),
                       c_out, 1);
        }
        for (int k = 0; k < skel.cells_per_stage; ++k) {
            t = run_cell(ops, skel.stage_widths[s], t);
        }
    }

    // head: global average pool + linear map
    std::vector<float> pooled(t.channels, 0.0f);
    for (int c = 0; c < t.channels; ++c) {
        float sum = 0;
        for (int y = 0; y < t.height; ++y)
            for (int x = 0; x < t.width; ++x) sum += t.at(c, y, x);
        pooled[c] = sum / static_cast<float>(t.height * t.width);
    }
    const float head_scale = 1.0f / std::sqrt(static_cast<float>(t.channels));
    const auto head_w = seeded_weights(static_cast<std::size_t>(skel.num_classes) * t.channels,
                                       mix_seed(kHeadSeedTag, 0), head_scale);
    Tensor logits = Tensor::zeros(skel.num_classes, 1, 1);
    for (int o = 0; o < skel.num_classes; ++o) {
        float sum = 0;
        for (int c = 0; c < t.channels; ++c) sum += head_w[static_cast<std::size_t>(o) * t.channels + c] * pooled[c];
        logits.at(o, 0, 0) = sum;
    }
    return logits;
}

}  // namespace

Tensor Tensor::zeros(int c, int h, int w) {
    Tensor t;
    t.channels = c;
    t.height = h;
    t.width = w;
    t.data.assign(static_cast<std::size_t>(c) * h * w, 0.0f);
    return t;
}

Tensor Tensor::seeded(int c, int h, int w, std::uint64_t seed) {
    Tensor t = zeros(c, h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (auto& v : t.data) v = dist(rng);
    return t;
}

OperatorResult run_operator(const OperatorWorkload& w, const Tensor& input) {
    if (input.channels != w.width) {
        throw ShapeError("input has " + std::to_string(input.channels) + " channels, workload expects " +
                         std::to_string(w.width));
    }
    if (w.kind == OpKind::Conv3x3 || w.kind == OpKind::AvgPool3x3) {
        if (input.height < 3 || input.width < 3) {
            throw ShapeError("3x3 kernels need a spatial size of at least 3x3");
        }
    }
    const auto start = Clock::now();
    Tensor out = apply_op(w, input);
    const double elapsed = ms_since(start);
    return OperatorResult{std::move(out), elapsed};
}

LatencyMeasurement run_network(ArchId arch, const NetworkSkeleton& skel, int repeats) {
    if (repeats < 1) {
        throw DomainError("repeats must be >= 1");
    }
    const Tensor input =
        Tensor::seeded(skel.input_channels, skel.input_height, skel.input_width, 0x5eedu);

    volatile float sink = 0;
    for (int i = 0; i < 3; ++i) {  // warm-up
        sink = sink + forward_network(arch, skel, input).data[0];
    }

    LatencyMeasurement m;
    m.raw_ms.reserve(repeats);
    for (int i = 0; i < repeats; ++i) {
        const auto start = Clock::now();
        Tensor out = forward_network(arch, skel, input);
        m.raw_ms.push_back(ms_since(start));
        sink = sink + out.data[0];
    }
    (void)sink;
    m.runs = repeats;
    double sum = 0;
    for (double v : m.raw_ms) sum += v;
    m.mean_ms = sum / repeats;
    return m;
}

double run_workload_loop(const OperatorWorkload& w, int iterations) {
    if (iterations < 1) {
        throw DomainError("iterations must be >= 1");
    }
    const Tensor input = Tensor::seeded(w.width, 32, 32, mix_seed(kLoopInputSeedTag, w.width));
    volatile float sink = 0;
    const auto start = Clock::now();
    for (int i = 0; i < iterations; ++i) {
        sink = sink + apply_op(w, input).data[0];
    }
    const double elapsed = ms_since(start);
    (void)sink;
    return elapsed;
}

}  // namespace maple
