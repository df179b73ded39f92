#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "maple/errors.hpp"
#include "maple/kernels.hpp"

using namespace maple;

TEST_CASE("skip returns the input unchanged") {
    const Tensor in = Tensor::seeded(32, 8, 8, 42);
    const auto [out, ms] = run_operator({OpKind::Skip, 32}, in);
    CHECK(out == in);
}

TEST_CASE("none returns zeros of the input shape") {
    const Tensor in = Tensor::seeded(16, 8, 8, 42);
    const auto [out, ms] = run_operator({OpKind::None, 16}, in);
    CHECK(out.channels == 16);
    CHECK(out.height == 8);
    CHECK(out.width == 8);
    for (float v : out.data) CHECK(v == 0.0f);
}

TEST_CASE("avgpool of a constant tensor is the same constant") {
    Tensor in = Tensor::zeros(16, 6, 6);
    for (auto& v : in.data) v = 0.5f;
    const auto [out, ms] = run_operator({OpKind::AvgPool3x3, 16}, in);
    for (float v : out.data) CHECK(v == 0.5f);  // valid-element averaging keeps edges exact
}

TEST_CASE("conv1x1 with identity channel map reproduces the input") {
    const int c = 16;
    std::vector<float> identity(static_cast<std::size_t>(c) * c, 0.0f);
    for (int i = 0; i < c; ++i) identity[static_cast<std::size_t>(i) * c + i] = 1.0f;
    const Tensor in = Tensor::seeded(c, 8, 8, 3);
    const Tensor out = conv2d(in, identity, c, 1);
    CHECK(out == in);
}

TEST_CASE("operator outputs are bit-identical across calls") {
    const Tensor in = Tensor::seeded(32, 10, 10, 9);
    for (OpKind kind : {OpKind::Conv1x1, OpKind::Conv3x3, OpKind::AvgPool3x3}) {
        const auto a = run_operator({kind, 32}, in);
        const auto b = run_operator({kind, 32}, in);
        CHECK(a.output == b.output);
    }
}

TEST_CASE("all operators preserve the tensor shape") {
    const Tensor in = Tensor::seeded(64, 8, 8, 5);
    for (const auto& w : operator_workloads()) {
        if (w.width != 64) continue;
        const auto [out, ms] = run_operator(w, in);
        CHECK(out.channels == in.channels);
        CHECK(out.height == in.height);
        CHECK(out.width == in.width);
    }
}

TEST_CASE("channel mismatch raises a shape error") {
    const Tensor in = Tensor::seeded(16, 8, 8, 1);
    CHECK_THROWS_AS(run_operator({OpKind::Conv3x3, 32}, in), ShapeError);
}

TEST_CASE("tiny spatial size rejected for 3x3 kernels") {
    const Tensor in = Tensor::seeded(16, 2, 2, 1);
    CHECK_THROWS_AS(run_operator({OpKind::Conv3x3, 16}, in), ShapeError);
    CHECK_THROWS_AS(run_operator({OpKind::AvgPool3x3, 16}, in), ShapeError);
}

TEST_CASE("cell wiring sums edge outputs per node") {
    const Tensor in = Tensor::seeded(16, 6, 6, 21);

    std::array<OpKind, kNumEdges> all_skip{};
    all_skip.fill(OpKind::Skip);
    const Tensor out = run_cell(all_skip, 16, in);
    // n1 = n0; n2 = n0 + n1 = 2 n0; n3 = n0 + n1 + n2 = 4 n0
    REQUIRE(out.data.size() == in.data.size());
    for (std::size_t i = 0; i < in.data.size(); ++i) {
        CHECK(out.data[i] == 4.0f * in.data[i]);
    }

    std::array<OpKind, kNumEdges> all_none{};
    all_none.fill(OpKind::None);
    const Tensor zeros = run_cell(all_none, 16, in);
    for (float v : zeros.data) CHECK(v == 0.0f);
}

TEST_CASE("run_network returns the requested number of runs and their mean") {
    const LatencyMeasurement m = run_network(0, NetworkSkeleton{}, 5);
    REQUIRE(m.runs == 5);
    REQUIRE(m.raw_ms.size() == 5);
    double sum = 0;
    for (double v : m.raw_ms) {
        CHECK(v > 0);
        sum += v;
    }
    CHECK(m.mean_ms == doctest::Approx(sum / 5).epsilon(1e-12));
    CHECK(m.mean_ms > 0);
    CHECK_THROWS_AS(run_network(0, NetworkSkeleton{}, 0), DomainError);
}

TEST_CASE("a deeper stack takes longer on the all-conv3x3 architecture") {
    std::array<OpKind, kNumEdges> ops{};
    ops.fill(OpKind::Conv3x3);
    const ArchId arch = arch_from_edge_ops(ops);
    NetworkSkeleton k1;
    NetworkSkeleton k2;
    k2.cells_per_stage = 2;
    const double t1 = run_network(arch, k1, 5).mean_ms;
    const double t2 = run_network(arch, k2, 5).mean_ms;
    CHECK(t2 > t1);
}

TEST_CASE("workload loop scales with iterations and rejects zero") {
    CHECK_THROWS_AS(run_workload_loop({OpKind::Conv1x1, 16}, 0), DomainError);

    const OperatorWorkload w{OpKind::Conv3x3, 32};
    run_workload_loop(w, 5);  // warm the caches before timing
    // best-of-three keeps scheduler spikes out of the ratio
    double once = run_workload_loop(w, 40), twice = run_workload_loop(w, 80);
    for (int r = 0; r < 2; ++r) {
        once = std::min(once, run_workload_loop(w, 40));
        twice = std::min(twice, run_workload_loop(w, 80));
    }
    CHECK(twice > once);
    CHECK(std::abs(twice - 2.0 * once) / (2.0 * once) < 0.5);
}

TEST_CASE("an empty workload is cheaper than a conv3x3 workload") {
    const double none_ms = run_workload_loop({OpKind::None, 64}, 20);
    const double conv_ms = run_workload_loop({OpKind::Conv3x3, 64}, 20);
    CHECK(none_ms < conv_ms);
}
