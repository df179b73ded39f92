#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "maple/baselines.hpp"
#include "maple/errors.hpp"

using namespace maple;

namespace {

SimDevice noiseless_device(std::uint64_t seed) {
    SimDeviceConfig cfg = default_config_for_seed(seed);
    cfg.noise_cv = 0;
    return make_device(seed, cfg);
}

}  // namespace

TEST_CASE("simulated LUT mirrors the device cost table exactly") {
    const SimDevice d = make_device(2);
    const LatencyLUT lut = build_lut(d);
    CHECK(lut.device_id == d.device_id);
    CHECK(lut.entries_ms == d.op_cost_ms);
    CHECK(lut.fixed_overhead_ms == d.base_overhead_ms);
    for (double v : lut.entries_ms) CHECK(v >= 0);
}

TEST_CASE("lut_predict on the all-None architecture is the fixed overhead") {
    const LatencyLUT lut = build_lut(make_device(3));
    CHECK(lut_predict(lut, 0, NetworkSkeleton{}) == lut.fixed_overhead_ms);
    CHECK(lut_predict(lut, 0, NetworkSkeleton{}, false) == 0.0);
}

TEST_CASE("a unit LUT sums to edge count times stages") {
    LatencyLUT lut;
    lut.device_id = "unit";
    lut.entries_ms.fill(1.0);
    lut.fixed_overhead_ms = 0;
    // six skip edges (non-None), one cell per stage, three stages
    const ArchId all_skip = 3906;
    CHECK(lut_predict(lut, all_skip, NetworkSkeleton{}) == 18.0);
}

TEST_CASE("lut_predict is exactly linear under power-of-two scaling") {
    const LatencyLUT lut = build_lut(make_device(5));
    LatencyLUT doubled = lut;
    for (auto& v : doubled.entries_ms) v *= 2.0;
    doubled.fixed_overhead_ms *= 2.0;
    std::mt19937 rng(4);
    for (int i = 0; i < 100; ++i) {
        const ArchId a = rng() % kNumArchitectures;
        CHECK(lut_predict(doubled, a, NetworkSkeleton{}) ==
              2.0 * lut_predict(lut, a, NetworkSkeleton{}));
    }
}

TEST_CASE("with no interaction the LUT matches the simulator exactly") {
    SimDevice d = noiseless_device(4);
    d.interaction_coeff = 0.0;
    const LatencyLUT lut = build_lut(d);
    std::mt19937 rng(8);
    for (int i = 0; i < 200; ++i) {
        const ArchId a = rng() % kNumArchitectures;
        CHECK(lut_predict(lut, a, NetworkSkeleton{}) == sim_latency(d, a, NetworkSkeleton{}));
    }
}

TEST_CASE("the interaction term opens a gap on adjacent-conv architectures") {
    const SimDevice d = make_device(6);  // interaction_coeff in [0.05, 0.25]
    const LatencyLUT lut = build_lut(d);
    std::array<OpKind, kNumEdges> ops{};
    ops.fill(OpKind::None);
    ops[0] = OpKind::Conv3x3;
    ops[3] = OpKind::Conv3x3;  // adjacent pair 0->1->2
    const ArchId a = arch_from_edge_ops(ops);
    REQUIRE(adjacent_conv_pairs(a) == 1);
    const double predicted = lut_predict(lut, a, NetworkSkeleton{});
    const double truth = sim_latency(d, a, NetworkSkeleton{});
    CHECK(predicted != truth);
    CHECK(predicted < truth);  // the LUT misses the interaction surcharge
}

TEST_CASE("FLOPs fit recovers an exact linear relationship") {
    const NetworkSkeleton skel;
    std::vector<LatencySample> samples;
    std::mt19937 rng(5);
    const double c = 3.5e-9;
    for (int i = 0; i < 50; ++i) {
        const ArchId a = rng() % kNumArchitectures;
        samples.push_back({"dev", a, c * static_cast<double>(flops(a, skel)), 1.0});
    }
    const double scale = fit_flops_scale(samples, skel);
    CHECK(scale == doctest::Approx(c).epsilon(1e-12));
    CHECK(flops_predict(scale, samples[0].arch, skel) ==
          doctest::Approx(samples[0].latency_ms).epsilon(1e-12));
}

TEST_CASE("FLOPs prediction grows with the stack depth") {
    NetworkSkeleton k1, k2;
    k2.cells_per_stage = 2;
    const ArchId a = 11718;  // all conv3x3
    CHECK(flops_predict(1e-9, a, k2) > flops_predict(1e-9, a, k1));
    // all-None keeps only stem/reduction/head FLOPs
    CHECK(flops_predict(1e-9, 0, k1) == doctest::Approx(1e-9 * flops(0, k1)));
}

TEST_CASE("layerwise prediction equals the LUT on a noiseless device") {
    const SimDevice d = noiseless_device(7);
    const LatencyLUT lut = build_lut(d);
    std::mt19937 rng(9);
    for (int i = 0; i < 50; ++i) {
        const ArchId a = rng() % kNumArchitectures;
        CHECK(layerwise_predict(d, a, NetworkSkeleton{}) == lut_predict(lut, a, NetworkSkeleton{}));
    }
}

TEST_CASE("layerwise prediction differs once measurement noise exists") {
    const SimDevice d = make_device(7);  // noise_cv 0.02
    const LatencyLUT lut = build_lut(d);
    const ArchId a = 11718;
    CHECK(layerwise_predict(d, a, NetworkSkeleton{}) != lut_predict(lut, a, NetworkSkeleton{}));
    // deterministic for a fixed seed
    CHECK(layerwise_predict(d, a, NetworkSkeleton{}, 3) == layerwise_predict(d, a, NetworkSkeleton{}, 3));
}

TEST_CASE("LUT file round trip") {
    const LatencyLUT lut = build_lut(make_device(8));
    const auto path = std::filesystem::temp_directory_path() / "maple_test_lut.json";
    save_lut(lut, path);
    const LatencyLUT back = load_lut(path);
    CHECK(back.device_id == lut.device_id);
    CHECK(back.entries_ms == lut.entries_ms);
    CHECK(back.fixed_overhead_ms == lut.fixed_overhead_ms);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_lut(path), IoError);
}

TEST_CASE("zero-FLOP fit is rejected") {
    std::vector<LatencySample> samples;
    CHECK_THROWS_AS(fit_flops_scale(samples, NetworkSkeleton{}), DomainError);
}
