#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "maple/errors.hpp"
#include "maple/eval.hpp"

using namespace maple;

namespace {

// O(n^2) dominance scan, the oracle pareto_front is checked against.
std::vector<ParetoPoint> brute_force_front(const std::vector<ParetoPoint>& points) {
    std::vector<ParetoPoint> front;
    for (const auto& p : points) {
        bool dominated = false;
        for (const auto& q : points) {
            const bool leq = q.latency_ms <= p.latency_ms && q.accuracy >= p.accuracy;
            const bool strict = q.latency_ms < p.latency_ms || q.accuracy > p.accuracy;
            if (leq && strict) {
                dominated = true;
                break;
            }
        }
        if (!dominated) front.push_back(p);
    }
    std::sort(front.begin(), front.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        if (a.latency_ms != b.latency_ms) return a.latency_ms < b.latency_ms;
        if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
        return a.arch < b.arch;
    });
    return front;
}

bool same_front(const std::vector<ParetoPoint>& a, const std::vector<ParetoPoint>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].arch != b[i].arch || a[i].latency_ms != b[i].latency_ms ||
            a[i].accuracy != b[i].accuracy) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("error-bound accuracy, elementary cases") {
    const std::vector<double> t{100.0, 200.0};
    CHECK(error_bound_accuracy(t, t, 0.01) == 1.0);
    CHECK(error_bound_accuracy(std::vector<double>{100.0}, std::vector<double>{105.0}, 0.05) == 1.0);
    CHECK(error_bound_accuracy(std::vector<double>{100.0, 100.0}, std::vector<double>{105.0, 200.0},
                               0.10) == 0.5);
}

TEST_CASE("error-bound accuracy rejects bad input") {
    const std::vector<double> a{1.0, 2.0};
    const std::vector<double> b{1.0};
    CHECK_THROWS_AS(error_bound_accuracy(a, b, 0.1), DomainError);
    CHECK_THROWS_AS(error_bound_accuracy({}, {}, 0.1), DomainError);
    const std::vector<double> neg{-1.0, 2.0};
    CHECK_THROWS_AS(error_bound_accuracy(a, neg, 0.1), DomainError);
}

TEST_CASE("accuracy matches a brute-force recount and bounds nest") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> truth_dist(0.1, 100.0);
    std::normal_distribution<double> noise(0.0, 0.2);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 60);
        std::vector<double> truths(n), preds(n);
        for (int i = 0; i < n; ++i) {
            truths[i] = truth_dist(rng);
            preds[i] = truths[i] * (1.0 + noise(rng));
        }
        const ErrorBoundReport r = error_bound_report(preds, truths);
        for (double bound : kErrorBounds) {
            int within = 0;
            for (int i = 0; i < n; ++i) {
                if (std::abs(preds[i] - truths[i]) / truths[i] <= bound) ++within;
            }
            CHECK(error_bound_accuracy(preds, truths, bound) ==
                  static_cast<double>(within) / n);
        }
        CHECK(r.acc_1pct <= r.acc_5pct);
        CHECK(r.acc_5pct <= r.acc_10pct);
        CHECK(r.n == n);
    }
}

TEST_CASE("pareto front, elementary cases") {
    CHECK(pareto_front({}).empty());

    const std::vector<ParetoPoint> one{{7, 3.0, 0.5}};
    const auto single = pareto_front(one);
    REQUIRE(single.size() == 1);
    CHECK(single[0].arch == 7);

    const std::vector<ParetoPoint> three{{1, 10.0, 0.90}, {2, 5.0, 0.80}, {3, 7.0, 0.95}};
    const auto front = pareto_front(three);
    REQUIRE(front.size() == 2);
    CHECK(front[0].arch == 2);  // (5ms, 0.80)
    CHECK(front[1].arch == 3);  // (7ms, 0.95)
}

TEST_CASE("dominated-by-equal points and exact ties") {
    // identical coordinates are all kept
    const std::vector<ParetoPoint> ties{{1, 2.0, 0.5}, {2, 2.0, 0.5}, {3, 4.0, 0.4}};
    const auto front = pareto_front(ties);
    REQUIRE(front.size() == 2);
    CHECK(front[0].arch == 1);
    CHECK(front[1].arch == 2);
}

TEST_CASE("pareto front equals the brute-force scan on random sets") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = static_cast<int>(rng() % 100) + 1;
        std::vector<ParetoPoint> points;
        points.reserve(n);
        for (int i = 0; i < n; ++i) {
            // small grids force plenty of exact ties
            const double lat = static_cast<double>(rng() % 16) * 0.5 + 1.0;
            const double acc = static_cast<double>(rng() % 8) / 8.0;
            points.push_back({static_cast<ArchId>(i), lat, acc});
        }
        CHECK(same_front(pareto_front(points), brute_force_front(points)));
    }
}

TEST_CASE("pareto agreement") {
    const std::vector<ParetoPoint> a{{1, 1.0, 0.5}, {2, 2.0, 0.7}};
    const std::vector<ParetoPoint> b{{3, 1.0, 0.5}, {4, 2.0, 0.7}};
    CHECK(pareto_agreement(a, a) == 1.0);
    CHECK(pareto_agreement(a, b) == 0.0);
    CHECK_THROWS_AS(pareto_agreement(a, {}), DomainError);

    // a perfect predictor reproduces the front exactly
    std::mt19937_64 rng(5);
    std::vector<ParetoPoint> points;
    for (int i = 0; i < 200; ++i) {
        points.push_back({static_cast<ArchId>(i), 1.0 + (rng() % 1000) / 100.0,
                          (rng() % 1000) / 1000.0});
    }
    CHECK(pareto_agreement(pareto_front(points), pareto_front(points)) == 1.0);
}

TEST_CASE("euclidean distances, elementary cases") {
    const auto m = euclidean_distance_matrix({{0.0, 0.0}, {3.0, 4.0}});
    CHECK(m[0][1] == 5.0);
    CHECK(m[1][0] == 5.0);
    CHECK(m[0][0] == 0.0);
    CHECK(m[1][1] == 0.0);
    CHECK_THROWS_AS(euclidean_distance_matrix({{1.0}, {1.0, 2.0}}), DomainError);
}

TEST_CASE("descriptor distances: symmetric, zero diagonal, positive off-diagonal") {
    std::vector<HardwareDescriptor> descs;
    for (std::uint64_t s : {1, 2, 3, 4}) descs.push_back(sim_descriptor(make_device(s)));
    for (bool normalized : {true, false}) {
        const auto m = descriptor_distance_matrix(descs, normalized);
        for (std::size_t i = 0; i < descs.size(); ++i) {
            CHECK(m[i][i] == 0.0);
            for (std::size_t j = 0; j < descs.size(); ++j) {
                CHECK(m[i][j] == m[j][i]);
                if (i != j) CHECK(m[i][j] > 0.0);
            }
        }
    }
    // identical descriptors collapse to distance zero
    const auto same = descriptor_distance_matrix({descs[0], descs[0]});
    CHECK(same[0][1] == 0.0);
}

TEST_CASE("report emission: csv rows, json round trip, format validation") {
    LoocvReport report;
    for (int d = 1; d <= 2; ++d) {
        for (int k : {0, 3}) {
            LoocvRow row;
            row.held_out_device = "sim" + std::to_string(d);
            row.method = "maple";
            row.k_adapt = k;
            row.acc = {0.1 * d, 0.2 * d, 0.3 * d, 100};
            row.train_devices = {"simA", "simB"};
            report.rows.push_back(row);
        }
    }

    const auto dir = std::filesystem::temp_directory_path();
    const auto csv_path = dir / "maple_test_report.csv";
    const auto json_path = dir / "maple_test_report.json";

    emit_report(report, "csv", csv_path);
    std::ifstream in(csv_path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1 + 4);  // header + one row per (device, method, k)

    emit_report(report, "json", json_path);
    const LoocvReport back = load_report_json(json_path);
    REQUIRE(back.rows.size() == report.rows.size());
    for (std::size_t i = 0; i < back.rows.size(); ++i) {
        CHECK(back.rows[i].held_out_device == report.rows[i].held_out_device);
        CHECK(back.rows[i].method == report.rows[i].method);
        CHECK(back.rows[i].k_adapt == report.rows[i].k_adapt);
        CHECK(back.rows[i].acc.acc_1pct == report.rows[i].acc.acc_1pct);
        CHECK(back.rows[i].acc.acc_5pct == report.rows[i].acc.acc_5pct);
        CHECK(back.rows[i].acc.acc_10pct == report.rows[i].acc.acc_10pct);
        CHECK(back.rows[i].acc.n == report.rows[i].acc.n);
        CHECK(back.rows[i].train_devices == report.rows[i].train_devices);
    }

    CHECK_THROWS_AS(emit_report(report, "xml", dir / "x.xml"), UsageError);
    std::filesystem::remove(csv_path);
    std::filesystem::remove(json_path);
}

TEST_CASE("a small leave-one-out run has the right shape") {
    const auto pool = make_pool({1, 4, 6});
    LoocvOptions opts;
    opts.n_train = 40;
    opts.ks = {0, 3};
    opts.methods = {"maple", "lut"};
    opts.seed = 2;
    opts.eval_limit = 300;
    opts.model.arch_hidden = {16, 16};
    opts.model.joint_hidden = {24, 24};
    opts.model.epochs = 10;

    const LoocvReport report = loocv(pool, opts);

    // per device: 2 maple rows + 1 lut row; plus 3 mean rows
    CHECK(report.rows.size() == 3 * 3 + 3);

    int mean_rows = 0;
    for (const auto& row : report.rows) {
        if (row.held_out_device == "mean") {
            ++mean_rows;
            // the mean row is the arithmetic mean of its device rows
            double sum10 = 0;
            int count = 0;
            for (const auto& r : report.rows) {
                if (r.held_out_device == "mean" || r.method != row.method ||
                    r.k_adapt != row.k_adapt) {
                    continue;
                }
                sum10 += r.acc.acc_10pct;
                ++count;
            }
            REQUIRE(count == 3);
            CHECK(row.acc.acc_10pct == sum10 / count);
            continue;
        }
        CHECK(row.error.empty());
        CHECK(row.acc.n == 300);
        REQUIRE(row.train_devices.size() == 2);
        for (const auto& td : row.train_devices) {
            CHECK(td != row.held_out_device);  // held-out device never trains
        }
    }
    CHECK(mean_rows == 3);
    CHECK_THROWS_AS(loocv(make_pool({1}), opts), DomainError);
}
