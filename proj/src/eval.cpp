#include "maple/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "maple/baselines.hpp"
#include "maple/errors.hpp"

namespace maple {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

double error_bound_accuracy(std::span<const double> preds, std::span<const double> truths,
                            double bound) {
    if (preds.size() != truths.size()) {
        throw DomainError("prediction and truth lists must have equal length");
    }
    if (preds.empty()) {
        throw DomainError("error-bound accuracy needs at least one sample");
    }
    std::size_t within = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!(truths[i] > 0)) {
            throw DomainError("true latencies must be positive");
        }
        if (std::abs(preds[i] - truths[i]) / truths[i] <= bound) {
            ++within;
        }
    }
    return static_cast<double>(within) / static_cast<double>(preds.size());
}

ErrorBoundReport error_bound_report(std::span<const double> preds,
                                    std::span<const double> truths) {
    ErrorBoundReport r;
    r.acc_1pct = error_bound_accuracy(preds, truths, kErrorBounds[0]);
    r.acc_5pct = error_bound_accuracy(preds, truths, kErrorBounds[1]);
    r.acc_10pct = error_bound_accuracy(preds, truths, kErrorBounds[2]);
    r.n = static_cast<int>(preds.size());
    return r;
}

namespace {

std::vector<double> predict_all_maple(const RegressionModel& m, const std::vector<ArchId>& archs,
                                      const HardwareDescriptor& desc) {
    std::vector<std::pair<ArchEncoding, const HardwareDescriptor*>> pairs;
    pairs.reserve(archs.size());
    for (ArchId a : archs) pairs.emplace_back(encode(a), &desc);
    return predict_batch(m, pairs);
}

}  // namespace

LoocvReport loocv(const std::vector<SimDevice>& pool, const LoocvOptions& opts) {
    if (pool.size() < 2) {
        throw DomainError("leave-one-out needs a pool of at least 2 devices");
    }

    std::vector<ArchId> eval_archs = enumerate_architectures();
    if (opts.eval_limit > 0 && opts.eval_limit < static_cast<int>(eval_archs.size())) {
        // uniform subsample so a truncated evaluation stays unbiased
        std::mt19937_64 rng(splitmix64(opts.seed ^ 0xeba1ull));
        for (int i = 0; i < opts.eval_limit; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, eval_archs.size() - 1);
            std::swap(eval_archs[i], eval_archs[pick(rng)]);
        }
        eval_archs.resize(opts.eval_limit);
        std::sort(eval_archs.begin(), eval_archs.end());
    }

    const auto train_archs = select_training_architectures(opts.n_train, opts.seed);

    LoocvReport report;
    for (std::size_t held = 0; held < pool.size(); ++held) {
        const SimDevice& target = pool[held];
        std::vector<SimDevice> train_pool;
        std::vector<std::string> train_ids;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (i == held) continue;
            train_pool.push_back(pool[i]);
            train_ids.push_back(pool[i].device_id);
        }

        const SampleSet initial =
            collect_initial_sim(train_pool, train_archs, opts.skeleton, opts.seed);
        const HardwareDescriptor target_desc = sim_descriptor(target);

        std::vector<double> truths(eval_archs.size());
        for (std::size_t i = 0; i < eval_archs.size(); ++i) {
            truths[i] = sim_latency(target, eval_archs[i], opts.skeleton);
        }

        for (const std::string& method : opts.methods) {
            if (method == "maple") {
                for (int k : opts.ks) {
                    LoocvRow row;
                    row.held_out_device = target.device_id;
                    row.method = method;
                    row.k_adapt = k;
                    row.train_devices = train_ids;
                    try {
                        SampleSet adaptation;
                        adaptation.descriptors.emplace(target.device_id, target_desc);
                        if (k > 0) {
                            adaptation = collect_adaptation_sim(
                                target, k, splitmix64(opts.seed ^ splitmix64(target.seed + k)),
                                opts.skeleton);
                        }
                        const SampleSet training = build_training_set(initial, adaptation);
                        ModelConfig cfg = opts.model;
                        cfg.seed = splitmix64(opts.seed ^ splitmix64(target.seed) ^
                                              (static_cast<std::uint64_t>(k) << 40));
                        RegressionModel model = init_model(cfg);
                        train(model, training);
                        const auto preds = predict_all_maple(model, eval_archs, target_desc);
                        row.acc = error_bound_report(preds, truths);
                    } catch (const Error& e) {
                        row.error = e.what();
                    }
                    report.rows.push_back(std::move(row));
                }
            } else {
                LoocvRow row;
                row.held_out_device = target.device_id;
                row.method = method;
                row.k_adapt = 0;
                row.train_devices = train_ids;
                try {
                    std::vector<double> preds(eval_archs.size());
                    if (method == "lut") {
                        const LatencyLUT lut = build_lut(target);
                        for (std::size_t i = 0; i < eval_archs.size(); ++i) {
                            preds[i] = lut_predict(lut, eval_archs[i], opts.skeleton);
                        }
                    } else if (method == "flops") {
                        const double scale =
                            fit_flops_scale(initial.samples, opts.skeleton);  // pool-wide fit
                        for (std::size_t i = 0; i < eval_archs.size(); ++i) {
                            preds[i] = flops_predict(scale, eval_archs[i], opts.skeleton);
                        }
                    } else if (method == "layerwise") {
                        for (std::size_t i = 0; i < eval_archs.size(); ++i) {
                            preds[i] =
                                layerwise_predict(target, eval_archs[i], opts.skeleton, opts.seed);
                        }
                    } else {
                        throw UsageError("unknown method '" + method + "'");
                    }
                    row.acc = error_bound_report(preds, truths);
                } catch (const Error& e) {
                    row.error = e.what();
                }
                report.rows.push_back(std::move(row));
            }
        }
    }

    // mean rows over devices, per (method, k)
    std::vector<std::pair<std::string, int>> keys;
    for (const auto& row : report.rows) {
        const std::pair<std::string, int> key{row.method, row.k_adapt};
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    std::vector<LoocvRow> means;
    for (const auto& [method, k] : keys) {
        LoocvRow mean;
        mean.held_out_device = "mean";
        mean.method = method;
        mean.k_adapt = k;
        int count = 0;
        for (const auto& row : report.rows) {
            if (row.method != method || row.k_adapt != k || !row.error.empty()) continue;
            mean.acc.acc_1pct += row.acc.acc_1pct;
            mean.acc.acc_5pct += row.acc.acc_5pct;
            mean.acc.acc_10pct += row.acc.acc_10pct;
            mean.acc.n += row.acc.n;
            ++count;
        }
        if (count > 0) {
            mean.acc.acc_1pct /= count;
            mean.acc.acc_5pct /= count;
            mean.acc.acc_10pct /= count;
        } else {
            mean.error = "no successful rows";
        }
        means.push_back(std::move(mean));
    }
    report.rows.insert(report.rows.end(), means.begin(), means.end());
    return report;
}

std::vector<std::vector<double>> euclidean_distance_matrix(
    const std::vector<std::vector<double>>& vectors) {
    const std::size_t n = vectors.size();
    for (const auto& v : vectors) {
        if (v.size() != vectors.front().size()) {
            throw DomainError("all vectors must have the same length");
        }
    }
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sq = 0;
            for (std::size_t d = 0; d < vectors[i].size(); ++d) {
                const double diff = vectors[i][d] - vectors[j][d];
                sq += diff * diff;
            }
            dist[i][j] = dist[j][i] = std::sqrt(sq);
        }
    }
    return dist;
}

std::vector<std::vector<double>> descriptor_distance_matrix(
    const std::vector<HardwareDescriptor>& descriptors, bool normalized) {
    std::vector<std::vector<double>> features;
    features.reserve(descriptors.size());
    for (const auto& d : descriptors) {
        const auto flat = d.flattened();
        features.emplace_back(flat.begin(), flat.end());
    }
    if (normalized && !features.empty()) {
        const std::size_t dim = features.front().size();
        for (auto& f : features) {
            for (auto& v : f) v = std::log1p(v);
        }
        for (std::size_t d = 0; d < dim; ++d) {
            double mean = 0;
            for (const auto& f : features) mean += f[d];
            mean /= static_cast<double>(features.size());
            double var = 0;
            for (const auto& f : features) var += (f[d] - mean) * (f[d] - mean);
            var /= static_cast<double>(features.size());
            const double stdev = std::sqrt(var) < 1e-12 ? 1.0 : std::sqrt(var);
            for (auto& f : features) f[d] = (f[d] - mean) / stdev;
        }
    }
    return euclidean_distance_matrix(features);
}

std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points) {
    if (points.empty()) return {};
    std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        if (a.latency_ms != b.latency_ms) return a.latency_ms < b.latency_ms;
        if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
        return a.arch < b.arch;
    });

    std::vector<ParetoPoint> front;
    double best_acc = -1;  // max accuracy among strictly lower latencies
    std::size_t i = 0;
    while (i < points.size()) {
        std::size_t j = i;
        while (j < points.size() && points[j].latency_ms == points[i].latency_ms) ++j;
        const double group_max = points[i].accuracy;  // sorted accuracy-descending inside group
        if (group_max > best_acc) {
            for (std::size_t g = i; g < j && points[g].accuracy == group_max; ++g) {
                front.push_back(points[g]);
            }
            best_acc = group_max;
        }
        i = j;
    }
    return front;
}

double pareto_agreement(const std::vector<ParetoPoint>& predicted_front,
                        const std::vector<ParetoPoint>& true_front) {
    if (true_front.empty()) {
        throw DomainError("true front must not be empty");
    }
    std::set<ArchId> truth;
    for (const auto& p : true_front) truth.insert(p.arch);
    std::set<ArchId> predicted;
    for (const auto& p : predicted_front) predicted.insert(p.arch);
    std::size_t hits = 0;
    for (ArchId a : predicted) {
        if (truth.contains(a)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace {

nlohmann::json report_to_json(const LoocvReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json j;
        j["held_out_device"] = row.held_out_device;
        j["method"] = row.method;
        j["k_adapt"] = row.k_adapt;
        j["acc_1pct"] = row.acc.acc_1pct;
        j["acc_5pct"] = row.acc.acc_5pct;
        j["acc_10pct"] = row.acc.acc_10pct;
        j["n_eval"] = row.acc.n;
        j["train_devices"] = row.train_devices;
        if (!row.error.empty()) j["error"] = row.error;
        rows.push_back(std::move(j));
    }
    return nlohmann::json{{"rows", std::move(rows)}};
}

}  // namespace

void emit_report(const LoocvReport& report, const std::string& format,
                 const std::filesystem::path& path) {
    if (format != "csv" && format != "json") {
        throw UsageError("unknown report format '" + format + "' (expected csv or json)");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    if (format == "json") {
        out << report_to_json(report).dump(2) << '\n';
        return;
    }
    out << "held_out_device,method,k_adapt,acc_1pct,acc_5pct,acc_10pct,n_eval\n";
    for (const auto& row : report.rows) {
        out << row.held_out_device << ',' << row.method << ',' << row.k_adapt << ','
            << format_double(row.acc.acc_1pct) << ',' << format_double(row.acc.acc_5pct) << ','
            << format_double(row.acc.acc_10pct) << ',' << row.acc.n << '\n';
    }
}

LoocvReport load_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid report JSON: ") + e.what());
    }
    LoocvReport report;
    try {
        for (const auto& jr : j.at("rows")) {
            LoocvRow row;
            row.held_out_device = jr.at("held_out_device").get<std::string>();
            row.method = jr.at("method").get<std::string>();
            row.k_adapt = jr.at("k_adapt").get<int>();
            row.acc.acc_1pct = jr.at("acc_1pct").get<double>();
            row.acc.acc_5pct = jr.at("acc_5pct").get<double>();
            row.acc.acc_10pct = jr.at("acc_10pct").get<double>();
            row.acc.n = jr.at("n_eval").get<int>();
            row.train_devices = jr.at("train_devices").get<std::vector<std::string>>();
            if (jr.contains("error")) row.error = jr.at("error").get<std::string>();
            report.rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid report JSON: ") + e.what());
    }
    return report;
}

}  // namespace maple
