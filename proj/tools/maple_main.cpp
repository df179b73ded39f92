// maple: latency-prediction toolkit CLI. Subcommands cover the whole
// pipeline: device characterization, sample collection, training, few-shot
// adaptation, leave-one-out evaluation, descriptor distance maps and
// Pareto-front identification. All randomness flows from --seed.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "maple/baselines.hpp"
#include "maple/dataset.hpp"
#include "maple/devicesim.hpp"
#include "maple/errors.hpp"
#include "maple/eval.hpp"
#include "maple/hwcounters.hpp"
#include "maple/kernels.hpp"
#include "maple/predictor.hpp"
#include "maple/search_space.hpp"

#if defined(__linux__)
#include <sched.h>
#endif

namespace {

using namespace maple;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t parse_u64(const std::string& tok, const std::string& what) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw UsageError("malformed " + what + " '" + tok + "'");
    }
}

int parse_int(const std::string& tok, const std::string& what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw UsageError("malformed " + what + " '" + tok + "'");
    }
}

// "1..8" or "1,2,5" -> seed list
std::vector<std::uint64_t> parse_seed_list(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    const auto dots = spec.find("..");
    if (dots != std::string::npos) {
        const std::uint64_t lo = parse_u64(spec.substr(0, dots), "seed");
        const std::uint64_t hi = parse_u64(spec.substr(dots + 2), "seed");
        if (hi < lo) throw UsageError("seed range '" + spec + "' is reversed");
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    std::size_t start = 0;
    while (start <= spec.size()) {
        const auto comma = spec.find(',', start);
        const std::string tok =
            spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) seeds.push_back(parse_u64(tok, "seed"));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (seeds.empty()) throw UsageError("empty seed list '" + spec + "'");
    return seeds;
}

// "sim:1..7" -> sim1..sim7; otherwise a comma list of device ids
std::vector<std::string> parse_device_list(const std::string& spec) {
    std::vector<std::string> ids;
    if (spec.rfind("sim:", 0) == 0) {
        for (std::uint64_t s : parse_seed_list(spec.substr(4))) {
            ids.push_back("sim" + std::to_string(s));
        }
        return ids;
    }
    std::size_t start = 0;
    while (start <= spec.size()) {
        const auto comma = spec.find(',', start);
        const std::string tok =
            spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) ids.push_back(tok);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (ids.empty()) throw UsageError("empty device list '" + spec + "'");
    return ids;
}

std::vector<int> parse_int_list(const std::string& spec) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start <= spec.size()) {
        const auto comma = spec.find(',', start);
        const std::string tok =
            spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) out.push_back(parse_int(tok, "count"));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw UsageError("empty list '" + spec + "'");
    return out;
}

std::vector<std::string> parse_string_list(const std::string& spec) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= spec.size()) {
        const auto comma = spec.find(',', start);
        const std::string tok =
            spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) out.push_back(tok);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

// Newline-delimited architecture ids.
std::vector<ArchId> load_arch_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<ArchId> archs;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        unsigned long v = 0;
        try {
            v = std::stoul(line);
        } catch (const std::exception&) {
            throw ParseError("malformed architecture id '" + line + "'", line_no);
        }
        if (v >= kNumArchitectures) {
            throw ParseError("architecture id out of range", line_no);
        }
        archs.push_back(static_cast<ArchId>(v));
    }
    if (archs.empty()) throw ValidationError("architecture list '" + path + "' is empty");
    return archs;
}

// MAPLE_PIN_CORE pins measurement commands to one core to reduce variance.
void maybe_pin_core() {
    const char* env = std::getenv("MAPLE_PIN_CORE");
    if (env == nullptr || *env == '\0') return;
#if defined(__linux__)
    const int core = std::atoi(env);
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(core, &set);
    if (sched_setaffinity(0, sizeof(set), &set) != 0) {
        std::cerr << "warning: could not pin to core " << core << "\n";
    }
#else
    std::cerr << "warning: MAPLE_PIN_CORE is not supported on this platform\n";
#endif
}

DescriptorMap pool_descriptors(const std::vector<SimDevice>& pool) {
    DescriptorMap map;
    for (const auto& d : pool) map.emplace(d.device_id, sim_descriptor(d));
    return map;
}

struct CommonPaths {
    std::string pool_path;
    std::vector<std::string> descriptor_paths;
};

DescriptorMap gather_descriptors(const CommonPaths& paths) {
    DescriptorMap map;
    if (!paths.pool_path.empty()) {
        map = pool_descriptors(load_pool(paths.pool_path));
    }
    for (const auto& p : paths.descriptor_paths) {
        HardwareDescriptor d = load_descriptor(p);
        map[d.device_id] = std::move(d);
    }
    return map;
}

int run(int argc, char** argv) {
    CLI::App app{"DNN latency prediction from hardware-counter device descriptors"};
    app.require_subcommand(1);

    // ---- simgen ----
    auto* simgen = app.add_subcommand("simgen", "generate a synthetic device pool");
    std::string simgen_seeds = "1..8";
    std::string simgen_out = "pool.json";
    double simgen_noise_cv = 0.02;
    simgen->add_option("--seeds", simgen_seeds, "seed list, e.g. 1..8 or 1,2,5");
    simgen->add_option("--out", simgen_out, "pool file to write")->required();
    simgen->add_option("--noise-cv", simgen_noise_cv, "measurement noise CV");
    simgen->callback([&] {
        std::vector<SimDevice> pool;
        for (std::uint64_t s : parse_seed_list(simgen_seeds)) {
            SimDeviceConfig cfg = default_config_for_seed(s);
            cfg.noise_cv = simgen_noise_cv;
            pool.push_back(make_device(s, cfg));
        }
        save_pool(pool, simgen_out);
        std::cout << "wrote " << pool.size() << " devices to " << simgen_out << "\n";
    });

    // ---- characterize ----
    auto* character = app.add_subcommand("characterize", "build a hardware descriptor");
    std::string char_device_id;
    int char_iterations = 100;
    std::string char_out;
    std::int64_t char_sim_seed = -1;
    std::string char_pool;
    character->add_option("--device-id", char_device_id, "identifier stored in the descriptor");
    character->add_option("--iterations", char_iterations, "workload-loop iterations");
    character->add_option("--out", char_out, "descriptor file to write")->required();
    character->add_option("--sim-device", char_sim_seed, "simulate the device with this seed")
        ->check(CLI::NonNegativeNumber);
    character->add_option("--pool", char_pool, "take the simulated device from this pool file");
    character->callback([&] {
        HardwareDescriptor desc;
        if (char_sim_seed >= 0) {
            if (!char_pool.empty()) {
                const auto pool = load_pool(char_pool);
                desc = sim_descriptor(
                    find_device(pool, "sim" + std::to_string(char_sim_seed)));
            } else {
                desc = sim_descriptor(make_device(static_cast<std::uint64_t>(char_sim_seed)));
            }
            if (!char_device_id.empty()) desc.device_id = char_device_id;
        } else {
            std::string reason;
            if (!counters_available(&reason)) {
                throw UnsupportedError("hardware counters unavailable (" + reason +
                                       "); rerun with --sim-device N to characterize a simulated device");
            }
            maybe_pin_core();
            desc = build_descriptor(char_device_id.empty() ? "host" : char_device_id,
                                    char_iterations);
        }
        save_descriptor(desc, char_out);
        std::cout << "wrote descriptor for " << desc.device_id << " to " << char_out << "\n";
    });

    // ---- collect ----
    auto* collect = app.add_subcommand("collect", "measure an initial latency sample set");
    std::string collect_pool, collect_devices = "sim:1..7", collect_out, collect_source = "sim";
    std::string collect_archs;
    int collect_n = 900, collect_repeats = 50;
    std::uint64_t collect_seed = 0;
    collect->add_option("--pool", collect_pool, "device pool file (sim source)");
    collect->add_option("--devices", collect_devices, "devices, e.g. sim:1..7");
    collect->add_option("--n", collect_n, "architectures per device");
    collect->add_option("--archs", collect_archs,
                        "newline-delimited architecture-id file (overrides --n)");
    collect->add_option("--seed", collect_seed, "selection + noise seed");
    collect->add_option("--source", collect_source)->check(CLI::IsMember({"sim", "host"}));
    collect->add_option("--repeats", collect_repeats, "timed runs per architecture (host)");
    collect->add_option("--out", collect_out, "sample CSV to write")->required();
    collect->callback([&] {
        const auto archs = collect_archs.empty()
                               ? select_training_architectures(collect_n, collect_seed)
                               : load_arch_list(collect_archs);
        SampleSet set;
        if (collect_source == "sim") {
            if (collect_pool.empty()) throw UsageError("--pool is required with --source sim");
            const auto pool = load_pool(collect_pool);
            std::vector<SimDevice> devices;
            for (const auto& id : parse_device_list(collect_devices)) {
                devices.push_back(find_device(pool, id));
            }
            set = collect_initial_sim(devices, archs, NetworkSkeleton{}, collect_seed);
        } else {
            maybe_pin_core();
            const auto ids = parse_device_list(collect_devices);
            if (ids.size() != 1) throw UsageError("host source expects exactly one device id");
            set = collect_initial_host(ids[0], archs, NetworkSkeleton{}, collect_repeats);
        }
        save_samples(set, collect_out);
        std::cout << "wrote " << set.samples.size() << " samples to " << collect_out << "\n";
    });

    // ---- adapt ----
    auto* adapt = app.add_subcommand("adapt", "measure few-shot adaptation samples");
    std::string adapt_pool, adapt_device, adapt_out, adapt_source = "sim";
    int adapt_k = 3, adapt_repeats = 50;
    std::uint64_t adapt_seed = 0;
    adapt->add_option("--pool", adapt_pool, "device pool file (sim source)");
    adapt->add_option("--device", adapt_device, "target device id")->required();
    adapt->add_option("--k", adapt_k, "number of adaptation samples");
    adapt->add_option("--seed", adapt_seed);
    adapt->add_option("--source", adapt_source)->check(CLI::IsMember({"sim", "host"}));
    adapt->add_option("--repeats", adapt_repeats, "timed runs per architecture (host)");
    adapt->add_option("--out", adapt_out, "sample CSV to write")->required();
    adapt->callback([&] {
        SampleSet set;
        if (adapt_source == "sim") {
            if (adapt_pool.empty()) throw UsageError("--pool is required with --source sim");
            const auto pool = load_pool(adapt_pool);
            set = collect_adaptation_sim(find_device(pool, adapt_device), adapt_k, adapt_seed,
                                         NetworkSkeleton{});
        } else {
            maybe_pin_core();
            set = collect_adaptation_host(adapt_device, adapt_k, adapt_seed, NetworkSkeleton{},
                                          adapt_repeats);
        }
        save_samples(set, adapt_out);
        std::cout << "wrote " << set.samples.size() << " samples to " << adapt_out << "\n";
    });

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train the regression model");
    std::string train_samples, train_adapt, train_out, train_report_out;
    CommonPaths train_paths;
    std::string train_descriptors;
    ModelConfig train_cfg;
    train_cmd->add_option("--samples", train_samples, "initial sample CSV")->required();
    train_cmd->add_option("--adapt", train_adapt, "adaptation sample CSV");
    train_cmd->add_option("--pool", train_paths.pool_path, "device pool file for descriptors");
    train_cmd->add_option("--descriptors", train_descriptors,
                          "comma list of descriptor JSON files");
    train_cmd->add_option("--out", train_out, "model file to write")->required();
    train_cmd->add_option("--report", train_report_out, "training-report JSON to write");
    train_cmd->add_option("--seed", train_cfg.seed);
    train_cmd->add_option("--epochs", train_cfg.epochs);
    train_cmd->add_option("--batch", train_cfg.batch_size);
    train_cmd->add_option("--lr", train_cfg.learning_rate);
    train_cmd->add_option("--descriptor-dim", train_cfg.descriptor_dim,
                          "165 keeps the operator-latency block, 150 drops it");
    train_cmd->callback([&] {
        train_paths.descriptor_paths = parse_string_list(train_descriptors);
        const DescriptorMap descriptors = gather_descriptors(train_paths);
        const SampleSet initial = load_samples(train_samples, descriptors);
        SampleSet adaptation;
        if (!train_adapt.empty()) {
            adaptation = load_samples(train_adapt, descriptors);
        }
        const SampleSet training = build_training_set(initial, adaptation);
        RegressionModel model = init_model(train_cfg);
        const TrainReport report = train(model, training);
        save_model(model, train_out);
        if (!train_report_out.empty()) {
            nlohmann::json j;
            j["epoch_mae"] = report.epoch_mae;
            j["final_loss"] = report.final_loss;
            j["epochs_run"] = report.epochs_run;
            std::ofstream out(train_report_out);
            if (!out) throw IoError("cannot open '" + train_report_out + "' for writing");
            out << j.dump(2) << '\n';
        }
        std::cout << "trained on " << training.samples.size() << " samples, final loss "
                  << format_double(report.final_loss) << ", model written to " << train_out << "\n";
    });

    // ---- predict ----
    auto* predict_cmd = app.add_subcommand("predict", "predict latency for architectures");
    std::string pred_model, pred_device, pred_out, pred_desc_file;
    CommonPaths pred_paths;
    predict_cmd->add_option("--model", pred_model)->required();
    predict_cmd->add_option("--pool", pred_paths.pool_path, "device pool file");
    predict_cmd->add_option("--descriptor", pred_desc_file, "descriptor JSON for the device");
    predict_cmd->add_option("--device", pred_device, "device id to predict for")->required();
    predict_cmd->add_option("--out", pred_out, "prediction CSV to write")->required();
    predict_cmd->callback([&] {
        if (!pred_desc_file.empty()) pred_paths.descriptor_paths.push_back(pred_desc_file);
        const DescriptorMap descriptors = gather_descriptors(pred_paths);
        const auto it = descriptors.find(pred_device);
        if (it == descriptors.end()) {
            throw ValidationError("no descriptor available for device '" + pred_device + "'");
        }
        const RegressionModel model = load_model(pred_model);
        const auto archs = enumerate_architectures();
        std::vector<std::pair<ArchEncoding, const HardwareDescriptor*>> pairs;
        pairs.reserve(archs.size());
        for (ArchId a : archs) pairs.emplace_back(encode(a), &it->second);
        const auto preds = predict_batch(model, pairs);
        std::ofstream out(pred_out);
        if (!out) throw IoError("cannot open '" + pred_out + "' for writing");
        out << "arch_id,predicted_ms\n";
        for (std::size_t i = 0; i < archs.size(); ++i) {
            out << archs[i] << ',' << format_double(preds[i]) << '\n';
        }
        std::cout << "wrote " << archs.size() << " predictions to " << pred_out << "\n";
    });

    // ---- loocv ----
    auto* loocv_cmd = app.add_subcommand("loocv", "leave-one-out cross-validation over the pool");
    std::string loocv_pool, loocv_out, loocv_format = "csv";
    std::string loocv_ks = "0,3,10", loocv_methods = "maple,lut,flops,layerwise";
    LoocvOptions loocv_opts;
    loocv_cmd->add_option("--pool", loocv_pool)->required();
    loocv_cmd->add_option("--n", loocv_opts.n_train, "training architectures per device");
    loocv_cmd->add_option("--k", loocv_ks, "adaptation sample counts, e.g. 0,3,10");
    loocv_cmd->add_option("--methods", loocv_methods);
    loocv_cmd->add_option("--seed", loocv_opts.seed);
    loocv_cmd->add_option("--epochs", loocv_opts.model.epochs);
    loocv_cmd->add_option("--batch", loocv_opts.model.batch_size);
    loocv_cmd->add_option("--lr", loocv_opts.model.learning_rate);
    loocv_cmd->add_option("--eval-limit", loocv_opts.eval_limit,
                          "evaluate on the first N architectures only (0 = all)");
    loocv_cmd->add_option("--format", loocv_format)->check(CLI::IsMember({"csv", "json"}));
    loocv_cmd->add_option("--out", loocv_out)->required();
    loocv_cmd->callback([&] {
        loocv_opts.ks = parse_int_list(loocv_ks);
        loocv_opts.methods = parse_string_list(loocv_methods);
        const auto pool = load_pool(loocv_pool);
        const LoocvReport report = loocv(pool, loocv_opts);
        emit_report(report, loocv_format, loocv_out);
        std::cout << "wrote " << report.rows.size() << " rows to " << loocv_out << "\n";
    });

    // ---- distmap ----
    auto* distmap = app.add_subcommand("distmap", "descriptor distance matrix");
    std::string dist_pool, dist_out, dist_descriptors;
    bool dist_raw = false;
    distmap->add_option("--pool", dist_pool, "device pool file");
    distmap->add_option("--descriptors", dist_descriptors, "comma list of descriptor JSON files");
    distmap->add_flag("--raw", dist_raw, "distances on raw values instead of normalized features");
    distmap->add_option("--out", dist_out)->required();
    distmap->callback([&] {
        std::vector<HardwareDescriptor> descs;
        if (!dist_pool.empty()) {
            for (const auto& d : load_pool(dist_pool)) descs.push_back(sim_descriptor(d));
        }
        for (const auto& p : parse_string_list(dist_descriptors)) descs.push_back(load_descriptor(p));
        if (descs.size() < 2) throw UsageError("need at least two descriptors");
        const auto dist = descriptor_distance_matrix(descs, !dist_raw);
        std::ofstream out(dist_out);
        if (!out) throw IoError("cannot open '" + dist_out + "' for writing");
        out << "device_id";
        for (const auto& d : descs) out << ',' << d.device_id;
        out << '\n';
        for (std::size_t i = 0; i < descs.size(); ++i) {
            out << descs[i].device_id;
            for (std::size_t j = 0; j < descs.size(); ++j) out << ',' << format_double(dist[i][j]);
            out << '\n';
        }
        std::cout << "wrote " << descs.size() << "x" << descs.size() << " matrix to " << dist_out
                  << "\n";
    });

    // ---- pareto ----
    auto* pareto_cmd = app.add_subcommand("pareto", "true vs predicted Pareto-front flags");
    std::string pareto_pool, pareto_device, pareto_model, pareto_out;
    pareto_cmd->add_option("--pool", pareto_pool)->required();
    pareto_cmd->add_option("--device", pareto_device)->required();
    pareto_cmd->add_option("--model", pareto_model)->required();
    pareto_cmd->add_option("--out", pareto_out)->required();
    pareto_cmd->callback([&] {
        const auto pool = load_pool(pareto_pool);
        const SimDevice& device = find_device(pool, pareto_device);
        const RegressionModel model = load_model(pareto_model);
        const HardwareDescriptor desc = sim_descriptor(device);
        const NetworkSkeleton skel;

        const auto archs = enumerate_architectures();
        std::vector<std::pair<ArchEncoding, const HardwareDescriptor*>> pairs;
        pairs.reserve(archs.size());
        for (ArchId a : archs) pairs.emplace_back(encode(a), &desc);
        const auto preds = predict_batch(model, pairs);

        std::vector<ParetoPoint> truth(archs.size()), predicted(archs.size());
        for (std::size_t i = 0; i < archs.size(); ++i) {
            const double acc = sim_accuracy(archs[i]);
            truth[i] = {archs[i], sim_latency(device, archs[i], skel), acc};
            predicted[i] = {archs[i], preds[i], acc};
        }
        const auto true_front = pareto_front(truth);
        const auto pred_front = pareto_front(predicted);
        std::vector<bool> on_true(archs.size(), false), on_pred(archs.size(), false);
        for (const auto& p : true_front) on_true[p.arch] = true;
        for (const auto& p : pred_front) on_pred[p.arch] = true;

        std::ofstream out(pareto_out);
        if (!out) throw IoError("cannot open '" + pareto_out + "' for writing");
        out << "arch_id,latency_ms,accuracy,on_true_front,on_predicted_front\n";
        for (std::size_t i = 0; i < archs.size(); ++i) {
            out << archs[i] << ',' << format_double(truth[i].latency_ms) << ','
                << format_double(truth[i].accuracy) << ',' << (on_true[archs[i]] ? 1 : 0) << ','
                << (on_pred[archs[i]] ? 1 : 0) << '\n';
        }
        std::cout << "agreement " << format_double(pareto_agreement(pred_front, true_front))
                  << ", wrote " << pareto_out << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UnsupportedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const MeasurementError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
