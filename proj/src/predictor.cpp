#include "maple/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "maple/errors.hpp"

namespace maple {

namespace {

constexpr double kLossEpsilon = 1e-8;  // |e| smoothed to sqrt(e^2 + eps^2)
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Activation storage for one batch; kept around so training reuses buffers.
struct Activations {
    Eigen::MatrixXd h0, h1, proj, joint, h3, h4;
    Eigen::VectorXd z;
};

void forward_batch(const RegressionModel& m, const Eigen::MatrixXd& arch_in,
                   const Eigen::MatrixXd& desc_in, Activations& act) {
    const auto& L = m.layers;
    act.h0 = ((arch_in * L[0].weights).rowwise() + L[0].bias.transpose()).cwiseMax(0.0);
    act.h1 = ((act.h0 * L[1].weights).rowwise() + L[1].bias.transpose()).cwiseMax(0.0);
    act.proj = (act.h1 * L[2].weights).rowwise() + L[2].bias.transpose();
    act.joint.resize(arch_in.rows(), act.proj.cols() + desc_in.cols());
    act.joint << act.proj, desc_in;
    act.h3 = ((act.joint * L[3].weights).rowwise() + L[3].bias.transpose()).cwiseMax(0.0);
    act.h4 = ((act.h3 * L[4].weights).rowwise() + L[4].bias.transpose()).cwiseMax(0.0);
    act.z = (act.h4 * L[5].weights).col(0) + Eigen::VectorXd::Constant(arch_in.rows(), L[5].bias(0));
}

std::vector<DenseLayer> zero_like(const std::vector<DenseLayer>& layers) {
    std::vector<DenseLayer> z;
    z.reserve(layers.size());
    for (const auto& l : layers) {
        z.push_back(DenseLayer{Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                               Eigen::VectorXd::Zero(l.bias.size())});
    }
    return z;
}

// Backpropagates dL/dz through the batch; writes parameter gradients.
void backward_batch(const RegressionModel& m, const Eigen::MatrixXd& arch_in,
                    const Eigen::MatrixXd& desc_in, const Activations& act,
                    const Eigen::VectorXd& dz, std::vector<DenseLayer>& grads) {
    const auto& L = m.layers;
    const int proj_dim = static_cast<int>(act.proj.cols());

    grads[5].weights.noalias() = act.h4.transpose() * dz;
    grads[5].bias(0) = dz.sum();

    Eigen::MatrixXd dh4 = (dz * L[5].weights.transpose()).cwiseProduct(
        (act.h4.array() > 0.0).cast<double>().matrix());
    grads[4].weights.noalias() = act.h3.transpose() * dh4;
    grads[4].bias = dh4.colwise().sum();

    Eigen::MatrixXd dh3 = (dh4 * L[4].weights.transpose()).cwiseProduct(
        (act.h3.array() > 0.0).cast<double>().matrix());
    grads[3].weights.noalias() = act.joint.transpose() * dh3;
    grads[3].bias = dh3.colwise().sum();

    Eigen::MatrixXd djoint = dh3 * L[3].weights.transpose();
    Eigen::MatrixXd dproj = djoint.leftCols(proj_dim);
    grads[2].weights.noalias() = act.h1.transpose() * dproj;
    grads[2].bias = dproj.colwise().sum();

    Eigen::MatrixXd dh1 = (dproj * L[2].weights.transpose()).cwiseProduct(
        (act.h1.array() > 0.0).cast<double>().matrix());
    grads[1].weights.noalias() = act.h0.transpose() * dh1;
    grads[1].bias = dh1.colwise().sum();

    Eigen::MatrixXd dh0 = (dh1 * L[1].weights.transpose()).cwiseProduct(
        (act.h0.array() > 0.0).cast<double>().matrix());
    grads[0].weights.noalias() = arch_in.transpose() * dh0;
    grads[0].bias = dh0.colwise().sum();
}

Eigen::RowVectorXd encoding_row(const ArchEncoding& enc) {
    Eigen::RowVectorXd row(enc.bits.size());
    for (std::size_t i = 0; i < enc.bits.size(); ++i) row(i) = enc.bits[i];
    return row;
}

double smoothed_abs(double e) { return std::sqrt(e * e + kLossEpsilon * kLossEpsilon); }

}  // namespace

void ModelConfig::validate() const {
    if (arch_projection_dim != 32) {
        throw DomainError("arch_projection_dim is fixed at 32");
    }
    for (int h : arch_hidden) {
        if (h < 1) throw DomainError("arch hidden sizes must be >= 1");
    }
    for (int h : joint_hidden) {
        if (h < 1) throw DomainError("joint hidden sizes must be >= 1");
    }
    if (descriptor_dim < 1 || descriptor_dim > kDescriptorLength) {
        throw DomainError("descriptor_dim must be in [1, " + std::to_string(kDescriptorLength) + "]");
    }
    if (learning_rate <= 0) throw DomainError("learning_rate must be positive");
    if (epochs < 0) throw DomainError("epochs must be >= 0");
    if (batch_size < 1) throw DomainError("batch_size must be >= 1");
}

double TargetTransform::apply(double y_ms) const {
    const double v = log_space ? std::log(y_ms) : y_ms;
    return (v - mean) / stdev;
}

double TargetTransform::invert(double z) const {
    const double v = z * stdev + mean;
    return log_space ? std::exp(v) : v;
}

Eigen::RowVectorXd DescriptorNormalization::apply(const Eigen::RowVectorXd& raw) const {
    Eigen::RowVectorXd out(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        out(i) = (std::log1p(raw(i)) - mean(i)) / stdev(i);
    }
    return out;
}

std::size_t RegressionModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
        n += static_cast<std::size_t>(l.weights.rows()) * l.weights.cols() + l.bias.size();
    }
    return n;
}

RegressionModel init_model(const ModelConfig& cfg) {
    cfg.validate();
    RegressionModel m;
    m.config = cfg;

    const std::array<std::pair<int, int>, 6> shapes{{
        {static_cast<int>(kNumEdges * kNumOpKinds), cfg.arch_hidden[0]},
        {cfg.arch_hidden[0], cfg.arch_hidden[1]},
        {cfg.arch_hidden[1], cfg.arch_projection_dim},
        {cfg.arch_projection_dim + cfg.descriptor_dim, cfg.joint_hidden[0]},
        {cfg.joint_hidden[0], cfg.joint_hidden[1]},
        {cfg.joint_hidden[1], 1},
    }};

    std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x1417ull));
    for (const auto& [in, out] : shapes) {
        DenseLayer layer;
        layer.weights.resize(in, out);
        layer.bias = Eigen::VectorXd::Zero(out);
        const double limit = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (int i = 0; i < in; ++i) {
            for (int j = 0; j < out; ++j) {
                layer.weights(i, j) = dist(rng);
            }
        }
        m.layers.push_back(std::move(layer));
    }

    m.desc_norm.mean = Eigen::VectorXd::Zero(cfg.descriptor_dim);
    m.desc_norm.stdev = Eigen::VectorXd::Ones(cfg.descriptor_dim);
    m.target = TargetTransform{cfg.log_target, 0.0, 1.0};
    return m;
}

Eigen::RowVectorXd descriptor_features(const HardwareDescriptor& d, int dim) {
    if (dim < 1 || dim > kDescriptorLength) {
        throw DomainError("descriptor feature width must be in [1, " +
                          std::to_string(kDescriptorLength) + "]");
    }
    const auto flat = d.flattened();
    Eigen::RowVectorXd row(dim);
    for (int i = 0; i < dim; ++i) row(i) = flat[i];
    return row;
}

double forward(const RegressionModel& m, const ArchEncoding& enc, const HardwareDescriptor& desc) {
    Eigen::MatrixXd arch_in(1, kNumEdges * kNumOpKinds);
    arch_in.row(0) = encoding_row(enc);
    Eigen::MatrixXd desc_in(1, m.config.descriptor_dim);
    desc_in.row(0) = m.desc_norm.apply(descriptor_features(desc, m.config.descriptor_dim));
    Activations act;
    forward_batch(m, arch_in, desc_in, act);
    return m.target.invert(act.z(0));
}

std::vector<double> predict_batch(
    const RegressionModel& m,
    const std::vector<std::pair<ArchEncoding, const HardwareDescriptor*>>& pairs) {
    std::unordered_map<const HardwareDescriptor*, Eigen::RowVectorXd> desc_rows;
    const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
    Eigen::MatrixXd arch_in(n, kNumEdges * kNumOpKinds);
    Eigen::MatrixXd desc_in(n, m.config.descriptor_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        arch_in.row(i) = encoding_row(pairs[i].first);
        const HardwareDescriptor* d = pairs[i].second;
        auto it = desc_rows.find(d);
        if (it == desc_rows.end()) {
            it = desc_rows.emplace(d, m.desc_norm.apply(descriptor_features(*d, m.config.descriptor_dim)))
                     .first;
        }
        desc_in.row(i) = it->second;
    }
    Activations act;
    forward_batch(m, arch_in, desc_in, act);
    std::vector<double> out(pairs.size());
    for (Eigen::Index i = 0; i < n; ++i) out[i] = m.target.invert(act.z(i));
    return out;
}

namespace {

struct TrainingData {
    Eigen::MatrixXd arch_in;   // n x 30
    Eigen::MatrixXd desc_in;   // n x descriptor_dim, normalized
    Eigen::VectorXd targets;   // transformed
    Eigen::VectorXd weights;
};

// Normalization is fitted before assembly: descriptor statistics over the
// distinct devices present in T, target statistics over the initial
// (lowest-weight) subset, which is the whole set when no adaptation samples
// were mixed in.
void fit_normalization(RegressionModel& m, const SampleSet& T) {
    const int dim = m.config.descriptor_dim;

    std::vector<Eigen::RowVectorXd> device_feats;
    device_feats.reserve(T.descriptors.size());
    for (const auto& s : T.samples) {
        if (T.descriptors.find(s.device_id) == T.descriptors.end()) {
            throw ValidationError("sample references device '" + s.device_id +
                                  "' with no descriptor");
        }
    }
    for (const auto& [id, desc] : T.descriptors) {
        Eigen::RowVectorXd f = descriptor_features(desc, dim);
        for (int i = 0; i < dim; ++i) f(i) = std::log1p(f(i));
        device_feats.push_back(std::move(f));
    }

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& f : device_feats) mean += f.transpose();
    mean /= static_cast<double>(device_feats.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
    for (const auto& f : device_feats) var += (f.transpose() - mean).cwiseAbs2();
    var /= static_cast<double>(device_feats.size());
    Eigen::VectorXd stdev = var.cwiseSqrt();
    for (int i = 0; i < dim; ++i) {
        if (stdev(i) < 1e-12) stdev(i) = 1.0;  // constant feature: just center it
    }
    m.desc_norm.mean = std::move(mean);
    m.desc_norm.stdev = std::move(stdev);

    double min_weight = T.samples.front().weight;
    for (const auto& s : T.samples) min_weight = std::min(min_weight, s.weight);
    double tsum = 0, tsq = 0;
    std::size_t count = 0;
    for (const auto& s : T.samples) {
        if (s.weight != min_weight) continue;
        const double v = m.config.log_target ? std::log(s.latency_ms) : s.latency_ms;
        tsum += v;
        tsq += v * v;
        ++count;
    }
    const double tmean = tsum / static_cast<double>(count);
    double tvar = tsq / static_cast<double>(count) - tmean * tmean;
    if (tvar < 0) tvar = 0;
    double tstd = std::sqrt(tvar);
    if (tstd < 1e-12) tstd = 1.0;
    m.target = TargetTransform{m.config.log_target, tmean, tstd};
}

TrainingData assemble(const RegressionModel& m, const SampleSet& T) {
    const Eigen::Index n = static_cast<Eigen::Index>(T.samples.size());
    TrainingData data;
    data.arch_in.resize(n, kNumEdges * kNumOpKinds);
    data.desc_in.resize(n, m.config.descriptor_dim);
    data.targets.resize(n);
    data.weights.resize(n);

    std::map<std::string, Eigen::RowVectorXd> device_rows;
    for (const auto& [id, desc] : T.descriptors) {
        device_rows.emplace(id, m.desc_norm.apply(descriptor_features(desc, m.config.descriptor_dim)));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const LatencySample& s = T.samples[i];
        data.arch_in.row(i) = encoding_row(encode(s.arch));
        data.desc_in.row(i) = device_rows.at(s.device_id);
        data.targets(i) = m.target.apply(s.latency_ms);
        data.weights(i) = s.weight;
    }
    return data;
}

// Full-set weighted MAE in transformed space, evaluated in chunks.
double dataset_mae(const RegressionModel& m, const TrainingData& data) {
    const Eigen::Index n = data.targets.size();
    const Eigen::Index chunk = 4096;
    double num = 0, den = 0;
    Activations act;
    for (Eigen::Index start = 0; start < n; start += chunk) {
        const Eigen::Index b = std::min(chunk, n - start);
        forward_batch(m, data.arch_in.middleRows(start, b), data.desc_in.middleRows(start, b), act);
        for (Eigen::Index i = 0; i < b; ++i) {
            const double w = data.weights(start + i);
            num += w * std::abs(act.z(i) - data.targets(start + i));
            den += w;
        }
    }
    return num / den;
}

}  // namespace

TrainReport train(RegressionModel& m, const SampleSet& T) {
    m.config.validate();
    if (T.samples.empty()) {
        throw DomainError("training set must contain at least one sample");
    }

    fit_normalization(m, T);
    const TrainingData data = assemble(m, T);
    const Eigen::Index n = data.targets.size();

    auto adam_m = zero_like(m.layers);
    auto adam_v = zero_like(m.layers);
    auto grads = zero_like(m.layers);
    long step = 0;

    TrainReport report;
    report.epoch_mae.reserve(m.config.epochs + 1);
    report.epoch_mae.push_back(dataset_mae(m, data));

    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::mt19937_64 rng(splitmix64(m.config.seed ^ 0x7ea1ull));

    const Eigen::Index batch = m.config.batch_size;
    Eigen::MatrixXd arch_buf(batch, data.arch_in.cols());
    Eigen::MatrixXd desc_buf(batch, data.desc_in.cols());
    Eigen::VectorXd t_buf(batch), w_buf(batch);
    Activations act;

    for (int epoch = 1; epoch <= m.config.epochs; ++epoch) {
        std::shuffle(perm.begin(), perm.end(), rng);
        for (Eigen::Index start = 0; start < n; start += batch) {
            const Eigen::Index b = std::min(batch, n - start);
            for (Eigen::Index i = 0; i < b; ++i) {
                const Eigen::Index src = perm[start + i];
                arch_buf.row(i) = data.arch_in.row(src);
                desc_buf.row(i) = data.desc_in.row(src);
                t_buf(i) = data.targets(src);
                w_buf(i) = data.weights(src);
            }
            const auto arch_view = arch_buf.topRows(b);
            const auto desc_view = desc_buf.topRows(b);
            forward_batch(m, arch_view, desc_view, act);

            // weighted smoothed-L1: dL/dz_i = w_i e_i / (s_i * sum_w)
            const double batch_weight = w_buf.head(b).sum();
            Eigen::VectorXd dz(b);
            for (Eigen::Index i = 0; i < b; ++i) {
                const double e = act.z(i) - t_buf(i);
                dz(i) = w_buf(i) * e / (smoothed_abs(e) * batch_weight);
            }
            backward_batch(m, arch_view, desc_view, act, dz, grads);

            ++step;
            const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
            const double lr = m.config.learning_rate;
            auto update = [&](auto& theta, const auto& g, auto& m1, auto& m2) {
                m1 = kAdamBeta1 * m1 + (1.0 - kAdamBeta1) * g;
                m2 = kAdamBeta2 * m2 + (1.0 - kAdamBeta2) * g.cwiseAbs2();
                theta.array() -= lr * (m1.array() / bc1) / ((m2.array() / bc2).sqrt() + kAdamEpsilon);
            };
            for (std::size_t l = 0; l < m.layers.size(); ++l) {
                update(m.layers[l].weights, grads[l].weights, adam_m[l].weights, adam_v[l].weights);
                update(m.layers[l].bias, grads[l].bias, adam_m[l].bias, adam_v[l].bias);
            }
        }

        const double mae = dataset_mae(m, data);
        if (!std::isfinite(mae)) {
            throw TrainingDivergenceError("training loss became non-finite", epoch);
        }
        report.epoch_mae.push_back(mae);
    }

    report.epochs_run = m.config.epochs;
    report.final_loss = report.epoch_mae.back();
    return report;
}

double gradient_check(const RegressionModel& m, const CheckSample& sample) {
    RegressionModel model = m;

    Eigen::MatrixXd arch_in(1, kNumEdges * kNumOpKinds);
    arch_in.row(0) = encoding_row(sample.enc);
    Eigen::MatrixXd desc_in(1, model.config.descriptor_dim);
    desc_in.row(0) =
        model.desc_norm.apply(descriptor_features(sample.desc, model.config.descriptor_dim));
    const double target = model.target.apply(sample.latency_ms);

    auto loss_of = [&]() {
        Activations act;
        forward_batch(model, arch_in, desc_in, act);
        return smoothed_abs(act.z(0) - target);
    };

    // analytic gradients
    Activations act;
    forward_batch(model, arch_in, desc_in, act);
    const double e = act.z(0) - target;
    Eigen::VectorXd dz(1);
    dz(0) = e / smoothed_abs(e);
    auto grads = zero_like(model.layers);
    backward_batch(model, arch_in, desc_in, act, dz, grads);

    const double h = 1e-5;
    double max_rel = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto check_block = [&](Eigen::MatrixXd& theta, const Eigen::MatrixXd& analytic) {
            for (Eigen::Index i = 0; i < theta.size(); ++i) {
                const double orig = theta.data()[i];
                theta.data()[i] = orig + h;
                const double lp = loss_of();
                theta.data()[i] = orig - h;
                const double lm = loss_of();
                theta.data()[i] = orig;
                const double numeric = (lp - lm) / (2.0 * h);
                const double ga = analytic.data()[i];
                const double rel =
                    std::abs(ga - numeric) / std::max({std::abs(ga), std::abs(numeric), 1e-3});
                max_rel = std::max(max_rel, rel);
            }
        };
        check_block(model.layers[l].weights, grads[l].weights);
        for (Eigen::Index i = 0; i < model.layers[l].bias.size(); ++i) {
            const double orig = model.layers[l].bias(i);
            model.layers[l].bias(i) = orig + h;
            const double lp = loss_of();
            model.layers[l].bias(i) = orig - h;
            const double lm = loss_of();
            model.layers[l].bias(i) = orig;
            const double numeric = (lp - lm) / (2.0 * h);
            const double ga = grads[l].bias(i);
            const double rel =
                std::abs(ga - numeric) / std::max({std::abs(ga), std::abs(numeric), 1e-3});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

double loss_gradient_norm(const RegressionModel& m, const CheckSample& sample) {
    Eigen::MatrixXd arch_in(1, kNumEdges * kNumOpKinds);
    arch_in.row(0) = encoding_row(sample.enc);
    Eigen::MatrixXd desc_in(1, m.config.descriptor_dim);
    desc_in.row(0) = m.desc_norm.apply(descriptor_features(sample.desc, m.config.descriptor_dim));

    Activations act;
    forward_batch(m, arch_in, desc_in, act);
    const double e = act.z(0) - m.target.apply(sample.latency_ms);
    Eigen::VectorXd dz(1);
    dz(0) = e / smoothed_abs(e);
    auto grads = zero_like(m.layers);
    backward_batch(m, arch_in, desc_in, act, dz, grads);

    double sq = 0;
    for (const auto& g : grads) {
        sq += g.weights.squaredNorm() + g.bias.squaredNorm();
    }
    return std::sqrt(sq);
}

void save_model(const RegressionModel& m, const std::filesystem::path& path) {
    nlohmann::json j;
    j["config"] = {
        {"arch_hidden", m.config.arch_hidden},
        {"arch_projection_dim", m.config.arch_projection_dim},
        {"joint_hidden", m.config.joint_hidden},
        {"descriptor_dim", m.config.descriptor_dim},
        {"learning_rate", m.config.learning_rate},
        {"epochs", m.config.epochs},
        {"batch_size", m.config.batch_size},
        {"seed", m.config.seed},
        {"log_target", m.config.log_target},
    };
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : m.layers) {
        nlohmann::json jl;
        jl["rows"] = l.weights.rows();
        jl["cols"] = l.weights.cols();
        std::vector<double> w(l.weights.size());
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
                w[static_cast<std::size_t>(r) * l.weights.cols() + c] = l.weights(r, c);
            }
        }
        jl["weights"] = std::move(w);
        jl["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    j["descriptor_norm"] = {
        {"mean", std::vector<double>(m.desc_norm.mean.data(),
                                     m.desc_norm.mean.data() + m.desc_norm.mean.size())},
        {"stdev", std::vector<double>(m.desc_norm.stdev.data(),
                                      m.desc_norm.stdev.data() + m.desc_norm.stdev.size())},
    };
    j["target_transform"] = {
        {"log_space", m.target.log_space}, {"mean", m.target.mean}, {"stdev", m.target.stdev}};

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
}

RegressionModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid model JSON: ") + e.what());
    }

    try {
        ModelConfig cfg;
        const auto& jc = j.at("config");
        cfg.arch_hidden = jc.at("arch_hidden").get<std::array<int, 2>>();
        cfg.arch_projection_dim = jc.at("arch_projection_dim").get<int>();
        cfg.joint_hidden = jc.at("joint_hidden").get<std::array<int, 2>>();
        cfg.descriptor_dim = jc.at("descriptor_dim").get<int>();
        cfg.learning_rate = jc.at("learning_rate").get<double>();
        cfg.epochs = jc.at("epochs").get<int>();
        cfg.batch_size = jc.at("batch_size").get<int>();
        cfg.seed = jc.at("seed").get<std::uint64_t>();
        cfg.log_target = jc.at("log_target").get<bool>();

        RegressionModel m = init_model(cfg);
        const auto& layers = j.at("layers");
        if (layers.size() != m.layers.size()) {
            throw ValidationError("model file has wrong layer count");
        }
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            const auto& jl = layers[l];
            const Eigen::Index rows = jl.at("rows").get<Eigen::Index>();
            const Eigen::Index cols = jl.at("cols").get<Eigen::Index>();
            if (rows != m.layers[l].weights.rows() || cols != m.layers[l].weights.cols()) {
                throw ValidationError("layer " + std::to_string(l) +
                                      " shape does not match the config");
            }
            const auto w = jl.at("weights").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(w.size()) != rows * cols) {
                throw ValidationError("layer " + std::to_string(l) + " has wrong weight count");
            }
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (Eigen::Index c = 0; c < cols; ++c) {
                    m.layers[l].weights(r, c) = w[static_cast<std::size_t>(r) * cols + c];
                }
            }
            const auto b = jl.at("bias").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(b.size()) != m.layers[l].bias.size()) {
                throw ValidationError("layer " + std::to_string(l) + " has wrong bias count");
            }
            for (Eigen::Index i = 0; i < m.layers[l].bias.size(); ++i) m.layers[l].bias(i) = b[i];
        }
        const auto& jn = j.at("descriptor_norm");
        const auto mean = jn.at("mean").get<std::vector<double>>();
        const auto stdev = jn.at("stdev").get<std::vector<double>>();
        if (static_cast<int>(mean.size()) != cfg.descriptor_dim ||
            static_cast<int>(stdev.size()) != cfg.descriptor_dim) {
            throw ValidationError("descriptor normalization width does not match the config");
        }
        for (int i = 0; i < cfg.descriptor_dim; ++i) {
            m.desc_norm.mean(i) = mean[i];
            m.desc_norm.stdev(i) = stdev[i];
        }
        const auto& jt = j.at("target_transform");
        m.target.log_space = jt.at("log_space").get<bool>();
        m.target.mean = jt.at("mean").get<double>();
        m.target.stdev = jt.at("stdev").get<double>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid model JSON: ") + e.what());
    }
}

}  // namespace maple
