#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "maple/dataset.hpp"
#include "maple/hwcounters.hpp"
#include "maple/search_space.hpp"

namespace maple {

// Dual-stream regression model: the 30-value one-hot encoding runs through
// two hidden layers down to a 32-value projection, which is concatenated with
// the normalized hardware descriptor and run through two further hidden
// layers to a scalar latency.

struct ModelConfig {
    std::array<int, 2> arch_hidden{64, 64};
    int arch_projection_dim = 32;  // fixed by the model family
    std::array<int, 2> joint_hidden{128, 128};
    int descriptor_dim = kDescriptorLength;  // 165; 150 drops the latency block
    double learning_rate = 1e-3;
    int epochs = 400;
    int batch_size = 64;
    std::uint64_t seed = 0;
    bool log_target = true;  // train on z-scored log-latency

    void validate() const;
};

struct TargetTransform {
    bool log_space = true;
    double mean = 0;
    double stdev = 1;

    double apply(double y_ms) const;
    double invert(double z) const;
};

// Per-dimension statistics on log1p-transformed descriptor features.
struct DescriptorNormalization {
    Eigen::VectorXd mean;
    Eigen::VectorXd stdev;

    Eigen::RowVectorXd apply(const Eigen::RowVectorXd& raw) const;
};

struct DenseLayer {
    Eigen::MatrixXd weights;  // in x out
    Eigen::VectorXd bias;     // out
};

struct RegressionModel {
    ModelConfig config;
    std::vector<DenseLayer> layers;  // 6: arch stream (3) then joint stream (3)
    DescriptorNormalization desc_norm;
    TargetTransform target;

    std::size_t parameter_count() const;
};

RegressionModel init_model(const ModelConfig& cfg);

// Raw descriptor features for the configured input width (before log1p).
Eigen::RowVectorXd descriptor_features(const HardwareDescriptor& d, int dim);

double forward(const RegressionModel& m, const ArchEncoding& enc, const HardwareDescriptor& desc);

std::vector<double> predict_batch(
    const RegressionModel& m,
    const std::vector<std::pair<ArchEncoding, const HardwareDescriptor*>>& pairs);

struct TrainReport {
    std::vector<double> epoch_mae;  // [0] is the untrained model's loss
    double final_loss = 0;
    int epochs_run = 0;
};

// Minimizes the weighted mean absolute error over T in transformed target
// space with mini-batch Adam; deterministic in config.seed. Refits the
// feature/target normalization from T before the first step.
TrainReport train(RegressionModel& m, const SampleSet& training_set);

struct CheckSample {
    ArchEncoding enc;
    HardwareDescriptor desc;
    double latency_ms = 1.0;
};

// Max relative disagreement between analytic gradients and central finite
// differences (step 1e-5) over every parameter, on the smoothed
// absolute-error loss.
double gradient_check(const RegressionModel& m, const CheckSample& sample);

// Euclidean norm of the analytic gradient at the sample; zero at a point
// where the prediction matches the target.
double loss_gradient_norm(const RegressionModel& m, const CheckSample& sample);

void save_model(const RegressionModel& m, const std::filesystem::path& path);
RegressionModel load_model(const std::filesystem::path& path);

}  // namespace maple
