#pragma once

// Multilayer perceptron base learner: ReLU hidden layers with inverted
// dropout, softmax output, fused softmax/cross-entropy loss, reverse-mode
// gradients and an Adam-driven training loop with early stopping.

#include "asen/linalg.hpp"
#include "asen/random.hpp"
#include "asen/training.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace asen::mlp {

inline constexpr std::size_t kMinHiddenLayers = 1;
inline constexpr std::size_t kMaxHiddenLayers = 3;
inline constexpr std::size_t kMinWidth = 10;
inline constexpr std::size_t kMaxWidth = 100;

struct MlpConfig {
    std::size_t input_size = 11;
    std::vector<std::size_t> hidden{64};
    double dropout = 0.0; // applied after every hidden activation
    std::size_t num_classes = 6;
    std::uint64_t seed = 0;

    /// Throws ConfigError when outside 1-3 layers, widths 10-100, dropout [0, 1).
    void validate() const;
    bool operator==(const MlpConfig&) const = default;
};

/// weights are (fan_in x fan_out); a batch X maps to X * weights + bias.
struct DenseLayer {
    Matrix weights;
    RowVector bias;

    bool operator==(const DenseLayer& o) const { return weights == o.weights && bias == o.bias; }
};

struct MlpModel {
    MlpConfig config;
    std::vector<DenseLayer> layers;

    std::size_t parameter_count() const noexcept;
    train::ParamSpans parameters();
    bool operator==(const MlpModel&) const = default;
};

/// He-normal hidden layers (std sqrt(2/fan_in)), std sqrt(1/fan_in) output
/// layer, zero biases. Deterministic in config.seed.
MlpModel init_mlp(const MlpConfig& config);

enum class Mode { train, infer };

/// Class-probability rows. In train mode dropout masks come from
/// make_rng(dropout_seed); infer mode ignores the seed.
Matrix forward(const MlpModel& model, const Matrix& x, Mode mode = Mode::infer, std::uint64_t dropout_seed = 0);

struct Gradients {
    std::vector<DenseLayer> layers;
    train::GradSpans spans() const;
};

struct LossAndGradients {
    double loss = 0.0; // mean cross-entropy
    Gradients gradients;
    std::size_t correct = 0;
};

/// Mean cross-entropy and its gradient, dropout off.
LossAndGradients loss_and_gradients(const MlpModel& model, const Matrix& x, std::span<const int> labels);
/// Same with dropout masks drawn from `dropout_rng`.
LossAndGradients loss_and_gradients(const MlpModel& model, const Matrix& x, std::span<const int> labels,
                                    Rng& dropout_rng);

double mean_loss(const MlpModel& model, const Matrix& x, std::span<const int> labels);

struct LabeledMatrix {
    Matrix x;
    std::vector<int> y;
};

/// Returns the model holding the best-validation weights and the epoch log.
std::pair<MlpModel, train::TrainReport> train_mlp(MlpModel model, const LabeledMatrix& train_set,
                                                  const LabeledMatrix& val_set, const train::TrainConfig& config);

/// Max relative error between analytic gradients and central differences.
/// Evaluated in inference mode (dropout off); throws ConfigError for eps <= 0.
double numeric_gradient_check(const MlpModel& model, const Matrix& x, std::span<const int> labels, double eps = 1e-5);

/// Argmax labels of inference-mode probabilities.
std::vector<int> predict_labels(const MlpModel& model, const Matrix& x);

} // namespace asen::mlp
