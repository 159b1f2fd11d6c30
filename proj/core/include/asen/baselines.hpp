#pragma once

// Linear comparison models: multinomial logistic regression and a
// one-vs-rest linear SVM, both trained by mini-batch gradient descent.

#include "asen/linalg.hpp"
#include "asen/mlp.hpp"
#include "asen/training.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace asen::baselines {

enum class LinearKind { logistic, svm };

std::string_view kind_name(LinearKind kind) noexcept;

struct LinearConfig {
    double learning_rate = 0.01;
    double l2 = 1e-4; // penalty (l2 / 2) * ||W||^2, bias excluded
    int max_epochs = 100;
    int patience = 3;
    std::size_t batch_size = 32;
    bool early_stopping = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct LinearModel {
    LinearKind kind = LinearKind::logistic;
    Matrix weights; // C x d
    RowVector bias; // C
    LinearConfig config;

    train::ParamSpans parameters();
    bool operator==(const LinearModel& o) const {
        return kind == o.kind && weights == o.weights && bias == o.bias;
    }
};

LinearModel zero_linear(LinearKind kind, std::size_t num_classes, std::size_t dimension);

/// Softmax regression, cross-entropy + L2. Throws DataError when the
/// training labels contain fewer than two classes.
std::pair<LinearModel, train::TrainReport> train_logreg(const mlp::LabeledMatrix& train_set,
                                                        const mlp::LabeledMatrix& val_set, std::size_t num_classes,
                                                        const LinearConfig& config);

/// One-vs-rest hinge loss + L2 via subgradient descent.
std::pair<LinearModel, train::TrainReport> train_linear_svm(const mlp::LabeledMatrix& train_set,
                                                            const mlp::LabeledMatrix& val_set,
                                                            std::size_t num_classes, const LinearConfig& config);

struct LinearPrediction {
    std::vector<int> labels;
    Matrix scores; // logistic: probabilities; svm: raw margins
};

LinearPrediction predict_linear(const LinearModel& model, const Matrix& x);

/// Mean data loss plus the L2 term; the quantity gradient descent minimizes.
double objective(const LinearModel& model, const Matrix& x, std::span<const int> labels);

struct LinearGradients {
    Matrix weights;
    RowVector bias;
    train::GradSpans spans() const;
};

std::pair<double, LinearGradients> objective_and_gradients(const LinearModel& model, const Matrix& x,
                                                           std::span<const int> labels);

/// Central-difference check of objective_and_gradients.
double linear_gradient_check(const LinearModel& model, const Matrix& x, std::span<const int> labels,
                             double eps = 1e-5);

} // namespace asen::baselines
