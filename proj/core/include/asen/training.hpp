#pragma once

// Optimizers, early stopping and the shared mini-batch training loop used by
// the base learners, the attention head and the linear baselines.

#include "asen/random.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace asen::train {

using ParamSpans = std::vector<std::span<double>>;
using GradSpans = std::vector<std::span<const double>>;

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Optimizer {
public:
    virtual ~Optimizer() = default;
    /// Updates `params` in place. Throws NumericError on a non-finite gradient.
    virtual void step(const ParamSpans& params, const GradSpans& grads) = 0;
};

/// Adam with bias-corrected moments.
class Adam final : public Optimizer {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    void step(const ParamSpans& params, const GradSpans& grads) override;

    std::int64_t steps() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return config_; }

private:
    AdamConfig config_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::int64_t t_ = 0;
};

/// Plain (sub)gradient descent.
class Sgd final : public Optimizer {
public:
    explicit Sgd(double learning_rate) : lr_(learning_rate) {}
    void step(const ParamSpans& params, const GradSpans& grads) override;

private:
    double lr_;
};

struct LoopConfig {
    int max_epochs = 100;
    int patience = 3;
    double min_delta = 1e-6; // improvement must beat the best loss by more than this
    std::size_t batch_size = 32;
    std::uint64_t seed = 0; // shuffling and dropout stream
    bool early_stopping = true; // false: run all epochs and keep the final weights

    void validate() const;
};

/// Adam-driven training configuration for networks.
struct TrainConfig {
    AdamConfig adam;
    LoopConfig loop;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int stopped_epoch = 0;
    int best_epoch = 0;

    bool operator==(const TrainReport&) const = default;
};

/// Tracks the best validation loss and counts epochs without improvement.
class EarlyStopping {
public:
    EarlyStopping(int patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

    /// Records one epoch's validation loss; true when it is a new best.
    bool update(int epoch, double val_loss);
    bool should_stop() const noexcept { return stale_ >= patience_; }

    int best_epoch() const noexcept { return best_epoch_; }
    double best_loss() const noexcept { return best_; }

private:
    int patience_;
    double min_delta_;
    double best_ = std::numeric_limits<double>::infinity();
    int best_epoch_ = 0;
    int stale_ = 0;
};

struct BatchStats {
    double loss_sum = 0.0;
    std::size_t correct = 0;
};

struct EvalStats {
    double loss = 0.0; // mean
    double accuracy = 0.0;
};

/// What the training loop optimizes.
class Objective {
public:
    virtual ~Objective() = default;

    virtual ParamSpans parameters() = 0;
    virtual std::size_t train_rows() const = 0;
    /// Forward/backward on the given training rows; afterwards gradients()
    /// holds the batch-mean gradient. Returns summed loss and hit count.
    virtual BatchStats train_batch(std::span<const std::size_t> rows, Rng& rng) = 0;
    virtual GradSpans gradients() const = 0;
    /// Mean loss and accuracy on the validation set, inference mode.
    virtual EvalStats evaluate_validation() = 0;
};

/// Epoch loop with seeded shuffling and early stopping. On return the
/// objective's parameters hold the best-validation snapshot (the final
/// weights when early stopping is off). Throws
/// DivergenceError when a loss turns non-finite.
TrainReport fit(Objective& objective, Optimizer& optimizer, const LoopConfig& config);

} // namespace asen::train
