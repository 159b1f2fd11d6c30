#include "asen/training.hpp"

#include "asen/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace asen::train {

namespace {

void check_shapes(const ParamSpans& params, const GradSpans& grads) {
    if (params.size() != grads.size()) throw DimensionError("optimizer: parameter/gradient tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size()) throw DimensionError("optimizer: tensor size mismatch");
        for (std::size_t k = 0; k < grads[i].size(); ++k) {
            if (!std::isfinite(grads[i][k])) {
                throw NumericError("non-finite gradient in tensor " + std::to_string(i) + " at element " +
                                   std::to_string(k));
            }
        }
    }
}

} // namespace

void Adam::step(const ParamSpans& params, const GradSpans& grads) {
    check_shapes(params, grads);
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw DimensionError("Adam: parameter layout changed between steps");
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t k = 0; k < params[i].size(); ++k) {
            const double g = grads[i][k];
            m[k] = b1 * m[k] + (1.0 - b1) * g;
            v[k] = b2 * v[k] + (1.0 - b2) * g * g;
            const double mhat = m[k] / c1;
            const double vhat = v[k] / c2;
            params[i][k] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
        }
    }
}

void Sgd::step(const ParamSpans& params, const GradSpans& grads) {
    check_shapes(params, grads);
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t k = 0; k < params[i].size(); ++k) params[i][k] -= lr_ * grads[i][k];
    }
}

void LoopConfig::validate() const {
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(min_delta >= 0.0)) throw ConfigError("min_delta must be >= 0");
}

bool EarlyStopping::update(int epoch, double val_loss) {
    if (val_loss < best_ - min_delta_) {
        best_ = val_loss;
        best_epoch_ = epoch;
        stale_ = 0;
        return true;
    }
    ++stale_;
    return false;
}

TrainReport fit(Objective& objective, Optimizer& optimizer, const LoopConfig& config) {
    config.validate();
    const std::size_t n = objective.train_rows();
    if (n == 0) throw DataError("training set is empty");

    Rng rng = make_rng(config.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    auto params = objective.parameters();
    auto snapshot = [&params] {
        std::vector<std::vector<double>> copy;
        for (const auto& p : params) copy.emplace_back(p.begin(), p.end());
        return copy;
    };
    auto best = snapshot();

    EarlyStopping stopper(config.patience, config.min_delta);
    TrainReport report;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t len = std::min(config.batch_size, n - start);
            const auto stats = objective.train_batch(std::span(order).subspan(start, len), rng);
            if (!std::isfinite(stats.loss_sum)) {
                throw DivergenceError("training loss became non-finite in epoch " + std::to_string(epoch), epoch);
            }
            optimizer.step(params, objective.gradients());
            loss_sum += stats.loss_sum;
            correct += stats.correct;
        }
        const EvalStats val = objective.evaluate_validation();
        if (!std::isfinite(val.loss)) {
            throw DivergenceError("validation loss became non-finite in epoch " + std::to_string(epoch), epoch);
        }
        report.epochs.push_back({epoch, loss_sum / static_cast<double>(n),
                                 static_cast<double>(correct) / static_cast<double>(n), val.loss, val.accuracy});
        report.stopped_epoch = epoch;
        if (stopper.update(epoch, val.loss) && config.early_stopping) best = snapshot();
        if (config.early_stopping && stopper.should_stop()) break;
    }

    report.best_epoch = stopper.best_epoch();
    if (!config.early_stopping) return report;
    for (std::size_t i = 0; i < params.size(); ++i) std::copy(best[i].begin(), best[i].end(), params[i].begin());
    return report;
}

} // namespace asen::train
