#include "asen/mlp.hpp"

#include "asen/detail/ops.hpp"
#include "asen/error.hpp"
#include "asen/gradcheck.hpp"

#include <cmath>
#include <string>

namespace asen::mlp {

void MlpConfig::validate() const {
    if (input_size < 1) throw ConfigError("MLP input size must be >= 1");
    if (num_classes < 2) throw ConfigError("MLP needs at least 2 output classes");
    if (hidden.size() < kMinHiddenLayers || hidden.size() > kMaxHiddenLayers) {
        throw ConfigError("MLP hidden layer count must be in [1, 3], got " + std::to_string(hidden.size()));
    }
    for (auto w : hidden) {
        if (w < kMinWidth || w > kMaxWidth) {
            throw ConfigError("MLP hidden width must be in [10, 100], got " + std::to_string(w));
        }
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("MLP dropout must be in [0, 1)");
}

std::size_t MlpModel::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

train::ParamSpans MlpModel::parameters() {
    train::ParamSpans out;
    for (auto& l : layers) {
        out.emplace_back(l.weights.data(), static_cast<std::size_t>(l.weights.size()));
        out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
    return out;
}

train::GradSpans Gradients::spans() const {
    train::GradSpans out;
    for (const auto& l : layers) {
        out.emplace_back(l.weights.data(), static_cast<std::size_t>(l.weights.size()));
        out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
    return out;
}

MlpModel init_mlp(const MlpConfig& config) {
    config.validate();
    MlpModel model;
    model.config = config;
    Rng rng = make_rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<std::size_t> sizes{config.input_size};
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(config.num_classes);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const auto fan_in = static_cast<Eigen::Index>(sizes[l]);
        const auto fan_out = static_cast<Eigen::Index>(sizes[l + 1]);
        const bool output = l + 2 == sizes.size();
        const double scale = std::sqrt((output ? 1.0 : 2.0) / static_cast<double>(fan_in));
        DenseLayer layer{Matrix(fan_in, fan_out), RowVector::Zero(fan_out)};
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = scale * gauss(rng);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

namespace {

struct ForwardCache {
    std::vector<Matrix> inputs; // input to each layer
    std::vector<Matrix> gates;  // d(activation)/d(pre-activation) per hidden layer, dropout folded in
    Matrix logits;
};

void check_input(const MlpModel& model, const Matrix& x) {
    if (static_cast<std::size_t>(x.cols()) != model.config.input_size) {
        throw DimensionError("MLP expects " + std::to_string(model.config.input_size) + " features, got " +
                             std::to_string(x.cols()));
    }
    if (!x.allFinite()) throw NumericError("MLP input contains non-finite values");
}

ForwardCache run(const MlpModel& model, const Matrix& x, Rng* dropout_rng) {
    check_input(model, x);
    ForwardCache cache;
    const double p = model.config.dropout;
    const bool drop = dropout_rng != nullptr && p > 0.0;
    const double keep = 1.0 - p;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Matrix act = x;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        Matrix z = detail::affine(act, model.layers[l].weights, model.layers[l].bias);
        cache.inputs.push_back(std::move(act));
        if (l + 1 == model.layers.size()) {
            cache.logits = std::move(z);
            break;
        }
        Matrix gate = (z.array() > 0.0).cast<double>();
        if (drop) {
            for (Eigen::Index i = 0; i < gate.size(); ++i) {
                const double u = unit(*dropout_rng);
                gate.data()[i] *= u < keep ? 1.0 / keep : 0.0;
            }
        }
        act = z.cwiseProduct(gate);
        cache.gates.push_back(std::move(gate));
    }
    return cache;
}

LossAndGradients backprop(const MlpModel& model, const Matrix& x, std::span<const int> labels, Rng* dropout_rng) {
    if (x.rows() == 0) throw DataError("loss_and_gradients: empty batch");
    ForwardCache cache = run(model, x, dropout_rng);
    Matrix probs;
    std::size_t correct = 0;
    const double total = detail::softmax_cross_entropy(cache.logits, labels, probs, correct);
    const double m = static_cast<double>(x.rows());

    Matrix delta = probs;
    for (Eigen::Index r = 0; r < delta.rows(); ++r) delta(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    delta /= m;

    LossAndGradients out;
    out.loss = total / m;
    out.correct = correct;
    out.gradients.layers.resize(model.layers.size());
    for (std::size_t l = model.layers.size(); l-- > 0;) {
        auto& g = out.gradients.layers[l];
        g.weights.noalias() = cache.inputs[l].transpose() * delta;
        g.bias = delta.colwise().sum();
        if (l > 0) {
            Matrix upstream = delta * model.layers[l].weights.transpose();
            delta = upstream.cwiseProduct(cache.gates[l - 1]);
        }
    }
    return out;
}

class MlpObjective final : public train::Objective {
public:
    MlpObjective(MlpModel& model, const LabeledMatrix& train_set, const LabeledMatrix& val_set)
        : model_(model), train_(train_set), val_(val_set) {}

    train::ParamSpans parameters() override { return model_.parameters(); }
    std::size_t train_rows() const override { return static_cast<std::size_t>(train_.x.rows()); }

    train::BatchStats train_batch(std::span<const std::size_t> rows, Rng& rng) override {
        Matrix xb(static_cast<Eigen::Index>(rows.size()), train_.x.cols());
        std::vector<int> yb(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            xb.row(static_cast<Eigen::Index>(i)) = train_.x.row(static_cast<Eigen::Index>(rows[i]));
            yb[i] = train_.y[rows[i]];
        }
        auto lg = backprop(model_, xb, yb, &rng);
        grads_ = std::move(lg.gradients);
        return {lg.loss * static_cast<double>(rows.size()), lg.correct};
    }

    train::GradSpans gradients() const override { return grads_.spans(); }

    train::EvalStats evaluate_validation() override {
        const ForwardCache cache = run(model_, val_.x, nullptr);
        Matrix probs;
        std::size_t correct = 0;
        const double total = detail::softmax_cross_entropy(cache.logits, val_.y, probs, correct);
        const auto n = static_cast<double>(val_.x.rows());
        return {total / n, static_cast<double>(correct) / n};
    }

private:
    MlpModel& model_;
    const LabeledMatrix& train_;
    const LabeledMatrix& val_;
    Gradients grads_;
};

} // namespace

Matrix forward(const MlpModel& model, const Matrix& x, Mode mode, std::uint64_t dropout_seed) {
    Rng rng = make_rng(dropout_seed);
    ForwardCache cache = run(model, x, mode == Mode::train ? &rng : nullptr);
    detail::softmax_rows(cache.logits);
    return std::move(cache.logits);
}

LossAndGradients loss_and_gradients(const MlpModel& model, const Matrix& x, std::span<const int> labels) {
    return backprop(model, x, labels, nullptr);
}

LossAndGradients loss_and_gradients(const MlpModel& model, const Matrix& x, std::span<const int> labels,
                                    Rng& dropout_rng) {
    return backprop(model, x, labels, &dropout_rng);
}

double mean_loss(const MlpModel& model, const Matrix& x, std::span<const int> labels) {
    const ForwardCache cache = run(model, x, nullptr);
    Matrix probs;
    std::size_t correct = 0;
    return detail::softmax_cross_entropy(cache.logits, labels, probs, correct) / static_cast<double>(x.rows());
}

std::pair<MlpModel, train::TrainReport> train_mlp(MlpModel model, const LabeledMatrix& train_set,
                                                  const LabeledMatrix& val_set, const train::TrainConfig& config) {
    model.config.validate();
    if (train_set.x.rows() == 0 || val_set.x.rows() == 0) throw DataError("train_mlp: empty train or validation set");
    MlpObjective objective(model, train_set, val_set);
    train::Adam adam(config.adam);
    auto report = train::fit(objective, adam, config.loop);
    return {std::move(model), std::move(report)};
}

double numeric_gradient_check(const MlpModel& model, const Matrix& x, std::span<const int> labels, double eps) {
    if (!(eps > 0.0)) throw ConfigError("gradient check step must be positive");
    MlpModel probe = model;
    const auto analytic = loss_and_gradients(probe, x, labels);
    return max_relative_gradient_error(probe.parameters(), analytic.gradients.spans(),
                                       [&] { return mean_loss(probe, x, labels); }, eps);
}

std::vector<int> predict_labels(const MlpModel& model, const Matrix& x) {
    const Matrix p = forward(model, x);
    std::vector<int> out(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index r = 0; r < p.rows(); ++r) out[static_cast<std::size_t>(r)] = detail::argmax(p.row(r));
    return out;
}

} // namespace asen::mlp
