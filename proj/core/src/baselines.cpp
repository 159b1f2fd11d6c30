#include "asen/baselines.hpp"

#include "asen/detail/ops.hpp"
#include "asen/error.hpp"
#include "asen/gradcheck.hpp"

#include <set>
#include <string>

namespace asen::baselines {

std::string_view kind_name(LinearKind kind) noexcept { return kind == LinearKind::logistic ? "logistic" : "svm"; }

void LinearConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("linear learning rate must be positive");
    if (!(l2 >= 0.0)) throw ConfigError("linear L2 strength must be >= 0");
    train::LoopConfig{max_epochs, patience, 0.0, batch_size, seed, early_stopping}.validate();
}

train::ParamSpans LinearModel::parameters() {
    return {{weights.data(), static_cast<std::size_t>(weights.size())},
            {bias.data(), static_cast<std::size_t>(bias.size())}};
}

train::GradSpans LinearGradients::spans() const {
    return {{weights.data(), static_cast<std::size_t>(weights.size())},
            {bias.data(), static_cast<std::size_t>(bias.size())}};
}

LinearModel zero_linear(LinearKind kind, std::size_t num_classes, std::size_t dimension) {
    LinearModel m;
    m.kind = kind;
    m.weights = Matrix::Zero(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(dimension));
    m.bias = RowVector::Zero(static_cast<Eigen::Index>(num_classes));
    return m;
}

namespace {

Matrix raw_scores(const LinearModel& model, const Matrix& x) {
    if (x.cols() != model.weights.cols()) {
        throw DimensionError("linear model expects " + std::to_string(model.weights.cols()) + " features, got " +
                             std::to_string(x.cols()));
    }
    const Matrix wt = model.weights.transpose();
    return detail::affine(x, wt, model.bias);
}

struct DataTerm {
    double loss_sum = 0.0;
    std::size_t correct = 0;
    Matrix d_scores; // d(mean loss) / d(scores)
};

DataTerm data_term(const LinearModel& model, const Matrix& x, std::span<const int> labels, bool want_grad) {
    const Matrix s = raw_scores(model, x);
    const double inv_m = 1.0 / static_cast<double>(x.rows());
    DataTerm out;
    if (model.kind == LinearKind::logistic) {
        Matrix probs;
        out.loss_sum = detail::softmax_cross_entropy(s, labels, probs, out.correct);
        if (want_grad) {
            for (Eigen::Index r = 0; r < probs.rows(); ++r) probs(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
            out.d_scores = probs * inv_m;
        }
        return out;
    }
    detail::check_labels(labels, s.rows(), s.cols());
    if (want_grad) out.d_scores = Matrix::Zero(s.rows(), s.cols());
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const int y = labels[static_cast<std::size_t>(r)];
        if (detail::argmax(s.row(r)) == y) ++out.correct;
        for (Eigen::Index c = 0; c < s.cols(); ++c) {
            const double sign = c == y ? 1.0 : -1.0;
            const double margin = 1.0 - sign * s(r, c);
            if (margin > 0.0) {
                out.loss_sum += margin;
                if (want_grad) out.d_scores(r, c) = -sign * inv_m;
            }
        }
    }
    return out;
}

void require_two_classes(const mlp::LabeledMatrix& set) {
    const std::set<int> present(set.y.begin(), set.y.end());
    if (present.size() < 2) {
        throw DataError("linear baseline needs at least 2 classes in the training set, got " +
                        std::to_string(present.size()));
    }
}

class LinearObjective final : public train::Objective {
public:
    LinearObjective(LinearModel& model, const mlp::LabeledMatrix& train_set, const mlp::LabeledMatrix& val_set)
        : model_(model), train_(train_set), val_(val_set) {}

    train::ParamSpans parameters() override { return model_.parameters(); }
    std::size_t train_rows() const override { return static_cast<std::size_t>(train_.x.rows()); }

    train::BatchStats train_batch(std::span<const std::size_t> rows, Rng&) override {
        Matrix xb(static_cast<Eigen::Index>(rows.size()), train_.x.cols());
        std::vector<int> yb(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            xb.row(static_cast<Eigen::Index>(i)) = train_.x.row(static_cast<Eigen::Index>(rows[i]));
            yb[i] = train_.y[rows[i]];
        }
        auto [loss, grads] = objective_and_gradients(model_, xb, yb);
        grads_ = std::move(grads);
        const auto term = data_term(model_, xb, yb, false);
        return {loss * static_cast<double>(rows.size()), term.correct};
    }

    train::GradSpans gradients() const override { return grads_.spans(); }

    train::EvalStats evaluate_validation() override {
        const auto term = data_term(model_, val_.x, val_.y, false);
        const auto n = static_cast<double>(val_.x.rows());
        return {term.loss_sum / n, static_cast<double>(term.correct) / n};
    }

private:
    LinearModel& model_;
    const mlp::LabeledMatrix& train_;
    const mlp::LabeledMatrix& val_;
    LinearGradients grads_;
};

std::pair<LinearModel, train::TrainReport> train_linear(LinearKind kind, const mlp::LabeledMatrix& train_set,
                                                        const mlp::LabeledMatrix& val_set, std::size_t num_classes,
                                                        const LinearConfig& config) {
    config.validate();
    if (train_set.x.rows() == 0 || val_set.x.rows() == 0) throw DataError("linear baseline: empty train or validation set");
    require_two_classes(train_set);
    LinearModel model = zero_linear(kind, num_classes, static_cast<std::size_t>(train_set.x.cols()));
    model.config = config;
    LinearObjective objective(model, train_set, val_set);
    train::Sgd sgd(config.learning_rate);
    const train::LoopConfig loop{config.max_epochs, config.patience, 1e-6, config.batch_size, config.seed,
                                 config.early_stopping};
    auto report = train::fit(objective, sgd, loop);
    return {std::move(model), std::move(report)};
}

} // namespace

std::pair<double, LinearGradients> objective_and_gradients(const LinearModel& model, const Matrix& x,
                                                           std::span<const int> labels) {
    if (x.rows() == 0) throw DataError("linear objective: empty batch");
    const auto term = data_term(model, x, labels, true);
    const double penalty = 0.5 * model.config.l2 * model.weights.squaredNorm();
    LinearGradients g;
    g.weights = term.d_scores.transpose() * x + model.config.l2 * model.weights;
    g.bias = term.d_scores.colwise().sum();
    return {term.loss_sum / static_cast<double>(x.rows()) + penalty, std::move(g)};
}

double objective(const LinearModel& model, const Matrix& x, std::span<const int> labels) {
    const auto term = data_term(model, x, labels, false);
    return term.loss_sum / static_cast<double>(x.rows()) + 0.5 * model.config.l2 * model.weights.squaredNorm();
}

std::pair<LinearModel, train::TrainReport> train_logreg(const mlp::LabeledMatrix& train_set,
                                                        const mlp::LabeledMatrix& val_set, std::size_t num_classes,
                                                        const LinearConfig& config) {
    return train_linear(LinearKind::logistic, train_set, val_set, num_classes, config);
}

std::pair<LinearModel, train::TrainReport> train_linear_svm(const mlp::LabeledMatrix& train_set,
                                                            const mlp::LabeledMatrix& val_set,
                                                            std::size_t num_classes, const LinearConfig& config) {
    return train_linear(LinearKind::svm, train_set, val_set, num_classes, config);
}

LinearPrediction predict_linear(const LinearModel& model, const Matrix& x) {
    LinearPrediction out;
    out.scores = raw_scores(model, x);
    out.labels.resize(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < out.scores.rows(); ++r) {
        out.labels[static_cast<std::size_t>(r)] = detail::argmax(out.scores.row(r));
    }
    if (model.kind == LinearKind::logistic) detail::softmax_rows(out.scores);
    return out;
}

double linear_gradient_check(const LinearModel& model, const Matrix& x, std::span<const int> labels, double eps) {
    LinearModel probe = model;
    const auto analytic = objective_and_gradients(probe, x, labels).second;
    return max_relative_gradient_error(probe.parameters(), analytic.spans(),
                                       [&] { return objective(probe, x, labels); }, eps);
}

} // namespace asen::baselines
