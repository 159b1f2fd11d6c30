#include "asen/ensemble.hpp"

#include "asen/detail/ops.hpp"
#include "asen/detail/parallel.hpp"
#include "asen/error.hpp"
#include "asen/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace asen::ensemble {

void ArchitectureRanges::validate() const {
    if (min_layers < mlp::kMinHiddenLayers || max_layers > mlp::kMaxHiddenLayers || min_layers > max_layers) {
        throw ConfigError("architecture layer range must lie within [1, 3]");
    }
    if (min_width < mlp::kMinWidth || max_width > mlp::kMaxWidth || min_width > max_width) {
        throw ConfigError("architecture width range must lie within [10, 100]");
    }
    if (!(min_dropout >= 0.0 && max_dropout < 1.0 && min_dropout <= max_dropout)) {
        throw ConfigError("architecture dropout range must lie within [0, 1)");
    }
}

mlp::MlpConfig sample_architecture(const ArchitectureRanges& ranges, std::size_t input_size, std::size_t num_classes,
                                   std::uint64_t seed) {
    ranges.validate();
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> layers(ranges.min_layers, ranges.max_layers);
    std::uniform_int_distribution<std::size_t> width(ranges.min_width, ranges.max_width);
    std::uniform_real_distribution<double> dropout(ranges.min_dropout, ranges.max_dropout);

    mlp::MlpConfig cfg;
    cfg.input_size = input_size;
    cfg.num_classes = num_classes;
    cfg.hidden.resize(layers(rng));
    for (auto& w : cfg.hidden) w = width(rng);
    cfg.dropout = ranges.min_dropout == ranges.max_dropout ? ranges.min_dropout : dropout(rng);
    cfg.seed = derive_seed(seed, 1);
    cfg.validate();
    return cfg;
}

void PoolConfig::validate() const {
    if (num_learners < 2) throw ConfigError("pool needs at least 2 base learners");
    ranges.validate();
    train.loop.validate();
}

std::size_t BaseLearnerPool::input_size() const {
    if (learners.empty()) throw DataError("empty base-learner pool");
    return learners.front().model.config.input_size;
}

std::size_t BaseLearnerPool::num_classes() const {
    if (learners.empty()) throw DataError("empty base-learner pool");
    return learners.front().model.config.num_classes;
}

namespace {

mlp::LabeledMatrix take_rows(const mlp::LabeledMatrix& src, std::span<const std::size_t> rows) {
    mlp::LabeledMatrix out{Matrix(static_cast<Eigen::Index>(rows.size()), src.x.cols()), {}};
    out.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = src.x.row(static_cast<Eigen::Index>(rows[i]));
        out.y.push_back(src.y[rows[i]]);
    }
    return out;
}

double accuracy_of(const std::vector<int>& predicted, const std::vector<int>& truth) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
    return truth.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::size_t class_count(const mlp::LabeledMatrix& set) {
    return static_cast<std::size_t>(*std::max_element(set.y.begin(), set.y.end())) + 1;
}

BaseLearner train_learner(const mlp::LabeledMatrix& train_set, const mlp::LabeledMatrix& val_set,
                          const PoolConfig& config, std::size_t num_classes, std::uint64_t seed) {
    BaseLearner learner;
    learner.seed = seed;
    learner.bootstrap_seed = derive_seed(seed, 1);

    std::vector<std::size_t> all(static_cast<std::size_t>(train_set.x.rows()));
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto rows = data::bootstrap_sample(all, learner.bootstrap_seed);
    const auto boot = take_rows(train_set, rows);

    const auto arch = sample_architecture(config.ranges, static_cast<std::size_t>(train_set.x.cols()), num_classes,
                                          derive_seed(seed, 2));
    auto tc = config.train;
    tc.loop.seed = derive_seed(seed, 3);
    auto [model, report] = mlp::train_mlp(mlp::init_mlp(arch), boot, val_set, tc);
    learner.val_accuracy = accuracy_of(mlp::predict_labels(model, val_set.x), val_set.y);
    learner.model = std::move(model);
    learner.report = std::move(report);
    return learner;
}

} // namespace

BaseLearnerPool train_pool(const mlp::LabeledMatrix& train_set, const mlp::LabeledMatrix& val_set,
                           const PoolConfig& config) {
    config.validate();
    if (train_set.x.rows() == 0 || val_set.x.rows() == 0) throw DataError("train_pool: empty train or validation set");
    const std::size_t num_classes = config.num_classes != 0 ? config.num_classes
                                                            : std::max(class_count(train_set), class_count(val_set));

    BaseLearnerPool pool;
    pool.learners.resize(config.num_learners);
    detail::run_indexed(config.num_learners, config.threads, [&](std::size_t i) {
        std::uint64_t seed = derive_seed(config.master_seed, i);
        try {
            pool.learners[i] = train_learner(train_set, val_set, config, num_classes, seed);
        } catch (const NumericError&) {
            seed = derive_seed(seed, 0x5eedULL);
            pool.learners[i] = train_learner(train_set, val_set, config, num_classes, seed);
        }
    });
    return pool;
}

// ---------------------------------------------------------------------------

Eigen::Map<const Matrix> StackedPredictions::rows() const {
    return {values.data(), static_cast<Eigen::Index>(samples * learners), static_cast<Eigen::Index>(classes)};
}

Eigen::Map<const Matrix> StackedPredictions::sample(std::size_t s) const {
    return {values.data() + s * learners * classes, static_cast<Eigen::Index>(learners),
            static_cast<Eigen::Index>(classes)};
}

StackedPredictions stack_predictions(const BaseLearnerPool& pool, const Matrix& x) {
    StackedPredictions out;
    out.samples = static_cast<std::size_t>(x.rows());
    out.learners = pool.size();
    out.classes = pool.num_classes();
    out.values.resize(out.samples * out.learners * out.classes);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const Matrix p = mlp::forward(pool.learners[i].model, x);
        for (std::size_t s = 0; s < out.samples; ++s) {
            for (std::size_t c = 0; c < out.classes; ++c) {
                out.values[(s * out.learners + i) * out.classes + c] =
                    p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

train::ParamSpans AsenModel::parameters() {
    return {{weights.data(), static_cast<std::size_t>(weights.size())},
            {bias.data(), static_cast<std::size_t>(bias.size())},
            {attention.data(), static_cast<std::size_t>(attention.size())}};
}

train::GradSpans AsenGradients::spans() const {
    return {{weights.data(), static_cast<std::size_t>(weights.size())},
            {bias.data(), static_cast<std::size_t>(bias.size())},
            {attention.data(), static_cast<std::size_t>(attention.size())}};
}

AsenModel init_asen(std::size_t num_learners, std::size_t num_classes, std::uint64_t seed) {
    if (num_learners < 1 || num_classes < 2) throw ConfigError("attention head needs >= 1 learner and >= 2 classes");
    AsenModel m;
    m.num_learners = num_learners;
    m.num_classes = num_classes;
    const auto c = static_cast<Eigen::Index>(num_classes);
    const auto h = static_cast<Eigen::Index>(kAttentionWidth);
    m.weights.resize(c, h);
    m.bias = RowVector::Zero(h);
    m.attention.resize(h);
    Rng rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double w_scale = std::sqrt(2.0 / static_cast<double>(num_classes));
    for (Eigen::Index i = 0; i < m.weights.size(); ++i) m.weights.data()[i] = w_scale * gauss(rng);
    const double a_scale = std::sqrt(1.0 / static_cast<double>(kAttentionWidth));
    for (Eigen::Index i = 0; i < m.attention.size(); ++i) m.attention(i) = a_scale * gauss(rng);
    return m;
}

namespace {

void check_stack(const AsenModel& asen, const StackedPredictions& stacked) {
    if (stacked.learners != asen.num_learners || stacked.classes != asen.num_classes) {
        throw DimensionError("attention head expects " + std::to_string(asen.num_learners) + " x " +
                             std::to_string(asen.num_classes) + " stacked rows, got " +
                             std::to_string(stacked.learners) + " x " + std::to_string(stacked.classes));
    }
    if (stacked.values.size() != stacked.samples * stacked.learners * stacked.classes) {
        throw DimensionError("stacked prediction buffer has the wrong size");
    }
}

struct HeadPass {
    Matrix pre;       // (m*B) x 64
    Matrix hidden;    // (m*B) x 64
    Vector scores;    // m*B
    AsenOutput out;
};

HeadPass head_forward(const AsenModel& asen, const StackedPredictions& stacked) {
    check_stack(asen, stacked);
    const auto m = static_cast<Eigen::Index>(stacked.samples);
    const auto b = static_cast<Eigen::Index>(stacked.learners);
    const auto c = static_cast<Eigen::Index>(stacked.classes);
    const auto rows = stacked.rows();

    HeadPass pass;
    pass.pre = detail::affine(rows, asen.weights, asen.bias);
    pass.hidden = pass.pre.cwiseMax(0.0);
    pass.scores.resize(m * b);
    for (Eigen::Index r = 0; r < m * b; ++r) pass.scores(r) = detail::ordered_dot(pass.hidden.row(r), asen.attention.transpose());

    pass.out.attention.resize(m, b);
    pass.out.combined.resize(m, c);
    for (Eigen::Index s = 0; s < m; ++s) {
        auto w = pass.out.attention.row(s);
        w = pass.scores.segment(s * b, b).transpose();
        detail::softmax_inplace(w);
        auto q = pass.out.combined.row(s);
        q.setZero();
        for (Eigen::Index i = 0; i < b; ++i) q.noalias() += w(i) * rows.row(s * b + i);
    }
    pass.out.probabilities = pass.out.combined;
    detail::softmax_rows(pass.out.probabilities);
    if (!pass.out.probabilities.allFinite() || !pass.out.attention.allFinite()) {
        throw NumericError("attention head produced a non-finite value");
    }
    return pass;
}

StackedPredictions take_samples(const StackedPredictions& src, std::span<const std::size_t> rows) {
    StackedPredictions out;
    out.samples = rows.size();
    out.learners = src.learners;
    out.classes = src.classes;
    const std::size_t block = src.learners * src.classes;
    out.values.resize(rows.size() * block);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy_n(src.values.begin() + static_cast<std::ptrdiff_t>(rows[i] * block), block,
                    out.values.begin() + static_cast<std::ptrdiff_t>(i * block));
    }
    return out;
}

double head_mean_loss(const AsenModel& asen, const StackedPredictions& stacked, std::span<const int> labels,
                      std::size_t* correct_out = nullptr) {
    const auto pass = head_forward(asen, stacked);
    Matrix probs;
    std::size_t correct = 0;
    const double total = detail::softmax_cross_entropy(pass.out.combined, labels, probs, correct);
    if (correct_out) *correct_out = correct;
    return total / static_cast<double>(stacked.samples);
}

class AsenObjective final : public train::Objective {
public:
    AsenObjective(AsenModel& asen, StackedPredictions train_stack, std::vector<int> train_y,
                  StackedPredictions val_stack, std::vector<int> val_y)
        : asen_(asen), train_(std::move(train_stack)), train_y_(std::move(train_y)), val_(std::move(val_stack)),
          val_y_(std::move(val_y)) {}

    train::ParamSpans parameters() override { return asen_.parameters(); }
    std::size_t train_rows() const override { return train_.samples; }

    train::BatchStats train_batch(std::span<const std::size_t> rows, Rng&) override {
        const auto batch = take_samples(train_, rows);
        std::vector<int> y(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) y[i] = train_y_[rows[i]];
        auto lg = asen_loss_and_gradients(asen_, batch, y);
        grads_ = std::move(lg.gradients);
        return {lg.loss * static_cast<double>(rows.size()), lg.correct};
    }

    train::GradSpans gradients() const override { return grads_.spans(); }

    train::EvalStats evaluate_validation() override {
        std::size_t correct = 0;
        const double loss = head_mean_loss(asen_, val_, val_y_, &correct);
        return {loss, static_cast<double>(correct) / static_cast<double>(val_.samples)};
    }

private:
    AsenModel& asen_;
    StackedPredictions train_;
    std::vector<int> train_y_;
    StackedPredictions val_;
    std::vector<int> val_y_;
    AsenGradients grads_;
};

} // namespace

AsenOutput asen_forward(const AsenModel& asen, const StackedPredictions& stacked) {
    return head_forward(asen, stacked).out;
}

AsenLossAndGradients asen_loss_and_gradients(const AsenModel& asen, const StackedPredictions& stacked,
                                             std::span<const int> labels) {
    if (stacked.samples == 0) throw DataError("attention head: empty batch");
    const auto pass = head_forward(asen, stacked);
    const auto m = static_cast<Eigen::Index>(stacked.samples);
    const auto b = static_cast<Eigen::Index>(stacked.learners);
    const auto rows = stacked.rows();

    Matrix probs;
    AsenLossAndGradients out;
    const double total = detail::softmax_cross_entropy(pass.out.combined, labels, probs, out.correct);
    out.loss = total / static_cast<double>(m);

    const double inv_m = 1.0 / static_cast<double>(m);
    Matrix d_pre(m * b, static_cast<Eigen::Index>(kAttentionWidth));
    Vector d_attention = Vector::Zero(static_cast<Eigen::Index>(kAttentionWidth));
    for (Eigen::Index s = 0; s < m; ++s) {
        RowVector dq = probs.row(s);
        dq(labels[static_cast<std::size_t>(s)]) -= 1.0;
        dq *= inv_m;
        const auto w = pass.out.attention.row(s);
        Vector dw(b);
        for (Eigen::Index i = 0; i < b; ++i) dw(i) = rows.row(s * b + i).dot(dq);
        const double mean_dw = w.dot(dw.transpose());
        for (Eigen::Index i = 0; i < b; ++i) {
            const Eigen::Index r = s * b + i;
            const double d_score = w(i) * (dw(i) - mean_dw);
            d_attention += d_score * pass.hidden.row(r).transpose();
            d_pre.row(r) = (d_score * asen.attention.transpose()).array() * (pass.pre.row(r).array() > 0.0).cast<double>();
        }
    }
    out.gradients.weights.noalias() = rows.transpose() * d_pre;
    out.gradients.bias = d_pre.colwise().sum();
    out.gradients.attention = std::move(d_attention);
    return out;
}

double asen_gradient_check(const AsenModel& asen, const StackedPredictions& stacked, std::span<const int> labels,
                           double eps) {
    if (!(eps > 0.0)) throw ConfigError("gradient check step must be positive");
    AsenModel probe = asen;
    const auto analytic = asen_loss_and_gradients(probe, stacked, labels);
    return max_relative_gradient_error(probe.parameters(), analytic.gradients.spans(),
                                       [&] { return head_mean_loss(probe, stacked, labels); }, eps);
}

std::pair<AsenModel, train::TrainReport> train_asen(AsenModel asen, const BaseLearnerPool& pool,
                                                    const mlp::LabeledMatrix& train_set,
                                                    const mlp::LabeledMatrix& val_set,
                                                    const train::TrainConfig& config) {
    if (pool.size() != asen.num_learners || pool.num_classes() != asen.num_classes) {
        throw DimensionError("attention head shape does not match the pool");
    }
    if (train_set.x.rows() == 0 || val_set.x.rows() == 0) throw DataError("train_asen: empty train or validation set");
    AsenObjective objective(asen, stack_predictions(pool, train_set.x), train_set.y, stack_predictions(pool, val_set.x),
                            val_set.y);
    train::Adam adam(config.adam);
    auto report = train::fit(objective, adam, config.loop);
    return {std::move(asen), std::move(report)};
}

Prediction predict(const TrainedEnsemble& ensemble, const Matrix& raw) {
    if (static_cast<std::size_t>(raw.cols()) != ensemble.feature_names.size()) {
        throw DimensionError("ensemble expects " + std::to_string(ensemble.feature_names.size()) + " features, got " +
                             std::to_string(raw.cols()));
    }
    const Matrix z = data::apply_normalizer(ensemble.normalizer, raw);
    auto out = asen_forward(ensemble.asen, stack_predictions(ensemble.pool, z));
    Prediction p;
    p.labels.resize(static_cast<std::size_t>(out.probabilities.rows()));
    for (Eigen::Index r = 0; r < out.probabilities.rows(); ++r) {
        p.labels[static_cast<std::size_t>(r)] = detail::argmax(out.probabilities.row(r));
    }
    p.probabilities = std::move(out.probabilities);
    p.attention = std::move(out.attention);
    return p;
}

void EnsembleConfig::validate() const {
    pool.validate();
    asen.loop.validate();
}

TrainedEnsemble train_ensemble(const data::Dataset& dataset, const data::DatasetSplit& split,
                               const EnsembleConfig& config) {
    config.validate();
    const Matrix train_raw = dataset.features(split.train);
    TrainedEnsemble out;
    out.normalizer = data::fit_normalizer(train_raw);
    out.feature_names = dataset.feature_names;
    out.class_names = dataset.class_names;
    out.split = SplitInfo{split.seed, split.fractions, split.fingerprint(), dataset.size()};

    const mlp::LabeledMatrix train_set{data::apply_normalizer(out.normalizer, train_raw), dataset.labels(split.train)};
    const mlp::LabeledMatrix val_set{data::apply_normalizer(out.normalizer, dataset.features(split.val)),
                                     dataset.labels(split.val)};

    auto pool_config = config.pool;
    pool_config.master_seed = derive_seed(config.seed, 1);
    pool_config.num_classes = dataset.num_classes();
    out.pool = train_pool(train_set, val_set, pool_config);

    auto head_config = config.asen;
    head_config.loop.seed = derive_seed(config.seed, 3);
    auto [head, report] = train_asen(init_asen(out.pool.size(), out.pool.num_classes(), derive_seed(config.seed, 2)),
                                     out.pool, train_set, val_set, head_config);
    out.asen = std::move(head);
    out.asen_report = std::move(report);
    return out;
}

std::vector<GridResult> grid_search(const GridSpec& grid, const mlp::LabeledMatrix& train_set,
                                    const mlp::LabeledMatrix& val_set, const train::TrainConfig& config,
                                    std::uint64_t seed) {
    if (grid.layer_counts.empty() || grid.widths.empty() || grid.dropouts.empty()) {
        throw ConfigError("grid search needs non-empty layer, width and dropout grids");
    }
    const std::size_t num_classes = std::max(class_count(train_set), class_count(val_set));
    std::vector<GridResult> results;
    std::uint64_t k = 0;
    for (auto layers : grid.layer_counts) {
        for (auto width : grid.widths) {
            for (auto dropout : grid.dropouts) {
                mlp::MlpConfig cfg;
                cfg.input_size = static_cast<std::size_t>(train_set.x.cols());
                cfg.hidden.assign(layers, width);
                cfg.dropout = dropout;
                cfg.num_classes = num_classes;
                cfg.seed = derive_seed(seed, 2 * k);
                auto tc = config;
                tc.loop.seed = derive_seed(seed, 2 * k + 1);
                auto [model, report] = mlp::train_mlp(mlp::init_mlp(cfg), train_set, val_set, tc);
                GridResult r;
                r.config = cfg;
                r.val_accuracy = accuracy_of(mlp::predict_labels(model, val_set.x), val_set.y);
                r.val_loss = mlp::mean_loss(model, val_set.x, val_set.y);
                r.parameter_count = model.parameter_count();
                results.push_back(std::move(r));
                ++k;
            }
        }
    }
    std::stable_sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
        if (a.val_accuracy != b.val_accuracy) return a.val_accuracy > b.val_accuracy;
        if (a.val_loss != b.val_loss) return a.val_loss < b.val_loss;
        return a.parameter_count < b.parameter_count;
    });
    return results;
}

} // namespace asen::ensemble
