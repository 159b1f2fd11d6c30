#include "asen/ensemble.hpp"
#include "asen/error.hpp"
#include "asen/serialization.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace asen;
using namespace asen::ensemble;

namespace {

StackedPredictions random_stack(std::size_t m, std::size_t B, std::size_t C, std::mt19937_64& rng,
                                double sharpness = 3.0) {
    std::normal_distribution<double> g(0.0, sharpness);
    StackedPredictions s;
    s.samples = m;
    s.learners = B;
    s.classes = C;
    s.values.resize(m * B * C);
    for (std::size_t row = 0; row < m * B; ++row) {
        double z = 0.0;
        for (std::size_t c = 0; c < C; ++c) z += (s.values[row * C + c] = std::exp(g(rng)));
        for (std::size_t c = 0; c < C; ++c) s.values[row * C + c] /= z;
    }
    return s;
}

std::vector<int> argmax_rows(const Matrix& p) {
    std::vector<int> out;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < p.cols(); ++c) {
            if (p(r, c) > p(r, best)) best = c;
        }
        out.push_back(static_cast<int>(best));
    }
    return out;
}

BaseLearner fit_learner(const mlp::LabeledMatrix& tr, const mlp::LabeledMatrix& va, std::size_t C,
                        std::uint64_t seed) {
    mlp::MlpConfig cfg;
    cfg.input_size = static_cast<std::size_t>(tr.x.cols());
    cfg.hidden = {32};
    cfg.num_classes = C;
    cfg.seed = seed;
    train::TrainConfig tc;
    tc.loop.seed = seed;
    tc.loop.max_epochs = 40;
    auto [model, report] = mlp::train_mlp(mlp::init_mlp(cfg), tr, va, tc);
    BaseLearner l;
    l.model = std::move(model);
    l.report = std::move(report);
    l.seed = seed;
    const auto pred = mlp::predict_labels(l.model, va.x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == va.y[i];
    l.val_accuracy = static_cast<double>(hits) / static_cast<double>(pred.size());
    return l;
}

PoolConfig quick_pool(std::size_t B, std::uint64_t seed) {
    PoolConfig pc;
    pc.num_learners = B;
    pc.master_seed = seed;
    pc.train.loop.max_epochs = 8;
    return pc;
}

} // namespace

// ------------------------------------------------------------ Architecture

TEST(Architecture, SampledWithinRangesAndDeterministic) {
    ArchitectureRanges r;
    std::set<std::size_t> layer_counts;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto cfg = sample_architecture(r, 11, 6, s);
        EXPECT_NO_THROW(cfg.validate());
        layer_counts.insert(cfg.hidden.size());
        for (auto w : cfg.hidden) {
            EXPECT_GE(w, 10u);
            EXPECT_LE(w, 100u);
        }
        EXPECT_GE(cfg.dropout, 0.2);
        EXPECT_LE(cfg.dropout, 0.6);
        EXPECT_EQ(cfg, sample_architecture(r, 11, 6, s));
    }
    EXPECT_EQ(layer_counts, (std::set<std::size_t>{1, 2, 3}));
}

TEST(Architecture, InvalidRangesRejected) {
    ArchitectureRanges r;
    r.max_layers = 4;
    EXPECT_THROW(r.validate(), ConfigError);
    r = {};
    r.min_width = 120;
    r.max_width = 130;
    EXPECT_THROW(r.validate(), ConfigError);
    r = {};
    r.min_dropout = 0.7;
    r.max_dropout = 0.5;
    EXPECT_THROW(r.validate(), ConfigError);
}

// ------------------------------------------------------------ Head forward

TEST(AsenForward, AttentionIsADistributionAndCombinationStaysInEnvelope) {
    std::mt19937_64 rng(2024);
    const auto stacked = random_stack(1000, 5, 4, rng);
    const auto head = init_asen(5, 4, 7);
    const auto out = asen_forward(head, stacked);
    ASSERT_EQ(out.attention.rows(), 1000);
    ASSERT_EQ(out.attention.cols(), 5);
    for (std::size_t s = 0; s < 1000; ++s) {
        const auto r = static_cast<Eigen::Index>(s);
        EXPECT_GE(out.attention.row(r).minCoeff(), 0.0);
        EXPECT_NEAR(out.attention.row(r).sum(), 1.0, 1e-9);
        EXPECT_NEAR(out.probabilities.row(r).sum(), 1.0, 1e-12);
        for (std::size_t c = 0; c < 4; ++c) {
            double lo = 1.0, hi = 0.0;
            for (std::size_t i = 0; i < 5; ++i) {
                lo = std::min(lo, stacked.at(s, i, c));
                hi = std::max(hi, stacked.at(s, i, c));
            }
            const double q = out.combined(r, static_cast<Eigen::Index>(c));
            EXPECT_GE(q, lo - 1e-15);
            EXPECT_LE(q, hi + 1e-15);
        }
    }
}

TEST(AsenForward, ZeroAttentionVectorIsMeanPool) {
    std::mt19937_64 rng(3);
    const auto stacked = random_stack(300, 4, 6, rng);
    auto head = init_asen(4, 6, 1);
    head.attention.setZero();
    const auto out = asen_forward(head, stacked);
    Matrix mean = Matrix::Zero(300, 6);
    for (std::size_t s = 0; s < 300; ++s) {
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t c = 0; c < 6; ++c) mean(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) += stacked.at(s, i, c) / 4.0;
        }
    }
    EXPECT_LT((out.attention.array() - 0.25).abs().maxCoeff(), 1e-15);
    EXPECT_LT((out.combined - mean).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(argmax_rows(out.probabilities), argmax_rows(mean));
}

TEST(AsenForward, DominantScoreSelectsThatLearner) {
    // Learner 0 has a one-hot row; a huge attention vector aligned with the
    // class-0 hidden units gives it all the weight.
    StackedPredictions s;
    s.samples = 1;
    s.learners = 3;
    s.classes = 2;
    s.values = {1.0, 0.0, 0.5, 0.5, 0.5, 0.5};
    AsenModel head;
    head.num_learners = 3;
    head.num_classes = 2;
    head.weights = Matrix::Zero(2, 64);
    head.weights(0, 0) = 1.0;
    head.bias = RowVector::Zero(64);
    head.bias(0) = -0.5;
    head.attention = Vector::Zero(64);
    head.attention(0) = 2000.0;
    const auto out = asen_forward(head, s);
    EXPECT_NEAR(out.attention(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(out.combined(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(out.combined(0, 1), 0.0, 1e-12);
}

TEST(AsenForward, FinalSoftmaxKeepsArgmax) {
    std::mt19937_64 rng(5);
    const auto stacked = random_stack(500, 3, 5, rng);
    const auto out = asen_forward(init_asen(3, 5, 2), stacked);
    EXPECT_EQ(argmax_rows(out.probabilities), argmax_rows(out.combined));
}

TEST(AsenForward, ShapeMismatchRejected) {
    std::mt19937_64 rng(5);
    const auto stacked = random_stack(4, 3, 5, rng);
    EXPECT_THROW(asen_forward(init_asen(4, 5, 2), stacked), DimensionError);
    EXPECT_THROW(init_asen(0, 5, 1), ConfigError);
}

TEST(AsenForward, ScoreShiftInvariance) {
    // Unit 63 is constant across learners, so raising its attention entry
    // adds the same amount to every learner's score.
    std::mt19937_64 rng(8);
    const auto stacked = random_stack(50, 4, 3, rng);
    auto head = init_asen(4, 3, 9);
    head.weights.col(63).setZero();
    head.bias(63) = 5.0;
    const auto a = asen_forward(head, stacked);
    head.attention(63) += 0.37;
    const auto b = asen_forward(head, stacked);
    EXPECT_LT((a.attention - b.attention).cwiseAbs().maxCoeff(), 1e-12);
}

// ------------------------------------------------------------ Head gradients

TEST(AsenGradients, FiniteDifferenceToy) {
    std::mt19937_64 rng(1);
    const auto stacked = random_stack(7, 3, 4, rng);
    std::uniform_int_distribution<int> u(0, 3);
    std::vector<int> y(7);
    for (auto& v : y) v = u(rng);
    auto head = init_asen(3, 4, 11);
    head.bias.setConstant(0.05); // keep ReLU units off their kinks
    EXPECT_LT(asen_gradient_check(head, stacked, y, 1e-5), 1e-4);
}

TEST(AsenGradients, FiniteDifferenceRandomHeads) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> bb(1, 6), cc(2, 6);
    for (int t = 0; t < 10; ++t) {
        const std::size_t B = bb(rng), C = cc(rng);
        const auto stacked = random_stack(5, B, C, rng);
        std::uniform_int_distribution<int> u(0, static_cast<int>(C) - 1);
        std::vector<int> y(5);
        for (auto& v : y) v = u(rng);
        EXPECT_LT(asen_gradient_check(init_asen(B, C, rng()), stacked, y, 1e-5), 1e-4) << "head " << t;
    }
}

// ------------------------------------------------------------ Pool + training

TEST(Pool, ThreadCountDoesNotChangeResults) {
    const auto tr = fixture::blobs(60, 3, 4, 2.5, 1);
    const auto va = fixture::blobs(20, 3, 4, 2.5, 2);
    auto pc = quick_pool(4, 99);
    pc.threads = 1;
    const auto serial = train_pool(tr, va, pc);
    pc.threads = 4;
    const auto parallel = train_pool(tr, va, pc);
    ASSERT_EQ(serial.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(serial.learners[i].model, parallel.learners[i].model);
        EXPECT_EQ(io::dump(io::learner_to_json(serial.learners[i])), io::dump(io::learner_to_json(parallel.learners[i])));
    }
    // Learners differ from one another (distinct bootstrap and init streams).
    EXPECT_NE(serial.learners[0].bootstrap_seed, serial.learners[1].bootstrap_seed);
    EXPECT_FALSE(serial.learners[0].model == serial.learners[1].model);
}

TEST(Pool, StackShapeAndBatchInvariance) {
    const auto tr = fixture::blobs(40, 3, 4, 2.5, 1);
    const auto pool = train_pool(tr, tr, quick_pool(3, 5));
    const Matrix x = tr.x.topRows(10);
    const auto st = stack_predictions(pool, x);
    EXPECT_EQ(st.samples, 10u);
    EXPECT_EQ(st.learners, 3u);
    EXPECT_EQ(st.classes, 3u);
    const auto head = init_asen(3, 3, 4);
    const auto batch = asen_forward(head, st);
    for (Eigen::Index r = 0; r < 10; ++r) {
        const Matrix one = x.row(r);
        const auto single = asen_forward(head, stack_predictions(pool, one));
        EXPECT_EQ(single.probabilities.row(0), batch.probabilities.row(r));
        EXPECT_EQ(single.attention.row(0), batch.attention.row(r));
    }
}

TEST(TrainAsen, PoolIsFrozenAndTrainingIsDeterministic) {
    const auto tr = fixture::blobs(60, 3, 4, 2.0, 3);
    const auto va = fixture::blobs(20, 3, 4, 2.0, 4);
    const auto pool = train_pool(tr, va, quick_pool(3, 8));
    const std::string before = io::dump(io::learner_to_json(pool.learners[0])) +
                               io::dump(io::learner_to_json(pool.learners[2]));
    train::TrainConfig tc;
    tc.loop.max_epochs = 5;
    tc.loop.seed = 3;
    const auto [h1, r1] = train_asen(init_asen(3, 3, 1), pool, tr, va, tc);
    const std::string after = io::dump(io::learner_to_json(pool.learners[0])) +
                              io::dump(io::learner_to_json(pool.learners[2]));
    EXPECT_EQ(before, after);
    const auto [h2, r2] = train_asen(init_asen(3, 3, 1), pool, tr, va, tc);
    EXPECT_EQ(h1, h2);
    EXPECT_EQ(r1, r2);
    EXPECT_FALSE(h1 == init_asen(3, 3, 1));
}

TEST(TrainAsen, StrongLearnerDominatesShuffledLearners) {
    const std::size_t C = 4;
    const auto tr = fixture::blobs(150, C, 4, 4.0, 10);
    const auto va = fixture::blobs(60, C, 4, 4.0, 11);

    BaseLearnerPool pool;
    pool.learners.push_back(fit_learner(tr, va, C, 1));
    for (std::uint64_t k = 0; k < 2; ++k) {
        auto shuffled = tr;
        std::mt19937_64 rng(100 + k);
        std::shuffle(shuffled.y.begin(), shuffled.y.end(), rng);
        pool.learners.push_back(fit_learner(shuffled, va, C, 2 + k));
    }
    // Strength certified by the validation accuracy gap.
    ASSERT_GT(pool.learners[0].val_accuracy - std::max(pool.learners[1].val_accuracy, pool.learners[2].val_accuracy), 0.4);

    train::TrainConfig tc;
    tc.loop.seed = 5;
    const auto [head, report] = train_asen(init_asen(3, C, 6), pool, tr, va, tc);
    const auto out = asen_forward(head, stack_predictions(pool, va.x));
    EXPECT_GT(out.attention.col(0).mean(), 0.5);
}

TEST(TrainEnsemble, EndToEndOnBlobsAndPredictIsConsistent) {
    const auto ds = fixture::to_dataset(fixture::blobs(60, 3, 4, 3.0, 21), 3);
    const auto split = data::stratified_split(ds, data::SplitFractions{}, 4);
    EnsembleConfig cfg;
    cfg.pool = quick_pool(3, 0);
    cfg.asen.loop.max_epochs = 10;
    cfg.seed = 12;
    const auto model = train_ensemble(ds, split, cfg);
    EXPECT_EQ(model.pool.size(), 3u);
    EXPECT_EQ(model.class_names, ds.class_names);
    EXPECT_EQ(model.feature_names, ds.feature_names);

    const Matrix raw = ds.features(split.test);
    const auto p = predict(model, raw);
    EXPECT_EQ(p.labels, argmax_rows(p.probabilities));
    std::size_t hits = 0;
    const auto truth = ds.labels(split.test);
    for (std::size_t i = 0; i < truth.size(); ++i) hits += p.labels[i] == truth[i];
    EXPECT_GT(static_cast<double>(hits) / static_cast<double>(truth.size()), 0.85);

    EXPECT_THROW(predict(model, Matrix::Zero(2, 5)), DimensionError);

    const auto again = train_ensemble(ds, split, cfg);
    EXPECT_EQ(io::dump(io::ensemble_to_json(model)), io::dump(io::ensemble_to_json(again)));
}

TEST(Predict, TiesGoToLowestIndex) {
    // Two learners with mirrored rows and equal attention: combined row is flat.
    StackedPredictions s;
    s.samples = 1;
    s.learners = 2;
    s.classes = 3;
    s.values = {0.2, 0.4, 0.4, 0.2, 0.4, 0.4};
    auto head = init_asen(2, 3, 1);
    head.attention.setZero();
    const auto out = asen_forward(head, s);
    EXPECT_EQ(argmax_rows(out.probabilities)[0], 1);
}

TEST(GridSearch, ProductCountAndRanking) {
    const auto tr = fixture::blobs(30, 2, 3, 3.0, 1);
    GridSpec grid;
    grid.layer_counts = {1, 2};
    grid.widths = {10, 50, 100};
    grid.dropouts = {0.2, 0.6};
    train::TrainConfig tc;
    tc.loop.max_epochs = 3;
    const auto results = grid_search(grid, tr, tr, tc, 1);
    ASSERT_EQ(results.size(), 12u);
    for (std::size_t i = 1; i < results.size(); ++i) {
        EXPECT_GE(results[i - 1].val_accuracy, results[i].val_accuracy);
    }
}
