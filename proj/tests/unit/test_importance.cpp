#include "asen/error.hpp"
#include "asen/importance.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace asen;
using namespace asen::importance;

namespace {

// Rule classifier that only reads column `col`.
LabelPredictor threshold_on(Eigen::Index col) {
    return [col](const Matrix& x) {
        std::vector<int> out;
        for (Eigen::Index r = 0; r < x.rows(); ++r) out.push_back(x(r, col) > 0.0 ? 1 : 0);
        return out;
    };
}

ImportanceReport report_with(std::vector<double> mean) {
    ImportanceReport r;
    for (std::size_t j = 0; j < mean.size(); ++j) r.feature_names.push_back("f" + std::to_string(j));
    r.mean = mean;
    r.stddev.assign(mean.size(), 0.0);
    r.ranking.resize(mean.size());
    std::iota(r.ranking.begin(), r.ranking.end(), 0);
    std::stable_sort(r.ranking.begin(), r.ranking.end(), [&](auto a, auto b) { return mean[a] > mean[b]; });
    return r;
}

} // namespace

TEST(TopK, TiesKeepOriginalOrder) {
    const auto r = report_with({0.3, 0.3, 0.1});
    EXPECT_EQ(select_top_k(r, 2), (std::vector<std::string>{"f0", "f1"}));
    EXPECT_THROW(select_top_k(r, 0), ConfigError);
    EXPECT_THROW(select_top_k(r, 4), ConfigError);
}

TEST(Permutation, OnlyTheUsedFeatureMatters) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    const Eigen::Index n = 400;
    Matrix x(n, 3);
    std::vector<int> y;
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index k = 0; k < 3; ++k) x(r, k) = g(rng);
        y.push_back(x(r, 1) > 0.0 ? 1 : 0);
    }
    ImportanceConfig cfg;
    cfg.seed = 11;
    const auto rep = permutation_importance(threshold_on(1), x, y, {"a", "ndvi", "c"}, 2, cfg);
    EXPECT_EQ(rep.baseline, 1.0);
    EXPECT_EQ(rep.ranking[0], 1u);
    EXPECT_GT(rep.mean[1], 0.3);
    // A feature the model never reads scores exactly zero, well within 2 sd.
    EXPECT_EQ(rep.mean[0], 0.0);
    EXPECT_LE(std::abs(rep.mean[2]), 2.0 * rep.stddev[2] + 1e-15);
    EXPECT_EQ(rep.ranking.size(), 3u);
}

TEST(Permutation, DeterministicAndThreadIndependent) {
    const auto data = fixture::blobs(100, 2, 4, 1.0, 5);
    const auto predict = [](const Matrix& x) {
        std::vector<int> out;
        for (Eigen::Index r = 0; r < x.rows(); ++r) out.push_back(x(r, 0) + 0.5 * x(r, 2) > 0.3 ? 0 : 1);
        return out;
    };
    ImportanceConfig cfg;
    cfg.seed = 9;
    cfg.metric = ImportanceMetric::macro_f1;
    const std::vector<std::string> names{"a", "b", "c", "d"};
    const auto one = permutation_importance(predict, data.x, data.y, names, 2, cfg);
    cfg.threads = 4;
    const auto four = permutation_importance(predict, data.x, data.y, names, 2, cfg);
    EXPECT_EQ(one, four);
    EXPECT_EQ(one.repeats, 10u);
    EXPECT_EQ(one.metric, ImportanceMetric::macro_f1);
}

TEST(Permutation, Errors) {
    const Matrix one_row = Matrix::Zero(1, 2);
    const std::vector<int> y{0};
    EXPECT_THROW(permutation_importance(threshold_on(0), one_row, y, {"a", "b"}, 2, ImportanceConfig{}), DataError);
    ImportanceConfig bad;
    bad.repeats = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    EXPECT_THROW(parse_metric("auc"), ConfigError);
    EXPECT_EQ(parse_metric(metric_name(ImportanceMetric::macro_f1)), ImportanceMetric::macro_f1);
}

TEST(Permutation, NdviRanksFirstWhenItAloneSeparatesClasses) {
    // Two classes differing only in NIR-vs-Red contrast; absolute brightness
    // varies per sample so raw bands alone are uninformative.
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> bright(0.1, 0.5);
    data::Dataset ds;
    ds.feature_names = {"red", "nir", "ndvi"};
    ds.class_names = {"low", "high"};
    for (int i = 0; i < 600; ++i) {
        const int label = i % 2;
        const double b = bright(rng);
        const double ratio = label == 1 ? 3.0 : 1.6;
        const double red = b, nir = b * ratio * (1.0 + 0.05 * std::normal_distribution<double>(0, 1)(rng));
        ds.samples.push_back({{red, nir, (nir - red) / (nir + red)}, label, {}, {}, {}});
    }
    const auto split = data::stratified_split(ds, data::SplitFractions{}, 3);
    ensemble::EnsembleConfig cfg;
    cfg.pool.num_learners = 3;
    cfg.pool.train.loop.max_epochs = 30;
    cfg.asen.loop.max_epochs = 10;
    cfg.seed = 4;
    const auto model = ensemble::train_ensemble(ds, split, cfg);
    ImportanceConfig ic;
    ic.seed = 2;
    const auto rep = permutation_importance(model, ds.features(split.val), ds.labels(split.val), ic);
    EXPECT_EQ(rep.feature_names[rep.ranking[0]], "ndvi");
}

TEST(ImportanceCsv, RankingOrder) {
    const auto r = report_with({0.1, 0.5, 0.2});
    const std::string csv = importance_csv(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "feature,mean_importance");
    EXPECT_LT(csv.find("f1,"), csv.find("f2,"));
    EXPECT_LT(csv.find("f2,"), csv.find("f0,"));
}

TEST(FeatureSelection, ArmsShareSplitAndDeltasAreDifferences) {
    auto spec = data::SyntheticSpec::crops(60, 0.3, 0.1);
    spec.noise_features = 2;
    const auto ds = data::generate_synthetic(spec, 8);
    const auto split = data::stratified_split(ds, data::SplitFractions{}, 1);
    ensemble::EnsembleConfig cfg;
    cfg.pool.num_learners = 2;
    cfg.pool.train.loop.max_epochs = 5;
    cfg.asen.loop.max_epochs = 3;
    cfg.seed = 3;
    ImportanceConfig ic;
    ic.repeats = 2;
    const auto res = feature_selection_experiment(ds, split, cfg, 5, ic);
    EXPECT_EQ(res.full_features, ds.feature_names);
    ASSERT_EQ(res.selected_features.size(), 5u);
    // Selected features listed in original column order.
    std::vector<std::size_t> pos;
    for (const auto& f : res.selected_features) {
        pos.push_back(static_cast<std::size_t>(std::find(ds.feature_names.begin(), ds.feature_names.end(), f) -
                                               ds.feature_names.begin()));
    }
    EXPECT_TRUE(std::is_sorted(pos.begin(), pos.end()));
    EXPECT_EQ(res.full.confusion.total(), static_cast<std::int64_t>(split.test.size()));
    EXPECT_EQ(res.selected.confusion.total(), static_cast<std::int64_t>(split.test.size()));
    EXPECT_NEAR(res.deltas.at("accuracy"), res.selected.accuracy - res.full.accuracy, 1e-15);
    EXPECT_NEAR(res.deltas.at("f1"), res.selected.rates.macro_f1 - res.full.rates.macro_f1, 1e-15);
    EXPECT_THROW(feature_selection_experiment(ds, split, cfg, 0, ic), ConfigError);
}
