#include "asen/error.hpp"
#include "asen/metrics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace asen;
using namespace asen::metrics;

namespace {

const std::vector<std::string> kCrops{"sugarcane", "wheat", "potato", "mustard", "maize", "cotton"};

std::vector<std::string> names(std::size_t C) {
    std::vector<std::string> n;
    for (std::size_t c = 0; c < C; ++c) n.push_back("c" + std::to_string(c));
    return n;
}

// Expand a confusion matrix back into label pairs.
std::pair<std::vector<int>, std::vector<int>> expand(const oracle::CountMatrix& m) {
    std::vector<int> t, p;
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            t.insert(t.end(), static_cast<std::size_t>(m[i][j]), static_cast<int>(i));
            p.insert(p.end(), static_cast<std::size_t>(m[i][j]), static_cast<int>(j));
        }
    }
    return {t, p};
}

struct MatrixCase {
    const char* name;
    oracle::CountMatrix (*matrix)();
    oracle::Tally tally;
};

} // namespace

class PrintedMatrix : public ::testing::TestWithParam<MatrixCase> {};

TEST_P(PrintedMatrix, AccuracyIsExactTraceOverTotal) {
    const auto& fc = GetParam();
    const auto cm = ConfusionMatrix::from_rows(fc.matrix(), kCrops);
    const auto f = accuracy_fraction(cm);
    EXPECT_EQ(f.numerator, fc.tally.trace);
    EXPECT_EQ(f.denominator, fc.tally.total);
    EXPECT_NEAR(f.value(), static_cast<double>(fc.tally.trace) / static_cast<double>(fc.tally.total), 1e-12);
}

TEST_P(PrintedMatrix, MacroRatesMatchHandTally) {
    const auto& fc = GetParam();
    const auto r = precision_recall_f1(ConfusionMatrix::from_rows(fc.matrix(), kCrops));
    EXPECT_NEAR(r.macro_precision, fc.tally.macro_precision, 1e-11);
    EXPECT_NEAR(r.macro_recall, fc.tally.macro_recall, 1e-11);
    EXPECT_NEAR(r.macro_f1, fc.tally.macro_f1, 1e-11);
    EXPECT_NEAR(r.micro_f1, static_cast<double>(fc.tally.trace) / static_cast<double>(fc.tally.total), 1e-12);
}

TEST_P(PrintedMatrix, RoundTripThroughLabels) {
    const auto& fc = GetParam();
    const auto [t, p] = expand(fc.matrix());
    const auto cm = confusion_matrix(t, p, kCrops);
    EXPECT_EQ(cm.counts, fc.matrix());
}

INSTANTIATE_TEST_SUITE_P(Reference, PrintedMatrix,
                         ::testing::Values(MatrixCase{"svm", &oracle::svm_matrix, oracle::kSvmTally},
                                           MatrixCase{"logreg", &oracle::logreg_matrix, oracle::kLogregTally},
                                           MatrixCase{"asen", &oracle::asen_matrix, oracle::kAsenTally}),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(PrintedMatrix, AsenWheatRatesAndMarginals) {
    const auto cm = ConfusionMatrix::from_rows(oracle::asen_matrix(), kCrops);
    for (std::size_t c = 0; c < 6; ++c) {
        EXPECT_EQ(cm.row_sum(c), oracle::kAsenRowSums[c]);
        EXPECT_EQ(cm.col_sum(c), oracle::kAsenColSums[c]);
    }
    const auto r = precision_recall_f1(cm);
    EXPECT_NEAR(r.per_class[1].precision, 18293.0 / 18830.0, 1e-12);
    EXPECT_NEAR(r.per_class[1].recall, 18293.0 / 18984.0, 1e-12);
    EXPECT_NEAR(accuracy(cm), 46689.0 / 50835.0, 1e-12);
    EXPECT_NEAR(accuracy(cm), 0.918442, 1e-6);
}

TEST(Confusion, HandExample) {
    const std::vector<int> t{0, 0, 1, 1, 1, 0};
    const std::vector<int> p{0, 1, 1, 1, 0, 0};
    const auto cm = confusion_matrix(t, p, names(2));
    EXPECT_EQ(cm.counts, (oracle::CountMatrix{{2, 1}, {1, 2}}));
    EXPECT_NEAR(accuracy(cm), 4.0 / 6.0, 1e-15);
    const auto r = precision_recall_f1(cm);
    EXPECT_NEAR(r.per_class[0].precision, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(r.per_class[0].recall, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(r.per_class[0].f1, 2.0 / 3.0, 1e-15);
}

TEST(Confusion, Errors) {
    const std::vector<int> a{0, 1}, b{0};
    EXPECT_THROW(confusion_matrix(a, b, names(2)), DataError);
    EXPECT_THROW(confusion_matrix(std::vector<int>{}, std::vector<int>{}, names(2)), DataError);
    const std::vector<int> c{0, 2};
    EXPECT_THROW(confusion_matrix(a, c, names(2)), DataError);
    EXPECT_THROW(ConfusionMatrix::from_rows({{1, 2}}, names(2)), DataError);
    EXPECT_THROW(ConfusionMatrix::from_rows({{1, -2}, {0, 1}}, names(2)), DataError);
    EXPECT_THROW(ConfusionMatrix::from_rows({{1, 2}, {0, 1}}, names(3)), DataError);
}

TEST(Confusion, PropertiesOnRandomLabels) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 50; ++t) {
        std::uniform_int_distribution<int> cc(2, 7);
        const int C = cc(rng);
        std::uniform_int_distribution<int> u(0, C - 1);
        const std::size_t n = 50 + static_cast<std::size_t>(t) * 13;
        std::vector<int> truth(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = u(rng);
            pred[i] = rng() % 3 == 0 ? u(rng) : truth[i];
        }
        const auto cm = confusion_matrix(truth, pred, names(static_cast<std::size_t>(C)));
        EXPECT_EQ(cm.total(), static_cast<std::int64_t>(n));
        std::int64_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) hits += truth[i] == pred[i];
        EXPECT_EQ(cm.trace(), hits);
        const auto r = precision_recall_f1(cm);
        for (const auto& pc : r.per_class) {
            for (double v : {pc.precision, pc.recall, pc.f1}) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
        // Micro precision = micro recall = accuracy for single-label data.
        EXPECT_NEAR(r.micro_precision, accuracy(cm), 1e-15);
        EXPECT_NEAR(r.micro_recall, accuracy(cm), 1e-15);

        // Permuting samples leaves every metric unchanged.
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<int> t2(n), p2(n);
        for (std::size_t i = 0; i < n; ++i) {
            t2[i] = truth[order[i]];
            p2[i] = pred[order[i]];
        }
        EXPECT_EQ(confusion_matrix(t2, p2, names(static_cast<std::size_t>(C))), cm);
    }
}

TEST(Rates, UndefinedDenominatorsAreFlagged) {
    const auto cm = ConfusionMatrix::from_rows({{3, 0, 0}, {1, 0, 0}, {0, 0, 0}}, names(3));
    const auto r = precision_recall_f1(cm);
    EXPECT_TRUE(r.per_class[1].precision_undefined);
    EXPECT_FALSE(r.per_class[1].recall_undefined);
    EXPECT_TRUE(r.per_class[2].recall_undefined);
    EXPECT_TRUE(r.per_class[1].f1_undefined);
    EXPECT_EQ(r.per_class[1].precision, 0.0);
}

TEST(Auc, HandExample) {
    const std::vector<double> s{0.9, 0.8, 0.4, 0.3};
    const bool pos[] = {true, false, true, false};
    EXPECT_NEAR(*binary_auc(s, pos), 0.75, 1e-15);
    const bool none[] = {false, false, false, false};
    EXPECT_FALSE(binary_auc(s, none).has_value());
}

TEST(Auc, MatchesBruteForcePairCount) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> tie(0, 20);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 20 + static_cast<std::size_t>(t) * 5;
        std::vector<double> s(n);
        std::vector<bool> pos(n);
        auto flags = std::make_unique<bool[]>(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = tie(rng) / 20.0; // many ties
            pos[i] = (rng() & 1u) != 0;
            flags[i] = pos[i];
        }
        pos[0] = flags[0] = true;
        pos[1] = flags[1] = false;
        EXPECT_NEAR(*binary_auc(s, std::span<const bool>(flags.get(), n)), oracle::brute_force_auc(s, pos), 1e-12);
    }
}

TEST(Auc, OneVsRestMacroAndExclusion) {
    const std::vector<int> truth{0, 0, 1, 1};
    Matrix scores(4, 3);
    scores << 0.8, 0.1, 0.1, 0.6, 0.3, 0.1, 0.2, 0.7, 0.1, 0.5, 0.4, 0.1;
    const auto a = roc_auc(truth, scores);
    ASSERT_TRUE(a.per_class[0] && a.per_class[1]);
    EXPECT_FALSE(a.per_class[2].has_value());
    EXPECT_EQ(a.excluded, (std::vector<std::size_t>{2}));
    EXPECT_NEAR(*a.per_class[0], 1.0, 1e-15);
    EXPECT_NEAR(*a.macro, 0.5 * (*a.per_class[0] + *a.per_class[1]), 1e-15);
    Matrix bad = scores;
    bad(0, 0) = NAN;
    EXPECT_THROW(roc_auc(truth, bad), DataError);
    EXPECT_THROW(roc_auc(truth, Matrix::Zero(3, 3)), DataError);
}

TEST(Bootstrap, BinomialHalfWidth) {
    const std::size_t n = 1000;
    std::vector<int> truth(n, 0), pred(n, 0);
    for (std::size_t i = 0; i < 100; ++i) pred[i * 10] = 1;
    BootstrapConfig cfg;
    cfg.seed = 5;
    const auto metric = make_sample_metric(Metric::accuracy, truth, pred, nullptr, 2);
    const auto ci = bootstrap_ci(metric, n, cfg);
    EXPECT_NEAR(ci.estimate, 0.9, 1e-12);
    const double oracle_hw = oracle::binomial_half_width(0.9, 1000.0);
    EXPECT_NEAR(oracle_hw, 0.0186, 1e-4);
    EXPECT_NEAR(ci.half_width, oracle_hw, 0.3 * oracle_hw);
    EXPECT_LE(ci.lower, ci.estimate);
    EXPECT_GE(ci.upper, ci.estimate);
    EXPECT_EQ(bootstrap_ci(metric, n, cfg), ci);
}

TEST(Bootstrap, PerfectPredictionsHaveZeroWidth) {
    const std::vector<int> y{0, 1, 2, 0, 1, 2, 0, 1};
    const auto metric = make_sample_metric(Metric::f1, y, y, nullptr, 3);
    const auto ci = bootstrap_ci(metric, y.size(), BootstrapConfig{200, 0.95, 1, 10});
    EXPECT_EQ(ci.half_width, 0.0);
    EXPECT_EQ(ci.estimate, 1.0);
}

TEST(Bootstrap, UndefinedResamplesExhaustRetries) {
    const SampleMetric never = [](std::span<const std::size_t>) -> std::optional<double> { return std::nullopt; };
    EXPECT_THROW(bootstrap_ci(never, 10, BootstrapConfig{10, 0.95, 1, 3}), NumericError);
    BootstrapConfig bad;
    bad.level = 1.5;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Report, SummaryOrderAndValues) {
    const auto order = summary_order();
    EXPECT_EQ(metric_name(order[0]), "f1");
    EXPECT_EQ(metric_name(order[1]), "precision");
    EXPECT_EQ(metric_name(order[2]), "recall");
    EXPECT_EQ(metric_name(order[3]), "accuracy");
    EXPECT_EQ(metric_name(order[4]), "auc");

    const std::vector<int> truth{0, 0, 1, 1, 1, 0};
    const std::vector<int> pred{0, 1, 1, 1, 0, 0};
    const auto rep = evaluate(truth, pred, nullptr, names(2));
    EXPECT_NEAR(rep.value(Metric::accuracy), 4.0 / 6.0, 1e-15);
    EXPECT_TRUE(std::isnan(rep.value(Metric::auc)));
    EXPECT_TRUE(rep.intervals.empty());

    Matrix scores(6, 2);
    scores << 0.9, 0.1, 0.4, 0.6, 0.2, 0.8, 0.3, 0.7, 0.6, 0.4, 0.7, 0.3;
    EvaluateOptions opts;
    opts.confidence_intervals = true;
    opts.bootstrap.resamples = 100;
    const auto rep2 = evaluate(truth, pred, &scores, names(2), opts);
    EXPECT_FALSE(std::isnan(rep2.value(Metric::auc)));
    EXPECT_EQ(rep2.intervals.size(), 5u);
}

TEST(Report, ConfusionCsvLayout) {
    const auto cm = ConfusionMatrix::from_rows({{2, 1}, {0, 3}}, {"wheat", "maize"});
    const std::string csv = confusion_csv(cm);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "true\\predicted,wheat,maize");
    EXPECT_NE(csv.find("wheat,2,1"), std::string::npos);
    EXPECT_NE(csv.find("maize,0,3"), std::string::npos);
}
