#include "asen/metrics.hpp"

#include "asen/csv.hpp"
#include "asen/error.hpp"
#include "asen/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

namespace asen::metrics {

ConfusionMatrix ConfusionMatrix::from_rows(std::vector<std::vector<std::int64_t>> rows, std::vector<std::string> names) {
    if (rows.empty()) throw DataError("confusion matrix has no classes");
    if (names.size() != rows.size()) {
        throw DataError("confusion matrix has " + std::to_string(rows.size()) + " rows but " +
                        std::to_string(names.size()) + " class names");
    }
    for (const auto& row : rows) {
        if (row.size() != rows.size()) throw DataError("confusion matrix must be square");
        for (auto v : row) {
            if (v < 0) throw DataError("confusion matrix counts must be non-negative");
        }
    }
    return {std::move(names), std::move(rows)};
}

std::int64_t ConfusionMatrix::total() const noexcept {
    std::int64_t t = 0;
    for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
    return t;
}

std::int64_t ConfusionMatrix::trace() const noexcept {
    std::int64_t t = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) t += counts[c][c];
    return t;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t c) const {
    const auto& row = counts.at(c);
    return std::accumulate(row.begin(), row.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::col_sum(std::size_t c) const {
    if (c >= counts.size()) throw std::out_of_range("confusion column out of range");
    std::int64_t t = 0;
    for (const auto& row : counts) t += row[c];
    return t;
}

namespace {

std::vector<std::vector<std::int64_t>> tally(std::span<const int> truth, std::span<const int> predicted,
                                             std::size_t classes) {
    std::vector<std::vector<std::int64_t>> counts(classes, std::vector<std::int64_t>(classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes || static_cast<std::size_t>(p) >= classes) {
            throw DataError("label outside the class list at position " + std::to_string(i));
        }
        ++counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    return counts;
}

double safe_ratio(std::int64_t num, std::int64_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r, bool& undefined) {
    undefined = p + r == 0.0;
    return undefined ? 0.0 : 2.0 * p * r / (p + r);
}

} // namespace

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted,
                                 std::vector<std::string> class_names) {
    if (truth.empty()) throw DataError("confusion matrix needs at least one sample");
    if (truth.size() != predicted.size()) {
        throw DataError("truth and prediction lengths differ: " + std::to_string(truth.size()) + " vs " +
                        std::to_string(predicted.size()));
    }
    if (class_names.empty()) throw DataError("class list is empty");
    auto counts = tally(truth, predicted, class_names.size());
    return {std::move(class_names), std::move(counts)};
}

Fraction accuracy_fraction(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw DataError("accuracy of an empty confusion matrix");
    return {cm.trace(), total};
}

double accuracy(const ConfusionMatrix& cm) { return accuracy_fraction(cm).value(); }

RateSummary precision_recall_f1(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DataError("rates of an empty confusion matrix");
    const std::size_t k = cm.num_classes();
    RateSummary out;
    out.per_class.resize(k);
    std::int64_t tp_sum = 0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < k; ++c) {
        auto& r = out.per_class[c];
        const auto tp = cm.counts[c][c];
        tp_sum += tp;
        r.precision = safe_ratio(tp, cm.col_sum(c), r.precision_undefined);
        r.recall = safe_ratio(tp, cm.row_sum(c), r.recall_undefined);
        r.f1 = harmonic(r.precision, r.recall, r.f1_undefined);
        if (r.precision_undefined && r.recall_undefined) continue; // class absent from truth and predictions
        ++present;
        out.macro_precision += r.precision;
        out.macro_recall += r.recall;
        out.macro_f1 += r.f1;
    }
    const auto n = static_cast<double>(present);
    out.macro_precision /= n;
    out.macro_recall /= n;
    out.macro_f1 /= n;
    // Single-label multiclass: every error is one FP and one FN, so all
    // micro averages equal accuracy.
    bool unused = false;
    out.micro_precision = safe_ratio(tp_sum, cm.total(), unused);
    out.micro_recall = out.micro_precision;
    out.micro_f1 = out.micro_precision;
    return out;
}

std::optional<double> binary_auc(std::span<const double> scores, std::span<const bool> positive) {
    if (scores.size() != positive.size()) throw DataError("AUC: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j); // mean of ranks i+1..j
        for (std::size_t t = i; t < j; ++t) {
            if (positive[order[t]]) {
                rank_sum += midrank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    const double np = static_cast<double>(n_pos);
    const double u = rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

AucSummary roc_auc(std::span<const int> truth, const Matrix& scores) {
    if (truth.empty()) throw DataError("AUC needs at least one sample");
    if (static_cast<std::size_t>(scores.rows()) != truth.size()) {
        throw DataError("AUC: " + std::to_string(scores.rows()) + " score rows for " + std::to_string(truth.size()) +
                        " labels");
    }
    if (!scores.allFinite()) throw DataError("AUC: scores must be finite");
    const auto k = static_cast<std::size_t>(scores.cols());
    for (int t : truth) {
        if (t < 0 || static_cast<std::size_t>(t) >= k) throw DataError("AUC: label outside the class list");
    }
    AucSummary out;
    out.per_class.resize(k);
    std::vector<double> column(truth.size());
    const auto flags = std::make_unique<bool[]>(truth.size());
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < truth.size(); ++i) {
            column[i] = scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
            flags[i] = truth[i] == static_cast<int>(c);
        }
        const std::span<const bool> positive(flags.get(), truth.size());
        out.per_class[c] = binary_auc(column, positive);
        if (out.per_class[c]) {
            sum += *out.per_class[c];
            ++defined;
        } else {
            out.excluded.push_back(c);
        }
    }
    if (defined > 0) out.macro = sum / static_cast<double>(defined);
    return out;
}

// ---------------------------------------------------------------------------

void BootstrapConfig::validate() const {
    if (resamples < 2) throw ConfigError("bootstrap needs at least 2 resamples");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap level must be in (0, 1)");
    if (max_retries < 0) throw ConfigError("bootstrap max_retries must be >= 0");
}

namespace {

/// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace

Interval bootstrap_ci(const SampleMetric& metric, std::size_t sample_count, const BootstrapConfig& config) {
    config.validate();
    if (sample_count < 2) throw DataError("bootstrap needs at least 2 samples");
    std::vector<std::size_t> all(sample_count);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto point = metric(all);
    if (!point) throw NumericError("metric is undefined on the full evaluation set");

    std::vector<double> values(config.resamples);
    std::vector<std::size_t> rows(sample_count);
    for (std::size_t r = 0; r < config.resamples; ++r) {
        const std::uint64_t resample_seed = derive_seed(config.seed, r);
        std::optional<double> v;
        for (int attempt = 0; attempt <= config.max_retries && !v; ++attempt) {
            Rng rng = make_rng(derive_seed(resample_seed, static_cast<std::uint64_t>(attempt)));
            std::uniform_int_distribution<std::size_t> pick(0, sample_count - 1);
            for (auto& row : rows) row = pick(rng);
            v = metric(rows);
        }
        if (!v) {
            throw NumericError("metric undefined on resample " + std::to_string(r) + " after " +
                               std::to_string(config.max_retries) + " retries");
        }
        values[r] = *v;
    }
    std::sort(values.begin(), values.end());
    const double tail = (1.0 - config.level) / 2.0;
    Interval out;
    out.estimate = *point;
    out.lower = quantile(values, tail);
    out.upper = quantile(values, 1.0 - tail);
    out.half_width = (out.upper - out.lower) / 2.0;
    return out;
}

std::string_view metric_name(Metric m) noexcept {
    switch (m) {
    case Metric::accuracy: return "accuracy";
    case Metric::precision: return "precision";
    case Metric::recall: return "recall";
    case Metric::f1: return "f1";
    case Metric::auc: return "auc";
    }
    return "unknown";
}

const std::array<Metric, 5>& summary_order() noexcept {
    static constexpr std::array<Metric, 5> order{Metric::f1, Metric::precision, Metric::recall, Metric::accuracy,
                                                 Metric::auc};
    return order;
}

SampleMetric make_sample_metric(Metric m, std::span<const int> truth, std::span<const int> predicted,
                                const Matrix* scores, std::size_t num_classes) {
    if (m == Metric::auc && scores == nullptr) throw ConfigError("AUC interval needs score rows");
    return [=](std::span<const std::size_t> rows) -> std::optional<double> {
        if (m == Metric::auc) {
            std::vector<int> t(rows.size());
            Matrix s(static_cast<Eigen::Index>(rows.size()), scores->cols());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                t[i] = truth[rows[i]];
                s.row(static_cast<Eigen::Index>(i)) = scores->row(static_cast<Eigen::Index>(rows[i]));
            }
            return roc_auc(t, s).macro;
        }
        std::vector<int> t(rows.size());
        std::vector<int> p(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            t[i] = truth[rows[i]];
            p[i] = predicted[rows[i]];
        }
        ConfusionMatrix cm{std::vector<std::string>(num_classes), tally(t, p, num_classes)};
        if (m == Metric::accuracy) return accuracy(cm);
        const auto rates = precision_recall_f1(cm);
        if (m == Metric::precision) return rates.macro_precision;
        if (m == Metric::recall) return rates.macro_recall;
        return rates.macro_f1;
    };
}

double MetricsReport::value(Metric m) const {
    switch (m) {
    case Metric::accuracy: return accuracy;
    case Metric::precision: return rates.macro_precision;
    case Metric::recall: return rates.macro_recall;
    case Metric::f1: return rates.macro_f1;
    case Metric::auc:
        return auc && auc->macro ? *auc->macro : std::numeric_limits<double>::quiet_NaN();
    }
    return std::numeric_limits<double>::quiet_NaN();
}

MetricsReport evaluate(std::span<const int> truth, std::span<const int> predicted, const Matrix* scores,
                       std::vector<std::string> class_names, const EvaluateOptions& options) {
    MetricsReport report;
    const std::size_t k = class_names.size();
    report.confusion = confusion_matrix(truth, predicted, std::move(class_names));
    report.accuracy = accuracy(report.confusion);
    report.rates = precision_recall_f1(report.confusion);
    if (scores != nullptr) {
        if (static_cast<std::size_t>(scores->cols()) != k) {
            throw DimensionError("score rows have " + std::to_string(scores->cols()) + " columns for " +
                                 std::to_string(k) + " classes");
        }
        report.auc = roc_auc(truth, *scores);
    }
    if (options.confidence_intervals) {
        for (std::size_t i = 0; i < summary_order().size(); ++i) {
            const Metric m = summary_order()[i];
            if (m == Metric::auc && (!report.auc || !report.auc->macro)) continue;
            BootstrapConfig cfg = options.bootstrap;
            cfg.seed = derive_seed(options.bootstrap.seed, i);
            report.intervals[std::string(metric_name(m))] =
                bootstrap_ci(make_sample_metric(m, truth, predicted, scores, k), truth.size(), cfg);
        }
    }
    return report;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::ostringstream out;
    out << "true\\predicted";
    for (const auto& name : cm.class_names) out << ',' << csv::escape(name);
    out << '\n';
    for (std::size_t r = 0; r < cm.num_classes(); ++r) {
        out << csv::escape(cm.class_names[r]);
        for (auto v : cm.counts[r]) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

} // namespace asen::metrics
