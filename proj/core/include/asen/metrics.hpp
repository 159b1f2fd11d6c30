#pragma once

// Confusion matrices, per-class and averaged rates, one-vs-rest AUC and
// percentile bootstrap intervals.

#include "asen/linalg.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace asen::metrics {

/// Rows are true classes, columns are predicted classes.
struct ConfusionMatrix {
    std::vector<std::string> class_names;
    std::vector<std::vector<std::int64_t>> counts;

    /// Throws DataError on a non-square matrix, negative counts or a name
    /// count that does not match.
    static ConfusionMatrix from_rows(std::vector<std::vector<std::int64_t>> rows, std::vector<std::string> names);

    std::size_t num_classes() const noexcept { return counts.size(); }
    std::int64_t total() const noexcept;
    std::int64_t trace() const noexcept;
    std::int64_t row_sum(std::size_t c) const;
    std::int64_t col_sum(std::size_t c) const;

    bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws DataError on empty input, length mismatch or a label outside the class list.
ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted,
                                 std::vector<std::string> class_names);

struct Fraction {
    std::int64_t numerator = 0;
    std::int64_t denominator = 0;
    double value() const noexcept { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

/// trace / total, kept as integers. Throws DataError for a zero total.
Fraction accuracy_fraction(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);

struct ClassRates {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false; // nothing predicted as this class
    bool recall_undefined = false;    // class absent from the truth
    bool f1_undefined = false;        // precision + recall == 0
};

struct RateSummary {
    std::vector<ClassRates> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0; // mean of per-class F1
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double micro_f1 = 0.0;
};

/// Zero denominators give 0 with the matching flag set. Macro averages run
/// over the classes that occur in the truth or the predictions.
RateSummary precision_recall_f1(const ConfusionMatrix& cm);

/// Binary AUC by the midrank Mann-Whitney statistic. Empty when either
/// group is empty.
std::optional<double> binary_auc(std::span<const double> scores, std::span<const bool> positive);

struct AucSummary {
    std::vector<std::optional<double>> per_class; // empty: no positives or no negatives
    std::optional<double> macro;                  // mean over the defined classes
    std::vector<std::size_t> excluded;
};

/// One-vs-rest AUC on score column c for class c. Throws DataError on
/// non-finite scores or a shape mismatch.
AucSummary roc_auc(std::span<const int> truth, const Matrix& scores);

// ---------------------------------------------------------------------------
// Bootstrap

/// Metric evaluated on a multiset of sample indices; empty when undefined.
using SampleMetric = std::function<std::optional<double>(std::span<const std::size_t> rows)>;

struct BootstrapConfig {
    std::size_t resamples = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
    int max_retries = 10;

    void validate() const;
};

struct Interval {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double half_width = 0.0; // (upper - lower) / 2

    bool operator==(const Interval&) const = default;
};

/// Percentile bootstrap. Resample r draws from derive_seed(seed, r); an
/// undefined resample is redrawn up to max_retries times before NumericError.
Interval bootstrap_ci(const SampleMetric& metric, std::size_t sample_count, const BootstrapConfig& config);

enum class Metric { accuracy, precision, recall, f1, auc };

std::string_view metric_name(Metric m) noexcept;
/// Headline column order: F1, Precision, Recall, Accuracy, AUC.
const std::array<Metric, 5>& summary_order() noexcept;

/// Macro-averaged metric over the given rows. `scores` may be null unless m is auc.
SampleMetric make_sample_metric(Metric m, std::span<const int> truth, std::span<const int> predicted,
                                const Matrix* scores, std::size_t num_classes);

// ---------------------------------------------------------------------------
// Reports

struct EvaluateOptions {
    bool confidence_intervals = false;
    BootstrapConfig bootstrap;
};

struct MetricsReport {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    RateSummary rates;
    std::optional<AucSummary> auc;
    std::map<std::string, Interval> intervals; // keyed by metric_name

    /// Headline value for `m`; AUC is NaN when unavailable.
    double value(Metric m) const;
};

/// `scores` (probabilities or margins, one column per class) is optional.
MetricsReport evaluate(std::span<const int> truth, std::span<const int> predicted, const Matrix* scores,
                       std::vector<std::string> class_names, const EvaluateOptions& options = {});

/// Header row and first column hold class names.
std::string confusion_csv(const ConfusionMatrix& cm);

} // namespace asen::metrics
