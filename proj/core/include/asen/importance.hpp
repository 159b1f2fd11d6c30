#pragma once

// Permutation feature importance and the retrain-on-top-k experiment.

#include "asen/dataset.hpp"
#include "asen/ensemble.hpp"
#include "asen/metrics.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace asen::importance {

enum class ImportanceMetric { accuracy, macro_f1 };

std::string_view metric_name(ImportanceMetric m) noexcept;
/// Throws ConfigError for an unknown name.
ImportanceMetric parse_metric(std::string_view name);

struct ImportanceConfig {
    ImportanceMetric metric = ImportanceMetric::accuracy;
    std::size_t repeats = 10;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    void validate() const;
};

struct ImportanceReport {
    std::vector<std::string> feature_names;
    ImportanceMetric metric = ImportanceMetric::accuracy;
    std::size_t repeats = 0;
    double baseline = 0.0;      // metric on the unpermuted set
    std::vector<double> mean;   // baseline minus permuted, averaged over repeats
    std::vector<double> stddev; // sample standard deviation over repeats
    std::vector<std::size_t> ranking; // feature indices, descending mean; ties keep original order

    bool operator==(const ImportanceReport&) const = default;
};

/// Labels for raw feature rows.
using LabelPredictor = std::function<std::vector<int>(const Matrix&)>;

/// Column j is shuffled with a permutation drawn from derive_seed(seed, j)
/// (repeat r uses derive_seed of that, r). Throws DataError for fewer than
/// two evaluation rows.
ImportanceReport permutation_importance(const LabelPredictor& predict, const Matrix& x, std::span<const int> labels,
                                        std::vector<std::string> feature_names, std::size_t num_classes,
                                        const ImportanceConfig& config);

ImportanceReport permutation_importance(const ensemble::TrainedEnsemble& model, const Matrix& raw,
                                        std::span<const int> labels, const ImportanceConfig& config);

/// Top-k feature names in ranking order. Throws ConfigError unless 1 <= k <= feature count.
std::vector<std::string> select_top_k(const ImportanceReport& report, std::size_t k);

struct FeatureSelectionResult {
    ImportanceReport importance;
    std::vector<std::string> full_features;
    std::vector<std::string> selected_features; // top-k, listed in original column order
    metrics::MetricsReport full;
    metrics::MetricsReport selected;
    std::map<std::string, double> deltas; // selected minus full, keyed by metric name
};

/// Trains the ensemble on all features, ranks them on the validation rows,
/// retrains on the top k with the same split and seeds, and scores both arms
/// on the test rows. A supplied `precomputed` ranking skips the importance pass.
FeatureSelectionResult feature_selection_experiment(const data::Dataset& dataset, const data::DatasetSplit& split,
                                                    const ensemble::EnsembleConfig& config, std::size_t k,
                                                    const ImportanceConfig& importance_config,
                                                    const std::optional<ImportanceReport>& precomputed = std::nullopt);

/// Test-split metrics for a trained ensemble.
metrics::MetricsReport evaluate_ensemble(const ensemble::TrainedEnsemble& model, const data::Dataset& dataset,
                                         std::span<const std::size_t> rows,
                                         const metrics::EvaluateOptions& options = {});

/// Two-column CSV: feature, mean_importance, in ranking order.
std::string importance_csv(const ImportanceReport& report);

} // namespace asen::importance
