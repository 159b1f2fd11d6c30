#include "asen/importance.hpp"

#include "asen/csv.hpp"
#include "asen/detail/parallel.hpp"
#include "asen/error.hpp"
#include "asen/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace asen::importance {

std::string_view metric_name(ImportanceMetric m) noexcept {
    return m == ImportanceMetric::accuracy ? "accuracy" : "macro_f1";
}

ImportanceMetric parse_metric(std::string_view name) {
    if (name == "accuracy") return ImportanceMetric::accuracy;
    if (name == "macro_f1" || name == "f1") return ImportanceMetric::macro_f1;
    throw ConfigError("unknown importance metric '" + std::string(name) + "'");
}

void ImportanceConfig::validate() const {
    if (repeats < 1) throw ConfigError("importance repeats must be >= 1");
    if (threads < 1) throw ConfigError("importance threads must be >= 1");
}

namespace {

double score(ImportanceMetric metric, std::span<const int> truth, const std::vector<int>& predicted,
             std::size_t num_classes) {
    const auto cm = metrics::confusion_matrix(truth, predicted, std::vector<std::string>(num_classes));
    if (metric == ImportanceMetric::accuracy) return metrics::accuracy(cm);
    return metrics::precision_recall_f1(cm).macro_f1;
}

} // namespace

ImportanceReport permutation_importance(const LabelPredictor& predict, const Matrix& x, std::span<const int> labels,
                                        std::vector<std::string> feature_names, std::size_t num_classes,
                                        const ImportanceConfig& config) {
    config.validate();
    if (x.rows() < 2) throw DataError("permutation importance needs at least 2 evaluation rows");
    if (static_cast<std::size_t>(x.rows()) != labels.size()) throw DataError("importance: rows and labels differ");
    if (static_cast<std::size_t>(x.cols()) != feature_names.size()) {
        throw DimensionError("importance: " + std::to_string(x.cols()) + " columns for " +
                             std::to_string(feature_names.size()) + " feature names");
    }
    const std::size_t d = feature_names.size();
    const auto n = static_cast<std::size_t>(x.rows());

    ImportanceReport report;
    report.metric = config.metric;
    report.repeats = config.repeats;
    report.baseline = score(config.metric, labels, predict(x), num_classes);
    report.mean.assign(d, 0.0);
    report.stddev.assign(d, 0.0);

    detail::run_indexed(d, config.threads, [&](std::size_t j) {
        const std::uint64_t feature_seed = derive_seed(config.seed, j);
        const auto col = static_cast<Eigen::Index>(j);
        Matrix shuffled = x;
        std::vector<std::size_t> perm(n);
        std::vector<double> drops(config.repeats);
        for (std::size_t r = 0; r < config.repeats; ++r) {
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            Rng rng = make_rng(derive_seed(feature_seed, r));
            std::shuffle(perm.begin(), perm.end(), rng);
            for (std::size_t i = 0; i < n; ++i) {
                shuffled(static_cast<Eigen::Index>(i), col) = x(static_cast<Eigen::Index>(perm[i]), col);
            }
            drops[r] = report.baseline - score(config.metric, labels, predict(shuffled), num_classes);
        }
        const double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / static_cast<double>(drops.size());
        double ss = 0.0;
        for (double v : drops) ss += (v - mean) * (v - mean);
        report.mean[j] = mean;
        report.stddev[j] = drops.size() > 1 ? std::sqrt(ss / static_cast<double>(drops.size() - 1)) : 0.0;
    });

    report.ranking.resize(d);
    std::iota(report.ranking.begin(), report.ranking.end(), std::size_t{0});
    std::stable_sort(report.ranking.begin(), report.ranking.end(),
                     [&](std::size_t a, std::size_t b) { return report.mean[a] > report.mean[b]; });
    report.feature_names = std::move(feature_names);
    return report;
}

ImportanceReport permutation_importance(const ensemble::TrainedEnsemble& model, const Matrix& raw,
                                        std::span<const int> labels, const ImportanceConfig& config) {
    return permutation_importance([&](const Matrix& rows) { return ensemble::predict(model, rows).labels; }, raw,
                                  labels, model.feature_names, model.class_names.size(), config);
}

std::vector<std::string> select_top_k(const ImportanceReport& report, std::size_t k) {
    if (k < 1 || k > report.feature_names.size()) {
        throw ConfigError("k must lie in [1, " + std::to_string(report.feature_names.size()) + "], got " +
                          std::to_string(k));
    }
    std::vector<std::string> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(report.feature_names[report.ranking[i]]);
    return out;
}

metrics::MetricsReport evaluate_ensemble(const ensemble::TrainedEnsemble& model, const data::Dataset& dataset,
                                         std::span<const std::size_t> rows, const metrics::EvaluateOptions& options) {
    const auto pred = ensemble::predict(model, dataset.features(rows));
    const auto truth = dataset.labels(rows);
    return metrics::evaluate(truth, pred.labels, &pred.probabilities, dataset.class_names, options);
}

FeatureSelectionResult feature_selection_experiment(const data::Dataset& dataset, const data::DatasetSplit& split,
                                                    const ensemble::EnsembleConfig& config, std::size_t k,
                                                    const ImportanceConfig& importance_config,
                                                    const std::optional<ImportanceReport>& precomputed) {
    FeatureSelectionResult out;
    out.full_features = dataset.feature_names;
    const auto full_model = ensemble::train_ensemble(dataset, split, config);
    out.full = evaluate_ensemble(full_model, dataset, split.test);

    if (precomputed) {
        if (precomputed->feature_names != dataset.feature_names) {
            throw DataError("precomputed importance report covers different features than the dataset");
        }
        out.importance = *precomputed;
    } else {
        out.importance = permutation_importance(full_model, dataset.features(split.val), dataset.labels(split.val),
                                                importance_config);
    }

    const auto top = select_top_k(out.importance, k);
    for (const auto& name : dataset.feature_names) {
        if (std::find(top.begin(), top.end(), name) != top.end()) out.selected_features.push_back(name);
    }
    const auto reduced = dataset.select_features(out.selected_features);
    const auto selected_model = ensemble::train_ensemble(reduced, split, config);
    out.selected = evaluate_ensemble(selected_model, reduced, split.test);

    for (const auto m : metrics::summary_order()) {
        out.deltas[std::string(metrics::metric_name(m))] = out.selected.value(m) - out.full.value(m);
    }
    return out;
}

std::string importance_csv(const ImportanceReport& report) {
    std::ostringstream out;
    out << "feature,mean_importance\n";
    for (auto j : report.ranking) {
        out << csv::escape(report.feature_names[j]) << ',' << csv::format_double(report.mean[j]) << '\n';
    }
    return out.str();
}

} // namespace asen::importance
