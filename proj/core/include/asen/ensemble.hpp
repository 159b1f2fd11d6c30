#pragma once

// Bootstrap pool of MLP base learners and the attention-guided stacking head
// (ASEN) that combines their probability rows.
//
// Attention head, per sample s with base-learner rows p_1..p_B (each length C):
//   h_i   = relu(p_i * W + bias)         W: C x 64, shared across learners
//   score = h_i . a                       a: 64
//   w     = softmax(score_1..score_B)     attention weights
//   q     = sum_i w_i p_i                 convex combination of rows
//   out   = softmax(q)

#include "asen/dataset.hpp"
#include "asen/linalg.hpp"
#include "asen/mlp.hpp"
#include "asen/training.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace asen::ensemble {

inline constexpr std::size_t kAttentionWidth = 64;

struct ArchitectureRanges {
    std::size_t min_layers = 1;
    std::size_t max_layers = 3;
    std::size_t min_width = 10;
    std::size_t max_width = 100;
    double min_dropout = 0.2;
    double max_dropout = 0.6;

    void validate() const;
};

/// Layer count, per-layer widths and dropout drawn uniformly from `ranges`.
mlp::MlpConfig sample_architecture(const ArchitectureRanges& ranges, std::size_t input_size, std::size_t num_classes,
                                   std::uint64_t seed);

struct PoolConfig {
    std::size_t num_learners = 10;
    ArchitectureRanges ranges;
    train::TrainConfig train;
    std::uint64_t master_seed = 0;
    std::size_t threads = 1;     // results do not depend on this
    std::size_t num_classes = 0; // 0 infers from the largest label seen

    void validate() const;
};

struct BaseLearner {
    mlp::MlpModel model;
    std::uint64_t seed = 0;           // per-learner stream actually used
    std::uint64_t bootstrap_seed = 0; // regenerates the bootstrap multiset
    double val_accuracy = 0.0;
    train::TrainReport report;
};

struct BaseLearnerPool {
    std::vector<BaseLearner> learners;

    std::size_t size() const noexcept { return learners.size(); }
    std::size_t input_size() const;
    std::size_t num_classes() const;
};

/// Learner i draws its bootstrap multiset, architecture, initialization and
/// shuffling from seeds derived from (master_seed, i); output is identical for
/// any thread count. A diverging learner is retried once on a fresh stream.
BaseLearnerPool train_pool(const mlp::LabeledMatrix& train_set, const mlp::LabeledMatrix& val_set,
                           const PoolConfig& config);

/// m x B x C tensor of base-learner probability rows, laid out [sample][learner][class].
struct StackedPredictions {
    std::size_t samples = 0;
    std::size_t learners = 0;
    std::size_t classes = 0;
    std::vector<double> values;

    double at(std::size_t s, std::size_t i, std::size_t c) const { return values[(s * learners + i) * classes + c]; }
    /// All (sample, learner) rows as an (m*B) x C matrix view.
    Eigen::Map<const Matrix> rows() const;
    /// One sample's B x C block.
    Eigen::Map<const Matrix> sample(std::size_t s) const;
};

/// Inference-mode probabilities of every learner for every (normalized) row.
StackedPredictions stack_predictions(const BaseLearnerPool& pool, const Matrix& x);

struct AsenModel {
    Matrix weights;      // C x 64
    RowVector bias;      // 64
    Vector attention;    // 64
    std::size_t num_learners = 0;
    std::size_t num_classes = 0;

    train::ParamSpans parameters();
    bool operator==(const AsenModel& o) const {
        return weights == o.weights && bias == o.bias && attention == o.attention && num_learners == o.num_learners &&
               num_classes == o.num_classes;
    }
};

AsenModel init_asen(std::size_t num_learners, std::size_t num_classes, std::uint64_t seed);

struct AsenOutput {
    Matrix probabilities; // m x C, final softmax
    Matrix combined;      // m x C, attention-weighted sum of base rows
    Matrix attention;     // m x B attention trace
};

AsenOutput asen_forward(const AsenModel& asen, const StackedPredictions& stacked);

struct AsenGradients {
    Matrix weights;
    RowVector bias;
    Vector attention;

    train::GradSpans spans() const;
};

struct AsenLossAndGradients {
    double loss = 0.0; // mean cross-entropy
    AsenGradients gradients;
    std::size_t correct = 0;
};

AsenLossAndGradients asen_loss_and_gradients(const AsenModel& asen, const StackedPredictions& stacked,
                                             std::span<const int> labels);

/// Max relative error of the head's analytic gradients vs central differences.
double asen_gradient_check(const AsenModel& asen, const StackedPredictions& stacked, std::span<const int> labels,
                           double eps = 1e-5);

/// Trains only the head; the pool is read-only.
std::pair<AsenModel, train::TrainReport> train_asen(AsenModel asen, const BaseLearnerPool& pool,
                                                    const mlp::LabeledMatrix& train_set,
                                                    const mlp::LabeledMatrix& val_set,
                                                    const train::TrainConfig& config);

/// Split provenance stored with a trained model.
struct SplitInfo {
    std::uint64_t seed = 0;
    data::SplitFractions fractions;
    std::uint64_t fingerprint = 0;
    std::size_t dataset_size = 0;
};

/// Everything needed to classify raw feature rows.
struct TrainedEnsemble {
    data::NormalizationParams normalizer;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;
    BaseLearnerPool pool;
    AsenModel asen;
    train::TrainReport asen_report;
    std::optional<SplitInfo> split;
};

struct Prediction {
    std::vector<int> labels;
    Matrix probabilities;
    Matrix attention;
};

/// Normalizes raw rows with the stored parameters, then runs pool and head.
/// Labels are argmax with lowest-index tie-break.
Prediction predict(const TrainedEnsemble& ensemble, const Matrix& raw);

struct EnsembleConfig {
    PoolConfig pool;
    train::TrainConfig asen;
    std::uint64_t seed = 0; // overrides the pool master seed and the head's seeds

    void validate() const;
};

/// Normalize on the train rows, train the pool, then the head.
TrainedEnsemble train_ensemble(const data::Dataset& dataset, const data::DatasetSplit& split,
                               const EnsembleConfig& config);

struct GridSpec {
    std::vector<std::size_t> layer_counts{1, 2, 3};
    std::vector<std::size_t> widths{10, 50, 100};
    std::vector<double> dropouts{0.2, 0.4, 0.6};
};

struct GridResult {
    mlp::MlpConfig config;
    double val_accuracy = 0.0;
    double val_loss = 0.0;
    std::size_t parameter_count = 0;
};

/// Trains every (layers, width, dropout) combination once and ranks by
/// validation accuracy, then lower validation loss, then fewer parameters.
std::vector<GridResult> grid_search(const GridSpec& grid, const mlp::LabeledMatrix& train_set,
                                    const mlp::LabeledMatrix& val_set, const train::TrainConfig& config,
                                    std::uint64_t seed);

} // namespace asen::ensemble
