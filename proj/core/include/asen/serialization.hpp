#pragma once

// Versioned JSON documents for models and reports. Doubles are written in
// shortest round-trip form, so save/load is bit-exact.

#include "asen/baselines.hpp"
#include "asen/ensemble.hpp"
#include "asen/importance.hpp"
#include "asen/metrics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace asen::io {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json mlp_to_json(const mlp::MlpModel& model);
mlp::MlpModel mlp_from_json(const Json& j);

Json report_to_json(const train::TrainReport& report);
train::TrainReport report_from_json(const Json& j);

Json normalizer_to_json(const data::NormalizationParams& params);
data::NormalizationParams normalizer_from_json(const Json& j);

Json learner_to_json(const ensemble::BaseLearner& learner);
ensemble::BaseLearner learner_from_json(const Json& j);

Json asen_to_json(const ensemble::AsenModel& model);
ensemble::AsenModel asen_from_json(const Json& j);

Json split_info_to_json(const ensemble::SplitInfo& info);
ensemble::SplitInfo split_info_from_json(const Json& j);

/// Self-contained ensemble document: pool, head, normalizer, feature
/// selection, class names and split provenance.
Json ensemble_to_json(const ensemble::TrainedEnsemble& model);
ensemble::TrainedEnsemble ensemble_from_json(const Json& j);

Json linear_to_json(const baselines::LinearModel& model);
baselines::LinearModel linear_from_json(const Json& j);

Json metrics_to_json(const metrics::MetricsReport& report);

Json importance_to_json(const importance::ImportanceReport& report);
importance::ImportanceReport importance_from_json(const Json& j);

/// Throws SchemaError unless j["format_version"] == kFormatVersion and
/// j["kind"] == kind.
void check_header(const Json& j, std::string_view kind);

/// Two-space indented, keys sorted, trailing newline.
std::string dump(const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
/// Throws SchemaError on malformed JSON.
Json read_json(const std::filesystem::path& path);

/// 16 lower-case hex digits.
std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(const std::string& s);

} // namespace asen::io
