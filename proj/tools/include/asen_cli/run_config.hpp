#pragma once

// Run configuration: one JSON document, defaults filled in, validated
// before any work starts.

#include "asen/baselines.hpp"
#include "asen/dataset.hpp"
#include "asen/ensemble.hpp"
#include "asen/importance.hpp"
#include "asen/metrics.hpp"
#include "asen/serialization.hpp"
#include "asen/spectral.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace asen::cli {

struct CsvSource {
    std::string path;
    std::string label_column = "label";
    std::vector<std::string> class_names = data::crop_classes();
    std::optional<std::string> latitude_column;
    std::optional<std::string> longitude_column;
    std::optional<std::string> id_column;
};

struct SyntheticSource {
    std::vector<std::size_t> counts = std::vector<std::size_t>(6, 2000);
    double confusion = 0.3;
    double phenology = 0.2;
    std::size_t noise_features = 0;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::optional<CsvSource> csv;
    std::optional<SyntheticSource> synthetic;
    spectral::BandMapping band_mapping = spectral::BandMapping::landsat8();
    std::vector<std::string> features = spectral::default_feature_selection();
    data::SplitFractions split;
    ensemble::PoolConfig pool;
    train::TrainConfig asen;
    baselines::LinearConfig logistic;
    baselines::LinearConfig svm;
    metrics::EvaluateOptions metrics;
    importance::ImportanceConfig importance;
    std::size_t importance_k = 0; // 0: half the features, rounded up
    std::string output_dir = "asen_out";

    void validate() const;
};

/// Streams of the master seed handed to each stage.
struct StageSeeds {
    std::uint64_t data, split, ensemble, logistic, svm, importance, metrics;
};
StageSeeds stage_seeds(std::uint64_t master) noexcept;

/// Merges `user` over the defaults and validates. Unknown keys, a missing
/// seed or anything other than exactly one dataset source throw ConfigError.
RunConfig parse_run_config(const io::Json& user);

/// Fully resolved form; parse_run_config(to_json(c)) reproduces c.
io::Json to_json(const RunConfig& config);

/// Reads a JSON file; ConfigError when unreadable or malformed.
io::Json load_config_file(const std::filesystem::path& path);

/// Applies "a.b.c=value". The value is parsed as JSON when possible and
/// taken as a string otherwise; intermediate objects are created.
void apply_override(io::Json& config, const std::string& assignment);

} // namespace asen::cli
