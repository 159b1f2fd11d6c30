#pragma once

// Tabular dataset model: labeled samples, CSV ingestion, synthetic data,
// z-score normalization, stratified splitting and bootstrap resampling.

#include "asen/linalg.hpp"
#include "asen/spectral.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace asen::data {

/// Six crop classes in the order used for reporting.
const std::vector<std::string>& crop_classes();

struct LabeledSample {
    std::vector<double> features;
    int label = 0;
    std::optional<double> latitude;
    std::optional<double> longitude;
    std::optional<std::string> source_id;
};

struct Dataset {
    std::vector<LabeledSample> samples;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;
    std::string provenance;

    std::size_t size() const noexcept { return samples.size(); }
    std::size_t dimension() const noexcept { return feature_names.size(); }
    std::size_t num_classes() const noexcept { return class_names.size(); }

    /// Throws DataError on any violated invariant.
    void validate() const;

    /// Feature rows for `rows` (all samples when empty).
    Matrix features(std::span<const std::size_t> rows) const;
    Matrix features() const;
    std::vector<int> labels(std::span<const std::size_t> rows) const;
    std::vector<int> labels() const;

    /// Same samples restricted to `columns` (by name, in the given order).
    Dataset select_features(std::span<const std::string> columns) const;
};

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvSchema {
    std::string label_column = "label";
    /// Band names, index names, or literal numeric column names.
    std::vector<std::string> features = spectral::default_feature_selection();
    /// Declared class set; when empty, labels are taken in order of first appearance.
    std::vector<std::string> class_names = crop_classes();
    std::optional<std::string> latitude_column;
    std::optional<std::string> longitude_column;
    std::optional<std::string> id_column;
};

struct LoadStats {
    std::size_t rows_read = 0;
    std::size_t skipped_unparseable = 0;
    std::size_t skipped_missing = 0;
    std::size_t skipped_invalid_reflectance = 0;
    std::size_t skipped_unknown_label = 0;
    std::size_t skipped_degenerate_index = 0;

    std::size_t skipped() const noexcept {
        return skipped_unparseable + skipped_missing + skipped_invalid_reflectance + skipped_unknown_label +
               skipped_degenerate_index;
    }
};

struct LoadResult {
    Dataset dataset;
    LoadStats stats;
};

/// Parses a header + rows CSV. Bad rows are skipped and counted; a missing
/// column throws SchemaError; zero surviving rows throws DataError.
LoadResult load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                    const spectral::BandMapping& mapping = spectral::BandMapping::landsat8());

// ---------------------------------------------------------------------------
// Synthetic data

/// Reflectance bands the generator draws.
inline constexpr std::array<spectral::Band, 6> kSyntheticBands{spectral::Band::blue,  spectral::Band::green,
                                                               spectral::Band::red,   spectral::Band::nir,
                                                               spectral::Band::swir1, spectral::Band::swir2};

struct SyntheticClass {
    std::string name;
    std::array<double, 6> mean{}; // blue, green, red, nir, swir1, swir2
    double spread = 0.02;         // per-band standard deviation
    std::size_t count = 0;
};

struct SyntheticSpec {
    std::vector<SyntheticClass> classes;
    /// Class pairs whose means are pulled toward each other by `confusion`.
    std::vector<std::pair<std::string, std::string>> confusable_pairs;
    double confusion = 0.0; // 0 keeps means, 1 collapses each pair to its midpoint
    /// Each sample comes from one of two equally likely growth stages whose
    /// band centres are mean * (1 +/- phenology * phenology_direction).
    double phenology = 0.0;
    std::array<double, 6> phenology_direction{};
    std::vector<std::string> features = spectral::default_feature_selection();
    std::size_t noise_features = 0; // extra uniform[0,1] columns named noise_1..noise_k

    /// Six crops with counts per class; spectrally similar pairs mirror the
    /// potato/mustard/cotton and wheat/maize/sugarcane overlaps.
    static SyntheticSpec crops(std::span<const std::size_t> counts, double confusion = 0.3, double phenology = 0.2);
    static SyntheticSpec crops(std::size_t per_class = 2000, double confusion = 0.3, double phenology = 0.2);

    void validate() const;
    /// Class means after the confusion pull, clamped to [0, 1].
    std::vector<std::array<double, 6>> effective_means() const;
    std::vector<std::string> feature_names() const;
};

struct SyntheticRecord {
    spectral::BandRecord bands;
    int label = 0;
    std::vector<double> noise;
};

/// Class-conditional draws, shuffled; deterministic in (spec, seed). Draws
/// whose selected indices are not computable are redrawn.
std::vector<SyntheticRecord> generate_synthetic_records(const SyntheticSpec& spec, std::uint64_t seed);
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);
Dataset records_to_dataset(const SyntheticSpec& spec, std::span<const SyntheticRecord> records);

// ---------------------------------------------------------------------------
// Normalization

struct NormalizationParams {
    std::vector<double> mean;
    std::vector<double> stddev; // population standard deviation

    std::size_t dimension() const noexcept { return mean.size(); }
};

/// Per-feature population moments of `train` (rows are samples).
NormalizationParams fit_normalizer(const Matrix& train);

/// z = (x - mean) / stddev; zero-variance features map to 0.
Matrix apply_normalizer(const NormalizationParams& params, const Matrix& samples);

/// x = z * stddev + mean.
Matrix invert_normalizer(const NormalizationParams& params, const Matrix& z);

// ---------------------------------------------------------------------------
// Splitting and resampling

enum class SplitRole : std::uint8_t { train = 0, val = 1, test = 2 };

struct SplitFractions {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;

    void validate() const;
    std::array<double, 3> as_array() const noexcept { return {train, val, test}; }
};

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
    SplitFractions fractions;
    std::uint64_t seed = 0;

    const std::vector<std::size_t>& indices(SplitRole role) const;
    std::size_t total() const noexcept { return train.size() + val.size() + test.size(); }
    /// Stable hash of the per-sample role assignment.
    std::uint64_t fingerprint() const;
};

/// Largest-remainder rounding of `total * fractions`; ties go to the earlier part.
std::array<std::size_t, 3> largest_remainder(std::size_t total, const std::array<double, 3>& fractions);

/// Per-class proportional split. Every per-class count is the floor or ceiling
/// of its exact quota, and the split totals equal the largest-remainder
/// rounding of N * fraction. Index lists come back sorted.
DatasetSplit stratified_split(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed);
DatasetSplit stratified_split(std::span<const int> labels, std::span<const std::string> class_names,
                              const SplitFractions& fractions, std::uint64_t seed);

/// Draws indices.size() elements of `indices` uniformly with replacement.
std::vector<std::size_t> bootstrap_sample(std::span<const std::size_t> indices, std::uint64_t seed);

std::string_view role_name(SplitRole role) noexcept;
std::optional<SplitRole> role_from_name(std::string_view name) noexcept;

} // namespace asen::data
