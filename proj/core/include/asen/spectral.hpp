#pragma once

// Vegetation indices over per-band reflectance and feature-vector assembly.
//
// Index formulas are written over semantic band names (NIR, Red, Green, Blue)
// rather than sensor band numbers. BandMapping resolves semantic names to the
// source columns of a tabular file; the default follows Landsat 8/9 OLI
// numbering (B2 blue, B3 green, B4 red, B5 NIR, B6/B7 SWIR).

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace asen::spectral {

/// One pixel's band values (Landsat 8/9 bands 1-11). Only coastal..swir2
/// feed the indices.
struct BandRecord {
    double coastal = 0.0;
    double blue = 0.0;
    double green = 0.0;
    double red = 0.0;
    double nir = 0.0;
    double swir1 = 0.0;
    double swir2 = 0.0;
    double pan = 0.0;
    double cirrus = 0.0;
    double tir1 = 0.0;
    double tir2 = 0.0;
};

enum class Band { coastal, blue, green, red, nir, swir1, swir2, pan, cirrus, tir1, tir2 };
inline constexpr std::size_t kBandCount = 11;

/// Reflectance bands that indices and the default feature set may draw on.
inline constexpr std::array<Band, 7> kReflectanceBands{Band::coastal, Band::blue,  Band::green, Band::red,
                                                       Band::nir,     Band::swir1, Band::swir2};

std::string_view band_name(Band band) noexcept;
std::optional<Band> band_from_name(std::string_view name) noexcept;
double band_value(const BandRecord& rec, Band band) noexcept;
void set_band_value(BandRecord& rec, Band band, double value) noexcept;

/// Semantic band -> source column name. Injective; see validate().
class BandMapping {
public:
    /// Landsat 8/9: coastal=B1, blue=B2, green=B3, red=B4, nir=B5, swir1=B6, swir2=B7,
    /// pan=B8, cirrus=B9, tir1=B10, tir2=B11.
    static BandMapping landsat8();

    void assign(Band band, std::string column);
    const std::optional<std::string>& column(Band band) const { return columns_[static_cast<std::size_t>(band)]; }

    /// Throws ConfigError if two bands share a column or a band in `required` is unmapped.
    void validate(std::span<const Band> required) const;

private:
    std::array<std::optional<std::string>, kBandCount> columns_{};
};

enum class Index { ndvi, evi, savi, gndvi, rendvi, msavi, ndwi, ndre, sr, pri };
inline constexpr std::size_t kIndexCount = 10;

std::string_view index_name(Index index) noexcept;
std::optional<Index> index_from_name(std::string_view name) noexcept;

/// The ten indices. An empty optional marks a value whose denominator
/// vanished (not computable).
struct IndexVector {
    std::optional<double> ndvi, evi, savi, gndvi, rendvi, msavi, ndwi, ndre, sr, pri;

    const std::optional<double>& get(Index index) const noexcept;
    bool complete() const noexcept;
};

/// (a - b) / (a + b). Throws DegenerateDenominator when a + b == 0 and
/// DataError for negative or non-finite inputs.
double normalized_difference(double a, double b);

/// Evaluates all ten indices. Degenerate denominators yield empty entries;
/// negative or non-finite reflectance in a used band throws DataError.
IndexVector compute_indices(const BandRecord& rec);

/// Bands read by compute_indices.
std::span<const Band> index_input_bands() noexcept;

/// A named feature is either a raw band or a derived index.
struct Feature {
    enum class Kind { band, index } kind;
    Band band = Band::coastal;
    Index index = Index::ndvi;

    static Feature parse(std::string_view name); // throws ConfigError on unknown names
    std::string name() const;
};

/// Default 11 inputs: six reflectance bands plus NDVI, EVI, SAVI, GNDVI, NDRE.
const std::vector<std::string>& default_feature_selection();

/// Values of `selection` in order. Empty when a selected index is not computable.
/// Throws ConfigError on an unknown feature name.
std::optional<std::vector<double>> build_feature_vector(const BandRecord& rec, const IndexVector& idx,
                                                        std::span<const std::string> selection);

/// True when every name parses as a band or index.
bool is_spectral_feature(std::string_view name) noexcept;

} // namespace asen::spectral
