#include "asen/spectral.hpp"

#include "asen/error.hpp"

#include <cmath>
#include <set>

namespace asen::spectral {

namespace {

constexpr std::array<std::string_view, kBandCount> kBandNames{
    "coastal", "blue", "green", "red", "nir", "swir1", "swir2", "pan", "cirrus", "tir1", "tir2"};

constexpr std::array<std::string_view, kIndexCount> kIndexNames{
    "ndvi", "evi", "savi", "gndvi", "rendvi", "msavi", "ndwi", "ndre", "sr", "pri"};

constexpr std::array<Band, 4> kIndexInputs{Band::blue, Band::green, Band::red, Band::nir};

std::optional<double> try_nd(double a, double b) {
    const double den = a + b;
    if (den == 0.0) return std::nullopt;
    return (a - b) / den;
}

void require_reflectance(double v, Band band) {
    if (!std::isfinite(v) || v < 0.0) {
        throw DataError("band '" + std::string(band_name(band)) + "' must be finite and non-negative, got " +
                        std::to_string(v));
    }
}

} // namespace

std::string_view band_name(Band band) noexcept { return kBandNames[static_cast<std::size_t>(band)]; }

std::optional<Band> band_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kBandNames.size(); ++i) {
        if (kBandNames[i] == name) return static_cast<Band>(i);
    }
    return std::nullopt;
}

double band_value(const BandRecord& rec, Band band) noexcept {
    switch (band) {
    case Band::coastal: return rec.coastal;
    case Band::blue: return rec.blue;
    case Band::green: return rec.green;
    case Band::red: return rec.red;
    case Band::nir: return rec.nir;
    case Band::swir1: return rec.swir1;
    case Band::swir2: return rec.swir2;
    case Band::pan: return rec.pan;
    case Band::cirrus: return rec.cirrus;
    case Band::tir1: return rec.tir1;
    case Band::tir2: return rec.tir2;
    }
    return 0.0;
}

void set_band_value(BandRecord& rec, Band band, double value) noexcept {
    switch (band) {
    case Band::coastal: rec.coastal = value; break;
    case Band::blue: rec.blue = value; break;
    case Band::green: rec.green = value; break;
    case Band::red: rec.red = value; break;
    case Band::nir: rec.nir = value; break;
    case Band::swir1: rec.swir1 = value; break;
    case Band::swir2: rec.swir2 = value; break;
    case Band::pan: rec.pan = value; break;
    case Band::cirrus: rec.cirrus = value; break;
    case Band::tir1: rec.tir1 = value; break;
    case Band::tir2: rec.tir2 = value; break;
    }
}

BandMapping BandMapping::landsat8() {
    BandMapping m;
    for (std::size_t i = 0; i < kBandCount; ++i) {
        m.columns_[i] = "B" + std::to_string(i + 1);
    }
    return m;
}

void BandMapping::assign(Band band, std::string column) { columns_[static_cast<std::size_t>(band)] = std::move(column); }

void BandMapping::validate(std::span<const Band> required) const {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < kBandCount; ++i) {
        if (!columns_[i]) continue;
        if (!seen.insert(*columns_[i]).second) {
            throw ConfigError("band mapping is not injective: column '" + *columns_[i] + "' assigned twice");
        }
    }
    for (Band b : required) {
        if (!column(b)) throw ConfigError("band '" + std::string(band_name(b)) + "' is required but not mapped");
    }
}

std::string_view index_name(Index index) noexcept { return kIndexNames[static_cast<std::size_t>(index)]; }

std::optional<Index> index_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kIndexNames.size(); ++i) {
        if (kIndexNames[i] == name) return static_cast<Index>(i);
    }
    return std::nullopt;
}

const std::optional<double>& IndexVector::get(Index index) const noexcept {
    switch (index) {
    case Index::ndvi: return ndvi;
    case Index::evi: return evi;
    case Index::savi: return savi;
    case Index::gndvi: return gndvi;
    case Index::rendvi: return rendvi;
    case Index::msavi: return msavi;
    case Index::ndwi: return ndwi;
    case Index::ndre: return ndre;
    case Index::sr: return sr;
    case Index::pri: return pri;
    }
    return ndvi;
}

bool IndexVector::complete() const noexcept {
    for (std::size_t i = 0; i < kIndexCount; ++i) {
        if (!get(static_cast<Index>(i))) return false;
    }
    return true;
}

double normalized_difference(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b) || a < 0.0 || b < 0.0) {
        throw DataError("normalized_difference requires finite non-negative inputs");
    }
    auto v = try_nd(a, b);
    if (!v) throw DegenerateDenominator("normalized_difference: a + b == 0");
    return *v;
}

IndexVector compute_indices(const BandRecord& rec) {
    for (Band b : kIndexInputs) require_reflectance(band_value(rec, b), b);

    const double nir = rec.nir;
    const double red = rec.red;
    const double green = rec.green;
    const double blue = rec.blue;

    IndexVector out;
    out.ndvi = try_nd(nir, red);

    const double evi_den = nir + 6.0 * red - 7.5 * blue + 1.0;
    if (evi_den > 0.0) out.evi = 2.5 * (nir - red) / evi_den;

    out.savi = 1.5 * (nir - red) / (nir + red + 0.5);
    out.gndvi = try_nd(nir, green);

    // No red-edge band on OLI: the red-edge indices reduce to nir/red.
    out.rendvi = try_nd(nir, red);
    out.ndre = try_nd(nir, red);

    const double lead = 2.0 * nir + 1.0;
    const double radicand = lead * lead - 8.0 * (nir - red);
    if (radicand < 0.0) {
        throw std::logic_error("MSAVI radicand negative for non-negative reflectance");
    }
    out.msavi = 0.5 * (lead - std::sqrt(radicand));

    out.ndwi = try_nd(green, nir);
    if (red != 0.0) out.sr = nir / red;
    out.pri = try_nd(red, nir);
    return out;
}

std::span<const Band> index_input_bands() noexcept { return kIndexInputs; }

Feature Feature::parse(std::string_view name) {
    if (auto b = band_from_name(name)) return Feature{Kind::band, *b, Index::ndvi};
    if (auto i = index_from_name(name)) return Feature{Kind::index, Band::coastal, *i};
    throw ConfigError("unknown feature name '" + std::string(name) + "'");
}

std::string Feature::name() const {
    return std::string(kind == Kind::band ? band_name(band) : index_name(index));
}

const std::vector<std::string>& default_feature_selection() {
    static const std::vector<std::string> names{"blue", "green", "red", "nir",  "swir1", "swir2",
                                                "ndvi", "evi",   "savi", "gndvi", "ndre"};
    return names;
}

std::optional<std::vector<double>> build_feature_vector(const BandRecord& rec, const IndexVector& idx,
                                                        std::span<const std::string> selection) {
    std::vector<double> out;
    out.reserve(selection.size());
    for (const auto& name : selection) {
        const Feature f = Feature::parse(name);
        if (f.kind == Feature::Kind::band) {
            out.push_back(band_value(rec, f.band));
            continue;
        }
        const auto& v = idx.get(f.index);
        if (!v) return std::nullopt;
        out.push_back(*v);
    }
    return out;
}

bool is_spectral_feature(std::string_view name) noexcept {
    return band_from_name(name).has_value() || index_from_name(name).has_value();
}

} // namespace asen::spectral
