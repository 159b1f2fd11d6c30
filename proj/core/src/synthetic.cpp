#include "asen/dataset.hpp"
#include "asen/error.hpp"
#include "asen/random.hpp"

#include <algorithm>
#include <map>

namespace asen::data {

namespace {

// Mid-winter reflectance profiles (blue, green, red, nir, swir1, swir2).
struct CropProfile {
    const char* name;
    std::array<double, 6> mean;
    double spread;
};

constexpr std::array<CropProfile, 6> kCropProfiles{{
    {"sugarcane", {0.060, 0.090, 0.070, 0.320, 0.220, 0.130}, 0.007},
    {"wheat", {0.050, 0.080, 0.050, 0.380, 0.200, 0.100}, 0.005},
    {"potato", {0.070, 0.100, 0.090, 0.300, 0.240, 0.150}, 0.009},
    {"mustard", {0.060, 0.100, 0.070, 0.340, 0.210, 0.120}, 0.008},
    {"maize", {0.080, 0.110, 0.100, 0.280, 0.250, 0.170}, 0.007},
    {"cotton", {0.100, 0.120, 0.130, 0.240, 0.280, 0.210}, 0.010},
}};

// Relative band change between early- and late-sown fields: greener canopy
// raises NIR and lowers the visible and SWIR bands.
constexpr std::array<double, 6> kPhenologyDirection{-0.3, -0.15, -0.4, 1.0, -0.3, -0.4};

std::size_t class_position(const SyntheticSpec& spec, const std::string& name) {
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        if (spec.classes[c].name == name) return c;
    }
    throw ConfigError("confusable pair names unknown class '" + name + "'");
}

} // namespace

SyntheticSpec SyntheticSpec::crops(std::span<const std::size_t> counts, double confusion, double phenology) {
    if (counts.size() != kCropProfiles.size()) throw ConfigError("crop synthetic spec needs 6 class counts");
    SyntheticSpec spec;
    for (std::size_t c = 0; c < kCropProfiles.size(); ++c) {
        spec.classes.push_back({kCropProfiles[c].name, kCropProfiles[c].mean, kCropProfiles[c].spread, counts[c]});
    }
    spec.confusable_pairs = {{"potato", "mustard"}, {"mustard", "cotton"}, {"potato", "cotton"},
                             {"wheat", "maize"},    {"sugarcane", "maize"}};
    spec.confusion = confusion;
    spec.phenology = phenology;
    spec.phenology_direction = kPhenologyDirection;
    return spec;
}

SyntheticSpec SyntheticSpec::crops(std::size_t per_class, double confusion, double phenology) {
    const std::array<std::size_t, 6> counts{per_class, per_class, per_class, per_class, per_class, per_class};
    return crops(counts, confusion, phenology);
}

void SyntheticSpec::validate() const {
    if (classes.empty()) throw ConfigError("synthetic spec has zero classes");
    for (const auto& c : classes) {
        if (c.count == 0) throw ConfigError("synthetic class '" + c.name + "' has zero samples");
        if (!(c.spread >= 0.0)) throw ConfigError("synthetic class '" + c.name + "' has negative spread");
        for (double m : c.mean) {
            if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("synthetic class '" + c.name + "' mean outside [0, 1]");
        }
    }
    if (!(confusion >= 0.0 && confusion <= 1.0)) throw ConfigError("synthetic confusion must lie in [0, 1]");
    if (!(phenology >= 0.0 && phenology < 1.0)) throw ConfigError("synthetic phenology must lie in [0, 1)");
    for (const auto& [a, b] : confusable_pairs) {
        class_position(*this, a);
        class_position(*this, b);
    }
    for (const auto& f : features) spectral::Feature::parse(f);
}

std::vector<std::array<double, 6>> SyntheticSpec::effective_means() const {
    std::vector<std::array<double, 6>> means;
    for (const auto& c : classes) means.push_back(c.mean);
    auto shifted = means;
    for (const auto& [a, b] : confusable_pairs) {
        const auto ia = class_position(*this, a);
        const auto ib = class_position(*this, b);
        for (std::size_t k = 0; k < 6; ++k) {
            const double delta = 0.5 * confusion * (means[ib][k] - means[ia][k]);
            shifted[ia][k] += delta;
            shifted[ib][k] -= delta;
        }
    }
    for (auto& m : shifted) {
        for (auto& v : m) v = std::clamp(v, 0.0, 1.0);
    }
    return shifted;
}

std::vector<std::string> SyntheticSpec::feature_names() const {
    auto names = features;
    for (std::size_t k = 1; k <= noise_features; ++k) names.push_back("noise_" + std::to_string(k));
    return names;
}

std::vector<SyntheticRecord> generate_synthetic_records(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    const auto means = spec.effective_means();
    Rng rng = make_rng(derive_seed(seed, 0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution late(0.5);

    std::vector<SyntheticRecord> out;
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        const auto& cls = spec.classes[c];
        for (std::size_t n = 0; n < cls.count; ++n) {
            SyntheticRecord r;
            r.label = static_cast<int>(c);
            for (;;) {
                const double stage = late(rng) ? -spec.phenology : spec.phenology;
                for (std::size_t k = 0; k < kSyntheticBands.size(); ++k) {
                    const double centre = means[c][k] * (1.0 + stage * spec.phenology_direction[k]);
                    const double v = std::clamp(centre + cls.spread * gauss(rng), 0.0, 1.0);
                    spectral::set_band_value(r.bands, kSyntheticBands[k], v);
                }
                const auto idx = spectral::compute_indices(r.bands);
                if (spectral::build_feature_vector(r.bands, idx, spec.features)) break;
            }
            r.noise.resize(spec.noise_features);
            for (auto& v : r.noise) v = unit(rng);
            out.push_back(std::move(r));
        }
    }
    Rng order = make_rng(derive_seed(seed, 1));
    std::shuffle(out.begin(), out.end(), order);
    return out;
}

Dataset records_to_dataset(const SyntheticSpec& spec, std::span<const SyntheticRecord> records) {
    Dataset ds;
    ds.feature_names = spec.feature_names();
    for (const auto& c : spec.classes) ds.class_names.push_back(c.name);
    ds.samples.reserve(records.size());
    for (const auto& r : records) {
        LabeledSample s;
        s.label = r.label;
        s.features = *spectral::build_feature_vector(r.bands, spectral::compute_indices(r.bands), spec.features);
        s.features.insert(s.features.end(), r.noise.begin(), r.noise.end());
        ds.samples.push_back(std::move(s));
    }
    ds.validate();
    return ds;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    const auto records = generate_synthetic_records(spec, seed);
    Dataset ds = records_to_dataset(spec, records);
    ds.provenance = "synthetic:seed=" + std::to_string(seed);
    return ds;
}

} // namespace asen::data
