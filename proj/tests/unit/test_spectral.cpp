#include "asen/error.hpp"
#include "asen/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace asen;
using namespace asen::spectral;

namespace {

BandRecord hand_example() {
    BandRecord r;
    r.nir = 0.5;
    r.red = 0.1;
    r.blue = 0.05;
    r.green = 0.2;
    return r;
}

BandRecord random_record(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    BandRecord r;
    for (Band b : kReflectanceBands) set_band_value(r, b, u(rng));
    return r;
}

} // namespace

TEST(NormalizedDifference, HandValues) {
    EXPECT_DOUBLE_EQ(normalized_difference(0.5, 0.5), 0.0);
    EXPECT_NEAR(normalized_difference(0.5, 0.1), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(normalized_difference(0.1, 0.5), -2.0 / 3.0, 1e-15);
}

TEST(NormalizedDifference, DegenerateAndInvalidInputs) {
    EXPECT_THROW(normalized_difference(0.0, 0.0), DegenerateDenominator);
    EXPECT_THROW(normalized_difference(-0.1, 0.5), DataError);
    EXPECT_THROW(normalized_difference(NAN, 0.5), DataError);
}

TEST(NormalizedDifference, RangeAndSymmetryProperties) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const double a = u(rng), b = u(rng);
        const double v = normalized_difference(a, b);
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 1.0);
        EXPECT_EQ(v, -normalized_difference(b, a));
        EXPECT_EQ(normalized_difference(a, a), 0.0);
    }
}

TEST(ComputeIndices, HandExample) {
    const auto idx = compute_indices(hand_example());
    ASSERT_TRUE(idx.complete());
    EXPECT_NEAR(*idx.ndvi, 0.4 / 0.6, 1e-12);
    EXPECT_NEAR(*idx.gndvi, 0.3 / 0.7, 1e-12);
    EXPECT_NEAR(*idx.sr, 5.0, 1e-12);
    EXPECT_NEAR(*idx.savi, 1.5 * 0.4 / 1.1, 1e-12);
    EXPECT_NEAR(*idx.evi, 2.5 * 0.4 / (0.5 + 0.6 - 0.375 + 1.0), 1e-12);
    EXPECT_NEAR(*idx.ndwi, (0.2 - 0.5) / 0.7, 1e-12);
    EXPECT_NEAR(*idx.evi, 0.57971, 1e-5);
    EXPECT_NEAR(*idx.savi, 0.54545, 1e-5);
    EXPECT_NEAR(*idx.gndvi, 0.42857, 1e-5);
}

TEST(ComputeIndices, NirEqualsRed) {
    BandRecord r;
    r.nir = 0.3;
    r.red = 0.3;
    r.green = 0.1;
    r.blue = 0.1;
    const auto idx = compute_indices(r);
    EXPECT_EQ(*idx.ndvi, 0.0);
    EXPECT_EQ(*idx.savi, 0.0);
    EXPECT_EQ(*idx.msavi, 0.0);
    EXPECT_EQ(*idx.sr, 1.0);
    EXPECT_EQ(*idx.pri, 0.0);
}

TEST(ComputeIndices, DegenerateDenominatorsAreMarked) {
    BandRecord r; // all zero
    const auto idx = compute_indices(r);
    EXPECT_FALSE(idx.ndvi.has_value());
    EXPECT_FALSE(idx.sr.has_value());
    EXPECT_FALSE(idx.complete());
    // SAVI and MSAVI stay defined at zero reflectance.
    EXPECT_TRUE(idx.savi.has_value());
    EXPECT_TRUE(idx.msavi.has_value());
}

TEST(ComputeIndices, NegativeReflectanceRejected) {
    BandRecord r = hand_example();
    r.red = -0.01;
    EXPECT_THROW(compute_indices(r), DataError);
}

TEST(ComputeIndices, IdentitiesOnRandomRecords) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 10000; ++i) {
        const BandRecord r = random_record(rng);
        const auto idx = compute_indices(r);
        ASSERT_TRUE(idx.ndvi && idx.pri && idx.ndre && idx.rendvi);
        EXPECT_EQ(*idx.pri, -*idx.ndvi);
        EXPECT_EQ(*idx.ndre, *idx.rendvi);
        for (Index k : {Index::ndvi, Index::gndvi, Index::rendvi, Index::ndwi, Index::ndre, Index::pri}) {
            const auto& v = idx.get(k);
            ASSERT_TRUE(v.has_value());
            EXPECT_GE(*v, -1.0);
            EXPECT_LE(*v, 1.0);
        }
        if (idx.sr) EXPECT_GE(*idx.sr, 0.0);
        // (2N + 1)^2 - 8(N - R) = (2N - 1)^2 + 8R >= 0 for non-negative bands.
        const double radicand = std::pow(2 * r.nir + 1, 2) - 8 * (r.nir - r.red);
        EXPECT_NEAR(radicand, std::pow(2 * r.nir - 1, 2) + 8 * r.red, 1e-12);
        EXPECT_GE(radicand, 0.0);
        BandRecord eq = r;
        eq.red = eq.nir;
        EXPECT_EQ(*compute_indices(eq).msavi, 0.0);
    }
}

TEST(ComputeIndices, PureFunction) {
    std::mt19937_64 rng(3);
    const BandRecord r = random_record(rng);
    const auto a = compute_indices(r);
    const auto b = compute_indices(r);
    for (std::size_t k = 0; k < kIndexCount; ++k) {
        EXPECT_EQ(a.get(static_cast<Index>(k)), b.get(static_cast<Index>(k)));
    }
}

TEST(FeatureVector, SelectionOrderAndDefault) {
    const BandRecord r = hand_example();
    const auto idx = compute_indices(r);
    const std::vector<std::string> sel{"blue", "ndvi", "sr"};
    const auto v = build_feature_vector(r, idx, sel);
    ASSERT_TRUE(v);
    ASSERT_EQ(v->size(), 3u);
    EXPECT_EQ((*v)[0], 0.05);
    EXPECT_NEAR((*v)[1], 0.6667, 1e-4);
    EXPECT_NEAR((*v)[2], 5.0, 1e-12);

    EXPECT_EQ(default_feature_selection().size(), 11u);
    const auto full = build_feature_vector(r, idx, default_feature_selection());
    ASSERT_TRUE(full);
    EXPECT_EQ(full->size(), 11u);
}

TEST(FeatureVector, NdviOnlyWithNirEqualRed) {
    BandRecord r;
    r.nir = r.red = 0.2;
    const std::vector<std::string> sel{"ndvi"};
    const auto v = build_feature_vector(r, compute_indices(r), sel);
    ASSERT_TRUE(v);
    EXPECT_EQ((*v)[0], 0.0);
}

TEST(FeatureVector, UnknownNameRejected) {
    const BandRecord r = hand_example();
    const std::vector<std::string> sel{"ndvi", "reci"};
    EXPECT_THROW(build_feature_vector(r, compute_indices(r), sel), ConfigError);
    EXPECT_THROW(Feature::parse("savo"), ConfigError);
    EXPECT_FALSE(is_spectral_feature("reci"));
    EXPECT_TRUE(is_spectral_feature("swir2"));
}

TEST(FeatureVector, DegenerateIndexGivesEmpty) {
    BandRecord r; // zero NIR and Red: ndvi not computable
    const std::vector<std::string> sel{"blue", "ndvi"};
    EXPECT_FALSE(build_feature_vector(r, compute_indices(r), sel).has_value());
}

TEST(BandMapping, Landsat8Defaults) {
    const auto m = BandMapping::landsat8();
    EXPECT_EQ(*m.column(Band::nir), "B5");
    EXPECT_EQ(*m.column(Band::red), "B4");
    EXPECT_EQ(*m.column(Band::green), "B3");
    EXPECT_EQ(*m.column(Band::blue), "B2");
    EXPECT_NO_THROW(m.validate(index_input_bands()));
}

TEST(BandMapping, RejectsSharedColumnAndMissingBand) {
    auto m = BandMapping::landsat8();
    m.assign(Band::red, "B5");
    EXPECT_THROW(m.validate(index_input_bands()), ConfigError);

    BandMapping empty;
    EXPECT_THROW(empty.validate(index_input_bands()), ConfigError);
}

TEST(Names, RoundTrip) {
    for (std::size_t k = 0; k < kIndexCount; ++k) {
        const auto i = static_cast<Index>(k);
        EXPECT_EQ(index_from_name(index_name(i)), i);
    }
    for (std::size_t k = 0; k < kBandCount; ++k) {
        const auto b = static_cast<Band>(k);
        EXPECT_EQ(band_from_name(band_name(b)), b);
        EXPECT_EQ(Feature::parse(band_name(b)).name(), band_name(b));
    }
}
