#pragma once

#include "asen/dataset.hpp"
#include "asen/linalg.hpp"
#include "asen/mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fixture {

/// Isotropic Gaussian blobs: class c centred at `separation * e_(c mod d)`
/// (with sign flipped on every second wrap), unit variance.
inline asen::mlp::LabeledMatrix blobs(std::size_t per_class, std::size_t classes, std::size_t dim,
                                      double separation, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    asen::mlp::LabeledMatrix out;
    out.x.resize(static_cast<Eigen::Index>(per_class * classes), static_cast<Eigen::Index>(dim));
    std::size_t r = 0;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (std::size_t c = 0; c < classes; ++c, ++r) {
            for (std::size_t k = 0; k < dim; ++k) out.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = g(rng);
            const double sign = (c / dim) % 2 == 0 ? 1.0 : -1.0;
            out.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c % dim)) += sign * separation;
            out.y.push_back(static_cast<int>(c));
        }
    }
    return out;
}

inline asen::data::Dataset to_dataset(const asen::mlp::LabeledMatrix& m, std::size_t classes) {
    asen::data::Dataset ds;
    for (Eigen::Index k = 0; k < m.x.cols(); ++k) ds.feature_names.push_back("f" + std::to_string(k));
    for (std::size_t c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
    for (Eigen::Index r = 0; r < m.x.rows(); ++r) {
        asen::data::LabeledSample s;
        s.features.assign(m.x.row(r).data(), m.x.row(r).data() + m.x.cols());
        s.label = m.y[static_cast<std::size_t>(r)];
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("asen_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace fixture
