#include "asen/dataset.hpp"

#include "asen/csv.hpp"
#include "asen/error.hpp"
#include "asen/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

namespace asen::data {

const std::vector<std::string>& crop_classes() {
    static const std::vector<std::string> names{"sugarcane", "wheat", "potato", "mustard", "maize", "cotton"};
    return names;
}

void Dataset::validate() const {
    if (std::set<std::string>(class_names.begin(), class_names.end()).size() != class_names.size()) {
        throw DataError("class names are not distinct");
    }
    if (std::set<std::string>(feature_names.begin(), feature_names.end()).size() != feature_names.size()) {
        throw DataError("feature names are not distinct");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.features.size() != feature_names.size()) {
            throw DataError("sample " + std::to_string(i) + " has " + std::to_string(s.features.size()) +
                            " features, expected " + std::to_string(feature_names.size()));
        }
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= class_names.size()) {
            throw DataError("sample " + std::to_string(i) + " has label outside the class set");
        }
        for (double v : s.features) {
            if (!std::isfinite(v)) throw DataError("sample " + std::to_string(i) + " has a non-finite feature");
        }
    }
}

Matrix Dataset::features(std::span<const std::size_t> rows) const {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dimension()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& f = samples.at(rows[r]).features;
        for (std::size_t c = 0; c < f.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f[c];
    }
    return m;
}

Matrix Dataset::features() const {
    std::vector<std::size_t> all(size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return features(all);
}

std::vector<int> Dataset::labels(std::span<const std::size_t> rows) const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(samples.at(r).label);
    return out;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(size());
    for (const auto& s : samples) out.push_back(s.label);
    return out;
}

Dataset Dataset::select_features(std::span<const std::string> columns) const {
    std::vector<std::size_t> pos;
    for (const auto& name : columns) {
        auto it = std::find(feature_names.begin(), feature_names.end(), name);
        if (it == feature_names.end()) throw ConfigError("dataset has no feature named '" + name + "'");
        pos.push_back(static_cast<std::size_t>(it - feature_names.begin()));
    }
    Dataset out;
    out.feature_names.assign(columns.begin(), columns.end());
    out.class_names = class_names;
    out.provenance = provenance;
    out.samples.reserve(samples.size());
    for (const auto& s : samples) {
        LabeledSample t = s;
        t.features.clear();
        for (std::size_t p : pos) t.features.push_back(s.features[p]);
        out.samples.push_back(std::move(t));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct ColumnLookup {
    std::map<std::string, std::size_t> by_name;

    std::size_t require(const std::string& name) const {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw SchemaError("missing column '" + name + "'");
        return it->second;
    }
    std::optional<std::size_t> find(const std::string& name) const {
        auto it = by_name.find(name);
        if (it == by_name.end()) return std::nullopt;
        return it->second;
    }
};

bool blank(std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; }

} // namespace

LoadResult load_csv(const std::filesystem::path& path, const CsvSchema& schema, const spectral::BandMapping& mapping) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw SchemaError("'" + path.string() + "' has no header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    ColumnLookup cols;
    {
        const auto header = csv::split_record(line);
        for (std::size_t i = 0; i < header.size(); ++i) cols.by_name.emplace(header[i], i);
    }
    const std::size_t width = cols.by_name.size();

    // Resolve which bands to read and where each feature comes from.
    std::set<spectral::Band> bands_needed;
    std::vector<std::optional<std::size_t>> raw_column(schema.features.size());
    bool need_indices = false;
    for (std::size_t f = 0; f < schema.features.size(); ++f) {
        const auto& name = schema.features[f];
        if (auto b = spectral::band_from_name(name)) {
            bands_needed.insert(*b);
        } else if (spectral::index_from_name(name)) {
            need_indices = true;
        } else {
            raw_column[f] = cols.require(name);
        }
    }
    if (need_indices) {
        for (auto b : spectral::index_input_bands()) bands_needed.insert(b);
    }
    const std::vector<spectral::Band> band_list(bands_needed.begin(), bands_needed.end());
    mapping.validate(band_list);

    std::vector<std::pair<spectral::Band, std::size_t>> band_columns;
    for (auto b : band_list) band_columns.emplace_back(b, cols.require(*mapping.column(b)));

    const std::size_t label_col = cols.require(schema.label_column);
    const auto lat_col = schema.latitude_column ? std::optional(cols.require(*schema.latitude_column)) : std::nullopt;
    const auto lon_col = schema.longitude_column ? std::optional(cols.require(*schema.longitude_column)) : std::nullopt;
    const auto id_col = schema.id_column ? std::optional(cols.require(*schema.id_column)) : std::nullopt;

    LoadResult result;
    Dataset& ds = result.dataset;
    LoadStats& stats = result.stats;
    ds.feature_names = schema.features;
    ds.class_names = schema.class_names;
    const bool open_classes = schema.class_names.empty();
    std::map<std::string, int> class_index;
    for (std::size_t c = 0; c < ds.class_names.size(); ++c) class_index.emplace(ds.class_names[c], static_cast<int>(c));

    // Cell outcome for numeric fields.
    enum class Cell { ok, missing, bad };
    auto read_number = [](const std::vector<std::string>& fields, std::size_t col, double& out) {
        const auto& text = fields[col];
        if (blank(text)) return Cell::missing;
        auto v = csv::parse_double(text);
        if (!v) return Cell::bad;
        out = *v;
        return Cell::ok;
    };

    while (std::getline(in, line)) {
        if (blank(line) || line == "\r") continue;
        ++stats.rows_read;
        const auto fields = csv::split_record(line);
        if (fields.size() != width) {
            ++stats.skipped_unparseable;
            continue;
        }

        spectral::BandRecord rec;
        bool missing = false, bad = false, invalid = false;
        for (auto [band, col] : band_columns) {
            double v = 0.0;
            switch (read_number(fields, col, v)) {
            case Cell::missing: missing = true; break;
            case Cell::bad: bad = true; break;
            case Cell::ok:
                if (!std::isfinite(v) || v < 0.0) invalid = true;
                spectral::set_band_value(rec, band, v);
                break;
            }
        }
        std::vector<double> raw(schema.features.size(), 0.0);
        for (std::size_t f = 0; f < raw_column.size(); ++f) {
            if (!raw_column[f]) continue;
            switch (read_number(fields, *raw_column[f], raw[f])) {
            case Cell::missing: missing = true; break;
            case Cell::bad: bad = true; break;
            case Cell::ok:
                if (!std::isfinite(raw[f])) invalid = true;
                break;
            }
        }
        const std::string& label_text = fields[label_col];
        if (blank(label_text)) missing = true;

        if (bad) {
            ++stats.skipped_unparseable;
            continue;
        }
        if (missing) {
            ++stats.skipped_missing;
            continue;
        }
        if (invalid) {
            ++stats.skipped_invalid_reflectance;
            continue;
        }

        int label = -1;
        if (auto it = class_index.find(label_text); it != class_index.end()) {
            label = it->second;
        } else if (open_classes) {
            label = static_cast<int>(ds.class_names.size());
            ds.class_names.push_back(label_text);
            class_index.emplace(label_text, label);
        } else {
            ++stats.skipped_unknown_label;
            continue;
        }

        LabeledSample sample;
        sample.label = label;
        spectral::IndexVector idx;
        if (need_indices) idx = spectral::compute_indices(rec);
        sample.features.reserve(schema.features.size());
        bool degenerate = false;
        for (std::size_t f = 0; f < schema.features.size(); ++f) {
            if (raw_column[f]) {
                sample.features.push_back(raw[f]);
                continue;
            }
            const auto feature = spectral::Feature::parse(schema.features[f]);
            if (feature.kind == spectral::Feature::Kind::band) {
                sample.features.push_back(spectral::band_value(rec, feature.band));
            } else if (const auto& v = idx.get(feature.index)) {
                sample.features.push_back(*v);
            } else {
                degenerate = true;
                break;
            }
        }
        if (degenerate) {
            ++stats.skipped_degenerate_index;
            continue;
        }

        if (lat_col) sample.latitude = csv::parse_double(fields[*lat_col]);
        if (lon_col) sample.longitude = csv::parse_double(fields[*lon_col]);
        if (id_col) sample.source_id = fields[*id_col];
        ds.samples.push_back(std::move(sample));
    }

    if (ds.samples.empty()) throw DataError("'" + path.string() + "' contains no valid rows");
    ds.provenance = "csv:" + path.filename().string();
    ds.validate();
    return result;
}

// ---------------------------------------------------------------------------

NormalizationParams fit_normalizer(const Matrix& train) {
    if (train.rows() < 1) throw DataError("fit_normalizer: empty input");
    if (train.rows() < 2) throw DataError("fit_normalizer: need at least 2 samples");
    NormalizationParams p;
    const auto n = static_cast<double>(train.rows());
    for (Eigen::Index c = 0; c < train.cols(); ++c) {
        const double mu = train.col(c).sum() / n;
        const double var = (train.col(c).array() - mu).square().sum() / n;
        p.mean.push_back(mu);
        p.stddev.push_back(std::sqrt(var));
    }
    return p;
}

Matrix apply_normalizer(const NormalizationParams& params, const Matrix& samples) {
    if (static_cast<std::size_t>(samples.cols()) != params.dimension()) {
        throw DimensionError("apply_normalizer: expected " + std::to_string(params.dimension()) + " features, got " +
                             std::to_string(samples.cols()));
    }
    Matrix z(samples.rows(), samples.cols());
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
        const double mu = params.mean[static_cast<std::size_t>(c)];
        const double sd = params.stddev[static_cast<std::size_t>(c)];
        const double div = sd > 0.0 ? sd : 1.0;
        if (sd > 0.0) {
            z.col(c) = (samples.col(c).array() - mu) / div;
        } else {
            z.col(c).setZero();
        }
    }
    return z;
}

Matrix invert_normalizer(const NormalizationParams& params, const Matrix& z) {
    if (static_cast<std::size_t>(z.cols()) != params.dimension()) {
        throw DimensionError("invert_normalizer: dimension mismatch");
    }
    Matrix x(z.rows(), z.cols());
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        x.col(c) = z.col(c).array() * params.stddev[static_cast<std::size_t>(c)] + params.mean[static_cast<std::size_t>(c)];
    }
    return x;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kQuotaSlack = 1e-9;

std::size_t floor_quota(double q) { return static_cast<std::size_t>(std::floor(q + kQuotaSlack)); }

bool has_remainder(double q) { return q - static_cast<double>(floor_quota(q)) > kQuotaSlack; }

// Bipartite assignment of one extra sample per (class, split) cell so that
// class rows and split columns reach their targets. Small Ford-Fulkerson on a
// classes x 3 grid.
class ExtraAssignment {
public:
    ExtraAssignment(std::vector<std::array<bool, 3>> allowed, std::vector<std::array<double, 3>> preference)
        : allowed_(std::move(allowed)), pref_(std::move(preference)), taken_(allowed_.size(), {false, false, false}) {}

    bool solve(const std::vector<std::size_t>& row_need, std::array<std::size_t, 3> col_need) {
        col_need_ = col_need;
        col_load_ = {0, 0, 0};
        for (std::size_t r = 0; r < row_need.size(); ++r) {
            for (std::size_t k = 0; k < row_need[r]; ++k) {
                std::array<bool, 3> visited{false, false, false};
                if (!augment(r, visited)) return false;
            }
        }
        return col_load_ == col_need_;
    }

    bool taken(std::size_t r, std::size_t j) const { return taken_[r][j]; }

private:
    std::array<std::size_t, 3> columns_by_preference(std::size_t r) const {
        std::array<std::size_t, 3> order{0, 1, 2};
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pref_[r][a] > pref_[r][b]; });
        return order;
    }

    // Kuhn-style augmenting path: gives row r one more extra, possibly by
    // moving another row's extra out of a full column.
    bool augment(std::size_t r, std::array<bool, 3>& visited) {
        for (std::size_t j : columns_by_preference(r)) {
            if (!allowed_[r][j] || taken_[r][j] || visited[j]) continue;
            visited[j] = true;
            if (col_load_[j] < col_need_[j]) {
                taken_[r][j] = true;
                ++col_load_[j];
                return true;
            }
            for (std::size_t o = 0; o < allowed_.size(); ++o) {
                if (o == r || !taken_[o][j]) continue;
                if (augment(o, visited)) {
                    taken_[o][j] = false;
                    --col_load_[j];
                    taken_[r][j] = true;
                    ++col_load_[j];
                    return true;
                }
            }
        }
        return false;
    }

    std::vector<std::array<bool, 3>> allowed_;
    std::vector<std::array<double, 3>> pref_;
    std::vector<std::array<bool, 3>> taken_;
    std::array<std::size_t, 3> col_need_{};
    std::array<std::size_t, 3> col_load_{};
};

} // namespace

void SplitFractions::validate() const {
    if (!(train > 0.0 && val > 0.0 && test > 0.0)) throw ConfigError("split fractions must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

const std::vector<std::size_t>& DatasetSplit::indices(SplitRole role) const {
    switch (role) {
    case SplitRole::train: return train;
    case SplitRole::val: return val;
    case SplitRole::test: return test;
    }
    return test;
}

std::uint64_t DatasetSplit::fingerprint() const {
    std::vector<std::uint8_t> roles(total(), 0xff);
    for (auto i : train) roles.at(i) = 0;
    for (auto i : val) roles.at(i) = 1;
    for (auto i : test) roles.at(i) = 2;
    return fnv1a64(roles.data(), roles.size());
}

std::array<std::size_t, 3> largest_remainder(std::size_t total, const std::array<double, 3>& fractions) {
    std::array<std::size_t, 3> out{};
    std::array<double, 3> rem{};
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < 3; ++j) {
        const double q = static_cast<double>(total) * fractions[j];
        out[j] = floor_quota(q);
        rem[j] = q - static_cast<double>(out[j]);
        assigned += out[j];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k % 3]];
    return out;
}

DatasetSplit stratified_split(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed) {
    const auto labels = dataset.labels();
    return stratified_split(labels, dataset.class_names, fractions, seed);
}

DatasetSplit stratified_split(std::span<const int> labels, std::span<const std::string> class_names,
                              const SplitFractions& fractions, std::uint64_t seed) {
    fractions.validate();
    const std::size_t num_classes = class_names.size();
    std::vector<std::vector<std::size_t>> members(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int l = labels[i];
        if (l < 0 || static_cast<std::size_t>(l) >= num_classes) throw DataError("label outside class set");
        members[static_cast<std::size_t>(l)].push_back(i);
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (members[c].size() < 3) {
            throw DataError("class '" + class_names[c] + "' has " + std::to_string(members[c].size()) +
                            " samples; a stratified split needs at least 3");
        }
    }

    const auto f = fractions.as_array();
    const auto totals = largest_remainder(labels.size(), f);

    std::vector<std::array<std::size_t, 3>> counts(num_classes);
    std::vector<std::array<bool, 3>> allowed(num_classes);
    std::vector<std::array<double, 3>> pref(num_classes);
    std::vector<std::size_t> row_need(num_classes, 0);
    std::array<std::size_t, 3> col_floor{0, 0, 0};
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::size_t floors = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            const double q = static_cast<double>(members[c].size()) * f[j];
            counts[c][j] = floor_quota(q);
            allowed[c][j] = has_remainder(q);
            pref[c][j] = q - static_cast<double>(counts[c][j]);
            floors += counts[c][j];
            col_floor[j] += counts[c][j];
        }
        row_need[c] = members[c].size() - floors;
    }
    std::array<std::size_t, 3> col_need{};
    for (std::size_t j = 0; j < 3; ++j) col_need[j] = totals[j] - col_floor[j];

    ExtraAssignment extras(allowed, pref);
    if (!extras.solve(row_need, col_need)) {
        throw std::logic_error("stratified_split: no consistent rounding found");
    }

    DatasetSplit split;
    split.fractions = fractions;
    split.seed = seed;
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t j = 0; j < 3; ++j) counts[c][j] += extras.taken(c, j) ? 1 : 0;
        auto shuffled = members[c];
        Rng rng = make_rng(derive_seed(seed, c));
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto it = shuffled.begin();
        split.train.insert(split.train.end(), it, it + static_cast<std::ptrdiff_t>(counts[c][0]));
        it += static_cast<std::ptrdiff_t>(counts[c][0]);
        split.val.insert(split.val.end(), it, it + static_cast<std::ptrdiff_t>(counts[c][1]));
        it += static_cast<std::ptrdiff_t>(counts[c][1]);
        split.test.insert(split.test.end(), it, shuffled.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::vector<std::size_t> bootstrap_sample(std::span<const std::size_t> indices, std::uint64_t seed) {
    if (indices.empty()) throw DataError("bootstrap_sample: empty training set");
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, indices.size() - 1);
    std::vector<std::size_t> out(indices.size());
    for (auto& v : out) v = indices[pick(rng)];
    return out;
}

std::string_view role_name(SplitRole role) noexcept {
    switch (role) {
    case SplitRole::train: return "train";
    case SplitRole::val: return "val";
    case SplitRole::test: return "test";
    }
    return "test";
}

std::optional<SplitRole> role_from_name(std::string_view name) noexcept {
    if (name == "train") return SplitRole::train;
    if (name == "val" || name == "validation") return SplitRole::val;
    if (name == "test") return SplitRole::test;
    return std::nullopt;
}

} // namespace asen::data
