#include "asen_cli/run_config.hpp"

#include "asen/error.hpp"
#include "asen/random.hpp"

#include <fstream>

namespace asen::cli {

using io::Json;

namespace {

template <class T>
T read(const Json& j, const char* key, const std::string& path) {
    const std::string where = path + key;
    if (!j.contains(key)) throw ConfigError("missing config key '" + where + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + where + "' has the wrong type: " + j.at(key).dump());
    }
}

std::optional<std::string> read_optional_string(const Json& j, const char* key, const std::string& path) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return read<std::string>(j, key, path);
}

Json optional_json(const std::optional<std::string>& v) { return v ? Json(*v) : Json(nullptr); }

void merge_strict(Json& base, const Json& user, const std::string& path) {
    if (!user.is_object()) throw ConfigError("config section '" + path + "' must be an object");
    for (const auto& [key, value] : user.items()) {
        if (!base.contains(key)) throw ConfigError("unknown config key '" + path + key + "'");
        auto& slot = base[key];
        if (slot.is_object() && value.is_object()) {
            merge_strict(slot, value, path + key + ".");
        } else {
            slot = value;
        }
    }
}

Json train_to_json(const train::TrainConfig& c) {
    return {{"learning_rate", c.adam.learning_rate}, {"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},                 {"epsilon", c.adam.epsilon},
            {"max_epochs", c.loop.max_epochs},       {"patience", c.loop.patience},
            {"min_delta", c.loop.min_delta},         {"batch_size", c.loop.batch_size}};
}

train::TrainConfig train_from_json(const Json& j, const std::string& p) {
    train::TrainConfig c;
    c.adam.learning_rate = read<double>(j, "learning_rate", p);
    c.adam.beta1 = read<double>(j, "beta1", p);
    c.adam.beta2 = read<double>(j, "beta2", p);
    c.adam.epsilon = read<double>(j, "epsilon", p);
    c.loop.max_epochs = read<int>(j, "max_epochs", p);
    c.loop.patience = read<int>(j, "patience", p);
    c.loop.min_delta = read<double>(j, "min_delta", p);
    c.loop.batch_size = read<std::size_t>(j, "batch_size", p);
    if (!(c.adam.learning_rate > 0.0)) throw ConfigError(p + "learning_rate must be positive");
    if (!(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0 && c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0)) {
        throw ConfigError(p + "beta1/beta2 must lie in [0, 1)");
    }
    if (!(c.adam.epsilon > 0.0)) throw ConfigError(p + "epsilon must be positive");
    return c;
}

Json linear_to_json(const baselines::LinearConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"l2", c.l2},
            {"max_epochs", c.max_epochs},       {"patience", c.patience},
            {"batch_size", c.batch_size},       {"early_stopping", c.early_stopping}};
}

baselines::LinearConfig linear_from_json(const Json& j, const std::string& p) {
    baselines::LinearConfig c;
    c.learning_rate = read<double>(j, "learning_rate", p);
    c.l2 = read<double>(j, "l2", p);
    c.max_epochs = read<int>(j, "max_epochs", p);
    c.patience = read<int>(j, "patience", p);
    c.batch_size = read<std::size_t>(j, "batch_size", p);
    c.early_stopping = read<bool>(j, "early_stopping", p);
    return c;
}

Json csv_to_json(const CsvSource& s) {
    return {{"path", s.path},
            {"label_column", s.label_column},
            {"class_names", s.class_names},
            {"latitude_column", optional_json(s.latitude_column)},
            {"longitude_column", optional_json(s.longitude_column)},
            {"id_column", optional_json(s.id_column)}};
}

Json synthetic_to_json(const SyntheticSource& s) {
    return {{"counts", s.counts},
            {"confusion", s.confusion},
            {"phenology", s.phenology},
            {"noise_features", s.noise_features}};
}

Json band_mapping_to_json(const spectral::BandMapping& m) {
    Json j = Json::object();
    for (std::size_t b = 0; b < spectral::kBandCount; ++b) {
        const auto band = static_cast<spectral::Band>(b);
        j[std::string(spectral::band_name(band))] = optional_json(m.column(band));
    }
    return j;
}

/// Everything except seed and dataset.
Json defaults_without_source() {
    Json j = to_json(RunConfig{});
    j.erase("seed");
    j.erase("dataset");
    return j;
}

} // namespace

StageSeeds stage_seeds(std::uint64_t m) noexcept {
    return {derive_seed(m, 0), derive_seed(m, 1), derive_seed(m, 2), derive_seed(m, 3),
            derive_seed(m, 4), derive_seed(m, 5), derive_seed(m, 6)};
}

void RunConfig::validate() const {
    if (csv.has_value() == synthetic.has_value()) throw ConfigError("config needs exactly one dataset source");
    if (features.empty()) throw ConfigError("feature selection is empty");
    for (const auto& f : features) {
        if (synthetic && !spectral::is_spectral_feature(f)) {
            throw ConfigError("synthetic data only provides spectral features, got '" + f + "'");
        }
    }
    if (csv && csv->path.empty()) throw ConfigError("dataset.csv.path is empty");
    if (synthetic) {
        if (synthetic->counts.size() != data::crop_classes().size()) {
            throw ConfigError("dataset.synthetic.counts needs one entry per crop class (" +
                              std::to_string(data::crop_classes().size()) + ")");
        }
        if (!(synthetic->confusion >= 0.0 && synthetic->confusion <= 1.0)) {
            throw ConfigError("dataset.synthetic.confusion must lie in [0, 1]");
        }
        if (!(synthetic->phenology >= 0.0 && synthetic->phenology < 1.0)) {
            throw ConfigError("dataset.synthetic.phenology must lie in [0, 1)");
        }
    }
    split.validate();
    pool.validate();
    asen.loop.validate();
    logistic.validate();
    svm.validate();
    metrics.bootstrap.validate();
    importance.validate();
    if (output_dir.empty()) throw ConfigError("output_dir is empty");
}

Json to_json(const RunConfig& c) {
    Json j;
    j["seed"] = c.seed;
    Json dataset = Json::object();
    if (c.csv) dataset["csv"] = csv_to_json(*c.csv);
    if (c.synthetic) dataset["synthetic"] = synthetic_to_json(*c.synthetic);
    j["dataset"] = std::move(dataset);
    j["band_mapping"] = band_mapping_to_json(c.band_mapping);
    j["features"] = c.features;
    j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}};
    const auto& r = c.pool.ranges;
    j["pool"] = {{"num_learners", c.pool.num_learners},
                 {"threads", c.pool.threads},
                 {"architecture",
                  {{"min_layers", r.min_layers},
                   {"max_layers", r.max_layers},
                   {"min_width", r.min_width},
                   {"max_width", r.max_width},
                   {"min_dropout", r.min_dropout},
                   {"max_dropout", r.max_dropout}}},
                 {"train", train_to_json(c.pool.train)}};
    j["asen"] = train_to_json(c.asen);
    j["baselines"] = {{"logistic", linear_to_json(c.logistic)}, {"svm", linear_to_json(c.svm)}};
    j["metrics"] = {{"confidence_intervals", c.metrics.confidence_intervals},
                    {"resamples", c.metrics.bootstrap.resamples},
                    {"level", c.metrics.bootstrap.level}};
    j["importance"] = {{"metric", importance::metric_name(c.importance.metric)},
                       {"repeats", c.importance.repeats},
                       {"k", c.importance_k},
                       {"threads", c.importance.threads}};
    j["output_dir"] = c.output_dir;
    return j;
}

RunConfig parse_run_config(const Json& user) {
    if (!user.is_object()) throw ConfigError("config must be a JSON object");
    if (!user.contains("seed") || user["seed"].is_null()) throw ConfigError("config must set 'seed'");
    if (!user["seed"].is_number_unsigned() && !(user["seed"].is_number_integer() && user["seed"].get<std::int64_t>() >= 0)) {
        throw ConfigError("seed must be a non-negative integer");
    }
    if (!user.contains("dataset") || !user["dataset"].is_object() || user["dataset"].size() != 1) {
        throw ConfigError("config 'dataset' must hold exactly one of 'csv' or 'synthetic'");
    }

    Json merged = defaults_without_source();
    Json rest = user;
    const Json dataset = rest["dataset"];
    rest.erase("seed");
    rest.erase("dataset");
    merge_strict(merged, rest, "");

    RunConfig c;
    c.seed = user["seed"].get<std::uint64_t>();
    if (dataset.contains("csv")) {
        Json src = csv_to_json(CsvSource{});
        merge_strict(src, dataset["csv"], "dataset.csv.");
        const std::string p = "dataset.csv.";
        CsvSource s;
        s.path = read<std::string>(src, "path", p);
        s.label_column = read<std::string>(src, "label_column", p);
        s.class_names = read<std::vector<std::string>>(src, "class_names", p);
        s.latitude_column = read_optional_string(src, "latitude_column", p);
        s.longitude_column = read_optional_string(src, "longitude_column", p);
        s.id_column = read_optional_string(src, "id_column", p);
        c.csv = std::move(s);
    } else if (dataset.contains("synthetic")) {
        Json src = synthetic_to_json(SyntheticSource{});
        merge_strict(src, dataset["synthetic"], "dataset.synthetic.");
        const std::string p = "dataset.synthetic.";
        SyntheticSource s;
        s.counts = read<std::vector<std::size_t>>(src, "counts", p);
        s.confusion = read<double>(src, "confusion", p);
        s.phenology = read<double>(src, "phenology", p);
        s.noise_features = read<std::size_t>(src, "noise_features", p);
        c.synthetic = std::move(s);
    } else {
        throw ConfigError("unknown dataset source '" + dataset.begin().key() + "'");
    }

    spectral::BandMapping mapping;
    for (const auto& [name, column] : merged["band_mapping"].items()) {
        const auto band = spectral::band_from_name(name);
        if (!column.is_null()) {
            if (!column.is_string()) throw ConfigError("band_mapping." + name + " must be a string or null");
            mapping.assign(*band, column.get<std::string>());
        }
    }
    c.band_mapping = mapping;
    c.features = read<std::vector<std::string>>(merged, "features", "");

    const auto& sp = merged["split"];
    c.split = {read<double>(sp, "train", "split."), read<double>(sp, "val", "split."), read<double>(sp, "test", "split.")};

    const auto& pj = merged["pool"];
    c.pool.num_learners = read<std::size_t>(pj, "num_learners", "pool.");
    c.pool.threads = read<std::size_t>(pj, "threads", "pool.");
    const auto& aj = pj["architecture"];
    const std::string ap = "pool.architecture.";
    c.pool.ranges.min_layers = read<std::size_t>(aj, "min_layers", ap);
    c.pool.ranges.max_layers = read<std::size_t>(aj, "max_layers", ap);
    c.pool.ranges.min_width = read<std::size_t>(aj, "min_width", ap);
    c.pool.ranges.max_width = read<std::size_t>(aj, "max_width", ap);
    c.pool.ranges.min_dropout = read<double>(aj, "min_dropout", ap);
    c.pool.ranges.max_dropout = read<double>(aj, "max_dropout", ap);
    c.pool.train = train_from_json(pj["train"], "pool.train.");
    c.asen = train_from_json(merged["asen"], "asen.");

    c.logistic = linear_from_json(merged["baselines"]["logistic"], "baselines.logistic.");
    c.svm = linear_from_json(merged["baselines"]["svm"], "baselines.svm.");

    const auto& mj = merged["metrics"];
    c.metrics.confidence_intervals = read<bool>(mj, "confidence_intervals", "metrics.");
    c.metrics.bootstrap.resamples = read<std::size_t>(mj, "resamples", "metrics.");
    c.metrics.bootstrap.level = read<double>(mj, "level", "metrics.");

    const auto& ij = merged["importance"];
    c.importance.metric = importance::parse_metric(read<std::string>(ij, "metric", "importance."));
    c.importance.repeats = read<std::size_t>(ij, "repeats", "importance.");
    c.importance.threads = read<std::size_t>(ij, "threads", "importance.");
    c.importance_k = read<std::size_t>(ij, "k", "importance.");

    c.output_dir = read<std::string>(merged, "output_dir", "");

    const auto seeds = stage_seeds(c.seed);
    c.pool.master_seed = seeds.ensemble;
    c.logistic.seed = seeds.logistic;
    c.svm.seed = seeds.svm;
    c.importance.seed = seeds.importance;
    c.metrics.bootstrap.seed = seeds.metrics;
    c.validate();
    return c;
}

Json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void apply_override(Json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
        value = raw;
    }
    Json* node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("--set key '" + key + "' has an empty component");
        if (!node->is_object()) {
            if (!node->is_null()) throw ConfigError("--set key '" + key + "' descends into a non-object");
            *node = Json::object();
        }
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

} // namespace asen::cli
