#include "asen/serialization.hpp"

#include "asen/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace asen::io {

namespace {

/// Re-raises JSON access failures as SchemaError tagged with `what`.
template <class Fn>
auto guarded(std::string_view what, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string(what) + ": " + e.what());
    }
}

Json doubles(const double* p, Eigen::Index n) { return Json(std::vector<double>(p, p + n)); }

std::vector<double> read_doubles(const Json& j, std::size_t expected, std::string_view what) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != expected) {
        throw SchemaError(std::string(what) + ": expected " + std::to_string(expected) + " values, found " +
                          std::to_string(v.size()));
    }
    return v;
}

RowVector row_from(const Json& j, std::size_t n, std::string_view what) {
    const auto v = read_doubles(j, n, what);
    RowVector r(static_cast<Eigen::Index>(n));
    std::copy(v.begin(), v.end(), r.data());
    return r;
}

Json header(std::string_view kind) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = kind;
    return j;
}

Json mlp_config_to_json(const mlp::MlpConfig& c) {
    return {{"input_size", c.input_size}, {"hidden", c.hidden},     {"dropout", c.dropout},
            {"num_classes", c.num_classes}, {"seed", c.seed}};
}

mlp::MlpConfig mlp_config_from_json(const Json& j) {
    mlp::MlpConfig c;
    c.input_size = j.at("input_size").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.dropout = j.at("dropout").get<double>();
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

} // namespace

void check_header(const Json& j, std::string_view kind) {
    if (!j.is_object() || !j.contains("format_version")) throw SchemaError("document has no format_version");
    const auto& v = j["format_version"];
    if (!v.is_number_integer() || v.get<int>() != kFormatVersion) {
        throw SchemaError("unsupported format_version " + v.dump() + " (expected " + std::to_string(kFormatVersion) +
                          ")");
    }
    if (!j.contains("kind") || !j["kind"].is_string() || j["kind"].get<std::string>() != kind) {
        throw SchemaError("expected a '" + std::string(kind) + "' document");
    }
}

Json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", doubles(m.data(), m.size())}};
}

Matrix matrix_from_json(const Json& j) {
    return guarded("matrix", [&] {
        const auto rows = j.at("rows").get<std::size_t>();
        const auto cols = j.at("cols").get<std::size_t>();
        const auto v = read_doubles(j.at("data"), rows * cols, "matrix data");
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        std::copy(v.begin(), v.end(), m.data());
        return m;
    });
}

Json mlp_to_json(const mlp::MlpModel& model) {
    Json j = header("mlp");
    j["config"] = mlp_config_to_json(model.config);
    Json layers = Json::array();
    for (const auto& layer : model.layers) {
        layers.push_back({{"rows", layer.weights.rows()},
                          {"cols", layer.weights.cols()},
                          {"weights", doubles(layer.weights.data(), layer.weights.size())},
                          {"bias", doubles(layer.bias.data(), layer.bias.size())}});
    }
    j["layers"] = std::move(layers);
    return j;
}

mlp::MlpModel mlp_from_json(const Json& j) {
    check_header(j, "mlp");
    return guarded("mlp", [&] {
        mlp::MlpModel model;
        model.config = mlp_config_from_json(j.at("config"));
        model.config.validate();
        std::size_t fan_in = model.config.input_size;
        auto widths = model.config.hidden;
        widths.push_back(model.config.num_classes);
        const auto& layers = j.at("layers");
        if (layers.size() != widths.size()) throw SchemaError("mlp: layer count does not match config");
        for (std::size_t l = 0; l < widths.size(); ++l) {
            const auto& lj = layers.at(l);
            const auto rows = lj.at("rows").get<std::size_t>();
            const auto cols = lj.at("cols").get<std::size_t>();
            if (rows != fan_in || cols != widths[l]) throw SchemaError("mlp: layer " + std::to_string(l) + " shape mismatch");
            mlp::DenseLayer layer;
            const auto w = read_doubles(lj.at("weights"), rows * cols, "mlp weights");
            layer.weights.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
            std::copy(w.begin(), w.end(), layer.weights.data());
            layer.bias = row_from(lj.at("bias"), cols, "mlp bias");
            model.layers.push_back(std::move(layer));
            fan_in = cols;
        }
        return model;
    });
}

Json report_to_json(const train::TrainReport& report) {
    Json epochs = Json::array();
    for (const auto& e : report.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"train_accuracy", e.train_accuracy},
                          {"val_loss", e.val_loss},
                          {"val_accuracy", e.val_accuracy}});
    }
    return {{"epochs", std::move(epochs)}, {"stopped_epoch", report.stopped_epoch}, {"best_epoch", report.best_epoch}};
}

train::TrainReport report_from_json(const Json& j) {
    return guarded("train report", [&] {
        train::TrainReport r;
        for (const auto& e : j.at("epochs")) {
            r.epochs.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                                e.at("train_accuracy").get<double>(), e.at("val_loss").get<double>(),
                                e.at("val_accuracy").get<double>()});
        }
        r.stopped_epoch = j.at("stopped_epoch").get<int>();
        r.best_epoch = j.at("best_epoch").get<int>();
        return r;
    });
}

Json normalizer_to_json(const data::NormalizationParams& params) {
    return {{"mean", params.mean}, {"stddev", params.stddev}};
}

data::NormalizationParams normalizer_from_json(const Json& j) {
    return guarded("normalizer", [&] {
        data::NormalizationParams p;
        p.mean = j.at("mean").get<std::vector<double>>();
        p.stddev = read_doubles(j.at("stddev"), p.mean.size(), "normalizer stddev");
        return p;
    });
}

Json learner_to_json(const ensemble::BaseLearner& learner) {
    Json j = mlp_to_json(learner.model);
    j["kind"] = "base_learner";
    j["seed"] = learner.seed;
    j["bootstrap_seed"] = learner.bootstrap_seed;
    j["val_accuracy"] = learner.val_accuracy;
    j["report"] = report_to_json(learner.report);
    return j;
}

ensemble::BaseLearner learner_from_json(const Json& j) {
    check_header(j, "base_learner");
    Json as_mlp = j;
    as_mlp["kind"] = "mlp";
    ensemble::BaseLearner learner;
    learner.model = mlp_from_json(as_mlp);
    guarded("base learner", [&] {
        learner.seed = j.at("seed").get<std::uint64_t>();
        learner.bootstrap_seed = j.at("bootstrap_seed").get<std::uint64_t>();
        learner.val_accuracy = j.at("val_accuracy").get<double>();
        return 0;
    });
    learner.report = report_from_json(j.at("report"));
    return learner;
}

Json asen_to_json(const ensemble::AsenModel& model) {
    return {{"num_learners", model.num_learners},
            {"num_classes", model.num_classes},
            {"W", matrix_to_json(model.weights)},
            {"bias", doubles(model.bias.data(), model.bias.size())},
            {"a_v", doubles(model.attention.data(), model.attention.size())}};
}

ensemble::AsenModel asen_from_json(const Json& j) {
    return guarded("asen head", [&] {
        ensemble::AsenModel m;
        m.num_learners = j.at("num_learners").get<std::size_t>();
        m.num_classes = j.at("num_classes").get<std::size_t>();
        m.weights = matrix_from_json(j.at("W"));
        const auto hidden = static_cast<std::size_t>(m.weights.cols());
        if (static_cast<std::size_t>(m.weights.rows()) != m.num_classes) throw SchemaError("asen: W rows must equal num_classes");
        m.bias = row_from(j.at("bias"), hidden, "asen bias");
        const auto a = read_doubles(j.at("a_v"), hidden, "asen a_v");
        m.attention = Eigen::Map<const Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
        return m;
    });
}

Json split_info_to_json(const ensemble::SplitInfo& info) {
    return {{"seed", info.seed},
            {"fractions", {{"train", info.fractions.train}, {"val", info.fractions.val}, {"test", info.fractions.test}}},
            {"fingerprint", hex64(info.fingerprint)},
            {"dataset_size", info.dataset_size}};
}

ensemble::SplitInfo split_info_from_json(const Json& j) {
    return guarded("split info", [&] {
        ensemble::SplitInfo s;
        s.seed = j.at("seed").get<std::uint64_t>();
        const auto& f = j.at("fractions");
        s.fractions = {f.at("train").get<double>(), f.at("val").get<double>(), f.at("test").get<double>()};
        s.fingerprint = parse_hex64(j.at("fingerprint").get<std::string>());
        s.dataset_size = j.at("dataset_size").get<std::size_t>();
        return s;
    });
}

Json ensemble_to_json(const ensemble::TrainedEnsemble& model) {
    Json j = header("asen_ensemble");
    Json pool = Json::array();
    for (const auto& l : model.pool.learners) pool.push_back(learner_to_json(l));
    j["pool"] = std::move(pool);
    j["asen"] = asen_to_json(model.asen);
    j["asen_report"] = report_to_json(model.asen_report);
    j["normalizer"] = normalizer_to_json(model.normalizer);
    j["feature_selection"] = model.feature_names;
    j["class_names"] = model.class_names;
    j["split"] = model.split ? split_info_to_json(*model.split) : Json(nullptr);
    return j;
}

ensemble::TrainedEnsemble ensemble_from_json(const Json& j) {
    check_header(j, "asen_ensemble");
    ensemble::TrainedEnsemble m;
    guarded("ensemble", [&] {
        for (const auto& l : j.at("pool")) m.pool.learners.push_back(learner_from_json(l));
        m.asen = asen_from_json(j.at("asen"));
        m.asen_report = report_from_json(j.at("asen_report"));
        m.normalizer = normalizer_from_json(j.at("normalizer"));
        m.feature_names = j.at("feature_selection").get<std::vector<std::string>>();
        m.class_names = j.at("class_names").get<std::vector<std::string>>();
        if (!j.at("split").is_null()) m.split = split_info_from_json(j.at("split"));
        return 0;
    });
    if (m.pool.learners.empty()) throw SchemaError("ensemble: empty pool");
    if (m.asen.num_learners != m.pool.size()) throw SchemaError("ensemble: head and pool sizes differ");
    if (m.normalizer.dimension() != m.feature_names.size() || m.pool.input_size() != m.feature_names.size()) {
        throw SchemaError("ensemble: feature count mismatch");
    }
    if (m.class_names.size() != m.pool.num_classes() || m.asen.num_classes != m.class_names.size()) {
        throw SchemaError("ensemble: class count mismatch");
    }
    return m;
}

Json linear_to_json(const baselines::LinearModel& model) {
    Json j = header("linear");
    j["model_kind"] = baselines::kind_name(model.kind);
    j["weights"] = matrix_to_json(model.weights);
    j["bias"] = doubles(model.bias.data(), model.bias.size());
    const auto& c = model.config;
    j["config"] = {{"learning_rate", c.learning_rate}, {"l2", c.l2},
                   {"max_epochs", c.max_epochs},       {"patience", c.patience},
                   {"batch_size", c.batch_size},       {"early_stopping", c.early_stopping},
                   {"seed", c.seed}};
    return j;
}

baselines::LinearModel linear_from_json(const Json& j) {
    check_header(j, "linear");
    return guarded("linear model", [&] {
        baselines::LinearModel m;
        const auto kind = j.at("model_kind").get<std::string>();
        if (kind == "logistic") {
            m.kind = baselines::LinearKind::logistic;
        } else if (kind == "svm") {
            m.kind = baselines::LinearKind::svm;
        } else {
            throw SchemaError("linear: unknown model_kind '" + kind + "'");
        }
        m.weights = matrix_from_json(j.at("weights"));
        m.bias = row_from(j.at("bias"), static_cast<std::size_t>(m.weights.rows()), "linear bias");
        const auto& c = j.at("config");
        m.config.learning_rate = c.at("learning_rate").get<double>();
        m.config.l2 = c.at("l2").get<double>();
        m.config.max_epochs = c.at("max_epochs").get<int>();
        m.config.patience = c.at("patience").get<int>();
        m.config.batch_size = c.at("batch_size").get<std::size_t>();
        m.config.early_stopping = c.at("early_stopping").get<bool>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        return m;
    });
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

} // namespace

Json metrics_to_json(const metrics::MetricsReport& report) {
    Json j = header("metrics");
    const auto& cm = report.confusion;
    j["confusion"] = {{"class_names", cm.class_names}, {"counts", cm.counts}};
    const auto acc = metrics::accuracy_fraction(cm);
    j["accuracy"] = report.accuracy;
    j["correct"] = acc.numerator;
    j["total"] = acc.denominator;
    Json per_class = Json::array();
    for (std::size_t c = 0; c < cm.num_classes(); ++c) {
        const auto& r = report.rates.per_class[c];
        Json e = {{"class", cm.class_names[c]},
                  {"precision", r.precision},
                  {"recall", r.recall},
                  {"f1", r.f1},
                  {"precision_undefined", r.precision_undefined},
                  {"recall_undefined", r.recall_undefined},
                  {"f1_undefined", r.f1_undefined}};
        if (report.auc) e["auc"] = optional_number(report.auc->per_class[c]);
        per_class.push_back(std::move(e));
    }
    j["per_class"] = std::move(per_class);
    j["macro"] = {{"precision", report.rates.macro_precision},
                  {"recall", report.rates.macro_recall},
                  {"f1", report.rates.macro_f1},
                  {"auc", report.auc ? optional_number(report.auc->macro) : Json(nullptr)}};
    j["micro"] = {{"precision", report.rates.micro_precision},
                  {"recall", report.rates.micro_recall},
                  {"f1", report.rates.micro_f1}};
    if (report.auc) {
        Json excluded = Json::array();
        for (auto c : report.auc->excluded) excluded.push_back(cm.class_names[c]);
        j["auc_excluded_classes"] = std::move(excluded);
    }
    Json intervals = Json::object();
    for (const auto& [name, iv] : report.intervals) {
        intervals[name] = {{"estimate", iv.estimate}, {"lower", iv.lower}, {"upper", iv.upper}, {"half_width", iv.half_width}};
    }
    j["intervals"] = std::move(intervals);
    return j;
}

Json importance_to_json(const importance::ImportanceReport& report) {
    Json j = header("importance");
    j["metric"] = importance::metric_name(report.metric);
    j["repeats"] = report.repeats;
    j["baseline"] = report.baseline;
    j["feature_names"] = report.feature_names;
    j["mean"] = report.mean;
    j["stddev"] = report.stddev;
    j["ranking"] = report.ranking;
    Json ranked = Json::array();
    for (auto idx : report.ranking) {
        ranked.push_back({{"feature", report.feature_names[idx]}, {"mean", report.mean[idx]}, {"stddev", report.stddev[idx]}});
    }
    j["ranked"] = std::move(ranked);
    return j;
}

importance::ImportanceReport importance_from_json(const Json& j) {
    check_header(j, "importance");
    return guarded("importance report", [&] {
        importance::ImportanceReport r;
        r.metric = importance::parse_metric(j.at("metric").get<std::string>());
        r.repeats = j.at("repeats").get<std::size_t>();
        r.baseline = j.at("baseline").get<double>();
        r.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        const std::size_t d = r.feature_names.size();
        r.mean = read_doubles(j.at("mean"), d, "importance mean");
        r.stddev = read_doubles(j.at("stddev"), d, "importance stddev");
        r.ranking = j.at("ranking").get<std::vector<std::size_t>>();
        if (r.ranking.size() != d) throw SchemaError("importance: ranking length mismatch");
        for (auto idx : r.ranking) {
            if (idx >= d) throw SchemaError("importance: ranking index out of range");
        }
        return r;
    });
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Json read_json(const std::filesystem::path& path) {
    const auto text = read_text(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) throw SchemaError("bad hex value '" + s + "'");
    return v;
}

} // namespace asen::io
