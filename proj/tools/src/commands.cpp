#include "asen_cli/commands.hpp"

#include "asen/csv.hpp"
#include "asen/error.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace asen::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

/// Runs `fn`, re-raising library errors as StageError(stage).
template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory '" + dir.string() + "': " + ec.message());
}

data::SyntheticSpec synthetic_spec(const RunConfig& config) {
    auto spec = data::SyntheticSpec::crops(config.synthetic->counts, config.synthetic->confusion,
                                          config.synthetic->phenology);
    spec.features = config.features;
    spec.noise_features = config.synthetic->noise_features;
    return spec;
}

ensemble::EnsembleConfig ensemble_config(const RunConfig& config) {
    return {config.pool, config.asen, stage_seeds(config.seed).ensemble};
}

Json split_to_json(const data::DatasetSplit& split) {
    Json j;
    j["format_version"] = io::kFormatVersion;
    j["kind"] = "split";
    j["seed"] = split.seed;
    j["fractions"] = {{"train", split.fractions.train}, {"val", split.fractions.val}, {"test", split.fractions.test}};
    j["fingerprint"] = io::hex64(split.fingerprint());
    j["dataset_size"] = split.total();
    j["counts"] = {{"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}};
    j["train"] = split.train;
    j["val"] = split.val;
    j["test"] = split.test;
    return j;
}

/// Linear baseline document with everything needed to score raw rows.
Json linear_artifact(const baselines::LinearModel& model, const train::TrainReport& report,
                     const ensemble::TrainedEnsemble& reference) {
    Json j = io::linear_to_json(model);
    j["normalizer"] = io::normalizer_to_json(reference.normalizer);
    j["feature_selection"] = reference.feature_names;
    j["class_names"] = reference.class_names;
    j["split"] = io::split_info_to_json(*reference.split);
    j["report"] = io::report_to_json(report);
    return j;
}

std::string format_rate(double v) {
    if (std::isnan(v)) return "n/a";
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
}

void print_summary_header(std::ostream& out) {
    out << std::left << std::setw(10) << "model";
    for (auto m : metrics::summary_order()) {
        static const std::map<metrics::Metric, const char*> titles{{metrics::Metric::f1, "F1"},
                                                                  {metrics::Metric::precision, "Precision"},
                                                                  {metrics::Metric::recall, "Recall"},
                                                                  {metrics::Metric::accuracy, "Accuracy"},
                                                                  {metrics::Metric::auc, "AUC"}};
        out << std::setw(11) << titles.at(m);
    }
    out << '\n';
}

void print_summary_row(std::ostream& out, const std::string& name, const metrics::MetricsReport& report) {
    out << std::left << std::setw(10) << name;
    for (auto m : metrics::summary_order()) out << std::setw(11) << format_rate(report.value(m));
    out << '\n';
}

/// The model's stored split must be reproducible from this dataset.
data::DatasetSplit checked_split(const data::Dataset& dataset, const ensemble::SplitInfo& info) {
    if (dataset.size() != info.dataset_size) {
        throw StageError("guard", "dataset has " + std::to_string(dataset.size()) + " rows but the model was trained on " +
                                      std::to_string(info.dataset_size));
    }
    auto split = data::stratified_split(dataset, info.fractions, info.seed);
    if (split.fingerprint() != info.fingerprint) {
        throw StageError("guard", "split fingerprint " + io::hex64(split.fingerprint()) +
                                      " does not match the model's stored " + io::hex64(info.fingerprint));
    }
    return split;
}

void check_compatible(const data::Dataset& dataset, const std::vector<std::string>& features,
                      const std::vector<std::string>& classes) {
    if (dataset.feature_names != features) throw StageError("guard", "model and dataset feature lists differ");
    if (dataset.class_names != classes) throw StageError("guard", "model and dataset class lists differ");
}

struct ScoredModel {
    std::vector<int> labels;
    Matrix scores;
    std::vector<std::string> features;
    std::vector<std::string> classes;
    ensemble::SplitInfo split;
};

/// Loads a model document of either kind and scores `rows` of `dataset`.
ScoredModel score_model(const Json& doc, const data::Dataset& dataset, const EvaluateRequest& request) {
    ScoredModel out;
    const auto kind = doc.value("kind", std::string{});
    std::optional<ensemble::TrainedEnsemble> ens;
    std::optional<baselines::LinearModel> linear;
    data::NormalizationParams norm;
    stage("load", [&] {
        if (kind == "asen_ensemble") {
            ens = io::ensemble_from_json(doc);
            out.features = ens->feature_names;
            out.classes = ens->class_names;
            if (!ens->split) throw SchemaError("model carries no split record");
            out.split = *ens->split;
        } else if (kind == "linear") {
            linear = io::linear_from_json(doc);
            norm = io::normalizer_from_json(doc.at("normalizer"));
            out.features = doc.at("feature_selection").get<std::vector<std::string>>();
            out.classes = doc.at("class_names").get<std::vector<std::string>>();
            out.split = io::split_info_from_json(doc.at("split"));
        } else {
            throw SchemaError("unsupported model kind '" + kind + "'");
        }
        return 0;
    });
    check_compatible(dataset, out.features, out.classes);
    const auto split = checked_split(dataset, out.split);
    if (request.role != data::SplitRole::test && !request.allow_train) {
        throw StageError("guard", "refusing to evaluate on the " + std::string(data::role_name(request.role)) +
                                      " split without --allow-train");
    }
    const auto& rows = split.indices(request.role);
    stage("predict", [&] {
        const Matrix raw = dataset.features(rows);
        if (ens) {
            auto pred = ensemble::predict(*ens, raw);
            out.labels = std::move(pred.labels);
            out.scores = std::move(pred.probabilities);
        } else {
            auto pred = baselines::predict_linear(*linear, data::apply_normalizer(norm, raw));
            out.labels = std::move(pred.labels);
            out.scores = std::move(pred.scores);
        }
        return 0;
    });
    return out;
}

void write_resolved(const RunConfig& config, const fs::path& out_dir) {
    io::write_text(out_dir / "config.resolved.json", io::dump(to_json(config)));
}

} // namespace

data::Dataset load_dataset(const RunConfig& config) {
    if (config.synthetic) return data::generate_synthetic(synthetic_spec(config), stage_seeds(config.seed).data);
    const auto& src = *config.csv;
    data::CsvSchema schema;
    schema.label_column = src.label_column;
    schema.features = config.features;
    schema.class_names = src.class_names;
    schema.latitude_column = src.latitude_column;
    schema.longitude_column = src.longitude_column;
    schema.id_column = src.id_column;
    return data::load_csv(src.path, schema, config.band_mapping).dataset;
}

void cmd_synth(const RunConfig& config, const fs::path& out_dir) {
    if (!config.synthetic) throw StageError("config", "synth needs a dataset.synthetic section");
    stage("write", [&] {
        ensure_dir(out_dir);
        write_resolved(config, out_dir);
        return 0;
    });
    const auto spec = synthetic_spec(config);
    const auto records = stage("generate", [&] {
        spec.validate();
        return data::generate_synthetic_records(spec, stage_seeds(config.seed).data);
    });
    stage("write", [&] {
        std::vector<std::string> band_columns;
        for (auto b : data::kSyntheticBands) {
            const auto& col = config.band_mapping.column(b);
            if (!col) throw ConfigError("band_mapping." + std::string(spectral::band_name(b)) + " is unmapped");
            band_columns.push_back(*col);
        }
        std::ostringstream csv_out;
        for (const auto& c : band_columns) csv_out << csv::escape(c) << ',';
        for (std::size_t k = 1; k <= spec.noise_features; ++k) csv_out << "noise_" << k << ',';
        csv_out << "label\n";
        for (const auto& r : records) {
            for (auto b : data::kSyntheticBands) csv_out << csv::format_double(spectral::band_value(r.bands, b)) << ',';
            for (double v : r.noise) csv_out << csv::format_double(v) << ',';
            csv_out << csv::escape(spec.classes[static_cast<std::size_t>(r.label)].name) << '\n';
        }
        io::write_text(out_dir / "dataset.csv", csv_out.str());

        Json classes = Json::array();
        for (const auto& c : spec.classes) {
            classes.push_back({{"name", c.name}, {"mean", c.mean}, {"spread", c.spread}, {"count", c.count}});
        }
        Json pairs = Json::array();
        for (const auto& [a, b] : spec.confusable_pairs) pairs.push_back({a, b});
        Json prov;
        prov["format_version"] = io::kFormatVersion;
        prov["kind"] = "synthetic_provenance";
        prov["seed"] = config.seed;
        prov["generator_seed"] = stage_seeds(config.seed).data;
        prov["rows"] = records.size();
        prov["csv"] = "dataset.csv";
        prov["band_columns"] = band_columns;
        prov["spec"] = {{"classes", std::move(classes)},
                        {"confusable_pairs", std::move(pairs)},
                        {"confusion", spec.confusion},
                        {"phenology", spec.phenology},
                        {"phenology_direction", spec.phenology_direction},
                        {"features", spec.features},
                        {"noise_features", spec.noise_features}};
        io::write_text(out_dir / "provenance.json", io::dump(prov));
        return 0;
    });
}

void cmd_train(const RunConfig& config, const fs::path& out_dir) {
    stage("write", [&] {
        ensure_dir(out_dir / "learners");
        write_resolved(config, out_dir);
        return 0;
    });
    const auto seeds = stage_seeds(config.seed);
    const auto dataset = stage("data", [&] { return load_dataset(config); });
    const auto split = stage("split", [&] { return data::stratified_split(dataset, config.split, seeds.split); });
    const auto model = stage("ensemble", [&] { return ensemble::train_ensemble(dataset, split, ensemble_config(config)); });

    const mlp::LabeledMatrix train_set{data::apply_normalizer(model.normalizer, dataset.features(split.train)),
                                       dataset.labels(split.train)};
    const mlp::LabeledMatrix val_set{data::apply_normalizer(model.normalizer, dataset.features(split.val)),
                                     dataset.labels(split.val)};
    const auto [logistic, logistic_report] = stage(
        "baselines", [&] { return baselines::train_logreg(train_set, val_set, dataset.num_classes(), config.logistic); });
    const auto [svm, svm_report] = stage(
        "baselines", [&] { return baselines::train_linear_svm(train_set, val_set, dataset.num_classes(), config.svm); });

    stage("write", [&] {
        for (std::size_t i = 0; i < model.pool.size(); ++i) {
            io::write_text(out_dir / "learners" / ("learner_" + std::to_string(i) + ".json"),
                           io::dump(io::learner_to_json(model.pool.learners[i])));
        }
        io::write_text(out_dir / "asen.json", io::dump(io::ensemble_to_json(model)));
        io::write_text(out_dir / "logistic.json", io::dump(linear_artifact(logistic, logistic_report, model)));
        io::write_text(out_dir / "svm.json", io::dump(linear_artifact(svm, svm_report, model)));
        io::write_text(out_dir / "split.json", io::dump(split_to_json(split)));

        Json report;
        report["format_version"] = io::kFormatVersion;
        report["kind"] = "train_report";
        report["dataset"] = {{"provenance", dataset.provenance},
                             {"rows", dataset.size()},
                             {"features", dataset.feature_names},
                             {"classes", dataset.class_names}};
        report["split"] = {{"train", split.train.size()},
                           {"val", split.val.size()},
                           {"test", split.test.size()},
                           {"fingerprint", io::hex64(split.fingerprint())}};
        Json pool = Json::array();
        for (std::size_t i = 0; i < model.pool.size(); ++i) {
            const auto& l = model.pool.learners[i];
            pool.push_back({{"index", i},
                            {"hidden", l.model.config.hidden},
                            {"dropout", l.model.config.dropout},
                            {"seed", l.seed},
                            {"val_accuracy", l.val_accuracy},
                            {"best_epoch", l.report.best_epoch},
                            {"stopped_epoch", l.report.stopped_epoch}});
        }
        report["pool"] = std::move(pool);
        report["asen"] = io::report_to_json(model.asen_report);
        report["logistic"] = io::report_to_json(logistic_report);
        report["svm"] = io::report_to_json(svm_report);
        io::write_text(out_dir / "train_report.json", io::dump(report));
        return 0;
    });
}

void cmd_evaluate(const RunConfig& config, const EvaluateRequest& request, const fs::path& out_dir,
                  std::ostream& out) {
    std::vector<std::pair<std::string, fs::path>> models;
    if (fs::is_directory(request.model)) {
        for (const char* name : {"asen", "logistic", "svm"}) {
            const auto p = request.model / (std::string(name) + ".json");
            if (fs::exists(p)) models.emplace_back(name, p);
        }
        if (models.empty()) throw StageError("load", "no model files in '" + request.model.string() + "'");
    } else if (fs::exists(request.model)) {
        models.emplace_back(request.model.stem().string(), request.model);
    } else {
        throw StageError("load", "model path '" + request.model.string() + "' does not exist");
    }

    const auto dataset = stage("data", [&] { return load_dataset(config); });
    stage("write", [&] {
        ensure_dir(out_dir);
        return 0;
    });
    std::vector<std::pair<std::string, metrics::MetricsReport>> reports;
    for (const auto& [name, path] : models) {
        const auto doc = stage("load", [&] { return io::read_json(path); });
        const auto scored = score_model(doc, dataset, request);
        const auto report = stage("metrics", [&] {
            const auto split = data::stratified_split(dataset, scored.split.fractions, scored.split.seed);
            const auto truth = dataset.labels(split.indices(request.role));
            return metrics::evaluate(truth, scored.labels, &scored.scores, dataset.class_names, config.metrics);
        });
        stage("write", [&] {
            Json j = io::metrics_to_json(report);
            j["model"] = name;
            j["split_role"] = data::role_name(request.role);
            io::write_text(out_dir / ("metrics_" + name + ".json"), io::dump(j));
            io::write_text(out_dir / ("confusion_" + name + ".csv"), metrics::confusion_csv(report.confusion));
            return 0;
        });
        reports.emplace_back(name, report);
    }
    print_summary_header(out);
    for (const auto& [name, report] : reports) print_summary_row(out, name, report);
}

void cmd_importance(const RunConfig& config, const fs::path& model_dir, const fs::path& out_dir, std::ostream& out) {
    const auto model = stage("load", [&] { return io::ensemble_from_json(io::read_json(model_dir / "asen.json")); });
    const auto dataset = stage("data", [&] { return load_dataset(config); });
    check_compatible(dataset, model.feature_names, model.class_names);
    if (!model.split) throw StageError("guard", "model carries no split record");
    const auto split = checked_split(dataset, *model.split);

    RunConfig resolved = config;
    if (resolved.importance_k == 0) resolved.importance_k = (dataset.dimension() + 1) / 2;
    stage("write", [&] {
        ensure_dir(out_dir);
        write_resolved(resolved, out_dir);
        return 0;
    });

    const auto report = stage("importance", [&] {
        return importance::permutation_importance(model, dataset.features(split.val), dataset.labels(split.val),
                                                  config.importance);
    });
    stage("write", [&] {
        io::write_text(out_dir / "importance.json", io::dump(io::importance_to_json(report)));
        io::write_text(out_dir / "importance.csv", importance::importance_csv(report));
        return 0;
    });

    const auto experiment = stage("feature_selection", [&] {
        return importance::feature_selection_experiment(dataset, split, ensemble_config(config), resolved.importance_k,
                                                        config.importance, report);
    });

    // Column order of the with/without-selection comparison.
    static constexpr std::array<metrics::Metric, 5> kOrder{metrics::Metric::accuracy, metrics::Metric::f1,
                                                           metrics::Metric::precision, metrics::Metric::recall,
                                                           metrics::Metric::auc};
    stage("write", [&] {
        Json j;
        j["format_version"] = io::kFormatVersion;
        j["kind"] = "feature_selection";
        j["k"] = resolved.importance_k;
        j["full_features"] = experiment.full_features;
        j["selected_features"] = experiment.selected_features;
        j["full"] = io::metrics_to_json(experiment.full);
        j["selected"] = io::metrics_to_json(experiment.selected);
        j["deltas"] = experiment.deltas;
        io::write_text(out_dir / "feature_selection.json", io::dump(j));

        std::ostringstream csv_out;
        csv_out << "metric,full,selected,delta\n";
        for (auto m : kOrder) {
            csv_out << metrics::metric_name(m) << ',' << csv::format_double(experiment.full.value(m)) << ','
                    << csv::format_double(experiment.selected.value(m)) << ','
                    << csv::format_double(experiment.deltas.at(std::string(metrics::metric_name(m)))) << '\n';
        }
        io::write_text(out_dir / "feature_selection.csv", csv_out.str());
        return 0;
    });

    out << "top features:";
    for (std::size_t i = 0; i < resolved.importance_k; ++i) out << ' ' << report.feature_names[report.ranking[i]];
    out << '\n' << std::left << std::setw(10) << "arm";
    for (auto m : kOrder) out << std::setw(11) << metrics::metric_name(m);
    out << '\n';
    for (const auto& [name, r] : {std::pair{"full", &experiment.full}, std::pair{"selected", &experiment.selected}}) {
        out << std::setw(10) << name;
        for (auto m : kOrder) out << std::setw(11) << format_rate(r->value(m));
        out << '\n';
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Attention-weighted ensemble crop classifier"};
    app.require_subcommand(1);

    struct Common {
        std::string config;
        std::string out;
        std::optional<std::uint64_t> seed;
        std::vector<std::string> sets;
    };
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Run configuration (JSON)")->required();
        sub->add_option("--out", common.out, "Output directory (default: output_dir from the config)");
        sub->add_option("--seed", common.seed, "Override the master seed");
        sub->add_option("--set", common.sets, "Override a config value: dotted.key=value")->take_all();
    };
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    auto* train_cmd = app.add_subcommand("train", "Train pool, attention head and baselines");
    auto* eval_cmd = app.add_subcommand("evaluate", "Score trained models on one split");
    auto* imp_cmd = app.add_subcommand("importance", "Permutation importance and top-k retraining");
    for (auto* s : {synth, train_cmd, eval_cmd, imp_cmd}) add_common(s);

    std::string model_path;
    std::string role = "test";
    bool allow_train = false;
    eval_cmd->add_option("--model", model_path, "Model directory or file (default: the output directory)");
    eval_cmd->add_option("--split", role, "Split to evaluate: train, val or test");
    eval_cmd->add_flag("--allow-train", allow_train, "Permit evaluation on the train or val split");
    imp_cmd->add_option("--model", model_path, "Model directory (default: the output directory)");

    std::vector<std::string> argv_store{"asen"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    RunConfig config;
    try {
        Json user = load_config_file(common.config);
        if (common.seed) user["seed"] = *common.seed;
        for (const auto& s : common.sets) apply_override(user, s);
        config = parse_run_config(user);
    } catch (const std::exception& e) {
        err << "asen: config error: " << e.what() << '\n';
        return 2;
    }
    const fs::path out_dir = common.out.empty() ? fs::path(config.output_dir) : fs::path(common.out);

    try {
        if (synth->parsed()) {
            cmd_synth(config, out_dir);
        } else if (train_cmd->parsed()) {
            cmd_train(config, out_dir);
        } else if (eval_cmd->parsed()) {
            EvaluateRequest request;
            request.model = model_path.empty() ? out_dir : fs::path(model_path);
            const auto parsed_role = data::role_from_name(role);
            if (!parsed_role) {
                err << "asen: unknown split '" << role << "' (expected train, val or test)\n";
                return 2;
            }
            request.role = *parsed_role;
            request.allow_train = allow_train;
            cmd_evaluate(config, request, out_dir, out);
        } else if (imp_cmd->parsed()) {
            cmd_importance(config, model_path.empty() ? out_dir : fs::path(model_path), out_dir, out);
        }
    } catch (const StageError& e) {
        err << "asen: stage '" << e.stage() << "' failed: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "asen: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace asen::cli
