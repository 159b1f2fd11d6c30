#pragma once

#include "asen_cli/run_config.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace asen::cli {

/// A pipeline failure tagged with the stage that raised it.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& message)
        : std::runtime_error(message), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Dataset named by the config (generated or loaded).
data::Dataset load_dataset(const RunConfig& config);

/// Writes dataset.csv and provenance.json.
void cmd_synth(const RunConfig& config, const std::filesystem::path& out_dir);

/// Split, normalize, pool, head, baselines; writes every model and report.
void cmd_train(const RunConfig& config, const std::filesystem::path& out_dir);

struct EvaluateRequest {
    std::filesystem::path model; // model directory or a single model file
    data::SplitRole role = data::SplitRole::test;
    bool allow_train = false;
};

/// Writes metrics_<model>.json and confusion_<model>.csv and prints the
/// summary table to `out`.
void cmd_evaluate(const RunConfig& config, const EvaluateRequest& request, const std::filesystem::path& out_dir,
                  std::ostream& out);

/// Importance on the validation rows plus the top-k retraining experiment.
void cmd_importance(const RunConfig& config, const std::filesystem::path& model_dir,
                    const std::filesystem::path& out_dir, std::ostream& out);

/// Entry point shared by the executable and the tests. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace asen::cli
