#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "feduv/run_config.hpp"
#include "feduv/verification.hpp"

namespace feduv::cli {

struct MissingArtifact : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OutputLocked : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Canonical artifact locations under the output directory. Commands never
// regenerate upstream artifacts; they fail with MissingArtifact instead.
struct Artifacts {
    explicit Artifacts(std::string out_dir);

    std::string out_dir;
    std::string manifest() const;
    std::string user_dir(int user_index) const;
    std::string user_data(int user_index) const;
    std::string user_secret(int user_index) const;
    std::string assignments() const;
    std::string metrics() const;
    std::string checkpoint_final() const;
    std::string checkpoint_round(int round) const;
    std::string thresholds() const;
    std::string roc_csv() const;
    std::string summary() const;
    std::string plot(const std::string& split) const;
    std::string lockfile() const;
};

// One command at a time per output directory.
class DirLock {
public:
    explicit DirLock(const std::string& out_dir);
    ~DirLock();
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::string path_;
    bool held_ = false;
};

// Pipeline commands. Each throws on error (MissingArtifact, ConfigInvalid,
// fed::DivergenceDetected, ...) and is idempotent given identical inputs.
void cmd_gen_data(const RunConfig& config);
void cmd_gen_codes(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_calibrate(const RunConfig& config, const std::string& checkpoint_path = "");
void cmd_evaluate(const RunConfig& config, const std::string& checkpoint_path = "",
                  const std::string& thresholds_path = "");

// Loaded state shared by train/calibrate/evaluate.
struct LoadedData {
    std::vector<synth::UserDataset> known;
    std::vector<synth::UserDataset> unknown;
};

LoadedData load_datasets(const RunConfig& config);
std::map<int, Vec> load_secrets(const RunConfig& config, const ecc::CodeSpec& spec);
std::map<int, double> load_thresholds(const std::string& path);

// Minimal static SVG line plot of one ROC curve.
std::string roc_svg(const verify::RocCurve& curve);

}  // namespace feduv::cli
