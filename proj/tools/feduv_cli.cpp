// feduv: desk-scale federated user-verification pipeline.
//
// Subcommands mirror the pipeline stages:
//   gen-data   synthetic per-user datasets
//   gen-codes  server base-vector assignment + client secret codewords
//   train      federated training, metrics CSV + checkpoints
//   calibrate  per-user warm-up thresholds
//   evaluate   ROC curves, summary, SVG plots

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "feduv/pipeline.hpp"
#include "feduv/rng.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::string method;
    int64_t seed = -1;
    int rounds = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON run configuration");
    cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", flags.seed, "master seed (overrides config)");
    cmd->add_option("--method", flags.method,
                    "feduv | feduv_with_neg | softmax | fedaws (overrides config)");
    cmd->add_option("--rounds", flags.rounds, "federation rounds (overrides config)");
}

feduv::cli::RunConfig resolve(const CommonFlags& flags) {
    auto config = flags.config_path.empty() ? feduv::cli::default_config()
                                            : feduv::cli::load_config(flags.config_path);
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (flags.seed >= 0) {
        config.seed = static_cast<uint64_t>(flags.seed);
        config.data.seed = feduv::derive_seed(config.seed, 0x64617461u);
        config.federation.seed = feduv::derive_seed(config.seed, 0x66656400u);
    }
    if (!flags.method.empty())
        config.federation.method = feduv::fed::method_from_string(flags.method);
    if (flags.rounds > 0) config.federation.rounds = flags.rounds;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated user verification with secret ECC codewords"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string checkpoint, thresholds;

    auto* gen_data = app.add_subcommand("gen-data", "generate synthetic per-user datasets");
    add_common(gen_data, flags);
    auto* gen_codes = app.add_subcommand("gen-codes", "assign base vectors and derive secrets");
    add_common(gen_codes, flags);
    auto* train = app.add_subcommand("train", "run federated training");
    add_common(train, flags);
    auto* calibrate = app.add_subcommand("calibrate", "compute per-user thresholds");
    add_common(calibrate, flags);
    calibrate->add_option("--checkpoint", checkpoint, "checkpoint path (default: final)");
    auto* evaluate = app.add_subcommand("evaluate", "ROC evaluation and plots");
    add_common(evaluate, flags);
    evaluate->add_option("--checkpoint", checkpoint, "checkpoint path (default: final)");
    evaluate->add_option("--thresholds", thresholds, "thresholds path (default: calibrated)");

    CLI11_PARSE(app, argc, argv);

    try {
        auto config = resolve(flags);
        if (gen_data->parsed()) feduv::cli::cmd_gen_data(config);
        if (gen_codes->parsed()) feduv::cli::cmd_gen_codes(config);
        if (train->parsed()) feduv::cli::cmd_train(config);
        if (calibrate->parsed()) feduv::cli::cmd_calibrate(config, checkpoint);
        if (evaluate->parsed()) feduv::cli::cmd_evaluate(config, checkpoint, thresholds);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
