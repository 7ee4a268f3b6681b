#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "feduv/federation.hpp"
#include "feduv/synth_data.hpp"

namespace feduv::cli {

struct ConfigInvalid : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Everything one experiment needs, aggregated from a single JSON file. All
// randomness in the pipeline derives from `seed`; no command reads the clock
// or an entropy source.
struct RunConfig {
    uint64_t seed = 1;
    std::string out_dir = "out";

    synth::DatasetSpec data;  // data.seed is derived from `seed` on load

    // code request
    int code_m = 4;
    int code_k_min = 7;
    int l_b = 6;

    // feature network: hidden widths then embedding width
    std::vector<int> hidden = {64};
    int n_d = 16;

    fed::FederationConfig federation;

    // verification
    double warmup_q = 0.9;
    int roc_grid = 401;
    int max_impostors_per_verifier = 0;

    int checkpoint_every = 0;  // 0: only the final checkpoint

    std::vector<int> arch() const;   // {dim, hidden..., n_d}
};

RunConfig default_config();
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& config);

// Cheap cross-field consistency checks (2^l_b >= K, q in (0,1], ...).
void validate(const RunConfig& config);

}  // namespace feduv::cli
