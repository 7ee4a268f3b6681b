#include "feduv/run_config.hpp"

#include <fstream>

#include <json.hpp>

#include "feduv/rng.hpp"

namespace feduv::cli {

using nlohmann::json;

std::vector<int> RunConfig::arch() const {
    std::vector<int> a;
    a.push_back(data.dim);
    a.insert(a.end(), hidden.begin(), hidden.end());
    a.push_back(n_d);
    return a;
}

RunConfig default_config() {
    RunConfig c;
    c.federation.K = c.data.K_train;
    c.federation.epsilon = 0.1;
    c.federation.local_epochs = 1;
    c.federation.batch_size = 0;
    c.federation.lr0 = 0.1;
    c.federation.lr_decay = 0.01;
    c.federation.rounds = 2000;
    c.federation.method = fed::Method::feduv;
    c.data.seed = derive_seed(c.seed, 0x64617461u /* "data" */);
    c.federation.seed = derive_seed(c.seed, 0x66656400u /* "fed" */);
    return c;
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigInvalid("cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigInvalid("config parse error in " + path + ": " + e.what());
    }

    RunConfig c = default_config();
    try {
        maybe(j, "seed", c.seed);
        maybe(j, "out_dir", c.out_dir);
        if (j.contains("data")) {
            const auto& d = j.at("data");
            maybe(d, "k_train", c.data.K_train);
            maybe(d, "k_unknown", c.data.K_unknown);
            maybe(d, "dim", c.data.dim);
            maybe(d, "n_train", c.data.n_train);
            maybe(d, "n_val", c.data.n_val);
            maybe(d, "n_test", c.data.n_test);
            maybe(d, "intra_sigma", c.data.intra_sigma);
            maybe(d, "inter_scale", c.data.inter_scale);
        }
        if (j.contains("code")) {
            const auto& d = j.at("code");
            maybe(d, "m", c.code_m);
            maybe(d, "k_min", c.code_k_min);
            maybe(d, "l_b", c.l_b);
        }
        if (j.contains("model")) {
            const auto& d = j.at("model");
            maybe(d, "hidden", c.hidden);
            maybe(d, "n_d", c.n_d);
        }
        if (j.contains("federation")) {
            const auto& d = j.at("federation");
            maybe(d, "epsilon", c.federation.epsilon);
            maybe(d, "local_epochs", c.federation.local_epochs);
            maybe(d, "batch_size", c.federation.batch_size);
            maybe(d, "lr0", c.federation.lr0);
            maybe(d, "lr_decay", c.federation.lr_decay);
            if (d.contains("lr_schedule"))
                c.federation.lr_schedule =
                    fed::lr_schedule_from_string(d.at("lr_schedule").get<std::string>());
            maybe(d, "rounds", c.federation.rounds);
            maybe(d, "fedaws_server_lr_scale", c.federation.fedaws_server_lr_scale);
            maybe(d, "fedaws_nu", c.federation.fedaws_nu);
            if (d.contains("method"))
                c.federation.method = fed::method_from_string(d.at("method").get<std::string>());
        }
        if (j.contains("verification")) {
            const auto& d = j.at("verification");
            maybe(d, "q", c.warmup_q);
            maybe(d, "roc_grid", c.roc_grid);
            maybe(d, "max_impostors_per_verifier", c.max_impostors_per_verifier);
        }
        maybe(j, "checkpoint_every", c.checkpoint_every);
    } catch (const json::exception& e) {
        throw ConfigInvalid("config field error in " + path + ": " + e.what());
    }

    c.federation.K = c.data.K_train;
    c.data.seed = derive_seed(c.seed, 0x64617461u);
    c.federation.seed = derive_seed(c.seed, 0x66656400u);
    return c;
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["data"] = {{"k_train", c.data.K_train},   {"k_unknown", c.data.K_unknown},
                 {"dim", c.data.dim},           {"n_train", c.data.n_train},
                 {"n_val", c.data.n_val},       {"n_test", c.data.n_test},
                 {"intra_sigma", c.data.intra_sigma}, {"inter_scale", c.data.inter_scale}};
    j["code"] = {{"m", c.code_m}, {"k_min", c.code_k_min}, {"l_b", c.l_b}};
    j["model"] = {{"hidden", c.hidden}, {"n_d", c.n_d}};
    j["federation"] = {{"epsilon", c.federation.epsilon},
                       {"local_epochs", c.federation.local_epochs},
                       {"batch_size", c.federation.batch_size},
                       {"lr0", c.federation.lr0},
                       {"lr_decay", c.federation.lr_decay},
                       {"lr_schedule", fed::lr_schedule_to_string(c.federation.lr_schedule)},
                       {"rounds", c.federation.rounds},
                       {"method", fed::method_to_string(c.federation.method)},
                       {"fedaws_server_lr_scale", c.federation.fedaws_server_lr_scale},
                       {"fedaws_nu", c.federation.fedaws_nu}};
    j["verification"] = {{"q", c.warmup_q},
                         {"roc_grid", c.roc_grid},
                         {"max_impostors_per_verifier", c.max_impostors_per_verifier}};
    j["checkpoint_every"] = c.checkpoint_every;
    return j.dump(2) + "\n";
}

void validate(const RunConfig& c) {
    if (c.out_dir.empty()) throw ConfigInvalid("out_dir must not be empty");
    if (c.data.K_train < 2) throw ConfigInvalid("k_train must be >= 2 for verification");
    if (c.l_b < 1 || c.l_b > 63) throw ConfigInvalid("l_b out of range");
    if (c.l_b < 63 && (uint64_t{1} << c.l_b) < static_cast<uint64_t>(c.data.K_train))
        throw ConfigInvalid("2^l_b < K: prefix space cannot hold all users");
    if (!(c.warmup_q > 0.0) || c.warmup_q > 1.0) throw ConfigInvalid("q must be in (0, 1]");
    if (c.roc_grid < 2) throw ConfigInvalid("roc_grid must be >= 2");
    if (c.n_d < 1) throw ConfigInvalid("n_d must be >= 1");
    for (int h : c.hidden)
        if (h < 1) throw ConfigInvalid("hidden widths must be >= 1");
    if (c.federation.rounds < 1) throw ConfigInvalid("rounds must be >= 1");
    if (c.federation.lr0 <= 0.0) throw ConfigInvalid("lr0 must be positive");
    if (c.federation.epsilon <= 0.0 || c.federation.epsilon > 1.0)
        throw ConfigInvalid("epsilon must be in (0, 1]");
    if (c.federation.local_epochs < 0) throw ConfigInvalid("local_epochs must be >= 0");
    if (c.checkpoint_every < 0) throw ConfigInvalid("checkpoint_every must be >= 0");
}

}  // namespace feduv::cli
