#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "feduv/model.hpp"
#include "feduv/protocol.hpp"

namespace feduv::fed {

struct BadKappa : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyDataset : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyUpdateSet : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ShapeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DivergenceDetected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Method { feduv, feduv_with_neg, softmax, fedaws };

Method method_from_string(const std::string& name);
std::string method_to_string(Method m);

// lambda used by the negative-loss ablation runs
constexpr double kAblationLambda = 1.0;

enum class LrSchedule { inverse_time, exponential };

LrSchedule lr_schedule_from_string(const std::string& name);
std::string lr_schedule_to_string(LrSchedule s);

struct FederationConfig {
    int K = 0;
    double epsilon = 0.1;      // participation fraction
    int local_epochs = 1;      // E
    int batch_size = 0;        // B; 0 means full local dataset
    double lr0 = 0.1;
    double lr_decay = 0.01;
    LrSchedule lr_schedule = LrSchedule::inverse_time;
    int rounds = 1000;         // T
    Method method = Method::feduv;
    uint64_t seed = 1;
    // fedaws server step; no standard values exist, so both knobs are exposed
    double fedaws_server_lr_scale = 0.1;  // times the current client lr
    double fedaws_nu = 0.0;               // 0 selects sqrt(2 * n_d)

    int kappa() const;
    // inverse_time: lr0 / (1 + decay * t); exponential: lr0 * exp(-decay * t)
    double lr_at(int round) const;
};

// One user's local world: data, secret (feduv) or class identity, seed.
// other_codewords is populated only for the negative-loss ablation, which by
// construction cannot run under the deployment secrecy model.
struct ClientState {
    int user_index = 0;
    std::vector<Vec> dataset;
    std::optional<protocol::SecretAssignment> secret;
    std::vector<Vec> other_codewords;
    uint64_t client_seed = 0;

    int n() const { return static_cast<int>(dataset.size()); }
};

struct RoundReport {
    int round = 0;
    std::vector<int> sampled;
    double mean_loss = 0.0;
    uint64_t checksum = 0;
    double lr = 0.0;
};

// Uniform kappa-subset without replacement, deterministic per (seed, round).
std::vector<int> sample_clients(int round, int K, int kappa, uint64_t seed);

// Example visit order for one local epoch; shared with tests so a reference
// SGD loop can replay training exactly.
std::vector<size_t> local_batch_order(uint64_t client_seed, int round, int epoch, size_t n);

// E local epochs of mini-batch SGD with the method's loss. Returns the new
// params, the example count, and the mean per-example loss observed.
struct ClientUpdate {
    model::ModelParams params;
    int n_examples = 0;
    double mean_loss = 0.0;
};

ClientUpdate client_update(const model::ModelParams& params, const ClientState& client,
                           Method method, int local_epochs, int batch_size, double lr, int round);

// Example-count-weighted mean of parameter updates.
model::ModelParams aggregate(const std::vector<std::pair<model::ModelParams, int>>& updates);

// Called after each round's aggregation with the new global params.
using RoundObserver = std::function<void(int, const model::ModelParams&, const RoundReport&)>;

std::pair<model::ModelParams, std::vector<RoundReport>> run_federation(
    const FederationConfig& config, const std::vector<ClientState>& clients,
    const model::ModelParams& init, const RoundObserver& observer = {});

}  // namespace feduv::fed
