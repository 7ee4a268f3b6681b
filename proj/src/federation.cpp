#include "feduv/federation.hpp"

#include <cmath>

#include "feduv/losses.hpp"
#include "feduv/parallel.hpp"
#include "feduv/rng.hpp"

namespace feduv::fed {

Method method_from_string(const std::string& name) {
    if (name == "feduv") return Method::feduv;
    if (name == "feduv_with_neg") return Method::feduv_with_neg;
    if (name == "softmax") return Method::softmax;
    if (name == "fedaws") return Method::fedaws;
    throw std::invalid_argument("unknown method: " + name);
}

std::string method_to_string(Method m) {
    switch (m) {
        case Method::feduv: return "feduv";
        case Method::feduv_with_neg: return "feduv_with_neg";
        case Method::softmax: return "softmax";
        case Method::fedaws: return "fedaws";
    }
    return "?";
}

LrSchedule lr_schedule_from_string(const std::string& name) {
    if (name == "inverse_time") return LrSchedule::inverse_time;
    if (name == "exponential") return LrSchedule::exponential;
    throw std::invalid_argument("unknown lr schedule: " + name);
}

std::string lr_schedule_to_string(LrSchedule s) {
    return s == LrSchedule::inverse_time ? "inverse_time" : "exponential";
}

int FederationConfig::kappa() const {
    int k = static_cast<int>(std::floor(epsilon * K));
    return std::max(k, 1);
}

double FederationConfig::lr_at(int round) const {
    if (lr_schedule == LrSchedule::exponential)
        return lr0 * std::exp(-lr_decay * round);
    return lr0 / (1.0 + lr_decay * round);
}

std::vector<int> sample_clients(int round, int K, int kappa, uint64_t seed) {
    if (kappa < 1 || kappa > K) throw BadKappa("sample_clients: kappa outside [1, K]");
    // partial Fisher-Yates: first kappa slots of a fresh permutation
    std::vector<int> pool(static_cast<size_t>(K));
    for (int i = 0; i < K; ++i) pool[static_cast<size_t>(i)] = i;
    Rng rng(derive_seed(seed, 0x73616d70u /* "samp" */, static_cast<uint64_t>(round)));
    for (int i = 0; i < kappa; ++i) {
        size_t j = static_cast<size_t>(i) +
                   static_cast<size_t>(rng.bounded(static_cast<uint64_t>(K - i)));
        std::swap(pool[static_cast<size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<size_t>(kappa));
    return pool;
}

std::vector<size_t> local_batch_order(uint64_t client_seed, int round, int epoch, size_t n) {
    Rng rng(derive_seed(client_seed, 0x65706f63u /* "epoc" */, static_cast<uint64_t>(round),
                        static_cast<uint64_t>(epoch)));
    return rng.permutation(n);
}

namespace {

// Per-example loss and parameter gradient under the method's objective.
double example_gradient(const model::ModelParams& params, const ClientState& client,
                        Method method, const Vec& x, model::ParamGradients& out) {
    auto trace = model::forward(params, x);
    switch (method) {
        case Method::feduv:
        case Method::feduv_with_neg: {
            const Vec& v = client.secret->codeword.bipolar;
            double lambda = method == Method::feduv ? 0.0 : kAblationLambda;
            auto lv = losses::feduv_loss(trace.scaled, v, client.other_codewords, lambda);
            out = model::backward(params, trace, lv.grad);
            return lv.value;
        }
        case Method::softmax: {
            auto lv = losses::softmax_ce(trace.projected, client.user_index);
            out = model::backward_from_projection(params, trace, lv.grad);
            return lv.value;
        }
        case Method::fedaws: {
            // positive term of the distance objective: pull the embedding
            // toward this user's row of the table; the spreadout step on the
            // server side provides the repulsion
            const size_t u = static_cast<size_t>(client.user_index);
            Vec diff(trace.embedding.size());
            double loss = 0.0;
            for (size_t j = 0; j < diff.size(); ++j) {
                diff[j] = trace.embedding[j] - params.W(u, j);
                loss += diff[j] * diff[j];
            }
            Vec demb(diff.size());
            for (size_t j = 0; j < diff.size(); ++j) demb[j] = 2.0 * diff[j];
            out = model::backward_from_embedding(params, trace, demb);
            for (size_t j = 0; j < diff.size(); ++j) out.W(u, j) = -2.0 * diff[j];
            return loss;
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace

ClientUpdate client_update(const model::ModelParams& params, const ClientState& client,
                           Method method, int local_epochs, int batch_size, double lr,
                           int round) {
    if (client.dataset.empty()) throw EmptyDataset("client_update: user has no data");
    if ((method == Method::feduv || method == Method::feduv_with_neg) && !client.secret)
        throw EmptyDataset("client_update: feduv methods need a secret codeword");

    const size_t n = client.dataset.size();
    const size_t B = batch_size <= 0 ? n : std::min(static_cast<size_t>(batch_size), n);

    ClientUpdate result;
    result.params = params;
    result.n_examples = static_cast<int>(n);
    double loss_sum = 0.0;
    size_t loss_count = 0;

    for (int epoch = 0; epoch < local_epochs; ++epoch) {
        auto order = local_batch_order(client.client_seed, round, epoch, n);
        size_t cursor = 0;
        while (cursor < n) {
            size_t batch_n = std::min(B, n - cursor);  // final short batch included
            auto grads = model::zeros_like(result.params);
            double batch_loss = 0.0;
            for (size_t b = 0; b < batch_n; ++b) {
                const Vec& x = client.dataset[order[cursor + b]];
                model::ParamGradients g;
                batch_loss += example_gradient(result.params, client, method, x, g);
                grads.accumulate(g);
            }
            grads.scale(1.0 / static_cast<double>(batch_n));
            result.params = model::sgd_step(result.params, grads, lr);
            loss_sum += batch_loss;
            loss_count += batch_n;
            cursor += batch_n;
        }
    }
    result.mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    return result;
}

model::ModelParams aggregate(const std::vector<std::pair<model::ModelParams, int>>& updates) {
    if (updates.empty()) throw EmptyUpdateSet("aggregate: no updates");
    double total = 0.0;
    for (const auto& [p, n] : updates) total += static_cast<double>(n);

    const auto& first = updates.front().first;
    model::ModelParams out = first;
    // normalized weights so a single update passes through bit-identically
    double w0 = static_cast<double>(updates.front().second) / total;
    for (auto& m : out.weights) scale_inplace(m, w0);
    for (auto& b : out.biases) scale_inplace(b, w0);
    scale_inplace(out.W, w0);

    for (size_t u = 1; u < updates.size(); ++u) {
        const auto& [p, n] = updates[u];
        if (p.weights.size() != first.weights.size() || !p.W.same_shape(first.W))
            throw ShapeMismatch("aggregate: update shapes differ");
        double w = static_cast<double>(n) / total;
        for (size_t l = 0; l < out.weights.size(); ++l) {
            if (!p.weights[l].same_shape(first.weights[l]))
                throw ShapeMismatch("aggregate: layer shapes differ");
            for (size_t i = 0; i < out.weights[l].data.size(); ++i)
                out.weights[l].data[i] += w * p.weights[l].data[i];
            for (size_t i = 0; i < out.biases[l].size(); ++i)
                out.biases[l][i] += w * p.biases[l][i];
        }
        for (size_t i = 0; i < out.W.data.size(); ++i) out.W.data[i] += w * p.W.data[i];
    }
    return out;
}

std::pair<model::ModelParams, std::vector<RoundReport>> run_federation(
    const FederationConfig& config, const std::vector<ClientState>& clients,
    const model::ModelParams& init, const RoundObserver& observer) {
    if (static_cast<int>(clients.size()) != config.K)
        throw ShapeMismatch("run_federation: clients.size() != K");
    if (config.rounds < 1 || config.lr0 <= 0.0)
        throw BadKappa("run_federation: rounds and lr0 must be positive");

    const int kappa = config.kappa();
    model::ModelParams params = init;
    std::vector<RoundReport> reports;
    reports.reserve(static_cast<size_t>(config.rounds));

    for (int t = 0; t < config.rounds; ++t) {
        const double lr = config.lr_at(t);
        auto sampled = sample_clients(t, config.K, kappa, config.seed);

        // independent local updates; slot per client keeps the merge
        // deterministic whatever the completion order
        std::vector<ClientUpdate> updates(sampled.size());
        parallel_for(sampled.size(), [&](size_t i) {
            updates[i] = client_update(params, clients[static_cast<size_t>(sampled[i])],
                                       config.method, config.local_epochs, config.batch_size,
                                       lr, t);
        });

        std::vector<std::pair<model::ModelParams, int>> weighted;
        weighted.reserve(updates.size());
        double loss_sum = 0.0;
        for (auto& u : updates) {
            loss_sum += u.mean_loss;
            weighted.emplace_back(std::move(u.params), u.n_examples);
        }
        params = aggregate(weighted);

        if (config.method == Method::fedaws) {
            double nu = config.fedaws_nu > 0.0
                            ? config.fedaws_nu
                            : std::sqrt(2.0 * static_cast<double>(params.n_d()));
            auto reg = losses::spreadout_reg(params.W, nu);
            double server_lr = config.fedaws_server_lr_scale * lr;
            for (size_t i = 0; i < params.W.data.size(); ++i)
                params.W.data[i] -= server_lr * reg.grad.data[i];
        }

        RoundReport report;
        report.round = t;
        report.sampled = sampled;
        report.mean_loss = loss_sum / static_cast<double>(updates.size());
        report.checksum = model::param_checksum(params);
        report.lr = lr;
        if (!std::isfinite(report.mean_loss))
            throw DivergenceDetected("run_federation: non-finite loss at round " +
                                     std::to_string(t));
        if (observer) observer(t, params, report);
        reports.push_back(std::move(report));
    }
    return {std::move(params), std::move(reports)};
}

}  // namespace feduv::fed
