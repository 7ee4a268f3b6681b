#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "feduv/federation.hpp"
#include "feduv/losses.hpp"
#include "feduv/rng.hpp"
#include "feduv/synth_data.hpp"

using namespace feduv;
using namespace feduv::fed;

namespace {

// small feduv client population on a (15,7) code
std::vector<ClientState> make_clients(int K, const ecc::CodeSpec& spec, int dim,
                                      int examples_per_user, uint64_t seed) {
    synth::DatasetSpec dspec;
    dspec.K_train = K;
    dspec.K_unknown = 1;
    dspec.dim = dim;
    dspec.n_train = examples_per_user;
    dspec.n_val = 1;
    dspec.n_test = 1;
    dspec.seed = seed;
    auto [known, unknown] = synth::generate(dspec);

    int l_b = 1;
    while ((1 << l_b) < K) ++l_b;
    auto bases = protocol::assign_base_vectors(K, l_b, derive_seed(seed, 0xba5e));

    std::vector<ClientState> clients;
    for (int u = 0; u < K; ++u) {
        ClientState c;
        c.user_index = u;
        c.dataset = known[static_cast<size_t>(u)].train;
        c.secret = protocol::derive_secret(spec, bases[static_cast<size_t>(u)],
                                           derive_seed(seed, 0xc11e47, u));
        c.client_seed = derive_seed(seed, 0x5eed, u);
        clients.push_back(std::move(c));
    }
    return clients;
}

}  // namespace

TEST_CASE("sample_clients: bounds, determinism, uniformity") {
    SUBCASE("kappa = K returns everyone") {
        auto s = sample_clients(0, 8, 8, 42);
        CHECK(std::set<int>(s.begin(), s.end()).size() == 8);
    }
    SUBCASE("kappa = 1 returns a singleton") {
        CHECK(sample_clients(3, 8, 1, 42).size() == 1);
    }
    SUBCASE("deterministic per (seed, round), varying across rounds") {
        CHECK(sample_clients(5, 20, 4, 7) == sample_clients(5, 20, 4, 7));
        bool differs = false;
        for (int t = 0; t < 10 && !differs; ++t)
            differs = sample_clients(t, 20, 4, 7) != sample_clients(t + 1, 20, 4, 7);
        CHECK(differs);
    }
    SUBCASE("no replacement within a round") {
        for (int t = 0; t < 50; ++t) {
            auto s = sample_clients(t, 10, 7, 3);
            CHECK(std::set<int>(s.begin(), s.end()).size() == s.size());
        }
    }
    SUBCASE("frequency over 10000 rounds: each of 10 users drawn 2000 +- 150 times") {
        std::map<int, int> counts;
        for (int t = 0; t < 10000; ++t)
            for (int u : sample_clients(t, 10, 2, 99)) counts[u]++;
        for (int u = 0; u < 10; ++u) {
            CHECK(counts[u] > 1850);
            CHECK(counts[u] < 2150);
        }
    }
    SUBCASE("bad kappa rejected") {
        CHECK_THROWS_AS(sample_clients(0, 5, 0, 1), BadKappa);
        CHECK_THROWS_AS(sample_clients(0, 5, 6, 1), BadKappa);
    }
}

TEST_CASE("kappa formula") {
    FederationConfig cfg;
    cfg.K = 50;
    cfg.epsilon = 0.1;
    CHECK(cfg.kappa() == 5);
    cfg.epsilon = 0.001;
    CHECK(cfg.kappa() == 1);  // floor clamps to 1
    cfg.epsilon = 1.0;
    CHECK(cfg.kappa() == 50);
}

TEST_CASE("client_update basics") {
    auto spec = ecc::build_code(4, 7);
    auto clients = make_clients(4, spec, 8, 6, 11);
    auto params = model::init_params({8, 12, 6}, spec.c, 5);

    SUBCASE("E=0 leaves params unchanged") {
        auto u = client_update(params, clients[0], Method::feduv, 0, 0, 0.1, 0);
        CHECK(model::param_checksum(u.params) == model::param_checksum(params));
        CHECK(u.n_examples == 6);
    }
    SUBCASE("one example, E=1, B=1 is exactly one sgd step") {
        ClientState single = clients[1];
        single.dataset.resize(1);
        auto u = client_update(params, single, Method::feduv, 1, 1, 0.05, 3);

        auto trace = model::forward(params, single.dataset[0]);
        auto lv = losses::pos_loss(trace.scaled, single.secret->codeword.bipolar);
        auto grads = model::backward(params, trace, lv.grad);
        auto expect = model::sgd_step(params, grads, 0.05);
        CHECK(model::param_checksum(u.params) == model::param_checksum(expect));
        CHECK(u.mean_loss == doctest::Approx(lv.value));
    }
    SUBCASE("empty dataset rejected") {
        ClientState empty = clients[0];
        empty.dataset.clear();
        CHECK_THROWS_AS(client_update(params, empty, Method::feduv, 1, 0, 0.1, 0),
                        EmptyDataset);
    }
    SUBCASE("loss decreases over 50 local epochs on one client") {
        ClientState c = clients[2];
        auto before = client_update(params, c, Method::feduv, 1, 0, 0.0001, 0).mean_loss;
        auto p = params;
        double last = before;
        for (int e = 0; e < 50; ++e) {
            auto u = client_update(p, c, Method::feduv, 1, 0, 0.02, e);
            p = u.params;
            last = u.mean_loss;
        }
        CHECK(last < before - 1e-6);
    }
}

TEST_CASE("aggregate") {
    auto params_a = model::init_params({4, 6, 3}, 7, 1);
    auto params_b = model::init_params({4, 6, 3}, 7, 2);

    SUBCASE("identical params from all clients stay put") {
        auto out = aggregate({{params_a, 3}, {params_a, 9}});
        for (size_t l = 0; l < out.weights.size(); ++l)
            for (size_t i = 0; i < out.weights[l].data.size(); ++i)
                CHECK(out.weights[l].data[i] ==
                      doctest::Approx(params_a.weights[l].data[i]).epsilon(1e-15));
    }
    SUBCASE("weighted mean with n = (1, 3) on scalar-like entries") {
        auto zeros = params_a;
        for (auto& w : zeros.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
        for (auto& b : zeros.biases) std::fill(b.begin(), b.end(), 0.0);
        std::fill(zeros.W.data.begin(), zeros.W.data.end(), 0.0);
        auto fours = zeros;
        for (auto& w : fours.weights) std::fill(w.data.begin(), w.data.end(), 4.0);
        std::fill(fours.W.data.begin(), fours.W.data.end(), 4.0);
        auto out = aggregate({{zeros, 1}, {fours, 3}});
        CHECK(out.weights[0].data[0] == doctest::Approx(3.0));
        CHECK(out.W.data[0] == doctest::Approx(3.0));
    }
    SUBCASE("single client passes through bit-identically") {
        auto out = aggregate({{params_b, 17}});
        CHECK(model::param_checksum(out) == model::param_checksum(params_b));
    }
    SUBCASE("permutation invariance") {
        auto ab = aggregate({{params_a, 2}, {params_b, 5}});
        auto ba = aggregate({{params_b, 5}, {params_a, 2}});
        for (size_t l = 0; l < ab.weights.size(); ++l)
            for (size_t i = 0; i < ab.weights[l].data.size(); ++i)
                CHECK(ab.weights[l].data[i] ==
                      doctest::Approx(ba.weights[l].data[i]).epsilon(1e-15));
    }
    SUBCASE("degree-1 homogeneity in params") {
        auto a2 = params_a, b2 = params_b;
        for (auto& w : a2.weights) scale_inplace(w, 2.5);
        for (auto& b : a2.biases) scale_inplace(b, 2.5);
        scale_inplace(a2.W, 2.5);
        for (auto& w : b2.weights) scale_inplace(w, 2.5);
        for (auto& b : b2.biases) scale_inplace(b, 2.5);
        scale_inplace(b2.W, 2.5);
        auto lhs = aggregate({{a2, 2}, {b2, 5}});
        auto rhs = aggregate({{params_a, 2}, {params_b, 5}});
        for (size_t i = 0; i < lhs.W.data.size(); ++i)
            CHECK(lhs.W.data[i] == doctest::Approx(2.5 * rhs.W.data[i]).epsilon(1e-12));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(aggregate({}), EmptyUpdateSet);
        auto other = model::init_params({4, 5, 3}, 7, 3);
        CHECK_THROWS_AS(aggregate({{params_a, 1}, {other, 1}}), ShapeMismatch);
    }
}

TEST_CASE("FedAvg with K=1, epsilon=1 is bit-identical to sequential SGD") {
    auto spec = ecc::build_code(4, 7);
    auto clients = make_clients(1, spec, 8, 10, 77);
    auto init = model::init_params({8, 12, 6}, spec.c, 13);

    FederationConfig cfg;
    cfg.K = 1;
    cfg.epsilon = 1.0;
    cfg.local_epochs = 2;
    cfg.batch_size = 4;  // 10 examples: batches of 4, 4, 2
    cfg.lr0 = 0.05;
    cfg.lr_decay = 0.01;
    cfg.rounds = 10;
    cfg.method = Method::feduv;
    cfg.seed = 5;

    auto [fed_params, reports] = run_federation(cfg, clients, init);

    // reference: plain SGD over the same batch schedule, built from the
    // model/loss primitives without the federation layer
    const auto& c = clients[0];
    auto params = init;
    for (int t = 0; t < cfg.rounds; ++t) {
        double lr = cfg.lr_at(t);
        for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
            auto order = local_batch_order(c.client_seed, t, epoch, c.dataset.size());
            size_t cursor = 0;
            while (cursor < order.size()) {
                size_t bn = std::min<size_t>(4, order.size() - cursor);
                auto grads = model::zeros_like(params);
                for (size_t b = 0; b < bn; ++b) {
                    auto trace = model::forward(params, c.dataset[order[cursor + b]]);
                    auto lv = losses::pos_loss(trace.scaled, c.secret->codeword.bipolar);
                    grads.accumulate(model::backward(params, trace, lv.grad));
                }
                grads.scale(1.0 / static_cast<double>(bn));
                params = model::sgd_step(params, grads, lr);
                cursor += bn;
            }
        }
    }
    CHECK(model::param_checksum(fed_params) == model::param_checksum(params));
    CHECK(reports.size() == 10);
}

TEST_CASE("run_federation determinism and reports") {
    auto spec = ecc::build_code(4, 7);
    auto clients = make_clients(6, spec, 8, 5, 3);
    auto init = model::init_params({8, 10, 6}, spec.c, 21);

    FederationConfig cfg;
    cfg.K = 6;
    cfg.epsilon = 0.5;
    cfg.rounds = 8;
    cfg.lr0 = 0.05;
    cfg.seed = 9;

    auto [p1, r1] = run_federation(cfg, clients, init);
    auto [p2, r2] = run_federation(cfg, clients, init);
    CHECK(model::param_checksum(p1) == model::param_checksum(p2));
    REQUIRE(r1.size() == r2.size());
    for (size_t t = 0; t < r1.size(); ++t) {
        CHECK(r1[t].checksum == r2[t].checksum);
        CHECK(r1[t].sampled == r2[t].sampled);
        CHECK(r1[t].sampled.size() == 3);
        CHECK(std::isfinite(r1[t].mean_loss));
        CHECK(r1[t].lr == doctest::Approx(cfg.lr0 / (1.0 + cfg.lr_decay * t)));
    }
}

TEST_CASE("lr schedule is inverse-time decay by default") {
    FederationConfig cfg;
    cfg.lr0 = 0.2;
    cfg.lr_decay = 0.5;
    CHECK(cfg.lr_at(0) == doctest::Approx(0.2));
    CHECK(cfg.lr_at(1) == doctest::Approx(0.2 / 1.5));
    CHECK(cfg.lr_at(4) == doctest::Approx(0.2 / 3.0));

    cfg.lr_schedule = LrSchedule::exponential;
    CHECK(cfg.lr_at(0) == doctest::Approx(0.2));
    CHECK(cfg.lr_at(2) == doctest::Approx(0.2 * std::exp(-1.0)));
    CHECK(lr_schedule_from_string("exponential") == LrSchedule::exponential);
    CHECK(lr_schedule_to_string(LrSchedule::inverse_time) == "inverse_time");
    CHECK_THROWS_AS(lr_schedule_from_string("linear"), std::invalid_argument);
}

TEST_CASE("softmax and fedaws methods run and report finite losses") {
    auto spec = ecc::build_code(4, 7);
    auto clients = make_clients(5, spec, 8, 5, 31);
    for (auto& c : clients) c.secret.reset();  // baselines carry class identity only

    FederationConfig cfg;
    cfg.K = 5;
    cfg.epsilon = 1.0;
    cfg.rounds = 5;
    cfg.lr0 = 0.02;
    cfg.seed = 17;

    SUBCASE("softmax") {
        cfg.method = Method::softmax;
        auto init = model::init_params({8, 10, 6}, cfg.K, 23);
        auto [p, r] = run_federation(cfg, clients, init);
        for (const auto& rep : r) CHECK(std::isfinite(rep.mean_loss));
        CHECK(r.back().mean_loss < r.front().mean_loss);
    }
    SUBCASE("fedaws applies a server spreadout step") {
        cfg.method = Method::fedaws;
        auto init = model::init_params({8, 10, 6}, cfg.K, 23);
        auto [p, r] = run_federation(cfg, clients, init);
        for (const auto& rep : r) CHECK(std::isfinite(rep.mean_loss));
        // the spreadout step must move the table away from the plain average:
        // rerun with the server step disabled via zero scale
        auto cfg2 = cfg;
        cfg2.fedaws_server_lr_scale = 0.0;
        auto [p2, r2] = run_federation(cfg2, clients, init);
        CHECK(model::param_checksum(p.W.rows ? p : p2) != model::param_checksum(p2));
    }
}

TEST_CASE("feduv ablation needs other codewords only for lambda > 0") {
    auto spec = ecc::build_code(4, 7);
    auto clients = make_clients(3, spec, 8, 4, 41);

    FederationConfig cfg;
    cfg.K = 3;
    cfg.epsilon = 1.0;
    cfg.rounds = 2;
    cfg.lr0 = 0.02;
    cfg.seed = 2;
    cfg.method = Method::feduv_with_neg;
    auto init = model::init_params({8, 10, 6}, spec.c, 29);

    // without the codebook the ablation cannot compute the neg term
    CHECK_THROWS_AS(run_federation(cfg, clients, init), losses::EmptyOtherSet);

    for (size_t u = 0; u < clients.size(); ++u)
        for (size_t w = 0; w < clients.size(); ++w)
            if (u != w)
                clients[u].other_codewords.push_back(clients[w].secret->codeword.bipolar);
    auto [p, r] = run_federation(cfg, clients, init);
    for (const auto& rep : r) CHECK(std::isfinite(rep.mean_loss));
}

TEST_CASE("divergence aborts the run") {
    auto spec = ecc::build_code(4, 7);
    auto clients = make_clients(4, spec, 8, 5, 61);
    for (auto& c : clients) c.secret.reset();

    FederationConfig cfg;
    cfg.K = 4;
    cfg.epsilon = 1.0;
    cfg.rounds = 200;
    cfg.lr0 = 5.0;  // guaranteed blow-up for the quadratic objective
    cfg.lr_decay = 0.0;
    cfg.method = Method::fedaws;
    cfg.seed = 8;
    auto init = model::init_params({8, 10, 6}, cfg.K, 2);
    CHECK_THROWS_AS(run_federation(cfg, clients, init), DivergenceDetected);
}

TEST_CASE("results are independent of the worker thread count") {
    auto spec = ecc::build_code(4, 7);
    auto clients = make_clients(6, spec, 8, 5, 71);
    auto init = model::init_params({8, 10, 6}, spec.c, 4);

    FederationConfig cfg;
    cfg.K = 6;
    cfg.epsilon = 1.0;  // six concurrent client updates per round
    cfg.rounds = 5;
    cfg.lr0 = 0.05;
    cfg.seed = 12;

    setenv("FEDUV_THREADS", "1", 1);
    auto [p1, r1] = run_federation(cfg, clients, init);
    setenv("FEDUV_THREADS", "4", 1);
    auto [p4, r4] = run_federation(cfg, clients, init);
    unsetenv("FEDUV_THREADS");
    CHECK(model::param_checksum(p1) == model::param_checksum(p4));
    for (size_t t = 0; t < r1.size(); ++t) CHECK(r1[t].checksum == r4[t].checksum);
}

TEST_CASE("observer sees every round in order") {
    auto spec = ecc::build_code(4, 7);
    auto clients = make_clients(2, spec, 8, 3, 53);
    auto init = model::init_params({8, 6, 4}, spec.c, 3);

    FederationConfig cfg;
    cfg.K = 2;
    cfg.epsilon = 1.0;
    cfg.rounds = 4;
    cfg.lr0 = 0.01;
    cfg.seed = 1;

    std::vector<int> seen;
    auto [p, r] = run_federation(cfg, clients, init,
                                 [&](int t, const model::ModelParams&, const RoundReport& rep) {
                                     seen.push_back(t);
                                     CHECK(rep.round == t);
                                 });
    CHECK(seen == std::vector<int>{0, 1, 2, 3});
}
