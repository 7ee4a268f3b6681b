#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "feduv/bch.hpp"
#include "feduv/rng.hpp"
#include "feduv/verification.hpp"

using namespace feduv;
using namespace feduv::verify;

namespace {

// model whose projection is the constant vector `target` for every input:
// one dense layer with zero weight and bias = target, W = identity
model::ModelParams constant_projection_model(const Vec& target) {
    const size_t c = target.size();
    model::ModelParams p;
    p.weights.emplace_back(c, 1);
    p.biases.push_back(target);
    p.W = Mat(c, c);
    for (size_t i = 0; i < c; ++i) p.W(i, i) = 1.0;
    return p;
}

synth::UserDataset tiny_user(int index, bool known, int n, int dim, uint64_t seed) {
    synth::UserDataset u;
    u.user_index = index;
    u.known = known;
    Rng rng(seed);
    for (int i = 0; i < n; ++i) u.train.push_back(rng.gaussian_vec(static_cast<size_t>(dim)));
    for (int i = 0; i < n; ++i) u.val.push_back(rng.gaussian_vec(static_cast<size_t>(dim)));
    for (int i = 0; i < n; ++i) u.test.push_back(rng.gaussian_vec(static_cast<size_t>(dim)));
    return u;
}

}  // namespace

TEST_CASE("feduv_score anchors and bounds") {
    auto spec = ecc::build_code(4, 5);
    auto v = ecc::encode(spec, {1, 0, 0, 1, 1}).bipolar;

    SUBCASE("projection equal to the secret scores 1") {
        auto params = constant_projection_model(v);
        CHECK(feduv_score(params, v, Vec{0.0}) == doctest::Approx(1.0));
    }
    SUBCASE("projection equal to minus the secret scores -1") {
        Vec neg = v;
        for (auto& x : neg) x = -x;
        auto params = constant_projection_model(neg);
        CHECK(feduv_score(params, v, Vec{0.0}) == doctest::Approx(-1.0));
    }
    SUBCASE("any input stays within [-1, 1]") {
        auto params = model::init_params({6, 10, 8}, spec.c, 3);
        Rng rng(7);
        std::map<int, Vec> secrets{{0, v}};
        auto scorer = UserScorer::for_feduv(secrets);
        for (int trial = 0; trial < 100; ++trial) {
            double s = scorer.score(params, 0, rng.gaussian_vec(6, 3.0));
            CHECK(s >= -1.0 - 1e-12);
            CHECK(s <= 1.0 + 1e-12);
        }
    }
    SUBCASE("degenerate projection scores 0 with the flag set") {
        auto params = constant_projection_model(Vec(15, 0.0));
        bool degenerate = false;
        CHECK(feduv_score(params, v, Vec{0.0}, &degenerate) == 0.0);
        CHECK(degenerate);
    }
}

TEST_CASE("warmup_threshold indexing") {
    SUBCASE("n=10, q=0.9 selects the smallest score") {
        std::vector<double> scores = {0.5, 0.2, 0.9, 0.4, 0.6, 0.3, 0.8, 0.1, 0.7, 0.55};
        auto th = warmup_threshold_from_scores(scores, 0.9);
        CHECK(th.tau == doctest::Approx(0.1));
        int at_least = 0;
        for (double s : scores) at_least += verify_accept(s, th.tau);
        CHECK(at_least == 10);  // all clear the smallest value
        int strictly = 0;
        for (double s : scores) strictly += (s > th.tau);
        CHECK(strictly == 9);
    }
    SUBCASE("n=4, q=1.0 clamps to accept-all") {
        auto th = warmup_threshold_from_scores({0.4, 0.1, 0.2, 0.3}, 1.0);
        CHECK(th.tau == -1.0);
        CHECK(verify_accept(-0.999, th.tau));
    }
    SUBCASE("uniform grid of 100 scores, q=0.9") {
        std::vector<double> scores;
        for (int i = 0; i < 100; ++i) scores.push_back(0.01 * i);
        auto th = warmup_threshold_from_scores(scores, 0.9);
        CHECK(th.tau == doctest::Approx(0.09));
        int accepted = 0;
        for (double s : scores) accepted += verify_accept(s, th.tau);
        CHECK(accepted == 91);
    }
    SUBCASE("empty set and bad q rejected") {
        CHECK_THROWS_AS(warmup_threshold_from_scores({}, 0.9), EmptyWarmupSet);
        CHECK_THROWS_AS(warmup_threshold_from_scores({0.1}, 0.0), EmptyWarmupSet);
        CHECK_THROWS_AS(warmup_threshold_from_scores({0.1}, 1.5), EmptyWarmupSet);
    }
}

TEST_CASE("warm-up guarantee: achieved TPR >= q for all n, q, including ties") {
    Rng rng(13);
    for (int n = 1; n <= 20; ++n) {
        for (double q : {0.5, 0.9, 1.0}) {
            for (int rep = 0; rep < 25; ++rep) {
                std::vector<double> scores(static_cast<size_t>(n));
                // coarse quantization forces ties
                for (auto& s : scores)
                    s = 0.25 * static_cast<double>(rng.bounded(9)) - 1.0;
                auto th = warmup_threshold_from_scores(scores, q);
                int accepted = 0;
                for (double s : scores) accepted += verify_accept(s, th.tau);
                CHECK(static_cast<double>(accepted) / n >= q - 1e-12);
            }
        }
    }
}

TEST_CASE("verify_accept conventions") {
    CHECK(verify_accept(0.3, 0.3));   // accept on equality
    CHECK(verify_accept(0.5, -1.0));  // tau = -1 accepts everything in range
    CHECK_FALSE(verify_accept(1.0, 1.0 + 1e-9));  // tau above ceiling rejects all
}

TEST_CASE("threshold independence: user A's threshold needs no other user state") {
    auto spec = ecc::build_code(4, 5);
    Rng rng(5);
    auto params = model::init_params({6, 10, 8}, spec.c, 11);
    auto va = ecc::encode(spec, {1, 0, 0, 1, 1}).bipolar;
    auto vb = ecc::encode(spec, {0, 1, 1, 0, 1}).bipolar;

    std::vector<Vec> warmup;
    for (int i = 0; i < 12; ++i) warmup.push_back(rng.gaussian_vec(6));

    auto solo = UserScorer::for_feduv({{0, va}});
    auto full = UserScorer::for_feduv({{0, va}, {1, vb}});
    auto th_solo = warmup_threshold(params, solo, 0, warmup, 0.9);
    auto th_full = warmup_threshold(params, full, 0, warmup, 0.9);
    CHECK(th_solo.tau == th_full.tau);
    CHECK(th_solo.n == 12);
}

TEST_CASE("roc curves: endpoints, monotonicity, separation") {
    SUBCASE("perfect separation gives AUC 1 and a square corner") {
        TrialSet trials;
        for (int i = 0; i < 50; ++i) trials.genuine.push_back(0.5 + 0.01 * (i % 10));
        for (int i = 0; i < 80; ++i) trials.impostor.push_back(-0.5 - 0.01 * (i % 10));
        CHECK(auc(trials) == doctest::Approx(1.0));
        CHECK(tpr_at_fpr(trials, 0.0) == doctest::Approx(1.0));

        auto curve = roc_from_trials(trials, Split::train, 101);
        CHECK(curve.points.front().threshold == doctest::Approx(-1.0));
        CHECK(curve.points.front().tpr == doctest::Approx(1.0));
        CHECK(curve.points.front().fpr == doctest::Approx(1.0));
        CHECK(curve.points.back().tpr == 0.0);
        CHECK(curve.points.back().fpr == 0.0);
        for (size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].tpr <= curve.points[i - 1].tpr + 1e-12);
            CHECK(curve.points[i].fpr <= curve.points[i - 1].fpr + 1e-12);
        }
    }
    SUBCASE("user-independent scores sit near the diagonal") {
        Rng rng(19);
        TrialSet trials;
        for (int i = 0; i < 4000; ++i) trials.genuine.push_back(rng.uniform01() * 2.0 - 1.0);
        for (int i = 0; i < 4000; ++i) trials.impostor.push_back(rng.uniform01() * 2.0 - 1.0);
        CHECK(auc(trials) == doctest::Approx(0.5).epsilon(0.05));
        auto curve = roc_from_trials(trials, Split::train, 21);
        for (const auto& p : curve.points)
            CHECK(std::fabs(p.tpr - p.fpr) < 0.06);
    }
    SUBCASE("ties contribute half to the AUC") {
        TrialSet trials;
        trials.genuine = {0.0, 0.0};
        trials.impostor = {0.0, 0.0};
        CHECK(auc(trials) == doctest::Approx(0.5));
    }
}

TEST_CASE("tpr_at_fpr picks the best admissible threshold") {
    TrialSet trials;
    trials.genuine = {0.9, 0.8, 0.7, 0.2};
    trials.impostor = {0.75, 0.6, 0.5, 0.1};
    // fpr <= 0.25 allows one impostor: threshold just above 0.6 accepts
    // genuine {0.9, 0.8, 0.7} -> tpr 0.75
    CHECK(tpr_at_fpr(trials, 0.25) == doctest::Approx(0.75));
    // fpr = 0 forces threshold above 0.75 -> tpr 0.5
    CHECK(tpr_at_fpr(trials, 0.0) == doctest::Approx(0.5));
    CHECK(tpr_at_fpr(trials, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("collect_trials counts per split semantics") {
    auto spec = ecc::build_code(4, 5);
    auto params = model::init_params({4, 6, 5}, spec.c, 3);

    std::vector<synth::UserDataset> known, unknown;
    std::map<int, Vec> secrets;
    ecc::Bits msg(5, 0);
    for (int u = 0; u < 3; ++u) {
        known.push_back(tiny_user(u, true, 4, 4, 100 + u));
        msg[0] = static_cast<uint8_t>(u & 1);
        msg[1] = static_cast<uint8_t>((u >> 1) & 1);
        secrets[u] = ecc::encode(spec, msg).bipolar;
    }
    for (int u = 3; u < 5; ++u) unknown.push_back(tiny_user(u, false, 4, 4, 100 + u));
    auto scorer = UserScorer::for_feduv(secrets);

    auto train = collect_trials(params, scorer, known, unknown, Split::train);
    CHECK(train.genuine.size() == 3 * 4);
    CHECK(train.impostor.size() == 3 * 2 * 4);

    auto tk = collect_trials(params, scorer, known, unknown, Split::test_known);
    CHECK(tk.genuine.size() == 3 * 4);
    CHECK(tk.impostor.size() == 3 * 2 * 4);

    auto tu = collect_trials(params, scorer, known, unknown, Split::test_unknown);
    CHECK(tu.genuine.size() == 3 * 4);       // genuine trials reuse test_known
    CHECK(tu.impostor.size() == 3 * 2 * 4);  // unknown users' test examples vs each verifier

    SUBCASE("impostor subsampling caps the pool per verifier") {
        RocOptions opt;
        opt.max_impostors_per_verifier = 3;
        auto sub = collect_trials(params, scorer, known, unknown, Split::train, opt);
        CHECK(sub.impostor.size() == 3 * 3);
        auto sub2 = collect_trials(params, scorer, known, unknown, Split::train, opt);
        CHECK(sub.impostor == sub2.impostor);  // deterministic
    }
    SUBCASE("empty unknown pool rejected for the unknown split") {
        CHECK_THROWS_AS(collect_trials(params, scorer, known, {}, Split::test_unknown),
                        EmptySplit);
    }
    SUBCASE("roc_evaluate emits the three labelled curves") {
        auto curves = roc_evaluate(params, scorer, known, unknown);
        REQUIRE(curves.size() == 3);
        CHECK(curves[0].split == Split::train);
        CHECK(curves[1].split == Split::test_known);
        CHECK(curves[2].split == Split::test_unknown);
        CHECK(split_name(curves[2].split) == "test_unknown");
    }
}

TEST_CASE("operating_point applies per-user thresholds") {
    auto spec = ecc::build_code(4, 5);
    auto v = ecc::encode(spec, {1, 1, 0, 0, 1}).bipolar;
    auto params = constant_projection_model(v);  // every input scores 1 for user 0

    std::vector<synth::UserDataset> known{tiny_user(0, true, 3, 1, 5),
                                          tiny_user(1, true, 3, 1, 6)};
    std::vector<synth::UserDataset> unknown{tiny_user(2, false, 3, 1, 7)};
    Vec neg = v;
    for (auto& x : neg) x = -x;
    auto scorer = UserScorer::for_feduv({{0, v}, {1, neg}});

    // user 0 accepts everything (tau -1), user 1 rejects everything (tau 2)
    std::map<int, double> taus{{0, -1.0}, {1, 2.0}};
    auto op = operating_point(params, scorer, known, unknown, Split::test_known, taus);
    CHECK(op.tpr == doctest::Approx(0.5));  // user 0's genuine accepted, user 1's rejected
    // impostors: user 0's verifier accepts user 1's examples; user 1 rejects user 0's
    CHECK(op.fpr == doctest::Approx(0.5));
}
