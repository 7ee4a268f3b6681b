#include "feduv/verification.hpp"

#include <algorithm>
#include <cmath>

#include "feduv/losses.hpp"
#include "feduv/parallel.hpp"
#include "feduv/rng.hpp"

namespace feduv::verify {

std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::test_known: return "test_known";
        case Split::test_unknown: return "test_unknown";
    }
    return "?";
}

double feduv_score(const model::ModelParams& params, const Vec& bipolar_secret, const Vec& x,
                   bool* degenerate) {
    auto trace = model::forward(params, x);
    if (degenerate) *degenerate = trace.zero_projection;
    if (trace.zero_projection) return 0.0;
    return dot(bipolar_secret, trace.scaled) / static_cast<double>(bipolar_secret.size());
}

UserScorer UserScorer::for_feduv(std::map<int, Vec> bipolar_secrets) {
    UserScorer s;
    s.method_ = fed::Method::feduv;
    s.secrets_ = std::move(bipolar_secrets);
    return s;
}

UserScorer UserScorer::for_softmax() {
    UserScorer s;
    s.method_ = fed::Method::softmax;
    return s;
}

UserScorer UserScorer::for_fedaws() {
    UserScorer s;
    s.method_ = fed::Method::fedaws;
    return s;
}

UserScorer UserScorer::for_method(fed::Method method, std::map<int, Vec> bipolar_secrets) {
    switch (method) {
        case fed::Method::feduv:
        case fed::Method::feduv_with_neg:
            return for_feduv(std::move(bipolar_secrets));
        case fed::Method::softmax:
            return for_softmax();
        case fed::Method::fedaws:
            return for_fedaws();
    }
    throw std::logic_error("unreachable");
}

double UserScorer::score(const model::ModelParams& params, int user, const Vec& x,
                         bool* degenerate) const {
    if (degenerate) *degenerate = false;
    switch (method_) {
        case fed::Method::feduv:
        case fed::Method::feduv_with_neg: {
            auto it = secrets_.find(user);
            if (it == secrets_.end())
                throw EmptySplit("UserScorer: no secret enrolled for user " +
                                 std::to_string(user));
            return feduv_score(params, it->second, x, degenerate);
        }
        case fed::Method::softmax: {
            auto trace = model::forward(params, x);
            // probability of class u; in (0, 1) subset of the score range
            auto lv = losses::softmax_ce(trace.projected, user);
            return std::exp(-lv.value);
        }
        case fed::Method::fedaws: {
            auto trace = model::forward(params, x);
            Vec row = params.W.row(static_cast<size_t>(user));
            double denom = norm(row) * norm(trace.embedding);
            if (denom == 0.0) {
                if (degenerate) *degenerate = true;
                return 0.0;
            }
            return dot(row, trace.embedding) / denom;
        }
    }
    throw std::logic_error("unreachable");
}

Threshold warmup_threshold_from_scores(std::vector<double> scores, double q) {
    if (scores.empty()) throw EmptyWarmupSet("warmup_threshold: no warm-up scores");
    if (!(q > 0.0) || q > 1.0) throw EmptyWarmupSet("warmup_threshold: q must be in (0, 1]");
    const int n = static_cast<int>(scores.size());

    // i = floor(n (1 - q)); the epsilon snap keeps e.g. 10 * (1 - 0.9)
    // from rounding below the exact integer 1
    int i = static_cast<int>(std::floor(static_cast<double>(n) * (1.0 - q) + 1e-9));

    Threshold th;
    th.q = q;
    th.n = n;
    if (i <= 0) {
        th.tau = -1.0;  // accept-all floor of the score range
        return th;
    }
    std::sort(scores.begin(), scores.end());
    th.tau = scores[static_cast<size_t>(i - 1)];  // i-th smallest, 1-indexed
    return th;
}

Threshold warmup_threshold(const model::ModelParams& params, const UserScorer& scorer, int user,
                           const std::vector<Vec>& warmup_inputs, double q) {
    if (warmup_inputs.empty()) throw EmptyWarmupSet("warmup_threshold: empty warm-up set");
    std::vector<double> scores;
    scores.reserve(warmup_inputs.size());
    for (const auto& x : warmup_inputs) scores.push_back(scorer.score(params, user, x));
    return warmup_threshold_from_scores(std::move(scores), q);
}

namespace {

const std::vector<Vec>& split_of(const synth::UserDataset& user, Split split) {
    return split == Split::train ? user.train : user.test;
}

}  // namespace

TrialSet collect_trials(const model::ModelParams& params, const UserScorer& scorer,
                        const std::vector<synth::UserDataset>& known,
                        const std::vector<synth::UserDataset>& unknown, Split split,
                        const RocOptions& options) {
    if (known.empty()) throw EmptySplit("collect_trials: no known users");
    for (const auto& u : known)
        if (split_of(u, split).empty())
            throw EmptySplit("collect_trials: empty " + split_name(split) + " split");
    if (split == Split::test_unknown && unknown.empty())
        throw EmptySplit("collect_trials: no unknown users for the test_unknown split");

    // impostor pool per verifier: other known users' examples, or unknown
    // users' test examples for the unknown-user split
    struct PerVerifier {
        std::vector<double> genuine;
        std::vector<double> impostor;
    };
    std::vector<PerVerifier> slots(known.size());

    parallel_for(known.size(), [&](size_t ui) {
        const auto& user = known[ui];
        auto& slot = slots[ui];
        for (const auto& x : split_of(user, split))
            slot.genuine.push_back(scorer.score(params, user.user_index, x));

        std::vector<const Vec*> impostor_examples;
        if (split == Split::test_unknown) {
            for (const auto& other : unknown)
                for (const auto& x : other.test) impostor_examples.push_back(&x);
        } else {
            for (const auto& other : known) {
                if (other.user_index == user.user_index) continue;
                for (const auto& x : split_of(other, split)) impostor_examples.push_back(&x);
            }
        }
        if (options.max_impostors_per_verifier > 0 &&
            static_cast<int>(impostor_examples.size()) > options.max_impostors_per_verifier) {
            Rng rng(derive_seed(options.subsample_seed, 0x696d70u /* "imp" */,
                                static_cast<uint64_t>(user.user_index),
                                static_cast<uint64_t>(split)));
            rng.shuffle(impostor_examples);
            impostor_examples.resize(static_cast<size_t>(options.max_impostors_per_verifier));
        }
        for (const Vec* x : impostor_examples)
            slot.impostor.push_back(scorer.score(params, user.user_index, *x));
    });

    TrialSet trials;
    for (const auto& slot : slots) {
        trials.genuine.insert(trials.genuine.end(), slot.genuine.begin(), slot.genuine.end());
        trials.impostor.insert(trials.impostor.end(), slot.impostor.begin(),
                               slot.impostor.end());
    }
    return trials;
}

RocCurve roc_from_trials(const TrialSet& trials, Split split, int grid_points) {
    if (trials.genuine.empty() || trials.impostor.empty())
        throw EmptySplit("roc_from_trials: need both genuine and impostor trials");
    if (grid_points < 2) throw EmptySplit("roc_from_trials: grid too small");

    auto rate_at = [](const std::vector<double>& scores, double tau) {
        size_t accepted = 0;
        for (double s : scores) accepted += (s >= tau);
        return static_cast<double>(accepted) / static_cast<double>(scores.size());
    };

    RocCurve curve;
    curve.split = split;
    const double step = 2.0 / static_cast<double>(grid_points - 1);
    for (int i = 0; i < grid_points; ++i) {
        double tau = -1.0 + step * i;
        curve.points.push_back({tau, rate_at(trials.genuine, tau), rate_at(trials.impostor, tau)});
    }
    // one threshold above the score ceiling pins the (0, 0) endpoint
    curve.points.push_back({1.0 + step, 0.0, 0.0});
    return curve;
}

std::vector<RocCurve> roc_evaluate(const model::ModelParams& params, const UserScorer& scorer,
                                   const std::vector<synth::UserDataset>& known,
                                   const std::vector<synth::UserDataset>& unknown,
                                   const RocOptions& options) {
    std::vector<RocCurve> curves;
    for (Split split : {Split::train, Split::test_known, Split::test_unknown}) {
        auto trials = collect_trials(params, scorer, known, unknown, split, options);
        curves.push_back(roc_from_trials(trials, split, options.grid_points));
    }
    return curves;
}

double auc(const TrialSet& trials) {
    if (trials.genuine.empty() || trials.impostor.empty())
        throw EmptySplit("auc: need both genuine and impostor trials");
    // Mann-Whitney with average ranks for ties
    struct Tagged {
        double score;
        bool genuine;
    };
    std::vector<Tagged> all;
    all.reserve(trials.genuine.size() + trials.impostor.size());
    for (double s : trials.genuine) all.push_back({s, true});
    for (double s : trials.impostor) all.push_back({s, false});
    std::sort(all.begin(), all.end(),
              [](const Tagged& a, const Tagged& b) { return a.score < b.score; });

    double genuine_rank_sum = 0.0;
    size_t i = 0;
    while (i < all.size()) {
        size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (size_t k = i; k < j; ++k)
            if (all[k].genuine) genuine_rank_sum += avg_rank;
        i = j;
    }
    const double G = static_cast<double>(trials.genuine.size());
    const double I = static_cast<double>(trials.impostor.size());
    return (genuine_rank_sum - G * (G + 1.0) / 2.0) / (G * I);
}

double tpr_at_fpr(const TrialSet& trials, double fpr_cap) {
    if (trials.genuine.empty() || trials.impostor.empty())
        throw EmptySplit("tpr_at_fpr: need both genuine and impostor trials");
    const size_t I = trials.impostor.size();
    const size_t allowed = static_cast<size_t>(std::floor(fpr_cap * static_cast<double>(I)));
    if (allowed >= I) return 1.0;

    // the tightest admissible threshold sits just above the (allowed+1)-th
    // largest impostor score; count genuine scores strictly above it
    std::vector<double> imp = trials.impostor;
    std::nth_element(imp.begin(), imp.begin() + static_cast<long>(allowed), imp.end(),
                     std::greater<double>());
    double pivot = imp[allowed];
    size_t accepted = 0;
    for (double s : trials.genuine) accepted += (s > pivot);
    return static_cast<double>(accepted) / static_cast<double>(trials.genuine.size());
}

OperatingPoint operating_point(const model::ModelParams& params, const UserScorer& scorer,
                               const std::vector<synth::UserDataset>& known,
                               const std::vector<synth::UserDataset>& unknown, Split split,
                               const std::map<int, double>& taus) {
    size_t genuine_total = 0, genuine_accepted = 0;
    size_t impostor_total = 0, impostor_accepted = 0;

    for (const auto& user : known) {
        double tau = taus.at(user.user_index);
        for (const auto& x : split_of(user, split)) {
            ++genuine_total;
            genuine_accepted += verify_accept(scorer.score(params, user.user_index, x), tau);
        }
        if (split == Split::test_unknown) {
            for (const auto& other : unknown)
                for (const auto& x : other.test) {
                    ++impostor_total;
                    impostor_accepted +=
                        verify_accept(scorer.score(params, user.user_index, x), tau);
                }
        } else {
            for (const auto& other : known) {
                if (other.user_index == user.user_index) continue;
                for (const auto& x : split_of(other, split)) {
                    ++impostor_total;
                    impostor_accepted +=
                        verify_accept(scorer.score(params, user.user_index, x), tau);
                }
            }
        }
    }
    OperatingPoint op;
    op.tpr = genuine_total ? static_cast<double>(genuine_accepted) /
                                 static_cast<double>(genuine_total)
                           : 0.0;
    op.fpr = impostor_total ? static_cast<double>(impostor_accepted) /
                                  static_cast<double>(impostor_total)
                            : 0.0;
    return op;
}

}  // namespace feduv::verify
