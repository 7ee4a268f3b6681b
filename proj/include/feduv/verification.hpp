#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "feduv/federation.hpp"
#include "feduv/model.hpp"
#include "feduv/synth_data.hpp"

namespace feduv::verify {

struct EmptyWarmupSet : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptySplit : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class Split { train, test_known, test_unknown };
std::string split_name(Split s);

// Correlation score of one example against one enrolled secret,
// (1/c) v^T sigma(W g(x)), in [-1, 1]. A degenerate zero projection scores 0
// and sets the flag.
double feduv_score(const model::ModelParams& params, const Vec& bipolar_secret, const Vec& x,
                   bool* degenerate = nullptr);

// Per-method verification scorer. All methods emit scores in [-1, 1]:
// feduv uses the codeword correlation, softmax the class probability,
// fedaws the cosine similarity with the user's embedding row. Scoring user u
// reads only user u's enrolled state.
class UserScorer {
public:
    static UserScorer for_feduv(std::map<int, Vec> bipolar_secrets);
    static UserScorer for_softmax();
    static UserScorer for_fedaws();
    static UserScorer for_method(fed::Method method, std::map<int, Vec> bipolar_secrets);

    double score(const model::ModelParams& params, int user, const Vec& x,
                 bool* degenerate = nullptr) const;
    fed::Method method() const { return method_; }

private:
    fed::Method method_ = fed::Method::feduv;
    std::map<int, Vec> secrets_;
};

// Per-user accept threshold calibrated to hit a target TPR q on the warm-up
// inputs: tau is the i-th smallest score with i = floor(n (1 - q)), clamped
// to -1 (the score-range floor, accept-all) when i = 0.
struct Threshold {
    double tau = -1.0;
    double q = 1.0;
    int n = 0;
};

Threshold warmup_threshold_from_scores(std::vector<double> scores, double q);
Threshold warmup_threshold(const model::ModelParams& params, const UserScorer& scorer, int user,
                           const std::vector<Vec>& warmup_inputs, double q);

// Accept on score >= tau.
inline bool verify_accept(double score, double tau) { return score >= tau; }

// Genuine and impostor scores for one evaluation split.
//   train:        known users' train examples; impostors are the same
//                 examples against every other known verifier
//   test_known:   as above on the test split
//   test_unknown: genuine trials as in test_known; impostors are unknown
//                 users' test examples against every known verifier
struct TrialSet {
    std::vector<double> genuine;
    std::vector<double> impostor;
};

struct RocOptions {
    int grid_points = 401;
    // cap on impostor examples per verifier (0 = full cross product)
    int max_impostors_per_verifier = 0;
    uint64_t subsample_seed = 0;
};

TrialSet collect_trials(const model::ModelParams& params, const UserScorer& scorer,
                        const std::vector<synth::UserDataset>& known,
                        const std::vector<synth::UserDataset>& unknown, Split split,
                        const RocOptions& options = {});

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

struct RocCurve {
    Split split = Split::train;
    std::vector<RocPoint> points;
};

// Threshold sweep over [-1, 1] plus one point past the score ceiling, so the
// curve spans (1,1) down to (0,0).
RocCurve roc_from_trials(const TrialSet& trials, Split split, int grid_points);

std::vector<RocCurve> roc_evaluate(const model::ModelParams& params, const UserScorer& scorer,
                                   const std::vector<synth::UserDataset>& known,
                                   const std::vector<synth::UserDataset>& unknown,
                                   const RocOptions& options = {});

// Exact rank-based AUC (ties counted half).
double auc(const TrialSet& trials);

// Largest TPR achievable with FPR <= fpr_cap, computed from the empirical
// scores rather than the threshold grid.
double tpr_at_fpr(const TrialSet& trials, double fpr_cap);

// Aggregate accept rates at per-user calibrated thresholds.
struct OperatingPoint {
    double tpr = 0.0;
    double fpr = 0.0;
};

OperatingPoint operating_point(const model::ModelParams& params, const UserScorer& scorer,
                               const std::vector<synth::UserDataset>& known,
                               const std::vector<synth::UserDataset>& unknown, Split split,
                               const std::map<int, double>& taus);

}  // namespace feduv::verify
