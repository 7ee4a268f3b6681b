#pragma once

#include <stdexcept>
#include <vector>

#include "feduv/linalg.hpp"

namespace feduv::losses {

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyOtherSet : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IndexOutOfRange : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct TooFewUsers : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Scalar loss plus its gradient with respect to the vector it was evaluated
// at (scaled output z, logits, or flattened embedding table).
struct LossValue {
    double value = 0.0;
    Vec grad;
};

// max(0, 1 - v.z / c); subgradient 0 at the hinge kink.
LossValue pos_loss(const Vec& z, const Vec& v);

// max over others of v.z / c; gradient flows through the first argmax.
LossValue neg_loss(const Vec& z, const std::vector<Vec>& others);

// pos + lambda * neg. lambda = 0 is the deployed configuration, where the
// other users' codewords are unknown and `others` may be empty.
LossValue feduv_loss(const Vec& z, const Vec& v, const std::vector<Vec>& others, double lambda);

// -log softmax(logits)[y], numerically stable.
LossValue softmax_ce(const Vec& logits, int y);

// Spreadout regularizer over a K x n_d embedding table: hinge on pairwise
// Euclidean distances below the margin nu, summed over ordered pairs.
// Gradient is returned in table layout.
struct SpreadoutValue {
    double value = 0.0;
    Mat grad;
};

SpreadoutValue spreadout_reg(const Mat& embeddings, double nu);

}  // namespace feduv::losses
