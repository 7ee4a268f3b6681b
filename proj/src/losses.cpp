#include "feduv/losses.hpp"

#include <cmath>
#include <string>

namespace feduv::losses {

LossValue pos_loss(const Vec& z, const Vec& v) {
    if (z.size() != v.size() || z.empty())
        throw DimensionMismatch("pos_loss: z and v dimensions differ");
    const double c = static_cast<double>(z.size());
    double corr = dot(v, z) / c;
    LossValue out;
    out.value = corr < 1.0 ? 1.0 - corr : 0.0;
    out.grad.assign(z.size(), 0.0);
    if (out.value > 0.0)
        for (size_t i = 0; i < z.size(); ++i) out.grad[i] = -v[i] / c;
    return out;
}

LossValue neg_loss(const Vec& z, const std::vector<Vec>& others) {
    if (others.empty()) throw EmptyOtherSet("neg_loss: no other codewords");
    const double c = static_cast<double>(z.size());
    size_t best = 0;
    double best_corr = 0.0;
    for (size_t u = 0; u < others.size(); ++u) {
        if (others[u].size() != z.size())
            throw DimensionMismatch("neg_loss: codeword dimension differs from z");
        double corr = dot(others[u], z) / c;
        if (u == 0 || corr > best_corr) {  // ties keep the first index
            best = u;
            best_corr = corr;
        }
    }
    LossValue out;
    out.value = best_corr;
    out.grad.resize(z.size());
    for (size_t i = 0; i < z.size(); ++i) out.grad[i] = others[best][i] / c;
    return out;
}

LossValue feduv_loss(const Vec& z, const Vec& v, const std::vector<Vec>& others, double lambda) {
    LossValue out = pos_loss(z, v);
    if (lambda == 0.0) return out;
    if (others.empty()) throw EmptyOtherSet("feduv_loss: lambda > 0 needs other codewords");
    LossValue neg = neg_loss(z, others);
    out.value += lambda * neg.value;
    axpy(out.grad, lambda, neg.grad);
    return out;
}

LossValue softmax_ce(const Vec& logits, int y) {
    if (y < 0 || static_cast<size_t>(y) >= logits.size())
        throw IndexOutOfRange("softmax_ce: label " + std::to_string(y) + " out of range");
    double max_logit = logits[0];
    for (double l : logits) max_logit = std::max(max_logit, l);
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - max_logit);
    double logsumexp = max_logit + std::log(sum);

    LossValue out;
    out.value = logsumexp - logits[static_cast<size_t>(y)];
    out.grad.resize(logits.size());
    for (size_t j = 0; j < logits.size(); ++j)
        out.grad[j] = std::exp(logits[j] - logsumexp);
    out.grad[static_cast<size_t>(y)] -= 1.0;
    return out;
}

SpreadoutValue spreadout_reg(const Mat& embeddings, double nu) {
    const size_t K = embeddings.rows;
    if (K < 2) throw TooFewUsers("spreadout_reg: need at least two embeddings");
    if (nu <= 0.0) throw TooFewUsers("spreadout_reg: margin must be positive");

    SpreadoutValue out;
    out.grad = Mat(K, embeddings.cols);
    for (size_t u = 0; u < K; ++u) {
        for (size_t w = u + 1; w < K; ++w) {
            double d2 = 0.0;
            for (size_t j = 0; j < embeddings.cols; ++j) {
                double diff = embeddings(u, j) - embeddings(w, j);
                d2 += diff * diff;
            }
            double d = std::sqrt(d2);
            if (d >= nu) continue;
            double hinge = nu - d;
            out.value += 2.0 * hinge * hinge;  // both ordered pairs
            if (d > 0.0) {
                // d/dw_u (nu - d)^2 = -2 (nu - d) (w_u - w_w) / d, doubled for
                // the ordered-pair sum; at d = 0 the subgradient 0 is used
                double coef = -4.0 * hinge / d;
                for (size_t j = 0; j < embeddings.cols; ++j) {
                    double diff = embeddings(u, j) - embeddings(w, j);
                    out.grad(u, j) += coef * diff;
                    out.grad(w, j) -= coef * diff;
                }
            }
        }
    }
    return out;
}

}  // namespace feduv::losses
