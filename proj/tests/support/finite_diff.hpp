#pragma once

// Central finite-difference oracle for gradient checks. Kept independent of
// the analytic backward paths: it only re-evaluates scalar loss functions.

#include <cmath>
#include <functional>
#include <vector>

#include "feduv/model.hpp"

namespace feduv::testsupport {

struct GradCheckResult {
    double max_rel_err = 0.0;
    size_t checked = 0;
};

// rel err with a small floor so near-zero entries are compared absolutely
inline double rel_err(double analytic, double numeric) {
    double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
    return std::fabs(analytic - numeric) / denom;
}

// Gradient of f with respect to a flat vector, checked against `analytic`.
inline GradCheckResult check_gradient_vec(std::vector<double>& x,
                                          const std::function<double()>& f,
                                          const std::vector<double>& analytic,
                                          double h = 1e-5) {
    GradCheckResult r;
    for (size_t i = 0; i < x.size(); ++i) {
        double keep = x[i];
        x[i] = keep + h;
        double fp = f();
        x[i] = keep - h;
        double fm = f();
        x[i] = keep;
        double numeric = (fp - fm) / (2.0 * h);
        r.max_rel_err = std::max(r.max_rel_err, rel_err(analytic[i], numeric));
        ++r.checked;
    }
    return r;
}

// Same check over every tensor of a model.
inline GradCheckResult check_gradient_params(model::ModelParams& params,
                                             const std::function<double()>& f,
                                             const model::ParamGradients& analytic,
                                             double h = 1e-5) {
    GradCheckResult total;
    auto merge = [&total](const GradCheckResult& r) {
        total.max_rel_err = std::max(total.max_rel_err, r.max_rel_err);
        total.checked += r.checked;
    };
    for (size_t l = 0; l < params.weights.size(); ++l) {
        merge(check_gradient_vec(params.weights[l].data, f, analytic.weights[l].data, h));
        merge(check_gradient_vec(params.biases[l], f, analytic.biases[l], h));
    }
    merge(check_gradient_vec(params.W.data, f, analytic.W.data, h));
    return total;
}

}  // namespace feduv::testsupport
