#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "feduv/linalg.hpp"

namespace feduv::model {

struct BadArchitecture : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct StaleTrace : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Feature network g_theta (dense layers, ReLU between them, linear output)
// followed by the projection matrix W. W has c rows when the output feeds
// the scaling layer, or K rows when it acts as a logits / embedding table.
struct ModelParams {
    std::vector<Mat> weights;  // layer l maps arch[l] -> arch[l+1]
    std::vector<Vec> biases;
    Mat W;

    int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols); }
    int n_d() const { return weights.empty() ? 0 : static_cast<int>(weights.back().rows); }
    int out_rows() const { return static_cast<int>(W.rows); }
    std::vector<int> arch() const;
};

// Everything forward() computed, kept for the backward pass.
struct ForwardTrace {
    Vec input;
    std::vector<Vec> pre;   // pre-activation per layer
    std::vector<Vec> act;   // post-activation per layer; act.back() == embedding
    Vec embedding;          // g_theta(x)
    Vec projected;          // W g_theta(x)
    double projected_norm = 0.0;
    Vec scaled;             // sqrt(c) * projected / |projected|, zero vector when degenerate
    bool zero_projection = false;
};

struct ParamGradients {
    std::vector<Mat> weights;
    std::vector<Vec> biases;
    Mat W;

    void accumulate(const ParamGradients& other);
    void scale(double a);
};

ParamGradients zeros_like(const ModelParams& params);

// arch = {input, hidden..., n_d}; at least two entries, all positive.
// Weights ~ N(0, 1/fan_in), biases zero, W rows x n_d with the same scheme.
ModelParams init_params(const std::vector<int>& arch, int out_rows, uint64_t seed);

ForwardTrace forward(const ModelParams& params, const Vec& x);

// Gradient at the scaled output z (through the sphere-scaling layer).
ParamGradients backward(const ModelParams& params, const ForwardTrace& trace, const Vec& dL_dz);
// Gradient at the projection W g (logits path, no scaling layer).
ParamGradients backward_from_projection(const ModelParams& params, const ForwardTrace& trace,
                                        const Vec& dL_dproj);
// Gradient at the embedding g only; grads.W stays zero.
ParamGradients backward_from_embedding(const ModelParams& params, const ForwardTrace& trace,
                                       const Vec& dL_demb);

ModelParams sgd_step(const ModelParams& params, const ParamGradients& grads, double lr);

// FNV-1a over all tensors in declaration order.
uint64_t param_checksum(const ModelParams& params);

// Versioned binary checkpoint; round-trips bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace feduv::model
