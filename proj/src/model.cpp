#include "feduv/model.hpp"

#include <cmath>
#include <fstream>

#include "feduv/binio.hpp"
#include "feduv/rng.hpp"

namespace feduv::model {

namespace {

constexpr uint32_t kCheckpointMagic = 0x4d565546;  // "FUVM" little-endian
constexpr uint32_t kCheckpointVersion = 1;

void check_trace_shapes(const ModelParams& params, const ForwardTrace& trace) {
    bool ok = trace.act.size() == params.weights.size() &&
              trace.embedding.size() == static_cast<size_t>(params.n_d()) &&
              trace.projected.size() == params.W.rows &&
              trace.input.size() == static_cast<size_t>(params.input_dim());
    for (size_t l = 0; ok && l < params.weights.size(); ++l)
        ok = trace.act[l].size() == params.weights[l].rows &&
             trace.pre[l].size() == params.weights[l].rows;
    if (!ok) throw StaleTrace("backward: trace does not match model shapes");
}

}  // namespace

std::vector<int> ModelParams::arch() const {
    std::vector<int> a;
    if (weights.empty()) return a;
    a.push_back(static_cast<int>(weights.front().cols));
    for (const auto& w : weights) a.push_back(static_cast<int>(w.rows));
    return a;
}

void ParamGradients::accumulate(const ParamGradients& other) {
    for (size_t l = 0; l < weights.size(); ++l) {
        for (size_t i = 0; i < weights[l].data.size(); ++i)
            weights[l].data[i] += other.weights[l].data[i];
        for (size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
    }
    for (size_t i = 0; i < W.data.size(); ++i) W.data[i] += other.W.data[i];
}

void ParamGradients::scale(double a) {
    for (auto& w : weights) scale_inplace(w, a);
    for (auto& b : biases) scale_inplace(b, a);
    scale_inplace(W, a);
}

ParamGradients zeros_like(const ModelParams& params) {
    ParamGradients g;
    for (const auto& w : params.weights) g.weights.emplace_back(w.rows, w.cols);
    for (const auto& b : params.biases) g.biases.emplace_back(b.size(), 0.0);
    g.W = Mat(params.W.rows, params.W.cols);
    return g;
}

ModelParams init_params(const std::vector<int>& arch, int out_rows, uint64_t seed) {
    if (arch.size() < 2) throw BadArchitecture("init_params: need at least input and one layer");
    for (int width : arch)
        if (width < 1) throw BadArchitecture("init_params: zero-width layer");
    if (out_rows < 1) throw BadArchitecture("init_params: output rows must be >= 1");

    Rng rng(derive_seed(seed, 0x696e6974u /* "init" */));
    ModelParams p;
    for (size_t l = 0; l + 1 < arch.size(); ++l) {
        size_t fan_in = static_cast<size_t>(arch[l]);
        size_t fan_out = static_cast<size_t>(arch[l + 1]);
        Mat w(fan_out, fan_in);
        double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& x : w.data) x = rng.gaussian() * stddev;
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(fan_out, 0.0);
    }
    size_t n_d = static_cast<size_t>(arch.back());
    p.W = Mat(static_cast<size_t>(out_rows), n_d);
    double stddev = 1.0 / std::sqrt(static_cast<double>(n_d));
    for (auto& x : p.W.data) x = rng.gaussian() * stddev;
    return p;
}

ForwardTrace forward(const ModelParams& params, const Vec& x) {
    if (x.size() != static_cast<size_t>(params.input_dim()))
        throw DimensionMismatch("forward: input width mismatch");

    ForwardTrace t;
    t.input = x;
    const size_t L = params.weights.size();
    t.pre.resize(L);
    t.act.resize(L);
    const Vec* cur = &x;
    for (size_t l = 0; l < L; ++l) {
        Vec z = matvec(params.weights[l], *cur);
        for (size_t i = 0; i < z.size(); ++i) z[i] += params.biases[l][i];
        t.pre[l] = z;
        if (l + 1 < L) {
            for (auto& v : z)
                if (v < 0.0) v = 0.0;  // ReLU between layers, linear output
        }
        t.act[l] = std::move(z);
        cur = &t.act[l];
    }
    t.embedding = t.act.back();
    t.projected = matvec(params.W, t.embedding);
    t.projected_norm = norm(t.projected);

    const double target = std::sqrt(static_cast<double>(params.W.rows));
    t.scaled.assign(params.W.rows, 0.0);
    if (t.projected_norm > 0.0) {
        double s = target / t.projected_norm;
        for (size_t i = 0; i < t.projected.size(); ++i) t.scaled[i] = s * t.projected[i];
    } else {
        t.zero_projection = true;  // z stays 0; gradient treated as zero here
    }
    return t;
}

namespace {

// Shared tail of the backward pass: given dL/d(embedding), push through the
// dense stack. grads.W must already be filled by the caller.
void backprop_feature_net(const ModelParams& params, const ForwardTrace& trace, Vec delta,
                          ParamGradients& grads) {
    const size_t L = params.weights.size();
    for (size_t l = L; l-- > 0;) {
        if (l + 1 < L) {
            // ReLU mask; at the kink the subgradient 0 is used
            for (size_t i = 0; i < delta.size(); ++i)
                if (trace.pre[l][i] <= 0.0) delta[i] = 0.0;
        }
        const Vec& below = (l == 0) ? trace.input : trace.act[l - 1];
        add_outer(grads.weights[l], delta, below);
        for (size_t i = 0; i < delta.size(); ++i) grads.biases[l][i] += delta[i];
        if (l > 0) delta = matvec_t(params.weights[l], delta);
    }
}

}  // namespace

ParamGradients backward(const ModelParams& params, const ForwardTrace& trace, const Vec& dL_dz) {
    check_trace_shapes(params, trace);
    if (dL_dz.size() != params.W.rows) throw StaleTrace("backward: gradient width mismatch");

    ParamGradients grads = zeros_like(params);
    if (trace.zero_projection) return grads;  // sigma gradient defined as zero at the origin

    // d sigma / d ztilde = sqrt(c)/r (I - zhat zhat^T), zhat = ztilde / r
    const double r = trace.projected_norm;
    const double target = std::sqrt(static_cast<double>(params.W.rows));
    Vec zhat(trace.projected.size());
    for (size_t i = 0; i < zhat.size(); ++i) zhat[i] = trace.projected[i] / r;
    double radial = dot(zhat, dL_dz);
    Vec dproj(zhat.size());
    for (size_t i = 0; i < zhat.size(); ++i)
        dproj[i] = (target / r) * (dL_dz[i] - radial * zhat[i]);

    add_outer(grads.W, dproj, trace.embedding);
    Vec demb = matvec_t(params.W, dproj);
    backprop_feature_net(params, trace, std::move(demb), grads);
    return grads;
}

ParamGradients backward_from_projection(const ModelParams& params, const ForwardTrace& trace,
                                        const Vec& dL_dproj) {
    check_trace_shapes(params, trace);
    if (dL_dproj.size() != params.W.rows)
        throw StaleTrace("backward_from_projection: gradient width mismatch");
    ParamGradients grads = zeros_like(params);
    add_outer(grads.W, dL_dproj, trace.embedding);
    Vec demb = matvec_t(params.W, dL_dproj);
    backprop_feature_net(params, trace, std::move(demb), grads);
    return grads;
}

ParamGradients backward_from_embedding(const ModelParams& params, const ForwardTrace& trace,
                                       const Vec& dL_demb) {
    check_trace_shapes(params, trace);
    if (dL_demb.size() != static_cast<size_t>(params.n_d()))
        throw StaleTrace("backward_from_embedding: gradient width mismatch");
    ParamGradients grads = zeros_like(params);
    backprop_feature_net(params, trace, dL_demb, grads);
    return grads;
}

ModelParams sgd_step(const ModelParams& params, const ParamGradients& grads, double lr) {
    ModelParams out = params;
    for (size_t l = 0; l < out.weights.size(); ++l) {
        for (size_t i = 0; i < out.weights[l].data.size(); ++i)
            out.weights[l].data[i] -= lr * grads.weights[l].data[i];
        for (size_t i = 0; i < out.biases[l].size(); ++i)
            out.biases[l][i] -= lr * grads.biases[l][i];
    }
    for (size_t i = 0; i < out.W.data.size(); ++i) out.W.data[i] -= lr * grads.W.data[i];
    return out;
}

uint64_t param_checksum(const ModelParams& params) {
    uint64_t h = kFnvOffsetBasis;
    for (size_t l = 0; l < params.weights.size(); ++l) {
        for (double d : params.weights[l].data) h = fnv1a_f64(h, d);
        for (double d : params.biases[l]) h = fnv1a_f64(h, d);
    }
    for (double d : params.W.data) h = fnv1a_f64(h, d);
    return h;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("save_checkpoint: cannot open " + path);
    write_u32(os, kCheckpointMagic);
    write_u32(os, kCheckpointVersion);
    auto arch = params.arch();
    write_u32(os, static_cast<uint32_t>(arch.size()));
    for (int a : arch) write_u32(os, static_cast<uint32_t>(a));
    write_u32(os, static_cast<uint32_t>(params.W.rows));
    write_u32(os, static_cast<uint32_t>(params.W.cols));
    for (size_t l = 0; l < params.weights.size(); ++l) {
        for (double d : params.weights[l].data) write_f64(os, d);
        for (double d : params.biases[l]) write_f64(os, d);
    }
    for (double d : params.W.data) write_f64(os, d);
    if (!os) throw CheckpointError("save_checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("load_checkpoint: cannot open " + path);
    try {
        if (read_u32(is) != kCheckpointMagic)
            throw CheckpointError("load_checkpoint: bad magic in " + path);
        uint32_t version = read_u32(is);
        if (version != kCheckpointVersion)
            throw CheckpointError("load_checkpoint: unsupported version " +
                                  std::to_string(version));
        uint32_t arch_len = read_u32(is);
        if (arch_len < 2 || arch_len > 64)
            throw CheckpointError("load_checkpoint: implausible architecture length");
        std::vector<int> arch(arch_len);
        for (auto& a : arch) a = static_cast<int>(read_u32(is));
        uint32_t rows = read_u32(is);
        uint32_t cols = read_u32(is);
        if (cols != static_cast<uint32_t>(arch.back()))
            throw CheckpointError("load_checkpoint: W columns disagree with architecture");

        ModelParams p;
        for (size_t l = 0; l + 1 < arch.size(); ++l) {
            Mat w(static_cast<size_t>(arch[l + 1]), static_cast<size_t>(arch[l]));
            for (auto& d : w.data) d = read_f64(is);
            Vec b(static_cast<size_t>(arch[l + 1]));
            for (auto& d : b) d = read_f64(is);
            p.weights.push_back(std::move(w));
            p.biases.push_back(std::move(b));
        }
        p.W = Mat(rows, cols);
        for (auto& d : p.W.data) d = read_f64(is);
        return p;
    } catch (const std::runtime_error& e) {
        throw CheckpointError(std::string("load_checkpoint: ") + e.what());
    }
}

}  // namespace feduv::model
