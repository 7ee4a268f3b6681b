#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace feduv {

using Vec = std::vector<double>;

// Dense row-major matrix. Sized for desk-scale models; no BLAS behind it.
struct Mat {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(size_t i, size_t j) { return data[i * cols + j]; }
    double operator()(size_t i, size_t j) const { return data[i * cols + j]; }

    Vec row(size_t i) const {
        return Vec(data.begin() + static_cast<long>(i * cols),
                   data.begin() + static_cast<long>((i + 1) * cols));
    }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

// y = M x
inline Vec matvec(const Mat& m, const Vec& x) {
    if (x.size() != m.cols) throw std::invalid_argument("matvec: dimension mismatch");
    Vec y(m.rows, 0.0);
    for (size_t i = 0; i < m.rows; ++i) {
        const double* r = &m.data[i * m.cols];
        double s = 0.0;
        for (size_t j = 0; j < m.cols; ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

// y = M^T x
inline Vec matvec_t(const Mat& m, const Vec& x) {
    if (x.size() != m.rows) throw std::invalid_argument("matvec_t: dimension mismatch");
    Vec y(m.cols, 0.0);
    for (size_t i = 0; i < m.rows; ++i) {
        const double* r = &m.data[i * m.cols];
        for (size_t j = 0; j < m.cols; ++j) y[j] += r[j] * x[i];
    }
    return y;
}

// M += scale * u v^T
inline void add_outer(Mat& m, const Vec& u, const Vec& v, double scale = 1.0) {
    if (u.size() != m.rows || v.size() != m.cols)
        throw std::invalid_argument("add_outer: dimension mismatch");
    for (size_t i = 0; i < m.rows; ++i) {
        double ui = scale * u[i];
        double* r = &m.data[i * m.cols];
        for (size_t j = 0; j < m.cols; ++j) r[j] += ui * v[j];
    }
}

inline void axpy(Vec& y, double a, const Vec& x) {
    for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline void scale_inplace(Vec& v, double a) {
    for (auto& x : v) x *= a;
}

inline void scale_inplace(Mat& m, double a) {
    for (auto& x : m.data) x *= a;
}

}  // namespace feduv
