#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"

namespace nne {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

enum class FieldKind : uint8_t { Scalar = 0, Vector = 1, SymTensor = 2 };

// SymTensor stores the independent entries (T11, T12, T22); symmetry is structural.
inline int ncomp(FieldKind k) {
    switch (k) {
        case FieldKind::Scalar: return 1;
        case FieldKind::Vector: return 2;
        default: return 3;
    }
}

// Unit torus [0,1)^2 discretized by n x n points; wavenumbers live in 2*pi*Z^2.
struct GridSpec {
    int n = 64;
    double dealias_fraction = 2.0 / 3.0;

    void validate() const {
        if (n < 8 || (n & (n - 1)) != 0)
            throw InvalidParams("grid n must be a power of two >= 8, got " + std::to_string(n));
        if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0))
            throw InvalidParams("dealias_fraction must lie in (0,1]");
    }
    double h() const { return 1.0 / n; }
    // Largest retained |mode| under the dealiasing rule.
    int keep_mode() const { return static_cast<int>(dealias_fraction * (n / 2)); }
};

// A single time slice: ncomp real components sampled row-major on the n x n grid.
struct Field2 {
    FieldKind kind = FieldKind::Scalar;
    int n = 0;
    std::vector<double> data; // [c * n*n + i * n + j], x1 = i/n, x2 = j/n

    Field2() = default;
    Field2(FieldKind k, int n_) : kind(k), n(n_), data(static_cast<size_t>(ncomp(k)) * n_ * n_, 0.0) {}

    size_t comp_size() const { return static_cast<size_t>(n) * n; }
    double* comp(int c) { return data.data() + c * comp_size(); }
    const double* comp(int c) const { return data.data() + c * comp_size(); }
    double& at(int c, int i, int j) { return data[c * comp_size() + static_cast<size_t>(i) * n + j]; }
    double at(int c, int i, int j) const {
        return data[c * comp_size() + static_cast<size_t>(i) * n + j];
    }

    Field2& operator+=(const Field2& o) {
        for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }
    Field2& operator-=(const Field2& o) {
        for (size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
        return *this;
    }
    Field2& operator*=(double s) {
        for (double& v : data) v *= s;
        return *this;
    }
    void axpy(double a, const Field2& x) {
        for (size_t i = 0; i < data.size(); ++i) data[i] += a * x.data[i];
    }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    double sup_norm() const {
        double m = 0.0;
        for (double v : data) m = std::max(m, std::fabs(v));
        return m;
    }
    double l2_norm() const {
        double s = 0.0;
        for (double v : data) s += v * v;
        return std::sqrt(s / comp_size());
    }
    double mean(int c) const {
        double s = 0.0;
        const double* p = comp(c);
        for (size_t i = 0; i < comp_size(); ++i) s += p[i];
        return s / comp_size();
    }
};

inline Field2 operator+(Field2 a, const Field2& b) { return a += b; }
inline Field2 operator-(Field2 a, const Field2& b) { return a -= b; }
inline Field2 operator*(double s, Field2 a) { return a *= s; }

struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.0;
    int nt = 1;
    double t(int j) const { return t0 + dt * j; }
    double t_end() const { return t(nt - 1); }
};

// Space-time samples. Storage order matches the file format: component-major,
// then time-major, then row-major.
struct SpaceTimeField {
    FieldKind kind = FieldKind::Scalar;
    int n = 0;
    TimeGrid tg;
    std::vector<double> data;

    SpaceTimeField() = default;
    SpaceTimeField(FieldKind k, int n_, TimeGrid g)
        : kind(k), n(n_), tg(g),
          data(static_cast<size_t>(ncomp(k)) * g.nt * n_ * n_, 0.0) {}

    size_t comp_size() const { return static_cast<size_t>(n) * n; }
    double* slice_comp(int c, int jt) {
        return data.data() + (static_cast<size_t>(c) * tg.nt + jt) * comp_size();
    }
    const double* slice_comp(int c, int jt) const {
        return data.data() + (static_cast<size_t>(c) * tg.nt + jt) * comp_size();
    }

    Field2 slice(int jt) const {
        Field2 f(kind, n);
        for (int c = 0; c < ncomp(kind); ++c) {
            const double* src = slice_comp(c, jt);
            std::copy(src, src + comp_size(), f.comp(c));
        }
        return f;
    }
    void set_slice(int jt, const Field2& f) {
        for (int c = 0; c < ncomp(kind); ++c) {
            const double* src = f.comp(c);
            std::copy(src, src + comp_size(), slice_comp(c, jt));
        }
    }

    double sup_norm() const {
        double m = 0.0;
        for (double v : data) m = std::max(m, std::fabs(v));
        return m;
    }
    double slice_sup(int jt) const {
        double m = 0.0;
        for (int c = 0; c < ncomp(kind); ++c) {
            const double* p = slice_comp(c, jt);
            for (size_t i = 0; i < comp_size(); ++i) m = std::max(m, std::fabs(p[i]));
        }
        return m;
    }
};

} // namespace nne
