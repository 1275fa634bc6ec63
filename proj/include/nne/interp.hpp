#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <list>
#include <memory>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "spectral_ops.hpp"

namespace nne {

// Fourier zero-padding of one component from an n grid to an os*n grid. The
// refined samples agree with the trigonometric interpolant, so the bicubic
// kernel below only has to bridge the much finer spacing.
inline std::vector<double> oversample_comp(const GridSpec& g, const double* src, int os) {
    const int n = g.n, nb = os * g.n;
    const Fft2& small = Fft2::get(n);
    const Fft2& big = Fft2::get(nb);
    std::vector<std::complex<double>> sh(small.spec_size());
    small.forward(src, sh.data());
    std::vector<std::complex<double>> bh(big.spec_size(), {0.0, 0.0});
    const int nc = n / 2 + 1, nbc = nb / 2 + 1;
    const double scale = static_cast<double>(os) * os;
    for (int i = 0; i < n; ++i) {
        int ky = small.mode(i);
        if (std::abs(2 * ky) == n) continue; // drop the Nyquist row
        int ib = ky >= 0 ? ky : nb + ky;
        for (int kx = 0; kx < nc; ++kx) {
            if (2 * kx == n) continue;
            bh[static_cast<size_t>(ib) * nbc + kx] = scale * sh[static_cast<size_t>(i) * nc + kx];
        }
    }
    std::vector<double> out(static_cast<size_t>(nb) * nb);
    big.backward(bh.data(), out.data());
    return out;
}

namespace detail {

// Keys cubic convolution kernel (a = -1/2), weights for the 4 taps around a
// point with fractional offset u in [0,1)
inline std::array<double, 4> keys_weights(double u) {
    double u2 = u * u, u3 = u2 * u;
    return {-0.5 * u3 + u2 - 0.5 * u,
            1.5 * u3 - 2.5 * u2 + 1.0,
            -1.5 * u3 + 2.0 * u2 + 0.5 * u,
            0.5 * u3 - 0.5 * u2};
}

} // namespace detail

// Periodic bicubic interpolation of a single scalar slice on the unit torus,
// backed by a Fourier-oversampled table.
class SliceInterp {
public:
    SliceInterp() = default;
    SliceInterp(const GridSpec& g, const double* src, int os = 4)
        : nb_(os * g.n), table_(oversample_comp(g, src, os)) {}

    double operator()(double x1, double x2) const {
        double fx = x1 * nb_, fy = x2 * nb_;
        double bx = std::floor(fx), by = std::floor(fy);
        auto wx = detail::keys_weights(fx - bx);
        auto wy = detail::keys_weights(fy - by);
        int ix = static_cast<int>(bx), iy = static_cast<int>(by);
        double acc = 0.0;
        for (int a = -1; a <= 2; ++a) {
            int i = wrap(ix + a);
            double row = 0.0;
            for (int b = -1; b <= 2; ++b) row += wy[b + 1] * table_[idx(i, wrap(iy + b))];
            acc += wx[a + 1] * row;
        }
        return acc;
    }

private:
    int wrap(int i) const {
        i %= nb_;
        return i < 0 ? i + nb_ : i;
    }
    size_t idx(int i, int j) const { return static_cast<size_t>(i) * nb_ + j; }

    int nb_ = 0;
    std::vector<double> table_;
};

// Cubic Lagrange weights over 4 consecutive uniform samples for a point at
// offset u in [0,1) past the second sample.
inline std::array<double, 4> time_cubic_weights(double u) {
    return {-u * (u - 1.0) * (u - 2.0) / 6.0,
            (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
            -(u + 1.0) * u * (u - 2.0) / 2.0,
            (u + 1.0) * u * (u - 1.0) / 6.0};
}

// Space-time sampler over a SpaceTimeField: bicubic in space (lazy per-slice
// oversampled tables, small LRU cache) and cubic Lagrange in time.
class FieldSampler {
public:
    FieldSampler(const SpaceTimeField* f, const GridSpec& g, int os = 4, size_t cache = 12)
        : f_(f), g_(g), os_(os), cache_max_(cache * nne::ncomp(f->kind)) {}

    int ncomp() const { return nne::ncomp(f_->kind); }
    const TimeGrid& tg() const { return f_->tg; }

    // time bracketing: 4 slices j0..j0+3, offset u past slice j0+1
    void bracket(double t, int& j0, double& u) const {
        const TimeGrid& tg = f_->tg;
        double s = (t - tg.t0) / tg.dt;
        int j = static_cast<int>(std::floor(s));
        j0 = j - 1;
        if (j0 < 0) j0 = 0;
        if (j0 > tg.nt - 4) j0 = tg.nt - 4;
        if (j0 < 0) throw TooFewSamples("FieldSampler needs >= 4 time slices");
        u = s - (j0 + 1);
    }

    double eval(int c, double x1, double x2, double t) const {
        int j0;
        double u;
        bracket(t, j0, u);
        auto w = time_cubic_weights(u);
        double acc = 0.0;
        for (int m = 0; m < 4; ++m) acc += w[m] * slice(c, j0 + m)(x1, x2);
        return acc;
    }

    // all components at once (reuses the time bracket)
    void eval_all(double x1, double x2, double t, double* out) const {
        int j0;
        double u;
        bracket(t, j0, u);
        auto w = time_cubic_weights(u);
        for (int c = 0; c < ncomp(); ++c) {
            double acc = 0.0;
            for (int m = 0; m < 4; ++m) acc += w[m] * slice(c, j0 + m)(x1, x2);
            out[c] = acc;
        }
    }

    const SliceInterp& slice(int c, int jt) const {
        long key = static_cast<long>(jt) * ncomp() + c;
        for (auto it = cache_.begin(); it != cache_.end(); ++it)
            if (it->first == key) {
                cache_.splice(cache_.begin(), cache_, it);
                return cache_.front().second;
            }
        cache_.emplace_front(key, SliceInterp(g_, f_->slice_comp(c, jt), os_));
        if (cache_.size() > cache_max_) cache_.pop_back();
        return cache_.front().second;
    }

private:
    const SpaceTimeField* f_;
    GridSpec g_;
    int os_;
    size_t cache_max_;
    mutable std::list<std::pair<long, SliceInterp>> cache_;
};

// Velocity as a continuous function of space-time; flows and transport take
// this interface so analytic test velocities and sampled fields are handled
// alike.
class Velocity {
public:
    virtual ~Velocity() = default;
    virtual std::array<double, 2> operator()(double x1, double x2, double t) const = 0;
};

class AnalyticVelocity : public Velocity {
public:
    using Fn = std::function<std::array<double, 2>(double, double, double)>;
    explicit AnalyticVelocity(Fn fn) : fn_(std::move(fn)) {}
    std::array<double, 2> operator()(double x1, double x2, double t) const override {
        return fn_(x1, x2, t);
    }

private:
    Fn fn_;
};

class SampledVelocity : public Velocity {
public:
    SampledVelocity(const SpaceTimeField* u, const GridSpec& g, int os = 4)
        : s_(u, g, os) {}
    std::array<double, 2> operator()(double x1, double x2, double t) const override {
        std::array<double, 2> v;
        s_.eval_all(x1, x2, t, v.data());
        return v;
    }

private:
    FieldSampler s_;
};

} // namespace nne
