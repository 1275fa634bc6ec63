#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "field.hpp"

namespace nne {

// Flat bump: compactly supported with all derivatives vanishing at the edges.
inline double bump(double s) {
    double r = 1.0 - s * s;
    return (r > 1e-12) ? std::exp(-1.0 / r) : 0.0;
}
inline double bump_d(double s) {
    double r = 1.0 - s * s;
    if (r <= 1e-12) return 0.0;
    return bump(s) * (-2.0 * s / (r * r));
}
inline double bump_sq(double s) { double b = bump(s); return b * b; }

namespace detail {

// Cumulative table of a smooth integrand on [-1,1] with analytic-derivative
// Hermite interpolation. Deterministic; built once per integrand.
struct CumTable {
    static constexpr int kN = 8192;
    std::vector<double> val; // cumulative integral at nodes
    double total = 0.0;
    double (*f)(double);

    explicit CumTable(double (*fn)(double)) : f(fn) {
        val.resize(kN + 1);
        val[0] = 0.0;
        const double h = 2.0 / kN;
        for (int i = 0; i < kN; ++i) {
            double a = -1.0 + i * h;
            // Simpson per cell
            val[i + 1] = val[i] + (h / 6.0) * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h));
        }
        total = val[kN];
    }
    // integral from -1 to u
    double eval(double u) const {
        if (u <= -1.0) return 0.0;
        if (u >= 1.0) return total;
        const double h = 2.0 / kN;
        double x = (u + 1.0) / h;
        int i = static_cast<int>(x);
        if (i >= kN) i = kN - 1;
        double a = -1.0 + i * h;
        double t = (u - a) / h;
        // cubic Hermite with exact endpoint derivatives
        double p0 = val[i], p1 = val[i + 1], m0 = f(a) * h, m1 = f(a + h) * h;
        double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 +
               (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1;
    }
};

inline const CumTable& bump_cum() {
    static CumTable t(&bump);
    return t;
}
inline const CumTable& bump_sq_cum() {
    static CumTable t(&bump_sq);
    return t;
}
// cumulative of the normalized bump-squared cumulative (for f^[2])
inline double bump_sq_cum_norm(double u) { return bump_sq_cum().eval(u) / bump_sq_cum().total; }
inline const CumTable& bump_sq_cum2() {
    static CumTable t(&bump_sq_cum_norm);
    return t;
}

} // namespace detail

// Smooth monotone ramp S: [0,1] -> [0,1] with all derivatives vanishing at the
// endpoints; S' and S'' are closed-form.
inline double ramp(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return detail::bump_cum().eval(2.0 * s - 1.0) / detail::bump_cum().total;
}
inline double ramp_d(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return 2.0 * bump(2.0 * s - 1.0) / detail::bump_cum().total;
}
inline double ramp_dd(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return 4.0 * bump_d(2.0 * s - 1.0) / detail::bump_cum().total;
}

// Squared-partition cut-offs chi_k and gluing cut-offs chi~_k on centers
// t_k = k tau. Built by a cos/sin crossfade of the ramp on overlap zones of
// half-width w = tau/8, so the squares sum to 1 by the Pythagorean identity.
struct CutoffFamily {
    double tau = 0.0;
    double w = 0.0;       // crossfade half-width
    double plateau = 0.0; // chi~ reaches out to t_k +/- reach
    double reach = 0.0;

    explicit CutoffFamily(double tau_q, double w_frac = 0.125) : tau(tau_q) {
        if (!(tau_q > 0.0)) throw InvalidParams("tau_q must be positive");
        if (!(w_frac > 0.0 && w_frac < 0.4))
            throw InvalidParams("crossfade fraction must lie in (0, 0.4)");
        w = w_frac * tau;
        // chi~ = 1 on [t_k - plateau, t_k + plateau], which covers supp chi_k
        // (half-width tau/2 + w); supp chi~ stays inside (t_k - tau, t_k + tau).
        // The descent zone is kept wide so that |d_t chi~| stays moderate: the
        // glued stress of the next step is proportional to it.
        plateau = (0.525 + w_frac) * tau;
        reach = 0.95 * tau;
    }

    double center(int k) const { return k * tau; }

    // chi_k and its first two time derivatives
    double chi(int k, double t) const {
        double u = t - center(k);
        double lo = -tau / 2.0, hi = tau / 2.0;
        if (u <= lo - w || u >= hi + w) return 0.0;
        if (u < lo + w) return std::sin(0.5 * M_PI * ramp((u - (lo - w)) / (2.0 * w)));
        if (u > hi - w) return std::cos(0.5 * M_PI * ramp((u - (hi - w)) / (2.0 * w)));
        return 1.0;
    }
    double chi_dot(int k, double t) const {
        double u = t - center(k);
        double lo = -tau / 2.0, hi = tau / 2.0;
        if (u <= lo - w || u >= hi + w) return 0.0;
        if (u < lo + w) {
            double s = (u - (lo - w)) / (2.0 * w);
            return std::cos(0.5 * M_PI * ramp(s)) * 0.5 * M_PI * ramp_d(s) / (2.0 * w);
        }
        if (u > hi - w) {
            double s = (u - (hi - w)) / (2.0 * w);
            return -std::sin(0.5 * M_PI * ramp(s)) * 0.5 * M_PI * ramp_d(s) / (2.0 * w);
        }
        return 0.0;
    }
    double chi_ddot(int k, double t) const {
        double u = t - center(k);
        double lo = -tau / 2.0, hi = tau / 2.0;
        if (u <= lo - w || u >= hi + w) return 0.0;
        double s, sgn;
        if (u < lo + w) { s = (u - (lo - w)) / (2.0 * w); sgn = 1.0; }
        else if (u > hi - w) { s = (u - (hi - w)) / (2.0 * w); sgn = -1.0; }
        else return 0.0;
        double a = 0.5 * M_PI, d = 2.0 * w;
        double R = ramp(s), R1 = ramp_d(s), R2 = ramp_dd(s);
        if (sgn > 0)
            return (-std::sin(a * R) * a * a * R1 * R1 + std::cos(a * R) * a * R2) / (d * d);
        return (-std::cos(a * R) * a * a * R1 * R1 - std::sin(a * R) * a * R2) / (d * d);
    }

    // chi~_k: equals 1 on the support of chi_k, supported in (t_k - tau, t_k + tau)
    double chit(int k, double t) const {
        double u = std::fabs(t - center(k));
        if (u <= plateau) return 1.0;
        if (u >= reach) return 0.0;
        return ramp((reach - u) / (reach - plateau));
    }
    double chit_dot(int k, double t) const {
        double u = t - center(k);
        double au = std::fabs(u);
        if (au <= plateau || au >= reach) return 0.0;
        double width = reach - plateau;
        double d = ramp_d((reach - au) / width) / width;
        return (u > 0) ? -d : d;
    }

    // all k whose chi~ window meets [ta, tb]
    std::pair<int, int> k_range(double ta, double tb) const {
        int k0 = static_cast<int>(std::ceil((ta - reach) / tau));
        int k1 = static_cast<int>(std::floor((tb + reach) / tau));
        return {k0, k1};
    }
};

// Disjointly supported 1-periodic oscillatory profiles g_{xi,p,n} for
// xi in Lambda, parity p in {e,o}, n in 1..Gamma, plus f = 1 - g^2 and its
// 1-periodic primitives f^[1], f^[2].
struct ProfileFamily {
    int n_xi = 0, Gamma = 0;
    int A = 0;          // |Lambda| * Gamma
    double slot = 0.0;  // spacing 1/(4A)
    double eps = 0.0;   // support half-width, 2*eps < slot
    double kappa = 0.0; // bump amplitude so that int_0^1 g^2 = 1

    ProfileFamily(int n_directions, int gamma_steps) : n_xi(n_directions), Gamma(gamma_steps) {
        if (Gamma < 1) throw InvalidParams("Gamma >= 1 required");
        A = n_xi * Gamma;
        slot = 1.0 / (4.0 * A);
        eps = 0.45 * slot;
        kappa = 1.0 / std::sqrt(eps * detail::bump_sq_cum().total);
    }

    int n_profiles() const { return 2 * n_xi * Gamma; }

    // profiles for step n (1-based) occupy consecutive slots; parity 0 = even k,
    // parity 1 = odd k
    int slot_index(int xi, int parity, int n) const {
        if (xi < 0 || xi >= n_xi || parity < 0 || parity > 1 || n < 1 || n > Gamma)
            throw InvalidParams("profile index out of range");
        return ((n - 1) * n_xi + xi) * 2 + parity;
    }
    double center(int xi, int parity, int n) const {
        return (slot_index(xi, parity, n) + 0.5) * slot;
    }

    static double wrap01(double s) { return s - std::floor(s); }

    double g(int xi, int parity, int n, double s) const {
        double u = wrap01(s) - center(xi, parity, n);
        if (u > 0.5) u -= 1.0;
        if (u < -0.5) u += 1.0;
        return kappa * bump(u / eps);
    }
    double g_dot(int xi, int parity, int n, double s) const {
        double u = wrap01(s) - center(xi, parity, n);
        if (u > 0.5) u -= 1.0;
        if (u < -0.5) u += 1.0;
        return kappa * bump_d(u / eps) / eps;
    }
    double f(int xi, int parity, int n, double s) const {
        double gv = g(xi, parity, n, s);
        return 1.0 - gv * gv;
    }

    // G(s) = int_0^s g^2 for s in [0,1); the support lies strictly inside (0,1)
    double g_sq_cum(int xi, int parity, int n, double s01) const {
        double c = center(xi, parity, n);
        if (s01 <= c - eps) return 0.0;
        if (s01 >= c + eps) return 1.0;
        // kappa^2 * eps * total = 1, so this is the normalized cumulative
        return kappa * kappa * eps * detail::bump_sq_cum().eval((s01 - c) / eps);
    }

    // 1-periodic primitive of f with f1(0) = 0
    double f1(int xi, int parity, int n, double s) const {
        double s01 = wrap01(s);
        return s01 - g_sq_cum(xi, parity, n, s01);
    }
    // d/ds of f1 (equals f)
    double f1_dot(int xi, int parity, int n, double s) const { return f(xi, parity, n, s); }

    // H(s) = int_0^s G for s in [0,1)
    double g_sq_cum2(int xi, int parity, int n, double s01) const {
        double c = center(xi, parity, n);
        if (s01 <= c - eps) return 0.0;
        double tail = eps * detail::bump_sq_cum2().eval(1.0);
        if (s01 >= c + eps) return tail + (s01 - (c + eps));
        return eps * detail::bump_sq_cum2().eval((s01 - c) / eps);
    }
    // mean of f^[1] over one period
    double f1_mean(int xi, int parity, int n) const {
        return 0.5 - g_sq_cum2(xi, parity, n, 1.0 - 1e-15);
    }
    // 1-periodic primitive of (f^[1] - mean) with f2(0) = 0
    double f2(int xi, int parity, int n, double s) const {
        double s01 = wrap01(s);
        return 0.5 * s01 * s01 - g_sq_cum2(xi, parity, n, s01) - f1_mean(xi, parity, n) * s01;
    }

    // support of g as a sub-interval of [0,1)
    std::pair<double, double> support(int xi, int parity, int n) const {
        double c = center(xi, parity, n);
        return {c - eps, c + eps};
    }
};

// Detected temporal support of a sampled field: slices whose sup exceeds
// 1e-13 of the global maximum.
inline std::vector<std::pair<double, double>> temporal_support(const SpaceTimeField& f,
                                                              double rel_threshold = 1e-13) {
    std::vector<std::pair<double, double>> out;
    double global = f.sup_norm();
    if (global == 0.0) return out;
    bool in = false;
    double start = 0.0, last = 0.0;
    for (int j = 0; j < f.tg.nt; ++j) {
        bool on = f.slice_sup(j) > rel_threshold * global;
        if (on && !in) { start = f.tg.t(j); in = true; }
        if (on) last = f.tg.t(j);
        if (!on && in) { out.emplace_back(start, last); in = false; }
    }
    if (in) out.emplace_back(start, last);
    return out;
}

// Z_{q,n}: indices k with k tau within tau of the temporal support.
inline std::vector<int> active_indices_from_support(
    const std::vector<std::pair<double, double>>& supp, double tau) {
    std::vector<int> ks;
    for (const auto& [a, b] : supp) {
        int k0 = static_cast<int>(std::ceil((a - tau) / tau - 1e-12));
        int k1 = static_cast<int>(std::floor((b + tau) / tau + 1e-12));
        for (int k = k0; k <= k1; ++k)
            if (ks.empty() || ks.back() != k) ks.push_back(k);
    }
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
}

inline std::vector<int> active_indices(const SpaceTimeField& R, double tau) {
    return active_indices_from_support(temporal_support(R), tau);
}

} // namespace nne
