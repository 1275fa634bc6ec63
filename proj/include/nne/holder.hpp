#pragma once

#include <cmath>
#include <vector>

#include "spectral_ops.hpp"

namespace nne {

// Discrete Hoelder-norm estimator (a measurement device, not a proof device):
//   ||f||_{N+alpha} = sum_{j<=N} max_{|theta|=j} grid-sup |D^theta f|
//                     + max over dyadic separations of difference quotients.
inline double holder_seminorm_int(const GridSpec& g, const Field2& f, int order) {
    double m = 0.0;
    for (int a1 = 0; a1 <= order; ++a1) {
        int a2 = order - a1;
        Field2 d = derivative(g, f, a1, a2);
        m = std::max(m, d.sup_norm());
    }
    return m;
}

inline double holder_seminorm_alpha(const GridSpec& g, const Field2& f, int order, double alpha) {
    double best = 0.0;
    Field2 base = (order == 0) ? f : f;
    // maximize over every multi-index of length `order`
    for (int a1 = 0; a1 <= order; ++a1) {
        int a2 = order - a1;
        Field2 d = (order == 0) ? f : derivative(g, f, a1, a2);
        for (int p = 0; (1 << p) <= g.n / 2; ++p) {
            int s = 1 << p;
            double sep_axis = static_cast<double>(s) / g.n;
            double sep_diag = sep_axis * std::sqrt(2.0);
            for (int c = 0; c < ncomp(d.kind); ++c)
                for (int i = 0; i < g.n; ++i)
                    for (int j = 0; j < g.n; ++j) {
                        double v = d.at(c, i, j);
                        double q1 = std::fabs(d.at(c, (i + s) % g.n, j) - v) /
                                    std::pow(sep_axis, alpha);
                        double q2 = std::fabs(d.at(c, i, (j + s) % g.n) - v) /
                                    std::pow(sep_axis, alpha);
                        double q3 = std::fabs(d.at(c, (i + s) % g.n, (j + s) % g.n) - v) /
                                    std::pow(sep_diag, alpha);
                        best = std::max({best, q1, q2, q3});
                    }
        }
    }
    return best;
}

inline double holder_norm(const GridSpec& g, const Field2& f, int N, double alpha = 0.0) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidParams("holder alpha must be in [0,1)");
    double s = 0.0;
    for (int j = 0; j <= N; ++j) s += holder_seminorm_int(g, f, j);
    if (alpha > 0.0) s += holder_seminorm_alpha(g, f, N, alpha);
    return s;
}

inline double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        if (y[i] <= 0.0) continue;
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++n;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Fitted log-log slope of ||(fg)*zeta_ell - (f*zeta_ell)(g*zeta_ell)||_0 vs ell.
// The commutator estimate predicts slope 2.
inline double cet_commutator_probe(const GridSpec& g, const Field2& f, const Field2& h,
                                   const std::vector<double>& ells,
                                   std::vector<double>* errs_out = nullptr) {
    std::vector<double> errs;
    Field2 prod(FieldKind::Scalar, g.n);
    for (size_t i = 0; i < prod.comp_size(); ++i)
        prod.comp(0)[i] = f.comp(0)[i] * h.comp(0)[i];
    for (double ell : ells) {
        auto w = mollifier_weights(g, ell);
        Field2 lhs = mollify_spatial(g, prod, w);
        Field2 mf = mollify_spatial(g, f, w);
        Field2 mh = mollify_spatial(g, h, w);
        double e = 0.0;
        for (size_t i = 0; i < prod.comp_size(); ++i)
            e = std::max(e, std::fabs(lhs.comp(0)[i] - mf.comp(0)[i] * mh.comp(0)[i]));
        errs.push_back(e);
    }
    if (errs_out) *errs_out = errs;
    return fit_loglog_slope(ells, errs);
}

struct StationaryPhaseResult {
    double slope_rnorm;    // fitted slope of ||R(a e^{ik.Phi})||_alpha vs |k|
    double slope_integral; // fitted slope of |int a e^{ik.Phi}| vs |k|
    std::vector<double> ks, rnorms, integrals;
};

// Decay of the inverse divergence and of oscillatory integrals along k = m * xi0.
// `a` is a scalar amplitude carried on the unit vector e1; `disp` is the periodic
// displacement of the phase map from the identity, so the phase is
// Phi_1(x) = x_1 + disp_1(x). Passing the displacement keeps the gradient
// spectral (the identity part is differentiated analytically).
inline StationaryPhaseResult stationary_phase_probe(const GridSpec& g, const Field2& a,
                                                    const Field2& disp,
                                                    const std::vector<int>& modes,
                                                    double alpha) {
    // check the gradient bounds of the phase map Id + disp
    Mat2Field dphi = gradient_vec(g, disp);
    for (size_t i = 0; i < dphi.size(); ++i) {
        double g11 = 1.0 + dphi.at(0, i), g12 = dphi.at(1, i);
        double g21 = dphi.at(2, i), g22 = 1.0 + dphi.at(3, i);
        double nn = std::sqrt(g11 * g11 + g12 * g12 + g21 * g21 + g22 * g22);
        if (nn < 0.1 || nn > 10.0)
            throw GradientBoundViolated("|grad Phi| = " + std::to_string(nn));
    }
    StationaryPhaseResult res;
    const double h2 = 1.0 / (static_cast<double>(g.n) * g.n);
    for (int m : modes) {
        double k = kTwoPi * m;
        Field2 re(FieldKind::Vector, g.n), im(FieldKind::Vector, g.n);
        double int_re = 0.0, int_im = 0.0;
        for (size_t i = 0; i < a.comp_size(); ++i) {
            double x1 = static_cast<double>(i / g.n) / g.n;
            double ph = k * (x1 + disp.comp(0)[i]);
            double cr = a.comp(0)[i] * std::cos(ph), ci = a.comp(0)[i] * std::sin(ph);
            re.comp(0)[i] = cr;
            im.comp(0)[i] = ci;
            int_re += cr * h2;
            int_im += ci * h2;
        }
        subtract_mean(re);
        subtract_mean(im);
        Field2 Rre = inverse_divergence(g, re);
        Field2 Rim = inverse_divergence(g, im);
        double nr = 0.0;
        for (int c = 0; c < 3; ++c) {
            Field2 sc(FieldKind::Scalar, g.n);
            std::copy(Rre.comp(c), Rre.comp(c) + Rre.comp_size(), sc.comp(0));
            nr = std::max(nr, holder_norm(g, sc, 0, alpha));
            std::copy(Rim.comp(c), Rim.comp(c) + Rim.comp_size(), sc.comp(0));
            nr = std::max(nr, holder_norm(g, sc, 0, alpha));
        }
        res.ks.push_back(k);
        res.rnorms.push_back(nr);
        res.integrals.push_back(std::hypot(int_re, int_im));
    }
    res.slope_rnorm = fit_loglog_slope(res.ks, res.rnorms);
    res.slope_integral = fit_loglog_slope(res.ks, res.integrals);
    return res;
}

} // namespace nne
