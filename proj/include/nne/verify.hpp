#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "spectral_ops.hpp"

namespace nne {

// A triple (u, p, R) given as time evaluators. Pressure is only defined up to
// a constant; the residual uses its gradient so normalization does not matter.
struct ERTriple {
    std::function<Field2(double)> velocity; // Vector
    std::function<Field2(double)> pressure; // Scalar
    std::function<Field2(double)> stress;   // SymTensor
};

// div(u (x) u) computed as a pointwise product followed by a spectral
// divergence. No dealiasing: for resolved fields the aliased tail is at the
// level of the spectral truncation error and this keeps the operation honest.
inline Field2 divergence_outer(const GridSpec& g, const Field2& u) {
    Field2 T(FieldKind::SymTensor, g.n);
    size_t m = T.comp_size();
    const double* u1 = u.comp(0);
    const double* u2 = u.comp(1);
    for (size_t i = 0; i < m; ++i) {
        T.comp(0)[i] = u1[i] * u1[i];
        T.comp(1)[i] = u1[i] * u2[i];
        T.comp(2)[i] = u2[i] * u2[i];
    }
    return divergence_sym(g, T);
}

// Residual of d_t u + div(u(x)u) + grad p - div R at the center time of a
// five-point stencil u(t - 2h) .. u(t + 2h). Also reports the largest term
// norm through `scale` so callers can form relative sizes.
inline Field2 er_residual_stencil(const GridSpec& g, const std::array<const Field2*, 5>& us,
                                  double h, const Field2& p, const Field2& R,
                                  double* scale = nullptr) {
    const Field2& uc = *us[2];
    Field2 dudt(FieldKind::Vector, g.n);
    size_t m = dudt.comp_size();
    const double c = 1.0 / (12.0 * h);
    for (int comp = 0; comp < 2; ++comp) {
        double* out = dudt.comp(comp);
        const double* a = us[0]->comp(comp);
        const double* b = us[1]->comp(comp);
        const double* d = us[3]->comp(comp);
        const double* e = us[4]->comp(comp);
        for (size_t i = 0; i < m; ++i) out[i] = c * (a[i] - 8.0 * b[i] + 8.0 * d[i] - e[i]);
    }
    Field2 divuu = divergence_outer(g, uc);
    Field2 gradp = gradient_scalar(g, p);
    Field2 divR = divergence_sym(g, R);
    if (scale) {
        *scale = std::max({dudt.l2_norm(), divuu.l2_norm(), gradp.l2_norm(), divR.l2_norm()});
    }
    Field2 res = dudt;
    res += divuu;
    res += gradp;
    res.axpy(-1.0, divR);
    return res;
}

struct ERSample {
    double t = 0.0;
    double res_l2 = 0.0, res_sup = 0.0;
    double scale = 0.0; // largest term L2 norm at this time
};

struct ERReport {
    std::vector<ERSample> samples;
    double scale = 0.0;   // max per-sample scale
    double rel_l2 = 0.0;  // rms of res_l2 over samples / scale
    double rel_sup = 0.0; // max res_sup over samples / scale
};

inline ERReport finalize_er_report(std::vector<ERSample> samples) {
    ERReport rep;
    rep.samples = std::move(samples);
    double sq = 0.0, sup = 0.0;
    for (const auto& s : rep.samples) {
        rep.scale = std::max(rep.scale, s.scale);
        sq += s.res_l2 * s.res_l2;
        sup = std::max(sup, s.res_sup);
    }
    if (!rep.samples.empty() && rep.scale > 0.0) {
        rep.rel_l2 = std::sqrt(sq / rep.samples.size()) / rep.scale;
        rep.rel_sup = sup / rep.scale;
    }
    return rep;
}

// Streamed verification: evaluates the triple at each sample time plus the
// four stencil neighbours at spacing h_st, never holding more than one
// stencil in memory. h_st is independent of the sample spacing so the time
// differencing floor can be pushed well below the sample density.
inline ERReport verify_euler_reynolds(const GridSpec& g, const ERTriple& f,
                                      const std::vector<double>& times, double h_st) {
    if (!(h_st > 0.0)) throw InvalidParams("stencil spacing must be positive");
    std::vector<ERSample> samples;
    samples.reserve(times.size());
    for (double t : times) {
        std::array<Field2, 5> u = {f.velocity(t - 2 * h_st), f.velocity(t - h_st),
                                   f.velocity(t), f.velocity(t + h_st),
                                   f.velocity(t + 2 * h_st)};
        std::array<const Field2*, 5> us = {&u[0], &u[1], &u[2], &u[3], &u[4]};
        Field2 p = f.pressure(t);
        Field2 R = f.stress(t);
        ERSample s;
        s.t = t;
        Field2 res = er_residual_stencil(g, us, h_st, p, R, &s.scale);
        s.res_l2 = res.l2_norm();
        s.res_sup = res.sup_norm();
        samples.push_back(s);
    }
    return finalize_er_report(std::move(samples));
}

} // namespace nne
