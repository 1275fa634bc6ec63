#pragma once

#include <cmath>
#include <functional>

#include "errors.hpp"
#include "field.hpp"
#include "interp.hpp"
#include "spectral_ops.hpp"
#include "transport.hpp"

namespace nne {

// T v = v - 2 grad Delta^{-1} div v, the zero-order operator that absorbs the
// pressure of the linearized Euler equations.
inline Field2 pressure_absorb(const GridSpec& g, const Field2& v) {
    Field2 d = divergence_vec(g, v);
    Field2 phi = inverse_laplacian(g, d);
    Field2 gp = gradient_scalar(g, phi);
    Field2 out = v;
    out.axpy(-2.0, gp);
    return out;
}

struct PicardOptions {
    int max_iter = 40;
    double tol = 1e-12; // fixed-point stall tolerance, relative to sup |w|
    int n_sub = 2;      // characteristic sub-steps per time step
    int os = 4;         // spatial oversampling of the coupling-term sampler
};

struct PicardResult {
    SpaceTimeField w; // Vector, on the requested window
    int iterations = 0;
    double last_delta = 0.0; // sup change of the final sweep
};

// Fixed-point solver for
//   d_t w + u . grad w + T(w . grad u) = F,  w(t0) = w0,
// iterating transport solves with the coupling term frozen at the previous
// sweep. Converges geometrically when the window length times |grad u| is
// below one; it is an independent cross-check for the local Newton solver
// (different discretization: semi-Lagrangian characteristics instead of a
// spectral method of lines).
inline PicardResult picard_linearized_euler(const GridSpec& g, const SpaceTimeField& ubg,
                                            const Field2& w0, const SourceFn& F,
                                            const TimeGrid& window,
                                            const PicardOptions& opt = {}) {
    if (w0.kind != FieldKind::Vector || ubg.kind != FieldKind::Vector)
        throw InvalidParams("picard_linearized_euler expects vector fields");
    SampledVelocity u(&ubg, g, opt.os);

    // grad u on the window slices, stored as two row vector fields
    SpaceTimeField gu_row1(FieldKind::Vector, g.n, window); // (d_1 u_1, d_2 u_1)
    SpaceTimeField gu_row2(FieldKind::Vector, g.n, window); // (d_1 u_2, d_2 u_2)
    {
        FieldSampler us(&ubg, g, opt.os);
        for (int j = 0; j < window.nt; ++j) {
            // resample the background onto the window slice times
            Field2 uj(FieldKind::Vector, g.n);
            int j0;
            double frac;
            us.bracket(window.t(j), j0, frac);
            auto wts = time_cubic_weights(frac);
            for (int c = 0; c < 2; ++c) {
                double* dst = uj.comp(c);
                for (int m = 0; m < 4; ++m) {
                    const double* src = ubg.slice_comp(c, j0 + m);
                    for (size_t i = 0; i < uj.comp_size(); ++i)
                        dst[i] += wts[m] * src[i];
                }
            }
            Mat2Field gm = gradient_vec(g, uj);
            Field2 r1(FieldKind::Vector, g.n), r2(FieldKind::Vector, g.n);
            std::copy(gm.comp[0].begin(), gm.comp[0].end(), r1.comp(0));
            std::copy(gm.comp[1].begin(), gm.comp[1].end(), r1.comp(1));
            std::copy(gm.comp[2].begin(), gm.comp[2].end(), r2.comp(0));
            std::copy(gm.comp[3].begin(), gm.comp[3].end(), r2.comp(1));
            gu_row1.set_slice(j, r1);
            gu_row2.set_slice(j, r2);
        }
    }

    PicardResult res;
    res.w = SpaceTimeField(FieldKind::Vector, g.n, window);
    for (int it = 0; it < opt.max_iter; ++it) {
        // coupling term q = T(w . grad u) on window slices from the previous sweep
        SpaceTimeField q(FieldKind::Vector, g.n, window);
        if (it > 0) {
            for (int j = 0; j < window.nt; ++j) {
                Field2 c(FieldKind::Vector, g.n);
                const double* w1 = res.w.slice_comp(0, j);
                const double* w2 = res.w.slice_comp(1, j);
                for (int row = 0; row < 2; ++row) {
                    const SpaceTimeField& gr = row == 0 ? gu_row1 : gu_row2;
                    const double* a = gr.slice_comp(0, j);
                    const double* b = gr.slice_comp(1, j);
                    double* dst = c.comp(row);
                    for (size_t i = 0; i < c.comp_size(); ++i)
                        dst[i] = w1[i] * a[i] + w2[i] * b[i];
                }
                q.set_slice(j, pressure_absorb(g, c));
            }
        }
        FieldSampler qs(&q, g, opt.os);
        const bool have_q = it > 0 && window.nt >= 4;
        SourceFn forcing = [&](double x1, double x2, double t, double* out) {
            F(x1, x2, t, out);
            if (have_q) {
                double qv[2];
                qs.eval_all(x1, x2, t, qv);
                out[0] -= qv[0];
                out[1] -= qv[1];
            }
        };
        SpaceTimeField w_new = transport_solve(u, forcing, w0, window, opt.n_sub);
        double delta = 0.0, norm = w_new.sup_norm();
        for (size_t i = 0; i < w_new.data.size(); ++i)
            delta = std::max(delta, std::fabs(w_new.data[i] - res.w.data[i]));
        res.w = std::move(w_new);
        res.iterations = it + 1;
        res.last_delta = delta;
        if (it > 0 && delta <= opt.tol * std::max(norm, 1e-300)) break;
    }
    return res;
}

} // namespace nne
