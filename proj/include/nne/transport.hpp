#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "interp.hpp"
#include "spectral_ops.hpp"
#include "temporal.hpp"

namespace nne {

namespace detail {

// One RK4 step of dY/ds = u(Y, s) from s0 over a signed step h.
inline void rk4_step(const Velocity& u, std::array<double, 2>& y, double s0, double h) {
    auto k1 = u(y[0], y[1], s0);
    auto k2 = u(y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1], s0 + 0.5 * h);
    auto k3 = u(y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1], s0 + 0.5 * h);
    auto k4 = u(y[0] + h * k3[0], y[1] + h * k3[1], s0 + h);
    y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
}

inline void rk4_travel(const Velocity& u, std::array<double, 2>& y, double s0, double s1,
                       int n_sub) {
    double h = (s1 - s0) / n_sub;
    for (int m = 0; m < n_sub; ++m) rk4_step(u, y, s0 + m * h, h);
}

} // namespace detail

// Backward flow map Phi of a velocity on a time window around an origin time:
// constant along trajectories, identity at the origin. What is stored is the
// displacement Phi - x, which is periodic and smooth, so spectral gradients
// and bicubic interpolation apply to it directly.
struct FlowMap {
    GridSpec g;
    double t_origin = 0.0;
    int j_origin = 0;
    SpaceTimeField disp; // Vector: Phi(x, s) - x, unwrapped

    const TimeGrid& tg() const { return disp.tg; }

    Field2 grad_det(int jt, Mat2Field& grad) const {
        Field2 d = disp.slice(jt);
        grad = gradient_vec(g, d);
        Field2 det(FieldKind::Scalar, g.n);
        for (size_t i = 0; i < det.comp_size(); ++i) {
            double a = 1.0 + grad.at(0, i), b = grad.at(1, i);
            double c = grad.at(2, i), dd = 1.0 + grad.at(3, i);
            grad.at(0, i) = a;
            grad.at(3, i) = dd;
            det.comp(0)[i] = a * dd - b * c;
        }
        return det;
    }

    // grad Phi = Id + grad(disp)
    Mat2Field grad_slice(int jt) const {
        Mat2Field m(g.n);
        grad_det(jt, m);
        return m;
    }

    // (grad Phi)^-1 by the 2x2 adjugate, divided by the computed determinant
    // (soft enforcement of det = 1 for a measure-preserving flow)
    Mat2Field inv_grad_slice(int jt) const {
        Mat2Field m(g.n);
        Field2 det = grad_det(jt, m);
        Mat2Field inv(g.n);
        for (size_t i = 0; i < det.comp_size(); ++i) {
            double d = det.comp(0)[i];
            inv.at(0, i) = m.at(3, i) / d;
            inv.at(1, i) = -m.at(1, i) / d;
            inv.at(2, i) = -m.at(2, i) / d;
            inv.at(3, i) = m.at(0, i) / d;
        }
        return inv;
    }
};

// Incremental semi-Lagrangian construction: each new slice takes one
// characteristic step toward the previous slice and pulls the stored
// displacement back along it. No scattered-data inversion is needed because
// Phi is constant along trajectories.
inline FlowMap solve_backward_flow(const Velocity& u, const GridSpec& g, double t_origin,
                                   const TimeGrid& window, int n_sub = 2) {
    FlowMap fm;
    fm.g = g;
    fm.t_origin = t_origin;
    double jr = (t_origin - window.t0) / window.dt;
    fm.j_origin = static_cast<int>(std::lround(jr));
    if (fm.j_origin < 0 || fm.j_origin >= window.nt ||
        std::fabs(jr - fm.j_origin) > 1e-9 * std::max(1.0, std::fabs(jr)))
        throw InvalidParams("flow origin time must lie on the window grid");
    fm.disp = SpaceTimeField(FieldKind::Vector, g.n, window);

    auto propagate = [&](int j_from, int j_to) {
        // displacement at j_from is known; fill j_to (adjacent slice)
        SliceInterp d1(g, fm.disp.slice_comp(0, j_from));
        SliceInterp d2(g, fm.disp.slice_comp(1, j_from));
        double s_to = window.t(j_to), s_from = window.t(j_from);
        double* o1 = fm.disp.slice_comp(0, j_to);
        double* o2 = fm.disp.slice_comp(1, j_to);
        double reach = 0.0;
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                std::array<double, 2> y = {static_cast<double>(i) / g.n,
                                           static_cast<double>(j) / g.n};
                detail::rk4_travel(u, y, s_to, s_from, n_sub);
                double m1 = y[0] - static_cast<double>(i) / g.n;
                double m2 = y[1] - static_cast<double>(j) / g.n;
                reach = std::max(reach, std::max(std::fabs(m1), std::fabs(m2)));
                size_t idx = static_cast<size_t>(i) * g.n + j;
                o1[idx] = m1 + d1(y[0], y[1]);
                o2[idx] = m2 + d2(y[0], y[1]);
            }
        if (reach > 0.25)
            throw WindowTooLong("characteristic moved " + std::to_string(reach) +
                                " of the domain in one time step");
    };
    for (int j = fm.j_origin; j + 1 < window.nt; ++j) propagate(j, j + 1);
    for (int j = fm.j_origin; j - 1 >= 0; --j) propagate(j, j - 1);
    return fm;
}

// Lagrangian flow X of the same velocity: X(a, s) is the position at time s of
// the particle at a at the origin time. Trajectories are independent ODEs.
inline FlowMap solve_forward_flow(const Velocity& u, const GridSpec& g, double t_origin,
                                  const TimeGrid& window, int n_sub = 2) {
    FlowMap fm;
    fm.g = g;
    fm.t_origin = t_origin;
    double jr = (t_origin - window.t0) / window.dt;
    fm.j_origin = static_cast<int>(std::lround(jr));
    if (fm.j_origin < 0 || fm.j_origin >= window.nt ||
        std::fabs(jr - fm.j_origin) > 1e-9 * std::max(1.0, std::fabs(jr)))
        throw InvalidParams("flow origin time must lie on the window grid");
    fm.disp = SpaceTimeField(FieldKind::Vector, g.n, window);

    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            size_t idx = static_cast<size_t>(i) * g.n + j;
            std::array<double, 2> a = {static_cast<double>(i) / g.n,
                                       static_cast<double>(j) / g.n};
            std::array<double, 2> y = a;
            for (int jt = fm.j_origin; jt + 1 < window.nt; ++jt) {
                detail::rk4_travel(u, y, window.t(jt), window.t(jt + 1), n_sub);
                fm.disp.slice_comp(0, jt + 1)[idx] = y[0] - a[0];
                fm.disp.slice_comp(1, jt + 1)[idx] = y[1] - a[1];
            }
            y = a;
            for (int jt = fm.j_origin; jt - 1 >= 0; --jt) {
                detail::rk4_travel(u, y, window.t(jt), window.t(jt - 1), n_sub);
                fm.disp.slice_comp(0, jt - 1)[idx] = y[0] - a[0];
                fm.disp.slice_comp(1, jt - 1)[idx] = y[1] - a[1];
            }
        }
    return fm;
}

// Per-point forcing for the transport solver; writes ncomp values.
using SourceFn = std::function<void(double x1, double x2, double t, double* out)>;

// Semi-Lagrangian solver for d_t f + u . grad f = g on a window, f = f0 at the
// first slice. Each step pulls the previous slice back along one characteristic
// step and adds a Simpson quadrature of the forcing along it.
inline SpaceTimeField transport_solve(const Velocity& u, const SourceFn& forcing,
                                      const Field2& f0, const TimeGrid& window, int n_sub = 2) {
    const int nc = ncomp(f0.kind);
    GridSpec g;
    g.n = f0.n;
    SpaceTimeField out(f0.kind, g.n, window);
    out.set_slice(0, f0);
    std::vector<double> gv(nc);
    for (int jt = 0; jt + 1 < window.nt; ++jt) {
        std::vector<SliceInterp> prev;
        prev.reserve(nc);
        for (int c = 0; c < nc; ++c) prev.emplace_back(g, out.slice_comp(c, jt));
        double s1 = window.t(jt + 1), s0 = window.t(jt), sm = 0.5 * (s0 + s1);
        double dt = s1 - s0;
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                size_t idx = static_cast<size_t>(i) * g.n + j;
                std::array<double, 2> x = {static_cast<double>(i) / g.n,
                                           static_cast<double>(j) / g.n};
                std::array<double, 2> ym = x, y0 = x;
                detail::rk4_travel(u, ym, s1, sm, n_sub);
                y0 = ym;
                detail::rk4_travel(u, y0, sm, s0, n_sub);
                for (int c = 0; c < nc; ++c) out.slice_comp(c, jt + 1)[idx] = prev[c](y0[0], y0[1]);
                if (forcing) {
                    double acc[8];
                    forcing(x[0], x[1], s1, gv.data());
                    for (int c = 0; c < nc; ++c) acc[c] = gv[c];
                    forcing(ym[0], ym[1], sm, gv.data());
                    for (int c = 0; c < nc; ++c) acc[c] += 4.0 * gv[c];
                    forcing(y0[0], y0[1], s0, gv.data());
                    for (int c = 0; c < nc; ++c) acc[c] += gv[c];
                    for (int c = 0; c < nc; ++c) out.slice_comp(c, jt + 1)[idx] += dt / 6.0 * acc[c];
                }
            }
    }
    return out;
}

// d_t F + u . grad F with 4th-order time differencing (one-sided at the window
// ends) and spectral spatial derivatives. u and F share the grid and time grid.
inline SpaceTimeField material_derivative(const SpaceTimeField& u, const SpaceTimeField& F) {
    const int nt = F.tg.nt, nc = ncomp(F.kind);
    if (nt < 5) throw TooFewSamples("material_derivative needs >= 5 time slices");
    GridSpec g;
    g.n = F.n;
    SpaceTimeField out(F.kind, F.n, F.tg);
    const double dt = F.tg.dt;
    std::vector<double> tmp(F.comp_size());
    for (int jt = 0; jt < nt; ++jt) {
        for (int c = 0; c < nc; ++c) {
            double* o = out.slice_comp(c, jt);
            auto fc = [&](int j) { return F.slice_comp(c, j); };
            auto axpy = [&](double a, const double* s) {
                for (size_t i = 0; i < F.comp_size(); ++i) o[i] += a * s[i];
            };
            std::fill(o, o + F.comp_size(), 0.0);
            double inv = 1.0 / (12.0 * dt);
            if (jt >= 2 && jt <= nt - 3) {
                axpy(1.0 * inv, fc(jt - 2));
                axpy(-8.0 * inv, fc(jt - 1));
                axpy(8.0 * inv, fc(jt + 1));
                axpy(-1.0 * inv, fc(jt + 2));
            } else if (jt == 0) {
                axpy(-25.0 * inv, fc(0));
                axpy(48.0 * inv, fc(1));
                axpy(-36.0 * inv, fc(2));
                axpy(16.0 * inv, fc(3));
                axpy(-3.0 * inv, fc(4));
            } else if (jt == 1) {
                axpy(-3.0 * inv, fc(0));
                axpy(-10.0 * inv, fc(1));
                axpy(18.0 * inv, fc(2));
                axpy(-6.0 * inv, fc(3));
                axpy(1.0 * inv, fc(4));
            } else if (jt == nt - 2) {
                axpy(3.0 * inv, fc(nt - 1));
                axpy(10.0 * inv, fc(nt - 2));
                axpy(-18.0 * inv, fc(nt - 3));
                axpy(6.0 * inv, fc(nt - 4));
                axpy(-1.0 * inv, fc(nt - 5));
            } else { // jt == nt - 1
                axpy(25.0 * inv, fc(nt - 1));
                axpy(-48.0 * inv, fc(nt - 2));
                axpy(36.0 * inv, fc(nt - 3));
                axpy(-16.0 * inv, fc(nt - 4));
                axpy(3.0 * inv, fc(nt - 5));
            }
            // advection term, pointwise products of exact spectral derivatives
            const double* u1 = u.slice_comp(0, jt);
            const double* u2 = u.slice_comp(1, jt);
            std::copy(fc(jt), fc(jt) + F.comp_size(), tmp.data());
            derivative_comp(g, tmp.data(), 1, 0);
            for (size_t i = 0; i < F.comp_size(); ++i) o[i] += u1[i] * tmp[i];
            std::copy(fc(jt), fc(jt) + F.comp_size(), tmp.data());
            derivative_comp(g, tmp.data(), 0, 1);
            for (size_t i = 0; i < F.comp_size(); ++i) o[i] += u2[i] * tmp[i];
        }
    }
    return out;
}

// Mollification along the flow of u: out(x,t) = integral over s in [-ell_t,
// ell_t] of R(X_t(x, t+s), t+s) against a unit-mass flat bump in s. Quadrature
// weights are normalized on the nodes so a time-independent R with u = 0 is
// reproduced exactly.
inline SpaceTimeField mollify_along_flow(const SpaceTimeField& R, const Velocity& u,
                                         double ell_t, const TimeGrid& out_tg, int n_nodes = 33,
                                         int n_sub = 1) {
    if (2.0 * ell_t < 8.0 * R.tg.dt)
        throw ScaleBelowTimeGrid("ell_t = " + std::to_string(ell_t) + " spans fewer than 8 samples");
    if (out_tg.t0 - ell_t < R.tg.t0 - 1e-12 || out_tg.t_end() + ell_t > R.tg.t_end() + 1e-12)
        throw InvalidParams("mollify_along_flow output window not covered by input samples");
    GridSpec g;
    g.n = R.n;
    const int nc = ncomp(R.kind);
    FieldSampler rs(&R, g);
    std::vector<double> s_node(n_nodes), w_node(n_nodes);
    double wsum = 0.0;
    for (int m = 0; m < n_nodes; ++m) {
        s_node[m] = -ell_t + (m + 0.5) * (2.0 * ell_t / n_nodes);
        w_node[m] = bump(s_node[m] / ell_t);
        wsum += w_node[m];
    }
    for (double& w : w_node) w /= wsum;

    SpaceTimeField out(R.kind, R.n, out_tg);
    const int mid = n_nodes / 2;
    std::vector<double> val(nc);
    std::vector<std::array<double, 2>> pos(static_cast<size_t>(g.n) * g.n);
    for (int jt = 0; jt < out_tg.nt; ++jt) {
        double t = out_tg.t(jt);
        auto sweep = [&](int m_begin, int m_end, int step) {
            for (size_t idx = 0; idx < pos.size(); ++idx)
                pos[idx] = {static_cast<double>(idx / g.n) / g.n,
                            static_cast<double>(idx % g.n) / g.n};
            double s_prev = 0.0;
            for (int m = m_begin; m != m_end; m += step) {
                for (size_t idx = 0; idx < pos.size(); ++idx) {
                    detail::rk4_travel(u, pos[idx], t + s_prev, t + s_node[m], n_sub);
                    rs.eval_all(pos[idx][0], pos[idx][1], t + s_node[m], val.data());
                    for (int c = 0; c < nc; ++c)
                        out.slice_comp(c, jt)[idx] += w_node[m] * val[c];
                }
                s_prev = s_node[m];
            }
        };
        sweep(mid, n_nodes, 1);   // forward half, starting from the center node
        sweep(mid - 1, -1, -1);   // backward half
    }
    return out;
}

} // namespace nne
