#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>

#include "nne/nash.hpp"

using namespace nne;

namespace {

GridSpec grid(int n) {
    GridSpec g;
    g.n = n;
    return g;
}

double sup_diff(const Field2& a, const Field2& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        s = std::max(s, std::fabs(a.data[i] - b.data[i]));
    return s;
}

// composed wave ingredients over the analytic shear displacement
// Phi(x) = x + (0, -J cos(2 pi x1)); grad Phi = [[1,0],[s,1]], s = 2 pi J sin
struct ShearComposite {
    GridSpec g;
    double lam;
    double J;

    double s_at(int i) const { return kTwoPi * J * std::sin(kTwoPi * i / g.n); }

    std::array<double, 2> y_at(int i, int j) const {
        double x1 = static_cast<double>(i) / g.n, x2 = static_cast<double>(j) / g.n;
        return {lam * x1, lam * (x2 - J * std::cos(kTwoPi * x1))};
    }

    Field2 compose(const Direction& xi, double (*fn)(const Direction&, double, double)) const {
        Field2 out(FieldKind::Scalar, g.n);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                auto y = y_at(i, j);
                out.comp(0)[static_cast<size_t>(i) * g.n + j] = fn(xi, y[0], y[1]);
            }
        return out;
    }
};

} // namespace

TEST_CASE("low-mode filter keeps and drops exactly at the cutoff") {
    GridSpec g = grid(32);
    Field2 f(FieldKind::Scalar, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            double x1 = static_cast<double>(i) / g.n, x2 = static_cast<double>(j) / g.n;
            f.comp(0)[static_cast<size_t>(i) * g.n + j] =
                2.0 * std::cos(kTwoPi * 3.0 * x1) + 0.7 * std::sin(kTwoPi * 9.0 * x2);
        }
    Field2 lo = filter_low_modes(g, f, 9);
    Field2 keep(FieldKind::Scalar, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            keep.comp(0)[static_cast<size_t>(i) * g.n + j] =
                2.0 * std::cos(kTwoPi * 3.0 * i / g.n);
    REQUIRE(sup_diff(lo, keep) < 1e-12);
}

TEST_CASE("stream functions of the shear waves reproduce them under grad_perp") {
    // with identity flow and constant amplitude the wave is exactly the shear
    // flow evaluated at lam x, for every direction in the spanning set
    GridSpec g = grid(64);
    const double lam = kTwoPi * 3.0;
    for (const Direction& xi : kDirections) {
        Field2 psi(FieldKind::Scalar, g.n);
        Field2 wref(FieldKind::Vector, g.n);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                double y1 = lam * i / g.n, y2 = lam * j / g.n;
                size_t idx = static_cast<size_t>(i) * g.n + j;
                psi.comp(0)[idx] = stream(xi, y1, y2);
                auto w = shear_flow(xi, y1, y2);
                wref.comp(0)[idx] = w[0];
                wref.comp(1)[idx] = w[1];
            }
        Field2 ws = grad_perp(g, psi);
        ws *= 1.0 / lam;
        REQUIRE(sup_diff(ws, wref) < 1e-10);
    }
}

TEST_CASE("corrector split matches the stream-form wave over a sheared flow") {
    // w_s = lam^-1 grad_perp(a Psi(lam Phi)) against w_p + w_c with
    // w_p = a (grad Phi)^-1 W(lam Phi), w_c = lam^-1 Psi(lam Phi) grad_perp(a),
    // spatially varying amplitude so the corrector is genuinely nonzero
    GridSpec g = grid(128);
    ShearComposite sc{g, kTwoPi * 3.0, 0.02};
    Field2 a(FieldKind::Scalar, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            double x1 = static_cast<double>(i) / g.n, x2 = static_cast<double>(j) / g.n;
            a.comp(0)[static_cast<size_t>(i) * g.n + j] =
                0.5 + 0.2 * std::cos(kTwoPi * x1) + 0.1 * std::sin(kTwoPi * (x1 + x2));
        }
    Field2 ga = grad_perp(g, a);
    for (const Direction& xi : kDirections) {
        Field2 psif = sc.compose(xi, +[](const Direction& d, double y1, double y2) {
            return stream(d, y1, y2);
        });
        Field2 comp(FieldKind::Scalar, g.n);
        for (size_t i = 0; i < comp.comp_size(); ++i)
            comp.comp(0)[i] = a.comp(0)[i] * psif.comp(0)[i];
        Field2 ws = grad_perp(g, comp);
        ws *= 1.0 / sc.lam;
        Field2 wpc(FieldKind::Vector, g.n);
        for (int i = 0; i < g.n; ++i) {
            double s = sc.s_at(i);
            for (int j = 0; j < g.n; ++j) {
                size_t idx = static_cast<size_t>(i) * g.n + j;
                auto y = sc.y_at(i, j);
                auto w = shear_flow(xi, y[0], y[1]);
                // (grad Phi)^-1 = [[1,0],[-s,1]]
                double v1 = w[0];
                double v2 = w[1] - s * w[0];
                wpc.comp(0)[idx] = a.comp(0)[idx] * v1 +
                                   psif.comp(0)[idx] * ga.comp(0)[idx] / sc.lam;
                wpc.comp(1)[idx] = a.comp(0)[idx] * v2 +
                                   psif.comp(0)[idx] * ga.comp(1)[idx] / sc.lam;
            }
        }
        REQUIRE(wpc.sup_norm() > 0.5);
        double wc_size = 0.0;
        for (size_t i = 0; i < comp.comp_size(); ++i)
            wc_size = std::max(wc_size,
                               std::fabs(psif.comp(0)[i]) *
                                   std::hypot(ga.comp(0)[i], ga.comp(1)[i]) / sc.lam);
        REQUIRE(wc_size > 0.01); // the corrector is not degenerate here
        REQUIRE(sup_diff(ws, wpc) < 1e-8 * wpc.sup_norm());
    }
}

TEST_CASE("composed vorticity is transparent to the wave tensor") {
    GridSpec g = grid(128);
    ShearComposite sc{g, kTwoPi * 3.0, 0.03};
    for (const Direction& xi : kDirections) {
        Field2 om = sc.compose(xi, +[](const Direction& d, double y1, double y2) {
            return omega(d, y1, y2);
        });
        Field2 gom = gradient_scalar(g, om);
        double supA = 0.0, supv = 0.0, supc = 0.0;
        const double B11 = 0.6, B12 = -0.3, B22 = 0.2;
        for (int i = 0; i < g.n; ++i) {
            double s = sc.s_at(i);
            // A = (grad Phi)^-1 xi (x) xi (grad Phi)^-T, unit amplitude
            double v1 = xi.x1;
            double v2 = xi.x2 - s * xi.x1;
            double a11 = v1 * v1, a12 = v1 * v2, a22 = v2 * v2;
            supA = std::max({supA, std::fabs(a11), std::fabs(a12), std::fabs(a22)});
            for (int j = 0; j < g.n; ++j) {
                size_t idx = static_cast<size_t>(i) * g.n + j;
                double g1 = gom.comp(0)[idx], g2 = gom.comp(1)[idx];
                supv = std::max({supv, std::fabs(a11 * g1 + a12 * g2),
                                 std::fabs(a12 * g1 + a22 * g2)});
                supc = std::max({supc, std::fabs(B11 * g1 + B12 * g2),
                                 std::fabs(B12 * g1 + B22 * g2)});
            }
        }
        REQUIRE(supv / (sc.lam * supA) < 1e-8);
        // a fixed tensor in place of the wave tensor fails by orders of magnitude
        REQUIRE(supc / (sc.lam * 0.6) > 1e-2);
    }
}

TEST_CASE("low-frequency block of the wave's self-interaction rebuilds the stress") {
    // amplitudes from the coefficient solve on a smooth in-ball tensor field;
    // per direction, the low modes of w_p (x) w_p equal gamma^2 xi (x) xi, and
    // the directions sum back to the tensor itself
    GridSpec g = grid(64);
    const int lmode = 8;
    const double lam = kTwoPi * lmode;
    Field2 R(FieldKind::SymTensor, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            double x1 = static_cast<double>(i) / g.n, x2 = static_cast<double>(j) / g.n;
            size_t idx = static_cast<size_t>(i) * g.n + j;
            R.comp(0)[idx] = 1.0 + 0.10 * std::cos(kTwoPi * x1);
            R.comp(1)[idx] = 0.12 * std::sin(kTwoPi * (x1 + x2));
            R.comp(2)[idx] = 1.0 - 0.08 * std::cos(kTwoPi * 2.0 * x2);
        }
    Field2 acc(FieldKind::SymTensor, g.n);
    for (int d = 0; d < 4; ++d) {
        const Direction& xi = kDirections[d];
        Field2 wp(FieldKind::Vector, g.n);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                size_t idx = static_cast<size_t>(i) * g.n + j;
                SymMatrix2 m{R.comp(0)[idx], R.comp(1)[idx], R.comp(2)[idx]};
                double a = gamma_coefficients(m).gamma[d];
                auto w = shear_flow(xi, lam * i / g.n, lam * j / g.n);
                wp.comp(0)[idx] = a * w[0];
                wp.comp(1)[idx] = a * w[1];
            }
        Field2 outer(FieldKind::SymTensor, g.n);
        for (size_t i = 0; i < outer.comp_size(); ++i) {
            double w1 = wp.comp(0)[i], w2 = wp.comp(1)[i];
            outer.comp(0)[i] = w1 * w1;
            outer.comp(1)[i] = w1 * w2;
            outer.comp(2)[i] = w2 * w2;
        }
        acc += filter_low_modes(g, outer, lmode);
    }
    REQUIRE(sup_diff(acc, R) < 1e-10 * R.sup_norm());
}

TEST_CASE("erasure step on a narrow band closes the residual and its diagnostics") {
    StageConfig cfg;
    cfg.n_grid = 32;
    cfg.levels = 1;
    cfg.samples_regular = 2;
    cfg.samples_bump_per_level = 1;
    cfg.nash_scan_per_level = 3;
    NewtonBandResult nres = run_newton_band(cfg, 1.38, 1.52);
    NashReport rep = run_nash_step(nres);

    REQUIRE(rep.ball.frob_max < 0.45);
    REQUIRE(rep.ball.gamma_sq_min > 0.03);
    REQUIRE(rep.er.rel_sup < 1e-7);
    REQUIRE(rep.div_ubar < 1e-10);
    REQUIRE(rep.sup_ws > 1.0);

    bool saw_wave = false, saw_quiet = false;
    for (const auto& r : rep.samples) {
        if (r.center_wave) {
            saw_wave = true;
            REQUIRE(r.rel_split < 1e-8);
            REQUIRE(r.cancel_rel < 1e-3);
            REQUIRE(r.flow_rel < 0.02);
            REQUIRE(r.trans_rel < 1e-8);
            REQUIRE(r.trans_ctrl > 0.1);
            REQUIRE(r.div_comm_rel < 1e-8);
            if (r.transport_rel >= 0.0) REQUIRE(r.transport_rel < 1e-2);
            // the oscillation stress is far smaller than what it erases
            REQUIRE(r.sup_RO < 0.05 * r.sup_S);
        } else if (!r.has_wave) {
            saw_quiet = true;
            // no active amplitude anywhere on the stencil: the wave vanishes
            // and the residual reduces to the gluing-phase bookkeeping
            REQUIRE(r.sup_ws == 0.0);
            REQUIRE(r.sup_RL == 0.0);
            REQUIRE(r.er.res_sup < 1e-10 * rep.er.scale);
        }
        REQUIRE(r.mean_removed < 1e-8);
    }
    REQUIRE(saw_wave);
    REQUIRE(saw_quiet);

    REQUIRE(rep.scans.size() == 3);
    for (const auto& sc : rep.scans) {
        REQUIRE(sc.valid);
        REQUIRE(sc.sup_abar > 0.1);
        REQUIRE(sc.sup_abar < 1.0);
    }

    // desk-scale regime diagnostics are reported, not asserted: the advective
    // stress and the perturbation norm both overshoot their asymptotic targets
    REQUIRE(rep.pert_bound > 0.0);
    REQUIRE(rep.sup_RL > 0.0);
}
