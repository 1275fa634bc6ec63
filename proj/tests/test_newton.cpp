#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nne/newton.hpp"
#include "nne/picard.hpp"

using namespace nne;

namespace {

GridSpec grid(int n) {
    GridSpec g;
    g.n = n;
    return g;
}

Field2 mode_field(const GridSpec& g, int m1, int m2, double phase, double amp) {
    Field2 f(FieldKind::Scalar, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            double x1 = static_cast<double>(i) / g.n, x2 = static_cast<double>(j) / g.n;
            f.comp(0)[static_cast<size_t>(i) * g.n + j] =
                amp * std::cos(kTwoPi * (m1 * x1 + m2 * x2) + phase);
        }
    return f;
}

double sup_diff(const Field2& a, const Field2& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        s = std::max(s, std::fabs(a.data[i] - b.data[i]));
    return s;
}

StageConfig small_config() {
    StageConfig cfg;
    cfg.n_grid = 32;
    cfg.levels = 1;
    cfg.samples_regular = 2;
    cfg.samples_bump_per_level = 1;
    return cfg;
}

} // namespace

TEST_CASE("grid resampling is exact on shared modes and a strict round trip") {
    GridSpec g32 = grid(32);
    Field2 f = mode_field(g32, 3, -5, 0.4, 1.0);
    f += mode_field(g32, -7, 2, 1.1, 0.6);

    std::vector<double> up(48 * 48), back(32 * 32);
    resample_comp(32, f.comp(0), 48, up.data());
    resample_comp(48, up.data(), 32, back.data());
    double err = 0.0;
    for (size_t i = 0; i < back.size(); ++i)
        err = std::max(err, std::fabs(back[i] - f.comp(0)[i]));
    CHECK(err < 1e-13);

    // the upsampled field agrees with the same modes evaluated on the fine grid
    GridSpec g48 = grid(48);
    Field2 fine = mode_field(g48, 3, -5, 0.4, 1.0);
    fine += mode_field(g48, -7, 2, 1.1, 0.6);
    double err_up = 0.0;
    for (size_t i = 0; i < up.size(); ++i)
        err_up = std::max(err_up, std::fabs(up[i] - fine.comp(0)[i]));
    CHECK(err_up < 1e-13);

    // downsampling truncates modes at or above the coarse half resolution
    GridSpec g16 = grid(16);
    Field2 high = mode_field(g32, 9, 0, 0.0, 1.0);
    std::vector<double> down(16 * 16);
    resample_comp(32, high.comp(0), 16, down.data());
    double sup = 0.0;
    for (double v : down) sup = std::max(sup, std::fabs(v));
    CHECK(sup < 1e-13);
    (void)g16;
}

TEST_CASE("stream form and stress form of a divergence-free stress are mutually inverse") {
    GridSpec g = grid(32);
    Field2 theta = mode_field(g, 2, 3, 0.2, 0.8);
    theta += mode_field(g, -4, 1, 1.3, 0.5);
    theta += mode_field(g, 5, 0, 0.7, 0.3);

    Field2 R = stream_to_stress(g, theta);
    // trace free by construction
    double tr = 0.0;
    for (size_t i = 0; i < R.comp_size(); ++i)
        tr = std::max(tr, std::fabs(R.comp(0)[i] + R.comp(2)[i]));
    CHECK(tr == 0.0);

    // div R equals grad_perp theta
    Field2 d = divergence_sym(g, R);
    Field2 gp = grad_perp(g, theta);
    CHECK(sup_diff(d, gp) < 1e-11);

    // the round trip recovers theta, and the reverse round trip recovers R
    Field2 back = cz_curl_div(g, R);
    CHECK(sup_diff(back, theta) < 1e-12);
    Field2 R2 = stream_to_stress(g, cz_curl_div(g, R));
    CHECK(sup_diff(R2, R) < 1e-12);

    // the pressure potential of such a stress vanishes identically
    Field2 p = delta_inv_div_div(g, R);
    CHECK(p.sup_norm() < 1e-12);
}

TEST_CASE("band store interpolation is exact on cubic time profiles") {
    GridSpec g = grid(32);
    double dt = 0.01;
    BandStore store(24, 100, 120, dt); // coarser storage grid than the working grid
    Field2 shape = mode_field(g, 2, -1, 0.3, 1.0);
    auto poly = [](double t) { return 0.3 + t * (1.1 + t * (-0.8 + 0.25 * t)); };
    for (long j = 100; j <= 120; ++j) store.accumulate(j, shape, poly(j * dt - 1.05));

    for (double t : {1.013, 1.0671, 1.151, 1.199}) {
        Field2 out(FieldKind::Scalar, g.n);
        store.interp_add(t, 2.0, out);
        Field2 ref = shape;
        ref *= 2.0 * poly(t - 1.05);
        // float storage bounds the match
        CHECK(sup_diff(out, ref) < 1e-5);
    }

    // strided copy keeps the same values on the coarse lattice
    BandStore s2 = store.strided(2);
    CHECK(s2.dt() == 2 * dt);
    CHECK(s2.slice_sup(55) == store.slice_sup(110));
}

TEST_CASE("single-mode mollification matches the tabulated gain") {
    GridSpec g = grid(48);
    double ell = 0.07;
    Field2 f = mode_field(g, 4, 0, 0.0, 1.0);
    Field2 m = mollify_spatial(g, f, ell);
    double gain = mollifier_mode_gain(g, ell, 4);
    Field2 ref = f;
    ref *= gain;
    CHECK(sup_diff(m, ref) < 1e-12);
    CHECK(gain < 1.0);
    CHECK(gain > 0.5);
}

TEST_CASE("shear background amplitude integral matches direct quadrature") {
    StageConfig cfg = small_config();
    StageSchedule s = compute_schedule(cfg.params, cfg.q);
    GridSpec g = grid(32);
    BaseCase bc(s);
    ShearBackground bg(g, bc, 0.95);

    CHECK(bg.amp(0.0) == Catch::Approx(0.95 * std::sqrt(bc.delta0)));
    CHECK(bg.amp(2.5) == 0.0);

    double ta = 1.31, tb = 1.62;
    const int N = 20000;
    double h = (tb - ta) / N, acc = 0.0;
    for (int i = 0; i < N; ++i) {
        double a = ta + i * h;
        acc += (h / 6.0) * (bg.amp(a) + 4.0 * bg.amp(a + 0.5 * h) + bg.amp(a + h));
    }
    CHECK(bg.flow_J(ta, tb) == Catch::Approx(acc).margin(1e-9));

    double eps = 1e-5;
    double fd = (bg.amp(1.5 + eps) - bg.amp(1.5 - eps)) / (2 * eps);
    CHECK(bg.amp_dot(1.5) == Catch::Approx(fd).margin(1e-6));
}

TEST_CASE("stream solver reproduces the closed form when the background is off") {
    StageConfig cfg = small_config();
    StageSchedule s = compute_schedule(cfg.params, cfg.q);
    GridSpec g = grid(32);
    BaseCase bc(s);
    ShearBackground bg(g, bc, 1.0);
    REQUIRE(bg.amp(3.0) == 0.0); // outside the ramp the equation is d_t psi = F

    StreamSolver solver(g, &bg);
    Field2 psi0 = mode_field(g, 2, 1, 0.5, 0.4);
    Field2 F0 = mode_field(g, 3, 1, 0.1, 1.0);
    double om = 200.0, t0 = 3.0;
    StreamSolver::ForcingFn forcing = [&](double t, Field2& out) {
        out = F0;
        out *= std::cos(om * (t - t0));
    };
    solver.set_state(psi0);
    double dt = 5e-5;
    int steps = 200;
    for (int i = 0; i < steps; ++i) solver.step(t0 + i * dt, dt, forcing);
    double t1 = t0 + steps * dt;

    Field2 ref = psi0;
    ref.axpy(std::sin(om * (t1 - t0)) / om, F0);
    Field2 got(FieldKind::Scalar, g.n);
    solver.get_state(got);
    CHECK(sup_diff(got, ref) / ref.sup_norm() < 1e-8);
}

TEST_CASE("stream solver agrees with the characteristics-based fixed point solver") {
    StageConfig cfg = small_config();
    StageSchedule s = compute_schedule(cfg.params, cfg.q);
    GridSpec g = grid(32);
    BaseCase bc(s);
    ShearBackground bg(g, bc, 1.0);

    TimeGrid win{1.40, 0.004, 9};
    TimeGrid ext{win.t0 - 2 * win.dt, win.dt, win.nt + 4};
    SpaceTimeField ubg(FieldKind::Vector, g.n, ext);
    for (int j = 0; j < ext.nt; ++j) {
        Field2 u(FieldKind::Vector, g.n);
        double a = bg.amp(ext.t(j));
        for (int i = 0; i < g.n; ++i) {
            double v = a * bg.coscol()[i];
            for (int jj = 0; jj < g.n; ++jj)
                u.comp(1)[static_cast<size_t>(i) * g.n + jj] = v;
        }
        ubg.set_slice(j, u);
    }

    Field2 psi0 = mode_field(g, 1, 0, 0.7, 0.1);
    psi0 += mode_field(g, 1, 1, 0.3, 0.05);
    Field2 w0 = grad_perp(g, psi0);

    double om = 40.0;
    auto fpsi = [om](double t) { return 0.05 * std::sin(om * (t - 1.40)); };
    // velocity forcing grad_perp of a(t) cos(2 pi (x1 + 2 x2))
    SourceFn F = [&](double x1, double x2, double t, double* out) {
        double a = fpsi(t);
        double sn = std::sin(kTwoPi * (x1 + 2 * x2));
        out[0] = a * 2.0 * kTwoPi * sn;
        out[1] = a * -kTwoPi * sn;
    };
    PicardOptions opt;
    opt.max_iter = 60;
    PicardResult pr = picard_linearized_euler(g, ubg, w0, F, win, opt);
    REQUIRE(pr.last_delta < 1e-10);

    StreamSolver solver(g, &bg);
    Field2 Fshape = mode_field(g, 1, 2, 0.0, 1.0);
    StreamSolver::ForcingFn forcing = [&](double t, Field2& out) {
        out = Fshape;
        out *= fpsi(t);
    };
    solver.set_state(psi0);
    double tend = win.t(win.nt - 1);
    int steps = 128;
    double dt = (tend - win.t0) / steps;
    for (int i = 0; i < steps; ++i) solver.step(win.t0 + i * dt, dt, forcing);
    Field2 psi1(FieldKind::Scalar, g.n);
    solver.get_state(psi1);
    Field2 w1 = grad_perp(g, psi1);

    Field2 wp = pr.w.slice(win.nt - 1);
    double rel = sup_diff(w1, wp) / w1.sup_norm();
    CHECK(rel < 2e-3);
    CHECK(w1.sup_norm() > 0.1); // the comparison is not vacuous
}

TEST_CASE("stage time lattices are exact and bump decoding is consistent") {
    StageConfig cfg = small_config();
    StageSchedule s = compute_schedule(cfg.params, cfg.q);
    StageDiscretization d(cfg, s, 1.35, 1.55, 1);

    CHECK(d.tau == Catch::Approx(cfg.tau_factor * s.tau_q));
    CHECK(d.n_store_per_tau * d.sps * d.dt_solve == Catch::Approx(d.tau).epsilon(1e-14));
    CHECK(d.t_center(5) == Catch::Approx(5 * d.tau).epsilon(1e-14));

    // every decoded bump sits inside its profile's temporal support
    int hits = 0;
    for (int i = 0; i < 5000; ++i) {
        double t = 1.35 + 0.2 * i / 5000.0;
        auto b = d.bump_at(t);
        if (!b) continue;
        ++hits;
        CHECK(b->n >= 1);
        CHECK(b->n <= s.Gamma);
        CHECK(b->xi >= 0);
        CHECK(b->xi < 4);
        double g = d.profiles.g(b->xi, b->parity, b->n, d.mu * t);
        if (std::fabs(b->off) < 0.8 * d.profiles.eps) CHECK(g != 0.0);
    }
    // bumps cover n_profiles slots of half-width eps per unit of wrapped time
    double frac = static_cast<double>(hits) / 5000.0;
    CHECK(frac == Catch::Approx(d.profiles.n_profiles() * 2.0 * d.profiles.eps).margin(0.02));

    auto samples = d.choose_samples(3, 1, 1);
    bool found_bump = false;
    for (const auto& sp : samples) {
        CHECK(sp.js * d.dt_solve == Catch::Approx(sp.t));
        if (!sp.is_bump) continue;
        found_bump = true;
        auto b = d.bump_at(sp.t);
        REQUIRE(b.has_value());
        CHECK(b->n == sp.level);
        CHECK(b->parity == parity_of(sp.k));
    }
    CHECK(found_bump);
}

TEST_CASE("partition cutoffs with a widened crossfade still sum to one") {
    double tau = 0.1;
    CutoffFamily cf(tau, 0.25);
    for (double t : {-0.31, -0.12, 0.0, 0.033, 0.17, 0.26, 0.49}) {
        double acc = 0.0;
        for (int k = -5; k <= 8; ++k) {
            double c = cf.chi(k, t);
            acc += c * c;
            // chi~ is one wherever chi is active
            if (c != 0.0) CHECK(cf.chit(k, t) == 1.0);
        }
        CHECK(acc == Catch::Approx(1.0).epsilon(1e-12));
    }
    CHECK(cf.chi(0, 0.75 * tau) == 0.0);
    CHECK(cf.chit(0, 0.95 * tau) == 0.0);
    CHECK_THROWS_AS(CutoffFamily(tau, 0.45), InvalidParams);
}

TEST_CASE("one correction step on a narrow band contracts the stress") {
    StageConfig cfg = small_config();
    NewtonBandResult res = run_newton_band(cfg, 1.38, 1.52);
    REQUIRE(res.levels.size() == 1);
    const LevelReport& lr = res.levels[0];

    CHECK(lr.sup_R_in > 0.1);
    CHECK(lr.sup_R_out < 0.2 * lr.sup_R_in);
    CHECK(lr.ball.frob_max < 0.5);
    CHECK(lr.ball.gamma_sq_min > 0.0);
    CHECK(lr.er.rel_sup < 1e-3);
    CHECK(lr.er.scale > 0.01);
    REQUIRE(!lr.er.samples.empty());

    // the stored correction stream vanishes outside the band plus the spill
    auto supp = store_support(res.psi_sum, 1e-5);
    REQUIRE(!supp.empty());
    double margin = 2.5 * res.disc.tau;
    CHECK(supp.front().first > 1.38 - margin);
    CHECK(supp.back().second < 1.52 + margin);
    CHECK(res.theta_final.sup() > 0.0);
}
