#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "nne/temporal.hpp"

using namespace nne;

TEST_CASE("cut-off partition of unity") {
    CutoffFamily cf(0.1);
    // chi_k(t_k) = 1, neighbors vanish at t_k
    CHECK(cf.chi(0, 0.0) == 1.0);
    CHECK(cf.chi(1, 0.0) == 0.0);
    CHECK(cf.chi(-1, 0.0) == 0.0);

    // sum of squares = 1 at 10^4 deterministic pseudo-random times
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        double t = unif(rng);
        double s = 0.0;
        auto [k0, k1] = cf.k_range(t, t);
        for (int k = k0; k <= k1; ++k) {
            double c = cf.chi(k, t);
            s += c * c;
        }
        worst = std::max(worst, std::fabs(s - 1.0));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("cut-off support geometry") {
    CutoffFamily cf(0.1);
    double tau = cf.tau;
    // supp chi_k inside (t_k - 2/3 tau, t_k + 2/3 tau)
    CHECK(cf.chi(0, -2.0 / 3.0 * tau) == 0.0);
    CHECK(cf.chi(0, 2.0 / 3.0 * tau) == 0.0);
    // chi_{k-1} and chi_{k+1} have disjoint supports: sample products
    for (int i = 0; i <= 200; ++i) {
        double t = -tau + 2.0 * tau * i / 200;
        CHECK(cf.chi(-1, t) * cf.chi(1, t) == 0.0);
    }
    // chi~ = 1 on supp chi, hence chi chi~ = chi; supp chi~ in (t_k - tau, t_k + tau)
    for (int i = 0; i <= 500; ++i) {
        double t = -tau + 2.0 * tau * i / 500;
        double c = cf.chi(0, t);
        CHECK(cf.chit(0, t) * c == c);
    }
    CHECK(cf.chit(0, -tau) == 0.0);
    CHECK(cf.chit(0, tau) == 0.0);
    CHECK(cf.chit(0, 0.5 * tau) == 1.0);
}

TEST_CASE("cut-off derivative scaling and finite-difference consistency") {
    for (double tau : {0.05, 0.2}) {
        CutoffFamily cf(tau);
        double c1 = 0.0, c2 = 0.0, fd_err = 0.0;
        for (int i = 1; i < 2000; ++i) {
            double t = -tau + 2.0 * tau * i / 2000;
            c1 = std::max(c1, std::fabs(cf.chi_dot(0, t)) * tau);
            c2 = std::max(c2, std::fabs(cf.chi_ddot(0, t)) * tau * tau);
            double h = tau * 1e-5;
            double fd = (cf.chi(0, t + h) - cf.chi(0, t - h)) / (2 * h);
            fd_err = std::max(fd_err, std::fabs(fd - cf.chi_dot(0, t)));
            double fd2 = (cf.chit(0, t + h) - cf.chit(0, t - h)) / (2 * h);
            fd_err = std::max(fd_err, std::fabs(fd2 - cf.chit_dot(0, t)));
        }
        // |d^N chi| <= C_N tau^-N with a modest measured constant
        CHECK(c1 < 20.0);
        CHECK(c2 < 500.0);
        CHECK(fd_err < 1e-4 / tau);
    }
}

TEST_CASE("profile family geometry") {
    // |Lambda| = 3, Gamma = 2 -> 12 profiles at spacing 1/24, support width < 1/24
    ProfileFamily pf(3, 2);
    CHECK(pf.n_profiles() == 12);
    CHECK(pf.slot == Catch::Approx(1.0 / 24.0));
    CHECK(2 * pf.eps < pf.slot);

    // unit L^2 mass per profile (quadrature tolerance 1e-10)
    const int N = 200000;
    for (int xi : {0, 2})
        for (int par : {0, 1}) {
            double s = 0.0;
            for (int i = 0; i < N; ++i) {
                double t = (i + 0.5) / N;
                double gv = pf.g(xi, par, 1, t);
                s += gv * gv / N;
            }
            CHECK(s == Catch::Approx(1.0).margin(1e-9));
        }

    // distinct profiles have pointwise-product zero
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 5000; ++trial) {
        double t = unif(rng);
        double p = pf.g(0, 0, 1, t) * pf.g(1, 0, 1, t);
        double q = pf.g(0, 0, 1, t) * pf.g(0, 1, 1, t);
        double r = pf.g(0, 0, 1, t) * pf.g(0, 0, 2, t);
        CHECK(p == 0.0);
        CHECK(q == 0.0);
        CHECK(r == 0.0);
    }
}

TEST_CASE("profile primitives") {
    ProfileFamily pf(3, 4);
    // f_prim(0) = 0 and f_prim(1) = 0 (unit mass of g^2)
    CHECK(pf.f1(0, 0, 1, 0.0) == 0.0);
    CHECK(std::fabs(pf.f1(0, 0, 1, 1.0 - 1e-12)) < 1e-9);

    // f1' = f by finite differences
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst = 0.0, worst2 = 0.0;
    for (int trial = 0; trial < 2000; ++trial) {
        double t = unif(rng);
        double h = 1e-6;
        double fd = (pf.f1(1, 0, 2, t + h) - pf.f1(1, 0, 2, t - h)) / (2 * h);
        worst = std::max(worst, std::fabs(fd - pf.f(1, 0, 2, t)));
        // f2' = f1 - mean(f1)
        double fd2 = (pf.f2(1, 0, 2, t + h) - pf.f2(1, 0, 2, t - h)) / (2 * h);
        worst2 = std::max(worst2, std::fabs(fd2 - (pf.f1(1, 0, 2, t) - pf.f1_mean(1, 0, 2))));
    }
    CHECK(worst < 1e-5);
    CHECK(worst2 < 1e-5);

    // periodicity of both primitives
    for (double t : {0.13, 0.47, 0.88}) {
        CHECK(pf.f1(2, 1, 3, t + 1.0) == Catch::Approx(pf.f1(2, 1, 3, t)).margin(1e-12));
        CHECK(pf.f2(2, 1, 3, t + 1.0) == Catch::Approx(pf.f2(2, 1, 3, t)).margin(1e-12));
    }
}

TEST_CASE("active indices") {
    double tau = 0.1;
    // zero field -> empty set
    TimeGrid tg{-1.0, 0.01, 201};
    SpaceTimeField z(FieldKind::Scalar, 8, tg);
    CHECK(active_indices(z, tau).empty());

    // support in one slice at t = 0 -> {-1, 0, 1}
    SpaceTimeField one(FieldKind::Scalar, 8, tg);
    one.slice_comp(0, 100)[0] = 1.0; // t = -1 + 100*0.01 = 0
    auto ks = active_indices(one, tau);
    CHECK(ks == std::vector<int>{-1, 0, 1});

    // full support -> all k covering the grid
    SpaceTimeField full(FieldKind::Scalar, 8, tg);
    for (double& v : full.data) v = 1.0;
    auto ka = active_indices(full, tau);
    CHECK(ka.front() <= -10);
    CHECK(ka.back() >= 10);
}
