#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "nne/spectral_ops.hpp"

using namespace nne;

namespace {

GridSpec grid(int n) {
    GridSpec g;
    g.n = n;
    return g;
}

Field2 sample_scalar(const GridSpec& g, const std::function<double(double, double)>& f) {
    Field2 out(FieldKind::Scalar, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            out.at(0, i, j) = f(static_cast<double>(i) / g.n, static_cast<double>(j) / g.n);
    return out;
}

double max_diff(const Field2& a, const Field2& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

// Random band-limited mean-zero scalar with modes up to max_mode.
Field2 random_scalar(const GridSpec& g, std::mt19937& rng, int max_mode) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Field2 out(FieldKind::Scalar, g.n);
    for (int m1 = -max_mode; m1 <= max_mode; ++m1)
        for (int m2 = -max_mode; m2 <= max_mode; ++m2) {
            if (m1 == 0 && m2 == 0) continue;
            if (m1 < 0 || (m1 == 0 && m2 < 0)) continue; // one of each conjugate pair
            double ar = unif(rng), ai = unif(rng);
            for (int i = 0; i < g.n; ++i)
                for (int j = 0; j < g.n; ++j) {
                    double ph = kTwoPi * (m1 * static_cast<double>(i) / g.n +
                                          m2 * static_cast<double>(j) / g.n);
                    out.at(0, i, j) += ar * std::cos(ph) - ai * std::sin(ph);
                }
        }
    return out;
}

} // namespace

TEST_CASE("spectral derivative on closed forms") {
    GridSpec g = grid(32);
    // cos(2 pi x1) -> -2 pi sin(2 pi x1)
    Field2 f = sample_scalar(g, [](double x1, double) { return std::cos(kTwoPi * x1); });
    Field2 d = derivative(g, f, 1, 0);
    Field2 want = sample_scalar(g, [](double x1, double) { return -kTwoPi * std::sin(kTwoPi * x1); });
    CHECK(max_diff(d, want) < 1e-11);

    // constant -> 0
    Field2 c = sample_scalar(g, [](double, double) { return 3.5; });
    CHECK(derivative(g, c, 1, 0).sup_norm() < 1e-12);

    // d1 d2 of cos(2 pi x1) cos(4 pi x2) = (2 pi)(4 pi) sin(2 pi x1) sin(4 pi x2)
    Field2 p = sample_scalar(
        g, [](double x1, double x2) { return std::cos(kTwoPi * x1) * std::cos(2 * kTwoPi * x2); });
    Field2 d12 = derivative(g, p, 1, 1);
    Field2 w12 = sample_scalar(g, [](double x1, double x2) {
        return kTwoPi * 2 * kTwoPi * std::sin(kTwoPi * x1) * std::sin(2 * kTwoPi * x2);
    });
    CHECK(max_diff(d12, w12) < 1e-9);
}

TEST_CASE("FFT round trip on band-limited fields") {
    GridSpec g = grid(64);
    std::mt19937 rng(7);
    Field2 f = random_scalar(g, rng, 10);
    Spectrum s;
    to_spectrum(g, f.comp(0), s);
    Field2 back(FieldKind::Scalar, g.n);
    from_spectrum(g, s, back.comp(0));
    CHECK(max_diff(f, back) < 1e-12 * std::max(1.0, f.sup_norm()));
}

TEST_CASE("inverse laplacian") {
    GridSpec g = grid(32);
    // cos(2 pi x2) -> -cos(2 pi x2)/(4 pi^2)
    Field2 f = sample_scalar(g, [](double, double x2) { return std::cos(kTwoPi * x2); });
    Field2 inv = inverse_laplacian(g, f);
    Field2 want = sample_scalar(g, [](double, double x2) {
        return -std::cos(kTwoPi * x2) / (kTwoPi * kTwoPi);
    });
    CHECK(max_diff(inv, want) < 1e-13);

    // zero -> zero
    Field2 z(FieldKind::Scalar, g.n);
    CHECK(inverse_laplacian(g, z).sup_norm() == 0.0);

    // sin(2 pi x1) + sin(4 pi x2) -> mode-wise division
    Field2 f2 = sample_scalar(g, [](double x1, double x2) {
        return std::sin(kTwoPi * x1) + std::sin(2 * kTwoPi * x2);
    });
    Field2 want2 = sample_scalar(g, [](double x1, double x2) {
        return -std::sin(kTwoPi * x1) / (kTwoPi * kTwoPi) -
               std::sin(2 * kTwoPi * x2) / (4 * kTwoPi * kTwoPi);
    });
    CHECK(max_diff(inverse_laplacian(g, f2), want2) < 1e-13);

    // nonzero mean is rejected
    Field2 bad = sample_scalar(g, [](double, double) { return 1.0; });
    CHECK_THROWS_AS(inverse_laplacian(g, bad), NonZeroMean);
}

TEST_CASE("Leray projection") {
    GridSpec g = grid(32);
    // gradient fields are annihilated
    Field2 f = sample_scalar(g, [](double x1, double) { return std::cos(kTwoPi * x1); });
    Field2 gradf = gradient_scalar(g, f);
    CHECK(leray_project(g, gradf).sup_norm() < 1e-11);

    // divergence-free fields are fixed
    Field2 shear(FieldKind::Vector, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            shear.at(0, i, j) = std::sin(kTwoPi * static_cast<double>(j) / g.n);
    Field2 proj = leray_project(g, shear);
    CHECK(max_diff(proj, shear) < 1e-12);

    // (cos 2 pi x1, cos 2 pi x1) -> (0, cos 2 pi x1): k = (2 pi, 0) keeps only comp 2
    Field2 v(FieldKind::Vector, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            double c = std::cos(kTwoPi * static_cast<double>(i) / g.n);
            v.at(0, i, j) = c;
            v.at(1, i, j) = c;
        }
    Field2 pv = leray_project(g, v);
    Field2 want(FieldKind::Vector, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            want.at(1, i, j) = std::cos(kTwoPi * static_cast<double>(i) / g.n);
    CHECK(max_diff(pv, want) < 1e-12);

    // idempotence on a random field
    std::mt19937 rng(11);
    Field2 r(FieldKind::Vector, g.n);
    Field2 r0 = random_scalar(g, rng, 6), r1 = random_scalar(g, rng, 6);
    std::copy(r0.comp(0), r0.comp(0) + r0.comp_size(), r.comp(0));
    std::copy(r1.comp(0), r1.comp(0) + r1.comp_size(), r.comp(1));
    Field2 p1 = leray_project(g, r);
    Field2 p2 = leray_project(g, p1);
    CHECK(max_diff(p1, p2) < 1e-12 * std::max(1.0, p1.sup_norm()));
    CHECK(divergence_vec(g, p1).sup_norm() < 1e-10 * std::max(1.0, p1.sup_norm()));
}

TEST_CASE("inverse divergence") {
    GridSpec g = grid(32);
    // u = (sin 2 pi x2, 0) -> [[0, -cos(2 pi x2)/(2 pi)], [., 0]]  (hand Fourier computation)
    Field2 u(FieldKind::Vector, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            u.at(0, i, j) = std::sin(kTwoPi * static_cast<double>(j) / g.n);
    Field2 T = inverse_divergence(g, u);
    Field2 want(FieldKind::SymTensor, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            want.at(1, i, j) = -std::cos(kTwoPi * static_cast<double>(j) / g.n) / kTwoPi;
    CHECK(max_diff(T, want) < 1e-13);

    // zero -> zero
    Field2 z(FieldKind::Vector, g.n);
    CHECK(inverse_divergence(g, z).sup_norm() == 0.0);

    // div(R u) = u and trace-free for random band-limited mean-zero u
    std::mt19937 rng(23);
    for (int rep = 0; rep < 5; ++rep) {
        Field2 v(FieldKind::Vector, g.n);
        Field2 a = random_scalar(g, rng, 8), b = random_scalar(g, rng, 8);
        std::copy(a.comp(0), a.comp(0) + a.comp_size(), v.comp(0));
        std::copy(b.comp(0), b.comp(0) + b.comp_size(), v.comp(1));
        Field2 R = inverse_divergence(g, v);
        Field2 divR = divergence_sym(g, R);
        CHECK(max_diff(divR, v) < 1e-10 * v.sup_norm());
        double tr = 0.0;
        for (size_t i = 0; i < R.comp_size(); ++i)
            tr = std::max(tr, std::fabs(R.comp(0)[i] + R.comp(2)[i]));
        CHECK(tr < 1e-12 * std::max(1.0, R.sup_norm()));
    }
}

TEST_CASE("grad_perp is divergence-free") {
    GridSpec g = grid(64);
    std::mt19937 rng(5);
    Field2 psi = random_scalar(g, rng, 12);
    Field2 w = grad_perp(g, psi);
    CHECK(divergence_vec(g, w).sup_norm() < 1e-12 * std::max(1.0, w.sup_norm() * g.n));
}

TEST_CASE("spatial mollifier") {
    GridSpec g = grid(64);
    double ell = 0.1;
    // constants are preserved
    Field2 c = sample_scalar(g, [](double, double) { return 2.25; });
    Field2 mc = mollify_spatial(g, c, ell);
    CHECK(max_diff(mc, c) < 1e-12);

    // single mode rescales by the kernel transform at that mode
    auto w = mollifier_weights(g, ell);
    Field2 f = sample_scalar(g, [](double x1, double) { return std::cos(3 * kTwoPi * x1); });
    Field2 mf = mollify_spatial(g, f, ell);
    const Fft2& fft = Fft2::get(g.n);
    double w3 = w[static_cast<size_t>(3) * fft.nc()]; // mode (3, 0)
    Field2 want = sample_scalar(g, [&](double x1, double) { return w3 * std::cos(3 * kTwoPi * x1); });
    CHECK(max_diff(mf, want) < 1e-12);

    // mean preserved for a generic field
    std::mt19937 rng(3);
    Field2 r = random_scalar(g, rng, 10);
    r.at(0, 0, 0) += 0.0; // mean zero already; shift it
    for (size_t i = 0; i < r.comp_size(); ++i) r.comp(0)[i] += 0.7;
    Field2 mr = mollify_spatial(g, r, ell);
    CHECK(std::fabs(mr.mean(0) - r.mean(0)) < 1e-12);

    // ell below grid spacing is rejected
    CHECK_THROWS_AS(mollifier_weights(g, 0.5 * g.h()), ScaleBelowGrid);

    // quadratic decay: || f - f*zeta_ell ||_0 ~ ell^2 for a single low mode
    std::vector<double> ells = {0.02, 0.04, 0.08}, errs;
    for (double l : ells) {
        Field2 m = mollify_spatial(g, f, l);
        errs.push_back(max_diff(m, f));
    }
    double slope = std::log(errs[2] / errs[0]) / std::log(ells[2] / ells[0]);
    CHECK(slope == Catch::Approx(2.0).margin(0.35));
}

TEST_CASE("multiplier operators commute with half-grid translation") {
    GridSpec g = grid(32);
    std::mt19937 rng(17);
    Field2 f = random_scalar(g, rng, 8);
    auto roll_half = [&](const Field2& a) {
        Field2 out = a;
        int s = g.n / 2;
        for (int c = 0; c < ncomp(a.kind); ++c)
            for (int i = 0; i < g.n; ++i)
                for (int j = 0; j < g.n; ++j)
                    out.at(c, i, j) = a.at(c, (i + s) % g.n, (j + s) % g.n);
        return out;
    };
    Field2 a = inverse_laplacian(g, roll_half(f));
    Field2 b = roll_half(inverse_laplacian(g, f));
    CHECK(max_diff(a, b) < 1e-12 * std::max(1.0, a.sup_norm()));
}
