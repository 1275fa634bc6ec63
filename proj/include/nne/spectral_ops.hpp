#pragma once

#include <array>
#include <complex>
#include <functional>

#include "field.hpp"

namespace nne {

// Internal 2x2 tensor slice (T11, T12, T21, T22); not a file-format kind.
struct Mat2Field {
    int n = 0;
    std::array<std::vector<double>, 4> comp; // row-major entries

    explicit Mat2Field(int n_ = 0) : n(n_) {
        for (auto& c : comp) c.assign(static_cast<size_t>(n_) * n_, 0.0);
    }
    double& at(int c, size_t idx) { return comp[c][idx]; }
    double at(int c, size_t idx) const { return comp[c][idx]; }
    size_t size() const { return static_cast<size_t>(n) * n; }
};

using Spectrum = std::vector<std::complex<double>>;

inline void to_spectrum(const GridSpec& g, const double* real, Spectrum& spec) {
    const Fft2& fft = Fft2::get(g.n);
    spec.resize(fft.spec_size());
    fft.forward(real, spec.data());
}

inline void from_spectrum(const GridSpec& g, const Spectrum& spec, double* real) {
    const Fft2& fft = Fft2::get(g.n);
    fft.backward(spec.data(), real);
}

// Apply f(m1, m2, value) to every retained spectral entry; zeroes the Nyquist
// rows/columns so odd derivatives stay real-antisymmetric.
template <class F>
inline void for_each_mode(const GridSpec& g, Spectrum& spec, F&& f) {
    const Fft2& fft = Fft2::get(g.n);
    for (int i = 0; i < g.n; ++i) {
        int m1 = fft.mode(i);
        for (int j = 0; j < fft.nc(); ++j) {
            int m2 = j; // r2c keeps the non-negative x2 frequencies
            std::complex<double>& v = spec[static_cast<size_t>(i) * fft.nc() + j];
            if (std::abs(m1) == g.n / 2 || m2 == g.n / 2) {
                v = 0.0;
                continue;
            }
            f(m1, m2, v);
        }
    }
}

inline void dealias_spectrum(const GridSpec& g, Spectrum& spec) {
    const int keep = g.keep_mode();
    for_each_mode(g, spec, [&](int m1, int m2, std::complex<double>& v) {
        if (std::abs(m1) > keep || std::abs(m2) > keep) v = 0.0;
    });
}

inline void dealias(const GridSpec& g, Field2& f) {
    Spectrum s;
    for (int c = 0; c < ncomp(f.kind); ++c) {
        to_spectrum(g, f.comp(c), s);
        dealias_spectrum(g, s);
        from_spectrum(g, s, f.comp(c));
    }
}

// Spectral partial derivative d^a1_1 d^a2_2 applied to one component in place.
inline void derivative_comp(const GridSpec& g, double* comp, int a1, int a2) {
    Spectrum s;
    to_spectrum(g, comp, s);
    for_each_mode(g, s, [&](int m1, int m2, std::complex<double>& v) {
        std::complex<double> f1(0.0, kTwoPi * m1), f2(0.0, kTwoPi * m2);
        std::complex<double> fac(1.0, 0.0);
        for (int r = 0; r < a1; ++r) fac *= f1;
        for (int r = 0; r < a2; ++r) fac *= f2;
        v *= fac;
    });
    from_spectrum(g, s, comp);
}

inline Field2 derivative(const GridSpec& g, const Field2& f, int a1, int a2) {
    Field2 out = f;
    for (int c = 0; c < ncomp(f.kind); ++c) derivative_comp(g, out.comp(c), a1, a2);
    return out;
}

// Pointwise product with 2/3-rule alias control on the result.
inline void product_comp(const GridSpec& g, const double* a, const double* b, double* out) {
    const size_t sz = static_cast<size_t>(g.n) * g.n;
    for (size_t i = 0; i < sz; ++i) out[i] = a[i] * b[i];
    Spectrum s;
    to_spectrum(g, out, s);
    dealias_spectrum(g, s);
    from_spectrum(g, s, out);
}

inline void require_mean_zero(const Field2& f, const char* what) {
    for (int c = 0; c < ncomp(f.kind); ++c) {
        double m = std::fabs(f.mean(c));
        double scale = f.sup_norm();
        if (m > 1e-10 * std::max(scale, 1e-300))
            throw NonZeroMean(std::string(what) + ": component " + std::to_string(c) +
                              " mean " + std::to_string(m));
    }
}

inline Field2 inverse_laplacian(const GridSpec& g, const Field2& f) {
    require_mean_zero(f, "inverse_laplacian");
    Field2 out = f;
    Spectrum s;
    to_spectrum(g, out.comp(0), s);
    for_each_mode(g, s, [&](int m1, int m2, std::complex<double>& v) {
        if (m1 == 0 && m2 == 0) {
            v = 0.0;
            return;
        }
        double k2 = kTwoPi * kTwoPi * (static_cast<double>(m1) * m1 + static_cast<double>(m2) * m2);
        v /= -k2;
    });
    from_spectrum(g, s, out.comp(0));
    return out;
}

// Leray projection onto divergence-free fields; the spatial mean is untouched.
inline Field2 leray_project(const GridSpec& g, const Field2& v) {
    Field2 out(FieldKind::Vector, g.n);
    Spectrum s1, s2;
    to_spectrum(g, v.comp(0), s1);
    to_spectrum(g, v.comp(1), s2);
    const Fft2& fft = Fft2::get(g.n);
    for (int i = 0; i < g.n; ++i) {
        int m1 = fft.mode(i);
        for (int j = 0; j < fft.nc(); ++j) {
            int m2 = j;
            size_t idx = static_cast<size_t>(i) * fft.nc() + j;
            if ((m1 == 0 && m2 == 0)) continue;
            if (std::abs(m1) == g.n / 2 || m2 == g.n / 2) {
                s1[idx] = 0.0;
                s2[idx] = 0.0;
                continue;
            }
            double kk = static_cast<double>(m1) * m1 + static_cast<double>(m2) * m2;
            std::complex<double> kdotv = (static_cast<double>(m1) * s1[idx] +
                                          static_cast<double>(m2) * s2[idx]) / kk;
            s1[idx] -= static_cast<double>(m1) * kdotv;
            s2[idx] -= static_cast<double>(m2) * kdotv;
        }
    }
    from_spectrum(g, s1, out.comp(0));
    from_spectrum(g, s2, out.comp(1));
    return out;
}

inline Field2 divergence_vec(const GridSpec& g, const Field2& v) {
    Field2 out(FieldKind::Scalar, g.n);
    Field2 d1 = v, d2 = v;
    derivative_comp(g, d1.comp(0), 1, 0);
    derivative_comp(g, d2.comp(1), 0, 1);
    for (size_t i = 0; i < out.comp_size(); ++i) out.data[i] = d1.comp(0)[i] + d2.comp(1)[i];
    return out;
}

// (div T)_i = d_j T_ij for a symmetric tensor stored as (T11, T12, T22).
inline Field2 divergence_sym(const GridSpec& g, const Field2& T) {
    Field2 out(FieldKind::Vector, g.n);
    std::vector<double> tmp(T.comp_size());
    auto add_deriv = [&](const double* src, int a1, int a2, double* dst) {
        std::copy(src, src + T.comp_size(), tmp.data());
        derivative_comp(g, tmp.data(), a1, a2);
        for (size_t i = 0; i < T.comp_size(); ++i) dst[i] += tmp[i];
    };
    add_deriv(T.comp(0), 1, 0, out.comp(0)); // d1 T11
    add_deriv(T.comp(1), 0, 1, out.comp(0)); // d2 T12
    add_deriv(T.comp(1), 1, 0, out.comp(1)); // d1 T12
    add_deriv(T.comp(2), 0, 1, out.comp(1)); // d2 T22
    return out;
}

inline Field2 gradient_scalar(const GridSpec& g, const Field2& f) {
    Field2 out(FieldKind::Vector, g.n);
    std::copy(f.comp(0), f.comp(0) + f.comp_size(), out.comp(0));
    std::copy(f.comp(0), f.comp(0) + f.comp_size(), out.comp(1));
    derivative_comp(g, out.comp(0), 1, 0);
    derivative_comp(g, out.comp(1), 0, 1);
    return out;
}

// grad_perp(psi) = (-d2 psi, d1 psi); divergence-free by construction.
inline Field2 grad_perp(const GridSpec& g, const Field2& psi) {
    Field2 out(FieldKind::Vector, g.n);
    std::copy(psi.comp(0), psi.comp(0) + psi.comp_size(), out.comp(0));
    std::copy(psi.comp(0), psi.comp(0) + psi.comp_size(), out.comp(1));
    derivative_comp(g, out.comp(0), 0, 1);
    for (size_t i = 0; i < out.comp_size(); ++i) out.comp(0)[i] = -out.comp(0)[i];
    derivative_comp(g, out.comp(1), 1, 0);
    return out;
}

// Full gradient of a vector field: (grad u)_{ij} = d_j u_i.
inline Mat2Field gradient_vec(const GridSpec& g, const Field2& u) {
    Mat2Field out(g.n);
    std::vector<double> tmp(u.comp_size());
    auto put = [&](const double* src, int a1, int a2, int c) {
        std::copy(src, src + u.comp_size(), tmp.data());
        derivative_comp(g, tmp.data(), a1, a2);
        std::copy(tmp.begin(), tmp.end(), out.comp[c].begin());
    };
    put(u.comp(0), 1, 0, 0); // d1 u1
    put(u.comp(0), 0, 1, 1); // d2 u1
    put(u.comp(1), 1, 0, 2); // d1 u2
    put(u.comp(1), 0, 1, 3); // d2 u2
    return out;
}

// Inverse divergence (R u)^{ij} = Lap^{-1}(d_i u^j + d_j u^i - div u delta_ij):
// symmetric, trace-free, with div(R u) = u for mean-zero u.
inline Field2 inverse_divergence(const GridSpec& g, const Field2& u) {
    require_mean_zero(u, "inverse_divergence");
    Field2 out(FieldKind::SymTensor, g.n);
    Spectrum s1, s2;
    to_spectrum(g, u.comp(0), s1);
    to_spectrum(g, u.comp(1), s2);
    const Fft2& fft = Fft2::get(g.n);
    Spectrum t11(fft.spec_size()), t12(fft.spec_size()), t22(fft.spec_size());
    for (int i = 0; i < g.n; ++i) {
        int m1 = fft.mode(i);
        for (int j = 0; j < fft.nc(); ++j) {
            int m2 = j;
            size_t idx = static_cast<size_t>(i) * fft.nc() + j;
            if ((m1 == 0 && m2 == 0) || std::abs(m1) == g.n / 2 || m2 == g.n / 2) {
                t11[idx] = t12[idx] = t22[idx] = 0.0;
                continue;
            }
            std::complex<double> ik1(0.0, kTwoPi * m1), ik2(0.0, kTwoPi * m2);
            double k2 = kTwoPi * kTwoPi * (static_cast<double>(m1) * m1 + static_cast<double>(m2) * m2);
            std::complex<double> divu = ik1 * s1[idx] + ik2 * s2[idx];
            t11[idx] = (2.0 * ik1 * s1[idx] - divu) / -k2;
            t12[idx] = (ik1 * s2[idx] + ik2 * s1[idx]) / -k2;
            t22[idx] = (2.0 * ik2 * s2[idx] - divu) / -k2;
        }
    }
    from_spectrum(g, t11, out.comp(0));
    from_spectrum(g, t12, out.comp(1));
    from_spectrum(g, t22, out.comp(2));
    return out;
}

// Lap^{-1} d_i d_j T_ij for a symmetric tensor (the pressure-type multiplier).
inline Field2 delta_inv_div_div(const GridSpec& g, const Field2& T) {
    Field2 out(FieldKind::Scalar, g.n);
    Spectrum s11, s12, s22;
    to_spectrum(g, T.comp(0), s11);
    to_spectrum(g, T.comp(1), s12);
    to_spectrum(g, T.comp(2), s22);
    const Fft2& fft = Fft2::get(g.n);
    Spectrum r(fft.spec_size());
    for (int i = 0; i < g.n; ++i) {
        int m1 = fft.mode(i);
        for (int j = 0; j < fft.nc(); ++j) {
            int m2 = j;
            size_t idx = static_cast<size_t>(i) * fft.nc() + j;
            if ((m1 == 0 && m2 == 0) || std::abs(m1) == g.n / 2 || m2 == g.n / 2) {
                r[idx] = 0.0;
                continue;
            }
            double kk = static_cast<double>(m1) * m1 + static_cast<double>(m2) * m2;
            // (-k_i k_j T_ij) / (-|k|^2) with the 2*pi factors cancelling
            r[idx] = (static_cast<double>(m1) * m1 * s11[idx] +
                      2.0 * static_cast<double>(m1) * m2 * s12[idx] +
                      static_cast<double>(m2) * m2 * s22[idx]) / kk;
        }
    }
    from_spectrum(g, r, out.comp(0));
    return out;
}

inline void subtract_mean(Field2& f) {
    for (int c = 0; c < ncomp(f.kind); ++c) {
        double m = f.mean(c);
        double* p = f.comp(c);
        for (size_t i = 0; i < f.comp_size(); ++i) p[i] -= m;
    }
}

// Spectral weights of the flat-bump mollifier zeta_ell, normalized so the
// zero mode is exactly 1 (mean preservation).
inline std::vector<double> mollifier_weights(const GridSpec& g, double ell) {
    if (ell <= g.h())
        throw ScaleBelowGrid("mollifier scale " + std::to_string(ell) + " <= grid spacing " +
                             std::to_string(g.h()));
    Field2 ker(FieldKind::Scalar, g.n);
    for (int i = 0; i < g.n; ++i) {
        double x1 = static_cast<double>(i) / g.n;
        if (x1 > 0.5) x1 -= 1.0;
        for (int j = 0; j < g.n; ++j) {
            double x2 = static_cast<double>(j) / g.n;
            if (x2 > 0.5) x2 -= 1.0;
            double r2 = (x1 * x1 + x2 * x2) / (ell * ell);
            ker.at(0, i, j) = (r2 < 1.0) ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
        }
    }
    Spectrum s;
    to_spectrum(g, ker.comp(0), s);
    double z0 = s[0].real();
    std::vector<double> w(s.size());
    for (size_t i = 0; i < s.size(); ++i) w[i] = s[i].real() / z0;
    return w;
}

inline Field2 mollify_spatial(const GridSpec& g, const Field2& f, const std::vector<double>& w) {
    Field2 out = f;
    Spectrum s;
    for (int c = 0; c < ncomp(f.kind); ++c) {
        to_spectrum(g, out.comp(c), s);
        for (size_t i = 0; i < s.size(); ++i) s[i] *= w[i];
        from_spectrum(g, s, out.comp(c));
    }
    return out;
}

inline Field2 mollify_spatial(const GridSpec& g, const Field2& f, double ell) {
    return mollify_spatial(g, f, mollifier_weights(g, ell));
}

} // namespace nne
