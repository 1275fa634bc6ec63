#pragma once

#include <array>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace nne {

struct SymMatrix2 {
    double r11 = 0, r12 = 0, r22 = 0;

    double frob_dist_to_id() const {
        double d11 = r11 - 1.0, d22 = r22 - 1.0;
        return std::sqrt(d11 * d11 + 2.0 * r12 * r12 + d22 * d22);
    }
};

struct Direction {
    int x1, x2;
    std::array<double, 2> perp() const { return {static_cast<double>(-x2), static_cast<double>(x1)}; }
};

// Integer spanning set. Both diagonal directions are needed: the off-diagonal
// entry of R can have either sign inside the ball, and with (1,1) alone its
// squared coefficient would equal r12.
inline constexpr std::array<Direction, 4> kDirections = {{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};

inline int direction_index(int x1, int x2) {
    for (size_t i = 0; i < kDirections.size(); ++i)
        if (kDirections[i].x1 == x1 && kDirections[i].x2 == x2) return static_cast<int>(i);
    throw UnknownDirection("(" + std::to_string(x1) + "," + std::to_string(x2) + ")");
}

struct GammaCoefficients {
    std::array<double, 4> gamma;  // per direction, >= 0
    std::array<double, 4> gamma_sq;
};

// Fixed share of the identity routed through the two diagonal directions. Keeps
// every squared coefficient positive on the closed ball of radius 1/2: the
// diagonal ones stay >= (kDiagShare - 1/(2 sqrt 2))/2 > 0.02 and the axis ones
// stay >= 1/2 - kDiagShare = 0.1.
inline constexpr double kDiagShare = 0.4;

// R = sum gamma_xi^2(R) xi (x) xi on the Frobenius ball B_{1/2}(Id); throwing
// OutsideBall beyond it is the scheme's hard domain constraint. The solve is
// linear in R, so each gamma_xi = sqrt(positive linear form) is smooth there.
inline GammaCoefficients gamma_coefficients(const SymMatrix2& R, const char* where = "") {
    double d = R.frob_dist_to_id();
    if (d > 0.5) throw OutsideBall(d, where);
    GammaCoefficients c;
    c.gamma_sq = {R.r11 - kDiagShare, R.r22 - kDiagShare,
                  0.5 * (kDiagShare + R.r12), 0.5 * (kDiagShare - R.r12)};
    for (int i = 0; i < 4; ++i) {
        double x = c.gamma_sq[i];
        if (x < 0.0)  // unreachable on the ball; guards rounding at the boundary
            throw OutsideBall(d, (std::string(where) + " (negative coefficient)").c_str());
        c.gamma[i] = std::sqrt(x);
    }
    return c;
}

// Shear-flow building blocks, evaluated on T^2_{2 pi} arguments. Callers pass
// lambda_{q+1} * Phi with lambda_{q+1} in 2 pi Z, so unit-torus periodicity of
// the composed field holds.
inline std::array<double, 2> shear_flow(const Direction& xi, double y1, double y2) {
    auto p = xi.perp();
    double c = std::sqrt(2.0) * std::cos(p[0] * y1 + p[1] * y2);
    return {c * xi.x1, c * xi.x2};
}

inline double stream(const Direction& xi, double y1, double y2) {
    auto p = xi.perp();
    return -std::sqrt(2.0) * std::sin(p[0] * y1 + p[1] * y2);
}

inline double omega(const Direction& xi, double y1, double y2) {
    auto p = xi.perp();
    return std::cos(2.0 * (p[0] * y1 + p[1] * y2));
}

} // namespace nne
