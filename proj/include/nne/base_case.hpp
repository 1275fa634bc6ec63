#pragma once

#include <cmath>
#include <utility>

#include "field.hpp"
#include "params.hpp"
#include "temporal.hpp"

namespace nne {

namespace detail {

// int_0^s ramp(v) dv for s in [0,1]; the table total is exactly 1/2 by the
// symmetry ramp(s) + ramp(1-s) = 1.
inline double ramp_int(double s) {
    if (s <= 0.0) return 0.0;
    static CumTable table(+[](double u) { return ramp(0.5 * (u + 1.0)); });
    if (s >= 1.0) return 0.5 * table.total;
    return 0.5 * table.eval(2.0 * s - 1.0);
}

} // namespace detail

// Starting triple of the iteration: a temporally modulated shear
//   u_0 = f(t) delta_0^{1/2} cos(lambda_0 x_1) e_2,  p_0 = 0,
//   R_0 = f'(t) (delta_0^{1/2}/lambda_0) sin(lambda_0 x_1) (e_1 (x) e_2 + e_2 (x) e_1),
// which solves Euler-Reynolds exactly: the transport term vanishes for a shear
// and d_t u_0 = div R_0.
//
// f = 1 on [-5/4, 5/4] and supp f in [-7/4, 7/4]. Within that window the
// descent of f is shaped so that f' is a smooth trapezoid: |f'| stays close to
// the smallest value any monotone descent over the window allows. This keeps
// sup |R_0| / delta_1 small, which is what the positivity ball of the
// quadratic-form decomposition constrains.
struct BaseCase {
    double delta0 = 0.0;
    double lambda0 = 0.0;
    int mode0 = 0;
    double ramp_lo = 1.26, ramp_hi = 1.74; // |t| range of the descent of f
    double shoulder = 0.15;                // fraction of the window per f' shoulder

    explicit BaseCase(const StageSchedule& s)
        : delta0(s.delta_q), lambda0(s.lambda_q), mode0(static_cast<int>(s.mode_q)) {}
    BaseCase(double delta, int mode) : delta0(delta), lambda0(kTwoPi * mode), mode0(mode) {}

    // trapezoid profile of -f' on the unit interval, peak 1/(1 - shoulder)
    double shape(double u) const {
        const double r = shoulder;
        double s;
        if (u <= 0.0 || u >= 1.0) s = 0.0;
        else if (u < r) s = ramp(u / r);
        else if (u > 1.0 - r) s = ramp((1.0 - u) / r);
        else s = 1.0;
        return s / (1.0 - r);
    }
    // int_0^u shape
    double shape_int(double u) const {
        const double r = shoulder;
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return 1.0;
        double acc;
        if (u < r) acc = r * detail::ramp_int(u / r);
        else if (u <= 1.0 - r) acc = 0.5 * r + (u - r);
        else acc = 0.5 * r + (1.0 - 2.0 * r) + r * (0.5 - detail::ramp_int((1.0 - u) / r));
        return acc / (1.0 - r);
    }

    double f(double t) const {
        double a = std::fabs(t);
        if (a <= ramp_lo) return 1.0;
        if (a >= ramp_hi) return 0.0;
        return 1.0 - shape_int((a - ramp_lo) / (ramp_hi - ramp_lo));
    }
    double f_dot(double t) const {
        double a = std::fabs(t);
        if (a <= ramp_lo || a >= ramp_hi) return 0.0;
        double w = ramp_hi - ramp_lo;
        double d = -shape((a - ramp_lo) / w) / w;
        return (t > 0) ? d : -d;
    }

    Field2 velocity(const GridSpec& g, double t) const {
        Field2 u(FieldKind::Vector, g.n);
        double amp = f(t) * std::sqrt(delta0);
        for (int i = 0; i < g.n; ++i) {
            double c = amp * std::cos(lambda0 * static_cast<double>(i) / g.n);
            for (int j = 0; j < g.n; ++j) u.at(1, i, j) = c;
        }
        return u;
    }
    Field2 pressure(const GridSpec& g, double) const { return Field2(FieldKind::Scalar, g.n); }
    Field2 stress(const GridSpec& g, double t) const {
        Field2 R(FieldKind::SymTensor, g.n);
        double amp = f_dot(t) * std::sqrt(delta0) / lambda0;
        for (int i = 0; i < g.n; ++i) {
            double s = amp * std::sin(lambda0 * static_cast<double>(i) / g.n);
            for (int j = 0; j < g.n; ++j) R.at(1, i, j) = s;
        }
        return R;
    }
    // stream function of the Calderon-Zygmund image Delta^{-1} curl div R_0,
    // which for this R_0 collapses to f'(t) (delta_0^{1/2}/lambda_0) sin(lambda_0 x_1)
    Field2 stress_cz(const GridSpec& g, double t) const {
        Field2 G(FieldKind::Scalar, g.n);
        double amp = f_dot(t) * std::sqrt(delta0) / lambda0;
        for (int i = 0; i < g.n; ++i) {
            double s = amp * std::sin(lambda0 * static_cast<double>(i) / g.n);
            for (int j = 0; j < g.n; ++j) G.at(0, i, j) = s;
        }
        return G;
    }

    // the two temporal bands of supp R_0
    std::pair<double, double> band(int sign) const {
        return sign > 0 ? std::make_pair(ramp_lo, ramp_hi)
                        : std::make_pair(-ramp_hi, -ramp_lo);
    }
};

} // namespace nne
