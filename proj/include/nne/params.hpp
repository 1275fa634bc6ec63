#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"

namespace nne {

// local 2*pi constant so this header stays independent of field.hpp
inline constexpr double kTwoPiParam = 6.283185307179586476925286766559;

struct IterationParams {
    double a = 2.0;      // frequency base, > 1
    double b = 1.5;      // super-exponent, 1 < b < (1+3*beta)/(6*beta); large enough
                         // that ceil(a^(b^q)) is strictly increasing from q = 0
    double beta = 1.0 / 12.0; // regularity parameter in (0, 1/3)
    double alpha = 0.01; // small exponent in (0,1)
    int L = 4;           // derivative count, >= 4
    double M = 2.0;      // amplitude constant, > 0

    void validate() const {
        if (!(a > 1.0)) throw InvalidParams("a > 1 required, got " + std::to_string(a));
        if (!(beta > 0.0 && beta < 1.0 / 3.0))
            throw InvalidParams("beta must lie in (0, 1/3), got " + std::to_string(beta));
        double bmax = (1.0 + 3.0 * beta) / (6.0 * beta);
        if (!(b > 1.0 && b < bmax))
            throw InvalidParams("b must satisfy 1 < b < (1+3*beta)/(6*beta) = " +
                                std::to_string(bmax) + ", got " + std::to_string(b));
        if (L < 4) throw InvalidParams("L >= 4 required, got " + std::to_string(L));
        if (!(M > 0.0)) throw InvalidParams("M > 0 required");
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParams("alpha must lie in (0,1)");
    }
};

struct StageSchedule {
    int q = 0;
    long mode_q = 0, mode_q1 = 0;       // integer modes: lambda = 2*pi*mode
    double lambda_q = 0, lambda_q1 = 0;
    double delta_q = 0, delta_q1 = 0, delta_q2 = 0;
    double tau_q = 0, tau_q1 = 0;
    double mu_q1 = 0;
    double ell_q = 0, ell_tq = 0;
    int Gamma = 0;
    std::vector<double> delta_q1n;      // n = 0..Gamma
};

inline long ceil_pow(double a, double b, int q) {
    // ceil(a^(b^q)) with a 1e-9 safety margin so values within rounding noise of
    // an integer do not get bumped to the next one
    double x = std::pow(a, std::pow(b, q));
    if (x > 9e15) throw InvalidParams("a^(b^q) overflows integer modes at q=" + std::to_string(q));
    return static_cast<long>(std::ceil(x - 1e-9));
}

inline StageSchedule compute_schedule(const IterationParams& p, int q) {
    p.validate();
    if (q < 0) throw InvalidParams("stage index must be >= 0");
    StageSchedule s;
    s.q = q;
    s.mode_q = ceil_pow(p.a, p.b, q);
    s.mode_q1 = ceil_pow(p.a, p.b, q + 1);
    if (s.mode_q1 <= s.mode_q)
        throw InvalidParams("frequency modes must increase strictly; ceil(a^(b^q)) collides at q=" +
                            std::to_string(q) + " (pick a larger a or b)");
    s.lambda_q = kTwoPiParam * static_cast<double>(s.mode_q);
    s.lambda_q1 = kTwoPiParam * static_cast<double>(s.mode_q1);
    double lambda_q2 = kTwoPiParam * static_cast<double>(ceil_pow(p.a, p.b, q + 2));
    s.delta_q = std::pow(s.lambda_q, -2.0 * p.beta);
    s.delta_q1 = std::pow(s.lambda_q1, -2.0 * p.beta);
    s.delta_q2 = std::pow(lambda_q2, -2.0 * p.beta);
    s.tau_q = 1.0 / (std::sqrt(s.delta_q) * s.lambda_q * std::pow(s.lambda_q1, p.alpha));
    s.tau_q1 = 1.0 / (std::sqrt(s.delta_q1) * s.lambda_q1 * std::pow(lambda_q2, p.alpha));
    s.mu_q1 = std::sqrt(s.delta_q1) * std::pow(s.lambda_q, 2.0 / 3.0) *
              std::pow(s.lambda_q1, 1.0 / 3.0) * std::pow(s.lambda_q1, 4.0 * p.alpha);
    s.ell_q = 1.0 / std::sqrt(s.lambda_q * s.lambda_q1);
    s.ell_tq = std::pow(s.delta_q, -0.5) * std::pow(s.lambda_q, -1.0 / 3.0) *
               std::pow(s.lambda_q1, -2.0 / 3.0);
    s.Gamma = static_cast<int>(std::ceil(1.0 / (1.0 / 3.0 - p.beta) - 1e-12));
    double ratio = std::pow(s.lambda_q / s.lambda_q1, 1.0 / 3.0 - p.beta);
    s.delta_q1n.resize(s.Gamma + 1);
    for (int n = 0; n <= s.Gamma; ++n)
        s.delta_q1n[n] = s.delta_q1 * std::pow(ratio, n);
    return s;
}

struct RegimeCheck {
    std::string name;
    double lhs = 0, rhs = 0;
    bool pass = false;
};

struct RegimeReport {
    std::vector<RegimeCheck> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

// The ordering relations the paper asserts for large a. Toy schedules may break
// them; this never throws, it only reports.
inline RegimeReport validate_regime(const IterationParams& p, const StageSchedule& s) {
    RegimeReport r;
    auto lt = [&](const std::string& name, double lhs, double rhs) {
        r.checks.push_back({name, lhs, rhs, lhs < rhs});
    };
    double dql = std::sqrt(s.delta_q) * s.lambda_q;
    double dq1l = std::sqrt(s.delta_q1) * s.lambda_q1;
    lt("delta_q^1/2 lambda_q < 1/ell_tq", dql, 1.0 / s.ell_tq);
    lt("1/ell_tq < delta_q1^1/2 lambda_q1", 1.0 / s.ell_tq, dq1l);
    lt("tau_q1 < ell_tq", s.tau_q1, s.ell_tq);
    lt("ell_tq < 1/mu_q1", s.ell_tq, 1.0 / s.mu_q1);
    lt("1/mu_q1 < tau_q", 1.0 / s.mu_q1, s.tau_q);
    lt("mu_q1 tau_q > 1", 1.0, s.mu_q1 * s.tau_q);
    // support margin used by the stage bookkeeping (new support stays inside
    // the previous window after widening by 2 Gamma tau_q)
    lt("support margin", 1.0 / dq1l + 2.0 * s.Gamma * s.tau_q, 1.0 / dql);
    return r;
}

} // namespace nne
