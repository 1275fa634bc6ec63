#pragma once

#include <chrono>
#include <cmath>
#include <utility>
#include <vector>

#include "nash.hpp"
#include "newton.hpp"

namespace nne {

// One temporal band of the stage, reduced to its diagnostics. The heavy
// space-time stores are dropped once the supports and norms are measured, so
// the second band can reuse the memory.
struct BandSummary {
    int sign = +1;
    double band_lo = 0.0, band_hi = 0.0;
    std::vector<LevelReport> levels;
    NashReport nash;
    std::vector<std::pair<double, double>> supp_w; // stored support of the gluing correction
    double supp_u_lo = 0.0, supp_u_hi = 0.0; // hull of supp_t(u_new - u_old)
    double supp_R_lo = 0.0, supp_R_hi = 0.0; // hull of supp_t of the new stress
    double seconds = 0.0;
};

struct StageOutcome {
    StageConfig cfg;
    StageSchedule sched;
    double m_ell = 1.0;
    std::vector<BandSummary> bands;
    ERReport er; // pooled residual samples of the corrected field, both bands
    double sup_wt = 0.0, sup_ws = 0.0;
    double pert_measured = 0.0, pert_bound = 0.0;
    bool pert_ok = false;
    // support bookkeeping: margins (delta^{1/2} lambda)^{-1} at this level and
    // the next, the a-priori growth inequality, and the measured inclusions
    double margin_q = 0.0, margin_q1 = 0.0, margin_lhs = 0.0;
    bool margin_ok = false;
    bool supp_u_ok = false, supp_R_ok = false;
    double seconds = 0.0;
};

// Hull of the times where the corrected velocity can differ from the input:
// the stored stream of the gluing correction plus the cutoff windows that
// carry the oscillation waves.
inline BandSummary summarize_band(const NewtonBandResult& nb, NashReport nash, int sign) {
    BandSummary bs;
    bs.sign = sign;
    bs.band_lo = nb.disc.band_lo;
    bs.band_hi = nb.disc.band_hi;
    bs.levels = nb.levels;
    bs.nash = std::move(nash);
    bs.supp_w = store_support(nb.psi_sum);

    int kmin = 0, kmax = 0;
    bool any = false;
    for (const auto& lev : nb.levels)
        for (int k : lev.ks) {
            if (!any || k < kmin) kmin = k;
            if (!any || k > kmax) kmax = k;
            any = true;
        }
    double lo = bs.band_lo, hi = bs.band_hi;
    if (any) {
        lo = std::min(lo, nb.disc.t_center(kmin) - nb.disc.cutoffs.reach);
        hi = std::max(hi, nb.disc.t_center(kmax) + nb.disc.cutoffs.reach);
    }
    for (const auto& [a, b] : bs.supp_w) {
        lo = std::min(lo, a);
        hi = std::max(hi, b);
    }
    bs.supp_u_lo = lo;
    bs.supp_u_hi = hi;
    // the new stress also carries the stream-borne gluing stress and the
    // mollification remainder of the base stress, both inside the same hull
    double rlo = lo, rhi = hi;
    for (const auto& [a, b] : store_support(nb.theta_final)) {
        rlo = std::min(rlo, a);
        rhi = std::max(rhi, b);
    }
    bs.supp_R_lo = rlo;
    bs.supp_R_hi = rhi;
    return bs;
}

inline BandSummary run_band(const StageConfig& cfg, double lo, double hi, int sign = +1) {
    auto t0 = std::chrono::steady_clock::now();
    NewtonBandResult nb = run_newton_band(cfg, lo, hi);
    NashReport nash = run_nash_step(nb);
    BandSummary bs = summarize_band(nb, std::move(nash), sign);
    bs.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return bs;
}

// Full stage: gluing plus erasure on both temporal bands of the stress, then
// the cross-band aggregates and the support bookkeeping of the new triple.
inline StageOutcome run_stage(const StageConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    StageOutcome st;
    st.cfg = cfg;
    st.sched = compute_schedule(cfg.params, cfg.q);
    BaseCase bc(st.sched);

    std::vector<ERSample> pooled;
    for (int sign : {+1, -1}) {
        auto [lo, hi] = bc.band(sign);
        BandSummary bs = run_band(cfg, lo, hi, sign);
        for (const auto& s : bs.nash.er.samples) pooled.push_back(s);
        st.sup_wt = std::max(st.sup_wt, bs.nash.sup_wt);
        st.sup_ws = std::max(st.sup_ws, bs.nash.sup_ws);
        st.pert_measured = std::max(st.pert_measured, bs.nash.pert_measured);
        st.pert_bound = bs.nash.pert_bound;
        st.bands.push_back(std::move(bs));
    }
    {
        GridSpec g{cfg.n_grid};
        st.m_ell = mollifier_mode_gain(g, st.sched.ell_q, bc.mode0);
    }
    st.er = finalize_er_report(std::move(pooled));
    st.pert_ok = st.pert_measured <= st.pert_bound;

    st.margin_q = 1.0 / (std::sqrt(st.sched.delta_q) * st.sched.lambda_q);
    st.margin_q1 = 1.0 / (std::sqrt(st.sched.delta_q1) * st.sched.lambda_q1);
    // a-priori support growth of the construction: 2 Gamma partition spacings
    // at the schedule's spacing must fit inside the margin the input enjoyed
    st.margin_lhs = st.margin_q1 + 2.0 * st.sched.Gamma * st.sched.tau_q;
    st.margin_ok = st.margin_lhs < st.margin_q;

    st.supp_u_ok = true;
    st.supp_R_ok = true;
    for (const BandSummary& bs : st.bands) {
        double ulo = 1.0, uhi = 2.0;
        double rlo = 1.0 + st.margin_q1, rhi = 2.0 - st.margin_q1;
        if (bs.sign < 0) {
            ulo = -2.0; uhi = -1.0;
            rlo = -2.0 + st.margin_q1; rhi = -1.0 - st.margin_q1;
        }
        if (!(bs.supp_u_lo > ulo && bs.supp_u_hi < uhi)) st.supp_u_ok = false;
        if (!(bs.supp_R_lo >= rlo && bs.supp_R_hi <= rhi)) st.supp_R_ok = false;
    }
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return st;
}

} // namespace nne
