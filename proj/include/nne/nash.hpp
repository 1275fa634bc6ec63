#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "geometry.hpp"
#include "interp.hpp"
#include "newton.hpp"
#include "spectral_ops.hpp"
#include "transport.hpp"
#include "verify.hpp"

namespace nne {

// Drop every mode with max(|m1|,|m2|) >= cut; the low-frequency part of a field
// whose high content sits at the oscillation frequency.
inline Field2 filter_low_modes(const GridSpec& g, const Field2& f, int cut) {
    Field2 out = f;
    for (int c = 0; c < ncomp(f.kind); ++c) {
        Spectrum s;
        to_spectrum(g, out.comp(c), s);
        for_each_mode(g, s, [&](int m1, int m2, std::complex<double>& v) {
            if (std::max(std::abs(m1), std::abs(m2)) >= cut) v = 0.0;
        });
        from_spectrum(g, s, out.comp(c));
    }
    return out;
}

inline double mat_sup(const Mat2Field& m) {
    double s = 0.0;
    for (int c = 0; c < 4; ++c)
        for (double v : m.comp[c]) s = std::max(s, std::fabs(v));
    return s;
}

// Glued velocity of the stage: mollified background shear plus the correction
// grad_perp(psi_sum) interpolated from the stored stream. Slices are built at
// quantized times and kept in a small LRU cache; the shear part stays analytic
// at the exact time, so only the slowly varying correction is quantized.
class GluedVelocity : public Velocity {
public:
    GluedVelocity(const GridSpec& g, const ShearBackground* bg, const BandStore* psi,
                  int os = 4, size_t cache_max = 48)
        : g_(g), bg_(bg), psi_(psi), os_(os), cache_max_(cache_max),
          quant_(0.5 * psi->dt()) {}

    std::array<double, 2> operator()(double x1, double x2, double t) const override {
        const Entry& e = lookup(t);
        double shear = bg_->amp(t) * std::cos(bg_->lambda() * x1);
        return {e.w1(x1, x2), e.w2(x1, x2) + shear};
    }

private:
    struct Entry {
        long key;
        SliceInterp w1, w2;
    };

    const Entry& lookup(double t) const {
        long key = std::llround(t / quant_);
        for (auto it = cache_.begin(); it != cache_.end(); ++it)
            if (it->key == key) {
                if (it != cache_.begin()) cache_.splice(cache_.begin(), cache_, it);
                return cache_.front();
            }
        Field2 ps(FieldKind::Scalar, g_.n);
        psi_->interp_add(key * quant_, 1.0, ps);
        Field2 wt = grad_perp(g_, ps);
        cache_.push_front(Entry{key, SliceInterp(g_, wt.comp(0), os_),
                                SliceInterp(g_, wt.comp(1), os_)});
        if (cache_.size() > cache_max_) cache_.pop_back();
        return cache_.front();
    }

    GridSpec g_;
    const ShearBackground* bg_;
    const BandStore* psi_;
    int os_;
    size_t cache_max_;
    double quant_;
    mutable std::list<Entry> cache_;
};

// The single oscillation wave active at a time: slot index m (erasing the
// stress of step m-1), direction, parity, the matching cutoff index, and the
// scalar factors chi_k(t) and g(mu t). At most one wave is active at any time
// because consecutive cutoffs alternate parity.
struct SlotWave {
    int m = 0, xi = 0, parity = 0;
    long k = 0;
    double chi = 0.0, gv = 0.0;
};

struct NashSampleReport {
    SampleSpec spec;
    bool has_wave = false;    // some stencil time falls inside an active slot
    bool center_wave = false; // the center time itself does
    double sup_ws = 0.0, sup_wp = 0.0, sup_wc = 0.0;
    double rel_split = 0.0;      // |w_s - w_p - w_c| / |w_s| at the center
    double cancel_rel = 0.0;     // |S + sum g^2 A_flow| / |S|
    double flow_rel = 0.0;       // |A_flow - A_shear| / delta_m
    double trans_rel = 0.0;      // |A_flow grad(Omega o lam Phi)| / (lam |A_flow|)
    double trans_ctrl = 0.0;     // same functional on a fixed tensor (should be O(1))
    double div_comm_rel = 0.0;   // |div(Om A) - Om div A| / (lam |A|)
    double transport_rel = -1.0; // advective derivative of Psi o lam Phi; -1: n/a
    double sup_RL = 0.0, sup_RO = 0.0, sup_ring = 0.0, sup_S = 0.0;
    double mean_removed = 0.0; // largest mean dropped before inverse divergence
    double div_ubar = 0.0;
    double pert0 = 0.0, pert1 = 0.0; // C0 and C1 norms of u_new - u_old
    ERSample er;
};

struct NashScanRecord {
    SampleSpec spec;
    bool valid = false;
    double sup_abar = 0.0;
};

struct NashReport {
    BallStats ball;
    std::vector<NashSampleReport> samples;
    std::vector<NashScanRecord> scans;
    ERReport er;
    double sup_wt = 0.0, c1_wt = 0.0; // glued-correction scan over the band
    double sup_ws = 0.0;
    double pert_measured = 0.0, pert_bound = 0.0;
    double sup_S = 0.0, sup_RL = 0.0, sup_RO = 0.0;
    double div_ubar = 0.0;
    double seconds = 0.0;
};

// The erasure step: high-frequency shear waves with amplitudes built from the
// flow-mollified stress, riding the backward flow of the glued velocity. The
// new stress splits into the advective part R_L, the oscillation part R_O and
// the bookkeeping remainder carried over from the gluing phase; the report
// checks the residual at the same samples the gluing phase used, plus the
// amplitude-domain scans.
class NashStage {
public:
    explicit NashStage(const NewtonBandResult* nb)
        : nb_(nb), g_{nb->cfg.n_grid}, bc_(nb->sched), bg_(g_, bc_, nb->m_ell),
          uvel_(g_, &bg_, &nb->psi_sum),
          n_levels_(nb->cfg.levels > 0 ? nb->cfg.levels : nb->sched.Gamma) {}

    const StageDiscretization& disc() const { return nb_->disc; }
    const ShearBackground& background() const { return bg_; }

    // which wave (if any) is active at time t; unique because cutoff parities
    // alternate and the slot fixes the parity
    std::optional<SlotWave> wave_at(double t) const {
        auto b = disc().bump_at(t);
        if (!b || b->n > n_levels_) return std::nullopt;
        long kc = std::llround(t / disc().tau);
        for (long k : {kc - 1, kc, kc + 1}) {
            if (parity_of(k) != b->parity) continue;
            double chi = disc().cutoffs.chi(static_cast<int>(k), t);
            if (chi == 0.0) continue;
            SlotWave v;
            v.m = b->n;
            v.xi = b->xi;
            v.parity = b->parity;
            v.k = k;
            v.chi = chi;
            v.gv = disc().profiles.g(b->xi, b->parity, b->n, disc().mu * t);
            return v;
        }
        return std::nullopt;
    }

    // backward flow of the glued velocity from the cutoff center to tj
    FlowMap flow_from(long k, double tj) const {
        double tk = disc().t_center(k);
        double span = tj - tk;
        if (std::fabs(span) < 1e-14) {
            FlowMap fm;
            fm.g = g_;
            fm.t_origin = tk;
            fm.j_origin = 0;
            TimeGrid tg;
            tg.t0 = tj;
            tg.dt = disc().dt_solve;
            tg.nt = 1;
            fm.disp = SpaceTimeField(FieldKind::Vector, g_.n, tg);
            return fm;
        }
        int nsteps = std::max(
            8, static_cast<int>(std::ceil(std::fabs(span) / (2.0 * disc().dt_store) - 1e-9)));
        TimeGrid tg;
        tg.nt = nsteps + 1;
        tg.dt = std::fabs(span) / nsteps;
        tg.t0 = std::min(tk, tj);
        return solve_backward_flow(uvel_, g_, tk, tg, 1);
    }

    // stress of step L on the storage lattice: analytic base stress for L = 0,
    // otherwise read back from the archived stream windows
    Field2 stress_slice(int L, long j) const {
        if (L == 0) {
            Field2 R = bc_.stress(g_, j * disc().dt_store);
            R *= nb_->m_ell;
            return R;
        }
        for (const BandStore& part : nb_->theta_levels.at(L - 1))
            if (part.contains(j))
                return stream_to_stress(g_, part.slice_field(j, g_.n));
        throw InvalidParams("stress archive has no slice " + std::to_string(j) +
                            " for step " + std::to_string(L));
    }

    Field2 stress_now(int L, double t) const {
        if (L == 0) {
            Field2 R = bc_.stress(g_, t);
            R *= nb_->m_ell;
            return R;
        }
        double x = t / disc().dt_store;
        for (const BandStore& part : nb_->theta_levels.at(L - 1))
            if (x >= part.j_lo() + 1 && x <= part.j_hi() - 2) {
                Field2 th(FieldKind::Scalar, g_.n);
                part.interp_add(t, 1.0, th);
                return stream_to_stress(g_, th);
            }
        throw InvalidParams("stress archive does not cover t = " + std::to_string(t) +
                            " for step " + std::to_string(L));
    }

    // stress of step L averaged along the glued flow, at the requested times
    SpaceTimeField mollified_stress(int L, const TimeGrid& og) const {
        const double dts = disc().dt_store, ellt = disc().ell_t;
        long ja = static_cast<long>(std::floor((og.t0 - ellt) / dts)) - 2;
        long jb = static_cast<long>(std::ceil((og.t_end() + ellt) / dts)) + 2;
        TimeGrid rg;
        rg.t0 = ja * dts;
        rg.dt = dts;
        rg.nt = static_cast<int>(jb - ja + 1);
        SpaceTimeField R(FieldKind::SymTensor, g_.n, rg);
        for (int jj = 0; jj < rg.nt; ++jj) R.set_slice(jj, stress_slice(L, ja + jj));
        return mollify_along_flow(R, uvel_, ellt, og, 33, 4);
    }

    NashReport run() {
        auto t0 = std::chrono::steady_clock::now();
        NashReport rep;
        rep.pert_bound = 2.0 * nb_->cfg.params.M * std::sqrt(nb_->sched.delta_q1);
        std::vector<ERSample> ers;
        for (const auto& s : nb_->samples) {
            rep.samples.push_back(eval_sample(s, rep));
            const NashSampleReport& r = rep.samples.back();
            ers.push_back(r.er);
            rep.sup_ws = std::max(rep.sup_ws, r.sup_ws);
            rep.sup_S = std::max(rep.sup_S, r.sup_S);
            rep.sup_RL = std::max(rep.sup_RL, r.sup_RL);
            rep.sup_RO = std::max(rep.sup_RO, r.sup_RO);
            rep.div_ubar = std::max(rep.div_ubar, r.div_ubar);
            rep.pert_measured = std::max(rep.pert_measured,
                                         r.pert0 + r.pert1 / nb_->sched.lambda_q1);
        }
        for (const auto& sp : nb_->nash_scans) rep.scans.push_back(eval_scan(sp, rep.ball));
        rep.er = finalize_er_report(std::move(ers));
        band_norms(rep);
        rep.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return rep;
    }

private:
    struct CenterDiag {
        Field2 ab, psi, om; // scalar amplitude, stream and vorticity composites
        Field2 Ab;          // sum g^2 a^2 (grad Phi)^-1 xi (x) xi (grad Phi)^-T
        Field2 wp;          // principal part of the wave
    };

    CenterDiag make_diag() const {
        CenterDiag d;
        d.ab = Field2(FieldKind::Scalar, g_.n);
        d.psi = Field2(FieldKind::Scalar, g_.n);
        d.om = Field2(FieldKind::Scalar, g_.n);
        d.Ab = Field2(FieldKind::SymTensor, g_.n);
        d.wp = Field2(FieldKind::Vector, g_.n);
        return d;
    }

    // One wave summand at time tj: returns the stream composite g a_bar
    // Psi_xi(lam Phi), with the amplitude built pointwise from the mollified
    // stress rb pulled through the numerically solved flow. Ball statistics
    // mirror the gluing phase; diag collects the center-time diagnostics.
    Field2 wave_slice(const SlotWave& v, const Field2& rb, double tj, BallStats& ball,
                      CenterDiag* diag, Field2* psi_out) const {
        const double delta = nb_->sched.delta_q1n[v.m - 1];
        const double lam1 = nb_->sched.lambda_q1;
        const Direction& dir = kDirections[v.xi];
        const double p1 = dir.perp()[0], p2 = dir.perp()[1];
        FlowMap fm = flow_from(v.k, tj);
        const int je = fm.tg().nt == 1 ? 0 : (tj > fm.t_origin ? fm.tg().nt - 1 : 0);
        Mat2Field G = fm.grad_slice(je);
        Field2 dsl = fm.disp.slice(je);
        const double* r11 = rb.comp(0);
        const double* r12 = rb.comp(1);
        const double* r22 = rb.comp(2);
        const double* d1 = dsl.comp(0);
        const double* d2 = dsl.comp(1);
        Field2 out(FieldKind::Scalar, g_.n);
        double* o = out.comp(0);
        for (int i = 0; i < g_.n; ++i) {
            double x1 = static_cast<double>(i) / g_.n;
            size_t row = static_cast<size_t>(i) * g_.n;
            for (int jc = 0; jc < g_.n; ++jc) {
                size_t idx = row + jc;
                double x2 = static_cast<double>(jc) / g_.n;
                double b11 = 1.0 - r11[idx] / delta;
                double b12 = -r12[idx] / delta;
                double b22 = 1.0 - r22[idx] / delta;
                double g11 = G.at(0, idx), g12 = G.at(1, idx);
                double g21 = G.at(2, idx), g22 = G.at(3, idx);
                double M11 = g11 * g11 * b11 + 2.0 * g11 * g12 * b12 + g12 * g12 * b22;
                double M12 = g11 * g21 * b11 + (g11 * g22 + g12 * g21) * b12 +
                             g12 * g22 * b22;
                double M22 = g21 * g21 * b11 + 2.0 * g21 * g22 * b12 + g22 * g22 * b22;
                double e11 = M11 - 1.0, e22 = M22 - 1.0;
                double frob = std::sqrt(e11 * e11 + 2.0 * M12 * M12 + e22 * e22);
                std::array<double, 4> gsq = {M11 - kDiagShare, M22 - kDiagShare,
                                             0.5 * (kDiagShare + M12),
                                             0.5 * (kDiagShare - M12)};
                double gmin =
                    std::min(std::min(gsq[0], gsq[1]), std::min(gsq[2], gsq[3]));
                if (frob > ball.frob_max) {
                    ball.frob_max = frob;
                    ball.t_worst = tj;
                    ball.x1_worst = x1;
                    ball.k_worst = static_cast<int>(v.k);
                    ball.level_worst = v.m - 1;
                }
                ball.gamma_sq_min = std::min(ball.gamma_sq_min, gmin);
                if ((frob > 0.5 || gmin < 0.0) && nb_->cfg.strict)
                    throw OutsideBall(frob, "erasure wave, slot " + std::to_string(v.m) +
                                                ", k=" + std::to_string(v.k) +
                                                ", t=" + std::to_string(tj) +
                                                ", x1=" + std::to_string(x1));
                double ab = v.chi * std::sqrt(delta * std::max(gsq[v.xi], 0.0));
                double y1 = lam1 * (x1 + d1[idx]);
                double y2 = lam1 * (x2 + d2[idx]);
                double ph = p1 * y1 + p2 * y2;
                double psv = -std::sqrt(2.0) * std::sin(ph);
                o[idx] = v.gv * ab * psv;
                if (psi_out) psi_out->comp(0)[idx] = psv;
                if (diag) {
                    double det = g11 * g22 - g12 * g21;
                    double vi1 = (g22 * dir.x1 - g12 * dir.x2) / det;
                    double vi2 = (-g21 * dir.x1 + g11 * dir.x2) / det;
                    double g2a2 = v.gv * v.gv * ab * ab;
                    diag->Ab.comp(0)[idx] += g2a2 * vi1 * vi1;
                    diag->Ab.comp(1)[idx] += g2a2 * vi1 * vi2;
                    diag->Ab.comp(2)[idx] += g2a2 * vi2 * vi2;
                    double wco = std::sqrt(2.0) * std::cos(ph);
                    diag->wp.comp(0)[idx] += v.gv * ab * wco * vi1;
                    diag->wp.comp(1)[idx] += v.gv * ab * wco * vi2;
                    diag->ab.comp(0)[idx] = ab;
                    diag->psi.comp(0)[idx] = psv;
                    diag->om.comp(0)[idx] = std::cos(2.0 * ph);
                }
            }
        }
        return out;
    }

    // Same tensor as the gluing phase's weighted sum at this sample: closed
    // form shear flow, unmollified stress. The gap to the flow-borne version
    // measures the flow and mollification errors together.
    Field2 shear_flow_tensor(const SlotWave& v, double t) const {
        const double delta = nb_->sched.delta_q1n[v.m - 1];
        Field2 R = stress_now(v.m - 1, t);
        const double J = bg_.flow_J(disc().t_center(v.k), t);
        const double lam = bg_.lambda();
        const double coef = v.gv * v.gv * v.chi * v.chi * delta;
        const Direction& dir = kDirections[v.xi];
        Field2 T(FieldKind::SymTensor, g_.n);
        const double* r11 = R.comp(0);
        const double* r12 = R.comp(1);
        const double* r22 = R.comp(2);
        for (int i = 0; i < g_.n; ++i) {
            double s = J * lam * bg_.sincol()[i];
            size_t row = static_cast<size_t>(i) * g_.n;
            for (int jc = 0; jc < g_.n; ++jc) {
                size_t idx = row + jc;
                double b11 = 1.0 - r11[idx] / delta;
                double b12 = -r12[idx] / delta;
                double b22 = 1.0 - r22[idx] / delta;
                double M11 = b11;
                double M12 = b11 * s + b12;
                double M22 = b11 * s * s + 2.0 * b12 * s + b22;
                std::array<double, 4> gsq = {M11 - kDiagShare, M22 - kDiagShare,
                                             0.5 * (kDiagShare + M12),
                                             0.5 * (kDiagShare - M12)};
                double c = coef * std::max(gsq[v.xi], 0.0);
                double v1 = dir.x1;
                double v2 = dir.x2 - s * dir.x1;
                T.comp(0)[idx] += c * v1 * v1;
                T.comp(1)[idx] += c * v1 * v2;
                T.comp(2)[idx] += c * v2 * v2;
            }
        }
        return T;
    }

    NashSampleReport eval_sample(const SampleRecord& s, NashReport& rep) {
        NashSampleReport r;
        r.spec = s.spec;
        const double t = s.spec.t, h = disc().dt_solve;
        const double lam1 = nb_->sched.lambda_q1;
        std::array<std::optional<SlotWave>, 5> wv;
        std::set<int> lvls;
        for (int j = 0; j < 5; ++j) {
            wv[j] = wave_at(t + (j - 2) * h);
            if (wv[j]) lvls.insert(wv[j]->m - 1);
        }
        r.has_wave = !lvls.empty();
        r.center_wave = wv[2].has_value();
        std::map<int, SpaceTimeField> rbar;
        TimeGrid og;
        og.t0 = t - 2.0 * h;
        og.dt = h;
        og.nt = 5;
        for (int L : lvls) rbar.emplace(L, mollified_stress(L, og));
        std::array<Field2, 5> w;
        std::array<Field2, 5> qpsi;
        CenterDiag diag;
        for (int j = 0; j < 5; ++j) {
            w[j] = Field2(FieldKind::Vector, g_.n);
            if (!wv[j]) continue;
            Field2 rb = rbar.at(wv[j]->m - 1).slice(j);
            CenterDiag* dg = nullptr;
            if (j == 2) {
                diag = make_diag();
                dg = &diag;
            }
            qpsi[j] = Field2(FieldKind::Scalar, g_.n);
            Field2 comp = wave_slice(*wv[j], rb, t + (j - 2) * h, rep.ball, dg, &qpsi[j]);
            Field2 ws = grad_perp(g_, comp);
            w[j].axpy(1.0 / lam1, ws);
        }
        r.sup_ws = w[2].sup_norm();
        r.sup_S = s.S.sup_norm();

        // glued coarse velocity at the center, also used by the residual
        Field2 W = grad_perp(g_, s.psnap[2]);
        Field2 ubarG = bc_.velocity(g_, t);
        ubarG *= nb_->m_ell;
        ubarG += W;
        r.div_ubar = divergence_vec(g_, ubarG).sup_norm();

        if (r.center_wave) {
            const SlotWave& v = *wv[2];
            double delta_m = nb_->sched.delta_q1n[v.m - 1];
            // corrector split: w_s = w_p + lam^-1 Psi grad_perp(g a_bar)
            Field2 gp = grad_perp(g_, diag.ab);
            Field2 wc(FieldKind::Vector, g_.n);
            for (int c = 0; c < 2; ++c) {
                const double* pv = diag.psi.comp(0);
                const double* gc = gp.comp(c);
                double* oc = wc.comp(c);
                for (size_t i = 0; i < wc.comp_size(); ++i)
                    oc[i] = (v.gv / lam1) * pv[i] * gc[i];
            }
            Field2 split = w[2];
            split -= diag.wp;
            split -= wc;
            r.sup_wp = diag.wp.sup_norm();
            r.sup_wc = wc.sup_norm();
            r.rel_split = split.sup_norm() / std::max(r.sup_ws, 1e-300);
            // flow error against the closed-form shear flow
            Field2 dA = diag.Ab;
            dA -= shear_flow_tensor(v, t);
            r.flow_rel = dA.sup_norm() / delta_m;
            // quadratic cancellation target: S + sum g^2 A_flow should vanish
            Field2 cs = s.S;
            cs += diag.Ab;
            r.cancel_rel = cs.sup_norm() / std::max(r.sup_S, 1e-300);
            // transparency of the composed vorticity to the wave tensor
            Field2 gom = gradient_scalar(g_, diag.om);
            double supA = diag.Ab.sup_norm();
            double supv = 0.0, supc = 0.0;
            {
                const double* a11 = diag.Ab.comp(0);
                const double* a12 = diag.Ab.comp(1);
                const double* a22 = diag.Ab.comp(2);
                const double* go1 = gom.comp(0);
                const double* go2 = gom.comp(1);
                const double B11 = 0.6, B12 = -0.3, B22 = 0.2;
                for (size_t i = 0; i < diag.om.comp_size(); ++i) {
                    double t1 = a11[i] * go1[i] + a12[i] * go2[i];
                    double t2 = a12[i] * go1[i] + a22[i] * go2[i];
                    supv = std::max(supv, std::max(std::fabs(t1), std::fabs(t2)));
                    double c1 = B11 * go1[i] + B12 * go2[i];
                    double c2 = B12 * go1[i] + B22 * go2[i];
                    supc = std::max(supc, std::max(std::fabs(c1), std::fabs(c2)));
                }
            }
            r.trans_rel = supv / std::max(lam1 * supA, 1e-300);
            r.trans_ctrl = supc / (lam1 * 0.6);
            // div(Om A) = Om div A up to the transparency defect
            Field2 OA = diag.Ab;
            for (int c = 0; c < 3; ++c) {
                double* oc = OA.comp(c);
                const double* om = diag.om.comp(0);
                for (size_t i = 0; i < OA.comp_size(); ++i) oc[i] *= om[i];
            }
            Field2 dcomm = divergence_sym(g_, OA);
            {
                Field2 dA2 = divergence_sym(g_, diag.Ab);
                const double* om = diag.om.comp(0);
                for (int c = 0; c < 2; ++c) {
                    double* oc = dcomm.comp(c);
                    const double* dc = dA2.comp(c);
                    for (size_t i = 0; i < dcomm.comp_size(); ++i) oc[i] -= om[i] * dc[i];
                }
            }
            r.div_comm_rel = dcomm.sup_norm() / std::max(lam1 * supA, 1e-300);
            // the composed stream rides the flow: advective derivative small
            bool same = true;
            for (int j = 0; j < 5; ++j)
                if (!wv[j] || wv[j]->k != v.k || wv[j]->m != v.m || wv[j]->xi != v.xi)
                    same = false;
            if (same) {
                Field2 dq(FieldKind::Scalar, g_.n);
                const double cfd = 1.0 / (12.0 * h);
                {
                    double* o = dq.comp(0);
                    const double* q0 = qpsi[0].comp(0);
                    const double* q1 = qpsi[1].comp(0);
                    const double* q3 = qpsi[3].comp(0);
                    const double* q4 = qpsi[4].comp(0);
                    for (size_t i = 0; i < dq.comp_size(); ++i)
                        o[i] = cfd * (q0[i] - 8.0 * q1[i] + 8.0 * q3[i] - q4[i]);
                }
                Field2 gq = gradient_scalar(g_, qpsi[2]);
                {
                    double* o = dq.comp(0);
                    const double* u1 = ubarG.comp(0);
                    const double* u2 = ubarG.comp(1);
                    const double* g1 = gq.comp(0);
                    const double* g2 = gq.comp(1);
                    for (size_t i = 0; i < dq.comp_size(); ++i)
                        o[i] += u1[i] * g1[i] + u2[i] * g2[i];
                }
                double denom = ubarG.sup_norm() * gq.sup_norm();
                r.transport_rel = dq.sup_norm() / std::max(denom, 1e-300);
            }
        }

        // perturbation size against the schedule's target amplitude
        {
            Field2 diffu = W;
            diffu += w[2];
            diffu.axpy(nb_->m_ell - 1.0, bc_.velocity(g_, t));
            r.pert0 = diffu.sup_norm();
            r.pert1 = mat_sup(gradient_vec(g_, diffu));
        }

        r.er = residual(s, w, ubarG, W, r);
        return r;
    }

    // Residual of the corrected field at one sample. The wave's time
    // derivative, its advection by the glued velocity and its quadratic
    // self-interaction are moved into the new stress through the inverse
    // divergence, so the remaining residual sits at the gluing-phase floor.
    ERSample residual(const SampleRecord& s, const std::array<Field2, 5>& w,
                      const Field2& ubarG, const Field2& W, NashSampleReport& r) const {
        const double t = s.spec.t;
        const double h = disc().dt_solve;
        std::array<Field2, 5> u;
        for (int j = 0; j < 5; ++j) {
            u[j] = bc_.velocity(g_, t + (j - 2) * h);
            u[j] += grad_perp(g_, s.psnap[j]);
            u[j] += w[j];
        }
        Field2 du = bc_.velocity(g_, t);
        du *= (1.0 - nb_->m_ell);
        Field2 P = bc_.stress(g_, t);
        P *= (1.0 - nb_->m_ell);
        {
            const double* w1 = W.comp(0);
            const double* w2 = W.comp(1);
            const double* e1 = du.comp(0);
            const double* e2 = du.comp(1);
            for (size_t i = 0; i < P.comp_size(); ++i) {
                P.comp(0)[i] += w1[i] * w1[i] + 2.0 * e1[i] * w1[i];
                P.comp(1)[i] += w1[i] * w2[i] + e1[i] * w2[i] + e2[i] * w1[i];
                P.comp(2)[i] += w2[i] * w2[i] + 2.0 * e2[i] * w2[i];
            }
        }
        Field2 th(FieldKind::Scalar, g_.n);
        nb_->theta_final.interp_add(t, 1.0, th);
        Field2 Rtot = stream_to_stress(g_, th);
        Rtot += P;

        // advective part: time derivative of the wave on the same stencil the
        // residual uses, plus the symmetrized advection by the glued velocity
        Field2 VL(FieldKind::Vector, g_.n);
        {
            const double cfd = 1.0 / (12.0 * h);
            for (int c = 0; c < 2; ++c) {
                double* o = VL.comp(c);
                const double* a = w[0].comp(c);
                const double* b = w[1].comp(c);
                const double* d = w[3].comp(c);
                const double* e = w[4].comp(c);
                for (size_t i = 0; i < VL.comp_size(); ++i)
                    o[i] = cfd * (a[i] - 8.0 * b[i] + 8.0 * d[i] - e[i]);
            }
            Field2 crossT(FieldKind::SymTensor, g_.n);
            const double* u1 = ubarG.comp(0);
            const double* u2 = ubarG.comp(1);
            const double* w1 = w[2].comp(0);
            const double* w2 = w[2].comp(1);
            for (size_t i = 0; i < crossT.comp_size(); ++i) {
                crossT.comp(0)[i] = 2.0 * u1[i] * w1[i];
                crossT.comp(1)[i] = u1[i] * w2[i] + u2[i] * w1[i];
                crossT.comp(2)[i] = 2.0 * u2[i] * w2[i];
            }
            VL += divergence_sym(g_, crossT);
        }
        // oscillation part: what the wave's self-interaction leaves of S
        Field2 SO = s.S;
        {
            const double* w1 = w[2].comp(0);
            const double* w2 = w[2].comp(1);
            for (size_t i = 0; i < SO.comp_size(); ++i) {
                SO.comp(0)[i] += w1[i] * w1[i];
                SO.comp(1)[i] += w1[i] * w2[i];
                SO.comp(2)[i] += w2[i] * w2[i];
            }
        }
        Field2 VO = divergence_sym(g_, SO);
        for (int c = 0; c < 2; ++c) {
            r.mean_removed = std::max(r.mean_removed, std::fabs(VL.mean(c)));
            r.mean_removed = std::max(r.mean_removed, std::fabs(VO.mean(c)));
        }
        subtract_mean(VL);
        subtract_mean(VO);
        Field2 RL = inverse_divergence(g_, VL);
        Field2 RO = inverse_divergence(g_, VO);
        // mollification-gap cross terms, with the trace routed to the pressure
        Field2 ring(FieldKind::SymTensor, g_.n);
        Field2 duw(FieldKind::Scalar, g_.n);
        {
            const double* w1 = w[2].comp(0);
            const double* w2 = w[2].comp(1);
            const double* e1 = du.comp(0);
            const double* e2 = du.comp(1);
            for (size_t i = 0; i < ring.comp_size(); ++i) {
                double tr = e1[i] * w1[i] + e2[i] * w2[i];
                ring.comp(0)[i] = 2.0 * e1[i] * w1[i] - tr;
                ring.comp(1)[i] = e1[i] * w2[i] + e2[i] * w1[i];
                ring.comp(2)[i] = 2.0 * e2[i] * w2[i] - tr;
                duw.comp(0)[i] = tr;
            }
        }
        r.sup_RL = RL.sup_norm();
        r.sup_RO = RO.sup_norm();
        r.sup_ring = ring.sup_norm();
        Rtot += RL;
        Rtot += RO;
        Rtot += ring;

        Field2 Q(FieldKind::SymTensor, g_.n);
        {
            double cp = -bg_.amp(t) * bg_.lambda();
            const double* xi = s.psnap[2].comp(0);
            double* q22 = Q.comp(2);
            for (int i = 0; i < g_.n; ++i) {
                double cpi = cp * bg_.sincol()[i];
                size_t row = static_cast<size_t>(i) * g_.n;
                for (int j = 0; j < g_.n; ++j) q22[row + j] = cpi * xi[row + j];
            }
        }
        Field2 p = delta_inv_div_div(g_, Q);
        p *= 2.0;
        p += delta_inv_div_div(g_, s.S);
        p.axpy(-1.0, duw);
        subtract_mean(p);
        std::array<const Field2*, 5> us = {&u[0], &u[1], &u[2], &u[3], &u[4]};
        ERSample er;
        er.t = t;
        Field2 resid = er_residual_stencil(g_, us, h, p, Rtot, &er.scale);
        er.res_l2 = resid.l2_norm();
        er.res_sup = resid.sup_norm();
        return er;
    }

    // amplitude-domain check away from the residual samples: mollified stress,
    // flow, and the pointwise ball statistics, nothing else
    NashScanRecord eval_scan(const SampleSpec& sp, BallStats& ball) {
        NashScanRecord rec;
        rec.spec = sp;
        auto wv = wave_at(sp.t);
        if (!wv) return rec;
        TimeGrid og;
        og.t0 = sp.t;
        og.dt = disc().dt_solve;
        og.nt = 1;
        SpaceTimeField rb = mollified_stress(wv->m - 1, og);
        CenterDiag diag = make_diag();
        Field2 rbs = rb.slice(0);
        wave_slice(*wv, rbs, sp.t, ball, &diag, nullptr);
        rec.sup_abar = diag.ab.sup_norm();
        rec.valid = true;
        return rec;
    }

    void band_norms(NashReport& rep) const {
        const BandStore& ps = nb_->psi_sum;
        const double lo = disc().band_lo, hi = disc().band_hi;
        for (int i = 0; i <= 40; ++i) {
            double tt = lo + (hi - lo) * i / 40.0;
            Field2 psl(FieldKind::Scalar, g_.n);
            ps.interp_add(tt, 1.0, psl);
            Field2 wt = grad_perp(g_, psl);
            rep.sup_wt = std::max(rep.sup_wt, wt.sup_norm());
            rep.c1_wt = std::max(rep.c1_wt, mat_sup(gradient_vec(g_, wt)));
        }
    }

    const NewtonBandResult* nb_;
    GridSpec g_;
    BaseCase bc_;
    ShearBackground bg_;
    GluedVelocity uvel_;
    int n_levels_;
};

inline NashReport run_nash_step(const NewtonBandResult& nb) {
    NashStage stage(&nb);
    return stage.run();
}

} // namespace nne
