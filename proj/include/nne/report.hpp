#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "base_case.hpp"
#include "holder.hpp"
#include "io.hpp"
#include "stage.hpp"

namespace nne {

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// One row of the inductive-estimate table: a measured norm against its target
// bound, with the ratio left to the reader of the report.
struct IndRow {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::string note;
};

inline IndRow ind_row(std::string name, double measured, double bound, std::string note = "") {
    IndRow r;
    r.name = std::move(name);
    r.measured = measured;
    r.bound = bound;
    r.pass = measured <= bound;
    r.note = std::move(note);
    return r;
}

// Inductive table of the analytic starting triple at level q, measured with
// the grid estimators. The advection term of the material derivative vanishes
// for a shear aligned with its own level sets, so D_t R is the plain time
// derivative there.
inline std::vector<IndRow> check_inductive_base(const IterationParams& pr, int q, int n_grid) {
    StageSchedule s = compute_schedule(pr, q);
    BaseCase bc(s);
    GridSpec g{n_grid};
    g.validate();
    std::vector<IndRow> table;

    // worst times of |f'| and |f''| over the positive band
    double t_fd = bc.ramp_lo, max_fd = 0.0, t_fdd = bc.ramp_lo, max_fdd = 0.0;
    const int NS = 4000;
    const double h_fd = 1e-5;
    for (int i = 0; i <= NS; ++i) {
        double t = bc.ramp_lo + (bc.ramp_hi - bc.ramp_lo) * i / NS;
        double fd = std::fabs(bc.f_dot(t));
        if (fd > max_fd) { max_fd = fd; t_fd = t; }
        double fdd = std::fabs(bc.f_dot(t + h_fd) - bc.f_dot(t - h_fd)) / (2.0 * h_fd);
        if (fdd > max_fdd) { max_fdd = fdd; t_fdd = t; }
    }

    Field2 u0 = bc.velocity(g, 0.0);
    double sq = std::sqrt(s.delta_q);
    table.push_back(ind_row("ind1 |u|_0", u0.sup_norm(), pr.M * (1.0 - sq),
                            sq >= 0.5 ? "needs delta_q^{1/2} < 1/2, i.e. larger a" : ""));
    for (int N = 1; N <= pr.L; ++N) {
        Field2 un(FieldKind::Scalar, g.n);
        std::copy(u0.comp(1), u0.comp(1) + u0.comp_size(), un.comp(0));
        table.push_back(ind_row("ind2 |u|_" + std::to_string(N),
                                holder_seminorm_int(g, un, N),
                                pr.M * sq * std::pow(s.lambda_q, N)));
    }
    for (int N = 1; N <= pr.L; ++N)
        table.push_back(ind_row("ind3 |p|_" + std::to_string(N), 0.0,
                                pr.M * pr.M * s.delta_q * std::pow(s.lambda_q, N),
                                "the starting pressure vanishes"));
    Field2 R(FieldKind::Scalar, g.n);
    {
        Field2 Rf = bc.stress(g, t_fd);
        std::copy(Rf.comp(1), Rf.comp(1) + Rf.comp_size(), R.comp(0));
    }
    for (int N = 0; N <= pr.L; ++N)
        table.push_back(ind_row("ind4 |R|_" + std::to_string(N),
                                holder_seminorm_int(g, R, N),
                                s.delta_q1 * std::pow(s.lambda_q, N - 2.0 * pr.alpha)));
    Field2 dR(FieldKind::Scalar, g.n);
    {
        // five-point time stencil at the worst |f''|
        const double h = 1e-4;
        Field2 acc(FieldKind::SymTensor, g.n);
        const double w[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
        for (int j = 0; j < 5; ++j) {
            if (w[j] == 0.0) continue;
            Field2 Rj = bc.stress(g, t_fdd + (j - 2) * h);
            acc.axpy(w[j] / (12.0 * h), Rj);
        }
        std::copy(acc.comp(1), acc.comp(1) + acc.comp_size(), dR.comp(0));
    }
    for (int N = 0; N <= pr.L - 1; ++N)
        table.push_back(ind_row(
            "ind5 |DtR|_" + std::to_string(N), holder_seminorm_int(g, dR, N),
            s.delta_q1 * sq * std::pow(s.lambda_q, N + 1 - 2.0 * pr.alpha),
            "advection vanishes for the shear; time derivative measured by stencil"));
    {
        double m = 1.0 / (sq * s.lambda_q);
        bool inside = m < 0.25 && bc.ramp_lo >= 1.0 + m && bc.ramp_hi <= 2.0 - m;
        IndRow r;
        r.name = "ind6 supp R margin";
        r.measured = std::min(bc.ramp_lo - 1.0, 2.0 - bc.ramp_hi);
        r.bound = m;
        r.pass = inside;
        r.note = "pass means margin >= (delta^{1/2} lambda)^{-1} and that is < 1/4";
        table.push_back(r);
    }
    return table;
}

// Measured proxies for the corrected triple. The stage only carries the new
// fields at sample times, so these rows bound the norms from the recorded
// sample diagnostics rather than from a global scan.
inline std::vector<IndRow> check_inductive_next(const StageOutcome& st) {
    const StageSchedule& s = st.sched;
    double pert0 = 0.0, pert1 = 0.0, ring = 0.0, stress_parts = 0.0;
    for (const BandSummary& bs : st.bands) {
        for (const auto& r : bs.nash.samples) {
            pert0 = std::max(pert0, r.pert0);
            pert1 = std::max(pert1, r.pert1);
            ring = std::max(ring, r.sup_ring);
        }
        double glue = bs.levels.empty() ? 0.0 : bs.levels.back().sup_R_out;
        double base = bs.levels.empty() ? 0.0 : bs.levels.front().sup_R_in;
        double moll = (1.0 - st.m_ell) / std::max(st.m_ell, 1e-300) * base;
        stress_parts = std::max(stress_parts,
                                bs.nash.sup_RL + bs.nash.sup_RO + ring + glue + moll);
    }
    double sq = std::sqrt(s.delta_q), sq1 = std::sqrt(s.delta_q1);
    std::vector<IndRow> table;
    table.push_back(ind_row("ind1 |u|_0 (proxy)", sq + pert0,
                            st.cfg.params.M * (1.0 - sq1),
                            "input sup plus the largest measured increment"));
    table.push_back(ind_row("ind2 |u|_1 (proxy)", sq * s.lambda_q + pert1,
                            st.cfg.params.M * sq1 * s.lambda_q1));
    table.push_back(ind_row("ind4 |R|_0 (proxy)", stress_parts,
                            s.delta_q2 * std::pow(s.lambda_q1, -2.0 * st.cfg.params.alpha),
                            "sum of the stress parts at the samples; the advective "
                            "part dominates at desk scale"));
    {
        double worst = 1e300;
        for (const BandSummary& bs : st.bands) {
            double lo = bs.sign > 0 ? 1.0 : -2.0;
            double hi = bs.sign > 0 ? 2.0 : -1.0;
            worst = std::min(worst, std::min(bs.supp_R_lo - lo, hi - bs.supp_R_hi));
        }
        IndRow r;
        r.name = "ind6 supp R margin (q+1)";
        r.measured = worst;
        r.bound = st.margin_q1;
        r.pass = st.supp_R_ok;
        r.note = "pass means the measured margin covers (delta_{q+1}^{1/2} lambda_{q+1})^{-1}";
        table.push_back(r);
    }
    {
        IndRow r;
        r.name = "velocity increment";
        r.measured = st.pert_measured;
        r.bound = st.pert_bound;
        r.pass = st.pert_ok;
        r.note = "|du|_0 + |du|_1 / lambda_{q+1} against 2 M delta_{q+1}^{1/2}; the "
                 "profile amplitude kappa is not absorbed at desk scale";
        table.push_back(r);
    }
    return table;
}

// Minimal streaming JSON writer; commas are tracked per nesting level.
class JsonWriter {
public:
    void obj_open(const std::string& key = "") { open('{', key); }
    void obj_close() { close('}'); }
    void arr_open(const std::string& key = "") { open('[', key); }
    void arr_close() { close(']'); }
    void kv(const std::string& key, double v) { item(key, fmt_g(v)); }
    void kv(const std::string& key, int v) { item(key, std::to_string(v)); }
    void kv(const std::string& key, long v) { item(key, std::to_string(v)); }
    void kv(const std::string& key, size_t v) { item(key, std::to_string(v)); }
    void kv(const std::string& key, bool v) { item(key, v ? "true" : "false"); }
    void kv(const std::string& key, const std::string& v) {
        item(key, "\"" + json_escape(v) + "\"");
    }
    void kv(const std::string& key, const char* v) { kv(key, std::string(v)); }
    std::string str() const { return os_.str(); }

private:
    void comma() {
        if (!depth_.empty() && depth_.back()) os_ << ",";
        if (!depth_.empty()) depth_.back() = true;
    }
    void open(char c, const std::string& key) {
        comma();
        if (!key.empty()) os_ << "\"" << json_escape(key) << "\":";
        os_ << c;
        depth_.push_back(false);
    }
    void close(char c) {
        os_ << c;
        depth_.pop_back();
    }
    void item(const std::string& key, const std::string& v) {
        comma();
        if (!key.empty()) os_ << "\"" << json_escape(key) << "\":";
        os_ << v;
    }

    std::ostringstream os_;
    std::vector<bool> depth_;
};

inline void emit_ind_table(JsonWriter& w, const std::string& key,
                           const std::vector<IndRow>& table) {
    w.arr_open(key);
    for (const IndRow& r : table) {
        w.obj_open();
        w.kv("name", r.name);
        w.kv("measured", r.measured);
        w.kv("bound", r.bound);
        w.kv("pass", r.pass);
        if (!r.note.empty()) w.kv("note", r.note);
        w.obj_close();
    }
    w.arr_close();
}

inline void emit_er(JsonWriter& w, const std::string& key, const ERReport& er) {
    w.obj_open(key);
    w.kv("scale", er.scale);
    w.kv("rel_l2", er.rel_l2);
    w.kv("rel_sup", er.rel_sup);
    w.kv("samples", er.samples.size());
    w.obj_close();
}

inline std::string outcome_json(const StageOutcome& st, const std::vector<IndRow>& base_table,
                                const std::vector<IndRow>& next_table, bool with_timings) {
    JsonWriter w;
    w.obj_open();
    w.kv("q", st.cfg.q);
    w.kv("lambda_q", st.sched.lambda_q);
    w.kv("lambda_q1", st.sched.lambda_q1);
    w.kv("delta_q", st.sched.delta_q);
    w.kv("delta_q1", st.sched.delta_q1);
    w.kv("gamma_steps", st.sched.Gamma);
    w.kv("m_ell", st.m_ell);
    emit_er(w, "er", st.er);
    w.kv("sup_wt", st.sup_wt);
    w.kv("sup_ws", st.sup_ws);
    w.kv("pert_measured", st.pert_measured);
    w.kv("pert_bound", st.pert_bound);
    w.kv("pert_ok", st.pert_ok);
    w.kv("margin_q", st.margin_q);
    w.kv("margin_q1", st.margin_q1);
    w.kv("margin_lhs", st.margin_lhs);
    w.kv("margin_ok", st.margin_ok);
    w.kv("supp_u_ok", st.supp_u_ok);
    w.kv("supp_R_ok", st.supp_R_ok);
    if (with_timings) w.kv("seconds", st.seconds);
    w.arr_open("bands");
    for (const BandSummary& bs : st.bands) {
        w.obj_open();
        w.kv("sign", bs.sign);
        w.kv("band_lo", bs.band_lo);
        w.kv("band_hi", bs.band_hi);
        w.kv("supp_u_lo", bs.supp_u_lo);
        w.kv("supp_u_hi", bs.supp_u_hi);
        w.kv("supp_R_lo", bs.supp_R_lo);
        w.kv("supp_R_hi", bs.supp_R_hi);
        if (with_timings) w.kv("seconds", bs.seconds);
        w.arr_open("levels");
        for (const LevelReport& lr : bs.levels) {
            w.obj_open();
            w.kv("level", lr.level);
            w.kv("delta_n", lr.delta_n);
            w.kv("sup_R_in", lr.sup_R_in);
            w.kv("sup_R_out", lr.sup_R_out);
            w.kv("ball_frob_max", lr.ball.frob_max);
            w.kv("ball_gamma_sq_min", lr.ball.gamma_sq_min);
            emit_er(w, "er", lr.er);
            if (with_timings) w.kv("seconds", lr.seconds);
            w.obj_close();
        }
        w.arr_close();
        w.obj_open("nash");
        const NashReport& nr = bs.nash;
        w.kv("ball_frob_max", nr.ball.frob_max);
        w.kv("ball_gamma_sq_min", nr.ball.gamma_sq_min);
        emit_er(w, "er", nr.er);
        w.kv("sup_wt", nr.sup_wt);
        w.kv("c1_wt", nr.c1_wt);
        w.kv("sup_ws", nr.sup_ws);
        w.kv("sup_S", nr.sup_S);
        w.kv("sup_RL", nr.sup_RL);
        w.kv("sup_RO", nr.sup_RO);
        w.kv("div_ubar", nr.div_ubar);
        w.arr_open("samples");
        for (const NashSampleReport& r : nr.samples) {
            w.obj_open();
            w.kv("t", r.spec.t);
            w.kv("is_bump", r.spec.is_bump);
            w.kv("center_wave", r.center_wave);
            w.kv("sup_ws", r.sup_ws);
            w.kv("rel_split", r.rel_split);
            w.kv("cancel_rel", r.cancel_rel);
            w.kv("flow_rel", r.flow_rel);
            w.kv("trans_rel", r.trans_rel);
            w.kv("div_comm_rel", r.div_comm_rel);
            w.kv("transport_rel", r.transport_rel);
            w.kv("sup_RL", r.sup_RL);
            w.kv("sup_RO", r.sup_RO);
            w.kv("sup_ring", r.sup_ring);
            w.kv("res_l2", r.er.res_l2);
            w.kv("res_sup", r.er.res_sup);
            w.kv("scale", r.er.scale);
            w.obj_close();
        }
        w.arr_close();
        w.arr_open("scans");
        for (const NashScanRecord& sc : nr.scans) {
            w.obj_open();
            w.kv("t", sc.spec.t);
            w.kv("slot", sc.spec.level);
            w.kv("valid", sc.valid);
            w.kv("sup_abar", sc.sup_abar);
            w.obj_close();
        }
        w.arr_close();
        w.obj_close();
        w.obj_close();
    }
    w.arr_close();
    emit_ind_table(w, "inductive_base", base_table);
    emit_ind_table(w, "inductive_next", next_table);
    w.obj_close();
    return w.str() + "\n";
}

// Deterministic fingerprint of a stage outcome: the timing-free report hashed.
inline std::string stage_digest(const StageOutcome& st) {
    std::vector<IndRow> next = check_inductive_next(st);
    return sha256_hex(outcome_json(st, {}, next, false));
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << text;
    if (!os) throw IoError("short write to " + path);
}

// Flat per-sample norms for external plotting.
inline std::string outcome_csv(const StageOutcome& st) {
    std::ostringstream os;
    os << "kind,band,level,t,res_l2,res_sup,scale\n";
    char buf[160];
    for (const BandSummary& bs : st.bands) {
        for (const LevelReport& lr : bs.levels)
            for (const ERSample& s : lr.er.samples) {
                std::snprintf(buf, sizeof(buf), "newton,%d,%d,%.12g,%.6g,%.6g,%.6g\n",
                              bs.sign, lr.level, s.t, s.res_l2, s.res_sup, s.scale);
                os << buf;
            }
        for (const NashSampleReport& r : bs.nash.samples) {
            std::snprintf(buf, sizeof(buf), "nash,%d,%d,%.12g,%.6g,%.6g,%.6g\n", bs.sign,
                          r.spec.level, r.spec.t, r.er.res_l2, r.er.res_sup, r.er.scale);
            os << buf;
        }
    }
    return os.str();
}

} // namespace nne
