// Command-line front end: base-case construction and verification, the gluing
// and erasure phases of one stage, reports and field export.
//
// Exit codes: 0 success, 2 validation failure (bad input, or a regime check
// promoted by --strict), 3 positivity-ball violation, 4 I/O failure.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "nne/io.hpp"
#include "nne/report.hpp"
#include "nne/stage.hpp"
#include "nne/verify.hpp"

using namespace nne;

namespace {

void usage() {
    std::printf(
        "usage: nne <command> [--config <path>] [--stage <q>] [--out <dir>] [--strict]\n"
        "commands:\n"
        "  init          write the starting fields, their manifest and the inductive table\n"
        "  run-stage     full stage on both bands; writes report.json and slices.csv\n"
        "  newton-steps  gluing phase only, positive band; prints the per-step table\n"
        "  nash-step     gluing plus erasure, positive band; prints the erasure summary\n"
        "  verify        residual of the starting fields on the verification lattice\n"
        "  report        print a previously written report.json\n"
        "  export        write the starting fields and manifest only\n");
}

struct Cli {
    std::string cmd;
    std::string config_path;
    int stage_q = -1;
    std::string out_dir;
    bool strict = false;
};

Cli parse_cli(int argc, char** argv) {
    Cli c;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        auto next = [&]() -> std::string {
            if (i + 1 >= argc) throw InvalidParams("missing value after " + a);
            return argv[++i];
        };
        if (a == "--config") c.config_path = next();
        else if (a == "--stage") c.stage_q = std::stoi(next());
        else if (a == "--out") c.out_dir = next();
        else if (a == "--strict") c.strict = true;
        else if (!a.empty() && a[0] == '-') throw InvalidParams("unknown flag " + a);
        else if (c.cmd.empty()) c.cmd = a;
        else throw InvalidParams("unexpected argument " + a);
    }
    return c;
}

RunConfig load_config(const Cli& cli) {
    RunConfig r;
    if (!cli.config_path.empty()) r = run_config_from(KvConfig::load(cli.config_path));
    if (cli.stage_q >= 0) r.stage.q = cli.stage_q;
    if (!cli.out_dir.empty()) r.out_dir = cli.out_dir;
    validate_run_config(r);
    return r;
}

// the starting triple sampled on a uniform lattice over the full time interval
std::vector<ManifestEntry> export_base_fields(const RunConfig& rc, const std::string& dir) {
    StageSchedule s = compute_schedule(rc.stage.params, rc.stage.q);
    BaseCase bc(s);
    GridSpec g{rc.stage.n_grid};
    TimeGrid tg;
    tg.t0 = -2.0;
    tg.nt = 65;
    tg.dt = 4.0 / (tg.nt - 1);
    SpaceTimeField u(FieldKind::Vector, g.n, tg);
    SpaceTimeField p(FieldKind::Scalar, g.n, tg);
    SpaceTimeField R(FieldKind::SymTensor, g.n, tg);
    for (int j = 0; j < tg.nt; ++j) {
        u.set_slice(j, bc.velocity(g, tg.t(j)));
        p.set_slice(j, bc.pressure(g, tg.t(j)));
        R.set_slice(j, bc.stress(g, tg.t(j)));
    }
    std::vector<ManifestEntry> files;
    auto save = [&](const char* name, const SpaceTimeField& f) {
        ManifestEntry e;
        e.file = name;
        write_field(dir + "/" + name, f, &e.sha256, &e.bytes);
        files.push_back(e);
    };
    save("u0.nne2", u);
    save("p0.nne2", p);
    save("R0.nne2", R);
    return files;
}

int cmd_init(const RunConfig& rc, bool fields_only) {
    std::filesystem::create_directories(rc.out_dir);
    auto files = export_base_fields(rc, rc.out_dir);
    write_manifest(rc.out_dir + "/manifest.json", files, config_echo(rc));
    if (!fields_only) {
        auto table = check_inductive_base(rc.stage.params, rc.stage.q, rc.stage.n_grid);
        JsonWriter w;
        w.obj_open();
        w.kv("q", rc.stage.q);
        emit_ind_table(w, "inductive_base", table);
        w.obj_close();
        write_text(rc.out_dir + "/base_report.json", w.str() + "\n");
        for (const IndRow& r : table)
            std::printf("%-16s measured %.6g  bound %.6g  %s%s%s\n", r.name.c_str(),
                        r.measured, r.bound, r.pass ? "pass" : "FAIL",
                        r.note.empty() ? "" : "  ", r.note.c_str());
    }
    std::printf("wrote %zu field files to %s\n", files.size(), rc.out_dir.c_str());
    return 0;
}

int cmd_verify(const RunConfig& rc, bool strict) {
    StageSchedule s = compute_schedule(rc.stage.params, rc.stage.q);
    BaseCase bc(s);
    GridSpec g{rc.verify_n};
    g.validate();
    ERTriple f;
    f.velocity = [&](double t) { return bc.velocity(g, t); };
    f.pressure = [&](double t) { return bc.pressure(g, t); };
    f.stress = [&](double t) { return bc.stress(g, t); };
    std::vector<double> times;
    for (int i = 0; i < rc.verify_slices; ++i)
        times.push_back(-2.0 + 4.0 * (i + 0.5) / rc.verify_slices);
    ERReport rep = verify_euler_reynolds(g, f, times, 1e-4);
    std::printf("starting-triple residual: rel_l2 %.3e rel_sup %.3e over %zu slices at %d^2\n",
                rep.rel_l2, rep.rel_sup, rep.samples.size(), g.n);
    if (strict && rep.rel_sup > 1e-8) {
        std::printf("strict: residual above the 1e-8 identity floor\n");
        return 2;
    }
    return 0;
}

void print_levels(const std::vector<LevelReport>& levels) {
    for (const LevelReport& lr : levels)
        std::printf("  step %d: delta %.4g  sup R in %.4g out %.4g  ball %.3f  "
                    "residual rel %.3e  (%.1f s)\n",
                    lr.level, lr.delta_n, lr.sup_R_in, lr.sup_R_out, lr.ball.frob_max,
                    lr.er.rel_sup, lr.seconds);
}

int cmd_newton(const RunConfig& rc) {
    NewtonBandResult nb = run_newton_band(rc.stage, +1);
    std::printf("gluing phase, band [%.4g, %.4g], %zu steps:\n", nb.disc.band_lo,
                nb.disc.band_hi, nb.levels.size());
    print_levels(nb.levels);
    return 0;
}

int cmd_nash(const RunConfig& rc) {
    NewtonBandResult nb = run_newton_band(rc.stage, +1);
    print_levels(nb.levels);
    NashReport rep = run_nash_step(nb);
    std::printf("erasure step: ball %.3f  gamma_sq_min %.3f  residual rel_l2 %.3e "
                "rel_sup %.3e  (%.1f s)\n",
                rep.ball.frob_max, rep.ball.gamma_sq_min, rep.er.rel_l2, rep.er.rel_sup,
                rep.seconds);
    std::printf("  wave sup %.4g  correction sup %.4g  increment %.4g (target %.4g)\n",
                rep.sup_ws, rep.sup_wt, rep.pert_measured, rep.pert_bound);
    std::printf("  stress parts: S %.4g  advective %.4g  oscillation %.4g\n", rep.sup_S,
                rep.sup_RL, rep.sup_RO);
    return 0;
}

int cmd_run_stage(const RunConfig& rc, bool strict) {
    StageOutcome st = run_stage(rc.stage);
    auto base_table = check_inductive_base(rc.stage.params, rc.stage.q, rc.stage.n_grid);
    auto next_table = check_inductive_next(st);
    std::filesystem::create_directories(rc.out_dir);
    write_text(rc.out_dir + "/report.json", outcome_json(st, base_table, next_table, true));
    write_text(rc.out_dir + "/slices.csv", outcome_csv(st));
    std::printf("stage %d -> %d: residual rel_l2 %.3e rel_sup %.3e over %zu samples "
                "(%.1f s)\n",
                st.cfg.q, st.cfg.q + 1, st.er.rel_l2, st.er.rel_sup, st.er.samples.size(),
                st.seconds);
    for (const BandSummary& bs : st.bands)
        std::printf("  band %+d: supp u [%.4g, %.4g]  supp R [%.4g, %.4g]\n", bs.sign,
                    bs.supp_u_lo, bs.supp_u_hi, bs.supp_R_lo, bs.supp_R_hi);
    std::printf("  supports: u %s  R %s  a-priori margin %s (lhs %.4g vs %.4g)\n",
                st.supp_u_ok ? "ok" : "VIOLATED", st.supp_R_ok ? "ok" : "VIOLATED",
                st.margin_ok ? "ok" : "violated", st.margin_lhs, st.margin_q);
    std::printf("  increment %.4g vs target %.4g (%s)\n", st.pert_measured, st.pert_bound,
                st.pert_ok ? "ok" : "exceeded");
    std::printf("  digest %s\n", stage_digest(st).c_str());
    std::printf("wrote %s/report.json and slices.csv\n", rc.out_dir.c_str());
    if (strict && (!st.supp_u_ok || !st.supp_R_ok || !st.pert_ok || !st.margin_ok)) {
        std::printf("strict: a regime check failed (see above)\n");
        return 2;
    }
    return 0;
}

int cmd_report(const RunConfig& rc) {
    std::string path = rc.out_dir + "/report.json";
    std::ifstream is(path);
    if (!is) throw IoError("no report at " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::fwrite(text.data(), 1, text.size(), stdout);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        Cli cli = parse_cli(argc, argv);
        if (cli.cmd.empty()) {
            usage();
            return 2;
        }
        RunConfig rc = load_config(cli);
        if (cli.strict) rc.stage.strict = true;
        if (cli.cmd == "init") return cmd_init(rc, false);
        if (cli.cmd == "export") return cmd_init(rc, true);
        if (cli.cmd == "verify") return cmd_verify(rc, cli.strict);
        if (cli.cmd == "newton-steps") return cmd_newton(rc);
        if (cli.cmd == "nash-step") return cmd_nash(rc);
        if (cli.cmd == "run-stage") return cmd_run_stage(rc, cli.strict);
        if (cli.cmd == "report") return cmd_report(rc);
        usage();
        return 2;
    } catch (const OutsideBall& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 4;
    } catch (const FormatVersionMismatch& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 4;
    } catch (const Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
