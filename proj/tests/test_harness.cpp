#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "nne/base_case.hpp"
#include "nne/io.hpp"
#include "nne/report.hpp"
#include "nne/stage.hpp"
#include "nne/verify.hpp"

using namespace nne;

namespace {

std::string tmp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("the starting triple satisfies the relaxed equation on a fine lattice") {
    StageSchedule s = compute_schedule(IterationParams{}, 0);
    BaseCase bc(s);
    GridSpec g{128};
    ERTriple f;
    f.velocity = [&](double t) { return bc.velocity(g, t); };
    f.pressure = [&](double t) { return bc.pressure(g, t); };
    f.stress = [&](double t) { return bc.stress(g, t); };
    // hit the ramp shoulders and the plateau of the shape function
    std::vector<double> times = {-1.8, -1.5, -1.31, 1.2, 1.33, 1.5, 1.68, 1.85};
    ERReport rep = verify_euler_reynolds(g, f, times, 1e-4);
    CHECK(rep.rel_sup < 1e-8);
    CHECK(rep.scale > 1.0);
}

TEST_CASE("a steady shear with zero pressure and stress has zero residual") {
    GridSpec g{64};
    Field2 u(FieldKind::Vector, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) u.at(0, i, j) = std::sin(kTwoPi * j / g.n);
    Field2 p(FieldKind::Scalar, g.n);
    Field2 R(FieldKind::SymTensor, g.n);
    std::array<const Field2*, 5> us = {&u, &u, &u, &u, &u};
    double scale = 0.0;
    Field2 res = er_residual_stencil(g, us, 1e-3, p, R, &scale);
    CHECK(res.sup_norm() < 1e-12);
}

TEST_CASE("the residual detects a corrupted pressure at the exact gradient norm") {
    // adding p = cos(2 pi x1) to an exact triple leaves residual = grad p,
    // whose L2 norm over both components is 2 pi / sqrt(2)
    GridSpec g{64};
    Field2 u(FieldKind::Vector, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) u.at(0, i, j) = std::sin(kTwoPi * j / g.n);
    Field2 p(FieldKind::Scalar, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) p.at(0, i, j) = std::cos(kTwoPi * i / g.n);
    Field2 R(FieldKind::SymTensor, g.n);
    std::array<const Field2*, 5> us = {&u, &u, &u, &u, &u};
    double scale = 0.0;
    Field2 res = er_residual_stencil(g, us, 1e-3, p, R, &scale);
    CHECK(res.l2_norm() == Catch::Approx(kTwoPi / std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("inductive table of the starting triple") {
    IterationParams pr;
    auto table = check_inductive_base(pr, 0, 64);
    REQUIRE(table.size() >= 3 + 2 * pr.L + (pr.L - 1) + pr.L);

    std::map<std::string, IndRow> rows;
    for (const auto& r : table) rows[r.name] = r;

    // the zeroth-order velocity bound cannot hold at these parameters:
    // delta_0^{1/2} = 0.8099 > 1/2, so M (1 - delta_0^{1/2}) < M delta_0^{1/2}
    const IndRow& i1 = rows.at("ind1 |u|_0");
    CHECK_FALSE(i1.pass);
    CHECK(i1.measured == Catch::Approx(0.80984).epsilon(1e-3));
    CHECK(i1.bound == Catch::Approx(2.0 * (1.0 - 0.80984)).epsilon(1e-3));

    // it does hold once M covers the ratio delta^{1/2} / (1 - delta^{1/2})
    IterationParams big = pr;
    big.M = 5.0;
    auto table5 = check_inductive_base(big, 0, 64);
    for (const auto& r : table5)
        if (r.name == "ind1 |u|_0") CHECK(r.pass);

    for (int N = 1; N <= pr.L; ++N) {
        CHECK(rows.at("ind2 |u|_" + std::to_string(N)).pass);
        CHECK(rows.at("ind3 |p|_" + std::to_string(N)).pass);
    }
    StageSchedule s = compute_schedule(pr, 0);
    for (int N = 0; N <= pr.L; ++N) {
        const IndRow& r = rows.at("ind4 |R|_" + std::to_string(N));
        CHECK(r.pass);
        CHECK(r.bound ==
              Catch::Approx(s.delta_q1 * std::pow(s.lambda_q, N - 2.0 * pr.alpha))
                  .epsilon(1e-12));
    }
    for (int N = 0; N < pr.L; ++N) CHECK(rows.at("ind5 |DtR|_" + std::to_string(N)).pass);
    const IndRow& i6 = rows.at("ind6 supp R margin");
    CHECK(i6.pass);
    CHECK(i6.bound == Catch::Approx(1.0 / (std::sqrt(s.delta_q) * s.lambda_q)).epsilon(1e-12));
    CHECK(i6.bound < 0.25);
}

TEST_CASE("sha-256 known answers") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    // two-block message
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("field files round trip bit exactly") {
    TimeGrid tg;
    tg.t0 = -0.25;
    tg.dt = 0.01;
    tg.nt = 7;
    SpaceTimeField f(FieldKind::SymTensor, 16, tg);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (double& v : f.data) v = U(rng);

    std::string path = tmp_path("nne_roundtrip.nne2");
    std::string sha;
    size_t bytes = 0;
    write_field(path, f, &sha, &bytes);
    CHECK(bytes == 44 + f.data.size() * sizeof(double));
    CHECK(sha.size() == 64);

    SpaceTimeField back = read_field(path);
    REQUIRE(back.kind == f.kind);
    REQUIRE(back.n == f.n);
    REQUIRE(back.tg.nt == tg.nt);
    CHECK(back.tg.t0 == tg.t0);
    CHECK(back.tg.dt == tg.dt);
    CHECK(back.data == f.data);

    // the written bytes hash to the reported digest
    std::ifstream is(path, std::ios::binary);
    std::string raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    CHECK(sha256_hex(raw) == sha);
    std::filesystem::remove(path);
}

TEST_CASE("malformed field files are rejected without partial state") {
    TimeGrid tg;
    tg.t0 = 0.0;
    tg.dt = 0.1;
    tg.nt = 3;
    SpaceTimeField f(FieldKind::Scalar, 8, tg);
    for (size_t i = 0; i < f.data.size(); ++i) f.data[i] = static_cast<double>(i);
    std::string good = field_file_bytes(f);

    auto write_raw = [](const std::string& path, const std::string& bytes) {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    };

    std::string path = tmp_path("nne_malformed.nne2");
    std::string bad = good;
    bad[0] = 'X';
    write_raw(path, bad);
    CHECK_THROWS_AS(read_field(path), FormatVersionMismatch);

    bad = good;
    bad[4] = 9; // unknown version
    write_raw(path, bad);
    CHECK_THROWS_AS(read_field(path), FormatVersionMismatch);

    write_raw(path, good.substr(0, good.size() - 8)); // truncated payload
    CHECK_THROWS_AS(read_field(path), IoError);

    write_raw(path, good.substr(0, 20)); // truncated header
    CHECK_THROWS_AS(read_field(path), IoError);

    CHECK_THROWS_AS(read_field(tmp_path("nne_does_not_exist.nne2")), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("config files parse into a validated run configuration") {
    std::istringstream is(
        "# comment\n"
        "a = 2.0\n"
        "b=1.5\n"
        "grid_n = 64\n"
        "store_n = 32\n"
        "levels = 2\n"
        "out_dir = /tmp/somewhere\n"
        "strict = 1\n");
    KvConfig kv = KvConfig::parse(is);
    CHECK(kv.get_d("a", 0.0) == 2.0);
    CHECK(kv.get_i("grid_n", 0) == 64);
    CHECK_FALSE(kv.has("beta"));

    RunConfig rc = run_config_from(kv);
    CHECK(rc.stage.n_grid == 64);
    CHECK(rc.stage.levels == 2);
    CHECK(rc.stage.strict);
    CHECK(rc.out_dir == "/tmp/somewhere");
    CHECK_NOTHROW(validate_run_config(rc));

    SECTION("grids must be powers of two") {
        rc.stage.n_grid = 48;
        CHECK_THROWS_AS(validate_run_config(rc), InvalidParams);
    }
    SECTION("the time exponent must exceed one") {
        rc.stage.params.b = 1.0;
        CHECK_THROWS_AS(validate_run_config(rc), InvalidParams);
    }
    SECTION("malformed lines carry their line number") {
        std::istringstream bad("a = 2.0\nnot a pair\n");
        CHECK_THROWS_AS(KvConfig::parse(bad), InvalidParams);
    }
    SECTION("unreadable files raise an i/o error") {
        CHECK_THROWS_AS(KvConfig::load(tmp_path("nne_no_such.cfg")), IoError);
    }
}

TEST_CASE("manifest lists every exported file with its digest") {
    std::string dir = tmp_path("nne_manifest_dir");
    std::filesystem::create_directories(dir);
    TimeGrid tg;
    tg.t0 = 0.0;
    tg.dt = 0.5;
    tg.nt = 2;
    SpaceTimeField f(FieldKind::Vector, 8, tg);
    ManifestEntry e;
    e.file = "f.nne2";
    write_field(dir + "/f.nne2", f, &e.sha256, &e.bytes);
    write_manifest(dir + "/manifest.json", {e}, {{"grid_n", "8"}});

    std::ifstream is(dir + "/manifest.json");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"format\": \"NNE2\"") != std::string::npos);
    CHECK(text.find("\"f.nne2\"") != std::string::npos);
    CHECK(text.find(e.sha256) != std::string::npos);
    CHECK(text.find("\"grid_n\": \"8\"") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("a narrow band runs end to end with supports inside the windows", "[slow]") {
    StageConfig cfg;
    cfg.n_grid = 32;
    cfg.store_n = 32;
    cfg.levels = 1;
    cfg.samples_regular = 1;
    cfg.samples_bump_per_level = 1;
    cfg.nash_scan_per_level = 2;
    BandSummary bs = run_band(cfg, 1.38, 1.52, +1);

    StageSchedule s = compute_schedule(cfg.params, cfg.q);
    double margin_q1 = 1.0 / (std::sqrt(s.delta_q1) * s.lambda_q1);
    CHECK(bs.supp_u_lo > 1.0);
    CHECK(bs.supp_u_hi < 2.0);
    CHECK(bs.supp_R_lo >= 1.0 + margin_q1);
    CHECK(bs.supp_R_hi <= 2.0 - margin_q1);
    REQUIRE(!bs.levels.empty());
    CHECK(bs.levels.back().ball.frob_max < 0.5);
    CHECK(bs.nash.ball.frob_max < 0.5);
    CHECK(bs.nash.er.rel_sup < 1e-3);
    CHECK(bs.nash.div_ubar < 1e-8);

    // the report serializer is deterministic for a fixed outcome
    StageOutcome st;
    st.cfg = cfg;
    st.sched = s;
    st.bands.push_back(bs);
    st.er = bs.nash.er;
    std::string j1 = outcome_json(st, {}, check_inductive_next(st), false);
    std::string j2 = outcome_json(st, {}, check_inductive_next(st), false);
    CHECK(j1 == j2);
    CHECK(stage_digest(st).size() == 64);
    CHECK(outcome_csv(st).rfind("kind,band,level,t,res_l2,res_sup,scale", 0) == 0);
}
