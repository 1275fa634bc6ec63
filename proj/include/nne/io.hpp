#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "newton.hpp"

namespace nne {

// Plain SHA-256 (FIPS 180-4), enough to fingerprint field files and reports.
class Sha256 {
public:
    Sha256() { reset(); }

    void reset() {
        static constexpr uint32_t init[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                             0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
        std::memcpy(h_, init, sizeof(h_));
        len_ = 0;
        buf_fill_ = 0;
    }

    void update(const void* data, size_t n) {
        const uint8_t* p = static_cast<const uint8_t*>(data);
        len_ += n;
        while (n > 0) {
            size_t take = std::min(n, sizeof(buf_) - buf_fill_);
            std::memcpy(buf_ + buf_fill_, p, take);
            buf_fill_ += take;
            p += take;
            n -= take;
            if (buf_fill_ == sizeof(buf_)) {
                block(buf_);
                buf_fill_ = 0;
            }
        }
    }
    void update(const std::string& s) { update(s.data(), s.size()); }

    std::string hex() {
        uint64_t bits = len_ * 8;
        uint8_t pad = 0x80;
        update(&pad, 1);
        uint8_t zero = 0;
        while (buf_fill_ != 56) update(&zero, 1);
        uint8_t lenb[8];
        for (int i = 0; i < 8; ++i) lenb[i] = static_cast<uint8_t>(bits >> (56 - 8 * i));
        update(lenb, 8);
        char out[65];
        for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h_[i]);
        return std::string(out, 64);
    }

private:
    static uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void block(const uint8_t* p) {
        static constexpr uint32_t K[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
            0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
            0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
            0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
            0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
            0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
            0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
            0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
        uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (uint32_t(p[4 * i]) << 24) | (uint32_t(p[4 * i + 1]) << 16) |
                   (uint32_t(p[4 * i + 2]) << 8) | uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3];
        uint32_t e = h_[4], f = h_[5], g = h_[6], h = h_[7];
        for (int i = 0; i < 64; ++i) {
            uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            uint32_t ch = (e & f) ^ (~e & g);
            uint32_t t1 = h + S1 + ch + K[i] + w[i];
            uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            uint32_t mj = (a & b) ^ (a & c) ^ (b & c);
            uint32_t t2 = S0 + mj;
            h = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h_[0] += a; h_[1] += b; h_[2] += c; h_[3] += d;
        h_[4] += e; h_[5] += f; h_[6] += g; h_[7] += h;
    }

    uint32_t h_[8];
    uint64_t len_ = 0;
    uint8_t buf_[64];
    size_t buf_fill_ = 0;
};

inline std::string sha256_hex(const std::string& bytes) {
    Sha256 s;
    s.update(bytes);
    return s.hex();
}

// Field file layout: a 16 byte header (magic "NNE2", version u32, kind u8, 7
// pad bytes), then n_x, n_y, n_t as u32, t0 and dt as f64, then the samples as
// little-endian f64, component-major, then time-major, then row-major. The
// in-memory SpaceTimeField layout matches, so the payload is a single span.
inline constexpr uint32_t kFieldFormatVersion = 1;

inline std::string field_file_bytes(const SpaceTimeField& f) {
    std::string out;
    out.reserve(44 + f.data.size() * sizeof(double));
    out.append("NNE2", 4);
    auto put = [&out](const void* p, size_t n) {
        out.append(static_cast<const char*>(p), n);
    };
    uint32_t ver = kFieldFormatVersion;
    put(&ver, 4);
    uint8_t kind = static_cast<uint8_t>(f.kind);
    put(&kind, 1);
    char pad[7] = {};
    put(pad, 7);
    uint32_t nx = static_cast<uint32_t>(f.n), ny = static_cast<uint32_t>(f.n);
    uint32_t nt = static_cast<uint32_t>(f.tg.nt);
    put(&nx, 4);
    put(&ny, 4);
    put(&nt, 4);
    put(&f.tg.t0, 8);
    put(&f.tg.dt, 8);
    put(f.data.data(), f.data.size() * sizeof(double));
    return out;
}

inline void write_field(const std::string& path, const SpaceTimeField& f,
                        std::string* sha_out = nullptr, size_t* bytes_out = nullptr) {
    std::string bytes = field_file_bytes(f);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("short write to " + path);
    if (sha_out) *sha_out = sha256_hex(bytes);
    if (bytes_out) *bytes_out = bytes.size();
}

inline SpaceTimeField read_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "NNE2", 4) != 0)
        throw FormatVersionMismatch("bad magic in " + path);
    uint32_t ver = 0;
    is.read(reinterpret_cast<char*>(&ver), 4);
    if (!is || ver != kFieldFormatVersion)
        throw FormatVersionMismatch("unsupported field file version " + std::to_string(ver));
    uint8_t kind = 0;
    char pad[7];
    is.read(reinterpret_cast<char*>(&kind), 1);
    is.read(pad, 7);
    uint32_t nx = 0, ny = 0, nt = 0;
    double t0 = 0.0, dt = 0.0;
    is.read(reinterpret_cast<char*>(&nx), 4);
    is.read(reinterpret_cast<char*>(&ny), 4);
    is.read(reinterpret_cast<char*>(&nt), 4);
    is.read(reinterpret_cast<char*>(&t0), 8);
    is.read(reinterpret_cast<char*>(&dt), 8);
    if (!is) throw IoError("truncated header in " + path);
    if (kind > 2 || nx != ny || nx == 0 || nx > (1u << 16) || nt == 0 || nt > (1u << 28))
        throw FormatVersionMismatch("implausible field dimensions in " + path);
    TimeGrid tg;
    tg.t0 = t0;
    tg.dt = dt;
    tg.nt = static_cast<int>(nt);
    SpaceTimeField f(static_cast<FieldKind>(kind), static_cast<int>(nx), tg);
    is.read(reinterpret_cast<char*>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * sizeof(double)));
    if (!is || is.gcount() != static_cast<std::streamsize>(f.data.size() * sizeof(double)))
        throw IoError("truncated payload in " + path);
    return f;
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

struct ManifestEntry {
    std::string file;
    size_t bytes = 0;
    std::string sha256;
};

inline void write_manifest(const std::string& path, const std::vector<ManifestEntry>& files,
                           const std::map<std::string, std::string>& config_echo) {
    std::ostringstream os;
    os << "{\n  \"format\": \"NNE2\",\n  \"version\": " << kFieldFormatVersion << ",\n";
    os << "  \"config\": {\n";
    size_t i = 0;
    for (const auto& [k, v] : config_echo) {
        os << "    \"" << json_escape(k) << "\": \"" << json_escape(v) << "\"";
        os << (++i < config_echo.size() ? ",\n" : "\n");
    }
    os << "  },\n  \"files\": [\n";
    for (size_t j = 0; j < files.size(); ++j) {
        os << "    {\"file\": \"" << json_escape(files[j].file) << "\", \"bytes\": "
           << files[j].bytes << ", \"sha256\": \"" << files[j].sha256 << "\"}";
        os << (j + 1 < files.size() ? ",\n" : "\n");
    }
    os << "  ]\n}\n";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << os.str();
    if (!out) throw IoError("short write to " + path);
}

// Flat "key = value" configuration text; '#' starts a comment, blank lines are
// skipped, later keys override earlier ones.
struct KvConfig {
    std::map<std::string, std::string> kv;

    static std::string trim(const std::string& s) {
        size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    static KvConfig parse(std::istream& is) {
        KvConfig c;
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::string t = trim(line);
            if (t.empty()) continue;
            size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw InvalidParams("config line " + std::to_string(lineno) +
                                    " is not key = value: " + t);
            std::string key = trim(t.substr(0, eq)), val = trim(t.substr(eq + 1));
            if (key.empty()) throw InvalidParams("empty key on config line " +
                                                 std::to_string(lineno));
            c.kv[key] = val;
        }
        return c;
    }

    static KvConfig load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw IoError("cannot open config " + path);
        return parse(is);
    }

    bool has(const std::string& k) const { return kv.count(k) != 0; }
    std::string get_s(const std::string& k, const std::string& def) const {
        auto it = kv.find(k);
        return it == kv.end() ? def : it->second;
    }
    double get_d(const std::string& k, double def) const {
        auto it = kv.find(k);
        if (it == kv.end()) return def;
        try {
            size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing junk");
            return v;
        } catch (const std::exception&) {
            throw InvalidParams("config key " + k + " is not a number: " + it->second);
        }
    }
    long get_i(const std::string& k, long def) const {
        auto it = kv.find(k);
        if (it == kv.end()) return def;
        try {
            size_t pos = 0;
            long v = std::stol(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing junk");
            return v;
        } catch (const std::exception&) {
            throw InvalidParams("config key " + k + " is not an integer: " + it->second);
        }
    }
    bool get_b(const std::string& k, bool def) const { return get_i(k, def ? 1 : 0) != 0; }
};

struct RunConfig {
    StageConfig stage;
    std::string out_dir = "out";
    unsigned long seed = 12345;
    int verify_n = 256;      // grid for the standalone base-case verification
    int verify_slices = 512; // time slices for the same
    double refine_lo = 1.38, refine_hi = 1.52; // sub-band of the refinement study
    int refine_levels = 1;
};

inline RunConfig run_config_from(const KvConfig& c) {
    RunConfig r;
    StageConfig& s = r.stage;
    s.params.a = c.get_d("a", s.params.a);
    s.params.b = c.get_d("b", s.params.b);
    s.params.beta = c.get_d("beta", s.params.beta);
    s.params.alpha = c.get_d("alpha", s.params.alpha);
    s.params.L = static_cast<int>(c.get_i("L", s.params.L));
    s.params.M = c.get_d("M", s.params.M);
    s.q = static_cast<int>(c.get_i("q", s.q));
    s.n_grid = static_cast<int>(c.get_i("grid_n", s.n_grid));
    s.store_n = static_cast<int>(c.get_i("store_n", s.store_n));
    s.tau_factor = c.get_d("tau_factor", s.tau_factor);
    s.mu_factor = c.get_d("mu_factor", s.mu_factor);
    s.ell_t_factor = c.get_d("ell_t_factor", s.ell_t_factor);
    s.store_per_eps = static_cast<int>(c.get_i("store_per_eps", s.store_per_eps));
    s.solve_per_store = static_cast<int>(c.get_i("solve_per_store", s.solve_per_store));
    s.samples_regular = static_cast<int>(c.get_i("samples_regular", s.samples_regular));
    s.samples_bump_per_level =
        static_cast<int>(c.get_i("samples_bump_per_level", s.samples_bump_per_level));
    s.nash_scan_per_level =
        static_cast<int>(c.get_i("nash_scan_per_level", s.nash_scan_per_level));
    s.levels = static_cast<int>(c.get_i("levels", s.levels));
    s.chi_overlap = c.get_d("chi_overlap", s.chi_overlap);
    s.ic_shoot = c.get_b("ic_shoot", s.ic_shoot);
    s.strict = c.get_b("strict", s.strict);
    r.out_dir = c.get_s("out_dir", r.out_dir);
    r.seed = static_cast<unsigned long>(c.get_i("seed", static_cast<long>(r.seed)));
    r.verify_n = static_cast<int>(c.get_i("verify_n", r.verify_n));
    r.verify_slices = static_cast<int>(c.get_i("verify_slices", r.verify_slices));
    r.refine_lo = c.get_d("refine_lo", r.refine_lo);
    r.refine_hi = c.get_d("refine_hi", r.refine_hi);
    r.refine_levels = static_cast<int>(c.get_i("refine_levels", r.refine_levels));
    return r;
}

inline void validate_run_config(const RunConfig& r) {
    const StageConfig& s = r.stage;
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw InvalidParams(std::string(name) + " must be positive");
    };
    positive(s.params.a, "a");
    positive(s.params.b - 1.0, "b - 1");
    positive(s.params.beta, "beta");
    positive(s.params.alpha, "alpha");
    positive(s.params.M, "M");
    if (s.params.L < 1) throw InvalidParams("L must be >= 1");
    if (s.q < 0) throw InvalidParams("q must be >= 0");
    GridSpec g;
    g.n = s.n_grid;
    g.validate();
    if (s.store_n < 0 || (s.store_n > 0 && s.store_n < 8))
        throw InvalidParams("store_n must be 0 or >= 8");
    positive(s.tau_factor, "tau_factor");
    positive(s.mu_factor, "mu_factor");
    positive(s.ell_t_factor, "ell_t_factor");
    if (s.store_per_eps < 1 || s.solve_per_store < 1)
        throw InvalidParams("store_per_eps and solve_per_store must be >= 1");
    if (s.samples_regular < 1) throw InvalidParams("samples_regular must be >= 1");
    if (s.levels < 0) throw InvalidParams("levels must be >= 0");
    positive(s.chi_overlap, "chi_overlap");
    if (r.verify_n < 8 || r.verify_slices < 5)
        throw InvalidParams("verification lattice too small");
    if (!(r.refine_hi > r.refine_lo)) throw InvalidParams("refinement band is empty");
    if (r.out_dir.empty()) throw InvalidParams("out_dir must be set");
}

inline std::map<std::string, std::string> config_echo(const RunConfig& r) {
    std::map<std::string, std::string> m;
    auto put_d = [&m](const char* k, double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        m[k] = buf;
    };
    auto put_i = [&m](const char* k, long v) { m[k] = std::to_string(v); };
    const StageConfig& s = r.stage;
    put_d("a", s.params.a);
    put_d("b", s.params.b);
    put_d("beta", s.params.beta);
    put_d("alpha", s.params.alpha);
    put_i("L", s.params.L);
    put_d("M", s.params.M);
    put_i("q", s.q);
    put_i("grid_n", s.n_grid);
    put_i("store_n", s.store_n);
    put_d("tau_factor", s.tau_factor);
    put_d("mu_factor", s.mu_factor);
    put_d("ell_t_factor", s.ell_t_factor);
    put_i("store_per_eps", s.store_per_eps);
    put_i("solve_per_store", s.solve_per_store);
    put_i("samples_regular", s.samples_regular);
    put_i("samples_bump_per_level", s.samples_bump_per_level);
    put_i("nash_scan_per_level", s.nash_scan_per_level);
    put_i("levels", s.levels);
    put_d("chi_overlap", s.chi_overlap);
    put_i("ic_shoot", s.ic_shoot ? 1 : 0);
    put_i("strict", s.strict ? 1 : 0);
    put_i("seed", static_cast<long>(r.seed));
    return m;
}

} // namespace nne
