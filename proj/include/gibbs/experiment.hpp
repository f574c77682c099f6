// Copyright 2026 The gibbs-sampler Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbs/chaos.hpp"
#include "gibbs/circuit.hpp"
#include "gibbs/dynamics.hpp"
#include "gibbs/jumps.hpp"
#include "gibbs/liouville.hpp"
#include "gibbs/model.hpp"
#include "gibbs/noisefit.hpp"

namespace gibbs::experiment {

inline constexpr const char* kVersion = "0.1.0";

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{"spectrum",      "chaos-scan", "evolve",
                                                "gap-scan",      "accuracy-scan", "circuit",
                                                "circuit-noise", "noise-bounds",  "error-fit"};
    return kinds;
}

// Every accepted key with its default; an empty default means "derived" or "unset".
inline const std::map<std::string, std::string>& known_keys() {
    static const std::map<std::string, std::string> keys{
        {"kind", ""},
        {"seed", "1"},
        {"threads", "1"},
        {"allow_large", "false"},
        {"output.dir", "out"},
        {"model.point", ""},
        {"model.n", "4"},
        {"model.J", "1"},
        {"model.h", ""},
        {"model.m", ""},
        {"model.beta", ""},
        {"jumps.count", "20"},
        {"jumps.k", "2"},
        {"jumps.seed", ""},
        {"jumps.coherent", "hamiltonian"},
        {"solver.method", "randomized"},
        {"solver.dt_rk", ""},
        {"solver.max_steps", "300000"},
        {"solver.t_max", "inf"},
        {"solver.n_traj", "10"},
        {"solver.herm_tol", "1e-6"},
        {"solver.record_dt", "0"},
        {"solver.init", "mixed"},
        {"solver.target", "gibbs"},
        {"solver.stop_below", "0"},
        {"mixing.eps", "1e-2"},
        {"scan.n", "3,4,5"},
        {"scan.jump_counts", "5,20,50"},
        {"chaos.h", "log:-1:1:21"},
        {"chaos.m", "log:-1:1:21"},
        {"chaos.basis", "z"},
        {"chaos.q", "1"},
        {"chaos.fraction", "0.8"},
        {"chaos.window", "energy"},
        {"circuit.dt_ev", "0.05"},
        {"circuit.dt_oft", "0.05"},
        {"circuit.T", "1.6"},
        {"circuit.gamma", "1"},
        {"circuit.t_max", "500"},
        {"circuit.repetitions", "10"},
        {"circuit.coherent", "exact"},
        {"circuit.r_delta", "1"},
        {"circuit.r_Delta", "1"},
        {"circuit.plateau_fraction", "0.2"},
        {"noise.lambda", "0"},
        {"noise.lambda_g", "1e-6,1e-5,1e-4"},
        {"noise.gate_coefficient", "50"},
        {"bounds.B", ""},
        {"bounds.alpha", ""},
        {"bounds.lambda", "1e-3,1e-2,1e-1"},
        {"bounds.lambda_g", "1e-6,1e-5,1e-4"},
        {"bounds.ng", "308"},
        {"bounds.t_max", "200"},
        {"errorfit.dt_ev", "0.01,0.03,0.1,0.3"},
        {"errorfit.dt_oft", "0.05,0.1,0.2,0.3"},
    };
    return keys;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class Config {
 public:
    // Flat "key = value" lines; '#' starts a comment.
    static Config parse(const std::string& text) {
        Config c;
        std::istringstream is(text);
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            c.set(key, value, lineno);
        }
        return c;
    }

    static Config load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    void set(const std::string& key, const std::string& value, int lineno = 0) {
        if (!known_keys().contains(key)) {
            throw ConfigError((lineno ? "line " + std::to_string(lineno) + ": " : std::string()) + "unknown key '" +
                              key + "'");
        }
        if (lineno && explicit_.contains(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        values_[key] = value;
        explicit_.insert(key);
    }

    bool is_set(const std::string& key) const { return explicit_.contains(key); }

    std::string str(const std::string& key) const {
        const auto it = values_.find(key);
        if (it != values_.end()) return it->second;
        const auto d = known_keys().find(key);
        if (d == known_keys().end()) throw ConfigError("unknown key '" + key + "'");
        return d->second;
    }

    double num(const std::string& key) const {
        const std::string s = str(key);
        if (s == "inf") return std::numeric_limits<double>::infinity();
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw ConfigError("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "' expects a number, got '" + s + "'");
        }
    }

    long integer(const std::string& key) const {
        const double v = num(key);
        if (!(std::abs(v) < 9e15) || v != std::floor(v)) throw ConfigError("key '" + key + "' expects an integer");
        return static_cast<long>(v);
    }

    bool flag(const std::string& key) const {
        const std::string s = str(key);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ConfigError("key '" + key + "' expects true/false");
    }

    // Comma list, "lin:a:b:N", or "log:a:b:N" (base-10 exponents).
    std::vector<double> list(const std::string& key) const {
        const std::string s = str(key);
        std::vector<double> out;
        auto fail = [&] { return ConfigError("key '" + key + "' expects a list, got '" + s + "'"); };
        if (s.starts_with("lin:") || s.starts_with("log:")) {
            std::vector<double> parts;
            std::istringstream is(s.substr(4));
            std::string tok;
            while (std::getline(is, tok, ':')) {
                try {
                    parts.push_back(std::stod(tok));
                } catch (const std::exception&) {
                    throw fail();
                }
            }
            if (parts.size() != 3 || parts[2] < 1 || parts[2] != std::floor(parts[2])) throw fail();
            const int count = static_cast<int>(parts[2]);
            for (int i = 0; i < count; ++i) {
                const double x = count == 1 ? parts[0] : parts[0] + (parts[1] - parts[0]) * i / (count - 1);
                out.push_back(s[1] == 'o' ? std::pow(10.0, x) : x);
            }
            return out;
        }
        std::istringstream is(s);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(tok, &pos));
                if (pos != tok.size()) throw fail();
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception&) {
                throw fail();
            }
        }
        if (out.empty()) throw fail();
        return out;
    }

    // All keys with defaults filled in.
    std::map<std::string, std::string> resolved() const {
        std::map<std::string, std::string> out;
        for (const auto& [k, d] : known_keys()) out[k] = str(k);
        return out;
    }

 private:
    std::map<std::string, std::string> values_;
    std::set<std::string> explicit_;
};

struct Model {
    IsingParams params;
    double beta = 0.5;
    std::string point;  // empty when given by h, m
    Operator H;
};

inline Model resolve_model(const Config& c, int n_override = 0) {
    Model m;
    const int n = n_override > 0 ? n_override : static_cast<int>(c.integer("model.n"));
    if (n < 1) throw ConfigError("model.n must be >= 1");
    const double J = c.num("model.J");
    m.point = c.str("model.point");
    if (!m.point.empty()) {
        if (c.is_set("model.h") || c.is_set("model.m")) throw ConfigError("give either model.point or model.h/model.m");
        const auto p = find_point(m.point);
        if (!p) throw ConfigError("unknown point '" + m.point + "'");
        m.params = point_params(*p, n, J);
    } else {
        if (!c.is_set("model.h") || !c.is_set("model.m")) throw ConfigError("model.point or both model.h and model.m required");
        m.params = IsingParams{n, J, c.num("model.h"), c.num("model.m")};
    }
    m.beta = c.is_set("model.beta") ? c.num("model.beta") : default_beta(J);
    if (!(m.beta > 0.0)) throw ConfigError("model.beta must be positive");
    m.H = build_hamiltonian(m.params);
    return m;
}

inline std::uint64_t parse_seed(const Config& c, const std::string& key) {
    const std::string s = c.str(key);
    try {
        std::size_t pos = 0;
        if (!s.empty() && s[0] == '-') throw ConfigError("");
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw ConfigError("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a nonnegative integer, got '" + s + "'");
    }
}

inline std::uint64_t seed_of(const Config& c) { return parse_seed(c, "seed"); }

inline std::uint64_t jump_seed(const Config& c) {
    return c.is_set("jumps.seed") ? parse_seed(c, "jumps.seed") : seed_of(c);
}

inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Temp file + rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

class CsvTable {
 public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(const std::vector<double>& values) {
        if (values.size() != header_.size()) throw Error("CSV row width mismatch");
        rows_.push_back(values);
    }

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
        s += '\n';
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + fmt(r[i]);
            s += '\n';
        }
        return s;
    }

 private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

using Json = nlohmann::ordered_json;

inline Json num_json(double x) {
    if (std::isfinite(x)) return x;
    return fmt(x);
}

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out_dir;
    std::optional<int> threads;
    bool allow_large = false;
};

struct RunResult {
    std::filesystem::path out_dir;
    std::vector<std::string> files;
};

namespace detail {

struct Writer {
    std::filesystem::path dir;
    RunResult* result;

    void csv(const std::string& name, const CsvTable& t) {
        write_atomic(dir / name, t.str());
        result->files.push_back(name);
    }
    void json(const std::string& name, const Json& j) {
        write_atomic(dir / name, j.dump(2) + "\n");
        result->files.push_back(name);
    }
};

inline Operator initial_state(const Config& c, Index d, std::uint64_t seed) {
    const std::string init = c.str("solver.init");
    if (init == "mixed") return maximally_mixed(d);
    if (init == "zero") return ket_bra(d, 0, 0);
    if (init == "haar") {
        std::mt19937_64 rng = stream_rng(seed, 0, 11);
        return projector(haar_random_state(d, rng));
    }
    throw ConfigError("solver.init must be mixed, zero or haar");
}

inline SolverConfig solver_config(const Config& c, const Model& m, std::uint64_t seed, int threads) {
    SolverConfig s;
    if (c.is_set("solver.dt_rk")) {
        s.dt_rk0 = c.num("solver.dt_rk");
    } else if (!m.point.empty()) {
        s.dt_rk0 = find_point(m.point)->dt_rk_for(m.params.n) / m.params.J;
    }
    s.max_steps = c.integer("solver.max_steps");
    s.t_max = c.num("solver.t_max");
    s.n_traj = static_cast<int>(c.integer("solver.n_traj"));
    s.herm_tol = c.num("solver.herm_tol");
    s.record_dt = c.num("solver.record_dt");
    s.stop_below = c.num("solver.stop_below");
    s.seed = seed;
    s.threads = threads;
    try {
        s.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return s;
}

inline CircuitConfig circuit_config(const Config& c, std::uint64_t seed, int threads) {
    CircuitConfig cc;
    cc.dt_ev = c.list("circuit.dt_ev").front();
    cc.dt_oft = c.num("circuit.dt_oft");
    cc.T = c.num("circuit.T");
    cc.gamma = c.num("circuit.gamma");
    cc.t_max = c.num("circuit.t_max");
    cc.repetitions = static_cast<int>(c.integer("circuit.repetitions"));
    cc.r_delta = static_cast<int>(c.integer("circuit.r_delta"));
    cc.r_Delta = static_cast<int>(c.integer("circuit.r_Delta"));
    cc.plateau_fraction = c.num("circuit.plateau_fraction");
    cc.jump_count = static_cast<int>(c.integer("jumps.count"));
    cc.k = static_cast<int>(c.integer("jumps.k"));
    const std::string mode = c.str("circuit.coherent");
    if (mode == "exact") {
        cc.coherent_mode = CoherentMode::Exact;
    } else if (mode == "trotter2") {
        cc.coherent_mode = CoherentMode::Trotter2;
    } else {
        throw ConfigError("circuit.coherent must be exact or trotter2");
    }
    cc.seed = seed;
    cc.threads = threads;
    try {
        cc.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return cc;
}

inline std::vector<PauliString> jump_set(const Config& c, int n, int count) {
    const int k = static_cast<int>(c.integer("jumps.k"));
    if (k < 1 || k > n) throw ConfigError("jumps.k must lie in [1, n]");
    if (count < 1) throw ConfigError("jumps.count must be >= 1");
    return sample_jump_set(n, k, count, jump_seed(c));
}

struct Generator {
    Spectrum spec;
    BohrSpectrum bohr;
    FilterSpec filter;
    Operator sigma;
    std::vector<PauliString> set;
    std::vector<LindbladOperator> lindblads;
    std::vector<double> gammas;
    Operator coherent;
};

inline Generator generator(const Config& c, const Model& m, int count) {
    Generator g;
    g.spec = eig_hermitian(m.H);
    g.bohr = bohr_frequencies(g.spec);
    g.filter = make_filter(m.beta);
    g.sigma = gibbs_state(g.spec, m.beta);
    g.set = jump_set(c, m.params.n, count);
    g.lindblads = lindblad_ops_exact(g.set, g.spec, g.filter, g.bohr);
    g.gammas = uniform_gammas(g.set.size());
    const std::string mode = c.str("jumps.coherent");
    if (mode == "hamiltonian") {
        g.coherent = m.H;
    } else if (mode == "ckg") {
        g.coherent = ckg_coherent_term(g.set, g.gammas, g.spec, g.filter, g.bohr);
    } else if (mode == "none") {
        g.coherent = Operator::Zero(m.H.rows(), m.H.cols());
    } else {
        throw ConfigError("jumps.coherent must be hamiltonian, ckg or none");
    }
    return g;
}

inline void require_dense_budget(int n, bool allow_large, int ceiling) {
    if (n > ceiling && !allow_large) {
        throw ResourceCeiling("n=" + std::to_string(n) + " exceeds the default ceiling n=" + std::to_string(ceiling) +
                              "; pass --allow-large to proceed");
    }
}

inline CsvTable distance_table(const EvolutionRecord& rec) {
    CsvTable t({"t [1/J]", "distance [trace]", "sigma [trace]"});
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        const double s = i < rec.avg_distance_sigma.size() ? rec.avg_distance_sigma[i] : 0.0;
        t.row({rec.times[i], rec.avg_distance[i], s});
    }
    return t;
}

inline void run_spectrum(const Config& c, Writer& w, const RunOptions& o) {
    const Model m = resolve_model(c);
    require_dense_budget(m.params.n, o.allow_large, 12);
    const Spectrum spec = eig_hermitian(m.H);
    const RealVector pops = gibbs_populations(spec, m.beta);
    CsvTable t({"index", "energy [J]", "gibbs_population"});
    for (Index i = 0; i < spec.dim(); ++i) t.row({static_cast<double>(i), spec.values(i), pops(i)});
    w.csv("spectrum.csv", t);
    const BohrSpectrum bohr = bohr_frequencies(spec);
    Json s;
    s["n"] = m.params.n;
    s["h [J]"] = m.params.h;
    s["m [J]"] = m.params.m;
    s["beta [1/J]"] = m.beta;
    s["ground_energy [J]"] = spec.values(0);
    s["norm [J]"] = spec.values.cwiseAbs().maxCoeff();
    s["bohr_frequency_count"] = bohr.size();
    w.json("summary.json", s);
}

inline void run_chaos_scan(const Config& c, Writer& w, const RunOptions& o) {
    const int n = static_cast<int>(c.integer("model.n"));
    require_dense_budget(n, o.allow_large, 12);
    const double J = c.num("model.J");
    const std::string window = c.str("chaos.window");
    if (window != "energy" && window != "index") throw ConfigError("chaos.window must be energy or index");
    const WindowMode mode = window == "energy" ? WindowMode::Energy : WindowMode::Index;
    const std::string basis = c.str("chaos.basis");
    std::string letters;
    try {
        letters = basis_letters(basis, n);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    std::vector<IsingParams> grid;
    for (double h : c.list("chaos.h")) {
        for (double mm : c.list("chaos.m")) grid.push_back(IsingParams{n, J, h * J, mm * J});
    }
    const auto scan = fractal_scan(grid, letters, c.num("chaos.q"), c.num("chaos.fraction"), mode);
    CsvTable t({"h [J]", "m [J]", "mean_D", "var_D", "states"});
    for (const auto& p : scan) {
        t.row({p.h, p.m, p.stats.mean, p.stats.variance, static_cast<double>(p.stats.per_state_D.size())});
    }
    w.csv("chaos.csv", t);
    Json s;
    s["n"] = n;
    s["basis"] = letters;
    s["q"] = c.num("chaos.q");
    s["fraction"] = c.num("chaos.fraction");
    s["window"] = window;
    s["window_note"] = "energy window keeps states with E in the inner fraction of [E_min, E_max]; index window keeps "
                       "the inner fraction by count; the two differ when the density of states is nonuniform";
    s["grid_points"] = scan.size();
    w.json("summary.json", s);
}

inline void run_evolve(const Config& c, Writer& w, const RunOptions& o, std::uint64_t seed, int threads) {
    const Model m = resolve_model(c);
    require_dense_budget(m.params.n, o.allow_large, 8);
    const int count = static_cast<int>(c.integer("jumps.count"));
    const Generator g = generator(c, m, count);
    const SolverConfig sc = solver_config(c, m, seed, threads);
    const Operator rho0 = initial_state(c, m.H.rows(), seed);
    Operator target = g.sigma;
    const std::string tgt = c.str("solver.target");
    if (tgt == "steady") {
        require_dense_budget(m.params.n, o.allow_large, 6);
        target = steady_state_solve(build_superop(g.coherent, g.lindblads, g.gammas, true));
    } else if (tgt != "gibbs") {
        throw ConfigError("solver.target must be gibbs or steady");
    }
    const std::string method = c.str("solver.method");
    EvolutionRecord rec;
    if (method == "randomized") {
        rec = evolve_randomized(g.coherent, g.lindblads, rho0, sc, target);
    } else if (method == "exact") {
        rec = evolve_exact(g.coherent, g.lindblads, g.gammas, rho0, sc, target);
    } else if (method == "mcwf") {
        if (c.str("solver.init") == "mixed") throw ConfigError("mcwf needs a pure initial state (solver.init = zero or haar)");
        Eigen::SelfAdjointEigenSolver<Operator> es(rho0);
        const StateVector psi0 = es.eigenvectors().col(rho0.rows() - 1);
        rec = mcwf_evolve(g.coherent, matrices_of(g.lindblads), g.gammas, psi0, sc, target);
    } else {
        throw ConfigError("solver.method must be randomized, exact or mcwf");
    }
    w.csv("distance.csv", distance_table(rec));
    const double eps = c.num("mixing.eps");
    const auto tmix = mixing_time_estimate(rec, eps);
    Json s;
    s["method"] = method;
    s["target"] = tgt;
    s["mixing_eps"] = eps;
    s["mixing_time [1/J]"] = tmix ? Json(*tmix) : Json(nullptr);
    s["plateau_distance"] = plateau_distance(rec);
    s["final_distance"] = rec.avg_distance.back();
    s["final_dt_rk [1/J]"] = rec.final_dt_rk;
    s["halvings"] = rec.halvings;
    s["steps"] = rec.steps;
    w.json("summary.json", s);
}

inline void run_gap_scan(const Config& c, Writer& w, const RunOptions& o) {
    CsvTable t({"n", "jump_count", "gap [J]", "zero_count", "max_nonzero_re [J]", "steady_gibbs_distance [trace]"});
    Json fits = Json::array();
    std::map<int, std::vector<std::pair<double, double>>> by_count;
    for (double nd : c.list("scan.n")) {
        const int n = static_cast<int>(nd);
        const Model m = resolve_model(c, n);
        if (n > kDefaultGapCeilingQubits && !o.allow_large) {
            throw ResourceCeiling("gap computation at n=" + std::to_string(n) + " needs --allow-large");
        }
        for (double cd : c.list("scan.jump_counts")) {
            const int count = static_cast<int>(cd);
            const Generator g = generator(c, m, count);
            const GapResult r = steady_state_and_gap(build_superop(g.coherent, g.lindblads, g.gammas, true), o.allow_large);
            t.row({static_cast<double>(n), static_cast<double>(count), r.gap, static_cast<double>(r.zero_count),
                   r.max_nonzero_real, trace_distance(r.steady_state, g.sigma)});
            by_count[count].push_back({static_cast<double>(n), r.gap});
        }
    }
    w.csv("gap.csv", t);
    for (const auto& [count, pts] : by_count) {
        Json f;
        f["jump_count"] = count;
        if (pts.size() >= 2) {
            std::vector<double> x, y;
            for (const auto& [n, gap] : pts) {
                x.push_back(n);
                y.push_back(gap);
            }
            const PowerLawFit p = fit_power_law(x, y);
            f["exponent"] = p.exponent;
            f["prefactor [J]"] = p.prefactor;
        }
        fits.push_back(f);
    }
    Json s;
    s["gap_vs_n_fits"] = fits;
    w.json("summary.json", s);
}

inline void run_accuracy_scan(const Config& c, Writer& w, const RunOptions& o) {
    const Model m = resolve_model(c);
    require_dense_budget(m.params.n, o.allow_large, 6);
    CsvTable t({"jump_count", "steady_gibbs_distance [trace]"});
    std::vector<double> x, y;
    for (double cd : c.list("scan.jump_counts")) {
        const int count = static_cast<int>(cd);
        const Generator g = generator(c, m, count);
        const Operator rho = steady_state_solve(build_superop(g.coherent, g.lindblads, g.gammas, true));
        const double dist = trace_distance(rho, g.sigma);
        t.row({cd, dist});
        x.push_back(cd);
        y.push_back(dist);
    }
    w.csv("accuracy.csv", t);
    Json s;
    if (x.size() >= 2) {
        const PowerLawFit p = fit_power_law(x, y);
        s["exponent"] = p.exponent;
        s["prefactor"] = p.prefactor;
    }
    w.json("summary.json", s);
}

inline NoiseSpec fixed_noise(const Config& c) {
    const double lam = c.num("noise.lambda");
    if (lam < 0.0 || lam > 1.0) throw ConfigError("noise.lambda must lie in [0, 1]");
    return lam > 0.0 ? NoiseSpec::global_depolarizing(lam) : NoiseSpec::none();
}

inline void run_circuit(const Config& c, Writer& w, const RunOptions& o, std::uint64_t seed, int threads) {
    const Model m = resolve_model(c);
    require_dense_budget(m.params.n, o.allow_large, 6);
    const CircuitConfig cc = circuit_config(c, seed, threads);
    const auto jumps = jump_set(c, m.params.n, cc.jump_count);
    const FilterSpec f = make_filter(m.beta);
    const Spectrum spec = eig_hermitian(m.H);
    const Operator sigma = gibbs_state(spec, m.beta);
    const Operator rho0 = initial_state(c, m.H.rows(), seed);
    const CircuitResult r = simulate_protocol(m.H, jumps, f, cc, fixed_noise(c), rho0, sigma);
    w.csv("distance.csv", distance_table(r.record));
    Json s;
    s["plateau_distance"] = r.plateau_distance;
    s["final_distance"] = r.record.avg_distance.back();
    s["steps"] = cc.evolution_steps();
    s["S"] = cc.S();
    w.json("summary.json", s);
}

inline void run_circuit_noise(const Config& c, Writer& w, const RunOptions& o, std::uint64_t seed, int threads) {
    const Model m = resolve_model(c);
    require_dense_budget(m.params.n, o.allow_large, 6);
    CircuitConfig cc = circuit_config(c, seed, threads);
    const auto jumps = jump_set(c, m.params.n, cc.jump_count);
    const FilterSpec f = make_filter(m.beta);
    const Spectrum spec = eig_hermitian(m.H);
    const Operator sigma = gibbs_state(spec, m.beta);
    const Operator rho0 = initial_state(c, m.H.rows(), seed);
    GateModel gm;
    gm.coefficient = c.num("noise.gate_coefficient");
    CsvTable t({"dt_ev [1/J]", "lambda_g", "gates_per_step", "plateau_distance [trace]"});
    for (double dt : c.list("circuit.dt_ev")) {
        cc.dt_ev = dt;
        for (double lg : c.list("noise.lambda_g")) {
            const CircuitResult r = simulate_protocol(m.H, jumps, f, cc, NoiseSpec::budget(lg, gm), rho0, sigma);
            t.row({dt, lg, gm.gates(dt, m.params.n), r.plateau_distance});
        }
    }
    w.csv("noise.csv", t);
    w.json("summary.json", Json{{"grid_points", c.list("circuit.dt_ev").size() * c.list("noise.lambda_g").size()}});
}

inline void run_noise_bounds(const Config& c, Writer& w, const RunOptions& o, std::uint64_t seed) {
    ConvergenceFit fit;
    Json s;
    if (c.is_set("bounds.B") != c.is_set("bounds.alpha")) throw ConfigError("set both bounds.B and bounds.alpha or neither");
    if (c.is_set("bounds.B")) {
        fit.B = c.num("bounds.B");
        fit.alpha = c.num("bounds.alpha");
        s["source"] = "config";
    } else {
        // Fit from the exact noiseless decay toward the generator's own fixed point.
        const Model m = resolve_model(c);
        require_dense_budget(m.params.n, o.allow_large, 6);
        const Generator g = generator(c, m, static_cast<int>(c.integer("jumps.count")));
        const Operator rho_inf = steady_state_solve(build_superop(g.coherent, g.lindblads, g.gammas, true));
        SolverConfig sc = solver_config(c, m, seed, 1);
        sc.t_max = c.num("bounds.t_max");
        sc.record_dt = 1.0;
        const EvolutionRecord rec = evolve_exact(g.coherent, g.lindblads, g.gammas,
                                                 initial_state(c, m.H.rows(), seed), sc, rho_inf);
        std::vector<double> M(rec.times.begin(), rec.times.end());
        try {
            fit = fit_convergence(M, rec.avg_distance);
        } catch (const InsufficientDecay& e) {
            throw ConfigError(std::string("noiseless decay unusable for the fit: ") + e.what());
        }
        s["source"] = "exact noiseless decay, unit time step";
    }
    s["B"] = fit.B;
    s["alpha"] = fit.alpha;
    CsvTable t({"lambda", "B_inf", "B_generic"});
    for (double lam : c.list("bounds.lambda")) t.row({lam, bound_asymptotic(fit, lam), bound_generic(fit, lam)});
    w.csv("bounds.csv", t);
    const double ng = c.num("bounds.ng");
    CsvTable u({"lambda_g", "lambda_step", "B_inf", "B_generic", "B_unitary", "alpha_noisy"});
    for (double lg : c.list("bounds.lambda_g")) {
        const double lam = per_step_lambda(lg, ng);
        u.row({lg, lam, bound_asymptotic(fit, lam), bound_generic(fit, lam), bound_unitary_comparison(fit, lg, ng),
               noisy_rate(fit.alpha, lg, ng)});
    }
    w.csv("bounds_gates.csv", u);
    s["gates_per_step"] = ng;
    w.json("summary.json", s);
}

inline void run_error_fit(const Config& c, Writer& w, const RunOptions& o, std::uint64_t seed, int threads) {
    const Model m = resolve_model(c);
    require_dense_budget(m.params.n, o.allow_large, 6);
    CircuitConfig cc = circuit_config(c, seed, threads);
    const auto jumps = jump_set(c, m.params.n, cc.jump_count);
    const FilterSpec f = make_filter(m.beta);
    const Spectrum spec = eig_hermitian(m.H);
    const Operator sigma = gibbs_state(spec, m.beta);
    const Operator rho0 = initial_state(c, m.H.rows(), seed);
    std::vector<ErrorPoint> grid;
    CsvTable t({"dt_ev [1/J]", "dt_oft [1/J]", "plateau_distance [trace]"});
    for (double de : c.list("errorfit.dt_ev")) {
        for (double dO : c.list("errorfit.dt_oft")) {
            cc.dt_ev = de;
            cc.dt_oft = dO;
            const CircuitResult r = simulate_protocol(m.H, jumps, f, cc, NoiseSpec::none(), rho0, sigma);
            grid.push_back({de, dO, r.plateau_distance});
            t.row({de, dO, r.plateau_distance});
        }
    }
    w.csv("grid.csv", t);
    ErrorModelContext ctx;
    ctx.T = cc.T;
    ctx.beta = m.beta;
    ctx.H_norm = spec.values.cwiseAbs().maxCoeff();
    ctx.bohr_count = static_cast<double>(bohr_frequencies(spec).size());
    const ErrorFitParams p = fit_error_model(grid, ctx);
    Json s;
    s["a1"] = p.a[0];
    s["a2 [J]"] = p.a[1];
    s["a3 [J]"] = p.a[2];
    s["a4"] = p.a[3];
    s["log10_rms_residual"] = p.loss / std::sqrt(static_cast<double>(std::max<std::size_t>(1, p.points_used)));
    s["points_used"] = p.points_used;
    w.json("summary.json", s);
}

}  // namespace detail

// Applies command-line overrides, writes manifest.json, then the kind's outputs.
inline RunResult run(Config cfg, const RunOptions& opts) {
    if (opts.seed) cfg.set("seed", std::to_string(*opts.seed));
    if (opts.out_dir) cfg.set("output.dir", opts.out_dir->string());
    if (opts.threads) cfg.set("threads", std::to_string(*opts.threads));
    if (opts.allow_large) cfg.set("allow_large", "true");
    RunOptions o = opts;
    o.allow_large = cfg.flag("allow_large");
    const std::string kind = cfg.str("kind");
    if (kind.empty()) throw ConfigError("missing key 'kind'");
    if (std::find(experiment_kinds().begin(), experiment_kinds().end(), kind) == experiment_kinds().end()) {
        throw ConfigError("unknown kind '" + kind + "'");
    }
    const long threads = cfg.integer("threads");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    const std::uint64_t seed = seed_of(cfg);

    RunResult result;
    result.out_dir = cfg.str("output.dir");
    detail::Writer w{result.out_dir, &result};
    Json manifest;
    manifest["artifact"] = "gibbs-sampler";
    manifest["version"] = kVersion;
    manifest["kind"] = kind;
    manifest["seed"] = seed;
    manifest["config"] = cfg.resolved();
    w.json("manifest.json", manifest);

    const int t = static_cast<int>(threads);
    if (kind == "spectrum") detail::run_spectrum(cfg, w, o);
    else if (kind == "chaos-scan") detail::run_chaos_scan(cfg, w, o);
    else if (kind == "evolve") detail::run_evolve(cfg, w, o, seed, t);
    else if (kind == "gap-scan") detail::run_gap_scan(cfg, w, o);
    else if (kind == "accuracy-scan") detail::run_accuracy_scan(cfg, w, o);
    else if (kind == "circuit") detail::run_circuit(cfg, w, o, seed, t);
    else if (kind == "circuit-noise") detail::run_circuit_noise(cfg, w, o, seed, t);
    else if (kind == "noise-bounds") detail::run_noise_bounds(cfg, w, o, seed);
    else detail::run_error_fit(cfg, w, o, seed, t);
    return result;
}

inline std::string list_points_table() {
    std::ostringstream os;
    os << "key     h/J      m/J      J*dt_rk(n=3..8)\n";
    for (const auto& p : named_points()) {
        char line[160];
        std::snprintf(line, sizeof line, "%-7s %-8.4g %-8.4g", std::string(p.key).c_str(), p.h_over_J, p.m_over_J);
        os << line;
        for (std::size_t i = 0; i < p.dt_rk.size(); ++i) os << (i ? "," : " ") << fmt(p.dt_rk[i]);
        os << '\n';
    }
    return os.str();
}

}  // namespace gibbs::experiment
