#pragma once

// Config-driven runner behind the `setrisk` executable. Lives in a header so
// tests can run configs in-process.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "setrisk/strategy.hpp"

namespace setrisk::cli {

using nlohmann::json;

enum class PayoffType { put, binary, outperformance, table };

inline std::string to_string(PayoffType p) {
    switch (p) {
        case PayoffType::put: return "put";
        case PayoffType::binary: return "binary";
        case PayoffType::outperformance: return "outperformance";
        case PayoffType::table: return "table";
    }
    return "put";
}

struct PayoffSpec {
    PayoffType type = PayoffType::put;
    double K = 0.0;
    double payout = 0.0;
    risk::Price settlement = risk::Price::mid;
    bool short_position = true;  // the position is -claim
    std::vector<Vec> table;      // claim per terminal node, in slice order
};

struct RunSpec {
    std::string name;
    risk::RiskMeasureSpec risk;
    market::MarketSpec market;
    recursion::RunMode mode;
};

struct Config {
    int version = 1;
    tree::TreeParams tree;
    PayoffSpec payoff;
    std::vector<RunSpec> runs;
    std::optional<Vec> cost;  // in M coordinates
    std::optional<std::vector<std::size_t>> path;
    std::optional<std::uint64_t> sample_seed;
    std::string out_dir = ".";
    std::vector<std::string> frontiers{"0"};  // "T" or "T:node"
    std::optional<std::string> dump_all;
    bool dump_tree = false;
};

namespace detail {

inline void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ValidationError(where + " must be an object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : keys) ok = ok || k == a;
        if (!ok) throw ValidationError(where + ": unknown key '" + k + "'");
    }
}

template <class T>
T get(const json& j, const std::string& where, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(where + "." + key + " has the wrong type");
    }
}

template <class T>
T need(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw ValidationError(where + "." + key + " is required");
    return get<T>(j, where, key, T{});
}

inline tree::TreeParams parse_tree(const json& j) {
    allow_keys(j, "tree", {"d", "T", "horizon", "n", "nu", "mu", "sigma", "rho", "S0", "r", "bond_compounding"});
    tree::TreeParams p;
    p.d = need<std::size_t>(j, "tree", "d");
    p.T = need<std::size_t>(j, "tree", "T");
    p.horizon = get<double>(j, "tree", "horizon", 1.0);
    p.n = get<std::size_t>(j, "tree", "n", 2);
    p.nu = get<double>(j, "tree", "nu", 1.0);
    p.mu = need<Vec>(j, "tree", "mu");
    p.sigma = need<Vec>(j, "tree", "sigma");
    p.rho = get<Mat>(j, "tree", "rho", {});
    p.S0 = need<Vec>(j, "tree", "S0");
    p.r = get<double>(j, "tree", "r", 0.0);
    auto c = get<std::string>(j, "tree", "bond_compounding", "continuous");
    if (c == "continuous") p.compounding = tree::Compounding::continuous;
    else if (c == "simple") p.compounding = tree::Compounding::simple;
    else throw ValidationError("tree.bond_compounding must be continuous or simple");
    return p;
}

inline market::Model model_from_string(const std::string& s) {
    if (s == "none") return market::Model::none;
    if (s == "cone") return market::Model::cone;
    if (s == "convex") return market::Model::convex;
    throw ValidationError("market.type must be none, cone or convex");
}

/// type/theta/D only; gamma belongs to the shared tree.
inline market::MarketSpec parse_market(const json& j, const std::string& where) {
    allow_keys(j, where, {"type", "theta", "D"});
    market::MarketSpec m;
    m.model = model_from_string(get<std::string>(j, where, "type", "none"));
    m.theta = get<Vec>(j, where, "theta", {});
    if (j.contains("D")) {
        if (!j.at("D").is_array()) throw ValidationError(where + ".D must be an array");
        for (const auto& h : j.at("D")) {
            allow_keys(h, where + ".D[]", {"normal", "offset"});
            m.D.push_back({need<Vec>(h, where + ".D[]", "normal"), get<double>(h, where + ".D[]", "offset", 0.0)});
        }
    }
    if (m.model == market::Model::convex && m.theta.size() != 2) throw ValidationError(where + ".theta needs two entries");
    return m;
}

inline recursion::RunMode parse_mode(const json& j, const std::string& where) {
    allow_keys(j, where, {"type", "epsilon", "window", "vmax", "jobs"});
    recursion::RunMode m;
    auto t = get<std::string>(j, where, "type", "linear");
    if (t != "linear" && t != "convex") throw ValidationError(where + ".type must be linear or convex");
    m.convex = t == "convex";
    m.epsilon = get<double>(j, where, "epsilon", 0.0);
    if (j.contains("window") && !j.at("window").is_null()) m.window = get<double>(j, where, "window", 0.0);
    m.vmax = get<std::size_t>(j, where, "vmax", 0);
    m.jobs = get<std::size_t>(j, where, "jobs", 1);
    if (m.jobs == 0) throw ValidationError(where + ".jobs must be at least 1");
    return m;
}

inline risk::RiskMeasureSpec parse_risk(const json& j, const std::string& where) {
    allow_keys(j, where, {"kind", "lambda", "epsilon", "G", "C_dual", "M_basis"});
    risk::RiskMeasureSpec s;
    s.kind = risk::kind_from_string(need<std::string>(j, where, "kind"));
    s.lambda = get<Vec>(j, where, "lambda", {});
    s.epsilon = get<Vec>(j, where, "epsilon", {});
    s.G = get<std::vector<Vec>>(j, where, "G", {});
    s.C_dual = get<std::vector<Vec>>(j, where, "C_dual", {});
    s.M_basis = get<std::vector<Vec>>(j, where, "M_basis", {});
    return s;
}

inline PayoffSpec parse_payoff(const json& j) {
    allow_keys(j, "payoff", {"type", "K", "payout", "settlement", "position", "table"});
    PayoffSpec p;
    auto t = need<std::string>(j, "payoff", "type");
    if (t == "put") p.type = PayoffType::put;
    else if (t == "binary") p.type = PayoffType::binary;
    else if (t == "outperformance") p.type = PayoffType::outperformance;
    else if (t == "table") p.type = PayoffType::table;
    else throw ValidationError("payoff.type must be put, binary, outperformance or table");
    p.K = get<double>(j, "payoff", "K", 0.0);
    p.payout = get<double>(j, "payoff", "payout", 0.0);
    // Binary claims trigger on the ask by default.
    p.settlement = risk::price_from_string(
        get<std::string>(j, "payoff", "settlement", p.type == PayoffType::binary ? "ask" : "mid"));
    auto pos = get<std::string>(j, "payoff", "position", "short");
    if (pos != "short" && pos != "long") throw ValidationError("payoff.position must be short or long");
    p.short_position = pos == "short";
    p.table = get<std::vector<Vec>>(j, "payoff", "table", {});
    if (p.type == PayoffType::table && p.table.empty()) throw ValidationError("payoff.table is required for type table");
    if (p.type != PayoffType::table && !(p.K > 0)) throw ValidationError("payoff.K must be positive");
    return p;
}

inline json market_json(const market::MarketSpec& m) {
    json D = json::array();
    for (const auto& h : m.D) D.push_back({{"normal", h.normal}, {"offset", h.offset}});
    json out = {{"type", market::to_string(m.model)}, {"D", D}};
    if (!m.theta.empty()) out["theta"] = m.theta;
    return out;
}

inline json mode_json(const recursion::RunMode& m) {
    json out = {{"type", m.convex ? "convex" : "linear"}, {"epsilon", m.epsilon}, {"vmax", m.vmax}, {"jobs", m.jobs}};
    out["window"] = m.window ? json(*m.window) : json(nullptr);
    return out;
}

}  // namespace detail

inline Config parse_config(const json& j) {
    using namespace detail;
    allow_keys(j, "config", {"version", "tree", "market", "mode", "payoff", "runs", "strategy", "outputs"});
    Config c;
    c.version = need<int>(j, "config", "version");
    if (c.version != 1) throw ValidationError("config.version " + std::to_string(c.version) + " is not supported");
    if (!j.contains("tree")) throw ValidationError("config.tree is required");
    c.tree = parse_tree(j.at("tree"));

    json market = j.value("market", json::object());
    if (!market.is_object()) throw ValidationError("market must be an object");
    c.tree.gamma = get<Vec>(market, "market", "gamma", {});
    market.erase("gamma");
    json mode = j.value("mode", json::object());

    if (!j.contains("payoff")) throw ValidationError("config.payoff is required");
    c.payoff = parse_payoff(j.at("payoff"));

    if (!j.contains("runs") || !j.at("runs").is_array() || j.at("runs").empty())
        throw ValidationError("config.runs must be a nonempty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < j.at("runs").size(); ++i) {
        const json& r = j.at("runs")[i];
        const std::string where = "runs[" + std::to_string(i) + "]";
        allow_keys(r, where, {"name", "risk", "market", "mode"});
        RunSpec rs;
        rs.name = get<std::string>(r, where, "name", "run" + std::to_string(i));
        if (rs.name.empty() || rs.name.find_first_of("/\\ ") != std::string::npos)
            throw ValidationError(where + ".name must be a nonempty file-name fragment");
        if (!names.insert(rs.name).second) throw ValidationError(where + ".name '" + rs.name + "' is repeated");
        if (!r.contains("risk")) throw ValidationError(where + ".risk is required");
        rs.risk = parse_risk(r.at("risk"), where + ".risk");
        json m = market, o = mode;
        if (r.contains("market")) {
            if (r.at("market").contains("gamma")) throw ValidationError(where + ".market: gamma is shared, set it at the top level");
            m.update(r.at("market"));
        }
        if (r.contains("mode")) o.update(r.at("mode"));
        rs.market = parse_market(m, where + ".market");
        rs.mode = parse_mode(o, where + ".mode");
        c.runs.push_back(std::move(rs));
    }

    if (j.contains("strategy")) {
        const json& s = j.at("strategy");
        allow_keys(s, "strategy", {"cost", "path", "sample_seed"});
        if (s.contains("cost") && !s.at("cost").is_null()) c.cost = get<Vec>(s, "strategy", "cost", {});
        if (s.contains("path") && !s.at("path").is_null())
            c.path = get<std::vector<std::size_t>>(s, "strategy", "path", {});
        if (s.contains("sample_seed") && !s.at("sample_seed").is_null())
            c.sample_seed = get<std::uint64_t>(s, "strategy", "sample_seed", 0);
        if (c.path && c.sample_seed) throw ValidationError("strategy: give path or sample_seed, not both");
    }
    if (j.contains("outputs")) {
        const json& o = j.at("outputs");
        allow_keys(o, "outputs", {"dir", "frontier", "dump_all", "dump_tree"});
        c.out_dir = get<std::string>(o, "outputs", "dir", ".");
        c.frontiers = get<std::vector<std::string>>(o, "outputs", "frontier", c.frontiers);
        if (o.contains("dump_all") && !o.at("dump_all").is_null())
            c.dump_all = get<std::string>(o, "outputs", "dump_all", "");
        c.dump_tree = get<bool>(o, "outputs", "dump_tree", false);
    }
    return c;
}

/// Fully resolved config; parse_config(to_json(c)) reproduces c.
inline json to_json(const Config& c) {
    using namespace detail;
    const auto& t = c.tree;
    json tree = {{"d", t.d}, {"T", t.T}, {"horizon", t.horizon}, {"n", t.n}, {"nu", t.nu}, {"mu", t.mu},
                 {"sigma", t.sigma}, {"rho", t.rho}, {"S0", t.S0}, {"r", t.r},
                 {"bond_compounding", tree::to_string(t.compounding)}};
    json payoff = {{"type", to_string(c.payoff.type)},
                   {"settlement", risk::to_string(c.payoff.settlement)},
                   {"position", c.payoff.short_position ? "short" : "long"}};
    if (c.payoff.type == PayoffType::table) payoff["table"] = c.payoff.table;
    else payoff["K"] = c.payoff.K;
    if (c.payoff.type == PayoffType::binary) payoff["payout"] = c.payoff.payout;
    json runs = json::array();
    for (const auto& r : c.runs) {
        const auto& s = r.risk;
        json risk = {{"kind", risk::to_string(s.kind)}};
        if (!s.lambda.empty()) risk["lambda"] = s.lambda;
        if (!s.epsilon.empty()) risk["epsilon"] = s.epsilon;
        if (!s.G.empty()) risk["G"] = s.G;
        if (!s.C_dual.empty()) risk["C_dual"] = s.C_dual;
        if (!s.M_basis.empty()) risk["M_basis"] = s.M_basis;
        runs.push_back({{"name", r.name}, {"risk", risk}, {"market", market_json(r.market)}, {"mode", mode_json(r.mode)}});
    }
    json strategy = {{"cost", c.cost ? json(*c.cost) : json(nullptr)},
                     {"path", c.path ? json(*c.path) : json(nullptr)},
                     {"sample_seed", c.sample_seed ? json(*c.sample_seed) : json(nullptr)}};
    json outputs = {{"dir", c.out_dir}, {"frontier", c.frontiers},
                    {"dump_all", c.dump_all ? json(*c.dump_all) : json(nullptr)}, {"dump_tree", c.dump_tree}};
    return {{"version", c.version}, {"tree", tree},      {"market", {{"gamma", t.gamma}}}, {"payoff", payoff},
            {"runs", runs},         {"strategy", strategy}, {"outputs", outputs}};
}

inline Config load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot read config " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(file.string() + ": " + e.what());
    }
    return parse_config(j);
}

/// The position X at every terminal node.
inline risk::Payoff position(const tree::ScenarioTree& tr, const PayoffSpec& p) {
    risk::Payoff claim;
    switch (p.type) {
        case PayoffType::put: claim = risk::put_claim(tr, p.K, p.settlement); break;
        case PayoffType::binary: claim = risk::binary_claim(tr, p.K, p.payout, p.settlement); break;
        case PayoffType::outperformance: claim = risk::outperformance_claim(tr, p.K, p.settlement); break;
        case PayoffType::table: {
            const auto& last = tr.slices.back();
            if (p.table.size() != last.size())
                throw ValidationError("payoff.table needs " + std::to_string(last.size()) + " rows, one per terminal node");
            for (std::size_t i = 0; i < last.size(); ++i) {
                if (p.table[i].size() != tr.params.d) throw ValidationError("payoff.table rows need d entries");
                claim[last[i]] = p.table[i];
            }
            break;
        }
    }
    return p.short_position ? risk::negate(claim) : claim;
}

struct RunOutput {
    RunSpec spec;
    recursion::RunResult result;
    double seconds = 0.0;
    std::optional<strategy::StrategyTrace> trace;
    std::optional<strategy::Report> report;
};

struct Session {
    Config config;
    std::unique_ptr<tree::ScenarioTree> tree;  // runs point into it
    risk::Payoff X;
    std::vector<RunOutput> runs;
};

/// Root vertex with the smallest cost, in full coordinates.
inline Vec cheapest_root_vertex(const recursion::RunResult& run, const Vec& c) {
    const auto& P = run.mode.convex ? run.root().inner : run.root().set;
    const Vec* best = nullptr;
    for (const auto& v : P.vertices)
        if (!best || dot(c, v) < dot(c, *best) - 1e-12) best = &v;
    if (!best) throw ValidationError("root set has no vertex");
    return run.M.to_full(*best);
}

inline Session execute(const Config& cfg) {
    Session s;
    s.config = cfg;
    cfg.tree.validate();
    s.tree = std::make_unique<tree::ScenarioTree>(tree::build_tree(cfg.tree));
    s.X = position(*s.tree, cfg.payoff);
    std::optional<std::vector<std::size_t>> path;
    if (cfg.path) path = strategy::path_from_choices(*s.tree, *cfg.path);
    if (cfg.sample_seed) path = strategy::sample_path(*s.tree, *cfg.sample_seed);
    for (const auto& rs : cfg.runs) {
        log::info("run " + rs.name + ": " + risk::to_string(rs.risk.kind) + ", market " + market::to_string(rs.market.model));
        RunOutput out{rs, {}, 0.0, {}, {}};
        auto t0 = std::chrono::steady_clock::now();
        out.result = recursion::backward_induct(*s.tree, rs.risk, s.X, rs.market, rs.mode);
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (path) {
            Vec c = cfg.cost ? *cfg.cost : strategy::default_cost(out.result.M.q());
            if (c.size() != out.result.M.q()) throw ValidationError("strategy.cost needs one entry per M coordinate");
            out.trace = strategy::forward_pass(out.result, *path, cheapest_root_vertex(out.result, c), c);
            out.report = strategy::verify_trace(out.result, *out.trace);
        }
        s.runs.push_back(std::move(out));
    }
    return s;
}

/// Nodes selected by "T" (whole slice) or "T:i" (slice index i or node label).
inline std::vector<std::size_t> select_nodes(const tree::ScenarioTree& tr, const std::string& req) {
    auto colon = req.find(':');
    std::size_t t = 0;
    try {
        std::size_t used = 0;
        t = std::stoul(req.substr(0, colon), &used);
        if (used != req.substr(0, colon).size()) throw std::invalid_argument(req);
    } catch (const std::exception&) {
        throw ValidationError("--emit-frontier: bad time in '" + req + "'");
    }
    if (t >= tr.slices.size()) throw ValidationError("--emit-frontier: time " + std::to_string(t) + " is past the horizon");
    const auto& slice = tr.slices[t];
    if (colon == std::string::npos) return slice;
    const std::string node = req.substr(colon + 1);
    for (std::size_t id : slice)
        if (tr.label(id) == node) return {id};
    if (!node.empty() && node.find_first_not_of("0123456789") == std::string::npos) {
        std::size_t i = std::stoul(node);
        if (i < slice.size()) return {slice[i]};
    }
    throw ValidationError("--emit-frontier: no node '" + node + "' at time " + std::to_string(t));
}

/// node,time,v_index,x0..x{d-1} per vertex, then a directions section.
inline std::string frontier_csv(const recursion::RunResult& run, const std::vector<std::size_t>& nodes, bool inner = false) {
    const std::size_t d = run.M.d;
    auto header = [&](const char* idx) {
        std::string h = std::string("node,time,") + idx;
        for (std::size_t i = 0; i < d; ++i) h += ",x" + std::to_string(i);
        return h + "\n";
    };
    auto rows = [&](const char* idx, bool dirs) {
        std::string s = header(idx);
        for (std::size_t id : nodes) {
            const auto& P = inner ? run.at(id).inner : run.at(id).set;
            std::vector<Vec> pts;
            for (const auto& v : dirs ? P.directions : P.vertices) pts.push_back(run.M.to_full(v));
            std::sort(pts.begin(), pts.end());
            for (std::size_t j = 0; j < pts.size(); ++j) {
                s += run.tree->label(id) + "," + std::to_string(run.tree->node(id).time) + "," + std::to_string(j);
                for (double x : pts[j]) s += "," + geometry::format_number(x == 0.0 ? 0.0 : x);
                s += "\n";
            }
        }
        return s;
    };
    return rows("v_index", false) + "# directions\n" + rows("d_index", true);
}

inline std::string frontier_file(const std::string& run, const std::string& req) {
    std::string tag = req;
    for (char& ch : tag)
        if (ch == ':' || ch == '/' || ch == '.') ch = '_';
    return run + "_t" + tag + ".csv";
}

inline void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << body;
}

/// Writes the requested artifacts and prints a summary to `out`.
inline void write_outputs(const Session& s, std::ostream& out) {
    const auto& cfg = s.config;
    std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    if (cfg.dump_tree) write_file(dir / "tree.json", tree::to_json(*s.tree));
    json all = json::object();
    for (const auto& r : s.runs) {
        const auto& res = r.result;
        for (const auto& req : cfg.frontiers) {
            auto nodes = select_nodes(*s.tree, req);
            write_file(dir / frontier_file(r.spec.name, req), frontier_csv(res, nodes));
            if (res.mode.convex) write_file(dir / frontier_file(r.spec.name + "_inner", req), frontier_csv(res, nodes, true));
        }
        std::size_t solves = 0;
        for (const auto& ns : res.sets) solves += ns.scalar_solves;
        char secs[32];
        std::snprintf(secs, sizeof secs, "%.3f", r.seconds);
        out << r.spec.name << ": " << risk::to_string(res.spec.kind) << ", market " << market::to_string(res.market.model)
            << ", " << (res.mode.convex ? "convex" : "linear") << " mode, " << secs << " s, " << solves
            << " scalar solves\n";
        for (std::size_t t = 0; t < s.tree->slices.size(); ++t) {
            std::size_t vmin = SIZE_MAX, vmax = 0;
            double eps = 0.0;
            for (std::size_t id : s.tree->slices[t]) {
                vmin = std::min(vmin, res.at(id).set.vertices.size());
                vmax = std::max(vmax, res.at(id).set.vertices.size());
                eps = std::max(eps, res.at(id).epsilon_total);
            }
            if (t == 0 || t + 1 == s.tree->slices.size() || log::level() >= 2)
                out << "  t=" << t << " vertices " << vmin << ".." << vmax << " epsilon_total "
                    << geometry::format_number(eps) << "\n";
        }
        if (r.trace) {
            write_file(dir / (r.spec.name + "_trace.csv"), strategy::trace_csv(res, *r.trace));
            out << "  trace: " << r.report->summary() << "\n";
            if (!r.report->ok()) log::warn(r.spec.name + ": trace verification failed");
        }
        if (cfg.dump_all) all[r.spec.name] = recursion::to_json(res);
    }
    if (cfg.dump_all) write_file(*cfg.dump_all, all.dump(1) + "\n");
}

/// Full command line: returns 0, 2 (invalid input) or 3 (solver abort).
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Set-valued risk measures on event trees"};
    std::string config_file, dump_config, path, cost, compounding, out_dir;
    std::vector<std::string> frontiers;
    std::optional<std::string> dump_all;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<double> epsilon;
    bool dump_tree = false;
    app.add_option("--config", config_file, "run configuration (JSON)")->required();
    app.add_option("--emit-frontier", frontiers, "frontier CSV for time T, or node T:i (repeatable)");
    app.add_option("--dump-all", dump_all, "JSON dump of every node set");
    auto* path_opt = app.add_option("--path", path, "branch index per step, i,j,...");
    app.add_option("--sample-path", seed, "sample a path with this seed")->excludes(path_opt);
    app.add_option("--cost", cost, "cost vector c0,c1,... for the forward pass");
    app.add_option("--jobs", jobs, "worker threads per time slice")->check(CLI::PositiveNumber);
    app.add_option("--epsilon", epsilon, "per-step tolerance in convex mode");
    app.add_flag("--dump-tree", dump_tree, "write tree.json");
    app.add_option("--bond-compounding", compounding, "continuous or simple")
        ->check(CLI::IsMember({"continuous", "simple"}));
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--dump-config", dump_config, "write the effective config");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    auto numbers = [](const std::string& s, const char* flag) {
        Vec v;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ValidationError(std::string(flag) + ": bad number '" + tok + "'");
            }
        }
        return v;
    };

    try {
        Config cfg = load_config(config_file);
        if (!frontiers.empty()) cfg.frontiers = frontiers;
        if (dump_all) cfg.dump_all = dump_all;
        if (dump_tree) cfg.dump_tree = true;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!compounding.empty())
            cfg.tree.compounding = compounding == "simple" ? tree::Compounding::simple : tree::Compounding::continuous;
        if (!cost.empty()) cfg.cost = numbers(cost, "--cost");
        if (!path.empty()) {
            std::vector<std::size_t> choices;
            for (double x : numbers(path, "--path")) {
                if (x < 0 || x != std::floor(x)) throw ValidationError("--path: branch indices are nonnegative integers");
                choices.push_back(static_cast<std::size_t>(x));
            }
            cfg.path = choices;
            cfg.sample_seed.reset();
        }
        if (seed) {
            cfg.sample_seed = seed;
            cfg.path.reset();
        }
        for (auto& r : cfg.runs) {
            if (jobs) r.mode.jobs = *jobs;
            if (epsilon) r.mode.epsilon = *epsilon;
        }
        if (!dump_config.empty()) write_file(dump_config, to_json(cfg).dump(2) + "\n");
        Session s = execute(cfg);
        write_outputs(s, out);
        return 0;
    } catch (const ValidationError& e) {
        err << "setrisk: invalid input: " << e.what() << "\n";
        return 2;
    } catch (const ModelError& e) {
        err << "setrisk: invalid model: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedError& e) {
        err << "setrisk: unsupported: " << e.what() << "\n";
        return 2;
    } catch (const InfeasibleError& e) {
        err << "setrisk: solver abort at " << e.what() << "\n";
        return 3;
    } catch (const DegenerateError& e) {
        err << "setrisk: solver abort at " << e.what() << "\n";
        return 3;
    } catch (const NumericFailure& e) {
        err << "setrisk: solver abort at " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "setrisk: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace setrisk::cli
