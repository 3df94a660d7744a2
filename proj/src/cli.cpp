#include "potts/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "potts/bethe.hpp"
#include "potts/format.hpp"
#include "potts/graph.hpp"
#include "potts/graphgen.hpp"
#include "potts/neighborhood_law.hpp"
#include "potts/oracle.hpp"
#include "potts/params.hpp"
#include "potts/sampler.hpp"
#include "potts/svg.hpp"
#include "potts/treeexact.hpp"

namespace potts {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // offset basis
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;  // FNV prime
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string pack_spins_base36(const std::uint8_t* colors, int n_base) {
    static const char digits[] = "0123456789abcdefghijklmnopqrstuvwxyz";
    std::string out(static_cast<std::size_t>(n_base), '0');
    for (int i = 0; i < n_base; ++i) {
        if (colors[i] >= 36)
            throw std::invalid_argument("pack_spins_base36: colors must be < 36");
        out[static_cast<std::size_t>(i)] = digits[colors[i]];
    }
    return out;
}

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Shared plumbing

// Derives an independent second-level seed from the master seed and a role
// string, so every stochastic stage of a run (graph, chains, tie-breaks)
// owns a stream that depends only on the configuration.
std::uint64_t mix_seed(std::uint64_t master, std::string_view salt) {
    std::uint64_t z = master ^ fnv1a64(salt);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j = json::parse(in);
    if (!j.is_object()) throw std::runtime_error("config file must contain a JSON object");
    return j;
}

// Resolution order for every parameter: explicit flag > config file > default.
// The resolved value is recorded in the effective-config object that gets
// hashed into each report.
template <class T>
void apply_cfg(const CLI::App& cmd, const std::string& flag, const json& file_cfg,
               const std::string& key, T& var, json& eff) {
    if (cmd.count(flag) > 0) {
        var = cmd.get_option(flag)->as<T>();
    } else {
        auto it = file_cfg.find(key);
        if (it != file_cfg.end()) var = it->template get<T>();
    }
    eff[key] = var;
}

// Accepts a number, a comma-separated string, or a JSON array of numbers.
std::vector<double> list_from(const json& v) {
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array()) {
        for (const auto& e : v) out.push_back(e.get<double>());
    } else if (v.is_string()) {
        std::stringstream ss(v.get<std::string>());
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(std::stod(tok));
    } else {
        throw std::runtime_error("expected a number, list, or comma-separated string");
    }
    if (out.empty()) throw std::runtime_error("empty numeric list");
    return out;
}

// Parameter points "beta:B,beta:B,...".
std::vector<std::pair<double, double>> parse_points(const std::string& s) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        auto colon = tok.find(':');
        if (colon == std::string::npos)
            throw std::runtime_error("point list entries must look like beta:B, got " + tok);
        out.emplace_back(std::stod(tok.substr(0, colon)), std::stod(tok.substr(colon + 1)));
    }
    if (out.empty()) throw std::runtime_error("empty point list");
    return out;
}

GenModel parse_model(const std::string& s) {
    if (s == "configuration") return GenModel::CONFIGURATION;
    if (s == "permutation") return GenModel::PERMUTATION;
    throw std::runtime_error("unknown generator model '" + s +
                             "' (expected configuration|permutation)");
}

void write_text_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << body;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_json_file(const fs::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// Accumulates named pass/fail checks; a run exits 0 iff every check passed.
struct CheckList {
    json items = json::array();
    bool all_pass = true;

    void add(const std::string& name, bool pass, json extra = json::object()) {
        extra["name"] = name;
        extra["pass"] = pass;
        items.push_back(std::move(extra));
        all_pass = all_pass && pass;
        std::cout << "  check " << name << ": " << (pass ? "pass" : "FAIL") << '\n';
    }
};

json report_skeleton(const std::string& command, const json& eff) {
    json j;
    j["command"] = command;
    j["config"] = eff;
    j["config_hash"] = hash_hex(fnv1a64(eff.dump()));
    return j;
}

int finish_report(json& report, CheckList& checks, const fs::path& json_path,
                  std::vector<fs::path> outputs) {
    outputs.push_back(json_path);
    json names = json::array();
    for (const auto& p : outputs) names.push_back(p.filename().string());
    report["outputs"] = names;
    report["checks"] = checks.items;
    report["pass"] = checks.all_pass;
    write_json_file(json_path, report);
    for (const auto& p : outputs) std::cout << "  wrote " << p.string() << '\n';
    std::cout << (checks.all_pass ? "PASS" : "FAIL") << '\n';
    return checks.all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Sampling helpers shared by the Monte Carlo commands

Graph acquire_graph(const std::string& graph_path, int n, int d, const std::string& model,
                    std::uint64_t gen_seed) {
    if (!graph_path.empty()) {
        std::ifstream in(graph_path);
        if (!in) throw std::runtime_error("cannot open graph file: " + graph_path);
        return Graph::from_text(in);
    }
    GenSpec spec{n, d, parse_model(model), gen_seed};
    return random_regular(spec);
}

std::vector<Snapshot> merge_chains(std::vector<std::vector<Snapshot>> per_chain) {
    std::vector<Snapshot> out;
    for (auto& chain : per_chain)
        for (auto& snap : chain) out.push_back(std::move(snap));
    return out;
}

std::vector<Snapshot> sample_merged(const GhostGraph& gg, const Params& p,
                                    const ChainBudget& budget, int chains) {
    if (chains < 1) throw std::runtime_error("chains must be >= 1");
    if (chains == 1) return run_chain(gg, p, budget);
    return merge_chains(run_chains(gg, p, budget, chains));
}

// Per-snapshot scalar series used by estimators and probe commands.
double snapshot_energy(const Snapshot& s, const Graph& g) {
    std::int64_t agree = 0;
    for (const auto& [u, v] : g.edges) agree += s.spins.colors[u] == s.spins.colors[v];
    return static_cast<double>(agree) / g.n;
}

double snapshot_color_density(const Snapshot& s, int n_base, int color) {
    std::int64_t cnt = 0;
    for (int v = 0; v < n_base; ++v) cnt += s.spins.colors[v] == color;
    return static_cast<double>(cnt) / n_base;
}

struct ConnectivityStats {
    double edge_fraction = 0.0;   // base edges whose endpoints share a cluster
    double ghost_fraction = 0.0;  // base vertices in the ghost cluster
    double cluster_count = 0.0;   // clusters not containing the ghost
};

ConnectivityStats snapshot_connectivity(const Snapshot& s, const GhostGraph& gg) {
    std::vector<int> labels = cluster_labels(gg, s.bonds);
    int n = gg.base.n;
    int ghost_root = labels[static_cast<std::size_t>(gg.ghost())];
    ConnectivityStats out;
    std::int64_t conn = 0;
    for (const auto& [u, v] : gg.base.edges) conn += labels[u] == labels[v];
    out.edge_fraction = gg.base.num_edges() > 0
                            ? static_cast<double>(conn) / gg.base.num_edges()
                            : 0.0;
    std::int64_t in_ghost = 0, clusters = 0;
    for (int v = 0; v < n; ++v) {
        in_ghost += labels[v] == ghost_root;
        clusters += labels[v] == v && v != ghost_root;
    }
    out.ghost_fraction = static_cast<double>(in_ghost) / n;
    out.cluster_count = static_cast<double>(clusters);
    return out;
}

// Tree-side reference values for the bond statistics: the open-connectivity
// probability of one tree edge, and the vertex-to-ghost connectivity
// recovered from the single-site marginal through the agreement identity
// P(spin = field color) = (1 - 1/q) P(ghost-connected) + 1/q.
double edge_conn_prediction(const Params& p, BpStart branch) {
    return rcm_edge_connectivity(1, branch, p)[0];
}

double ghost_conn_prediction(const Params& p, BpStart branch) {
    // With no field there are no ghost edges, so the ghost cluster is the
    // ghost alone regardless of the phase.
    if (p.B == 0.0) return 0.0;
    BoundarySpec b = branch == BpStart::UNIFORM ? BoundarySpec::fixedpoint_free()
                                                : BoundarySpec::fixedpoint_wired();
    double m0 = root_marginal(1, b, p)[0];
    return (m0 - 1.0 / p.q) / (1.0 - 1.0 / p.q);
}

// Reference neighborhood law of the local limit in each phase: the free
// fixed-point law where the free branch wins, the ghost-aligned wired law
// in the ordered phase at positive field, and the balanced color mixture of
// wired laws at zero field.
NeighborhoodLaw reference_law(Region region, const Params& p, int t) {
    if (region == Region::UNIQUE || region == Region::R_FREE)
        return neighborhood_law(t, t, BoundarySpec::fixedpoint_free(), p);
    if (region == Region::R_1) {
        if (p.B == 0.0)
            return wired_mixture_law(t, t, BoundaryKind::FIXEDPOINT_WIRED, p);
        return neighborhood_law(t, t, BoundarySpec::fixedpoint_wired(), p);
    }
    throw std::runtime_error("no single reference law on the critical curve");
}

BpStart branch_of_region(Region region) {
    return (region == Region::R_1) ? BpStart::DELTA_1 : BpStart::UNIFORM;
}

// ---------------------------------------------------------------------------
// Phase-diagram rendering

void render_phase_svg(const CriticalCurves& c, const fs::path& path) {
    char title[96];
    std::snprintf(title, sizeof title, "Potts phase boundaries, q=%d d=%d", c.q, c.d);
    SvgPlot plot(title, "field B", "coupling beta");

    if (c.B_grid.size() < 2) {
        // Two-state degenerate diagram: the non-uniqueness set is the ray
        // {B = 0, beta >= beta_c}, all three curves collapsed.
        double bc = c.beta_c_curve.at(0);
        plot.set_range(0.0, std::max(0.05, 2.0 * c.B_plus), 0.5 * bc, 2.0 * bc);
        std::vector<double> xs = {0.0, 0.0}, ys = {bc, 2.0 * bc};
        plot.add_polyline(xs, ys, "#d62728", 3.0);
        plot.add_marker(0.0, bc, "#222222", 4.0);
        plot.add_label(0.002, bc * 1.4, "non-uniqueness ray (B=0, beta >= beta_c)");
        plot.add_label(0.002, bc * 0.95, "beta_c");
        plot.save(path.string());
        return;
    }

    double ylo = *std::min_element(c.beta_free_curve.begin(), c.beta_free_curve.end());
    double yhi = *std::max_element(c.beta_plus_curve.begin(), c.beta_plus_curve.end());
    double pad = 0.08 * (yhi - ylo) + 1e-6;
    plot.set_range(0.0, 1.04 * c.B_plus, ylo - pad, yhi + pad);

    plot.add_band(c.B_grid, c.beta_free_curve, c.beta_c_curve, "#9ecae1", 0.5);
    plot.add_band(c.B_grid, c.beta_c_curve, c.beta_plus_curve, "#fcae91", 0.5);
    plot.add_polyline(c.B_grid, c.beta_free_curve, "#1f77b4", 2.0);
    plot.add_polyline(c.B_grid, c.beta_c_curve, "#222222", 2.0, "7,4");
    plot.add_polyline(c.B_grid, c.beta_plus_curve, "#d62728", 2.0);
    plot.add_legend("beta_free (free fp appears)", "#1f77b4");
    plot.add_legend("beta_c (functional tie)", "#222222");
    plot.add_legend("beta_plus (wired fp appears)", "#d62728");

    std::size_t mid = c.B_grid.size() / 3;
    plot.add_label(c.B_grid[mid], 0.5 * (c.beta_free_curve[mid] + c.beta_c_curve[mid]),
                   "free phase wins", "#1f5a8a");
    plot.add_label(c.B_grid[mid], 0.5 * (c.beta_c_curve[mid] + c.beta_plus_curve[mid]),
                   "wired phase wins", "#a33");
    plot.add_marker(c.B_grid.back(), c.beta_free_curve.back(), "#222222", 4.0);
    plot.save(path.string());
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const CLI::App& cmd, const json& fc, json eff, const fs::path& out_dir) {
    int n = 1000, d = 3;
    std::string model = "configuration";
    std::uint64_t seed = 1;
    std::string out_path;
    bool expansion = false;
    apply_cfg(cmd, "--n", fc, "n", n, eff);
    apply_cfg(cmd, "--d", fc, "d", d, eff);
    apply_cfg(cmd, "--model", fc, "model", model, eff);
    apply_cfg(cmd, "--seed", fc, "gen_seed", seed, eff);
    apply_cfg(cmd, "--out", fc, "out", out_path, eff);
    apply_cfg(cmd, "--expansion", fc, "expansion", expansion, eff);

    GenSpec spec{n, d, parse_model(model), seed};
    spec.validate();
    auto t0 = std::chrono::steady_clock::now();
    Graph g = random_regular(spec);

    fs::path graph_path = out_path.empty()
        ? out_dir / ("graph_n" + std::to_string(n) + "_d" + std::to_string(d) + "_" + model +
                     "_seed" + std::to_string(seed) + ".txt")
        : fs::path(out_path);
    std::ostringstream body;
    g.to_text(body);
    write_text_file(graph_path, body.str());

    json report = report_skeleton("gen", eff);
    report["n"] = g.n;
    report["num_edges"] = g.num_edges();
    report["graph_file"] = graph_path.filename().string();
    std::cout << "gen: n=" << g.n << " d=" << d << " m=" << g.num_edges() << " model=" << model
              << " seed=" << seed << " (" << fmt17(elapsed_s(t0)) << " s)\n";
    if (expansion) {
        double cert = expansion_estimate(g);
        report["expansion_certificate"] = cert;
        std::cout << "  expansion certificate (d - lambda_2)/2 = " << fmt17(cert) << '\n';
    }

    CheckList checks;
    checks.add("graph_generated", true, {{"n", g.n}, {"m", g.num_edges()}});
    return finish_report(report, checks, out_dir / "gen_report.json", {graph_path});
}

// ---------------------------------------------------------------------------
// fixedpoint

int cmd_fixedpoint(const CLI::App& cmd, const json& fc, json eff, const fs::path& out_dir) {
    int q = 3, d = 3;
    std::string beta_s = "1.0", B_s = "0.0";
    apply_cfg(cmd, "--q", fc, "q", q, eff);
    apply_cfg(cmd, "--d", fc, "d", d, eff);
    apply_cfg(cmd, "--beta", fc, "beta", beta_s, eff);
    apply_cfg(cmd, "--B", fc, "B", B_s, eff);
    std::vector<double> betas = list_from(eff["beta"]);
    std::vector<double> fields = list_from(eff["B"]);
    eff["beta"] = betas;  // canonical form feeding the config hash
    eff["B"] = fields;

    json report = report_skeleton("fixedpoint", eff);
    CheckList checks;
    std::vector<PhasePoint> points;
    json rows = json::array();
    for (double B : fields)
        for (double beta : betas) {
            Params p(q, d, beta, B);
            PhasePoint pt = classify_region(p);
            double res_free = std::abs(bp_step(pt.nu_free, p).a - pt.nu_free.a);
            double res_1 = std::abs(bp_step(pt.nu_1, p).a - pt.nu_1.a);
            auto [pi, m] = percolation_factor(p);
            rows.push_back({{"beta", beta},
                            {"B", B},
                            {"region", region_name(pt.region)},
                            {"a_free", pt.nu_free.a},
                            {"a_1", pt.nu_1.a},
                            {"b_free", pt.nu_free.b()},
                            {"b_1", pt.nu_1.b()},
                            {"phi_free", pt.phi_free},
                            {"phi_1", pt.phi_1},
                            {"residual_free", res_free},
                            {"residual_1", res_1},
                            {"pi", pi},
                            {"m", m}});
            char label[64];
            std::snprintf(label, sizeof label, "converged_beta%.6g_B%.6g", beta, B);
            checks.add(label, res_free < 1e-10 && res_1 < 1e-10,
                       {{"residual_free", res_free}, {"residual_1", res_1}});
            std::cout << "  (beta=" << fmt17(beta) << ", B=" << fmt17(B)
                      << ") -> " << region_name(pt.region) << '\n';
            points.push_back(std::move(pt));
        }
    report["points"] = rows;

    fs::path csv_path = out_dir / "region_scan.csv";
    std::ostringstream csv;
    region_scan_csv(points, csv);
    write_text_file(csv_path, csv.str());
    return finish_report(report, checks, out_dir / "fixedpoint_report.json", {csv_path});
}

// ---------------------------------------------------------------------------
// phase

int cmd_phase(const CLI::App& cmd, const json& fc, json eff, const fs::path& out_dir) {
    int q = 30, d = 3, n_points = 60;
    double merge_tol = 1e-5;
    apply_cfg(cmd, "--q", fc, "q", q, eff);
    apply_cfg(cmd, "--d", fc, "d", d, eff);
    apply_cfg(cmd, "--n-points", fc, "n_points", n_points, eff);
    apply_cfg(cmd, "--merge-tol", fc, "merge_tol", merge_tol, eff);

    json report = report_skeleton("phase", eff);
    CheckList checks;
    auto t0 = std::chrono::steady_clock::now();
    CriticalCurves c = trace_critical_curves(q, d, n_points);
    std::cout << "phase: traced " << c.B_grid.size() << " field points, B_plus = "
              << fmt17(c.B_plus) << " (" << fmt17(elapsed_s(t0)) << " s)\n";
    report["B_plus"] = c.B_plus;

    std::string tag = "_q" + std::to_string(q) + "_d" + std::to_string(d);
    fs::path csv_path = out_dir / ("phase_curves" + tag + ".csv");
    std::ostringstream csv;
    curves_to_csv(c, csv);
    write_text_file(csv_path, csv.str());
    fs::path svg_path = out_dir / ("phase_diagram" + tag + ".svg");
    render_phase_svg(c, svg_path);

    if (c.B_grid.size() < 2) {
        checks.add("degenerate_ray", true, {{"beta_c", c.beta_c_curve.at(0)}});
    } else {
        bool ordered = true;
        double min_gap = 1e300;
        for (std::size_t i = 0; i + 1 < c.B_grid.size(); ++i) {
            double g1 = c.beta_c_curve[i] - c.beta_free_curve[i];
            double g2 = c.beta_plus_curve[i] - c.beta_c_curve[i];
            ordered = ordered && g1 > 0.0 && g2 > 0.0;
            min_gap = std::min({min_gap, g1, g2});
        }
        checks.add("curve_ordering_interior", ordered, {{"min_gap", min_gap}});
        double merge_gap = c.beta_plus_curve.back() - c.beta_free_curve.back();
        checks.add("curves_merge_at_B_plus", std::abs(merge_gap) <= merge_tol,
                   {{"merge_gap", merge_gap}, {"tol", merge_tol}});
    }
    return finish_report(report, checks, out_dir / ("phase_report" + tag + ".json"),
                         {csv_path, svg_path});
}

// ---------------------------------------------------------------------------
// sample

int cmd_sample(const CLI::App& cmd, const json& fc, json eff, const fs::path& out_dir,
               std::uint64_t master_seed, int threads) {
    std::string graph_path, model = "configuration", estimators = "energy,color0";
    std::string out_path, dump_path;
    int n = 1000, d = 3, q = 3;
    double beta = 1.0, B = 0.0;
    int burnin = 1000, samples = 200, thin = 10, chains = threads, n_batches = 20;
    std::uint64_t gen_seed = 0, chain_seed = 0;
    bool have_gen_seed = cmd.count("--gen-seed") > 0 || fc.contains("gen_seed");
    bool have_chain_seed = cmd.count("--chain-seed") > 0 || fc.contains("chain_seed");
    apply_cfg(cmd, "--graph", fc, "graph", graph_path, eff);
    apply_cfg(cmd, "--n", fc, "n", n, eff);
    apply_cfg(cmd, "--d", fc, "d", d, eff);
    apply_cfg(cmd, "--model", fc, "model", model, eff);
    apply_cfg(cmd, "--gen-seed", fc, "gen_seed", gen_seed, eff);
    apply_cfg(cmd, "--q", fc, "q", q, eff);
    apply_cfg(cmd, "--beta", fc, "beta", beta, eff);
    apply_cfg(cmd, "--B", fc, "B", B, eff);
    apply_cfg(cmd, "--burnin", fc, "burnin", burnin, eff);
    apply_cfg(cmd, "--samples", fc, "samples", samples, eff);
    apply_cfg(cmd, "--thin", fc, "thin", thin, eff);
    apply_cfg(cmd, "--chains", fc, "chains", chains, eff);
    apply_cfg(cmd, "--batches", fc, "batches", n_batches, eff);
    apply_cfg(cmd, "--chain-seed", fc, "chain_seed", chain_seed, eff);
    apply_cfg(cmd, "--estimators", fc, "estimators", estimators, eff);
    apply_cfg(cmd, "--out", fc, "out", out_path, eff);
    apply_cfg(cmd, "--dump", fc, "dump", dump_path, eff);
    if (!have_gen_seed) eff["gen_seed"] = gen_seed = mix_seed(master_seed, "sample-graph");
    if (!have_chain_seed) eff["chain_seed"] = chain_seed = mix_seed(master_seed, "sample-chain");

    std::vector<std::string> tokens;
    {
        std::stringstream ss(estimators);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) tokens.push_back(tok);
    }
    for (const std::string& tok : tokens) {
        bool known = tok == "energy" || tok == "ghost" || tok == "clusters" || tok == "edgeconn";
        if (tok.rfind("color", 0) == 0 && tok.size() > 5) {
            int k = std::stoi(tok.substr(5));
            known = k >= 0 && k < q;
        }
        if (!known)
            throw std::runtime_error("unknown estimator '" + tok +
                                     "' (energy, color<k>, ghost, clusters, edgeconn)");
    }

    json report = report_skeleton("sample", eff);
    auto t0 = std::chrono::steady_clock::now();
    Graph g = acquire_graph(graph_path, n, d, model, gen_seed);
    // The sampler only reads the coupling probabilities from the parameter
    // block; the degree field is informational when the graph came from a
    // file, so clamp it into the valid range.
    Params p(q, std::max(3, g.max_degree()), beta, B);
    GhostGraph gg(g);
    ChainBudget budget{burnin, samples, thin, chain_seed};
    budget.validate();
    std::vector<Snapshot> snaps = sample_merged(gg, p, budget, chains);
    std::cout << "sample: n=" << g.n << " m=" << g.num_edges() << " chains=" << chains
              << " snapshots=" << snaps.size() << " (" << fmt17(elapsed_s(t0)) << " s)\n";

    bool need_conn = false;
    for (const std::string& tok : tokens)
        need_conn = need_conn || tok == "ghost" || tok == "clusters" || tok == "edgeconn";
    std::vector<ConnectivityStats> conn;
    if (need_conn) {
        conn.reserve(snaps.size());
        for (const Snapshot& s : snaps) conn.push_back(snapshot_connectivity(s, gg));
    }

    json est = json::object();
    for (const std::string& tok : tokens) {
        std::vector<double> series(snaps.size());
        for (std::size_t i = 0; i < snaps.size(); ++i) {
            if (tok == "energy") series[i] = snapshot_energy(snaps[i], g);
            else if (tok == "ghost") series[i] = conn[i].ghost_fraction;
            else if (tok == "clusters") series[i] = conn[i].cluster_count;
            else if (tok == "edgeconn") series[i] = conn[i].edge_fraction;
            else series[i] = snapshot_color_density(snaps[i], g.n, std::stoi(tok.substr(5)));
        }
        EstimatorReport r = batch_means(series, n_batches);
        est[tok] = {{"mean", r.mean},
                    {"std_error", r.std_error},
                    {"n_samples", r.n_samples},
                    {"n_batches", r.n_batches}};
        std::cout << "  " << tok << " = " << fmt17(r.mean) << " +- " << fmt17(r.std_error)
                  << '\n';
    }
    report["graph"] = {{"n", g.n}, {"m", g.num_edges()}};
    report["estimators"] = est;

    std::vector<fs::path> outputs;
    if (!dump_path.empty()) {
        fs::path dp = fs::path(dump_path).is_absolute() ? fs::path(dump_path)
                                                        : out_dir / dump_path;
        std::ostringstream lines;
        for (const Snapshot& s : snaps)
            lines << pack_spins_base36(s.spins.colors.data(), g.n) << '\n';
        write_text_file(dp, lines.str());
        outputs.push_back(dp);
    }
    CheckList checks;
    checks.add("run_completed", true, {{"snapshots", snaps.size()}});
    fs::path jp = out_path.empty() ? out_dir / "sample_report.json"
                                   : (fs::path(out_path).is_absolute() ? fs::path(out_path)
                                                                       : out_dir / out_path);
    return finish_report(report, checks, jp, outputs);
}

// ---------------------------------------------------------------------------
// lwc: empirical neighborhood laws on a large random regular graph against
// the tree-limit references, plus the bond-connectivity cross-checks.

int cmd_lwc(const CLI::App& cmd, const json& fc, json eff, const fs::path& out_dir,
            std::uint64_t master_seed, int threads) {
    int q = 3, d = 3, n = 10000, t = 1;
    int burnin = 1000, samples = 200, thin = 10, chains = threads, n_batches = 20;
    double tv_tol = 0.05;
    std::string points_s = "auto", model = "configuration";
    apply_cfg(cmd, "--q", fc, "q", q, eff);
    apply_cfg(cmd, "--d", fc, "d", d, eff);
    apply_cfg(cmd, "--n", fc, "n", n, eff);
    apply_cfg(cmd, "--t", fc, "t", t, eff);
    apply_cfg(cmd, "--model", fc, "model", model, eff);
    apply_cfg(cmd, "--burnin", fc, "burnin", burnin, eff);
    apply_cfg(cmd, "--samples", fc, "samples", samples, eff);
    apply_cfg(cmd, "--thin", fc, "thin", thin, eff);
    apply_cfg(cmd, "--chains", fc, "chains", chains, eff);
    apply_cfg(cmd, "--batches", fc, "batches", n_batches, eff);
    apply_cfg(cmd, "--tv-tol", fc, "tv_tol", tv_tol, eff);
    apply_cfg(cmd, "--points", fc, "points", points_s, eff);

    std::vector<std::pair<double, double>> points;
    if (points_s == "auto") {
        if (q < 3)
            throw std::runtime_error("auto point selection needs q >= 3; pass --points");
        // Two points per phase: deep uniqueness, inside the free-wins and
        // wired-wins lobes of the coexistence wedge, and on the zero-field
        // ray past the functional crossing.  The free-wins points sit in the
        // low-field low-beta corner of the wedge, where the free/wired
        // functional split is widest; elsewhere the subdominant branch keeps
        // weight ~exp(-n * split) at finite n and contaminates the empirical
        // law beyond statistical tolerance.
        Params p0(q, d, 1.0, 0.0);
        double Bp = B_plus_global(p0);
        double Ba = 0.35 * Bp, B2 = 0.02 * Bp, B3 = 0.05 * Bp;
        double bc0 = beta_c(0.0, p0);
        points = {{0.7 * beta_free(Ba, p0), Ba},
                  {bc0, 1.5 * Bp},
                  {beta_free(B2, p0) + 0.05 * (beta_c(B2, p0) - beta_free(B2, p0)), B2},
                  {beta_free(B3, p0) + 0.10 * (beta_c(B3, p0) - beta_free(B3, p0)), B3},
                  {bc0 + 0.15, 0.0},
                  {bc0 + 0.35, 0.0}};
        json arr = json::array();
        for (auto& [bb, BB] : points) arr.push_back({bb, BB});
        eff["points_resolved"] = arr;
    } else {
        points = parse_points(points_s);
    }

    json report = report_skeleton("lwc", eff);
    CheckList checks;
    std::uint64_t gen_seed = mix_seed(master_seed, "lwc-graph");
    Graph g = acquire_graph("", n, d, model, gen_seed);
    GhostGraph gg(g);
    report["graph"] = {{"n", g.n}, {"m", g.num_edges()}, {"gen_seed", gen_seed}};

    std::vector<fs::path> outputs;
    std::ostringstream table;
    table << "beta,B,region,tv,tv_tol,edge_conn,edge_conn_pred,edge_conn_se,"
             "ghost_conn,ghost_conn_pred,ghost_conn_se\n";
    json rows = json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto [beta, B] = points[i];
        Params p(q, d, beta, B);
        PhasePoint pt = classify_region(p);
        auto t0 = std::chrono::steady_clock::now();
        ChainBudget budget{burnin, samples, thin, mix_seed(master_seed, "lwc-pt" + std::to_string(i))};
        std::vector<Snapshot> snaps = sample_merged(gg, p, budget, chains);

        NeighborhoodLaw emp = neighborhood_law_estimate(g, snaps, p, t);
        std::string label = "point" + std::to_string(i);
        json row{{"beta", beta}, {"B", B}, {"region", region_name(pt.region)}};
        double tv = 0.0;
        bool on_curve = pt.region == Region::R_C;
        if (on_curve) {
            // On the crossing itself there is no single reference; record
            // both distances without gating.
            double tvf = emp.tv_distance(reference_law(Region::R_FREE, p, t));
            double tvw = emp.tv_distance(reference_law(Region::R_1, p, t));
            tv = std::min(tvf, tvw);
            row["tv_free"] = tvf;
            row["tv_wired"] = tvw;
        } else {
            NeighborhoodLaw ref = reference_law(pt.region, p, t);
            tv = emp.tv_distance(ref);
            fs::path ref_path = out_dir / ("lwc_ref_" + label + ".csv");
            ref.save_csv(ref_path.string());
            outputs.push_back(ref_path);
        }
        fs::path emp_path = out_dir / ("lwc_law_" + label + ".csv");
        emp.save_csv(emp_path.string());
        outputs.push_back(emp_path);
        row["tv"] = tv;

        std::vector<double> edge_series(snaps.size()), ghost_series(snaps.size());
        for (std::size_t s = 0; s < snaps.size(); ++s) {
            ConnectivityStats cs = snapshot_connectivity(snaps[s], gg);
            edge_series[s] = cs.edge_fraction;
            ghost_series[s] = cs.ghost_fraction;
        }
        EstimatorReport er = batch_means(edge_series, n_batches);
        EstimatorReport gr = batch_means(ghost_series, n_batches);
        BpStart branch = branch_of_region(pt.region);
        double ep = edge_conn_prediction(p, branch);
        double gp = ghost_conn_prediction(p, branch);
        row["edge_conn"] = {{"mean", er.mean}, {"se", er.std_error}, {"pred", ep}};
        row["ghost_conn"] = {{"mean", gr.mean}, {"se", gr.std_error}, {"pred", gp}};
        rows.push_back(row);

        table << fmt17(beta) << ',' << fmt17(B) << ',' << region_name(pt.region) << ','
              << fmt17(tv) << ',' << fmt17(tv_tol) << ',' << fmt17(er.mean) << ','
              << fmt17(ep) << ',' << fmt17(er.std_error) << ',' << fmt17(gr.mean) << ','
              << fmt17(gp) << ',' << fmt17(gr.std_error) << '\n';
        std::cout << "  " << label << " (beta=" << fmt17(beta) << ", B=" << fmt17(B) << ", "
                  << region_name(pt.region) << "): tv=" << fmt17(tv) << " ("
                  << fmt17(elapsed_s(t0)) << " s)\n";

        checks.add("tv_" + label, on_curve || tv <= tv_tol, {{"tv", tv}, {"tol", tv_tol}});
        if (!on_curve) {
            checks.add("edge_conn_" + label,
                       std::abs(er.mean - ep) <= 3.0 * er.std_error + 1e-12,
                       {{"mean", er.mean}, {"pred", ep}, {"se", er.std_error}});
            checks.add("ghost_conn_" + label,
                       std::abs(gr.mean - gp) <= 3.0 * gr.std_error + 1e-12,
                       {{"mean", gr.mean}, {"pred", gp}, {"se", gr.std_error}});
        }
    }
    report["points"] = rows;
    fs::path csv_path = out_dir / "lwc_table.csv";
    write_text_file(csv_path, table.str());
    outputs.insert(outputs.begin(), csv_path);
    return finish_report(report, checks, out_dir / "lwc_report.json", outputs);
}

// ---------------------------------------------------------------------------
// purestate: conditioned measures given the dominant color, against the free
// law below the crossing and the color-k wired laws above it, plus the
// local-proxy concentration of the dominant color.

int cmd_purestate(const CLI::App& cmd, const json& fc, json eff, const fs::path& out_dir,
                  std::uint64_t master_seed, int threads) {
    int q = 3, d = 3, n = 10000, t = 1, ell = 3;
    int burnin = 1000, samples = 200, thin = 10, chains = threads;
    double tv_tol = 0.05, kfrac_min = 0.9;
    std::string betas_s = "1.0,1.6", model = "configuration";
    apply_cfg(cmd, "--q", fc, "q", q, eff);
    apply_cfg(cmd, "--d", fc, "d", d, eff);
    apply_cfg(cmd, "--n", fc, "n", n, eff);
    apply_cfg(cmd, "--t", fc, "t", t, eff);
    apply_cfg(cmd, "--ell", fc, "ell", ell, eff);
    apply_cfg(cmd, "--model", fc, "model", model, eff);
    apply_cfg(cmd, "--beta", fc, "beta", betas_s, eff);
    apply_cfg(cmd, "--burnin", fc, "burnin", burnin, eff);
    apply_cfg(cmd, "--samples", fc, "samples", samples, eff);
    apply_cfg(cmd, "--thin", fc, "thin", thin, eff);
    apply_cfg(cmd, "--chains", fc, "chains", chains, eff);
    apply_cfg(cmd, "--tv-tol", fc, "tv_tol", tv_tol, eff);
    apply_cfg(cmd, "--kfrac-min", fc, "kfrac_min", kfrac_min, eff);
    std::vector<double> betas = list_from(eff["beta"]);
    eff["beta"] = betas;

    json report = report_skeleton("purestate", eff);
    CheckList checks;
    std::uint64_t gen_seed = mix_seed(master_seed, "purestate-graph");
    Graph g = acquire_graph("", n, d, model, gen_seed);
    GhostGraph gg(g);
    report["graph"] = {{"n", g.n}, {"m", g.num_edges()}, {"gen_seed", gen_seed}};

    Params p0(q, d, 1.0, 0.0);
    double bc0 = beta_c(0.0, p0);
    report["beta_c_zero_field"] = bc0;
    std::vector<char> iso2ell = tree_iso_flags(g, 2 * ell);
    NeighborhoodLaw free_law = neighborhood_law(t, t, BoundarySpec::fixedpoint_free(), p0);

    std::vector<fs::path> outputs;
    std::ostringstream table;
    table << "beta,B,k,branch,tv,tv_tol,kfrac,kfrac_min\n";
    json rows = json::array();
    for (std::size_t bi = 0; bi < betas.size(); ++bi) {
        double beta = betas[bi];
        Params p(q, d, beta, 0.0);
        bool supercritical = beta > bc0;
        auto t0 = std::chrono::steady_clock::now();
        ChainBudget budget{burnin, samples, thin,
                           mix_seed(master_seed, "purestate-b" + std::to_string(bi))};
        std::vector<Snapshot> snaps = sample_merged(gg, p, budget, chains);

        NeighborhoodLaw wired_law = supercritical
            ? neighborhood_law(t, t, BoundarySpec::fixedpoint_wired(), p)
            : free_law;
        NeighborhoodLaw free_law_b = neighborhood_law(t, t, BoundarySpec::fixedpoint_free(), p);

        std::mt19937_64 tie_rng(mix_seed(master_seed, "purestate-tie" + std::to_string(bi)));
        std::mt19937_64 root_rng(mix_seed(master_seed, "purestate-root" + std::to_string(bi)));
        std::mt19937_64 local_rng(mix_seed(master_seed, "purestate-ltie" + std::to_string(bi)));
        std::uniform_int_distribution<int> pick_root(0, g.n - 1);

        for (int k = 0; k < q; ++k) {
            std::vector<Snapshot> cond(snaps.size());
            for (std::size_t s = 0; s < snaps.size(); ++s) {
                cond[s].spins = condition_on_dominant(snaps[s].spins, p, g.n, k, tie_rng);
                cond[s].bonds = snaps[s].bonds;
            }
            NeighborhoodLaw emp = neighborhood_law_estimate(g, cond, p, t);
            NeighborhoodLaw ref = free_law_b;
            if (supercritical) {
                std::vector<int> perm(q);
                for (int c = 0; c < q; ++c) perm[c] = c;
                std::swap(perm[0], perm[k]);
                ref = wired_law.permuted_colors(perm);
            }
            double tv = emp.tv_distance(ref);

            double kfrac = 0.0;
            for (std::size_t s = 0; s < snaps.size(); ++s) {
                int root = pick_root(root_rng);
                LocalDominant ld = local_dominant(g, cond[s].spins, root, ell, q, iso2ell,
                                                  local_rng);
                kfrac += ld.k_ell == k;
            }
            kfrac /= static_cast<double>(snaps.size());

            std::string label = "beta" + std::to_string(bi) + "_k" + std::to_string(k);
            fs::path lp = out_dir / ("purestate_law_" + label + ".csv");
            emp.save_csv(lp.string());
            outputs.push_back(lp);
            const char* branch = supercritical ? "wired" : "free";
            rows.push_back({{"beta", beta},
                            {"k", k},
                            {"branch", branch},
                            {"tv", tv},
                            {"kfrac", kfrac}});
            table << fmt17(beta) << ",0," << k << ',' << branch << ',' << fmt17(tv) << ','
                  << fmt17(tv_tol) << ',' << fmt17(kfrac) << ',' << fmt17(kfrac_min) << '\n';
            checks.add("tv_" + label, tv <= tv_tol, {{"tv", tv}, {"tol", tv_tol}});
            if (supercritical)
                checks.add("dominant_local_" + label, kfrac >= kfrac_min,
                           {{"kfrac", kfrac}, {"min", kfrac_min}});
        }
        std::cout << "  beta=" << fmt17(beta) << " (" << (supercritical ? "wired" : "free")
                  << " branch): done in " << fmt17(elapsed_s(t0)) << " s\n";
    }
    report["rows"] = rows;
    fs::path csv_path = out_dir / "purestate_table.csv";
    write_text_file(csv_path, table.str());
    outputs.insert(outputs.begin(), csv_path);
    return finish_report(report, checks, out_dir / "purestate_report.json", outputs);
}

// ---------------------------------------------------------------------------
// critical: two-phase coexistence probe on the critical curve.  Chains are
// started from both the disordered (independent tilted spins) and ordered
// (all field-color) states; at a strongly first-order crossing each chain
// stays in its basin at probe scale, and the pooled single-site densities
// separate into two modes matching the two fixed-point predictions.

int cmd_critical(const CLI::App& cmd, const json& fc, json eff, const fs::path& out_dir,
                 std::uint64_t master_seed, int threads) {
    int q = 30, d = 4, n = 10000, chains = std::max(2, 2 * ((threads + 1) / 2));
    int burnin = 500, samples = 100, thin = 5, bins = 40, n_batches = 20;
    double B_frac = 0.5, B_abs = -1.0;
    double min_weight = 0.15, dip_max = 0.5;
    std::string model = "configuration";
    apply_cfg(cmd, "--q", fc, "q", q, eff);
    apply_cfg(cmd, "--d", fc, "d", d, eff);
    apply_cfg(cmd, "--n", fc, "n", n, eff);
    apply_cfg(cmd, "--model", fc, "model", model, eff);
    apply_cfg(cmd, "--B-frac", fc, "B_frac", B_frac, eff);
    apply_cfg(cmd, "--B", fc, "B", B_abs, eff);
    apply_cfg(cmd, "--chains", fc, "chains", chains, eff);
    apply_cfg(cmd, "--burnin", fc, "burnin", burnin, eff);
    apply_cfg(cmd, "--samples", fc, "samples", samples, eff);
    apply_cfg(cmd, "--thin", fc, "thin", thin, eff);
    apply_cfg(cmd, "--bins", fc, "bins", bins, eff);
    apply_cfg(cmd, "--batches", fc, "batches", n_batches, eff);
    apply_cfg(cmd, "--min-weight", fc, "min_weight", min_weight, eff);
    apply_cfg(cmd, "--dip-max", fc, "dip_max", dip_max, eff);
    if (chains < 2 || chains % 2 != 0)
        throw std::runtime_error("critical: chains must be even and >= 2");

    Params p0(q, d, 1.0, 0.0);
    double B = B_abs >= 0.0 ? B_abs : B_frac * B_plus_global(p0);
    double beta = beta_c(B, p0);
    Params p(q, d, beta, B);
    eff["B_resolved"] = B;
    eff["beta_resolved"] = beta;

    json report = report_skeleton("critical", eff);
    CheckList checks;
    PhasePoint pt = classify_region(p);
    checks.add("on_critical_curve", pt.region == Region::R_C,
               {{"region", region_name(pt.region)}});
    // The coexistence statement is established for even degree at positive
    // field; anything else is an exploratory probe and said so.
    report["exploratory"] = (d % 2 != 0) || B == 0.0;
    // Mixing at a first-order point is the slowest in the phase diagram:
    // equilibration gets four times the budget, flagged here.
    int burn_eff = 4 * burnin;
    report["burnin_boosted"] = burn_eff;

    std::uint64_t gen_seed = mix_seed(master_seed, "critical-graph");
    Graph g = acquire_graph("", n, d, model, gen_seed);
    GhostGraph gg(g);
    report["graph"] = {{"n", g.n}, {"m", g.num_edges()}, {"gen_seed", gen_seed}};

    double pred_free = root_marginal(1, BoundarySpec::fixedpoint_free(), p)[0];
    double pred_wired = root_marginal(1, BoundarySpec::fixedpoint_wired(), p)[0];
    double gpred_free = ghost_conn_prediction(p, BpStart::UNIFORM);
    double gpred_wired = ghost_conn_prediction(p, BpStart::DELTA_1);
    report["predictions"] = {{"color0_free", pred_free},
                             {"color0_wired", pred_wired},
                             {"ghost_free", gpred_free},
                             {"ghost_wired", gpred_wired}};

    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::vector<Snapshot>> per_chain(static_cast<std::size_t>(chains));
    {
        std::vector<std::thread> pool;
        for (int c = 0; c < chains; ++c)
            pool.emplace_back([&, c]() {
                std::uint64_t seed = mix_seed(master_seed, "critical-chain" + std::to_string(c));
                bool ordered_start = c >= chains / 2;
                ChainState st;
                if (ordered_start) {
                    st.rng.seed(seed);
                    st.spins = SpinConfig(gg.num_vertices(), 0);
                    st.bonds = bonds_given_spins(st.spins, gg, p, st.rng);
                } else {
                    st = make_chain(gg, p, seed);
                }
                ChainBudget budget{burn_eff, samples, thin, seed};
                per_chain[static_cast<std::size_t>(c)] = run_chain_from(st, gg, p, budget);
            });
        for (auto& th : pool) th.join();
    }
    std::cout << "critical: q=" << q << " d=" << d << " B=" << fmt17(B) << " beta="
              << fmt17(beta) << ", " << chains << " chains ("
              << fmt17(elapsed_s(t0)) << " s)\n";

    std::vector<double> color0, ghost;
    std::vector<int> start_of;
    std::ostringstream series_csv;
    series_csv << "chain,start,snapshot,color0_density,ghost_density\n";
    for (int c = 0; c < chains; ++c) {
        const auto& snaps = per_chain[static_cast<std::size_t>(c)];
        for (std::size_t s = 0; s < snaps.size(); ++s) {
            double x = snapshot_color_density(snaps[s], g.n, 0);
            double gh = snapshot_connectivity(snaps[s], gg).ghost_fraction;
            color0.push_back(x);
            ghost.push_back(gh);
            start_of.push_back(c >= chains / 2);
            series_csv << c << ',' << (c >= chains / 2 ? "ordered" : "disordered") << ',' << s
                       << ',' << fmt17(x) << ',' << fmt17(gh) << '\n';
        }
    }

    // Two-mode analysis of the pooled color-0 densities: assign snapshots to
    // the nearer prediction, then ask each class to sit on its prediction.
    double mid = 0.5 * (pred_free + pred_wired);
    std::vector<double> lo_class, hi_class, glo_class, ghi_class;
    for (std::size_t i = 0; i < color0.size(); ++i) {
        if (color0[i] < mid) {
            lo_class.push_back(color0[i]);
            glo_class.push_back(ghost[i]);
        } else {
            hi_class.push_back(color0[i]);
            ghi_class.push_back(ghost[i]);
        }
    }
    double w_lo = static_cast<double>(lo_class.size()) / color0.size();
    double w_hi = static_cast<double>(hi_class.size()) / color0.size();
    checks.add("both_modes_populated", std::min(w_lo, w_hi) >= min_weight,
               {{"weight_disordered", w_lo}, {"weight_ordered", w_hi}, {"min", min_weight}});

    json modes = json::object();
    if (std::min(w_lo, w_hi) >= min_weight && std::min(lo_class.size(), hi_class.size()) >= 2) {
        // Class sizes depend on the weights, so the batch count is clamped.
        int nb = std::max(2, std::min<int>(n_batches, static_cast<int>(
                                               std::min(lo_class.size(), hi_class.size()))));
        EstimatorReport rlo = batch_means(lo_class, nb);
        EstimatorReport rhi = batch_means(hi_class, nb);
        EstimatorReport glo = batch_means(glo_class, nb);
        EstimatorReport ghi = batch_means(ghi_class, nb);
        modes = {{"color0_disordered", {{"mean", rlo.mean}, {"se", rlo.std_error}}},
                 {"color0_ordered", {{"mean", rhi.mean}, {"se", rhi.std_error}}},
                 {"ghost_disordered", {{"mean", glo.mean}, {"se", glo.std_error}}},
                 {"ghost_ordered", {{"mean", ghi.mean}, {"se", ghi.std_error}}}};
        checks.add("disordered_mode_matches_free",
                   std::abs(rlo.mean - pred_free) <= 3.0 * rlo.std_error + 1e-12,
                   {{"mean", rlo.mean}, {"pred", pred_free}, {"se", rlo.std_error}});
        checks.add("ordered_mode_matches_wired",
                   std::abs(rhi.mean - pred_wired) <= 3.0 * rhi.std_error + 1e-12,
                   {{"mean", rhi.mean}, {"pred", pred_wired}, {"se", rhi.std_error}});
        checks.add("ghost_disordered_matches_free",
                   std::abs(glo.mean - gpred_free) <= 3.0 * glo.std_error + 1e-12,
                   {{"mean", glo.mean}, {"pred", gpred_free}, {"se", glo.std_error}});
        checks.add("ghost_ordered_matches_wired",
                   std::abs(ghi.mean - gpred_wired) <= 3.0 * ghi.std_error + 1e-12,
                   {{"mean", ghi.mean}, {"pred", gpred_wired}, {"se", ghi.std_error}});
    }
    report["modes"] = modes;

    // Histogram plus a dip statistic: the valley between the two peaks
    // should stay well below the smaller peak.
    double lo = *std::min_element(color0.begin(), color0.end());
    double hi = *std::max_element(color0.begin(), color0.end());
    double span = std::max(hi - lo, 1e-9);
    lo -= 0.02 * span;
    hi += 0.02 * span;
    double bw = (hi - lo) / bins;
    std::vector<std::int64_t> count_dis(static_cast<std::size_t>(bins), 0);
    std::vector<std::int64_t> count_ord(static_cast<std::size_t>(bins), 0);
    for (std::size_t i = 0; i < color0.size(); ++i) {
        int b = std::min(bins - 1, static_cast<int>((color0[i] - lo) / bw));
        (start_of[i] ? count_ord : count_dis)[static_cast<std::size_t>(b)] += 1;
    }
    std::size_t peak_lo = 0, peak_hi = 0;
    for (std::size_t b = 1; b < static_cast<std::size_t>(bins); ++b) {
        std::int64_t tot = count_dis[b] + count_ord[b];
        double center = lo + (b + 0.5) * bw;
        if (center < mid && tot > count_dis[peak_lo] + count_ord[peak_lo]) peak_lo = b;
        if (center >= mid && tot > count_dis[peak_hi] + count_ord[peak_hi]) peak_hi = b;
    }
    std::int64_t valley = std::numeric_limits<std::int64_t>::max();
    for (std::size_t b = std::min(peak_lo, peak_hi) + 1; b < std::max(peak_lo, peak_hi); ++b)
        valley = std::min(valley, count_dis[b] + count_ord[b]);
    if (valley == std::numeric_limits<std::int64_t>::max()) valley = 0;
    std::int64_t lesser_peak = std::min(count_dis[peak_lo] + count_ord[peak_lo],
                                        count_dis[peak_hi] + count_ord[peak_hi]);
    double dip = lesser_peak > 0 ? static_cast<double>(valley) / lesser_peak : 1.0;
    report["dip_statistic"] = dip;
    checks.add("modes_separated", lesser_peak > 0 && dip <= dip_max,
               {{"dip", dip}, {"max", dip_max}});

    std::ostringstream hist_csv;
    hist_csv << "bin_lo,bin_hi,count_disordered_start,count_ordered_start\n";
    for (int b = 0; b < bins; ++b)
        hist_csv << fmt17(lo + b * bw) << ',' << fmt17(lo + (b + 1) * bw) << ','
                 << count_dis[static_cast<std::size_t>(b)] << ','
                 << count_ord[static_cast<std::size_t>(b)] << '\n';

    SvgPlot hist_plot("Critical coexistence: color-0 density across snapshots",
                      "color-0 density", "snapshot count");
    std::int64_t cmax = 1;
    for (int b = 0; b < bins; ++b)
        cmax = std::max(cmax, count_dis[static_cast<std::size_t>(b)] +
                                  count_ord[static_cast<std::size_t>(b)]);
    hist_plot.set_range(lo, hi, 0.0, 1.1 * static_cast<double>(cmax));
    for (int b = 0; b < bins; ++b) {
        double total = static_cast<double>(count_dis[static_cast<std::size_t>(b)] +
                                           count_ord[static_cast<std::size_t>(b)]);
        hist_plot.add_column(lo + b * bw, lo + (b + 1) * bw, total, "#888888", 0.8);
    }
    std::vector<double> vf = {pred_free, pred_free}, vw = {pred_wired, pred_wired};
    std::vector<double> vy = {0.0, 1.1 * static_cast<double>(cmax)};
    hist_plot.add_polyline(vf, vy, "#1f77b4", 2.0, "6,4");
    hist_plot.add_polyline(vw, vy, "#d62728", 2.0, "6,4");
    hist_plot.add_legend("free prediction", "#1f77b4");
    hist_plot.add_legend("wired prediction", "#d62728");

    fs::path series_path = out_dir / "critical_series.csv";
    fs::path hist_path = out_dir / "critical_hist.csv";
    fs::path svg_path = out_dir / "critical_hist.svg";
    write_text_file(series_path, series_csv.str());
    write_text_file(hist_path, hist_csv.str());
    hist_plot.save(svg_path.string());
    return finish_report(report, checks, out_dir / "critical_report.json",
                         {series_path, hist_path, svg_path});
}

// ---------------------------------------------------------------------------
// free-energy: thermodynamic integration of the internal energy along the
// coupling at fixed field, evaluated at the requested couplings against the
// variational prediction max(phi_free, phi_1).

int cmd_free_energy(const CLI::App& cmd, const json& fc, json eff, const fs::path& out_dir,
                    std::uint64_t master_seed) {
    int q = 3, d = 3, n = 10000;
    int burnin = 300, samples = 100, thin = 5;
    double grid_step = 0.05, refine_step = 0.0125, refine_halfwidth = 0.15, rel_tol = 0.01;
    std::string B_s = "0.0,0.1", targets_s = "0.5,1.0,1.8", model = "configuration";
    apply_cfg(cmd, "--q", fc, "q", q, eff);
    apply_cfg(cmd, "--d", fc, "d", d, eff);
    apply_cfg(cmd, "--n", fc, "n", n, eff);
    apply_cfg(cmd, "--model", fc, "model", model, eff);
    apply_cfg(cmd, "--B", fc, "B", B_s, eff);
    apply_cfg(cmd, "--beta", fc, "beta", targets_s, eff);
    apply_cfg(cmd, "--burnin", fc, "burnin", burnin, eff);
    apply_cfg(cmd, "--samples", fc, "samples", samples, eff);
    apply_cfg(cmd, "--thin", fc, "thin", thin, eff);
    apply_cfg(cmd, "--grid-step", fc, "grid_step", grid_step, eff);
    apply_cfg(cmd, "--refine-step", fc, "refine_step", refine_step, eff);
    apply_cfg(cmd, "--refine-halfwidth", fc, "refine_halfwidth", refine_halfwidth, eff);
    apply_cfg(cmd, "--rel-tol", fc, "rel_tol", rel_tol, eff);
    std::vector<double> fields = list_from(eff["B"]);
    std::vector<double> targets = list_from(eff["beta"]);
    eff["B"] = fields;
    eff["beta"] = targets;
    std::sort(targets.begin(), targets.end());

    json report = report_skeleton("free-energy", eff);
    CheckList checks;
    std::uint64_t gen_seed = mix_seed(master_seed, "fe-graph");
    Graph g = acquire_graph("", n, d, model, gen_seed);
    report["graph"] = {{"n", g.n}, {"m", g.num_edges()}, {"gen_seed", gen_seed}};

    Params p0(q, d, 1.0, 0.0);
    // Grid refinement and budget boost around the zero-field crossing, where
    // the integrand is steepest; for two states the crossing is the single
    // degenerate point.
    double center = q == 2 ? beta_minus(p0) : beta_c(0.0, p0);
    double lo_win = std::max(0.0, center - refine_halfwidth);
    double hi_win = center + refine_halfwidth;
    report["refine_window"] = {lo_win, hi_win};

    double beta_max = targets.back();
    std::vector<double> grid;
    for (double x = 0.0; x < beta_max + 1e-12; x += grid_step) grid.push_back(x);
    for (double x = lo_win; x < hi_win + 1e-12 && x < beta_max; x += refine_step)
        grid.push_back(x);
    for (double bt : targets) grid.push_back(bt);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-9; }),
               grid.end());
    if (grid.front() != 0.0) grid.insert(grid.begin(), 0.0);

    std::vector<fs::path> outputs;
    std::ostringstream table;
    table << "q,d,n,B,beta,phi_ti,mc_se,quad_err,phi_bethe,rel_err\n";
    json rows = json::array();
    for (std::size_t fi = 0; fi < fields.size(); ++fi) {
        double B = fields[fi];
        Params base(q, d, 1.0, B);
        ChainBudget per_point{burnin, samples, thin,
                              mix_seed(master_seed, "fe-B" + std::to_string(fi))};
        auto t0 = std::chrono::steady_clock::now();
        TiResult ti = free_energy_ti(g, base, grid, per_point, lo_win, hi_win);
        std::cout << "free-energy: B=" << fmt17(B) << " scan of " << grid.size()
                  << " grid points (" << fmt17(elapsed_s(t0)) << " s)\n";

        std::ostringstream gcsv;
        gcsv << "beta,derivative,derivative_se,boosted\n";
        for (std::size_t i = 0; i < ti.grid.size(); ++i)
            gcsv << fmt17(ti.grid[i]) << ',' << fmt17(ti.derivative[i]) << ','
                 << fmt17(ti.derivative_se[i]) << ',' << int(ti.boosted[i]) << '\n';
        fs::path gp = out_dir / ("free_energy_grid_B" + std::to_string(fi) + ".csv");
        write_text_file(gp, gcsv.str());
        outputs.push_back(gp);

        double phi0 = std::log(std::exp(B) + q - 1.0);
        for (double bt : targets) {
            TiResult pp = ti_prefix(ti, bt, phi0);
            PhasePoint pt = classify_region(Params(q, d, bt, B));
            double phi_bethe = std::max(pt.phi_free, pt.phi_1);
            double rel = std::abs(pp.phi - phi_bethe) / std::abs(phi_bethe);
            rows.push_back({{"B", B},
                            {"beta", bt},
                            {"phi_ti", pp.phi},
                            {"mc_se", pp.mc_error},
                            {"quad_err", pp.quad_error},
                            {"phi_bethe", phi_bethe},
                            {"rel_err", rel}});
            table << q << ',' << d << ',' << n << ',' << fmt17(B) << ',' << fmt17(bt) << ','
                  << fmt17(pp.phi) << ',' << fmt17(pp.mc_error) << ',' << fmt17(pp.quad_error)
                  << ',' << fmt17(phi_bethe) << ',' << fmt17(rel) << '\n';
            char label[64];
            std::snprintf(label, sizeof label, "phi_B%.6g_beta%.6g", B, bt);
            checks.add(label, rel <= rel_tol,
                       {{"phi_ti", pp.phi}, {"phi_bethe", phi_bethe}, {"rel_err", rel}});
        }
    }
    report["rows"] = rows;
    fs::path csv_path = out_dir / "free_energy_table.csv";
    write_text_file(csv_path, table.str());
    outputs.insert(outputs.begin(), csv_path);
    return finish_report(report, checks, out_dir / "free_energy_report.json", outputs);
}

// ---------------------------------------------------------------------------
// oracle

int cmd_oracle(const CLI::App& cmd, const json& fc, json eff, const fs::path& out_dir,
               std::uint64_t master_seed) {
    int n_random = 50;
    std::uint64_t suite_seed = 0;
    bool have_seed = cmd.count("--suite-seed") > 0 || fc.contains("suite_seed");
    apply_cfg(cmd, "--n-random", fc, "n_random", n_random, eff);
    apply_cfg(cmd, "--suite-seed", fc, "suite_seed", suite_seed, eff);
    if (!have_seed) eff["suite_seed"] = suite_seed = mix_seed(master_seed, "oracle");

    json report = report_skeleton("oracle", eff);
    auto t0 = std::chrono::steady_clock::now();
    std::vector<OracleCheck> results = run_oracle_suite(n_random, suite_seed);
    double secs = elapsed_s(t0);

    int n_pass = 0;
    double worst = 0.0;
    std::string worst_name = "-";
    std::ostringstream csv;
    csv << "check_name,instance,max_residual,pass\n";
    json items = json::array();
    for (const OracleCheck& c : results) {
        n_pass += c.pass;
        if (c.max_residual > worst) {
            worst = c.max_residual;
            worst_name = c.check_name + " | " + c.instance;
        }
        csv << c.check_name << ',' << c.instance << ',' << fmt17(c.max_residual) << ','
            << (c.pass ? "true" : "false") << '\n';
        items.push_back({{"check_name", c.check_name},
                         {"instance", c.instance},
                         {"max_residual", c.max_residual},
                         {"pass", c.pass}});
    }
    report["checks_detail"] = items;
    report["n_checks"] = results.size();
    report["n_pass"] = n_pass;
    report["worst_residual"] = worst;
    report["worst_instance"] = worst_name;
    std::cout << "oracle: " << n_pass << "/" << results.size() << " checks passed, worst residual "
              << fmt17(worst) << " (" << fmt17(secs) << " s)\n";

    CheckList checks;
    checks.add("oracle_all_pass", n_pass == static_cast<int>(results.size()),
               {{"n_checks", results.size()}, {"n_pass", n_pass}, {"worst_residual", worst}});
    fs::path csv_path = out_dir / "oracle_table.csv";
    write_text_file(csv_path, csv.str());
    return finish_report(report, checks, out_dir / "oracle_report.json", {csv_path});
}

}  // namespace

// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Ferromagnetic Potts / random-cluster phase structure on regular graphs"};
    app.require_subcommand(1);

    std::string config_path, out_dir_s = ".";
    std::uint64_t master_seed = 1;
    int threads = 1;
    app.add_option("--config", config_path, "JSON configuration file (flags override fields)");
    app.add_option("--seed", master_seed, "master seed for every stochastic stage");
    app.add_option("--threads", threads, "default number of parallel chains");
    app.add_option("--out-dir", out_dir_s, "directory receiving all output files");

    CLI::App* c_gen = app.add_subcommand("gen", "generate a random regular graph");
    c_gen->add_option("--n", "number of vertices");
    c_gen->add_option("--d", "degree");
    c_gen->add_option("--model", "configuration|permutation");
    c_gen->add_option("--seed", "generator seed");
    c_gen->add_option("--out", "graph output path");
    c_gen->add_flag("--expansion", "also report the spectral expansion certificate");

    CLI::App* c_fp = app.add_subcommand("fixedpoint", "classify parameter points");
    c_fp->add_option("--q", "number of colors");
    c_fp->add_option("--d", "degree");
    c_fp->add_option("--beta", "coupling(s), comma separated");
    c_fp->add_option("--B", "field(s), comma separated");

    CLI::App* c_phase = app.add_subcommand("phase", "trace the critical curves");
    c_phase->add_option("--q", "number of colors");
    c_phase->add_option("--d", "degree");
    c_phase->add_option("--n-points", "field grid resolution");
    c_phase->add_option("--merge-tol", "max curve gap at the closing field");

    CLI::App* c_sample = app.add_subcommand("sample", "run the cluster sampler");
    c_sample->add_option("--graph", "read the graph from this file");
    c_sample->add_option("--n", "vertices (when generating)");
    c_sample->add_option("--d", "degree (when generating)");
    c_sample->add_option("--model", "generator model");
    c_sample->add_option("--gen-seed", "graph generation seed");
    c_sample->add_option("--q", "number of colors");
    c_sample->add_option("--beta", "coupling");
    c_sample->add_option("--B", "field");
    c_sample->add_option("--burnin", "sweeps discarded before sampling");
    c_sample->add_option("--samples", "snapshots per chain");
    c_sample->add_option("--thin", "sweeps between snapshots");
    c_sample->add_option("--chains", "independent chains");
    c_sample->add_option("--batches", "batch count for standard errors");
    c_sample->add_option("--chain-seed", "chain seed");
    c_sample->add_option("--estimators", "comma list: energy,color<k>,ghost,clusters,edgeconn");
    c_sample->add_option("--out", "JSON report path");
    c_sample->add_option("--dump", "write base-36 packed spin snapshots here");

    CLI::App* c_lwc = app.add_subcommand("lwc", "neighborhood laws vs tree limits");
    for (const char* o : {"--q", "--d", "--n", "--t", "--burnin", "--samples", "--thin",
                          "--chains", "--batches"})
        c_lwc->add_option(o, "");
    c_lwc->add_option("--model", "generator model");
    c_lwc->add_option("--tv-tol", "max TV distance per point");
    c_lwc->add_option("--points", "auto or beta:B,beta:B,...");

    CLI::App* c_pure = app.add_subcommand("purestate", "conditioned measures at zero field");
    for (const char* o : {"--q", "--d", "--n", "--t", "--ell", "--burnin", "--samples",
                          "--thin", "--chains"})
        c_pure->add_option(o, "");
    c_pure->add_option("--model", "generator model");
    c_pure->add_option("--beta", "couplings, comma separated");
    c_pure->add_option("--tv-tol", "max TV distance per conditioned law");
    c_pure->add_option("--kfrac-min", "min dominant-color local-proxy frequency");

    CLI::App* c_crit = app.add_subcommand("critical", "coexistence probe on the critical curve");
    for (const char* o : {"--q", "--d", "--n", "--chains", "--burnin", "--samples", "--thin",
                          "--bins", "--batches"})
        c_crit->add_option(o, "");
    c_crit->add_option("--model", "generator model");
    c_crit->add_option("--B-frac", "field as a fraction of the closing field");
    c_crit->add_option("--B", "absolute field (overrides --B-frac)");
    c_crit->add_option("--min-weight", "min weight of each mode");
    c_crit->add_option("--dip-max", "max valley-to-peak ratio");

    CLI::App* c_fe = app.add_subcommand("free-energy", "thermodynamic integration vs variational value");
    for (const char* o : {"--q", "--d", "--n", "--burnin", "--samples", "--thin"})
        c_fe->add_option(o, "");
    c_fe->add_option("--model", "generator model");
    c_fe->add_option("--B", "fields, comma separated");
    c_fe->add_option("--beta", "target couplings, comma separated");
    c_fe->add_option("--grid-step", "coarse integration step");
    c_fe->add_option("--refine-step", "fine step inside the crossing window");
    c_fe->add_option("--refine-halfwidth", "halfwidth of the crossing window");
    c_fe->add_option("--rel-tol", "max relative error vs the variational value");

    CLI::App* c_oracle = app.add_subcommand("oracle", "exact small-instance identity suite");
    c_oracle->add_option("--n-random", "random graphs in the suite");
    c_oracle->add_option("--suite-seed", "suite seed");

    for (CLI::App* sub : {c_gen, c_fp, c_phase, c_sample, c_lwc, c_pure, c_crit, c_fe, c_oracle})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        json fc = load_config_file(config_path);
        if (app.count("--seed") == 0 && fc.contains("seed"))
            master_seed = fc["seed"].get<std::uint64_t>();
        if (app.count("--threads") == 0 && fc.contains("threads"))
            threads = fc["threads"].get<int>();
        if (app.count("--out-dir") == 0 && fc.contains("out_dir"))
            out_dir_s = fc["out_dir"].get<std::string>();
        if (threads < 1) throw std::runtime_error("--threads must be >= 1");
        fs::path out_dir(out_dir_s);
        fs::create_directories(out_dir);

        json eff;
        eff["seed"] = master_seed;
        eff["threads"] = threads;
        eff["out_dir"] = out_dir_s;

        if (c_gen->parsed()) {
            eff["command"] = "gen";
            return cmd_gen(*c_gen, fc, eff, out_dir);
        }
        if (c_fp->parsed()) {
            eff["command"] = "fixedpoint";
            return cmd_fixedpoint(*c_fp, fc, eff, out_dir);
        }
        if (c_phase->parsed()) {
            eff["command"] = "phase";
            return cmd_phase(*c_phase, fc, eff, out_dir);
        }
        if (c_sample->parsed()) {
            eff["command"] = "sample";
            return cmd_sample(*c_sample, fc, eff, out_dir, master_seed, threads);
        }
        if (c_lwc->parsed()) {
            eff["command"] = "lwc";
            return cmd_lwc(*c_lwc, fc, eff, out_dir, master_seed, threads);
        }
        if (c_pure->parsed()) {
            eff["command"] = "purestate";
            return cmd_purestate(*c_pure, fc, eff, out_dir, master_seed, threads);
        }
        if (c_crit->parsed()) {
            eff["command"] = "critical";
            return cmd_critical(*c_crit, fc, eff, out_dir, master_seed, threads);
        }
        if (c_fe->parsed()) {
            eff["command"] = "free-energy";
            return cmd_free_energy(*c_fe, fc, eff, out_dir, master_seed);
        }
        if (c_oracle->parsed()) {
            eff["command"] = "oracle";
            return cmd_oracle(*c_oracle, fc, eff, out_dir, master_seed);
        }
        throw std::runtime_error("no subcommand selected");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace potts
