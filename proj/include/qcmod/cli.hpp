#pragma once

#include "qcmod/config.hpp"
#include "qcmod/records.hpp"
#include "qcmod/singlab.hpp"

#include <chrono>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace qcmod {

inline constexpr const char* kVersion = "qcmod 0.1.0";

struct RunConfig {
    std::string command;
    ConfigNode root;
    std::string config_echo;
    std::filesystem::path out_dir = "out";
    long seed = 0;
    int threads = 0;
    bool verbose = false;
};

inline RunConfig parse_run_config_text(const std::string& text) {
    RunConfig cfg;
    cfg.root = parse_config_text(text);
    cfg.config_echo = text;
    Section sec(cfg.root);
    cfg.command = sec.word("command");
    static const std::set<std::string> known = {"metric-check", "modulus",     "capacity",
                                                "fmo",          "qmap-verify", "decay-probe",
                                                "singularity"};
    if (!known.count(cfg.command))
        throw config_error("unknown command '" + cfg.command + "'");
    if (sec.has("seed")) cfg.seed = sec.integer("seed");
    if (sec.has("out")) cfg.out_dir = sec.word("out");
    // remaining keys are validated by the command pipeline
    return cfg;
}

inline RunConfig parse_run_config_file(const std::filesystem::path& path) {
    return parse_run_config_text(read_file(path));
}

// --- config -> domain objects ---------------------------------------------------------

inline DiscreteSpace space_from_section(const ConfigNode& node) {
    Section sec(node);
    std::string kind = sec.word_or("kind", "grid");
    if (kind == "file") {
        auto path = sec.word("path");
        sec.finish();
        return space_from_records(read_file(path));
    }
    if (kind == "grid") {
        GridDomainSpec spec;
        spec.dim = static_cast<int>(sec.number_or("dim", 2));
        spec.lo = sec.point("lo", spec.dim);
        spec.hi = sec.point("hi", spec.dim);
        spec.step = sec.number("step");
        spec.alpha = sec.number_or("alpha", spec.dim);
        auto metric = sec.word_or("metric", "euclidean");
        spec.metric = metric == "graph" ? MetricKind::graph : MetricKind::euclidean;
        if (metric != "graph" && metric != "euclidean")
            throw config_error("grid spaces support euclidean or graph metrics");
        if (auto* cb = sec.opt_child("clip_ball")) {
            Section b(*cb);
            spec.clip_ball = {b.point("center", spec.dim), b.number("radius")};
            b.finish();
        }
        if (auto* eb = sec.opt_child("exclude_ball")) {
            Section b(*eb);
            spec.exclude_ball = {b.point("center", spec.dim), b.number("radius")};
            b.finish();
        }
        if (sec.has("puncture")) spec.puncture = sec.point("puncture", spec.dim);
        sec.finish();
        return build_grid_domain(spec);
    }
    if (kind == "explicit") {
        int dim = static_cast<int>(sec.number_or("dim", 2));
        double alpha = sec.number_or("alpha", dim);
        auto metric_word = sec.word_or("metric", "euclidean");
        MetricKind metric = metric_word == "graph"    ? MetricKind::graph
                            : metric_word == "table"  ? MetricKind::table
                            : metric_word == "euclidean"
                                ? MetricKind::euclidean
                                : throw config_error("unknown metric '" + metric_word + "'");
        std::vector<std::string> names;
        std::vector<Point> coords;
        std::vector<double> mu;
        std::map<std::string, NodeId> idx;
        for (const auto* n : sec.repeated("node")) {
            if (static_cast<int>(n->values.size()) != dim + 2)
                throw config_error("node at line " + std::to_string(n->line) +
                                   " expects: name coords... mu");
            names.push_back(n->values[0]);
            Point p{0.0, 0.0, 0.0};
            for (int i = 0; i < dim; ++i) p[i] = Section::parse_double(n->values[1 + i], *n);
            coords.push_back(p);
            mu.push_back(Section::parse_double(n->values[dim + 1], *n));
            idx[names.back()] = static_cast<NodeId>(names.size() - 1);
        }
        auto lookup = [&](const std::string& name, const ConfigNode& where) {
            auto it = idx.find(name);
            if (it == idx.end())
                throw config_error("unknown node '" + name + "' at line " + std::to_string(where.line));
            return it->second;
        };
        std::vector<Edge> edges;
        for (const auto* e : sec.repeated("edge")) {
            if (e->values.size() != 2 && e->values.size() != 3)
                throw config_error("edge at line " + std::to_string(e->line) +
                                   " expects: a b [sigma]");
            NodeId a = lookup(e->values[0], *e), b = lookup(e->values[1], *e);
            double sigma = e->values.size() == 3 ? Section::parse_double(e->values[2], *e)
                                                 : euclidean(coords[a], coords[b]);
            edges.push_back({a, b, sigma});
        }
        std::vector<double> table;
        if (metric == MetricKind::table) {
            table.assign(names.size() * names.size(), 0.0);
            for (const auto* d : sec.repeated("dist")) {
                if (d->values.size() != 3)
                    throw config_error("dist at line " + std::to_string(d->line) + " expects: a b d");
                NodeId a = lookup(d->values[0], *d), b = lookup(d->values[1], *d);
                double dv = Section::parse_double(d->values[2], *d);
                table[a * names.size() + b] = dv;
                table[b * names.size() + a] = dv;
            }
        }
        sec.finish();
        return DiscreteSpace::from_nodes(dim, metric, alpha, std::move(names), std::move(coords),
                                         std::move(mu), std::move(edges), std::move(table));
    }
    throw config_error("unknown space kind '" + kind + "'");
}

inline std::vector<NodeId> set_from_section(const ConfigNode& node, const DiscreteSpace& space) {
    Section sec(node);
    std::vector<NodeId> out;
    int selectors = 0;
    if (auto* b = sec.opt_child("ball")) {
        Section s(*b);
        out = space.ball_nodes(s.point("center", space.dim), s.number("radius"));
        s.finish();
        ++selectors;
    }
    if (auto* b = sec.opt_child("closed_ball")) {
        Section s(*b);
        out = space.closed_ball_nodes(s.point("center", space.dim), s.number("radius"));
        s.finish();
        ++selectors;
    }
    if (auto* b = sec.opt_child("sphere")) {
        Section s(*b);
        out = sphere_nodes(space, s.point("center", space.dim), s.number("radius"),
                           s.number_or("tol", 0.5 * space.mesh_step))
                  .nodes;
        s.finish();
        ++selectors;
    }
    if (auto* b = sec.opt_child("ring")) {
        Section s(*b);
        out = ring_subset(space, RingSpec{s.point("center", space.dim), s.number("r1"), s.number("r2")});
        s.finish();
        ++selectors;
    }
    if (auto* b = sec.opt_child("box")) {
        Section s(*b);
        Point lo = s.point("lo", space.dim), hi = s.point("hi", space.dim);
        s.finish();
        for (NodeId v = 0; v < space.size(); ++v) {
            bool in = true;
            for (int k = 0; k < space.dim; ++k)
                in = in && space.coords[v][k] >= lo[k] - 1e-12 && space.coords[v][k] <= hi[k] + 1e-12;
            if (in) out.push_back(v);
        }
        ++selectors;
    }
    if (auto* n = sec.opt_child("nodes")) {
        for (const auto& name : n->values) out.push_back(space.node_by_name(name));
        ++selectors;
    }
    if (sec.opt_child("all")) {
        for (NodeId v = 0; v < space.size(); ++v) out.push_back(v);
        ++selectors;
    }
    if (selectors != 1)
        throw config_error("set at line " + std::to_string(node.line) +
                           " needs exactly one selector (ball, closed_ball, sphere, ring, box, nodes, all)");
    if (auto* m = sec.opt_child("minus")) {
        auto drop = set_from_section(*m, space);
        std::vector<char> mask(space.size(), 0);
        for (NodeId v : drop) mask[v] = 1;
        std::vector<NodeId> kept;
        for (NodeId v : out)
            if (!mask[v]) kept.push_back(v);
        out = std::move(kept);
    }
    sec.finish();
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline PathFamily family_from_section(const ConfigNode& node, const DiscreteSpace& space) {
    Section sec(node);
    std::string kind = sec.word("kind");
    if (kind == "ring") {
        RingSpec ring{sec.point("center", space.dim), sec.number("r1"), sec.number("r2")};
        double tol = sec.number_or("tol", 0.5 * space.mesh_step);
        sec.finish();
        if (!(tol > 0.0)) throw config_error("ring family: shell tolerance unavailable");
        return make_ring_family(space, ring, tol);
    }
    if (kind == "connecting") {
        auto e = set_from_section(sec.child("e"), space);
        auto f = set_from_section(sec.child("f"), space);
        std::vector<NodeId> g;
        if (sec.has("g")) {
            g = set_from_section(sec.child("g"), space);
        } else {
            for (NodeId v = 0; v < space.size(); ++v) g.push_back(v);
        }
        sec.finish();
        return PathFamily::connecting(std::move(e), std::move(f), std::move(g));
    }
    if (kind == "explicit") {
        std::vector<std::vector<NodeId>> paths;
        for (const auto* p : sec.repeated("path")) {
            if (p->values.empty())
                throw config_error("path at line " + std::to_string(p->line) + " is empty");
            std::vector<NodeId> nodes;
            for (const auto& name : p->values) nodes.push_back(space.node_by_name(name));
            paths.push_back(std::move(nodes));
        }
        sec.finish();
        if (paths.empty()) return PathFamily::explicit_family({});
        return PathFamily::explicit_family(std::move(paths));
    }
    throw config_error("unknown family kind '" + kind + "'");
}

inline ScalarField field_from_section(const ConfigNode& node, const DiscreteSpace& space) {
    Section sec(node);
    std::string kind = sec.word("kind");
    ScalarField f;
    if (kind == "constant") {
        f = make_constant_field(space, sec.number("value"));
    } else if (kind == "log_reciprocal") {
        f = make_log_reciprocal_field(space, sec.point("center", space.dim));
    } else if (kind == "power") {
        f = make_power_field(space, sec.point("center", space.dim), sec.number("exponent"));
    } else if (kind == "table") {
        f.assign(space.size(), 0.0);
        for (const auto* v : sec.repeated("value")) {
            if (v->values.size() != 2)
                throw config_error("value at line " + std::to_string(v->line) + " expects: node q");
            f[space.node_by_name(v->values[0])] = Section::parse_double(v->values[1], *v);
        }
    } else {
        throw config_error("unknown field kind '" + kind + "'");
    }
    sec.finish();
    return f;
}

inline DiscreteMap map_from_section(const ConfigNode& node) {
    Section sec(node);
    std::string kind = sec.word("kind");
    DiscreteMap m;
    if (kind == "identity") m = DiscreteMap::identity();
    else if (kind == "radial_stretch") m = DiscreteMap::radial_stretch(sec.number("K"));
    else if (kind == "exp_reciprocal") m = DiscreteMap::exp_reciprocal();
    else if (kind == "sinc") m = DiscreteMap::sinc();
    else throw config_error("unknown map kind '" + kind + "'");
    sec.finish();
    return m;
}

/// The eta battery: uniform 1/(r2-r1), the reciprocal profile t^-1 / I, and the
/// log-weighted shape (rescaled into (0,1) so it stays defined on rings with r2 >= 1).
inline EtaProfile eta_from_name(const std::string& name, double r1, double r2) {
    if (name == "uniform") return eta_normalized(PsiProfile::constant(1.0, r2), r1, r2);
    if (name == "reciprocal") return eta_normalized(PsiProfile::power(1.0, r2), r1, r2);
    if (name == "logweight")
        return eta_normalized(PsiProfile::log_reciprocal(r2, 0.5 / r2), r1, r2);
    throw config_error("unknown eta profile '" + name + "' (uniform, reciprocal, logweight)");
}

// --- run artifacts ----------------------------------------------------------------------

struct Artifacts {
    std::filesystem::path dir;
    std::vector<std::string> files;

    void write(const std::string& name, const std::string& content) {
        write_file(dir / name, content);
        files.push_back(name);
    }
};

namespace pipelines {

inline SolverOptions solver_options(Section& sec) {
    SolverOptions opts;
    opts.tol = sec.number_or("solver_tol", opts.tol);
    opts.kkt_tol = sec.number_or("kkt_tol", opts.kkt_tol);
    return opts;
}

inline std::string xname(const DiscreteSpace& space, const XPoint& x) {
    return xpoint_name(space, x);
}

// metric-check: chordal triangle audits per parameter set, Ptolemy audit, the
// compactified-metric inequalities, diameter and tail decay.
inline bool run_metric_check(const RunConfig& cfg, Artifacts& art) {
    Section sec(cfg.root);
    sec.word("command");
    if (sec.has("seed")) sec.integer("seed");
    if (sec.has("out")) sec.word("out");
    auto space = space_from_section(sec.child("space"));
    NodeId basepoint = space.node_by_name(sec.word_or("basepoint", space.names.front()));
    double tol = sec.number_or("tol", 1e-12);

    std::vector<ChordalParams> paramsets;
    for (const auto* ps : sec.repeated("paramset")) {
        Section p(*ps);
        ChordalParams cp{basepoint, p.number_or("alpha", 1.0), p.number_or("beta", 1.0),
                         p.number_or("p", 2.0)};
        cp.validate();
        p.finish();
        paramsets.push_back(cp);
    }
    if (paramsets.empty()) paramsets.push_back(ChordalParams{basepoint, 1.0, 1.0, 2.0});

    long sample_triples = static_cast<long>(sec.number_or("sample_triples", 0));
    long sample_quadruples = static_cast<long>(sec.number_or("sample_quadruples", 0));
    sec.finish();

    std::vector<std::array<NodeId, 3>> triples;
    std::vector<std::array<NodeId, 4>> quadruples;
    std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.seed));
    std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(space.size() - 1));
    if (sample_triples > 0) {
        for (long i = 0; i < sample_triples; ++i) triples.push_back({pick(rng), pick(rng), pick(rng)});
    } else {
        triples = all_triples(space);
    }
    if (sample_quadruples > 0) {
        for (long i = 0; i < sample_quadruples; ++i)
            quadruples.push_back({pick(rng), pick(rng), pick(rng), pick(rng)});
    } else {
        quadruples = all_quadruples(space);
    }

    bool ok = true;
    Csv csv({"check", "label", "value", "witness"});

    auto pt = ptolemy_check(space, quadruples);
    bool ptolemaic = pt.min_relative_slack >= -tol;
    ok = ok && ptolemaic;
    csv.row({"ptolemy_min_slack", space.names[basepoint], g17(pt.min_slack),
             space.names[pt.worst[0]] + "|" + space.names[pt.worst[1]] + "|" +
                 space.names[pt.worst[2]] + "|" + space.names[pt.worst[3]]});

    for (const auto& cp : paramsets) {
        auto rep = triangle_audit(cp, space, triples);
        std::string label = "alpha=" + g17(cp.alpha) + ";beta=" + g17(cp.beta) + ";p=" + g17(cp.p);
        csv.row({"triangle_max_defect", label, g17(rep.max_defect),
                 space.names[rep.worst[0]] + "|" + space.names[rep.worst[1]] + "|" +
                     space.names[rep.worst[2]]});
        if (rep.max_relative_defect > tol) ok = false;
    }

    ChordalParams std_params{basepoint, 1.0, 1.0, 2.0};
    double eq27_max = -std::numeric_limits<double>::infinity();
    for (NodeId x = 0; x < space.size(); ++x)
        for (NodeId y = 0; y < space.size(); ++y) {
            double lhs = chordal_distance(XPoint::node(x), XPoint::infinity(), std_params, space);
            double rhs = chordal_distance(x, y, std_params, space) +
                         chordal_distance(XPoint::node(y), XPoint::infinity(), std_params, space);
            eq27_max = std::max(eq27_max, lhs - rhs);
        }
    csv.row({"infinity_triangle_max_defect", "standard", g17(eq27_max), ""});
    if (eq27_max > tol) ok = false;

    std::vector<XPoint> xbar;
    for (NodeId v = 0; v < space.size(); ++v) xbar.push_back(XPoint::node(v));
    xbar.push_back(XPoint::infinity());
    auto diam = chordal_diameter(xbar, std_params, space);
    csv.row({"diameter_xbar", "standard", g17(diam.value),
             xname(space, diam.witness.first) + "|" + xname(space, diam.witness.second)});
    if (diam.value > 1.0 + tol) ok = false;

    // tail decay: chordal diameter of the complement of B(x0,R) across doubling R
    double dmax = 0.0;
    for (NodeId v = 0; v < space.size(); ++v) dmax = std::max(dmax, space.distance(basepoint, v));
    double prev = std::numeric_limits<double>::infinity();
    for (double R = dmax / 16.0; R <= dmax * 2.0; R *= 2.0) {
        std::vector<NodeId> outside;
        for (NodeId v = 0; v < space.size(); ++v)
            if (space.distance(basepoint, v) >= R) outside.push_back(v);
        double tail = outside.empty() ? 0.0 : chordal_diameter(outside, std_params, space).value;
        csv.row({"tail_diameter", "R=" + g17(R), g17(tail), ""});
        if (tail > prev + tol) ok = false;
        prev = tail;
    }

    art.write("metric_check.csv", csv.str());
    return ok;
}

inline bool run_modulus(const RunConfig& cfg, Artifacts& art) {
    Section sec(cfg.root);
    sec.word("command");
    if (sec.has("seed")) sec.integer("seed");
    if (sec.has("out")) sec.word("out");
    auto space = space_from_section(sec.child("space"));
    auto family = family_from_section(sec.child("family"), space);
    double p = sec.number("p");
    if (!(p > 1.0))
        throw config_error("p = " + g17(p) + " rejected: the p-modulus solver requires p > 1");
    auto opts = solver_options(sec);
    std::string cross = sec.word_or("cross_check", "none");
    sec.finish();

    auto res = compute_p_modulus(space, family, p, opts);
    std::string cross_value = "";
    if (cross == "brute_force") {
        auto bf = brute_force_modulus(space, family, p, opts);
        cross_value = bf.infinite ? "infinite" : g17(bf.value);
    } else if (cross == "conductance") {
        if (family.kind != PathFamily::Kind::connecting)
            throw config_error("conductance cross-check requires a connecting family");
        cross_value = g17(conductance_oracle(space, family.E, family.F));
    } else if (cross != "none") {
        throw config_error("unknown cross_check '" + cross + "'");
    }

    Csv csv({"value", "infinite", "gap", "iterations", "kkt", "cross_check", "cross_value"});
    csv.row({res.infinite ? "" : g17(res.value), res.infinite ? "1" : "0", g17(res.certified_gap),
             std::to_string(res.iterations), g17(res.kkt_residual), cross, cross_value});
    art.write("modulus.csv", csv.str());
    art.write("modulus_density.rec", modulus_record(res, space));
    return true;
}

inline bool run_capacity(const RunConfig& cfg, Artifacts& art) {
    Section sec(cfg.root);
    sec.word("command");
    if (sec.has("seed")) sec.integer("seed");
    if (sec.has("out")) sec.word("out");
    auto space = space_from_section(sec.child("space"));
    Section cond_sec(sec.child("condenser"));
    Condenser cond;
    cond.A = set_from_section(cond_sec.child("a"), space);
    cond.C = set_from_section(cond_sec.child("c"), space);
    cond_sec.finish();
    double p = sec.number("p");
    if (!(p > 1.0)) throw config_error("p = " + g17(p) + " rejected: capacity requires p > 1");
    auto opts = solver_options(sec);
    sec.finish();

    auto res = condenser_capacity(space, cond, p, opts);
    Csv csv({"capacity", "infinite", "gap", "iterations"});
    csv.row({res.infinite ? "" : g17(res.value), res.infinite ? "1" : "0", g17(res.certified_gap),
             std::to_string(res.iterations)});
    art.write("capacity.csv", csv.str());
    art.write("capacity_density.rec", modulus_record(res, space));
    return true;
}

inline bool run_fmo(const RunConfig& cfg, Artifacts& art) {
    Section sec(cfg.root);
    sec.word("command");
    if (sec.has("seed")) sec.integer("seed");
    if (sec.has("out")) sec.word("out");
    auto space = space_from_section(sec.child("space"));
    auto field = field_from_section(sec.child("field"), space);
    Point x0 = sec.point("x0", space.dim);
    auto radii = sec.numbers("radii");
    std::string expect = sec.word_or("expect", "none");

    bool want_funnel = sec.has("funnel");
    double funnel_q = 2.0, funnel_eps0 = 0.5;
    if (want_funnel) {
        Section f(sec.child("funnel"));
        funnel_q = f.number_or("q", 2.0);
        funnel_eps0 = f.number("eps0");
        f.finish();
    }
    sec.finish();

    auto rep = fmo_classify(field, x0, radii, space);
    Csv csv({"radius", "mean", "oscillation", "next_over_current"});
    for (std::size_t i = 0; i < rep.radii.size(); ++i)
        csv.row({g17(rep.radii[i]), g17(rep.means[i]), g17(rep.oscillations[i]),
                 i + 1 < rep.radii.size() ? g17(rep.consecutive_ratios[i]) : ""});
    art.write("fmo.csv", csv.str());

    Csv sum({"verdict", "limsup_estimate", "divergence_rate"});
    sum.row({rep.verdict == FMOVerdict::fmo_consistent ? "fmo-consistent" : "diverging",
             g17(rep.limsup_estimate), g17(rep.divergence_rate)});
    art.write("fmo_summary.csv", sum.str());

    if (want_funnel) {
        auto profile = PsiProfile::log_reciprocal(funnel_eps0);
        Csv fun({"eps", "ratio"});
        for (double e : radii)
            if (e < funnel_eps0)
                fun.row({g17(e), g17(funnel_ratio(field, profile, funnel_q, x0, e, funnel_eps0, space))});
        art.write("funnel.csv", fun.str());
    }

    if (expect == "fmo") return rep.verdict == FMOVerdict::fmo_consistent;
    if (expect == "diverging") return rep.verdict == FMOVerdict::diverging;
    if (expect != "none") throw config_error("unknown expect '" + expect + "' (fmo, diverging)");
    return true;
}

inline DiscreteSpace image_space_for(Section& sec, const DiscreteMap& map,
                                     const DiscreteSpace& space) {
    std::string image = sec.word_or("image", "auto");
    if (image == "auto") {
        if (!map.has_jacobian())
            throw config_error("map '" + std::string(map.name()) +
                               "' has no registered jacobian; provide an image_space section");
        return pushforward_space(map, space);
    }
    if (image == "section") return space_from_section(sec.child("image_space"));
    throw config_error("image must be 'auto' or 'section'");
}

inline bool run_qmap_verify(const RunConfig& cfg, Artifacts& art) {
    Section sec(cfg.root);
    sec.word("command");
    if (sec.has("seed")) sec.integer("seed");
    if (sec.has("out")) sec.word("out");
    auto space = space_from_section(sec.child("space"));
    auto map = map_from_section(sec.child("map"));
    Point x0 = sec.point("x0", space.dim);
    double p = sec.number_or("p", 2.0);
    double q = sec.number_or("q", 2.0);
    if (!(p > 1.0)) throw config_error("p = " + g17(p) + " rejected: ring tests require p > 1");
    double tol = sec.number_or("tol", 0.05);
    double shell_tol = sec.number_or("shell_tol", 0.5 * space.mesh_step);
    auto opts = solver_options(sec);

    ScalarField Q;
    if (sec.has("q_field")) {
        Q = field_from_section(sec.child("q_field"), space);
    } else {
        auto rq = map.registered_q();
        if (!rq) throw config_error("map has no registered Q; provide q_field");
        Q = make_constant_field(space, *rq);
    }

    std::vector<std::pair<double, double>> rings;
    for (const auto* r : sec.repeated("ring")) {
        Section rs(*r);
        rings.emplace_back(rs.number("r1"), rs.number("r2"));
        rs.finish();
    }
    std::vector<std::string> etas;
    for (const auto* e : sec.repeated("eta")) etas.push_back(Section::to_word(*e));
    if (rings.empty() || etas.empty()) throw config_error("qmap-verify needs ring and eta entries");

    auto image = image_space_for(sec, map, space);
    sec.finish();

    bool ok = true;
    Csv csv({"r1", "r2", "eta", "lhs", "lhs_infinite", "rhs", "margin", "holds"});
    for (auto [r1, r2] : rings)
        for (const auto& ename : etas) {
            RingTestCase test{RingSpec{x0, r1, r2}, eta_from_name(ename, r1, r2), p, q, Q,
                              shell_tol};
            auto res = ring_inequality_test(test, map, space, image, tol, opts);
            csv.row({g17(r1), g17(r2), ename, res.lhs_infinite ? "" : g17(res.lhs),
                     res.lhs_infinite ? "1" : "0", g17(res.rhs), g17(res.margin),
                     res.holds ? "1" : "0"});
            ok = ok && res.holds;
        }
    art.write("qmap.csv", csv.str());
    return ok;
}

inline bool run_decay_probe(const RunConfig& cfg, Artifacts& art) {
    Section sec(cfg.root);
    sec.word("command");
    if (sec.has("seed")) sec.integer("seed");
    if (sec.has("out")) sec.word("out");
    auto space = space_from_section(sec.child("space"));
    auto map = map_from_section(sec.child("map"));
    Point x0 = sec.point("x0", space.dim);
    double outer = sec.number("outer");
    auto eps_list = sec.numbers("eps");
    double eps0 = sec.number("eps0");
    double p = sec.number_or("p", 2.0);
    double q = sec.number_or("q", 2.0);
    if (!(p > 1.0)) throw config_error("p = " + g17(p) + " rejected: the probe requires p > 1");
    double tol = sec.number_or("tol", 1e-6);
    auto opts = solver_options(sec);
    ScalarField Q;
    if (sec.has("q_field")) {
        Q = field_from_section(sec.child("q_field"), space);
    } else {
        auto rq = map.registered_q();
        if (!rq) throw config_error("map has no registered Q; provide q_field");
        Q = make_constant_field(space, *rq);
    }
    auto image = image_space_for(sec, map, space);
    sec.finish();

    auto profile = PsiProfile::log_reciprocal(eps0);
    auto rep = modulus_decay_probe(map, Q, x0, outer, eps_list, profile, p, q, space, image, tol,
                                   opts);
    Csv csv({"eps", "bound", "observed"});
    for (std::size_t i = 0; i < rep.eps.size(); ++i)
        csv.row({g17(rep.eps[i]), g17(rep.bound[i]), g17(rep.observed[i])});
    art.write("decay.csv", csv.str());
    Csv sum({"bounded", "decreasing_tail", "partial"});
    sum.row({rep.bounded ? "1" : "0", rep.decreasing_tail ? "1" : "0", rep.partial ? "1" : "0"});
    art.write("decay_summary.csv", sum.str());
    return rep.bounded && rep.decreasing_tail;
}

inline bool run_singularity(const RunConfig& cfg, Artifacts& art) {
    Section sec(cfg.root);
    sec.word("command");
    if (sec.has("seed")) sec.integer("seed");
    if (sec.has("out")) sec.word("out");
    SingularityExperiment exp;
    exp.map = map_from_section(sec.child("map"));
    exp.zeta0 = sec.point("zeta0", 2);
    exp.chordal.basepoint = sec.point("basepoint", 2);
    exp.samples_per_shell = static_cast<int>(sec.number_or("samples", 4096));
    exp.refine = sec.flag_or("refine", true);
    exp.extension_tol = sec.number_or("extension_tol", 0.05);

    if (sec.has("radii")) {
        exp.approach_radii = sec.numbers("radii");
    } else {
        Section rr(sec.child("radii_reciprocal"));
        double from_u = rr.number("from_u");
        double to_u = rr.number("to_u");
        long count = rr.integer("count");
        rr.finish();
        if (!(from_u > 0.0) || !(to_u > from_u) || count < 2)
            throw config_error("radii_reciprocal needs 0 < from_u < to_u and count >= 2");
        for (long i = 0; i < count; ++i) {
            double u = from_u + (to_u - from_u) * static_cast<double>(i) / (count - 1);
            exp.approach_radii.push_back(1.0 / u);
        }
    }

    bool ok = true;
    std::string expect_ext = sec.word_or("expect_extension", "none");

    if (sec.has("targets")) {
        Section ts(sec.child("targets"));
        for (const auto* pnode : ts.repeated("point")) {
            if (pnode->values.size() != 2)
                throw config_error("target point at line " + std::to_string(pnode->line) +
                                   " expects two coordinates");
            exp.targets.push_back(ExtendedPt::finite({Section::parse_double(pnode->values[0], *pnode),
                                                      Section::parse_double(pnode->values[1], *pnode),
                                                      0.0}));
        }
        if (ts.opt_child("inf")) exp.targets.push_back(ExtendedPt::infinity());
        ts.finish();
    }

    const ConfigNode* omitted_node = sec.opt_child("omitted");
    bool do_extension = sec.flag_or("extension", true);
    sec.finish();

    if (!exp.targets.empty()) {
        auto rep = cluster_density_scan(exp);
        Csv csv({"target_x", "target_y", "target_inf", "best_distance", "witness_x", "witness_y",
                 "witness_radius"});
        for (const auto& ta : rep.per_target)
            csv.row({ta.target.at_infinity ? "" : g17(ta.target.p[0]),
                     ta.target.at_infinity ? "" : g17(ta.target.p[1]),
                     ta.target.at_infinity ? "1" : "0", g17(ta.best_distance), g17(ta.witness[0]),
                     g17(ta.witness[1]), g17(ta.witness_radius)});
        art.write("cluster.csv", csv.str());

        Csv plot({"target_index", "radius", "best_distance"});
        for (std::size_t t = 0; t < rep.shell_best.size(); ++t)
            for (std::size_t s = 0; s < rep.shell_best[t].size(); ++s)
                plot.row({std::to_string(t), g17(exp.approach_radii[s]), g17(rep.shell_best[t][s])});
        art.write("cluster_plot.csv", plot.str());
    }

    if (do_extension) {
        auto ext = extension_check(exp);
        Csv csv({"radius", "oscillation"});
        for (std::size_t i = 0; i < ext.radii.size(); ++i)
            csv.row({g17(ext.radii[i]), g17(ext.oscillations[i])});
        art.write("extension.csv", csv.str());
        Csv sum({"extends", "limit_x", "limit_y", "limit_inf", "loglog_slope"});
        sum.row({ext.extends ? "1" : "0", ext.limit.at_infinity ? "" : g17(ext.limit.p[0]),
                 ext.limit.at_infinity ? "" : g17(ext.limit.p[1]),
                 ext.limit.at_infinity ? "1" : "0", g17(ext.loglog_slope)});
        art.write("extension_summary.csv", sum.str());
        if (expect_ext == "yes") ok = ok && ext.extends;
        if (expect_ext == "no") ok = ok && !ext.extends;
    }

    if (omitted_node) {
        Section os(*omitted_node);
        std::vector<Point> K;
        for (const auto* pnode : os.repeated("point")) {
            if (pnode->values.size() != 2)
                throw config_error("continuum point at line " + std::to_string(pnode->line) +
                                   " expects two coordinates");
            K.push_back({Section::parse_double(pnode->values[0], *pnode),
                         Section::parse_double(pnode->values[1], *pnode), 0.0});
        }
        double margin = os.number("margin");
        std::string expect_omitted = os.word_or("expect", "none");
        os.finish();
        auto rep = omitted_continuum_check(exp, K, margin);
        Csv csv({"omitted", "closest_approach", "witness_x", "witness_y"});
        csv.row({rep.omitted ? "1" : "0", g17(rep.closest_approach), g17(rep.witness[0]),
                 g17(rep.witness[1])});
        art.write("omitted.csv", csv.str());
        if (expect_omitted == "yes") ok = ok && rep.omitted;
        if (expect_omitted == "no") ok = ok && !rep.omitted;
    }
    return ok;
}

} // namespace pipelines

/// Execute a parsed run: write the manifest first, dispatch the pipeline, append
/// the outcome. Returns 0 on success, 1 on assertion/solver failure, 2 on input error.
inline int run(const RunConfig& cfg, std::string* error_out = nullptr) {
    namespace fs = std::filesystem;
    Artifacts art;
    art.dir = cfg.out_dir;
    fs::create_directories(art.dir);

    std::string manifest;
    manifest += std::string(kVersion) + "\n";
    manifest += "command " + cfg.command + "\n";
    manifest += "seed " + std::to_string(cfg.seed) + "\n";
    manifest += "threads " + std::to_string(cfg.threads) + "\n";
    manifest += "config_begin\n" + cfg.config_echo +
                (cfg.config_echo.empty() || cfg.config_echo.back() == '\n' ? "" : "\n") +
                "config_end\n";
    write_file(art.dir / "manifest.txt", manifest);

    auto started = std::chrono::steady_clock::now();
    int code = 0;
    std::string note = "ok";
    try {
        bool ok = false;
        if (cfg.command == "metric-check") ok = pipelines::run_metric_check(cfg, art);
        else if (cfg.command == "modulus") ok = pipelines::run_modulus(cfg, art);
        else if (cfg.command == "capacity") ok = pipelines::run_capacity(cfg, art);
        else if (cfg.command == "fmo") ok = pipelines::run_fmo(cfg, art);
        else if (cfg.command == "qmap-verify") ok = pipelines::run_qmap_verify(cfg, art);
        else if (cfg.command == "decay-probe") ok = pipelines::run_decay_probe(cfg, art);
        else if (cfg.command == "singularity") ok = pipelines::run_singularity(cfg, art);
        else throw config_error("unknown command '" + cfg.command + "'");
        if (!ok) {
            code = 1;
            note = "assertion failed";
        }
    } catch (const config_error& e) {
        code = 2;
        note = std::string("input error: ") + e.what();
    } catch (const std::invalid_argument& e) {
        code = 2;
        note = std::string("input error: ") + e.what();
    } catch (const solver_error& e) {
        code = 1;
        note = std::string("solver error: ") + e.what() + " (bounds " + g17(e.lower_bound) + ", " +
               g17(e.upper_bound) + ")";
    } catch (const std::exception& e) {
        code = 1;
        note = std::string("error: ") + e.what();
    }
    auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    manifest += "status " + note + "\n";
    manifest += "exit " + std::to_string(code) + "\n";
    manifest += "elapsed_ms " + std::to_string(elapsed.count()) + "\n";
    for (const auto& f : art.files) manifest += "artifact " + f + "\n";
    write_file(art.dir / "manifest.txt", manifest);
    if (error_out) *error_out = note;
    return code;
}

} // namespace qcmod
