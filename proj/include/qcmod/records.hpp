#pragma once

#include "qcmod/modulus.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcmod {

/// 17-significant-digit decimal rendering ('.' decimal point, no grouping):
/// enough digits to round-trip a double bit-exactly.
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Minimal CSV assembly: '.' decimal, 17 significant digits, no quoting needed for
/// the identifiers we emit.
class Csv {
public:
    explicit Csv(std::vector<std::string> header) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) body_ += ',';
            body_ += header[i];
        }
        body_ += '\n';
        cols_ = header.size();
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) throw std::logic_error("csv row arity mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) body_ += ',';
            body_ += cells[i];
        }
        body_ += '\n';
    }

    const std::string& str() const { return body_; }

private:
    std::string body_;
    std::size_t cols_ = 0;
};

/// Line-delimited ModulusResult record: value (or the `infinite` tag), certified
/// gap, iteration count, KKT residual, then the full density table.
inline std::string modulus_record(const ModulusResult& res, const DiscreteSpace& space) {
    std::string out;
    out += res.infinite ? "value infinite\n" : "value " + g17(res.value) + "\n";
    out += "gap " + g17(res.certified_gap) + "\n";
    out += "iterations " + std::to_string(res.iterations) + "\n";
    out += "kkt " + g17(res.kkt_residual) + "\n";
    out += "active_paths " + std::to_string(res.active_paths.size()) + "\n";
    if (!res.infinite)
        for (NodeId v = 0; v < space.size(); ++v)
            out += "rho " + space.names[v] + " " + g17(res.density[v]) + "\n";
    return out;
}

/// Space record round-trip (docs: `space` header line, then node/edge/dist lines).
inline DiscreteSpace space_from_records(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int dim = 2;
    MetricKind metric = MetricKind::euclidean;
    double alpha = 2.0, step = 0.0;
    std::vector<std::string> names;
    std::vector<Point> coords;
    std::vector<double> mu;
    struct RawEdge {
        std::string a, b;
        double sigma;
        double w = 1.0;
    };
    std::vector<RawEdge> raw_edges;
    struct RawDist {
        std::string a, b;
        double d;
    };
    std::vector<RawDist> raw_dists;

    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "space") {
            std::string key;
            while (ls >> key) {
                if (key == "dim") ls >> dim;
                else if (key == "metric") {
                    std::string m;
                    ls >> m;
                    if (m == "euclidean") metric = MetricKind::euclidean;
                    else if (m == "graph") metric = MetricKind::graph;
                    else if (m == "table") metric = MetricKind::table;
                    else throw std::invalid_argument("space record: unknown metric " + m);
                } else if (key == "alpha") ls >> alpha;
                else if (key == "step") ls >> step;
                else throw std::invalid_argument("space record: unknown header field " + key);
            }
        } else if (tag == "node") {
            std::string name;
            double x, y, z = 0.0, m;
            ls >> name >> x >> y;
            if (dim == 3) ls >> z;
            if (!(ls >> m)) throw std::invalid_argument("space record: malformed node line");
            names.push_back(name);
            coords.push_back({x, y, z});
            mu.push_back(m);
        } else if (tag == "edge") {
            RawEdge e;
            if (!(ls >> e.a >> e.b >> e.sigma))
                throw std::invalid_argument("space record: malformed edge line");
            if (!(ls >> e.w)) e.w = 1.0;
            raw_edges.push_back(e);
        } else if (tag == "dist") {
            RawDist d;
            if (!(ls >> d.a >> d.b >> d.d))
                throw std::invalid_argument("space record: malformed dist line");
            raw_dists.push_back(d);
        } else {
            throw std::invalid_argument("space record: unknown line tag " + tag);
        }
    }

    std::map<std::string, NodeId> idx;
    for (NodeId v = 0; v < names.size(); ++v) idx[names[v]] = v;
    auto lookup = [&](const std::string& n) {
        auto it = idx.find(n);
        if (it == idx.end()) throw std::invalid_argument("space record: unknown node " + n);
        return it->second;
    };
    std::vector<Edge> edges;
    for (const auto& e : raw_edges) edges.push_back({lookup(e.a), lookup(e.b), e.sigma, e.w});
    std::vector<double> table;
    if (metric == MetricKind::table) {
        const std::size_t n = names.size();
        table.assign(n * n, 0.0);
        for (const auto& d : raw_dists) {
            NodeId a = lookup(d.a), b = lookup(d.b);
            table[a * n + b] = d.d;
            table[b * n + a] = d.d;
        }
    }
    auto s = DiscreteSpace::from_nodes(dim, metric, alpha, std::move(names), std::move(coords),
                                       std::move(mu), std::move(edges), std::move(table));
    s.mesh_step = step;
    return s;
}

} // namespace qcmod
