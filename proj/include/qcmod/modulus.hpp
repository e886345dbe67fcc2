#pragma once

#include "qcmod/chordal.hpp"
#include "qcmod/family.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcmod {

struct SolverOptions {
    double tol = 1e-6;      // admissibility violation tolerance
    double kkt_tol = 1e-8;  // restricted-problem KKT residual
    int iter_cap_factor = 10;
    int newton_cap = 500;
    std::size_t separation_batch = 64; // violated paths admitted per separation round
    std::size_t bf_node_cap = 64;      // brute force refuses larger connecting instances
    std::size_t bf_path_cap = 2000000; // materialized constraint cap
    int bf_sweep_cap = 200000;
};

struct solver_error : std::runtime_error {
    double lower_bound;
    double upper_bound;
    solver_error(const std::string& what, double lo, double hi)
        : std::runtime_error(what), lower_bound(lo), upper_bound(hi) {}
};

/// Modulus value with its optimal density and the generated constraint set.
/// `infinite` is a tagged sentinel (adm Gamma empty); `value` then holds +inf
/// for comparisons but is never serialized as a float.
struct ModulusResult {
    double value = 0.0;
    bool infinite = false;
    Density density;
    std::vector<std::vector<NodeId>> active_paths;
    int iterations = 0;
    double certified_gap = 0.0;
    double kkt_residual = 0.0;
};

namespace detail {

using Row = std::vector<std::pair<NodeId, double>>; // sorted, coalesced coefficients

inline Row path_row(const std::vector<NodeId>& path, const DiscreteSpace& space) {
    std::map<NodeId, double> acc;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        NodeId u = path[i], v = path[i + 1];
        double sigma = -1.0;
        for (auto [w, s] : space.neighbors(u))
            if (w == v) {
                sigma = s;
                break;
            }
        if (sigma < 0.0) throw std::invalid_argument("constraint path is not edge-connected");
        acc[u] += 0.5 * sigma;
        acc[v] += 0.5 * sigma;
    }
    Row row(acc.begin(), acc.end());
    return row;
}

inline double rho_of_s(double s, double mu, double p) {
    if (s <= 0.0) return 0.0;
    return std::pow(s / (p * mu), 1.0 / (p - 1.0));
}

struct DualState {
    const DiscreteSpace* space = nullptr;
    double p = 2.0;
    std::vector<Row> rows;
    std::vector<double> lambda;
    std::vector<double> s;       // s = sum_g lambda_g c_g (dense)
    std::vector<NodeId> support; // union of row supports

    void rebuild_support() {
        std::vector<char> seen(space->size(), 0);
        support.clear();
        for (const auto& r : rows)
            for (auto [v, c] : r) {
                (void)c;
                if (!seen[v]) {
                    seen[v] = 1;
                    support.push_back(v);
                }
            }
        std::sort(support.begin(), support.end());
    }

    void refresh_s() {
        std::fill(s.begin(), s.end(), 0.0);
        for (std::size_t g = 0; g < rows.size(); ++g)
            if (lambda[g] != 0.0)
                for (auto [v, c] : rows[g]) s[v] += lambda[g] * c;
    }

    double rho(NodeId v) const { return rho_of_s(s[v], space->mu[v], p); }

    double length(std::size_t g) const {
        double l = 0.0;
        for (auto [v, c] : rows[g]) l += c * rho(v);
        return l;
    }

    double dual_value() const {
        double val = 0.0;
        for (double l : lambda) val += l;
        double energy = 0.0;
        for (NodeId v : support) {
            double r = rho(v);
            energy += space->mu[v] * std::pow(r, p);
        }
        return val - (p - 1.0) * energy;
    }

    double energy() const {
        double e = 0.0;
        for (NodeId v : support) {
            double r = rho(v);
            e += space->mu[v] * std::pow(r, p);
        }
        return e;
    }

    double kkt_residual() const {
        double r = 0.0;
        for (std::size_t g = 0; g < rows.size(); ++g) {
            double gap = 1.0 - length(g);
            r = std::max(r, lambda[g] > 0.0 ? std::abs(gap) : std::max(gap, 0.0));
        }
        return r;
    }

    /// 1D dual ascent on coordinate g: move lambda_g >= 0 toward length_g = 1.
    double coordinate_update(std::size_t g) {
        const Row& row = rows[g];
        double lam = lambda[g];
        auto phi = [&](double x) {
            double l = 0.0;
            for (auto [v, c] : row) l += c * rho_of_s(s[v] + (x - lam) * c, space->mu[v], p);
            return l;
        };
        double target;
        if (p == 2.0) {
            double q = 0.0, l0 = 0.0;
            for (auto [v, c] : row) {
                q += c * c / (2.0 * space->mu[v]);
                l0 += c * rho_of_s(s[v], space->mu[v], p);
            }
            target = q > 0.0 ? std::max(0.0, lam + (1.0 - l0) / q) : 0.0;
        } else {
            if (phi(0.0) >= 1.0) {
                target = 0.0;
            } else {
                double hi = std::max(lam, 1.0);
                int grow = 0;
                while (phi(hi) < 1.0 && grow++ < 200) hi *= 2.0;
                double lo = 0.0;
                for (int it = 0; it < 200; ++it) {
                    double mid = 0.5 * (lo + hi);
                    if (phi(mid) < 1.0)
                        lo = mid;
                    else
                        hi = mid;
                    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
                }
                target = 0.5 * (lo + hi);
            }
        }
        double delta = target - lam;
        if (delta != 0.0) {
            lambda[g] = target;
            for (auto [v, c] : row) s[v] += delta * c;
        }
        return std::abs(delta);
    }
};

/// Restricted dual solve: projected Newton with coordinate-ascent warm-up.
/// The Newton system uses a dense factorization for small working sets and
/// conjugate gradients (matrix-free products through the constraint rows) for
/// large ones.
inline void solve_restricted(DualState& st, double kkt_tol, int newton_cap) {
    const double p = st.p;
    const std::size_t k = st.rows.size();
    if (k == 0) return;

    for (int sweep = 0; sweep < 3; ++sweep)
        for (std::size_t g = 0; g < k; ++g) st.coordinate_update(g);

    std::vector<double> wnode(st.space->size(), 0.0);
    auto refresh_wnode = [&]() {
        for (NodeId v : st.support) {
            double sv = st.s[v];
            wnode[v] = sv > 0.0 ? st.rho(v) / ((p - 1.0) * sv) : 0.0;
        }
    };
    auto hess_apply = [&](const std::vector<int>& W, const Eigen::VectorXd& x) {
        // y = C_W diag(w) C_W^T x
        static thread_local std::vector<double> scratch;
        scratch.assign(st.space->size(), 0.0);
        for (std::size_t i = 0; i < W.size(); ++i)
            for (auto [v, c] : st.rows[W[i]]) scratch[v] += c * x(static_cast<int>(i));
        Eigen::VectorXd y = Eigen::VectorXd::Zero(W.size());
        for (std::size_t i = 0; i < W.size(); ++i) {
            double acc = 0.0;
            for (auto [v, c] : st.rows[W[i]]) acc += c * wnode[v] * scratch[v];
            y(static_cast<int>(i)) = acc + 1e-12 * x(static_cast<int>(i));
        }
        return y;
    };

    for (int it = 0; it < newton_cap; ++it) {
        std::vector<double> grad(k);
        for (std::size_t g = 0; g < k; ++g) grad[g] = 1.0 - st.length(g);
        double res = 0.0;
        for (std::size_t g = 0; g < k; ++g)
            res = std::max(res, st.lambda[g] > 0.0 ? std::abs(grad[g]) : std::max(grad[g], 0.0));
        if (res <= kkt_tol) return;

        std::vector<int> W;
        for (std::size_t g = 0; g < k; ++g)
            if (st.lambda[g] > 0.0 || grad[g] > 0.0) W.push_back(static_cast<int>(g));
        if (W.empty()) return;

        Eigen::VectorXd gW(W.size());
        for (std::size_t i = 0; i < W.size(); ++i) gW(static_cast<int>(i)) = grad[W[i]];
        refresh_wnode();

        Eigen::VectorXd dir;
        if (W.size() <= 160) {
            Eigen::MatrixXd H = Eigen::MatrixXd::Zero(W.size(), W.size());
            std::vector<double> scratch(st.space->size(), 0.0);
            for (std::size_t i = 0; i < W.size(); ++i) {
                for (auto [v, c] : st.rows[W[i]]) scratch[v] = c;
                for (std::size_t j = i; j < W.size(); ++j) {
                    double acc = 0.0;
                    for (auto [v, c] : st.rows[W[j]]) acc += c * wnode[v] * scratch[v];
                    H(static_cast<int>(i), static_cast<int>(j)) = acc;
                    H(static_cast<int>(j), static_cast<int>(i)) = acc;
                }
                for (auto [v, c] : st.rows[W[i]]) {
                    (void)c;
                    scratch[v] = 0.0;
                }
                H(static_cast<int>(i), static_cast<int>(i)) += 1e-12;
            }
            dir = H.ldlt().solve(gW);
        } else {
            // conjugate gradients on the working-set Newton system
            dir = Eigen::VectorXd::Zero(W.size());
            Eigen::VectorXd r = gW, z = r, Az;
            double rr = r.squaredNorm();
            double rr0 = rr;
            for (int cg = 0; cg < 200 && rr > std::max(1e-24, 1e-8 * rr0); ++cg) {
                Az = hess_apply(W, z);
                double za = z.dot(Az);
                if (!(za > 0.0)) break;
                double alpha = rr / za;
                dir += alpha * z;
                r -= alpha * Az;
                double rr_new = r.squaredNorm();
                z = r + (rr_new / rr) * z;
                rr = rr_new;
            }
        }
        double gd = gW.dot(dir);
        if (!(gd > 0.0)) {
            dir = gW; // gradient fallback
            gd = gW.squaredNorm();
        }

        double f0 = st.dual_value();
        std::vector<double> lam0 = st.lambda;
        bool accepted = false;
        for (double t = 1.0; t >= 1e-12; t *= 0.5) {
            for (std::size_t i = 0; i < W.size(); ++i)
                st.lambda[W[i]] = std::max(0.0, lam0[W[i]] + t * dir(static_cast<int>(i)));
            st.refresh_s();
            if (st.dual_value() >= f0 + 1e-4 * t * gd) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            st.lambda = lam0;
            st.refresh_s();
            double change = 0.0;
            for (std::size_t g = 0; g < k; ++g) change = std::max(change, st.coordinate_update(g));
            if (change <= 1e-16) return; // stalled at the achievable precision
        }
    }
}

} // namespace detail

/// p-modulus by constraint generation: solve the restricted convex program on an
/// active path set, separate with the rho-shortest family member, add it when
/// violated, stop when the minimum path length reaches 1 - tol.
inline ModulusResult compute_p_modulus(const FamilyOracle& oracle, double p,
                                       const SolverOptions& opts = {}) {
    if (!(p > 1.0))
        throw std::invalid_argument("compute_p_modulus requires p > 1 (p = 1 and p = inf are out of scope)");
    const DiscreteSpace& space = oracle.density_space();
    ModulusResult res;
    res.density.assign(space.size(), 0.0);
    if (oracle.family_empty()) return res; // rho = 0 is admissible

    detail::DualState st;
    st.space = &space;
    st.p = p;
    st.s.assign(space.size(), 0.0);
    std::vector<std::vector<NodeId>> active;
    std::vector<int> idle; // rounds a constraint spent slack and inactive

    const int cap = opts.iter_cap_factor * static_cast<int>(std::max<std::size_t>(space.size(), 8));
    double kkt_tol = opts.kkt_tol;
    for (int round = 1; round <= cap; ++round) {
        Density rho(space.size(), 0.0);
        for (NodeId v : st.support) rho[v] = st.rho(v);
        auto batch = oracle.separate(rho, 1.0 - opts.tol, opts.separation_batch);
        if (!batch.any_member) {
            res.iterations = round;
            return res; // no connecting member at all
        }
        for (const auto& pth : batch.violated)
            if (pth.size() < 2) {
                res.infinite = true;
                res.value = std::numeric_limits<double>::infinity();
                res.active_paths.push_back(pth);
                res.iterations = round;
                return res; // zero-length member: adm Gamma is empty
            }
        if (batch.min_length >= 1.0 - opts.tol) {
            res.value = st.energy();
            res.density = rho;
            res.certified_gap = std::max(0.0, 1.0 - batch.min_length);
            res.kkt_residual = st.kkt_residual();
            res.iterations = round;
            res.active_paths = active;
            return res;
        }

        bool added = false;
        for (const auto& pth : batch.violated) {
            bool duplicate = false;
            for (const auto& q : active)
                if (q == pth) {
                    duplicate = true;
                    break;
                }
            if (duplicate) continue;
            active.push_back(pth);
            st.rows.push_back(detail::path_row(pth, space));
            st.lambda.push_back(0.0);
            idle.push_back(0);
            added = true;
        }
        if (!added) {
            if (kkt_tol > 1e-14) {
                kkt_tol *= 1e-3; // tighten the inner solve and retry
            } else {
                double lower = st.energy();
                double upper = batch.min_length > 0.0
                                   ? lower / std::pow(batch.min_length, p)
                                   : std::numeric_limits<double>::infinity();
                throw solver_error("constraint generation stalled on repeated paths", lower, upper);
            }
        }
        st.rebuild_support();
        // loose inner solves while separation still finds deep violations
        double violation = std::max(0.0, 1.0 - batch.min_length);
        double inner_tol = std::max(kkt_tol, std::min(1e-3, 0.01 * violation));
        detail::solve_restricted(st, inner_tol, opts.newton_cap);

        // retire constraints that stayed slack and inactive for several rounds
        for (std::size_t g = 0; g < st.rows.size(); ++g)
            idle[g] = (st.lambda[g] == 0.0 && st.length(g) >= 1.0 + 10.0 * opts.tol) ? idle[g] + 1
                                                                                     : 0;
        bool drop = false;
        for (int i : idle) drop = drop || i >= 3;
        if (drop) {
            std::vector<detail::Row> rows;
            std::vector<double> lambda;
            std::vector<std::vector<NodeId>> kept;
            std::vector<int> kept_idle;
            for (std::size_t g = 0; g < st.rows.size(); ++g) {
                if (idle[g] >= 3) continue;
                rows.push_back(std::move(st.rows[g]));
                lambda.push_back(st.lambda[g]);
                kept.push_back(std::move(active[g]));
                kept_idle.push_back(idle[g]);
            }
            st.rows = std::move(rows);
            st.lambda = std::move(lambda);
            active = std::move(kept);
            idle = std::move(kept_idle);
            st.rebuild_support();
            st.refresh_s();
        }
    }
    double lower = st.energy();
    Density rho(space.size(), 0.0);
    for (NodeId v : st.support) rho[v] = st.rho(v);
    auto sep = oracle.min_path(rho);
    double upper = sep.found && sep.length > 0.0 ? lower / std::pow(sep.length, p)
                                                 : std::numeric_limits<double>::infinity();
    throw solver_error("constraint generation did not converge within the iteration cap", lower,
                       upper);
}

inline ModulusResult compute_p_modulus(const DiscreteSpace& space, const PathFamily& family,
                                       double p, const SolverOptions& opts = {}) {
    auto oracle = make_oracle(space, family);
    return compute_p_modulus(*oracle, p, opts);
}

/// Independent oracle: materialize every (dominating) constraint and run cyclic
/// dual coordinate ascent to the same KKT residual. Refuses instances above the
/// configured caps.
inline ModulusResult brute_force_modulus(const DiscreteSpace& space, const PathFamily& family,
                                         double p, const SolverOptions& opts = {}) {
    if (!(p > 1.0)) throw std::invalid_argument("brute_force_modulus requires p > 1");
    if (family.kind == PathFamily::Kind::connecting && space.size() > opts.bf_node_cap)
        throw thrown_cap_exceeded("brute force refuses connecting families above the node cap");
    auto oracle = make_oracle(space, family);
    ModulusResult res;
    res.density.assign(space.size(), 0.0);
    if (oracle->family_empty()) return res;
    auto paths = oracle->enumerate_paths(opts.bf_path_cap);

    for (const auto& pth : paths)
        if (pth.size() < 2) {
            res.infinite = true;
            res.value = std::numeric_limits<double>::infinity();
            res.active_paths.push_back(pth);
            return res;
        }

    detail::DualState st;
    st.space = &space;
    st.p = p;
    st.s.assign(space.size(), 0.0);
    st.rows.reserve(paths.size());
    for (const auto& pth : paths) st.rows.push_back(detail::path_row(pth, space));
    st.lambda.assign(paths.size(), 0.0);
    st.rebuild_support();

    int sweeps = 0;
    for (; sweeps < opts.bf_sweep_cap; ++sweeps) {
        for (std::size_t g = 0; g < st.rows.size(); ++g) st.coordinate_update(g);
        double res_kkt = st.kkt_residual();
        if (res_kkt <= opts.kkt_tol) break;
    }
    if (sweeps >= opts.bf_sweep_cap) {
        double lower = st.energy();
        throw solver_error("cyclic dual ascent did not reach the KKT tolerance", lower,
                           std::numeric_limits<double>::infinity());
    }
    res.value = st.energy();
    for (NodeId v : st.support) res.density[v] = st.rho(v);
    res.active_paths = paths;
    res.iterations = sweeps + 1;
    res.kkt_residual = st.kkt_residual();
    double minlen = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < st.rows.size(); ++g) minlen = std::min(minlen, st.length(g));
    res.certified_gap = std::max(0.0, 1.0 - minlen);
    return res;
}

/// Effective conductance between plates E (potential 1) and F (potential 0),
/// edge conductances g_e = (mu(u)+mu(v)) / (2 sigma(e)^2). For planar unit grids
/// this reduces to the classic unit-resistor network. Independent p=2 oracle.
inline double conductance_oracle(const DiscreteSpace& space, const std::vector<NodeId>& E,
                                 const std::vector<NodeId>& F) {
    if (E.empty() || F.empty()) throw std::invalid_argument("conductance oracle: empty plate");
    std::vector<char> inE(space.size(), 0), inF(space.size(), 0);
    for (NodeId v : E) inE[v] = 1;
    for (NodeId v : F) {
        if (inE[v]) throw std::invalid_argument("conductance oracle: plates must be disjoint");
        inF[v] = 1;
    }

    // reachability from E; current can only flow if some F node is reached
    std::vector<char> reach(space.size(), 0);
    {
        std::vector<NodeId> stack = E;
        for (NodeId v : E) reach[v] = 1;
        while (!stack.empty()) {
            NodeId v = stack.back();
            stack.pop_back();
            for (auto [w, s] : space.neighbors(v)) {
                (void)s;
                if (!reach[w]) {
                    reach[w] = 1;
                    stack.push_back(w);
                }
            }
        }
    }
    bool touched = false;
    for (NodeId v : F) touched = touched || reach[v];
    if (!touched) return 0.0;

    std::vector<int> unknown(space.size(), -1);
    int m = 0;
    for (NodeId v = 0; v < space.size(); ++v)
        if (reach[v] && !inE[v] && !inF[v]) unknown[v] = m++;

    auto cond = [&](const Edge& e) {
        return e.cond_w * 0.5 * (space.mu[e.u] + space.mu[e.v]) / (e.sigma * e.sigma);
    };

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (const auto& e : space.edges) {
        if (!reach[e.u] || !reach[e.v]) continue;
        double g = cond(e);
        int iu = unknown[e.u], iv = unknown[e.v];
        double bu = inE[e.u] ? 1.0 : 0.0;
        double bv = inE[e.v] ? 1.0 : 0.0;
        if (iu >= 0) trip.emplace_back(iu, iu, g);
        if (iv >= 0) trip.emplace_back(iv, iv, g);
        if (iu >= 0 && iv >= 0) {
            trip.emplace_back(iu, iv, -g);
            trip.emplace_back(iv, iu, -g);
        } else if (iu >= 0) {
            b(iu) += g * bv;
        } else if (iv >= 0) {
            b(iv) += g * bu;
        }
    }

    Eigen::VectorXd u;
    if (m > 0) {
        Eigen::SparseMatrix<double> L(m, m);
        L.setFromTriplets(trip.begin(), trip.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(L);
        if (chol.info() != Eigen::Success)
            throw std::runtime_error("conductance oracle: Laplacian factorization failed");
        u = chol.solve(b);
    }

    auto potential = [&](NodeId v) {
        if (inE[v]) return 1.0;
        if (inF[v]) return 0.0;
        int i = unknown[v];
        return i >= 0 ? u(i) : 0.0;
    };
    double energy = 0.0;
    for (const auto& e : space.edges) {
        if (!reach[e.u] || !reach[e.v]) continue;
        double du = potential(e.u) - potential(e.v);
        energy += cond(e) * du * du;
    }
    return energy;
}

// --- minorization ------------------------------------------------------------

struct MinorizationReport {
    ModulusResult m1, m2;
    bool holds = false;
};

namespace detail {

inline bool subpath_in_explicit(const std::vector<NodeId>& gamma,
                                const std::vector<std::vector<NodeId>>& members) {
    auto contains = [&](const std::vector<NodeId>& sub) {
        if (sub.size() > gamma.size()) return false;
        for (std::size_t off = 0; off + sub.size() <= gamma.size(); ++off) {
            bool fwd = true, rev = true;
            for (std::size_t i = 0; i < sub.size(); ++i) {
                if (gamma[off + i] != sub[i]) fwd = false;
                if (gamma[off + i] != sub[sub.size() - 1 - i]) rev = false;
            }
            if (fwd || rev) return true;
        }
        return false;
    };
    for (const auto& m : members)
        if (contains(m)) return true;
    return false;
}

inline bool subpath_in_connecting(const std::vector<NodeId>& gamma, const PathFamily& fam,
                                  std::size_t n) {
    std::vector<char> inE(n, 0), inF(n, 0), inG(n, 0);
    for (NodeId v : fam.E) inE[v] = 1;
    for (NodeId v : fam.F) inF[v] = 1;
    for (NodeId v : fam.G) inG[v] = 1;
    for (std::size_t a = 0; a < gamma.size(); ++a) {
        if (!inE[gamma[a]] && !inF[gamma[a]]) continue;
        for (std::size_t b = a; b < gamma.size(); ++b) {
            bool startE = inE[gamma[a]] && inF[gamma[b]];
            bool startF = inF[gamma[a]] && inE[gamma[b]]; // reversed traversal
            if (!startE && !startF) continue;
            bool interior_ok = true;
            for (std::size_t i = a + 1; i < b; ++i)
                if (!inG[gamma[i]]) {
                    interior_ok = false;
                    break;
                }
            if (interior_ok) return true;
        }
    }
    return false;
}

} // namespace detail

/// eq-style monotonicity: when every member of family1 has a subpath in family2,
/// M_p(Gamma1) <= M_p(Gamma2). The subpath hypothesis is checked structurally for
/// explicit families and certified by ring nesting for ring-built families.
inline MinorizationReport minorization_test(const DiscreteSpace& space, const PathFamily& fam1,
                                            const PathFamily& fam2, double p,
                                            const SolverOptions& opts = {}) {
    if (fam1.kind == PathFamily::Kind::explicit_paths) {
        for (const auto& g1 : fam1.paths) {
            bool ok = fam2.kind == PathFamily::Kind::explicit_paths
                          ? detail::subpath_in_explicit(g1, fam2.paths)
                          : detail::subpath_in_connecting(g1, fam2, space.size());
            if (!ok)
                throw std::invalid_argument(
                    "minorization precondition failed: a family1 path has no subpath in family2");
        }
    } else {
        if (fam2.kind != PathFamily::Kind::connecting || !fam1.ring || !fam2.ring)
            throw std::invalid_argument(
                "minorization precondition not established: connecting families require ring provenance");
        const auto& r1 = *fam1.ring;
        const auto& r2 = *fam2.ring;
        double half_edge = 0.5 * space.max_edge_length();
        bool nested = euclidean(r1.center, r2.center) <= 1e-12 && r2.r1 >= r1.r1 - 1e-12 &&
                      r2.r2 <= r1.r2 + 1e-12;
        bool shells_ok = fam1.shell_tol >= half_edge - 1e-12 && fam2.shell_tol >= half_edge - 1e-12;
        if (!nested || !shells_ok)
            throw std::invalid_argument(
                "minorization precondition not established: rings are not nested (or shells thinner than half the mesh step)");
    }
    MinorizationReport rep;
    rep.m1 = compute_p_modulus(space, fam1, p, opts);
    rep.m2 = compute_p_modulus(space, fam2, p, opts);
    if (rep.m2.infinite)
        rep.holds = true;
    else if (rep.m1.infinite)
        rep.holds = false;
    else
        rep.holds = rep.m1.value <= rep.m2.value + 2.0 * opts.tol;
    return rep;
}

// --- condenser capacity --------------------------------------------------------

struct Condenser {
    std::vector<NodeId> A; // open set
    std::vector<NodeId> C; // plate, C subset of A
};

/// cap_p(A, C): modulus of the family of paths from C to the inner node-boundary
/// of A staying in A (the finite stand-in for escaping every compact subset).
inline ModulusResult condenser_capacity(const DiscreteSpace& space, const Condenser& cond,
                                        double p, const SolverOptions& opts = {}) {
    if (cond.C.empty()) throw std::invalid_argument("condenser: C must be nonempty");
    std::vector<char> inA(space.size(), 0), inC(space.size(), 0);
    for (NodeId v : cond.A) inA[v] = 1;
    for (NodeId v : cond.C) {
        if (!inA[v]) throw std::invalid_argument("condenser: C must be contained in A");
        inC[v] = 1;
    }
    std::vector<NodeId> shell;
    for (NodeId v : cond.A) {
        bool boundary = false;
        for (auto [w, s] : space.neighbors(v)) {
            (void)s;
            if (!inA[w]) boundary = true;
        }
        if (boundary) shell.push_back(v);
    }
    ModulusResult res;
    res.density.assign(space.size(), 0.0);
    if (shell.empty()) return res; // A is the whole space: nothing to escape to
    for (NodeId v : shell)
        if (inC[v]) {
            res.infinite = true;
            res.value = std::numeric_limits<double>::infinity();
            return res; // zero-length connections
        }
    return compute_p_modulus(space, PathFamily::connecting(cond.C, shell, cond.A), p, opts);
}

// --- structural floor checks -----------------------------------------------------

inline double set_diameter(const DiscreteSpace& space, const std::vector<NodeId>& set) {
    double d = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t j = i + 1; j < set.size(); ++j)
            d = std::max(d, space.distance(set[i], set[j]));
    return d;
}

struct Pr2Report {
    double observed = 0.0;
    double bound = 0.0;   // min{diam E, diam F} / R^(1+p-alpha)
    double constant = 0.0; // bound / observed (empirical C)
    ModulusResult result;
};

/// Modulus floor for two continua in a ball of radius R: reports the observed
/// M_p(Gamma(E,F,X)) against the structural quantity min{diam E, diam F}/R^(1+p-alpha).
inline Pr2Report pr2_floor(const DiscreteSpace& space, const std::vector<NodeId>& E,
                           const std::vector<NodeId>& F, double R, double p, double alpha,
                           const SolverOptions& opts = {}) {
    if (!(alpha - 1.0 < p && p <= alpha))
        throw std::invalid_argument("pr2_floor requires alpha-1 < p <= alpha");
    if (!subset_connected(space, E)) throw std::invalid_argument("pr2_floor: E is not connected");
    if (!subset_connected(space, F)) throw std::invalid_argument("pr2_floor: F is not connected");
    std::vector<char> inE(space.size(), 0);
    for (NodeId v : E) inE[v] = 1;
    for (NodeId v : F)
        if (inE[v])
            throw std::invalid_argument("pr2_floor: E and F must be disjoint (capacity-style separation)");

    std::vector<NodeId> all(space.size());
    for (NodeId v = 0; v < space.size(); ++v) all[v] = v;
    Pr2Report rep;
    rep.result = compute_p_modulus(space, PathFamily::connecting(E, F, all), p, opts);
    rep.observed = rep.result.value;
    rep.bound = std::min(set_diameter(space, E), set_diameter(space, F)) /
                std::pow(R, 1.0 + p - alpha);
    if (!(rep.observed > 0.0)) throw std::runtime_error("pr2_floor: observed modulus is not positive");
    rep.constant = rep.bound / rep.observed;
    return rep;
}

struct CapacityFloorReport {
    std::vector<double> capacities;      // per accepted trial
    std::vector<std::size_t> skipped;    // trial indices that violated preconditions
    std::vector<std::string> notices;
    double delta = 0.0;                  // empirical floor: min over trials
    bool all_positive = false;
};

/// Capacity floor battery: every continuum C of chordal diameter >= a away from F
/// must have cap_p(X \ F, C) above a common positive delta.
inline CapacityFloorReport capacity_floor_check(const DiscreteSpace& space,
                                                const std::vector<NodeId>& F,
                                                const ChordalParams& params, double a, double p,
                                                const std::vector<std::vector<NodeId>>& trials,
                                                const SolverOptions& opts = {}) {
    params.validate();
    std::vector<char> inF(space.size(), 0);
    for (NodeId v : F) inF[v] = 1;
    std::vector<NodeId> complementF;
    for (NodeId v = 0; v < space.size(); ++v)
        if (!inF[v]) complementF.push_back(v);

    CapacityFloorReport rep;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& C = trials[i];
        std::string why;
        if (C.empty())
            why = "empty trial";
        else if (!subset_connected(space, C))
            why = "trial is not connected";
        else {
            bool disjoint = true;
            for (NodeId v : C)
                if (inF[v]) disjoint = false;
            if (!disjoint)
                why = "trial intersects F";
            else if (chordal_diameter(C, params, space).value < a)
                why = "trial chordal diameter below a";
        }
        if (!why.empty()) {
            rep.skipped.push_back(i);
            rep.notices.push_back("trial " + std::to_string(i) + " skipped: " + why);
            continue;
        }
        auto cap = condenser_capacity(space, Condenser{complementF, C}, p, opts);
        rep.capacities.push_back(cap.infinite ? std::numeric_limits<double>::infinity()
                                              : cap.value);
    }
    if (!rep.capacities.empty()) {
        rep.delta = *std::min_element(rep.capacities.begin(), rep.capacities.end());
        rep.all_positive = rep.delta > 0.0;
    }
    return rep;
}

} // namespace qcmod
