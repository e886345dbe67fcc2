#pragma once

#include "qcmod/chordal.hpp"
#include "qcmod/qmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcmod {

/// Desk-scale experiment around an isolated singularity: the map is evaluated
/// pointwise on punctured shells, distances are measured in the chordal metric
/// of the target plane.
struct SingularityExperiment {
    DiscreteMap map;
    Point zeta0{0.0, 0.0, 0.0};
    std::vector<double> approach_radii; // strictly decreasing, positive
    std::vector<ExtendedPt> targets;
    PlanarChordalParams chordal;
    int samples_per_shell = 4096;
    bool refine = true;          // golden-section polish around per-target best samples
    double extension_tol = 0.05; // finest-shell chordal diameter below this => extends

    void validate() const {
        if (approach_radii.empty())
            throw std::invalid_argument("experiment: approach radii must be nonempty");
        for (std::size_t i = 0; i < approach_radii.size(); ++i) {
            if (!(approach_radii[i] > 0.0))
                throw std::invalid_argument("experiment: radii must be positive");
            if (i > 0 && !(approach_radii[i] < approach_radii[i - 1]))
                throw std::invalid_argument("experiment: radii must be strictly decreasing");
        }
        if (samples_per_shell < 8) throw std::invalid_argument("experiment: too few shell samples");
    }
};

struct TargetApproach {
    ExtendedPt target;
    double best_distance = std::numeric_limits<double>::infinity();
    Point witness{0.0, 0.0, 0.0};
    double witness_radius = 0.0;
};

struct ClusterReport {
    std::vector<TargetApproach> per_target;
    double summary_max = 0.0; // max over targets of the best distance
    std::vector<std::vector<double>> shell_best; // [target][shell] best distance (plot data)
    std::size_t skipped_samples = 0;
};

namespace detail {

inline Point shell_point(const Point& center, double r, double theta) {
    return {center[0] + r * std::cos(theta), center[1] + r * std::sin(theta), 0.0};
}

/// Golden-section minimization of theta -> chordal(f(z(theta)), target) on [lo, hi].
inline std::pair<double, double> refine_theta(const SingularityExperiment& exp, double r,
                                              double lo, double hi, const ExtendedPt& target) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    auto eval = [&](double th) {
        try {
            auto img = exp.map.eval(shell_point(exp.zeta0, r, th));
            return chordal_distance(img, target, exp.chordal);
        } catch (const std::domain_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = eval(c), fd = eval(d);
    for (int it = 0; it < 80; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = eval(d);
        }
    }
    double th = 0.5 * (a + b);
    return {th, eval(th)};
}

} // namespace detail

/// Shell scan minimizing the chordal distance from f(x) to each target; every
/// shell is sampled uniformly in angle, then the best few shells per target get a
/// golden-section polish (still on-shell). Undefined samples are skipped.
inline ClusterReport cluster_density_scan(const SingularityExperiment& exp) {
    exp.validate();
    if (exp.targets.empty()) throw std::invalid_argument("cluster scan: no targets");
    const int N = exp.samples_per_shell;
    const std::size_t S = exp.approach_radii.size();
    const std::size_t T = exp.targets.size();

    ClusterReport rep;
    rep.per_target.resize(T);
    for (std::size_t t = 0; t < T; ++t) rep.per_target[t].target = exp.targets[t];
    rep.shell_best.assign(T, std::vector<double>(S, std::numeric_limits<double>::infinity()));
    std::vector<std::vector<double>> shell_best_theta(T, std::vector<double>(S, 0.0));

    std::vector<ExtendedPt> images(static_cast<std::size_t>(N));
    std::vector<char> valid(static_cast<std::size_t>(N));
    for (std::size_t s = 0; s < S; ++s) {
        double r = exp.approach_radii[s];
        for (int j = 0; j < N; ++j) {
            double th = 2.0 * M_PI * j / N;
            try {
                images[j] = exp.map.eval(detail::shell_point(exp.zeta0, r, th));
                valid[j] = 1;
            } catch (const std::domain_error&) {
                valid[j] = 0;
                ++rep.skipped_samples;
            }
        }
        for (std::size_t t = 0; t < T; ++t) {
            double best = std::numeric_limits<double>::infinity();
            int bestj = -1;
            for (int j = 0; j < N; ++j) {
                if (!valid[j]) continue;
                double h = chordal_distance(images[j], exp.targets[t], exp.chordal);
                if (h < best) {
                    best = h;
                    bestj = j;
                }
            }
            rep.shell_best[t][s] = best;
            shell_best_theta[t][s] = bestj >= 0 ? 2.0 * M_PI * bestj / N : 0.0;
            if (best < rep.per_target[t].best_distance) {
                rep.per_target[t].best_distance = best;
                rep.per_target[t].witness = detail::shell_point(exp.zeta0, r, shell_best_theta[t][s]);
                rep.per_target[t].witness_radius = r;
            }
        }
    }

    if (exp.refine) {
        const double window = 2.0 * M_PI / N;
        for (std::size_t t = 0; t < T; ++t) {
            // polish the few most promising shells for this target
            std::vector<std::size_t> order(S);
            for (std::size_t s = 0; s < S; ++s) order[s] = s;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return rep.shell_best[t][a] < rep.shell_best[t][b];
            });
            for (std::size_t k = 0; k < std::min<std::size_t>(6, S); ++k) {
                std::size_t s = order[k];
                double r = exp.approach_radii[s];
                double th0 = shell_best_theta[t][s];
                auto [th, dist] = detail::refine_theta(exp, r, th0 - window, th0 + window,
                                                       exp.targets[t]);
                if (dist < rep.shell_best[t][s]) rep.shell_best[t][s] = dist;
                if (dist < rep.per_target[t].best_distance) {
                    rep.per_target[t].best_distance = dist;
                    rep.per_target[t].witness = detail::shell_point(exp.zeta0, r, th);
                    rep.per_target[t].witness_radius = r;
                }
            }
        }
    }

    for (const auto& ta : rep.per_target) rep.summary_max = std::max(rep.summary_max, ta.best_distance);
    return rep;
}

// --- continuous extension probe -----------------------------------------------------

struct ExtensionReport {
    bool extends = false;
    ExtendedPt limit;                    // chordal 1-center of the finest shell image
    std::vector<double> radii;
    std::vector<double> oscillations;    // chordal diameter of f(shell) per radius
    std::pair<ExtendedPt, ExtendedPt> divergence_witness; // finest-shell diameter pair
    double loglog_slope = 0.0;           // fitted slope of log(diam) vs log(radius)
};

/// Chordal diameter of the image of each approach shell; a shrinking sequence
/// falling below extension_tol certifies a numeric continuous extension, whose
/// value is represented by the finest shell's chordal 1-center.
inline ExtensionReport extension_check(const SingularityExperiment& exp) {
    exp.validate();
    const int N = exp.samples_per_shell;
    ExtensionReport rep;
    std::vector<ExtendedPt> finest;
    for (double r : exp.approach_radii) {
        std::vector<ExtendedPt> img;
        img.reserve(static_cast<std::size_t>(N));
        for (int j = 0; j < N; ++j) {
            double th = 2.0 * M_PI * j / N;
            try {
                img.push_back(exp.map.eval(detail::shell_point(exp.zeta0, r, th)));
            } catch (const std::domain_error&) {
            }
        }
        if (img.empty()) continue;
        double diam = 0.0;
        std::pair<ExtendedPt, ExtendedPt> wit{img.front(), img.front()};
        for (std::size_t a = 0; a < img.size(); ++a)
            for (std::size_t b = a + 1; b < img.size(); ++b) {
                double h = chordal_distance(img[a], img[b], exp.chordal);
                if (h > diam) {
                    diam = h;
                    wit = {img[a], img[b]};
                }
            }
        rep.radii.push_back(r);
        rep.oscillations.push_back(diam);
        rep.divergence_witness = wit;
        finest = std::move(img);
    }
    if (rep.oscillations.empty()) throw std::invalid_argument("extension check: no evaluable shell");
    rep.extends = rep.oscillations.back() < exp.extension_tol;

    // chordal 1-center of the finest shell image
    double best = std::numeric_limits<double>::infinity();
    for (const auto& cand : finest) {
        double worst = 0.0;
        for (const auto& other : finest)
            worst = std::max(worst, chordal_distance(cand, other, exp.chordal));
        if (worst < best) {
            best = worst;
            rep.limit = cand;
        }
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < rep.radii.size(); ++i) {
        if (!(rep.oscillations[i] > 1e-300)) continue;
        double x = std::log(rep.radii[i]), y = std::log(rep.oscillations[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n >= 2) {
        double denom = n * sxx - sx * sx;
        if (std::abs(denom) > 1e-300) rep.loglog_slope = (n * sxy - sx * sy) / denom;
    }
    return rep;
}

// --- omitted continuum probe -----------------------------------------------------------

struct OmittedContinuumReport {
    bool omitted = true;           // every sample keeps chordal distance >= margin from K
    double closest_approach = std::numeric_limits<double>::infinity();
    Point witness{0.0, 0.0, 0.0};  // source point achieving the closest approach
};

/// True iff every sampled image point stays at chordal distance >= margin from the
/// target-space continuum K (given as a sampled point set of positive chordal diameter).
inline OmittedContinuumReport omitted_continuum_check(const SingularityExperiment& exp,
                                                      const std::vector<Point>& K, double margin) {
    exp.validate();
    if (K.size() < 2)
        throw std::invalid_argument("omitted continuum check: K must be a nondegenerate continuum");
    double kdiam = 0.0;
    for (std::size_t a = 0; a < K.size(); ++a)
        for (std::size_t b = a + 1; b < K.size(); ++b)
            kdiam = std::max(kdiam, chordal_distance(ExtendedPt::finite(K[a]),
                                                     ExtendedPt::finite(K[b]), exp.chordal));
    if (!(kdiam > 0.0))
        throw std::invalid_argument("omitted continuum check: K must be a nondegenerate continuum");

    OmittedContinuumReport rep;
    const int N = exp.samples_per_shell;
    for (double r : exp.approach_radii)
        for (int j = 0; j < N; ++j) {
            double th = 2.0 * M_PI * j / N;
            Point z = detail::shell_point(exp.zeta0, r, th);
            ExtendedPt img;
            try {
                img = exp.map.eval(z);
            } catch (const std::domain_error&) {
                continue;
            }
            for (const auto& kp : K) {
                double h = chordal_distance(img, ExtendedPt::finite(kp), exp.chordal);
                if (h < rep.closest_approach) {
                    rep.closest_approach = h;
                    rep.witness = z;
                }
            }
        }
    rep.omitted = rep.closest_approach >= margin;
    return rep;
}

} // namespace qcmod
