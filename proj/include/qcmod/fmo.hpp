#pragma once

#include "qcmod/space.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcmod {

/// Nonnegative node function Q (the quasiconformality characteristic candidate).
using ScalarField = std::vector<double>;

inline ScalarField make_constant_field(const DiscreteSpace& space, double c) {
    if (!(c >= 0.0)) throw std::invalid_argument("scalar field: constant must be >= 0");
    return ScalarField(space.size(), c);
}

/// Q(x) = log(1/|x - center|); valid while nodes stay inside the unit ball around center.
inline ScalarField make_log_reciprocal_field(const DiscreteSpace& space, const Point& center) {
    ScalarField f(space.size());
    for (NodeId v = 0; v < space.size(); ++v) {
        double r = space.distance_point(center, v);
        if (!(r > 0.0)) throw std::invalid_argument("log-reciprocal field: node at the center");
        f[v] = std::log(1.0 / r);
        if (f[v] < 0.0)
            throw std::invalid_argument("log-reciprocal field: negative value at " + space.names[v] +
                                        " (domain exceeds the unit ball)");
    }
    return f;
}

/// Q(x) = |x - center|^s (s = -1 gives the classic non-FMO witness 1/|x|).
inline ScalarField make_power_field(const DiscreteSpace& space, const Point& center, double s) {
    ScalarField f(space.size());
    for (NodeId v = 0; v < space.size(); ++v) {
        double r = space.distance_point(center, v);
        if (!(r > 0.0) && s < 0.0)
            throw std::invalid_argument("power field: node at the center with negative exponent");
        f[v] = std::pow(r, s);
    }
    return f;
}

// --- psi profiles and their integrals I(eps, eps2) ----------------------------------

namespace detail {

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

inline double quadrature(const std::function<double(double)>& f, double a, double b,
                         double tol = 1e-10) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

} // namespace detail

/// Weight profile psi on (0, epsilon0): a named analytic shape or a sampled table.
/// `arg_scale` composes t -> arg_scale * t (used to carry the log shape onto rings
/// with r2 >= 1); closed forms absorb the scaling.
struct PsiProfile {
    enum class Kind { constant, log_reciprocal, power, table };
    Kind kind = Kind::constant;
    double value = 1.0;     // constant level or power exponent (psi(t) = t^-value)
    double arg_scale = 1.0;
    double epsilon0 = 1.0;
    std::vector<std::pair<double, double>> table; // increasing t, psi(t) samples

    static PsiProfile constant(double c, double eps0) {
        if (!(c >= 0.0)) throw std::invalid_argument("psi profile: constant must be >= 0");
        if (!(eps0 > 0.0)) throw std::invalid_argument("psi profile: epsilon0 must be positive");
        PsiProfile p;
        p.kind = Kind::constant;
        p.value = c;
        p.epsilon0 = eps0;
        return p;
    }

    /// psi(t) = 1/(st log(1/(st))) with s = arg_scale; requires s*eps0 < 1.
    static PsiProfile log_reciprocal(double eps0, double scale = 1.0) {
        if (!(eps0 > 0.0) || !(scale > 0.0) || !(scale * eps0 < 1.0))
            throw std::invalid_argument(
                "psi profile: log-reciprocal needs 0 < arg_scale * epsilon0 < 1");
        PsiProfile p;
        p.kind = Kind::log_reciprocal;
        p.arg_scale = scale;
        p.epsilon0 = eps0;
        return p;
    }

    /// psi(t) = t^(-s).
    static PsiProfile power(double s, double eps0) {
        if (!(eps0 > 0.0)) throw std::invalid_argument("psi profile: epsilon0 must be positive");
        PsiProfile p;
        p.kind = Kind::power;
        p.value = s;
        p.epsilon0 = eps0;
        return p;
    }

    static PsiProfile sampled(std::vector<std::pair<double, double>> knots, double eps0) {
        if (knots.size() < 2) throw std::invalid_argument("psi profile: table needs >= 2 knots");
        for (std::size_t i = 0; i + 1 < knots.size(); ++i)
            if (!(knots[i].first < knots[i + 1].first))
                throw std::invalid_argument("psi profile: table knots must increase");
        PsiProfile p;
        p.kind = Kind::table;
        p.epsilon0 = eps0;
        p.table = std::move(knots);
        return p;
    }

    double operator()(double t) const {
        switch (kind) {
        case Kind::constant: return value;
        case Kind::log_reciprocal: {
            double u = arg_scale * t;
            if (!(u > 0.0) || !(u < 1.0)) return std::numeric_limits<double>::infinity();
            return 1.0 / (u * std::log(1.0 / u));
        }
        case Kind::power: return std::pow(t, -value);
        case Kind::table: {
            if (t <= table.front().first) return table.front().second;
            if (t >= table.back().first) return table.back().second;
            for (std::size_t i = 0; i + 1 < table.size(); ++i)
                if (t <= table[i + 1].first) {
                    double w = (t - table[i].first) / (table[i + 1].first - table[i].first);
                    return (1.0 - w) * table[i].second + w * table[i + 1].second;
                }
            return table.back().second;
        }
        }
        return 0.0;
    }
};

/// I(eps, eps2) = integral of psi over (eps, eps2): closed forms where registered,
/// adaptive quadrature otherwise. Divergent integrands yield +inf (tagged at the
/// record layer; downstream operations treat nonfinite I as an error).
inline double psi_integral(const PsiProfile& profile, double eps, double eps2) {
    if (!(eps > 0.0) || !(eps < eps2))
        throw std::invalid_argument("psi_integral requires 0 < eps < eps2");
    if (eps2 > profile.epsilon0 * (1.0 + 1e-12))
        throw std::invalid_argument("psi_integral: eps2 exceeds the profile domain (0, epsilon0]");
    switch (profile.kind) {
    case PsiProfile::Kind::constant: return profile.value * (eps2 - eps);
    case PsiProfile::Kind::log_reciprocal: {
        double a = profile.arg_scale * eps, b = profile.arg_scale * eps2;
        // antiderivative of 1/(st log(1/(st))) in t is -(1/s) log log(1/(st)) * s = -log log(1/u)
        return (std::log(std::log(1.0 / a)) - std::log(std::log(1.0 / b))) / profile.arg_scale;
    }
    case PsiProfile::Kind::power: {
        double s = profile.value;
        if (s == 1.0) return std::log(eps2 / eps);
        return (std::pow(eps2, 1.0 - s) - std::pow(eps, 1.0 - s)) / (1.0 - s);
    }
    case PsiProfile::Kind::table: {
        double v = detail::quadrature([&](double t) { return profile(t); }, eps, eps2);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    }
    }
    return 0.0;
}

/// Normalized eta(t) = psi(t)/I(r1,r2) on (r1,r2) and 0 outside; integrates to 1.
struct EtaProfile {
    PsiProfile psi;
    double r1 = 0.0, r2 = 0.0;
    double integral = 0.0;

    double operator()(double t) const {
        if (t <= r1 || t >= r2) return 0.0;
        return psi(t) / integral;
    }
};

inline EtaProfile eta_normalized(const PsiProfile& profile, double r1, double r2) {
    if (!(r1 > 0.0) || !(r1 < r2))
        throw std::invalid_argument("eta_normalized requires 0 < r1 < r2");
    double I = psi_integral(profile, r1, r2);
    if (!(I > 0.0) || !std::isfinite(I))
        throw std::invalid_argument(
            "eta_normalized: I(r1,r2) must be positive and finite (psi positivity requirement)");
    return EtaProfile{profile, r1, r2, I};
}

// --- mean oscillation ----------------------------------------------------------------

struct OscillationValue {
    double mean = 0.0;
    double oscillation = 0.0;
};

/// Measure-weighted ball average of Q and the mean absolute deviation from it.
inline OscillationValue mean_oscillation(const ScalarField& Q, const Point& x0, double eps,
                                         const DiscreteSpace& space) {
    if (Q.size() != space.size()) throw std::invalid_argument("scalar field length mismatch");
    auto ball = space.ball_nodes(x0, eps);
    if (ball.empty())
        throw std::invalid_argument("mean oscillation: empty ball at radius " + std::to_string(eps));
    double msum = 0.0, qsum = 0.0;
    for (NodeId v : ball) {
        if (!std::isfinite(Q[v]))
            throw std::invalid_argument("mean oscillation: Q not integrable on the ball of radius " +
                                        std::to_string(eps));
        msum += space.mu[v];
        qsum += Q[v] * space.mu[v];
    }
    OscillationValue out;
    out.mean = qsum / msum;
    double osum = 0.0;
    for (NodeId v : ball) osum += std::abs(Q[v] - out.mean) * space.mu[v];
    out.oscillation = osum / msum;
    return out;
}

enum class FMOVerdict { fmo_consistent, diverging };

struct FMOReport {
    std::vector<double> radii; // strictly decreasing
    std::vector<double> means;
    std::vector<double> oscillations;
    std::vector<double> consecutive_ratios; // osc(r_{k+1}) / osc(r_k), shrinking radii
    double limsup_estimate = 0.0;           // max oscillation over the smallest half of radii
    double divergence_rate = 0.0;           // growth exponent of oscillation as radius shrinks
    FMOVerdict verdict = FMOVerdict::fmo_consistent;
};

/// Dyadic-radius finite-mean-oscillation probe. The verdict is a finite-resolution
/// judgment: FMO-consistent when the oscillation sequence shows no monotone
/// divergence over the smallest half of the probed radii (log-log growth rate < 0.1).
inline FMOReport fmo_classify(const ScalarField& Q, const Point& x0,
                              const std::vector<double>& radii, const DiscreteSpace& space) {
    if (radii.size() < 2) throw std::invalid_argument("fmo_classify: need at least two radii");
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i] > radii[i + 1]) || !(radii[i + 1] > 0.0))
            throw std::invalid_argument("fmo_classify: radii must be strictly decreasing and positive");
    FMOReport rep;
    rep.radii = radii;
    for (double r : radii) {
        auto mv = mean_oscillation(Q, x0, r, space);
        rep.means.push_back(mv.mean);
        rep.oscillations.push_back(mv.oscillation);
    }
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        rep.consecutive_ratios.push_back(
            rep.oscillations[i] > 0.0 ? rep.oscillations[i + 1] / rep.oscillations[i] : 1.0);

    const std::size_t half = radii.size() / 2;
    rep.limsup_estimate = 0.0;
    for (std::size_t i = half; i < radii.size(); ++i)
        rep.limsup_estimate = std::max(rep.limsup_estimate, rep.oscillations[i]);

    // least-squares slope of log(osc) vs log(radius) over the smallest half
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = half; i < radii.size(); ++i) {
        if (!(rep.oscillations[i] > 1e-300)) continue;
        double x = std::log(radii[i]), y = std::log(rep.oscillations[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    double slope = 0.0;
    if (n >= 2) {
        double denom = n * sxx - sx * sx;
        if (std::abs(denom) > 1e-300) slope = (n * sxy - sx * sy) / denom;
    }
    rep.divergence_rate = std::max(0.0, -slope);
    rep.verdict = rep.divergence_rate < 0.1 ? FMOVerdict::fmo_consistent : FMOVerdict::diverging;
    return rep;
}

// --- funnel machinery ------------------------------------------------------------------

/// Shell integral of Q psi^q(d(x,x0)) over eps < d < eps0, divided by I^q(eps, eps0).
inline double funnel_ratio(const ScalarField& Q, const PsiProfile& profile, double q,
                           const Point& x0, double eps, double eps0, const DiscreteSpace& space) {
    if (Q.size() != space.size()) throw std::invalid_argument("scalar field length mismatch");
    if (!(q >= 1.0)) throw std::invalid_argument("funnel_ratio requires q >= 1");
    double I = psi_integral(profile, eps, eps0);
    if (!(I > 0.0) || !std::isfinite(I))
        throw std::runtime_error("funnel_ratio: I(eps, eps0) must be positive and finite");
    double num = 0.0;
    for (NodeId v = 0; v < space.size(); ++v) {
        double d = space.distance_point(x0, v);
        if (d > eps && d < eps0) num += Q[v] * std::pow(profile(d), q) * space.mu[v];
    }
    return num / std::pow(I, q);
}

struct FunnelDecayReport {
    std::vector<double> eps;
    std::vector<double> ratios;
    double gamma_observed = 0.0; // doubling constant seen by the hypothesis probe
    bool decreasing_last_half = false;
    FMOReport fmo;
};

/// FMO => funnel probe with psi(t) = 1/(t log(1/t)): classifies Q at x0, checks the
/// ball-doubling hypothesis, then requires the funnel ratios to decrease over the
/// smallest half of the dyadic sequence.
inline FunnelDecayReport fmo_implies_funnel_check(const ScalarField& Q, const Point& x0,
                                                  const DiscreteSpace& space, double alpha,
                                                  double q, double eps0,
                                                  const std::vector<double>& eps_list) {
    if (eps_list.size() < 3)
        throw std::invalid_argument("fmo_implies_funnel_check: need at least three epsilons");
    FunnelDecayReport rep;
    rep.fmo = fmo_classify(Q, x0, eps_list, space);
    if (rep.fmo.verdict != FMOVerdict::fmo_consistent)
        throw std::invalid_argument(
            "precondition failed: Q does not classify FMO-consistent at x0");
    for (double r : eps_list) {
        auto ball = space.ball_nodes(x0, r);
        auto ball2 = space.ball_nodes(x0, 2.0 * r);
        double m = measure_of(space, ball);
        if (!(m > 0.0))
            throw std::invalid_argument("precondition failed: doubling hypothesis probe hit an empty ball");
        double weight = (alpha > 2.0 && r < 1.0) ? std::pow(std::log(1.0 / r), alpha - 2.0) : 1.0;
        rep.gamma_observed = std::max(rep.gamma_observed, measure_of(space, ball2) / (m * weight));
    }
    auto profile = PsiProfile::log_reciprocal(eps0);
    for (double e : eps_list) {
        if (!(e < eps0)) continue;
        rep.eps.push_back(e);
        rep.ratios.push_back(funnel_ratio(Q, profile, q, x0, e, eps0, space));
    }
    rep.decreasing_last_half = rep.ratios.size() >= 2;
    for (std::size_t i = rep.ratios.size() / 2; i + 1 < rep.ratios.size(); ++i)
        if (!(rep.ratios[i + 1] < rep.ratios[i])) rep.decreasing_last_half = false;
    return rep;
}

} // namespace qcmod
