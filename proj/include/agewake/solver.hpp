#pragma once

#include <algorithm>
#include <cassert>

#include "agewake/model.hpp"

// Near-optimal sleep rates for both energy regimes, with upper/lower bound
// certificates on the unknown optimum of the nonconvex peak-age problem.

namespace agewake {

enum class RegimeKind { energy_adequate, energy_scarce };

/// Energy regime: adequate when the total target efficiency reaches 1 (the
/// sources can keep the channel busy at all times), scarce otherwise.
struct Regime {
    RegimeKind kind = RegimeKind::energy_adequate;
    double total_efficiency = 0.0;  // sum of b_l
};

inline const char* to_string(RegimeKind k) {
    return k == RegimeKind::energy_adequate ? "energy_adequate" : "energy_scarce";
}

/// Closed-form solution. In both regimes r_l = min{b_l, beta* sqrt(w_l)} x*,
/// so broadcasting the two scalars (x*, beta*) lets every source recover its
/// own rate.
struct Solution {
    SleepRates rates;
    double x_star = 0.0;
    double beta_star = 0.0;
    Regime regime;
    std::optional<std::vector<double>> c_values;  // scarce regime only
};

/// Bracket around the optimum: lower <= opt <= objective(r*) <= upper.
struct BoundCertificate {
    double upper_bound = 0.0;
    double lower_bound = 0.0;
    double gap = 0.0;
    double gap_constant = 0.0;          // C1 (adequate) or C2 (scarce)
    double theoretical_gap_bound = 0.0; // 2 sqrt(eps) C1 or eps C2
};

struct SynchronizedOptimum {
    std::vector<double> access_probs;
    double value = 0.0;  // normalized weighted average peak age
};

namespace detail {

// The energy constraint is vacuous past b = 1, so the min computations may
// clamp without changing any result.
inline double clamped_efficiency(const SourceSpec& s) {
    return std::min(s.target_efficiency, 1.0);
}

inline double sum_efficiency(const std::vector<SourceSpec>& sources) {
    double s = 0.0;
    for (const auto& src : sources) s += src.target_efficiency;
    return s;
}

}  // namespace detail

inline Regime detect_regime(const std::vector<SourceSpec>& sources) {
    if (sources.empty()) throw std::invalid_argument("need at least one source");
    const double total = detail::sum_efficiency(sources);
    return {total >= 1.0 ? RegimeKind::energy_adequate : RegimeKind::energy_scarce, total};
}

/// Source-side step of the two-parameter broadcast: given (x*, beta*) from the
/// access point, a source computes its own rate from its local w and b.
inline double rate_from_broadcast(double weight, double target_efficiency, double x_star,
                                  double beta_star) {
    return std::min(std::min(target_efficiency, 1.0), beta_star * std::sqrt(weight)) * x_star;
}

/// Root of sum_i min{b_i, beta sqrt(w_i)} = 1 on [0, max_l b_l/sqrt(w_l)].
/// The left side is piecewise linear and nondecreasing, so bisection is exact
/// up to the bracket. At sum b_i = 1 every beta >= max_l(b_l/sqrt(w_l))
/// solves the equation; the bracket's upper end is returned as the
/// representative.
inline double solve_beta_adequate(const std::vector<SourceSpec>& sources) {
    if (sources.empty()) throw std::invalid_argument("need at least one source");
    const double total = detail::sum_efficiency(sources);
    if (total < 1.0)
        throw std::invalid_argument("beta equation has no solution when total efficiency < 1");

    double hi = 0.0;
    for (const auto& s : sources)
        hi = std::max(hi, detail::clamped_efficiency(s) / std::sqrt(s.weight));
    if (total == 1.0) return hi;

    const auto residual = [&](double beta) {
        double s = 0.0;
        for (const auto& src : sources)
            s += std::min(detail::clamped_efficiency(src), beta * std::sqrt(src.weight));
        return s - 1.0;
    };

    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (residual(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return std::abs(residual(lo)) < std::abs(residual(hi)) ? lo : hi;
}

/// Adequate-regime rates: x* = -1/2 + sqrt(1/4 + 1/eps), computed in the
/// cancellation-safe conjugate form. Rejects eps = 0, where x* diverges and
/// the asymptotic value applies instead.
inline Solution solve_adequate(const std::vector<SourceSpec>& sources, const NetworkSpec& net) {
    validate_sources(sources, net);
    const Regime regime = detect_regime(sources);
    if (regime.kind != RegimeKind::energy_adequate)
        throw std::invalid_argument("adequate-regime solve requires total efficiency >= 1");
    const double eps = net.sensing_ratio;
    if (eps == 0.0)
        throw std::invalid_argument(
            "sensing ratio 0 in the adequate regime: rates diverge, use asymptotic_optimum");

    const double inv_eps = 1.0 / eps;
    const double x_star = inv_eps / (0.5 + std::sqrt(0.25 + inv_eps));
    const double beta_star = solve_beta_adequate(sources);

    Solution sol;
    sol.x_star = x_star;
    sol.beta_star = beta_star;
    sol.regime = regime;
    sol.rates.provenance = RateProvenance::closed_form;
    sol.rates.values.reserve(sources.size());
    for (const auto& s : sources)
        sol.rates.values.push_back(rate_from_broadcast(s.weight, s.target_efficiency, x_star, beta_star));
    return sol;
}

/// Scarce-regime rates. Here beta* sqrt(w_l) >= 1 > b_l for every source, so
/// the broadcast min always resolves to b_l and r_l = b_l x*.
inline Solution solve_scarce(const std::vector<SourceSpec>& sources, const NetworkSpec& net) {
    validate_sources(sources, net);
    const Regime regime = detect_regime(sources);
    if (regime.kind != RegimeKind::energy_scarce)
        throw std::invalid_argument("scarce-regime solve requires total efficiency < 1");

    const double eps = net.sensing_ratio;
    const double sum_b = regime.total_efficiency;
    const double deficit = 1.0 - sum_b;  // > 0 here

    double beta_star = 0.0;
    for (const auto& s : sources) beta_star += 1.0 / std::sqrt(s.weight);

    std::vector<double> c(sources.size());
    double c_min = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < sources.size(); ++l) {
        const double b_l = sources[l].target_efficiency;
        const double u = b_l * deficit * deficit;
        const double v = 4.0 * b_l * b_l * deficit * deficit * (sum_b - b_l) * eps;
        c[l] = 2.0 * u / (u + std::sqrt(u * u + v));
        c_min = std::min(c_min, c[l]);
    }
    const double x_star = c_min / deficit;

    Solution sol;
    sol.x_star = x_star;
    sol.beta_star = beta_star;
    sol.regime = regime;
    sol.c_values = std::move(c);
    sol.rates.provenance = RateProvenance::closed_form;
    sol.rates.values.reserve(sources.size());
    for (const auto& s : sources) {
        assert(beta_star * std::sqrt(s.weight) >= s.target_efficiency * (1.0 - 1e-12));
        sol.rates.values.push_back(s.target_efficiency * x_star);
    }
    return sol;
}

/// Regime dispatch (the access-point side of the broadcast algorithm).
inline Solution solve_sleep_rates(const std::vector<SourceSpec>& sources, const NetworkSpec& net) {
    return detect_regime(sources).kind == RegimeKind::energy_adequate ? solve_adequate(sources, net)
                                                                      : solve_scarce(sources, net);
}

inline BoundCertificate bounds_adequate(const std::vector<SourceSpec>& sources,
                                        const NetworkSpec& net, const Solution& solution) {
    if (solution.regime.kind != RegimeKind::energy_adequate)
        throw std::invalid_argument("adequate-regime bounds require an adequate-regime solution");
    validate_sources(sources, net);

    const double eps = net.sensing_ratio;
    const double x_star = solution.x_star;
    const double inflation = std::exp(x_star * eps) * (1.0 + 1.0 / x_star);

    BoundCertificate cert;
    for (const auto& s : sources) {
        const double m = std::min(detail::clamped_efficiency(s),
                                  solution.beta_star * std::sqrt(s.weight));
        cert.upper_bound += s.weight * inflation / m + s.weight;
        cert.lower_bound += s.weight / m + s.weight;
        cert.gap_constant += s.weight / m;  // C1
    }
    cert.gap = cert.upper_bound - cert.lower_bound;
    cert.theoretical_gap_bound = 2.0 * std::sqrt(eps) * cert.gap_constant;
    return cert;
}

inline BoundCertificate bounds_scarce(const std::vector<SourceSpec>& sources,
                                      const NetworkSpec& net, const Solution& solution) {
    if (solution.regime.kind != RegimeKind::energy_scarce)
        throw std::invalid_argument("scarce-regime bounds require a scarce-regime solution");
    validate_sources(sources, net);

    const double eps = net.sensing_ratio;
    const double sum_b = solution.regime.total_efficiency;
    const double x_star = solution.x_star;

    double b_min = std::numeric_limits<double>::infinity();
    for (const auto& s : sources) b_min = std::min(b_min, s.target_efficiency);

    const double upper_factor = std::exp(sum_b * x_star * eps) * (1.0 / x_star + sum_b);
    const double lower_factor = std::exp(-sum_b / (1.0 - sum_b) * eps);

    BoundCertificate cert;
    for (const auto& s : sources) {
        const double wb = s.weight / s.target_efficiency;
        cert.upper_bound += wb * upper_factor + s.weight;
        cert.lower_bound += wb * lower_factor + s.weight;
        cert.gap_constant += wb / (1.0 - sum_b) * (3.0 * sum_b - b_min);  // C2
    }
    cert.gap = cert.upper_bound - cert.lower_bound;
    cert.theoretical_gap_bound = eps * cert.gap_constant;
    return cert;
}

inline BoundCertificate certify(const std::vector<SourceSpec>& sources, const NetworkSpec& net,
                                const Solution& solution) {
    return solution.regime.kind == RegimeKind::energy_adequate
               ? bounds_adequate(sources, net, solution)
               : bounds_scarce(sources, net, solution);
}

/// Limit of the optimal value as the sensing ratio goes to zero. Both regime
/// formulas coincide on the boundary.
inline double asymptotic_optimum(const std::vector<SourceSpec>& sources) {
    const Regime regime = detect_regime(sources);
    double value = 0.0;
    if (regime.kind == RegimeKind::energy_adequate) {
        const double beta_star = solve_beta_adequate(sources);
        for (const auto& s : sources) {
            const double m = std::min(detail::clamped_efficiency(s), beta_star * std::sqrt(s.weight));
            value += s.weight / m + s.weight;
        }
    } else {
        for (const auto& s : sources) value += s.weight / s.target_efficiency + s.weight;
    }
    return value;
}

/// Optimal collision-free scheduler that grants access i.i.d. with
/// probabilities a_l = min{b_l, beta* sqrt(w_l)}. Its value equals the
/// asymptotic optimum of the sleep-wake problem.
inline SynchronizedOptimum synchronized_optimum(const std::vector<SourceSpec>& sources) {
    const Regime regime = detect_regime(sources);
    if (regime.kind != RegimeKind::energy_adequate)
        throw std::invalid_argument("synchronized optimum requires total efficiency >= 1");
    const double beta_star = solve_beta_adequate(sources);

    SynchronizedOptimum out;
    out.access_probs.reserve(sources.size());
    for (const auto& s : sources) {
        const double a = std::min(detail::clamped_efficiency(s), beta_star * std::sqrt(s.weight));
        out.access_probs.push_back(a);
        out.value += s.weight / a + s.weight;
    }
    return out;
}

/// Baseline with one common rate k for all sources: the largest k that keeps
/// every source within its energy budget. When no constraint ever binds, k is
/// capped at the adequate-regime x* so the baseline stays comparable.
inline SleepRates fixed_rate_baseline(const std::vector<SourceSpec>& sources,
                                      const NetworkSpec& net) {
    validate_sources(sources, net);
    constexpr double kMax = 1e6;
    const double eps = net.sensing_ratio;
    const int m = net.num_sources;

    double b_min = std::numeric_limits<double>::infinity();
    for (const auto& s : sources) b_min = std::min(b_min, s.target_efficiency);

    // All sources share the same busy fraction under a uniform rate.
    const auto sigma_uniform = [&](double k) {
        return detail::busy_fraction_term(k, m * k, eps);
    };

    double k;
    if (sigma_uniform(kMax) <= b_min) {
        // Constraint never binds on (0, kMax].
        double cap = kMax;
        if (eps > 0.0) {
            const double inv_eps = 1.0 / eps;
            cap = inv_eps / (0.5 + std::sqrt(0.25 + inv_eps));
        }
        k = std::min(cap, kMax);
    } else {
        double lo = 0.0, hi = kMax;
        if (!(sigma_uniform(lo) <= b_min))
            throw std::logic_error("fixed-rate bisection bracket invalid");
        for (int it = 0; it < 1200 && hi - lo > 0.0; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (sigma_uniform(mid) <= b_min)
                lo = mid;
            else
                hi = mid;
        }
        k = lo;  // feasible side of the bracket
        if (!(k > 0.0)) throw std::logic_error("fixed-rate bisection failed to find k > 0");
    }
    return {std::vector<double>(sources.size(), k), RateProvenance::fixed_rate};
}

}  // namespace agewake
