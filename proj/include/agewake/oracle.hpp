#pragma once

#include "agewake/solver.hpp"

// Independent brute-force optimizer for small source counts. Exhaustive
// log-spaced grid anchored at the closed-form solution, followed by
// per-coordinate golden-section refinement. Test fixture, not a product
// feature.

namespace agewake {

struct GridSpec {
    int points_per_axis = 0;      // 0: 60 for M <= 2, 30 for M = 3
    double lower_factor = 1e-3;   // box is [lower_factor x*, upper_factor x*]
    double upper_factor = 10.0;
    int refine_sweeps = 3;
    double refine_tol = 1e-8;     // relative, per coordinate
};

struct OracleResult {
    SleepRates best_rates;
    double best_value = 0.0;
    double grid_resolution = 0.0;  // multiplicative step between adjacent grid points
    bool refined = false;
    std::vector<double> sweep_values;  // best value after each refinement sweep
};

namespace detail {

inline constexpr double kOracleFeasTol = 1e-10;

inline bool oracle_feasible(std::span<const double> rates, std::span<const double> b, double eps) {
    const double sum_r = sum_rates(rates);
    for (std::size_t l = 0; l < rates.size(); ++l)
        if (busy_fraction_term(rates[l], sum_r, eps) > b[l] + kOracleFeasTol) return false;
    return true;
}

}  // namespace detail

inline OracleResult brute_force_optimize(const std::vector<SourceSpec>& sources,
                                         const NetworkSpec& net, const GridSpec& grid = {}) {
    validate_sources(sources, net);
    const int m = net.num_sources;
    if (m > 3) throw std::invalid_argument("brute-force oracle limited to M <= 3");
    const double eps = net.sensing_ratio;

    std::vector<double> weights(m), budgets(m);
    for (int l = 0; l < m; ++l) {
        weights[l] = sources[l].weight;
        budgets[l] = sources[l].target_efficiency;
    }

    // Closed-form solution as the search anchor. At eps = 0 the adequate
    // regime has no finite x*; a fixed large stand-in keeps the box usable
    // (the optimum then sits at the box edge and improves as the box grows).
    double x_anchor;
    std::vector<double> r_anchor(m);
    if (eps == 0.0 && detect_regime(sources).kind == RegimeKind::energy_adequate) {
        x_anchor = 100.0;
        const double beta = solve_beta_adequate(sources);
        for (int l = 0; l < m; ++l)
            r_anchor[l] = rate_from_broadcast(weights[l], budgets[l], x_anchor, beta);
    } else {
        const Solution sol = solve_sleep_rates(sources, net);
        x_anchor = sol.x_star;
        r_anchor = sol.rates.values;
    }

    const int n = grid.points_per_axis > 0 ? grid.points_per_axis : (m <= 2 ? 60 : 30);
    if (n < 2) throw std::invalid_argument("grid needs at least two points per axis");

    // Per-coordinate log-spaced grid over the anchor box, widened if needed so
    // the closed-form rate itself always lies inside; the anchor rate is also
    // inserted as an explicit grid point, so the grid is never fully
    // infeasible.
    std::vector<std::vector<double>> axes(m);
    std::vector<double> lo(m), hi(m);
    for (int j = 0; j < m; ++j) {
        lo[j] = std::min(grid.lower_factor * x_anchor, 0.9 * r_anchor[j]);
        hi[j] = std::max(grid.upper_factor * x_anchor, 1.1 * r_anchor[j]);
        const double ratio = std::pow(hi[j] / lo[j], 1.0 / (n - 1));
        auto& axis = axes[j];
        axis.reserve(n + 1);
        for (int i = 0; i < n; ++i) axis.push_back(lo[j] * std::pow(ratio, i));
        axis.push_back(r_anchor[j]);
        std::sort(axis.begin(), axis.end());
    }
    const double step = std::pow(hi[0] / lo[0], 1.0 / (n - 1));

    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> best(m), point(m);
    std::vector<std::size_t> idx(m, 0);
    for (;;) {
        for (int j = 0; j < m; ++j) point[j] = axes[j][idx[j]];
        if (detail::oracle_feasible(point, budgets, eps)) {
            const double v = weighted_peak_age_normalized(point, weights, eps);
            if (v < best_value) {
                best_value = v;
                best = point;
            }
        }
        int j = 0;
        while (j < m && ++idx[j] == axes[j].size()) idx[j++] = 0;
        if (j == m) break;
    }
    if (!std::isfinite(best_value)) throw std::runtime_error("oracle grid had no feasible point");

    // Coordinate descent: golden-section on log(r_j) around the incumbent,
    // clamped to the box; infeasible points score infinity. Only improvements
    // are accepted, so sweeps never increase the value.
    OracleResult result;
    result.grid_resolution = step;
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    const double h = 2.0 * std::log(step);
    for (int sweep = 0; sweep < grid.refine_sweeps; ++sweep) {
        for (int j = 0; j < m; ++j) {
            const auto score = [&](double t) {
                point = best;
                point[j] = std::exp(t);
                if (!detail::oracle_feasible(point, budgets, eps))
                    return std::numeric_limits<double>::infinity();
                return weighted_peak_age_normalized(point, weights, eps);
            };
            double a = std::max(std::log(best[j]) - h, std::log(lo[j]));
            double c = std::min(std::log(best[j]) + h, std::log(hi[j]));
            double t1 = c - inv_phi * (c - a), t2 = a + inv_phi * (c - a);
            double f1 = score(t1), f2 = score(t2);
            while (c - a > grid.refine_tol) {
                if (f1 < f2) {
                    c = t2; t2 = t1; f2 = f1;
                    t1 = c - inv_phi * (c - a);
                    f1 = score(t1);
                } else {
                    a = t1; t1 = t2; f1 = f2;
                    t2 = a + inv_phi * (c - a);
                    f2 = score(t2);
                }
            }
            const double t = f1 < f2 ? t1 : t2;
            const double fv = std::min(f1, f2);
            if (fv < best_value) {
                best_value = fv;
                best[j] = std::exp(t);
            }
        }
        result.sweep_values.push_back(best_value);
    }
    result.refined = grid.refine_sweeps > 0;

    result.best_rates = {best, RateProvenance::oracle};
    // Recomputed through the full objective path, never cached from the search.
    result.best_value =
        peak_age_objective(result.best_rates, sources, net).objective_normalized;
    return result;
}

}  // namespace agewake
