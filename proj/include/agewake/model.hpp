#pragma once

#include <numeric>
#include <span>

#include "agewake/types.hpp"

// Closed-form per-cycle and long-run statistics of the sleep-wake
// carrier-sensing channel, evaluable for any positive rate vector.

namespace agewake {

/// Analytic summary of a rate vector on a given network.
struct AnalyticReport {
    double objective_normalized = 0.0;    // weighted average peak age / E[T]
    double objective_unnormalized_s = 0.0;
    std::vector<double> per_source_alpha;       // channel-access probability per cycle
    std::vector<double> per_source_sigma;       // long-run transmitting fraction
    std::vector<double> per_source_peak_age_s;  // average peak age, seconds
    bool feasible = true;                       // sigma_l <= b_l for all l
};

struct FeasibilityCheck {
    bool feasible = true;
    std::vector<double> slack;  // b_l - sigma_l
};

namespace detail {

// Switch to one exp() per term once the raw exponential would lose accuracy;
// the exponent itself stays representable far beyond this.
inline constexpr double kLogSpaceThreshold = 30.0;

inline double sum_rates(std::span<const double> rates) {
    return std::accumulate(rates.begin(), rates.end(), 0.0);
}

// Per-source normalized mean peak age: e^{(S - r_l) eps} (1 + S) / r_l + 1,
// with S the total rate.
inline double peak_age_term(double r_l, double sum_r, double eps) {
    const double expo = (sum_r - r_l) * eps;
    if (sum_r * eps > kLogSpaceThreshold)
        return std::exp(expo + std::log1p(sum_r) - std::log(r_l)) + 1.0;
    return std::exp(expo) * (1.0 + sum_r) / r_l + 1.0;
}

inline double access_probability_term(double r_l, double sum_r, double eps) {
    // r_l e^{r_l eps} / (e^{S eps} S); the exponent (r_l - S) eps is <= 0, so
    // this form never overflows.
    return (r_l / sum_r) * std::exp((r_l - sum_r) * eps);
}

inline double busy_fraction_term(double r_l, double sum_r, double eps) {
    const double one_minus_exp = -std::expm1(-r_l * eps);  // 1 - e^{-r_l eps}
    return (one_minus_exp * sum_r + r_l * std::exp(-r_l * eps)) / (sum_r + 1.0);
}

}  // namespace detail

/// Weighted average peak age normalized by E[T], for raw rate/weight spans.
/// This is the optimization objective; the allocating overloads below wrap it.
inline double weighted_peak_age_normalized(std::span<const double> rates,
                                           std::span<const double> weights, double eps) {
    const double sum_r = detail::sum_rates(rates);
    double value = 0.0;
    for (std::size_t l = 0; l < rates.size(); ++l)
        value += weights[l] * detail::peak_age_term(rates[l], sum_r, eps);
    return value;
}

/// Probability that source l wins channel access in a cycle.
inline std::vector<double> access_probability(const SleepRates& rates, const NetworkSpec& net) {
    rates.validate(net.num_sources);
    net.validate();
    const double sum_r = detail::sum_rates(rates.values);
    std::vector<double> alpha(rates.values.size());
    for (std::size_t l = 0; l < alpha.size(); ++l)
        alpha[l] = detail::access_probability_term(rates.values[l], sum_r, net.sensing_ratio);
    return alpha;
}

/// Mean number of cycles between successive successful transmissions of each
/// source (geometric with success probability alpha_l).
inline std::vector<double> mean_cycles_between_success(const SleepRates& rates,
                                                       const NetworkSpec& net) {
    std::vector<double> n = access_probability(rates, net);
    for (double& v : n) v = 1.0 / v;
    return n;
}

/// Mean sleep-wake cycle duration in seconds: E[T] / sum(r) + E[T].
inline double mean_cycle_duration(const SleepRates& rates, const NetworkSpec& net) {
    rates.validate(net.num_sources);
    net.validate();
    const double sum_r = detail::sum_rates(rates.values);
    return net.mean_tx_time_s / sum_r + net.mean_tx_time_s;
}

/// Long-run fraction of time each source spends transmitting, collisions
/// included.
inline std::vector<double> busy_fraction(const SleepRates& rates, const NetworkSpec& net) {
    rates.validate(net.num_sources);
    net.validate();
    const double sum_r = detail::sum_rates(rates.values);
    std::vector<double> sigma(rates.values.size());
    for (std::size_t l = 0; l < sigma.size(); ++l)
        sigma[l] = detail::busy_fraction_term(rates.values[l], sum_r, net.sensing_ratio);
    return sigma;
}

/// Per-source energy slack b_l - sigma_l; feasible iff none is negative.
/// b_l >= 1 makes the constraint vacuous since sigma_l < 1 always.
inline FeasibilityCheck check_energy_feasibility(const SleepRates& rates,
                                                 const std::vector<SourceSpec>& sources,
                                                 const NetworkSpec& net) {
    validate_sources(sources, net);
    std::vector<double> sigma = busy_fraction(rates, net);
    FeasibilityCheck out;
    out.slack.resize(sigma.size());
    for (std::size_t l = 0; l < sigma.size(); ++l) {
        out.slack[l] = sources[l].target_efficiency - sigma[l];
        if (out.slack[l] < 0.0) out.feasible = false;
    }
    return out;
}

/// Target energy efficiency implied by a battery: (B/D + R) / avg tx power.
inline double target_efficiency_from_battery(const BatterySpec& battery) {
    battery.validate();
    const double allowed_rate_w =
        battery.initial_level_j / battery.target_lifetime_s + battery.replenish_rate_w;
    return allowed_rate_w / battery.avg_tx_power_w;
}

/// Full analytic report: weighted average peak age (normalized and in
/// seconds), per-source access probabilities, busy fractions, per-source mean
/// peak ages, and energy feasibility.
inline AnalyticReport peak_age_objective(const SleepRates& rates,
                                         const std::vector<SourceSpec>& sources,
                                         const NetworkSpec& net) {
    validate_sources(sources, net);
    rates.validate(net.num_sources);

    const double eps = net.sensing_ratio;
    const double sum_r = detail::sum_rates(rates.values);

    AnalyticReport report;
    report.per_source_alpha.resize(sources.size());
    report.per_source_sigma.resize(sources.size());
    report.per_source_peak_age_s.resize(sources.size());

    double objective = 0.0;
    for (std::size_t l = 0; l < sources.size(); ++l) {
        const double r_l = rates.values[l];
        const double peak_norm = detail::peak_age_term(r_l, sum_r, eps);
        report.per_source_alpha[l] = detail::access_probability_term(r_l, sum_r, eps);
        report.per_source_sigma[l] = detail::busy_fraction_term(r_l, sum_r, eps);
        report.per_source_peak_age_s[l] = peak_norm * net.mean_tx_time_s;
        objective += sources[l].weight * peak_norm;
        if (report.per_source_sigma[l] > sources[l].target_efficiency) report.feasible = false;
    }
    report.objective_normalized = objective;
    report.objective_unnormalized_s = objective * net.mean_tx_time_s;
    return report;
}

}  // namespace agewake
