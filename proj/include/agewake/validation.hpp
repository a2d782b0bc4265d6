#pragma once

#include "agewake/harness.hpp"

// One-command battery materializing the analytic invariants: closed forms
// against each other, the solver against the oracle, the simulator against
// the closed forms, and the harness against itself.

namespace agewake {

struct PropertyResult {
    std::string name;
    int instances = 0;
    int failures = 0;
    // Distance from violation; a pass keeps this >= 0. The minimum over all
    // instances is reported.
    double worst_margin = std::numeric_limits<double>::infinity();
    std::string note;

    bool passed() const { return failures == 0; }
};

struct ValidationReport {
    std::vector<PropertyResult> properties;

    bool all_passed() const {
        for (const auto& p : properties)
            if (!p.passed()) return false;
        return true;
    }
    int total_failures() const {
        int n = 0;
        for (const auto& p : properties) n += p.failures;
        return n;
    }
};

inline std::string format(const ValidationReport& report) {
    std::string out;
    for (const auto& p : report.properties) {
        char line[256];
        std::snprintf(line, sizeof(line), "%-38s %s  instances=%-5d failures=%-3d margin=%.3e%s%s\n",
                      p.name.c_str(), p.passed() ? "PASS" : "FAIL", p.instances, p.failures,
                      p.worst_margin, p.note.empty() ? "" : "  ", p.note.c_str());
        out += line;
    }
    out += report.all_passed() ? "validation battery: all properties passed\n"
                               : "validation battery: FAILURES PRESENT\n";
    return out;
}

namespace detail {

struct PropertyAccumulator {
    PropertyResult result;

    explicit PropertyAccumulator(std::string name) { result.name = std::move(name); }

    // margin >= 0 counts as a pass for this check.
    void check(double margin) {
        ++result.instances;
        result.worst_margin = std::min(result.worst_margin, margin);
        if (!(margin >= 0.0)) ++result.failures;
    }
    void check(bool ok) { check(ok ? 0.0 : -1.0); }
};

inline std::vector<SourceSpec> sample_sources(std::mt19937_64& gen, int m) {
    std::uniform_real_distribution<double> uw(0.0, 10.0), ub(0.0, 1.0);
    std::vector<SourceSpec> out(m);
    for (auto& s : out) {
        s.weight = 10.0 - uw(gen);        // (0, 10]
        s.target_efficiency = 1.0 - ub(gen);  // (0, 1]
    }
    return out;
}

inline std::vector<SourceSpec> sample_regime_sources(std::mt19937_64& gen, int m,
                                                     RegimeKind want) {
    if (want == RegimeKind::energy_adequate) {
        for (int attempt = 0; attempt < 200; ++attempt) {
            auto sources = sample_sources(gen, std::max(m, 2));
            if (detect_regime(sources).kind == RegimeKind::energy_adequate) return sources;
        }
        auto sources = sample_sources(gen, std::max(m, 2));
        sources.front().target_efficiency = 1.0;
        return sources;
    }
    // Scarce: rescale a raw draw to a total efficiency strictly below one.
    auto sources = sample_sources(gen, m);
    std::uniform_real_distribution<double> utotal(0.05, 0.9);
    const double target = utotal(gen);
    double total = 0.0;
    for (const auto& s : sources) total += s.target_efficiency;
    for (auto& s : sources) s.target_efficiency *= target / total;
    return sources;
}

inline NetworkSpec make_net(int m, double eps, double mean_tx = 5e-3) {
    NetworkSpec net;
    net.num_sources = m;
    net.sensing_ratio = eps;
    net.mean_tx_time_s = mean_tx;
    net.tx_time = TxDistribution::deterministic(mean_tx);
    return net;
}

inline SleepRates sample_rates(std::mt19937_64& gen, int m, double lo = 1e-2, double hi = 1e2) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    SleepRates rates;
    rates.values.resize(m);
    for (auto& r : rates.values) r = std::exp(u(gen));
    return rates;
}

}  // namespace detail

inline ValidationReport run_validation_battery(std::uint64_t seed, int instance_count) {
    using detail::PropertyAccumulator;
    ValidationReport report;
    std::mt19937_64 gen(detail::splitmix64(seed ^ 0xa9e1a1d4f0ULL));

    std::uniform_int_distribution<int> um(1, 10);
    std::uniform_real_distribution<double> ueps(0.0, 0.5);

    // --- model closed forms -------------------------------------------------
    {
        PropertyAccumulator closure("model.probability_closure");
        PropertyAccumulator monotone("model.alpha_monotone_in_sensing");
        PropertyAccumulator zero_eps("model.zero_sensing_reduction");
        PropertyAccumulator homogeneity("model.homogeneity");
        for (int i = 0; i < instance_count; ++i) {
            const int m = um(gen);
            const double eps = ueps(gen);
            const SleepRates rates = detail::sample_rates(gen, m);
            const NetworkSpec net = detail::make_net(m, eps);
            const auto alpha = access_probability(rates, net);
            double sum_alpha = 0.0, entry_margin = 1.0;
            for (double a : alpha) {
                sum_alpha += a;
                entry_margin = std::min({entry_margin, a, 1.0 - a + 1e-15});
            }
            closure.check(std::min(entry_margin, 1.0 - sum_alpha + 1e-12));

            double prev = std::numeric_limits<double>::infinity();
            double mono_margin = std::numeric_limits<double>::infinity();
            for (int k = 0; k <= 10; ++k) {
                const auto a = access_probability(rates, detail::make_net(m, 0.05 * k));
                if (k > 0) mono_margin = std::min(mono_margin, prev - a[0] + 1e-12);
                prev = a[0];
            }
            monotone.check(mono_margin);

            const NetworkSpec net0 = detail::make_net(m, 0.0);
            const auto a0 = access_probability(rates, net0);
            const auto s0 = busy_fraction(rates, net0);
            double sum_r = 0.0;
            for (double r : rates.values) sum_r += r;
            double red_margin = std::numeric_limits<double>::infinity();
            for (int l = 0; l < m; ++l) {
                red_margin = std::min(red_margin,
                                      1e-14 - std::abs(a0[l] - rates.values[l] / sum_r));
                red_margin = std::min(
                    red_margin, 1e-14 - std::abs(s0[l] - rates.values[l] / (sum_r + 1.0)));
            }
            zero_eps.check(red_margin);

            const auto sources = detail::sample_sources(gen, m);
            const auto rep_a = peak_age_objective(rates, sources, detail::make_net(m, eps, 1e-3));
            const auto rep_b = peak_age_objective(rates, sources, detail::make_net(m, eps, 2.0));
            homogeneity.check(rep_a.objective_normalized == rep_b.objective_normalized &&
                              rep_a.objective_unnormalized_s ==
                                  rep_a.objective_normalized * 1e-3 &&
                              rep_b.objective_unnormalized_s == rep_b.objective_normalized * 2.0);
        }
        report.properties.push_back(closure.result);
        report.properties.push_back(monotone.result);
        report.properties.push_back(zero_eps.result);
        report.properties.push_back(homogeneity.result);
    }
    {
        PropertyAccumulator single("model.single_source_closed_form");
        const std::vector<SourceSpec> one{{1.0, 1.0, std::nullopt}};
        for (double r = 0.05; r <= 20.0; r *= 1.7) {
            const auto rep =
                peak_age_objective({{r}, RateProvenance::external}, one, detail::make_net(1, 0.0));
            const double expected = (1.0 + r) / r + 1.0;
            single.check(1e-12 - std::abs(rep.objective_normalized - expected) / expected);
        }
        report.properties.push_back(single.result);
    }
    {
        PropertyAccumulator negative("model.feasibility_negative_control");
        // Saturated uniform rates against a tight budget must be flagged.
        const NetworkSpec net = detail::make_net(2, 0.0);
        std::vector<SourceSpec> sources{{1.0, 0.2, std::nullopt}, {1.0, 0.2, std::nullopt}};
        const auto check =
            check_energy_feasibility({{1.0, 1.0}, RateProvenance::external}, sources, net);
        negative.check(!check.feasible && check.slack[0] < 0.0);
        report.properties.push_back(negative.result);
    }

    // --- solver -------------------------------------------------------------
    {
        PropertyAccumulator feas_adequate("solver.feasibility_adequate");
        PropertyAccumulator feas_scarce("solver.feasibility_scarce");
        PropertyAccumulator beta_residual("solver.beta_residual");
        PropertyAccumulator sandwich("solver.bound_sandwich");
        PropertyAccumulator scarce_identity("solver.scarce_min_identity");
        PropertyAccumulator scarce_zero("solver.scarce_zero_sensing");
        PropertyAccumulator sync_equiv("solver.synchronized_equivalence");
        std::uniform_real_distribution<double> ulogeps(std::log(1e-6), std::log(1e-1));
        for (int i = 0; i < 1000; ++i) {
            const int m = um(gen);
            const double eps = std::exp(ulogeps(gen));

            auto adequate =
                detail::sample_regime_sources(gen, m, RegimeKind::energy_adequate);
            const NetworkSpec net_a = detail::make_net(adequate.size(), eps);
            const Solution sol_a = solve_adequate(adequate, net_a);
            const auto feas_a = check_energy_feasibility(sol_a.rates, adequate, net_a);
            double min_slack = std::numeric_limits<double>::infinity();
            for (double s : feas_a.slack) min_slack = std::min(min_slack, s);
            feas_adequate.check(min_slack + 1e-10);

            double lhs = 0.0;
            for (const auto& s : adequate)
                lhs += std::min(std::min(s.target_efficiency, 1.0),
                                sol_a.beta_star * std::sqrt(s.weight));
            beta_residual.check(1e-12 - std::abs(lhs - 1.0));

            const auto cert_a = bounds_adequate(adequate, net_a, sol_a);
            const double value_a =
                peak_age_objective(sol_a.rates, adequate, net_a).objective_normalized;
            sandwich.check(std::min(value_a - cert_a.lower_bound + 1e-9 * value_a,
                                    cert_a.upper_bound - value_a + 1e-9 * value_a));

            auto scarce = detail::sample_regime_sources(gen, m, RegimeKind::energy_scarce);
            const bool zero_eps_case = i % 4 == 0;
            const NetworkSpec net_s = detail::make_net(m, zero_eps_case ? 0.0 : eps);
            const Solution sol_s = solve_scarce(scarce, net_s);
            const auto feas_s = check_energy_feasibility(sol_s.rates, scarce, net_s);
            min_slack = std::numeric_limits<double>::infinity();
            for (double s : feas_s.slack) min_slack = std::min(min_slack, s);
            feas_scarce.check(min_slack + 1e-10);

            double identity_margin = std::numeric_limits<double>::infinity();
            for (const auto& s : scarce)
                identity_margin =
                    std::min(identity_margin, sol_s.beta_star * std::sqrt(s.weight) -
                                                  s.target_efficiency);
            scarce_identity.check(identity_margin);

            const auto cert_s = bounds_scarce(scarce, net_s, sol_s);
            const double value_s =
                peak_age_objective(sol_s.rates, scarce, net_s).objective_normalized;
            sandwich.check(std::min(value_s - cert_s.lower_bound + 1e-9 * value_s,
                                    cert_s.upper_bound - value_s + 1e-9 * value_s));

            if (zero_eps_case) {
                double sum_b = 0.0;
                for (const auto& s : scarce) sum_b += s.target_efficiency;
                double worst = std::numeric_limits<double>::infinity();
                for (std::size_t l = 0; l < scarce.size(); ++l) {
                    const double expected =
                        scarce[l].target_efficiency / (1.0 - sum_b);
                    worst = std::min(worst, 1e-12 - std::abs(sol_s.rates.values[l] - expected) /
                                                        expected);
                }
                scarce_zero.check(worst);
            }

            if (i < 50) {
                const double sync_value = synchronized_optimum(adequate).value;
                const NetworkSpec net_tiny = detail::make_net(adequate.size(), 1e-8);
                const double near =
                    peak_age_objective(solve_adequate(adequate, net_tiny).rates, adequate, net_tiny)
                        .objective_normalized;
                sync_equiv.check(1e-3 - std::abs(near - sync_value) / sync_value);
                sync_equiv.check(std::abs(asymptotic_optimum(adequate) - sync_value) <=
                                 1e-12 * sync_value);
            }
        }
        report.properties.push_back(feas_adequate.result);
        report.properties.push_back(feas_scarce.result);
        report.properties.push_back(beta_residual.result);
        report.properties.push_back(sandwich.result);
        report.properties.push_back(scarce_identity.result);
        report.properties.push_back(scarce_zero.result);
        report.properties.push_back(sync_equiv.result);
    }
    {
        PropertyAccumulator xbound("solver.xstar_bound");
        for (double eps = 1e-8; eps <= 4.0; eps *= 3.0) {
            const std::vector<SourceSpec> sources{{1.0, 0.6, std::nullopt},
                                                  {1.0, 0.6, std::nullopt}};
            const Solution sol = solve_adequate(sources, detail::make_net(2, eps));
            xbound.check(std::sqrt(1.0 / eps) - sol.x_star);
        }
        report.properties.push_back(xbound.result);
    }
    {
        PropertyAccumulator adequate_scaling("solver.gap_scaling_adequate");
        PropertyAccumulator scarce_scaling("solver.gap_scaling_scarce");
        const std::vector<SourceSpec> adequate{{1.0, 0.9, std::nullopt}, {4.0, 0.9, std::nullopt}};
        const std::vector<SourceSpec> scarce{{1.0, 0.2, std::nullopt}, {2.0, 0.3, std::nullopt}};
        const auto gap_at = [&](const std::vector<SourceSpec>& sources, double eps) {
            const NetworkSpec net = detail::make_net(2, eps);
            const Solution sol = solve_sleep_rates(sources, net);
            return certify(sources, net, sol).gap;
        };
        double ratio_lo = std::numeric_limits<double>::infinity(), ratio_hi = 0.0;
        for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
            const double normalized = gap_at(adequate, eps) / std::sqrt(eps);
            ratio_lo = std::min(ratio_lo, normalized);
            ratio_hi = std::max(ratio_hi, normalized);
        }
        adequate_scaling.check(1.5 - ratio_hi / ratio_lo);  // gap/sqrt(eps) stays bounded
        for (double eps : {1e-2, 1e-3}) {
            const double ratio = gap_at(adequate, eps / 100.0) / gap_at(adequate, eps);
            adequate_scaling.check(std::min(ratio - 0.08, 0.12 - ratio));
        }
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            const double ratio = gap_at(scarce, eps / 10.0) / gap_at(scarce, eps);
            scarce_scaling.check(std::min(ratio - 0.08, 0.12 - ratio));
        }
        report.properties.push_back(adequate_scaling.result);
        report.properties.push_back(scarce_scaling.result);
    }

    // --- oracle -------------------------------------------------------------
    {
        PropertyAccumulator dominance("solver.oracle_dominance");
        PropertyAccumulator above_lower("oracle.above_lower_bound");
        PropertyAccumulator refine_monotone("oracle.refinement_monotone");
        PropertyAccumulator anchor("oracle.anchor_in_box");
        std::uniform_int_distribution<int> um3(1, 3);
        const int oracle_instances = std::max(4, instance_count / 40);
        for (int i = 0; i < oracle_instances; ++i) {
            const int m = um3(gen);
            const auto sources = detail::sample_sources(gen, m);
            const NetworkSpec net = detail::make_net(m, 1e-3);
            const Solution sol = solve_sleep_rates(sources, net);
            const auto cert = certify(sources, net, sol);
            const auto result = brute_force_optimize(sources, net);
            const double value =
                peak_age_objective(sol.rates, sources, net).objective_normalized;
            dominance.check(cert.theoretical_gap_bound * 1.1 - (value - result.best_value));
            above_lower.check(result.best_value - cert.lower_bound + 1e-9);
            double mono = std::numeric_limits<double>::infinity();
            for (std::size_t k = 1; k < result.sweep_values.size(); ++k)
                mono = std::min(mono, result.sweep_values[k - 1] - result.sweep_values[k]);
            refine_monotone.check(mono + 1e-15);
            double anchor_margin = std::numeric_limits<double>::infinity();
            for (std::size_t l = 0; l < sources.size(); ++l) {
                const double lo = std::min(1e-3 * sol.x_star, 0.9 * sol.rates.values[l]);
                const double hi = std::max(10.0 * sol.x_star, 1.1 * sol.rates.values[l]);
                anchor_margin = std::min({anchor_margin, sol.rates.values[l] - lo,
                                          hi - sol.rates.values[l]});
            }
            anchor.check(anchor_margin);
        }
        report.properties.push_back(dominance.result);
        report.properties.push_back(above_lower.result);
        report.properties.push_back(refine_monotone.result);
        report.properties.push_back(anchor.result);
    }

    // --- simulator ----------------------------------------------------------
    {
        PropertyAccumulator identity("sim.peak_identity");
        PropertyAccumulator accounting("sim.cycle_accounting");
        PropertyAccumulator agreement("sim.empirical_matches_analytic");
        PropertyAccumulator determinism("sim.determinism");
        PropertyAccumulator robustness("sim.distribution_robustness");
        std::uniform_int_distribution<int> um5(1, 5);
        for (int i = 0; i < 3; ++i) {
            const int m = um5(gen);
            SimConfig cfg;
            cfg.sources = detail::sample_sources(gen, m);
            cfg.net = detail::make_net(m, 0.01 * (i + 1));
            cfg.rates = detail::sample_rates(gen, m, 0.2, 3.0);
            cfg.horizon = Horizon::cycles(1'000'000);
            cfg.seed = seed + 100 + i;

            std::vector<AgeTracker> trackers;
            const SimReport sim = run_simulation(cfg, &trackers);

            double id_margin = 0.0;
            for (const auto& tr : trackers)
                for (std::size_t k = 0; k < tr.peaks.size(); ++k)
                    id_margin = std::max(id_margin,
                                         std::abs(tr.peaks[k] - (tr.inter_departures[k] +
                                                                 tr.tx_durations[k])));
            identity.check(id_margin == 0.0);

            std::uint64_t successes = 0;
            for (auto s : sim.success_cycles) successes += s;
            accounting.check(successes + sim.collision_cycles == sim.cycles_counted);

            const auto alpha = access_probability(cfg.rates, cfg.net);
            const auto sigma = busy_fraction(cfg.rates, cfg.net);
            const auto analytic = peak_age_objective(cfg.rates, cfg.sources, cfg.net);
            double margin = std::numeric_limits<double>::infinity();
            for (int l = 0; l < m; ++l) {
                margin = std::min(margin, 3.0 * sim.empirical_alpha_se[l] -
                                              std::abs(sim.empirical_alpha[l] - alpha[l]));
                margin = std::min(margin, 3.0 * sim.empirical_sigma_se[l] -
                                              std::abs(sim.empirical_sigma[l] - sigma[l]));
            }
            margin = std::min(margin,
                              3.0 * sim.empirical_mean_cycle_se -
                                  std::abs(sim.empirical_mean_cycle_s -
                                           mean_cycle_duration(cfg.rates, cfg.net)));
            agreement.check(margin);
            agreement.check(0.02 - std::abs(sim.weighted_avg_peak_age_s.value -
                                            analytic.objective_unnormalized_s) /
                                       analytic.objective_unnormalized_s);

            SimConfig small = cfg;
            small.horizon = Horizon::cycles(200'000);
            const SimReport a = run_simulation(small);
            const SimReport b = run_simulation(small);
            determinism.check(a.weighted_avg_peak_age_s.value == b.weighted_avg_peak_age_s.value &&
                              a.empirical_sigma == b.empirical_sigma &&
                              a.success_cycles == b.success_cycles &&
                              a.elapsed_s == b.elapsed_s);
        }
        {
            std::mt19937_64 gen_rob(detail::splitmix64(seed ^ 0x0b0e));
            const int m = 3;
            SimConfig cfg;
            cfg.sources = detail::sample_sources(gen_rob, m);
            cfg.net = detail::make_net(m, 0.008);
            cfg.rates = detail::sample_rates(gen_rob, m, 0.3, 2.0);
            cfg.horizon = Horizon::cycles(1'000'000);
            cfg.seed = seed + 7;
            const double expected =
                peak_age_objective(cfg.rates, cfg.sources, cfg.net).objective_unnormalized_s;
            int k = 0;
            for (auto dist : {TxDistribution::deterministic(5e-3), TxDistribution::exponential(5e-3),
                              TxDistribution::lognormal(5e-3, 0.8)}) {
                cfg.net.tx_time = dist;
                cfg.seed = seed + 7 + k++;
                const SimReport sim = run_simulation(cfg);
                robustness.check(0.02 -
                                 std::abs(sim.weighted_avg_peak_age_s.value - expected) / expected);
            }
        }
        report.properties.push_back(identity.result);
        report.properties.push_back(accounting.result);
        report.properties.push_back(agreement.result);
        report.properties.push_back(determinism.result);
        report.properties.push_back(robustness.result);
    }

    // --- harness ------------------------------------------------------------
    {
        PropertyAccumulator reproducible("harness.csv_reproducible");
        PropertyAccumulator ordering("harness.scheduler_ordering");
        PropertyAccumulator schema("harness.csv_schema");

        ExperimentSpec spec;
        spec.kind = ExperimentKind::sweep_epsilon;
        spec.num_sources = 10;
        spec.seed = seed;
        spec.sweep_values = {1e-4, 1e-3, 1e-2};
        const ExperimentTable first = run_experiment(spec);
        const ExperimentTable second = run_experiment(spec);
        reproducible.check(first.csv() == second.csv());

        for (double eps : spec.sweep_values) {
            auto point = detail::instantiate_point(spec, eps);
            const Solution sol = solve_sleep_rates(point.sources, point.net);
            const auto cert = certify(point.sources, point.net, sol);
            const double age =
                peak_age_objective(sol.rates, point.sources, point.net).objective_normalized;
            const double fixed = peak_age_objective(fixed_rate_baseline(point.sources, point.net),
                                                    point.sources, point.net)
                                     .objective_normalized;
            ordering.check(fixed + cert.gap + 1e-9 * fixed - age);
        }

        schema.check(first.csv().rfind("experiment_kind,sweep_param,sweep_value,scheduler,"
                                       "replication,objective_normalized,"
                                       "objective_unnormalized_seconds,empirical_peak_age_seconds,"
                                       "ci_halfwidth,lower_bound,upper_bound,gap,feasible,"
                                       "collision_fraction,seed,error\n",
                                       0) == 0);
        report.properties.push_back(reproducible.result);
        report.properties.push_back(ordering.result);
        report.properties.push_back(schema.result);
    }

    return report;
}

}  // namespace agewake
