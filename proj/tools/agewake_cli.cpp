// Command-line front end: solve rates, simulate them, run parameter sweeps
// and lifetime experiments, or run the validation battery.
//
// Exit codes: 0 success, 1 spec error, 2 validation failure, 3 runtime error.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "agewake/harness.hpp"
#include "agewake/validation.hpp"

namespace {

using namespace agewake;

struct Overrides {
    std::string spec_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::uint64_t> cycles;
    std::optional<int> replications;
    std::optional<std::string> sensing_model;
};

void add_common_flags(CLI::App* cmd, Overrides& ov, bool spec_required = true) {
    auto* spec = cmd->add_option("--spec", ov.spec_path, "experiment spec file (key=value or JSON)");
    if (spec_required) spec->required();
    cmd->add_option("--seed", ov.seed, "override the spec seed");
    cmd->add_option("--out", ov.out, "override the CSV output path");
    cmd->add_option("--cycles", ov.cycles, "override the simulation cycle count");
    cmd->add_option("--replications", ov.replications, "override the replication count");
    cmd->add_option("--sensing-model", ov.sensing_model, "paper or physical")
        ->check(CLI::IsMember({"paper", "physical"}));
}

ExperimentSpec resolve_spec(const Overrides& ov, ExperimentKind forced_kind) {
    ExperimentSpec spec = load_spec(ov.spec_path);
    if (forced_kind != ExperimentKind::validate) {
        const bool spec_is_sweep = spec.kind == ExperimentKind::sweep_epsilon ||
                                   spec.kind == ExperimentKind::sweep_sources ||
                                   spec.kind == ExperimentKind::sweep_efficiency ||
                                   spec.kind == ExperimentKind::sweep_lifetime;
        // `sweep` keeps whichever sweep kind the spec declares.
        if (!(forced_kind == ExperimentKind::sweep_epsilon && spec_is_sweep) &&
            spec.kind != forced_kind) {
            spec.kind = forced_kind;
            spec.sweep_values = default_sweep_grid(forced_kind, spec.num_sources, spec.epsilon);
            spec.simulate = spec.kind == ExperimentKind::simulate ||
                            spec.kind == ExperimentKind::sweep_lifetime;
        }
    }
    if (ov.seed) spec.seed = *ov.seed;
    if (ov.out) spec.output_path = *ov.out;
    if (ov.cycles) spec.cycles = *ov.cycles;
    if (ov.replications) spec.replications = *ov.replications;
    if (ov.sensing_model)
        spec.sensing_model = *ov.sensing_model == "physical" ? SensingModel::physical
                                                             : SensingModel::paper_faithful;
    return spec;
}

void print_solution(const ExperimentSpec& spec) {
    const auto inst = detail::instantiate_point(spec, spec.epsilon);
    const Solution sol = solve_sleep_rates(inst.sources, inst.net);
    const auto cert = certify(inst.sources, inst.net, sol);
    const auto report = peak_age_objective(sol.rates, inst.sources, inst.net);

    std::printf("regime: %s (total efficiency %.6g)\n", to_string(sol.regime.kind),
                sol.regime.total_efficiency);
    std::printf("x* = %.12g, beta* = %.12g\n", sol.x_star, sol.beta_star);
    std::printf("%-4s %-12s %-12s %-12s %-12s %-12s\n", "l", "weight", "efficiency", "rate",
                "alpha", "sigma");
    for (std::size_t l = 0; l < inst.sources.size(); ++l)
        std::printf("%-4zu %-12.6g %-12.6g %-12.6g %-12.6g %-12.6g\n", l, inst.sources[l].weight,
                    inst.sources[l].target_efficiency, sol.rates.values[l],
                    report.per_source_alpha[l], report.per_source_sigma[l]);
    std::printf("objective: %.12g normalized, %.12g s unnormalized (%s)\n",
                report.objective_normalized, report.objective_unnormalized_s,
                report.feasible ? "feasible" : "INFEASIBLE");
    std::printf("bounds: [%.12g, %.12g], gap %.6g, theoretical gap bound %.6g\n", cert.lower_bound,
                cert.upper_bound, cert.gap, cert.theoretical_gap_bound);
    std::printf("asymptotic optimum (sensing ratio -> 0): %.12g\n", asymptotic_optimum(inst.sources));
}

void print_lifetime_summary(const ExperimentSpec& spec) {
    for (double d : spec.sweep_values) {
        const auto inst = detail::instantiate_point(spec, d);
        const Solution sol = solve_sleep_rates(inst.sources, inst.net);
        SimConfig cfg;
        cfg.sources = inst.sources;
        cfg.net = inst.net;
        cfg.rates = sol.rates;
        cfg.horizon = Horizon::cycles(spec.cycles);
        cfg.seed = spec.seed;
        cfg.sensing_model = spec.sensing_model;
        const SimReport sim = run_lifetime_experiment(cfg);

        // Expected depletion time under the solved rates: level drains at
        // sigma * P_tx - R on average.
        const auto sigma = busy_fraction(sol.rates, inst.net);
        double expected = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < sigma.size(); ++l) {
            const auto& bat = *inst.sources[l].battery;
            const double drain = sigma[l] * bat.avg_tx_power_w - bat.replenish_rate_w;
            if (drain > 0.0)
                expected = std::min(expected, bat.initial_level_j / drain);
        }
        double min_achieved = std::numeric_limits<double>::infinity(), mean_achieved = 0.0;
        for (double t : *sim.lifetime_achieved_s) {
            min_achieved = std::min(min_achieved, t);
            mean_achieved += t / static_cast<double>(sim.lifetime_achieved_s->size());
        }
        std::printf("target %.6g s: analytic depletion %.6g s, achieved mean %.6g s, min %.6g s"
                    " (horizon %.6g s)\n",
                    d, expected, mean_achieved, min_achieved, sim.elapsed_s);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sleep-wake peak-age scheduling: solver, simulator, experiment harness"};
    app.require_subcommand(1);

    Overrides solve_ov, sim_ov, sweep_ov, life_ov;
    auto* cmd_solve = app.add_subcommand("solve", "closed-form rates and bound certificate");
    add_common_flags(cmd_solve, solve_ov);
    auto* cmd_sim = app.add_subcommand("simulate", "solve, then validate by simulation");
    add_common_flags(cmd_sim, sim_ov);
    auto* cmd_sweep = app.add_subcommand("sweep", "run the sweep declared in the spec");
    add_common_flags(cmd_sweep, sweep_ov);
    auto* cmd_life = app.add_subcommand("lifetime", "battery-lifetime experiment");
    add_common_flags(cmd_life, life_ov);

    std::uint64_t validate_seed = 42;
    int validate_instances = 200;
    auto* cmd_validate = app.add_subcommand("validate", "run the validation battery");
    cmd_validate->add_option("--seed", validate_seed, "battery seed");
    cmd_validate->add_option("--instances", validate_instances, "random instances per property");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_validate->parsed()) {
            const ValidationReport report = run_validation_battery(validate_seed, validate_instances);
            std::fputs(format(report).c_str(), stdout);
            return report.all_passed() ? 0 : 2;
        }

        ExperimentSpec spec;
        if (cmd_solve->parsed()) spec = resolve_spec(solve_ov, ExperimentKind::solve);
        else if (cmd_sim->parsed()) spec = resolve_spec(sim_ov, ExperimentKind::simulate);
        else if (cmd_sweep->parsed()) spec = resolve_spec(sweep_ov, ExperimentKind::sweep_epsilon);
        else spec = resolve_spec(life_ov, ExperimentKind::sweep_lifetime);

        if (spec.kind == ExperimentKind::validate) {
            const ValidationReport report = run_validation_battery(spec.seed, 200);
            std::fputs(format(report).c_str(), stdout);
            return report.all_passed() ? 0 : 2;
        }

        const ExperimentTable table = run_experiment(spec);
        if (cmd_solve->parsed()) print_solution(spec);
        if (cmd_life->parsed()) print_lifetime_summary(spec);
        if (!spec.output_path.empty()) {
            std::printf("wrote %zu rows to %s (+ .meta.json)\n", table.rows.size(),
                        spec.output_path.c_str());
        } else if (!cmd_solve->parsed()) {
            std::fputs(table.csv().c_str(), stdout);
        }

        for (const auto& row : table.rows)
            if (!row.back().empty())
                std::fprintf(stderr, "note: point %s=%s scheduler %s: %s\n", row[1].c_str(),
                             row[2].c_str(), row[3].c_str(), row.back().c_str());
        return 0;
    } catch (const agewake::SpecError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 3;
    }
}
