#include <catch2/catch_amalgamated.hpp>

#include "agewake/oracle.hpp"

using namespace agewake;
using Catch::Matchers::WithinRel;

namespace {

NetworkSpec net_of(int m, double eps) {
    NetworkSpec net;
    net.num_sources = m;
    net.sensing_ratio = eps;
    net.mean_tx_time_s = 5e-3;
    net.tx_time = TxDistribution::deterministic(5e-3);
    return net;
}

std::vector<SourceSpec> sources_of(std::vector<double> w, std::vector<double> b) {
    std::vector<SourceSpec> out(w.size());
    for (std::size_t l = 0; l < w.size(); ++l) out[l] = {w[l], b[l], std::nullopt};
    return out;
}

}  // namespace

TEST_CASE("single unconstrained source pushes to the box edge") {
    // (1 + r)/r + 1 is decreasing in r, so the oracle should land near the
    // upper limit and the value should approach 2 as the box grows.
    const auto sources = sources_of({1}, {1});
    const auto net = net_of(1, 0.0);
    const auto narrow = brute_force_optimize(sources, net);
    CHECK(narrow.best_value < 2.01);
    CHECK(narrow.best_value >= 2.0);

    GridSpec wide;
    wide.upper_factor = 100.0;
    const auto wider = brute_force_optimize(sources, net, wide);
    CHECK(wider.best_value < narrow.best_value);
    CHECK(wider.best_value >= 2.0);
}

TEST_CASE("reproduces the scarce closed form at zero sensing") {
    const auto sources = sources_of({1, 1}, {0.2, 0.3});
    const auto result = brute_force_optimize(sources, net_of(2, 0.0));
    CHECK_THAT(result.best_value, WithinRel(31.0 / 3.0, 1e-6));
    CHECK(result.best_value >= 31.0 / 3.0 - 1e-9);
    CHECK_THAT(result.best_rates.values[0], WithinRel(0.4, 0.02));
    CHECK_THAT(result.best_rates.values[1], WithinRel(0.6, 0.02));
    CHECK(result.best_rates.provenance == RateProvenance::oracle);
}

TEST_CASE("symmetric instances give symmetric optima") {
    const auto sources = sources_of({2, 2}, {0.3, 0.3});
    const auto result = brute_force_optimize(sources, net_of(2, 1e-3));
    CHECK_THAT(result.best_rates.values[0], WithinRel(result.best_rates.values[1], 0.02));
}

TEST_CASE("preconditions") {
    CHECK_THROWS_AS(brute_force_optimize(sources_of({1, 1, 1, 1}, {0.9, 0.9, 0.9, 0.9}),
                                         net_of(4, 1e-3)),
                    std::invalid_argument);
}

TEST_CASE("oracle result invariants") {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> uw(0.0, 10.0), ub(0.0, 1.0);
    std::uniform_int_distribution<int> um(1, 3);
    for (int i = 0; i < 8; ++i) {
        const int m = um(gen);
        std::vector<double> w(m), b(m);
        for (int l = 0; l < m; ++l) {
            w[l] = 10.0 - uw(gen);
            b[l] = 1.0 - ub(gen);
        }
        const auto sources = sources_of(w, b);
        const auto net = net_of(m, 1e-3);
        const auto result = brute_force_optimize(sources, net);

        // never beats the analytic lower bound
        const auto sol = solve_sleep_rates(sources, net);
        const auto cert = certify(sources, net, sol);
        CHECK(result.best_value >= cert.lower_bound - 1e-9);

        // best rates feasible, refinement monotone, value recomputed
        const auto feas = check_energy_feasibility(result.best_rates, sources, net);
        for (double s : feas.slack) CHECK(s >= -1e-10);
        for (std::size_t k = 1; k < result.sweep_values.size(); ++k)
            CHECK(result.sweep_values[k] <= result.sweep_values[k - 1] + 1e-15);
        CHECK(result.best_value ==
              peak_age_objective(result.best_rates, sources, net).objective_normalized);

        // closed-form solution never does better than the certified gap over
        // the oracle optimum
        const double solved = peak_age_objective(sol.rates, sources, net).objective_normalized;
        CHECK(solved - result.best_value <= cert.theoretical_gap_bound * 1.1);
    }
}
