#include <catch2/catch_amalgamated.hpp>

#include "agewake/solver.hpp"

using namespace agewake;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

NetworkSpec net_of(int m, double eps, double mean_tx = 5e-3) {
    NetworkSpec net;
    net.num_sources = m;
    net.sensing_ratio = eps;
    net.mean_tx_time_s = mean_tx;
    net.tx_time = TxDistribution::deterministic(mean_tx);
    return net;
}

std::vector<SourceSpec> sources_of(std::vector<double> w, std::vector<double> b) {
    std::vector<SourceSpec> out(w.size());
    for (std::size_t l = 0; l < w.size(); ++l) out[l] = {w[l], b[l], std::nullopt};
    return out;
}

std::vector<SourceSpec> random_instance(std::mt19937_64& gen, int m, bool adequate) {
    std::uniform_real_distribution<double> uw(0.0, 10.0), ub(0.0, 1.0);
    std::vector<SourceSpec> out(m);
    for (;;) {
        double total = 0.0;
        for (auto& s : out) {
            s.weight = 10.0 - uw(gen);
            total += s.target_efficiency = 1.0 - ub(gen);
        }
        if (adequate == (total >= 1.0)) return out;
        if (!adequate) {
            // rescale instead of rejecting; scarce draws are rare at larger M
            for (auto& s : out) s.target_efficiency *= 0.5 / total;
            return out;
        }
    }
}

}  // namespace

TEST_CASE("regime detection") {
    CHECK(detect_regime(sources_of({1, 1}, {0.6, 0.6})).kind == RegimeKind::energy_adequate);
    CHECK(detect_regime(sources_of({1, 1}, {0.2, 0.3})).kind == RegimeKind::energy_scarce);
    // the boundary counts as adequate
    CHECK(detect_regime(sources_of({1, 1}, {0.5, 0.5})).kind == RegimeKind::energy_adequate);
    CHECK_THAT(detect_regime(sources_of({1, 1}, {0.2, 0.3})).total_efficiency,
               WithinRel(0.5, 1e-14));
}

TEST_CASE("beta root of the allocation equation") {
    // unconstrained branch: beta + 2 beta = 1
    CHECK_THAT(solve_beta_adequate(sources_of({1, 4}, {0.9, 0.9})), WithinAbs(1.0 / 3.0, 1e-12));
    // boundary rule: total efficiency exactly 1
    CHECK(solve_beta_adequate(sources_of({1}, {1})) == 1.0);
    CHECK_THAT(solve_beta_adequate(sources_of({1, 1}, {1, 1})), WithinAbs(0.5, 1e-12));
    CHECK_THROWS_AS(solve_beta_adequate(sources_of({1, 1}, {0.2, 0.3})), std::invalid_argument);

    std::mt19937_64 gen(3);
    std::uniform_int_distribution<int> um(2, 10);
    for (int i = 0; i < 200; ++i) {
        const auto sources = random_instance(gen, um(gen), true);
        const double beta = solve_beta_adequate(sources);
        double lhs = 0.0;
        for (const auto& s : sources)
            lhs += std::min(std::min(s.target_efficiency, 1.0), beta * std::sqrt(s.weight));
        CHECK_THAT(lhs, WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("adequate-regime solution") {
    // x* at practical and at extreme sensing ratios
    const auto sol = solve_adequate(sources_of({1, 4}, {0.9, 0.9}), net_of(2, 0.008));
    CHECK_THAT(sol.x_star, WithinRel(10.691514642799696, 1e-13));
    CHECK_THAT(solve_adequate(sources_of({1}, {1}), net_of(1, 2.0)).x_star,
               WithinRel(0.36602540378443865, 1e-13));

    CHECK_THAT(sol.rates.values[0], WithinRel(3.5638382142665652, 1e-12));
    CHECK_THAT(sol.rates.values[1], WithinRel(7.1276764285331305, 1e-12));
    CHECK(sol.rates.provenance == RateProvenance::closed_form);
    CHECK(sol.regime.kind == RegimeKind::energy_adequate);

    // total rate equals x* because the allocation weights sum to one
    CHECK_THAT(sol.rates.values[0] + sol.rates.values[1], WithinRel(sol.x_star, 1e-12));

    // sources recover their rates from the broadcast pair
    for (std::size_t l = 0; l < 2; ++l)
        CHECK(sol.rates.values[l] ==
              rate_from_broadcast(l == 0 ? 1.0 : 4.0, 0.9, sol.x_star, sol.beta_star));

    CHECK_THROWS_AS(solve_adequate(sources_of({1}, {1}), net_of(1, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(solve_adequate(sources_of({1, 1}, {0.2, 0.2}), net_of(2, 0.1)),
                    std::invalid_argument);
}

TEST_CASE("scarce-regime solution") {
    // zero sensing collapses the quadratic and gives r_l = b_l / (1 - sum b)
    const auto sol0 = solve_scarce(sources_of({3, 7}, {0.2, 0.3}), net_of(2, 0.0));
    REQUIRE(sol0.c_values.has_value());
    CHECK_THAT((*sol0.c_values)[0], WithinRel(1.0, 1e-13));
    CHECK_THAT((*sol0.c_values)[1], WithinRel(1.0, 1e-13));
    CHECK_THAT(sol0.x_star, WithinRel(2.0, 1e-13));
    CHECK_THAT(sol0.rates.values[0], WithinRel(0.4, 1e-13));
    CHECK_THAT(sol0.rates.values[1], WithinRel(0.6, 1e-13));

    const auto sol = solve_scarce(sources_of({1, 1}, {0.2, 0.2}), net_of(2, 0.01));
    CHECK_THAT((*sol.c_values)[0], WithinRel(0.99450532861860665, 1e-13));
    CHECK_THAT(sol.x_star, WithinRel(1.6575088810310111, 1e-13));
    CHECK_THAT(sol.rates.values[0], WithinRel(0.33150177620620222, 1e-13));
    CHECK_THAT(sol.rates.values[1], WithinRel(0.33150177620620222, 1e-13));
    CHECK_THAT(sol.beta_star, WithinRel(2.0, 1e-14));  // sum of 1/sqrt(w)

    // symmetric budgets give identical c values
    const auto sym = solve_scarce(sources_of({2, 5, 1}, {0.15, 0.15, 0.15}), net_of(3, 0.02));
    CHECK((*sym.c_values)[0] == (*sym.c_values)[1]);
    CHECK((*sym.c_values)[1] == (*sym.c_values)[2]);

    CHECK_THROWS_AS(solve_scarce(sources_of({1, 1}, {0.6, 0.6}), net_of(2, 0.01)),
                    std::invalid_argument);
}

TEST_CASE("bound certificates, adequate regime") {
    const auto sources = sources_of({1, 4}, {0.9, 0.9});
    const auto net = net_of(2, 0.008);
    const auto sol = solve_adequate(sources, net);
    const auto cert = bounds_adequate(sources, net, sol);
    CHECK_THAT(cert.lower_bound, WithinRel(14.0, 1e-13));
    CHECK_THAT(cert.gap_constant, WithinRel(9.0, 1e-13));
    CHECK_THAT(cert.upper_bound, WithinRel(15.720626822054760, 1e-12));
    CHECK_THAT(cert.theoretical_gap_bound, WithinRel(2.0 * std::sqrt(0.008) * 9.0, 1e-12));

    // single source: lower 2, upper e^{x* eps}(1 + 1/x*) + 1
    const auto one = sources_of({1}, {1});
    const auto sol1 = solve_adequate(one, net_of(1, 0.008));
    const auto cert1 = bounds_adequate(one, net_of(1, 0.008), sol1);
    CHECK_THAT(cert1.lower_bound, WithinRel(2.0, 1e-13));
    CHECK_THAT(cert1.upper_bound, WithinRel(2.1911807580060845, 1e-12));

    // bounds meet as sensing vanishes
    const auto tiny = solve_adequate(sources, net_of(2, 1e-12));
    const auto cert_tiny = bounds_adequate(sources, net_of(2, 1e-12), tiny);
    CHECK(cert_tiny.gap < 1e-5 * cert_tiny.lower_bound);

    CHECK_THROWS_AS(bounds_adequate(sources, net, solve_scarce(sources_of({1, 1}, {0.2, 0.2}),
                                                               net_of(2, 0.008))),
                    std::invalid_argument);
}

TEST_CASE("bound certificates, scarce regime") {
    // zero sensing: both bounds equal sum(w/b) + sum(w)
    const auto flat = sources_of({1, 1}, {0.2, 0.3});
    const auto sol0 = solve_scarce(flat, net_of(2, 0.0));
    const auto cert0 = bounds_scarce(flat, net_of(2, 0.0), sol0);
    CHECK_THAT(cert0.lower_bound, WithinRel(31.0 / 3.0, 1e-13));
    CHECK_THAT(cert0.upper_bound, WithinRel(31.0 / 3.0, 1e-13));

    const auto pair = sources_of({1, 1}, {0.2, 0.2});
    const auto sol = solve_scarce(pair, net_of(2, 0.01));
    const auto cert = bounds_scarce(pair, net_of(2, 0.01), sol);
    CHECK_THAT(cert.lower_bound, WithinRel(11.933555062550344, 1e-12));
    CHECK_THAT(cert.upper_bound, WithinRel(12.099891323320308, 1e-12));
    CHECK_THAT(cert.gap_constant, WithinRel(50.0 / 3.0, 1e-13));
    CHECK_THAT(cert.theoretical_gap_bound, WithinRel(0.01 * 50.0 / 3.0, 1e-13));

    CHECK_THROWS_AS(bounds_scarce(pair, net_of(2, 0.01),
                                  solve_adequate(sources_of({1}, {1}), net_of(1, 0.01))),
                    std::invalid_argument);
}

TEST_CASE("asymptotic optimum") {
    CHECK_THAT(asymptotic_optimum(sources_of({1, 4}, {0.9, 0.9})), WithinRel(14.0, 1e-12));
    CHECK_THAT(asymptotic_optimum(sources_of({1, 1}, {0.2, 0.3})), WithinRel(31.0 / 3.0, 1e-13));
    CHECK_THAT(asymptotic_optimum(sources_of({1}, {1})), WithinRel(2.0, 1e-14));
}

TEST_CASE("synchronized scheduler optimum") {
    const auto sync = synchronized_optimum(sources_of({1, 4}, {0.9, 0.9}));
    CHECK_THAT(sync.access_probs[0], WithinAbs(1.0 / 3.0, 1e-12));
    CHECK_THAT(sync.access_probs[1], WithinAbs(2.0 / 3.0, 1e-12));
    CHECK_THAT(sync.value, WithinRel(14.0, 1e-12));
    CHECK_THAT(sync.access_probs[0] + sync.access_probs[1], WithinAbs(1.0, 1e-12));

    const auto single = synchronized_optimum(sources_of({3}, {1}));
    CHECK_THAT(single.access_probs[0], WithinAbs(1.0, 1e-12));
    CHECK_THAT(single.value, WithinRel(6.0, 1e-12));

    const auto uniform = synchronized_optimum(sources_of({2, 2, 2, 2}, {1, 1, 1, 1}));
    for (double a : uniform.access_probs) CHECK_THAT(a, WithinAbs(0.25, 1e-12));

    CHECK_THROWS_AS(synchronized_optimum(sources_of({1, 1}, {0.2, 0.3})), std::invalid_argument);
}

TEST_CASE("fixed-rate baseline") {
    // k / (2k + 1) = 0.2  =>  k = 1/3
    const auto pair = fixed_rate_baseline(sources_of({1, 1}, {0.2, 0.2}), net_of(2, 0.0));
    CHECK_THAT(pair.values[0], WithinRel(1.0 / 3.0, 1e-10));
    CHECK(pair.values[0] == pair.values[1]);
    CHECK(pair.provenance == RateProvenance::fixed_rate);

    const auto single = fixed_rate_baseline(sources_of({1}, {0.5}), net_of(1, 0.0));
    CHECK_THAT(single.values[0], WithinRel(1.0, 1e-10));

    // vacuous constraints: capped at the adequate-regime x*
    const auto capped = fixed_rate_baseline(sources_of({1, 1}, {2, 3}), net_of(2, 0.008));
    CHECK_THAT(capped.values[0], WithinRel(10.691514642799696, 1e-12));

    // the chosen k always satisfies the energy constraints
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<int> um(1, 10);
    std::uniform_real_distribution<double> ueps(0.0, 0.1);
    for (int i = 0; i < 100; ++i) {
        const int m = um(gen);
        const auto sources = random_instance(gen, m, i % 2 == 0 && m > 1);
        const auto net = net_of(m, ueps(gen));
        const auto rates = fixed_rate_baseline(sources, net);
        const auto feas = check_energy_feasibility(rates, sources, net);
        for (double s : feas.slack) CHECK(s >= -1e-10);
    }
}

TEST_CASE("solutions are feasible and bracketed") {
    std::mt19937_64 gen(17);
    std::uniform_int_distribution<int> um(1, 10);
    std::uniform_real_distribution<double> ueps(std::log(1e-5), std::log(1e-1));
    for (int i = 0; i < 300; ++i) {
        const bool adequate = i % 2 == 0;
        const int m = adequate ? std::max(2, um(gen)) : um(gen);
        const auto sources = random_instance(gen, m, adequate);
        const auto net = net_of(m, std::exp(ueps(gen)));
        const auto sol = solve_sleep_rates(sources, net);
        CHECK(sol.regime.kind ==
              (adequate ? RegimeKind::energy_adequate : RegimeKind::energy_scarce));

        const auto feas = check_energy_feasibility(sol.rates, sources, net);
        for (double s : feas.slack) CHECK(s >= -1e-10);

        const auto cert = certify(sources, net, sol);
        const double value = peak_age_objective(sol.rates, sources, net).objective_normalized;
        CHECK(cert.lower_bound <= value * (1 + 1e-9));
        CHECK(value <= cert.upper_bound * (1 + 1e-9));
        CHECK(cert.gap >= 0.0);

        // broadcast identity in both regimes
        for (std::size_t l = 0; l < sources.size(); ++l) {
            const double from_broadcast = rate_from_broadcast(
                sources[l].weight, sources[l].target_efficiency, sol.x_star, sol.beta_star);
            CHECK_THAT(sol.rates.values[l], WithinRel(from_broadcast, 1e-12));
        }
    }
}

TEST_CASE("x* never exceeds 1/sqrt(eps)") {
    const auto sources = sources_of({1, 2}, {0.7, 0.7});
    for (double eps = 1e-9; eps < 8.0; eps *= 2.7) {
        const auto sol = solve_adequate(sources, net_of(2, eps));
        CHECK(sol.x_star <= std::sqrt(1.0 / eps));
    }
}

TEST_CASE("gap scaling follows the regime law") {
    const auto adequate = sources_of({1, 4}, {0.9, 0.9});
    const auto scarce = sources_of({1, 2}, {0.2, 0.3});
    const auto gap_at = [&](const std::vector<SourceSpec>& s, double eps) {
        const auto net = net_of(2, eps);
        return certify(s, net, solve_sleep_rates(s, net)).gap;
    };
    // adequate: gap ~ sqrt(eps), so two decades in eps shrink the gap tenfold
    const double r_adequate = gap_at(adequate, 1e-4) / gap_at(adequate, 1e-2);
    CHECK(r_adequate > 0.08);
    CHECK(r_adequate < 0.12);
    // scarce: gap ~ eps
    const double r_scarce = gap_at(scarce, 1e-3) / gap_at(scarce, 1e-2);
    CHECK(r_scarce > 0.08);
    CHECK(r_scarce < 0.12);
}

TEST_CASE("synchronized scheduler matches the vanishing-sensing limit") {
    std::mt19937_64 gen(23);
    for (int i = 0; i < 20; ++i) {
        const auto sources = random_instance(gen, 2 + i % 5, true);
        const auto net = net_of(static_cast<int>(sources.size()), 1e-8);
        const double near = peak_age_objective(solve_adequate(sources, net).rates, sources, net)
                                .objective_normalized;
        const auto sync = synchronized_optimum(sources);
        CHECK(std::abs(near - sync.value) / sync.value <= 1e-3);
        CHECK_THAT(sync.value, WithinRel(asymptotic_optimum(sources), 1e-12));
    }
}
