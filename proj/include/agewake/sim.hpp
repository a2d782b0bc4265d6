#pragma once

#include <cstdint>
#include <limits>
#include <random>

#include "agewake/types.hpp"

// Discrete-event simulation of the sleep-wake carrier-sensing protocol.
// Cycle rules: every source draws a fresh exponential sleep time (memoryless,
// so residual sleep after a cycle has the same law); the earliest waker wins
// unless another source wakes within the sensing window, in which case all of
// them collide for one transmission-length period and nobody's age resets.

namespace agewake {

enum class SensingModel {
    paper_faithful,  // cycle = idle + T; sensing only widens the collision window
    physical         // cycle = idle + t_s + T; sensing occupies the channel
};

struct Horizon {
    std::uint64_t num_cycles = 0;  // exactly one of the two is set
    double sim_time_s = 0.0;

    static Horizon cycles(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("horizon: need at least one cycle");
        Horizon h;
        h.num_cycles = n;
        return h;
    }
    static Horizon duration(double seconds) {
        if (!(seconds > 0.0)) throw std::invalid_argument("horizon: duration must be > 0");
        Horizon h;
        h.sim_time_s = seconds;
        return h;
    }
};

struct SimConfig {
    std::vector<SourceSpec> sources;
    NetworkSpec net;
    SleepRates rates;
    Horizon horizon = Horizon::cycles(1'000'000);
    std::uint64_t seed = 0;
    SensingModel sensing_model = SensingModel::paper_faithful;
    bool battery_tracking = false;
    // Collision events usually reuse the transmission-time distribution; a
    // separate one can be supplied for sensitivity studies.
    std::optional<TxDistribution> collision_time;
};

/// Per-source age bookkeeping. The age grows at slope 1 and resets to the
/// transmission time at each delivery (packets are generated when their
/// transmission starts). Peaks are recorded from the second delivery on;
/// recorded peak i equals inter_departures[i] + tx_durations[i] exactly.
struct AgeTracker {
    double last_generation_time = 0.0;  // U_l(t); ages start at zero at t = 0
    double last_delivery_time = 0.0;
    double reset_age = 0.0;  // age right after the latest delivery (its tx time)
    std::uint64_t deliveries = 0;

    std::vector<double> peaks;
    std::vector<double> inter_departures;
    std::vector<double> tx_durations;          // tx time of delivery preceding each peak
    std::vector<std::uint64_t> peak_cycles;    // cycle index of each recorded peak

    double age_at(double t) const { return t - last_generation_time; }

    void on_delivery(double t, double tx_duration, std::uint64_t cycle) {
        if (deliveries > 0) {
            const double inter = t - last_delivery_time;
            inter_departures.push_back(inter);
            tx_durations.push_back(reset_age);
            peaks.push_back(inter + reset_age);
            peak_cycles.push_back(cycle);
        }
        last_delivery_time = t;
        last_generation_time = t - tx_duration;
        reset_age = tx_duration;
        ++deliveries;
    }
};

struct ValueWithCi {
    double value = std::numeric_limits<double>::quiet_NaN();
    double ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
};

struct SimReport {
    ValueWithCi weighted_avg_peak_age_s;
    std::vector<ValueWithCi> per_source_avg_peak_age_s;
    std::vector<double> empirical_alpha;
    std::vector<double> empirical_alpha_se;
    std::vector<double> empirical_sigma;
    std::vector<double> empirical_sigma_se;
    double collision_fraction = 0.0;
    std::uint64_t cycles_run = 0;      // total simulated
    std::uint64_t cycles_counted = 0;  // after warm-up
    double empirical_mean_cycle_s = 0.0;
    double empirical_mean_cycle_se = 0.0;
    std::vector<std::uint64_t> success_cycles;  // counted region, per source
    std::uint64_t collision_cycles = 0;         // counted region
    double elapsed_s = 0.0;
    std::optional<std::vector<double>> lifetime_achieved_s;
    std::vector<std::string> warnings;
};

namespace detail {

// Warm-up prefix discarded before statistics, and batch count for peak CIs.
inline constexpr double kWarmupFraction = 0.05;
inline constexpr int kPeakBatches = 30;
inline constexpr double kStudentT975Df29 = 2.0452296421327034;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent per-stream engines derived from one run seed; adding a source
// does not perturb the other streams' draws.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

inline constexpr std::uint64_t kTxStream = 0;
inline constexpr std::uint64_t kCollisionStream = 1;
inline constexpr std::uint64_t kWinnerStream = 2;
inline constexpr std::uint64_t kSourceStreamBase = 16;

inline ValueWithCi batch_means(const std::vector<double>& samples) {
    ValueWithCi out;
    if (samples.empty()) return out;
    double total = 0.0;
    for (double s : samples) total += s;
    out.value = total / static_cast<double>(samples.size());
    const std::size_t per_batch = samples.size() / kPeakBatches;
    if (per_batch == 0) return out;  // too few samples for a CI
    double mean_sum = 0.0, mean_sq = 0.0;
    for (int b = 0; b < kPeakBatches; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < per_batch; ++i) acc += samples[b * per_batch + i];
        const double m = acc / static_cast<double>(per_batch);
        mean_sum += m;
        mean_sq += m * m;
    }
    const double mb = mean_sum / kPeakBatches;
    const double var = std::max(0.0, (mean_sq - kPeakBatches * mb * mb) / (kPeakBatches - 1));
    out.ci_halfwidth = kStudentT975Df29 * std::sqrt(var / kPeakBatches);
    return out;
}

// Batch-mean CI for the weighted sum of per-source peak means. Needs every
// source to fill all batches; otherwise only the value is reported.
inline ValueWithCi weighted_batch_means(const std::vector<std::vector<double>>& peaks,
                                        const std::vector<double>& weights) {
    ValueWithCi out;
    double value = 0.0;
    bool have_all = true, ci_ok = true;
    for (std::size_t l = 0; l < peaks.size(); ++l) {
        if (peaks[l].empty()) {
            have_all = false;
            break;
        }
        double t = 0.0;
        for (double p : peaks[l]) t += p;
        value += weights[l] * t / static_cast<double>(peaks[l].size());
        if (peaks[l].size() < static_cast<std::size_t>(kPeakBatches)) ci_ok = false;
    }
    if (!have_all) return out;
    out.value = value;
    if (!ci_ok) return out;

    double mean_sum = 0.0, mean_sq = 0.0;
    for (int b = 0; b < kPeakBatches; ++b) {
        double combined = 0.0;
        for (std::size_t l = 0; l < peaks.size(); ++l) {
            const std::size_t per_batch = peaks[l].size() / kPeakBatches;
            double acc = 0.0;
            for (std::size_t i = 0; i < per_batch; ++i) acc += peaks[l][b * per_batch + i];
            combined += weights[l] * acc / static_cast<double>(per_batch);
        }
        mean_sum += combined;
        mean_sq += combined * combined;
    }
    const double mb = mean_sum / kPeakBatches;
    const double var = std::max(0.0, (mean_sq - kPeakBatches * mb * mb) / (kPeakBatches - 1));
    out.ci_halfwidth = kStudentT975Df29 * std::sqrt(var / kPeakBatches);
    return out;
}

struct BatteryState {
    double level_j = 0.0;
    bool depleted = false;
    double depletion_time = 0.0;
};

}  // namespace detail

inline SimReport run_simulation(const SimConfig& config, std::vector<AgeTracker>* trackers_out) {
    validate_sources(config.sources, config.net);
    config.rates.validate(config.net.num_sources);
    if (config.horizon.num_cycles == 0 && !(config.horizon.sim_time_s > 0.0))
        throw std::invalid_argument("horizon not set");

    const int m = config.net.num_sources;
    const double mean_tx = config.net.mean_tx_time_s;
    const double t_s = config.net.sensing_time_s();
    const bool physical = config.sensing_model == SensingModel::physical;
    const bool by_cycles = config.horizon.num_cycles > 0;
    const std::uint64_t warmup_cycles =
        by_cycles ? static_cast<std::uint64_t>(detail::kWarmupFraction * config.horizon.num_cycles)
                  : 0;
    const double warmup_time = by_cycles ? 0.0 : detail::kWarmupFraction * config.horizon.sim_time_s;

    std::vector<std::mt19937_64> source_rng;
    std::vector<std::exponential_distribution<double>> sleep_dist;
    source_rng.reserve(m);
    sleep_dist.reserve(m);
    for (int l = 0; l < m; ++l) {
        source_rng.push_back(detail::stream_rng(config.seed, detail::kSourceStreamBase + l));
        sleep_dist.emplace_back(config.rates.values[l] / mean_tx);
    }
    std::mt19937_64 tx_rng = detail::stream_rng(config.seed, detail::kTxStream);
    std::mt19937_64 col_rng = detail::stream_rng(config.seed, detail::kCollisionStream);
    const TxDistribution collision_dist = config.collision_time.value_or(config.net.tx_time);

    std::vector<AgeTracker> trackers(m);
    std::vector<detail::BatteryState> batteries;
    if (config.battery_tracking) {
        batteries.resize(m);
        for (int l = 0; l < m; ++l) {
            if (!config.sources[l].battery)
                throw std::invalid_argument("battery tracking requires a battery on every source");
            batteries[l].level_j = config.sources[l].battery->initial_level_j;
        }
    }

    // Counted-region accumulators. Cycles are i.i.d., so busy fractions use a
    // ratio-estimator standard error; peak CIs use batch means (consecutive
    // peaks of a source share its last transmission time).
    std::vector<std::uint64_t> successes(m, 0);
    std::vector<double> busy_time(m, 0.0), busy_sq(m, 0.0), busy_dur_cross(m, 0.0);
    std::uint64_t collisions = 0, counted = 0;
    std::uint64_t first_counted_cycle = std::numeric_limits<std::uint64_t>::max();
    double counted_elapsed = 0.0, dur_sq = 0.0;

    std::vector<double> sleep(m);
    double now = 0.0;
    std::uint64_t cycle = 0;
    for (;;) {
        if (by_cycles ? cycle >= config.horizon.num_cycles : now >= config.horizon.sim_time_s)
            break;

        for (int l = 0; l < m; ++l) sleep[l] = sleep_dist[l](source_rng[l]);
        int winner = 0;
        for (int l = 1; l < m; ++l)
            if (sleep[l] < sleep[winner]) winner = l;
        const double idle = sleep[winner];

        int contenders = 0;
        for (int l = 0; l < m; ++l)
            if (sleep[l] - idle <= t_s) ++contenders;
        const bool success = contenders == 1;

        const double tx = success ? config.net.tx_time.sample(tx_rng) : collision_dist.sample(col_rng);
        const double busy_start = now + idle + (physical ? t_s : 0.0);
        const double cycle_end = busy_start + tx;
        const double cycle_dur = cycle_end - now;

        const bool count_stats = by_cycles ? cycle >= warmup_cycles : now >= warmup_time;
        if (count_stats && first_counted_cycle == std::numeric_limits<std::uint64_t>::max())
            first_counted_cycle = cycle;

        if (config.battery_tracking) {
            for (int l = 0; l < m; ++l) {
                auto& bat = batteries[l];
                const auto& spec = *config.sources[l].battery;
                const bool transmitting = sleep[l] - idle <= t_s;
                if (transmitting) {
                    bat.level_j += spec.replenish_rate_w * (busy_start - now);
                    const double net_rate = spec.replenish_rate_w - spec.avg_tx_power_w;
                    if (!bat.depleted && net_rate < 0.0 && bat.level_j + net_rate * tx <= 0.0) {
                        bat.depleted = true;
                        bat.depletion_time = busy_start + bat.level_j / -net_rate;
                    }
                    bat.level_j += net_rate * tx;
                } else {
                    bat.level_j += spec.replenish_rate_w * cycle_dur;
                }
            }
        }

        if (success) {
            trackers[winner].on_delivery(cycle_end, tx, cycle);
        }

        if (count_stats) {
            ++counted;
            counted_elapsed += cycle_dur;
            dur_sq += cycle_dur * cycle_dur;
            if (success)
                ++successes[winner];
            else
                ++collisions;
            for (int l = 0; l < m; ++l) {
                if (sleep[l] - idle <= t_s) {
                    busy_time[l] += tx;
                    busy_sq[l] += tx * tx;
                    busy_dur_cross[l] += tx * cycle_dur;
                }
            }
        }

        now = cycle_end;
        ++cycle;
    }

    SimReport report;
    report.cycles_run = cycle;
    report.cycles_counted = counted;
    report.elapsed_s = now;
    report.success_cycles = successes;
    report.collision_cycles = collisions;

    const double n = static_cast<double>(counted);
    if (counted > 0) {
        report.empirical_mean_cycle_s = counted_elapsed / n;
        const double dvar = std::max(0.0, (dur_sq - n * report.empirical_mean_cycle_s *
                                                        report.empirical_mean_cycle_s) /
                                              (n - 1.0));
        report.empirical_mean_cycle_se = std::sqrt(dvar / n);
        report.collision_fraction = static_cast<double>(collisions) / n;
    }
    report.empirical_alpha.resize(m);
    report.empirical_alpha_se.resize(m);
    report.empirical_sigma.resize(m);
    report.empirical_sigma_se.resize(m);
    const double mean_dur = report.empirical_mean_cycle_s;
    for (int l = 0; l < m && counted > 1; ++l) {
        const double a = static_cast<double>(successes[l]) / n;
        report.empirical_alpha[l] = a;
        report.empirical_alpha_se[l] = std::sqrt(a * (1.0 - a) / n);
        const double s = busy_time[l] / counted_elapsed;
        report.empirical_sigma[l] = s;
        // Var of per-cycle (busy - s * duration) residuals, delta method.
        const double mean_busy = busy_time[l] / n;
        const double resid_var =
            std::max(0.0, (busy_sq[l] - 2.0 * s * busy_dur_cross[l] + s * s * dur_sq) / n -
                              (mean_busy - s * mean_dur) * (mean_busy - s * mean_dur));
        report.empirical_sigma_se[l] = std::sqrt(resid_var / n) / mean_dur;
    }

    // Peak statistics over deliveries that fall in the counted region.
    std::vector<std::vector<double>> counted_peaks(m);
    std::vector<double> weights(m);
    report.per_source_avg_peak_age_s.resize(m);
    for (int l = 0; l < m; ++l) {
        weights[l] = config.sources[l].weight;
        const auto& tr = trackers[l];
        for (std::size_t i = 0; i < tr.peaks.size(); ++i)
            if (tr.peak_cycles[i] >= first_counted_cycle) counted_peaks[l].push_back(tr.peaks[i]);
        report.per_source_avg_peak_age_s[l] = detail::batch_means(counted_peaks[l]);
        if (tr.deliveries == 0)
            report.warnings.push_back("source " + std::to_string(l) +
                                      " delivered no packet within the horizon");
    }
    report.weighted_avg_peak_age_s = detail::weighted_batch_means(counted_peaks, weights);

    if (config.battery_tracking) {
        std::vector<double> lifetimes(m);
        for (int l = 0; l < m; ++l)
            lifetimes[l] = batteries[l].depleted ? batteries[l].depletion_time : now;
        report.lifetime_achieved_s = std::move(lifetimes);
        report.warnings.push_back("sensing and sleep power are not charged to the battery");
    }

    if (trackers_out) *trackers_out = std::move(trackers);
    return report;
}

inline SimReport run_simulation(const SimConfig& config) { return run_simulation(config, nullptr); }

/// Idealized collision-free baseline: transmissions run back to back and the
/// slot winner is drawn i.i.d. from the given access probabilities.
inline SimReport run_synchronized(const SimConfig& config, const std::vector<double>& access_probs,
                                  std::vector<AgeTracker>* trackers_out = nullptr) {
    validate_sources(config.sources, config.net);
    const int m = config.net.num_sources;
    if (static_cast<int>(access_probs.size()) != m)
        throw std::invalid_argument("access probabilities: dimension mismatch");
    double prob_sum = 0.0;
    for (double a : access_probs) {
        if (!(a >= 0.0)) throw std::invalid_argument("access probabilities must be >= 0");
        prob_sum += a;
    }
    if (std::abs(prob_sum - 1.0) > 1e-9)
        throw std::invalid_argument("access probabilities must sum to 1");
    if (config.horizon.num_cycles == 0 && !(config.horizon.sim_time_s > 0.0))
        throw std::invalid_argument("horizon not set");

    const bool by_cycles = config.horizon.num_cycles > 0;
    const std::uint64_t warmup_cycles =
        by_cycles ? static_cast<std::uint64_t>(detail::kWarmupFraction * config.horizon.num_cycles)
                  : 0;
    const double warmup_time = by_cycles ? 0.0 : detail::kWarmupFraction * config.horizon.sim_time_s;

    std::mt19937_64 tx_rng = detail::stream_rng(config.seed, detail::kTxStream);
    std::mt19937_64 win_rng = detail::stream_rng(config.seed, detail::kWinnerStream);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<AgeTracker> trackers(m);
    std::vector<std::uint64_t> successes(m, 0);
    std::uint64_t counted = 0, cycle = 0;
    std::uint64_t first_counted_cycle = std::numeric_limits<std::uint64_t>::max();
    double counted_elapsed = 0.0, dur_sq = 0.0;
    std::vector<double> busy_time(m, 0.0);
    double now = 0.0;

    for (;;) {
        if (by_cycles ? cycle >= config.horizon.num_cycles : now >= config.horizon.sim_time_s)
            break;
        const double u = unif(win_rng);
        int winner = m - 1;
        double acc = 0.0;
        for (int l = 0; l < m; ++l) {
            acc += access_probs[l];
            if (u < acc) {
                winner = l;
                break;
            }
        }
        const double tx = config.net.tx_time.sample(tx_rng);
        const double cycle_end = now + tx;
        const bool count_stats = by_cycles ? cycle >= warmup_cycles : now >= warmup_time;
        if (count_stats && first_counted_cycle == std::numeric_limits<std::uint64_t>::max())
            first_counted_cycle = cycle;

        trackers[winner].on_delivery(cycle_end, tx, cycle);
        if (count_stats) {
            ++counted;
            ++successes[winner];
            counted_elapsed += tx;
            dur_sq += tx * tx;
            busy_time[winner] += tx;
        }
        now = cycle_end;
        ++cycle;
    }

    SimReport report;
    report.cycles_run = cycle;
    report.cycles_counted = counted;
    report.elapsed_s = now;
    report.success_cycles = successes;
    const double n = static_cast<double>(counted);
    report.empirical_alpha.resize(m);
    report.empirical_alpha_se.resize(m);
    report.empirical_sigma.resize(m);
    report.empirical_sigma_se.assign(m, std::numeric_limits<double>::quiet_NaN());
    if (counted > 1) {
        report.empirical_mean_cycle_s = counted_elapsed / n;
        const double dvar = std::max(0.0, (dur_sq - n * report.empirical_mean_cycle_s *
                                                        report.empirical_mean_cycle_s) /
                                              (n - 1.0));
        report.empirical_mean_cycle_se = std::sqrt(dvar / n);
        for (int l = 0; l < m; ++l) {
            const double a = static_cast<double>(successes[l]) / n;
            report.empirical_alpha[l] = a;
            report.empirical_alpha_se[l] = std::sqrt(a * (1.0 - a) / n);
            report.empirical_sigma[l] = busy_time[l] / counted_elapsed;
        }
    }

    std::vector<std::vector<double>> counted_peaks(m);
    std::vector<double> weights(m);
    report.per_source_avg_peak_age_s.resize(m);
    for (int l = 0; l < m; ++l) {
        weights[l] = config.sources[l].weight;
        const auto& tr = trackers[l];
        for (std::size_t i = 0; i < tr.peaks.size(); ++i)
            if (tr.peak_cycles[i] >= first_counted_cycle) counted_peaks[l].push_back(tr.peaks[i]);
        report.per_source_avg_peak_age_s[l] = detail::batch_means(counted_peaks[l]);
        if (tr.deliveries == 0)
            report.warnings.push_back("source " + std::to_string(l) +
                                      " delivered no packet within the horizon");
    }
    report.weighted_avg_peak_age_s = detail::weighted_batch_means(counted_peaks, weights);

    if (trackers_out) *trackers_out = std::move(trackers);
    return report;
}

/// Battery-lifetime experiment: every source needs a battery; transmissions
/// and collisions drain it at the source's transmission power while the
/// replenishment rate credits it continuously.
inline SimReport run_lifetime_experiment(const SimConfig& config) {
    for (const auto& s : config.sources)
        if (!s.battery) throw std::invalid_argument("lifetime experiment requires batteries");
    SimConfig tracked = config;
    tracked.battery_tracking = true;
    return run_simulation(tracked);
}

}  // namespace agewake
