#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace agewake {

/// Battery parameters of a source. Energy in joules, power in watts.
struct BatterySpec {
    double initial_level_j = 0.0;    // B_l
    double target_lifetime_s = 0.0;  // D_l
    double replenish_rate_w = 0.0;   // R_l
    double avg_tx_power_w = 0.0;     // average power drawn while transmitting

    void validate() const {
        if (!(initial_level_j >= 0.0))
            throw std::invalid_argument("battery: initial level must be >= 0");
        if (!(target_lifetime_s > 0.0))
            throw std::invalid_argument("battery: target lifetime must be > 0");
        if (!(replenish_rate_w >= 0.0))
            throw std::invalid_argument("battery: replenishment rate must be >= 0");
        if (!(avg_tx_power_w > 0.0))
            throw std::invalid_argument("battery: average transmission power must be > 0");
    }
};

/// One status-update source: its priority weight and the fraction of time it
/// may spend transmitting (target energy efficiency).
struct SourceSpec {
    double weight = 1.0;             // w_l > 0
    double target_efficiency = 1.0;  // b_l > 0; values >= 1 make the energy constraint vacuous
    std::optional<BatterySpec> battery;

    void validate() const {
        if (!(weight > 0.0)) throw std::invalid_argument("source: weight must be > 0");
        if (!(target_efficiency > 0.0))
            throw std::invalid_argument("source: target efficiency must be > 0");
        if (battery) battery->validate();
    }
};

enum class TxKind { deterministic, exponential, lognormal };

/// Distribution of a transmission/collision duration. Parameterized so that
/// the distribution mean always equals mean().
class TxDistribution {
  public:
    TxDistribution() = default;

    static TxDistribution deterministic(double mean_s) { return {TxKind::deterministic, mean_s, 0.0}; }

    static TxDistribution exponential(double mean_s) { return {TxKind::exponential, mean_s, 0.0}; }

    /// sigma is the standard deviation of the underlying normal; the location
    /// parameter is derived from the requested mean.
    static TxDistribution lognormal(double mean_s, double sigma) {
        if (!(sigma > 0.0)) throw std::invalid_argument("lognormal sigma must be > 0");
        return {TxKind::lognormal, mean_s, sigma};
    }

    TxKind kind() const { return kind_; }
    double mean() const { return mean_s_; }
    double log_sigma() const { return log_sigma_; }

    template <class Urbg>
    double sample(Urbg& gen) const {
        switch (kind_) {
        case TxKind::deterministic:
            return mean_s_;
        case TxKind::exponential:
            return std::exponential_distribution<double>(1.0 / mean_s_)(gen);
        case TxKind::lognormal: {
            const double mu = std::log(mean_s_) - 0.5 * log_sigma_ * log_sigma_;
            return std::lognormal_distribution<double>(mu, log_sigma_)(gen);
        }
        }
        return mean_s_;
    }

  private:
    TxDistribution(TxKind kind, double mean_s, double log_sigma)
        : kind_(kind), mean_s_(mean_s), log_sigma_(log_sigma) {
        if (!(mean_s > 0.0)) throw std::invalid_argument("transmission time mean must be > 0");
    }

    TxKind kind_ = TxKind::deterministic;
    double mean_s_ = 1.0;
    double log_sigma_ = 0.0;
};

inline const char* to_string(TxKind k) {
    switch (k) {
    case TxKind::deterministic: return "deterministic";
    case TxKind::exponential: return "exponential";
    case TxKind::lognormal: return "lognormal";
    }
    return "?";
}

/// Shared-channel parameters. The sensing ratio is t_s / E[T]; the analysis
/// depends on t_s and E[T] only through this ratio.
struct NetworkSpec {
    int num_sources = 1;            // M
    double sensing_ratio = 0.0;     // epsilon = t_s / E[T]
    double mean_tx_time_s = 1.0;    // E[T]
    TxDistribution tx_time = TxDistribution::deterministic(1.0);

    double sensing_time_s() const { return sensing_ratio * mean_tx_time_s; }

    void validate() const {
        if (num_sources < 1) throw std::invalid_argument("network: need at least one source");
        if (!(sensing_ratio >= 0.0)) throw std::invalid_argument("network: sensing ratio must be >= 0");
        if (!(mean_tx_time_s > 0.0))
            throw std::invalid_argument("network: mean transmission time must be > 0");
        if (std::abs(tx_time.mean() - mean_tx_time_s) > 1e-9 * mean_tx_time_s)
            throw std::invalid_argument("network: transmission-time distribution mean disagrees with mean_tx_time");
    }
};

enum class RateProvenance { closed_form, oracle, fixed_rate, external };

inline const char* to_string(RateProvenance p) {
    switch (p) {
    case RateProvenance::closed_form: return "closed_form";
    case RateProvenance::oracle: return "oracle";
    case RateProvenance::fixed_rate: return "fixed_rate";
    case RateProvenance::external: return "external";
    }
    return "?";
}

/// Normalized sleep-rate vector r: source l sleeps for exponential durations
/// with mean E[T] / r_l.
struct SleepRates {
    std::vector<double> values;
    RateProvenance provenance = RateProvenance::external;

    void validate(int num_sources) const {
        if (static_cast<int>(values.size()) != num_sources)
            throw std::invalid_argument("sleep rates: dimension mismatch with network");
        for (double r : values)
            if (!(r > 0.0)) throw std::invalid_argument("sleep rates: every rate must be > 0");
    }
};

inline void validate_sources(const std::vector<SourceSpec>& sources, const NetworkSpec& net) {
    if (sources.empty()) throw std::invalid_argument("need at least one source");
    if (static_cast<int>(sources.size()) != net.num_sources)
        throw std::invalid_argument("source list: dimension mismatch with network");
    for (const auto& s : sources) s.validate();
    net.validate();
}

}  // namespace agewake
