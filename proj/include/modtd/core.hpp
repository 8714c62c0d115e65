#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace modtd {

using Rng = std::mt19937_64;

/// Derives an independent 64-bit seed from a base seed and a stream index
/// (splitmix64 finalizer). Used to give environments, agents and repetitions
/// their own random sources.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct Hyperparams {
    double alpha = 0.1;  // learning rate
    double gamma = 0.0;  // discount; single-step tasks never bootstrap
    double tau = 1.0;    // softmax temperature

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

enum class UpdateRule { conventional, modulated };

std::string_view to_string(UpdateRule rule);
UpdateRule parse_update_rule(std::string_view text);

/// Per-action value estimates for a single-state task. Entries are always finite.
class ActionValues {
public:
    /// Zero-initialised table with `n` actions (n >= 2).
    explicit ActionValues(std::size_t n);
    explicit ActionValues(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t action) const { return values_[action]; }
    std::span<const double> values() const { return values_; }

    /// Adds `step` to one entry. Throws std::out_of_range for a bad index and
    /// std::invalid_argument if the result would not be finite.
    void add(std::size_t action, double step);

    friend bool operator==(const ActionValues&, const ActionValues&) = default;

private:
    std::vector<double> values_;
};

/// Probability vector over actions: entries in [0,1] summing to 1 within 1e-9.
class PolicyDistribution {
public:
    static constexpr double kSumTolerance = 1e-9;

    /// Validating constructor; throws std::invalid_argument on a bad vector.
    explicit PolicyDistribution(std::vector<double> probs);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t action) const { return probs_[action]; }
    std::span<const double> probs() const { return probs_; }

    friend bool operator==(const PolicyDistribution&, const PolicyDistribution&) = default;

private:
    struct Trusted {};
    PolicyDistribution(std::vector<double> probs, Trusted) : probs_(std::move(probs)) {}
    friend PolicyDistribution softmax_policy(std::span<const double>, double);

    std::vector<double> probs_;
};

/// Boltzmann distribution exp(v/tau) / sum exp(v/tau), evaluated after
/// subtracting the maximum value so large tables cannot overflow.
PolicyDistribution softmax_policy(std::span<const double> values, double tau);
inline PolicyDistribution softmax_policy(const ActionValues& values, double tau) {
    return softmax_policy(values.values(), tau);
}

/// Inverse-CDF draw from `dist`. Consumes exactly one uniform variate.
std::size_t sample_action(const PolicyDistribution& dist, Rng& rng);

/// reward + gamma * v_next - v_current
constexpr double td_error(double reward, double gamma, double v_next, double v_current) {
    return reward + gamma * v_next - v_current;
}

/// values[action] += alpha * delta
void conventional_update(ActionValues& values, std::size_t action, double delta, double alpha);

/// values[action] += alpha * pi_sa * delta, where pi_sa is the probability the
/// action was selected with. pi_sa outside [0,1] is rejected.
void modulated_update(ActionValues& values, std::size_t action, double delta, double alpha,
                      double pi_sa);

/// Single-state softmax agent learning with either update rule.
class TabularAgent {
public:
    TabularAgent(std::size_t n_actions, Hyperparams hp, UpdateRule rule);

    struct Decision {
        std::size_t action;
        PolicyDistribution policy;
    };

    Decision act(Rng& rng) const;

    /// Applies one update for `action`. `pi_sa` is the probability under which
    /// the action was sampled; it is ignored by the conventional rule.
    void learn(std::size_t action, double reward, double pi_sa);

    /// Replaces the modulation factor by 1 (test hook for rule equivalence).
    void force_unit_modulation(bool on) { unit_modulation_ = on; }

    const ActionValues& values() const { return values_; }
    const Hyperparams& hyperparams() const { return hp_; }
    UpdateRule rule() const { return rule_; }

private:
    ActionValues values_;
    Hyperparams hp_;
    UpdateRule rule_;
    bool unit_modulation_ = false;
};

}  // namespace modtd
