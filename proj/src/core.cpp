#include "modtd/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace modtd {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void Hyperparams::validate() const {
    if (!(alpha >= 0.0 && alpha <= 2.0)) {
        throw std::invalid_argument("alpha must lie in [0, 2], got " + std::to_string(alpha));
    }
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("gamma must lie in [0, 1], got " + std::to_string(gamma));
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw std::invalid_argument("tau must be positive, got " + std::to_string(tau));
    }
}

std::string_view to_string(UpdateRule rule) {
    return rule == UpdateRule::conventional ? "conventional" : "modulated";
}

UpdateRule parse_update_rule(std::string_view text) {
    if (text == "conventional") return UpdateRule::conventional;
    if (text == "modulated") return UpdateRule::modulated;
    throw std::invalid_argument("unknown update rule '" + std::string(text) + "'");
}

ActionValues::ActionValues(std::size_t n) : values_(n, 0.0) {
    if (n < 2) throw std::invalid_argument("an action table needs at least 2 actions");
}

ActionValues::ActionValues(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw std::invalid_argument("an action table needs at least 2 actions");
    for (double v : values_) {
        if (!std::isfinite(v)) throw std::invalid_argument("action values must be finite");
    }
}

void ActionValues::add(std::size_t action, double step) {
    if (action >= values_.size()) {
        throw std::out_of_range("action " + std::to_string(action) + " out of range for " +
                                std::to_string(values_.size()) + " actions");
    }
    const double updated = values_[action] + step;
    if (!std::isfinite(updated)) throw std::invalid_argument("update produced a non-finite value");
    values_[action] = updated;
}

PolicyDistribution::PolicyDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw std::invalid_argument("empty policy distribution");
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw std::invalid_argument("probabilities sum to " + std::to_string(sum));
    }
}

PolicyDistribution softmax_policy(std::span<const double> values, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
    if (values.empty()) throw std::invalid_argument("softmax over an empty value vector");
    for (double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument("softmax input must be finite");
    }
    const double vmax = *std::max_element(values.begin(), values.end());
    std::vector<double> probs(values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        probs[i] = std::exp((values[i] - vmax) / tau);
        total += probs[i];
    }
    // total >= 1 because the maximal entry contributes exp(0).
    for (double& p : probs) p /= total;
    return PolicyDistribution(std::move(probs), PolicyDistribution::Trusted{});
}

std::size_t sample_action(const PolicyDistribution& dist, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    const auto probs = dist.probs();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = i;
        acc += probs[i];
        if (u < acc) return i;
    }
    // Rounding left u just above the accumulated mass.
    return last_positive;
}

void conventional_update(ActionValues& values, std::size_t action, double delta, double alpha) {
    values.add(action, alpha * delta);
}

void modulated_update(ActionValues& values, std::size_t action, double delta, double alpha,
                      double pi_sa) {
    if (!(pi_sa >= 0.0 && pi_sa <= 1.0)) {
        throw std::invalid_argument("pi_sa must lie in [0, 1], got " + std::to_string(pi_sa));
    }
    values.add(action, alpha * pi_sa * delta);
}

TabularAgent::TabularAgent(std::size_t n_actions, Hyperparams hp, UpdateRule rule)
    : values_(n_actions), hp_(hp), rule_(rule) {
    hp_.validate();
}

TabularAgent::Decision TabularAgent::act(Rng& rng) const {
    auto policy = softmax_policy(values_, hp_.tau);
    const auto action = sample_action(policy, rng);
    return {action, std::move(policy)};
}

void TabularAgent::learn(std::size_t action, double reward, double pi_sa) {
    if (action >= values_.size()) throw std::out_of_range("action out of range");
    // Single-state tasks: the successor state is the same state, whose value
    // is the best action value before this update.
    const auto v = values_.values();
    const double v_next = *std::max_element(v.begin(), v.end());
    const double delta = td_error(reward, hp_.gamma, v_next, values_[action]);
    if (rule_ == UpdateRule::conventional) {
        conventional_update(values_, action, delta, hp_.alpha);
    } else {
        modulated_update(values_, action, delta, hp_.alpha, unit_modulation_ ? 1.0 : pi_sa);
    }
}

}  // namespace modtd
