#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "modtd/core.hpp"

namespace modtd {

inline constexpr double kHighRewardProb = 0.9;
inline constexpr double kNoRewardProb = 0.0;
inline constexpr double kFillLow = 0.25;
inline constexpr double kFillHigh = 0.75;

/// Rotating n-armed bandit with +1/-1 rewards.
///
/// The base list is [0.9, 0.0, u_1 .. u_{n-2}] with u_i ~ U(0.25, 0.75), drawn
/// once. Arm i currently pays with probability base[(i + change_count) mod n].
/// Since 0.0 sits right after 0.9, each rotation hands the old best arm the
/// zero probability. Rotation fires after the reward of every step that is a
/// multiple of change_period.
class Bandit {
public:
    Bandit(int n_arms, int change_period, std::uint64_t seed);
    /// Uses a caller-supplied base list, which must still start 0.9, 0.0 and
    /// keep the rest in [0.25, 0.75].
    Bandit(std::vector<double> base_probs, int change_period, std::uint64_t seed);

    int n_arms() const { return static_cast<int>(base_.size()); }
    int change_period() const { return change_period_; }
    long step_count() const { return step_; }
    long change_count() const { return change_count_; }
    std::span<const double> base_probs() const { return base_; }

    double arm_probability(int arm) const;
    std::vector<double> arm_probabilities() const;
    /// Arm currently holding the 0.9 probability.
    int best_arm() const;

    /// Pulls `arm`, returns +1 or -1 and advances the step counter.
    /// Throws std::out_of_range for an invalid arm.
    double step(int arm);

    void rotate() { ++change_count_; }

private:
    std::vector<double> base_;
    int change_period_;
    long step_ = 0;
    long change_count_ = 0;
    Rng rng_;
};

struct CardSortOptions {
    int k_classes = 4;
    int dim = 2;
    double cluster_std = 0.25;
    int change_period = 100;

    void validate() const;
};

/// Classification task with periodically scrambled labels.
///
/// k Gaussian clusters with standard-normal centers. Each trial draws a cluster
/// uniformly, emits a point around its center, and scores the guess against the
/// cluster's current label. Every change_period trials the labels are composed
/// with a random derangement so no cluster keeps its label.
class CardSort {
public:
    CardSort(const CardSortOptions& options, std::uint64_t seed);

    struct Trial {
        std::vector<double> point;
        int cluster;
        int true_label;
    };

    const CardSortOptions& options() const { return options_; }
    int k_classes() const { return options_.k_classes; }
    int dim() const { return options_.dim; }
    long step_count() const { return step_; }
    const std::vector<std::vector<double>>& centers() const { return centers_; }
    std::span<const int> label_perm() const { return label_perm_; }

    /// Draws the next point. The trial stays pending until respond().
    const Trial& present();

    /// Scores the pending trial: +1 if guess matches its label, else -1.
    /// Advances the step counter and scrambles at multiples of change_period.
    /// Throws std::out_of_range for a bad guess, std::logic_error with no
    /// pending trial.
    double respond(int guess);

    void scramble();

private:
    CardSortOptions options_;
    std::vector<std::vector<double>> centers_;
    std::vector<int> label_perm_;
    long step_ = 0;
    Trial pending_;
    bool has_pending_ = false;
    Rng rng_;
};

}  // namespace modtd
