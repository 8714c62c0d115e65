#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "modtd/core.hpp"
#include "modtd/neural.hpp"

namespace modtd {

enum class Task { bandit, cardsort };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);

struct ExperimentConfig {
    Task task = Task::bandit;
    UpdateRule rule = UpdateRule::modulated;
    int n_choices = 7;  // arms (bandit) or classes (card sort)
    int change_period = 100;
    int total_steps = 1500;
    int repetitions = 20;
    std::uint64_t seed = 1;
    // For the card-sort DQN, alpha is the gradient step size.
    Hyperparams hyperparams{};

    // Card-sort geometry and network shape.
    int dim = 2;
    double cluster_std = 0.25;
    std::size_t hidden = 20;
    OutputHead head = OutputHead::linear;
    std::size_t buffer_capacity = 10;
    int sync_period = 5;

    /// Pins the modulation factor to 1 (rule-equivalence checks only).
    bool unit_modulation = false;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    /// 7-armed bandit, Q-learning discount 0.9.
    static ExperimentConfig bandit_defaults();
    /// 4-class card sort, one-step targets, SGD step 0.05.
    static ExperimentConfig cardsort_defaults();
};

struct StepRow {
    long step = 0;  // 1-based
    int action = 0;
    double reward = 0.0;
    std::vector<double> pi;  // policy at action time
    double cumulative_reward = 0.0;
};

struct RegimeChange {
    long step = 0;           // change happens after this step's reward
    int previous_best = -1;  // bandit arm that paid 0.9 before the change; -1 for card sort
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::vector<StepRow> rows;
    std::vector<RegimeChange> changes;

    /// Cumulative column equals the running sum of rewards, and every pi row
    /// sums to one.
    bool consistent() const;
};

/// Seed of repetition `rep` in the stream rooted at `base`.
std::uint64_t repetition_seed(std::uint64_t base, int rep);

/// Runs the full policy -> sample -> environment -> update loop.
RunRecord run_episode(const ExperimentConfig& config, std::uint64_t seed);

/// Sum of rewards only; same trajectory as run_episode without the per-step log.
double run_total_reward(const ExperimentConfig& config, std::uint64_t seed);

struct HyperparamGrid {
    std::vector<double> alphas;
    std::vector<double> taus;

    /// alpha in {0.0, 0.1, ..., 2.0}, tau in {0.5, 1, 2}.
    static HyperparamGrid standard();
    /// SGD step sizes for the card-sort network; tau in {0.5, 1, 2}.
    static HyperparamGrid dqn_standard();
    /// standard() for the bandit, dqn_standard() for card sort.
    static HyperparamGrid for_task(Task task);
};

struct GridCell {
    Hyperparams hyperparams;
    double mean_total_reward = 0.0;
};

struct GridResult {
    Hyperparams best;
    double best_score = 0.0;
    std::vector<GridCell> cells;  // sorted by (alpha, tau)
};

/// Scores each (alpha, tau) cell by the mean total reward over
/// config.repetitions runs seeded from `search_seed`, and returns the best cell
/// (ties go to smaller alpha, then smaller tau). Throws std::invalid_argument
/// for an empty grid or when the search instances would coincide with the
/// evaluation instances seeded from config.seed.
GridResult grid_search(const ExperimentConfig& config, const HyperparamGrid& grid,
                       std::uint64_t search_seed);

/// Seed used for hyperparameter search when only an evaluation seed is given.
std::uint64_t default_search_seed(std::uint64_t eval_seed);

struct PreferenceTime {
    long change_step = 0;
    long steps = 0;  // duration, or the regime length when censored
    bool censored = false;
};

inline constexpr int kPreferenceWindow = 10;
inline constexpr double kPreferenceThreshold = 0.5;

/// Steps after each regime change until the trailing moving average of some
/// arm's selection probability (excluding the previous best arm) exceeds the
/// threshold. Changes with no following steps in the record are skipped.
std::vector<PreferenceTime> time_to_preference(const RunRecord& record,
                                               int window = kPreferenceWindow,
                                               double threshold = kPreferenceThreshold);

/// Throws std::domain_error on an empty record.
double reward_per_step(const RunRecord& record);

struct Summary {
    double mean = 0.0;
    double ci95_halfwidth = 0.0;  // 1.96 * sample std / sqrt(n)
    std::size_t count = 0;
};

/// Throws std::invalid_argument on an empty sample.
Summary aggregate(std::span<const double> values);

/// Mean cumulative reward and CI at every step across repetitions.
std::vector<Summary> aggregate_cumulative(std::span<const RunRecord> records);

/// Evaluation records for one rule with hyperparameters either given or searched.
struct RuleEvaluation {
    UpdateRule rule = UpdateRule::modulated;
    Hyperparams hyperparams;
    std::optional<GridResult> search;
    std::vector<RunRecord> records;
};

/// If `grid` is set, searches on instances from `search_seed` first; then runs
/// config.repetitions evaluation episodes seeded from config.seed.
RuleEvaluation evaluate_rule(ExperimentConfig config, UpdateRule rule,
                             const std::optional<HyperparamGrid>& grid, std::uint64_t search_seed);

struct ChangePreference {
    int change_index = 0;
    Summary steps;
    double censored_fraction = 0.0;
};

/// Time-to-preference per regime change, pooled over repetitions.
std::vector<ChangePreference> preference_by_change(std::span<const RunRecord> records);

/// Per-repetition mean time-to-preference (censored values included).
std::vector<double> mean_preference_per_run(std::span<const RunRecord> records);

struct SweepRow {
    Task task = Task::bandit;
    UpdateRule rule = UpdateRule::modulated;
    int n = 0;
    Hyperparams hyperparams;
    Summary reward_per_step;
    std::optional<Summary> time_to_preference;  // bandit only
};

/// Grid search then evaluation for every (n, rule); rows ordered by n, then rule.
std::vector<SweepRow> sweep_choices(const ExperimentConfig& base, std::span<const int> n_values,
                                    std::span<const UpdateRule> rules, const HyperparamGrid& grid,
                                    std::uint64_t search_seed);

}  // namespace modtd
