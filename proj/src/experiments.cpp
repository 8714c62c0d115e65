#include "modtd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "modtd/environments.hpp"
#include "parallel.hpp"

namespace modtd {

namespace {

constexpr std::uint64_t kEnvStream = 0;
constexpr std::uint64_t kAgentStream = 1;
constexpr std::uint64_t kNetInitStream = 2;
constexpr std::uint64_t kSearchStream = 0x5EA2C4ULL;

// Receives one callback per step; the record sink keeps everything, the total
// sink only the running sum.
struct TotalSink {
    double total = 0.0;
    void on_step(long, int, double reward, const PolicyDistribution&) { total += reward; }
    void on_change(long, int) {}
};

struct RecordSink {
    RunRecord record;
    double cumulative = 0.0;
    void on_step(long step, int action, double reward, const PolicyDistribution& pi) {
        cumulative += reward;
        const auto p = pi.probs();
        record.rows.push_back({step, action, reward, std::vector<double>(p.begin(), p.end()), cumulative});
    }
    void on_change(long step, int previous_best) { record.changes.push_back({step, previous_best}); }
};

template <class Sink>
void simulate_bandit(const ExperimentConfig& config, std::uint64_t seed, Sink& sink) {
    Bandit bandit(config.n_choices, config.change_period, derive_seed(seed, kEnvStream));
    TabularAgent agent(static_cast<std::size_t>(config.n_choices), config.hyperparams, config.rule);
    agent.force_unit_modulation(config.unit_modulation);
    Rng rng(derive_seed(seed, kAgentStream));
    for (long t = 1; t <= config.total_steps; ++t) {
        const auto decision = agent.act(rng);
        const int arm = static_cast<int>(decision.action);
        const int best_before = bandit.best_arm();
        const long changes_before = bandit.change_count();
        const double reward = bandit.step(arm);
        agent.learn(decision.action, reward, decision.policy[decision.action]);
        sink.on_step(t, arm, reward, decision.policy);
        if (bandit.change_count() != changes_before) sink.on_change(t, best_before);
    }
}

template <class Sink>
void simulate_cardsort(const ExperimentConfig& config, std::uint64_t seed, Sink& sink) {
    CardSortOptions env_options;
    env_options.k_classes = config.n_choices;
    env_options.dim = config.dim;
    env_options.cluster_std = config.cluster_std;
    env_options.change_period = config.change_period;
    CardSort env(env_options, derive_seed(seed, kEnvStream));

    DqnOptions dqn;
    dqn.hidden = config.hidden;
    dqn.head = config.head;
    dqn.buffer_capacity = config.buffer_capacity;
    dqn.sync_period = config.sync_period;
    dqn.step_size = config.hyperparams.alpha;
    dqn.tau = config.hyperparams.tau;
    dqn.gamma = config.hyperparams.gamma;
    dqn.rule = config.rule;
    dqn.unit_modulation = config.unit_modulation;
    DqnAgent agent(static_cast<std::size_t>(config.dim), static_cast<std::size_t>(config.n_choices),
                   dqn, derive_seed(seed, kNetInitStream));
    Rng rng(derive_seed(seed, kAgentStream));
    // A transition is stored once the following point is known.
    std::optional<Transition> pending;
    for (long t = 1; t <= config.total_steps; ++t) {
        const auto& trial = env.present();
        if (pending) {
            pending->next_point = trial.point;
            agent.observe(std::move(*pending));
        }
        const auto decision = agent.act(trial.point, rng);
        pending = Transition{trial.point, decision.action, 0.0, decision.policy[decision.action], {}};
        const double reward = env.respond(static_cast<int>(decision.action));
        pending->reward = reward;
        sink.on_step(t, static_cast<int>(decision.action), reward, decision.policy);
        if (t % config.change_period == 0) sink.on_change(t, -1);
    }
}

template <class Sink>
void simulate(const ExperimentConfig& config, std::uint64_t seed, Sink& sink) {
    config.validate();
    if (config.task == Task::bandit) {
        simulate_bandit(config, seed, sink);
    } else {
        simulate_cardsort(config, seed, sink);
    }
}

std::vector<std::uint64_t> repetition_seeds(std::uint64_t base, int reps) {
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) seeds[static_cast<std::size_t>(r)] = repetition_seed(base, r);
    return seeds;
}

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

std::string_view to_string(Task task) { return task == Task::bandit ? "bandit" : "cardsort"; }

Task parse_task(std::string_view text) {
    if (text == "bandit") return Task::bandit;
    if (text == "cardsort") return Task::cardsort;
    throw std::invalid_argument("unknown task '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
    const auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (n_choices < 2) {
        fail(std::string(task == Task::bandit ? "arms" : "classes") + " must be >= 2, got " +
             std::to_string(n_choices));
    }
    if (change_period < 1) fail("change_period must be >= 1");
    if (total_steps < 0) fail("steps must be >= 0");
    // An empty run is allowed; any non-empty run must span a full regime.
    if (total_steps > 0 && total_steps < change_period) fail("steps must be >= change_period");
    if (repetitions < 1) fail("reps must be >= 1");
    hyperparams.validate();
    if (task == Task::cardsort) {
        if (dim < 1) fail("dim must be >= 1");
        if (!(cluster_std >= 0.0) || !std::isfinite(cluster_std)) fail("cluster_std must be >= 0");
        if (hidden < 1) fail("hidden must be >= 1");
        if (buffer_capacity < 1) fail("buffer_capacity must be >= 1");
        if (sync_period < 1) fail("sync_period must be >= 1");
    }
}

ExperimentConfig ExperimentConfig::bandit_defaults() {
    ExperimentConfig c;
    c.task = Task::bandit;
    c.n_choices = 7;
    c.hyperparams = {0.1, 0.9, 1.0};
    return c;
}

ExperimentConfig ExperimentConfig::cardsort_defaults() {
    ExperimentConfig c;
    c.task = Task::cardsort;
    c.n_choices = 4;
    c.hyperparams = {0.05, 0.0, 1.0};
    return c;
}

bool RunRecord::consistent() const {
    double sum = 0.0;
    for (const auto& row : rows) {
        sum += row.reward;
        if (row.cumulative_reward != sum) return false;
        const double total = std::accumulate(row.pi.begin(), row.pi.end(), 0.0);
        if (std::abs(total - 1.0) > PolicyDistribution::kSumTolerance) return false;
    }
    return true;
}

std::uint64_t repetition_seed(std::uint64_t base, int rep) {
    return derive_seed(base, static_cast<std::uint64_t>(rep));
}

RunRecord run_episode(const ExperimentConfig& config, std::uint64_t seed) {
    RecordSink sink;
    sink.record.seed = seed;
    sink.record.rows.reserve(static_cast<std::size_t>(std::max(config.total_steps, 0)));
    simulate(config, seed, sink);
    return std::move(sink.record);
}

double run_total_reward(const ExperimentConfig& config, std::uint64_t seed) {
    TotalSink sink;
    simulate(config, seed, sink);
    return sink.total;
}

HyperparamGrid HyperparamGrid::standard() {
    HyperparamGrid grid;
    for (int i = 0; i <= 20; ++i) grid.alphas.push_back(i / 10.0);
    grid.taus = {0.5, 1.0, 2.0};
    return grid;
}

HyperparamGrid HyperparamGrid::dqn_standard() {
    return {{0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5}, {0.5, 1.0, 2.0}};
}

HyperparamGrid HyperparamGrid::for_task(Task task) {
    return task == Task::bandit ? standard() : dqn_standard();
}

std::uint64_t default_search_seed(std::uint64_t eval_seed) {
    return derive_seed(eval_seed, kSearchStream);
}

GridResult grid_search(const ExperimentConfig& config, const HyperparamGrid& grid,
                       std::uint64_t search_seed) {
    if (grid.alphas.empty() || grid.taus.empty()) {
        throw std::invalid_argument("hyperparameter grid is empty");
    }
    config.validate();
    const auto search = repetition_seeds(search_seed, config.repetitions);
    const auto eval = repetition_seeds(config.seed, config.repetitions);
    const std::set<std::uint64_t> eval_set(eval.begin(), eval.end());
    for (auto s : search) {
        if (eval_set.count(s)) {
            throw std::invalid_argument("search_seed must give instances disjoint from the evaluation seed");
        }
    }

    GridResult result;
    for (double a : sorted_unique(grid.alphas)) {
        for (double t : sorted_unique(grid.taus)) {
            Hyperparams hp = config.hyperparams;
            hp.alpha = a;
            hp.tau = t;
            hp.validate();
            result.cells.push_back({hp, 0.0});
        }
    }

    const std::size_t reps = search.size();
    std::vector<double> totals(result.cells.size() * reps);
    detail::parallel_for(totals.size(), [&](std::size_t job) {
        ExperimentConfig cell = config;
        cell.hyperparams = result.cells[job / reps].hyperparams;
        try {
            totals[job] = run_total_reward(cell, search[job % reps]);
        } catch (const DivergenceError&) {
            totals[job] = -std::numeric_limits<double>::infinity();
        }
    });

    for (std::size_t c = 0; c < result.cells.size(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < reps; ++r) sum += totals[c * reps + r];
        result.cells[c].mean_total_reward = sum / static_cast<double>(reps);
    }
    // Cells are in (alpha, tau) order, so a strict comparison keeps the
    // smallest alpha, then the smallest tau, among ties.
    std::size_t best = 0;
    for (std::size_t c = 1; c < result.cells.size(); ++c) {
        if (result.cells[c].mean_total_reward > result.cells[best].mean_total_reward) best = c;
    }
    result.best = result.cells[best].hyperparams;
    result.best_score = result.cells[best].mean_total_reward;
    return result;
}

std::vector<PreferenceTime> time_to_preference(const RunRecord& record, int window,
                                               double threshold) {
    if (window < 1) throw std::invalid_argument("moving-average window must be >= 1");
    std::vector<PreferenceTime> out;
    const auto& rows = record.rows;
    if (rows.empty()) return out;
    const long last_step = rows.back().step;
    const std::size_t n = rows.front().pi.size();

    for (std::size_t c = 0; c < record.changes.size(); ++c) {
        const auto& change = record.changes[c];
        if (change.step >= last_step) continue;
        const long regime_end =
            c + 1 < record.changes.size() ? std::min(record.changes[c + 1].step, last_step) : last_step;
        PreferenceTime result{change.step, regime_end - change.step, true};
        for (long t = change.step + 1; t <= regime_end; ++t) {
            const long first = std::max<long>(1, t - window + 1);
            const double count = static_cast<double>(t - first + 1);
            double best = 0.0;
            for (std::size_t arm = 0; arm < n; ++arm) {
                if (static_cast<int>(arm) == change.previous_best) continue;
                double sum = 0.0;
                for (long s = first; s <= t; ++s) sum += rows[static_cast<std::size_t>(s - 1)].pi[arm];
                best = std::max(best, sum / count);
            }
            if (best > threshold) {
                result.steps = t - change.step;
                result.censored = false;
                break;
            }
        }
        out.push_back(result);
    }
    return out;
}

double reward_per_step(const RunRecord& record) {
    if (record.rows.empty()) throw std::domain_error("reward per step of an empty record");
    double total = 0.0;
    for (const auto& row : record.rows) total += row.reward;
    return total / static_cast<double>(record.rows.size());
}

Summary aggregate(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("aggregate of an empty sample");
    Summary s;
    s.count = values.size();
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
    if (s.count > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(s.count - 1));
        s.ci95_halfwidth = 1.96 * sd / std::sqrt(static_cast<double>(s.count));
    }
    return s;
}

std::vector<Summary> aggregate_cumulative(std::span<const RunRecord> records) {
    if (records.empty()) throw std::invalid_argument("aggregate of an empty record set");
    const std::size_t steps = records.front().rows.size();
    for (const auto& r : records) {
        if (r.rows.size() != steps) throw std::invalid_argument("records differ in length");
    }
    std::vector<Summary> out(steps);
    std::vector<double> column(records.size());
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t r = 0; r < records.size(); ++r) column[r] = records[r].rows[t].cumulative_reward;
        out[t] = aggregate(column);
    }
    return out;
}

RuleEvaluation evaluate_rule(ExperimentConfig config, UpdateRule rule,
                             const std::optional<HyperparamGrid>& grid, std::uint64_t search_seed) {
    config.rule = rule;
    RuleEvaluation eval;
    eval.rule = rule;
    if (grid) {
        eval.search = grid_search(config, *grid, search_seed);
        config.hyperparams = eval.search->best;
    }
    config.validate();
    eval.hyperparams = config.hyperparams;
    eval.records.resize(static_cast<std::size_t>(config.repetitions));
    detail::parallel_for(eval.records.size(), [&](std::size_t r) {
        eval.records[r] = run_episode(config, repetition_seed(config.seed, static_cast<int>(r)));
    });
    return eval;
}

std::vector<ChangePreference> preference_by_change(std::span<const RunRecord> records) {
    std::vector<std::vector<PreferenceTime>> per_run;
    std::size_t changes = 0;
    for (const auto& r : records) {
        per_run.push_back(time_to_preference(r));
        changes = std::max(changes, per_run.back().size());
    }
    std::vector<ChangePreference> out;
    for (std::size_t c = 0; c < changes; ++c) {
        std::vector<double> steps;
        std::size_t censored = 0;
        for (const auto& run : per_run) {
            if (c >= run.size()) continue;
            steps.push_back(static_cast<double>(run[c].steps));
            censored += run[c].censored ? 1 : 0;
        }
        out.push_back({static_cast<int>(c), aggregate(steps),
                       static_cast<double>(censored) / static_cast<double>(steps.size())});
    }
    return out;
}

std::vector<double> mean_preference_per_run(std::span<const RunRecord> records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const auto times = time_to_preference(r);
        if (times.empty()) continue;
        double sum = 0.0;
        for (const auto& t : times) sum += static_cast<double>(t.steps);
        out.push_back(sum / static_cast<double>(times.size()));
    }
    return out;
}

std::vector<SweepRow> sweep_choices(const ExperimentConfig& base, std::span<const int> n_values,
                                    std::span<const UpdateRule> rules, const HyperparamGrid& grid,
                                    std::uint64_t search_seed) {
    if (n_values.empty()) throw std::invalid_argument("n-values must not be empty");
    if (rules.empty()) throw std::invalid_argument("no update rules requested");
    for (int n : n_values) {
        if (n < 2) throw std::invalid_argument("n-values must all be >= 2, got " + std::to_string(n));
    }
    std::vector<SweepRow> rows;
    for (int n : n_values) {
        ExperimentConfig config = base;
        config.n_choices = n;
        for (UpdateRule rule : rules) {
            const auto eval = evaluate_rule(config, rule, grid, search_seed);
            SweepRow row;
            row.task = config.task;
            row.rule = rule;
            row.n = n;
            row.hyperparams = eval.hyperparams;
            std::vector<double> rps;
            for (const auto& r : eval.records) rps.push_back(reward_per_step(r));
            row.reward_per_step = aggregate(rps);
            if (config.task == Task::bandit) {
                const auto ttp = mean_preference_per_run(eval.records);
                if (!ttp.empty()) row.time_to_preference = aggregate(ttp);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace modtd
