#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "modtd/cli.hpp"

namespace modtd::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kPerStepHeader = "task,rule,step,mean_cum_reward,ci95_halfwidth,reps";
const char* const kPreferenceHeader =
    "task,rule,n,change_index,mean_steps_to_preference,ci95_halfwidth,censored_fraction";
const char* const kSweepHeader =
    "task,rule,n,reward_per_step_mean,reward_per_step_ci95,ttp_mean,ttp_ci95";

// 17 significant digits round-trip every double.
std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvFile {
public:
    CsvFile(std::uint64_t seed, std::uint64_t search_seed, const char* header) {
        text_ << "# seed=" << seed << " search_seed=" << search_seed << '\n' << header << '\n';
    }

    template <class... Fields>
    void row(const Fields&... fields) {
        std::size_t i = 0;
        ((text_ << (i++ ? "," : "") << fields), ...);
        text_ << '\n';
        ++rows_;
    }

    std::string str() const { return text_.str(); }
    std::size_t rows() const { return rows_; }

private:
    std::ostringstream text_;
    std::size_t rows_ = 0;
};

struct PendingFile {
    fs::path path;
    std::string content;
    std::size_t data_rows = 0;  // CSV only
    const char* header = nullptr;
};

void write_and_check(const PendingFile& f) {
    {
        std::ofstream os(f.path, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + f.path.string() + " for writing");
        os << f.content;
        os.flush();
        if (!os) throw std::runtime_error("failed writing " + f.path.string());
    }
    std::ifstream is(f.path, std::ios::binary);
    const std::string back((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (back != f.content) throw std::runtime_error("read-back mismatch for " + f.path.string());
    if (f.header) {
        std::istringstream lines(back);
        std::string seed_line, header_line;
        std::getline(lines, seed_line);
        std::getline(lines, header_line);
        std::size_t rows = 0;
        for (std::string line; std::getline(lines, line);) ++rows;
        if (header_line != f.header || rows != f.data_rows) {
            throw std::runtime_error("validation failed for " + f.path.string());
        }
    }
}

json hyperparams_json(const Hyperparams& hp, const std::optional<GridResult>& search) {
    json j{{"alpha", hp.alpha}, {"tau", hp.tau}, {"gamma", hp.gamma}};
    if (search) j["search_mean_total_reward"] = search->best_score;
    return j;
}

json seeds_json(const ExperimentConfig& c, std::uint64_t search_seed) {
    json reps = json::array();
    json search_reps = json::array();
    for (int r = 0; r < c.repetitions; ++r) {
        reps.push_back(repetition_seed(c.seed, r));
        search_reps.push_back(repetition_seed(search_seed, r));
    }
    return {{"eval", c.seed},
            {"search", search_seed},
            {"eval_repetitions", reps},
            {"search_repetitions", search_reps}};
}

std::vector<PendingFile> run_single(const RunOptions& o, std::uint64_t search_seed, std::ostream& log) {
    const auto& c = o.config;
    const std::string task(to_string(c.task));
    CsvFile per_step(c.seed, search_seed, kPerStepHeader);
    CsvFile preference(c.seed, search_seed, kPreferenceHeader);
    json selected = json::object();

    for (UpdateRule rule : o.rules) {
        const std::string name(to_string(rule));
        log << task << ": searching and evaluating the " << name << " rule\n";
        const auto eval = evaluate_rule(c, rule, o.grid, search_seed);
        selected[name] = hyperparams_json(eval.hyperparams, eval.search);
        if (c.total_steps > 0) {
            const auto cum = aggregate_cumulative(eval.records);
            for (std::size_t t = 0; t < cum.size(); ++t) {
                per_step.row(task, name, t + 1, num(cum[t].mean), num(cum[t].ci95_halfwidth), cum[t].count);
            }
        }
        if (c.task == Task::bandit) {
            for (const auto& p : preference_by_change(eval.records)) {
                preference.row(task, name, c.n_choices, p.change_index, num(p.steps.mean),
                               num(p.steps.ci95_halfwidth), num(p.censored_fraction));
            }
        }
    }

    std::vector<PendingFile> files;
    files.push_back({o.out / (task + "_per_step.csv"), per_step.str(), per_step.rows(), kPerStepHeader});
    if (c.task == Task::bandit) {
        files.push_back({o.out / (task + "_time_to_preference.csv"), preference.str(), preference.rows(),
                         kPreferenceHeader});
    }
    const json manifest{{"config", to_json(o)},
                        {"seeds", seeds_json(c, search_seed)},
                        {"selected_hyperparams", selected},
                        {"version", kVersion}};
    files.push_back({o.out / (task + "_manifest.json"), manifest.dump(2) + "\n", 0, nullptr});
    return files;
}

std::vector<PendingFile> run_sweep(const RunOptions& o, std::uint64_t search_seed, std::ostream& log) {
    const auto& c = o.config;
    const std::string task(to_string(c.task));
    log << "sweep over " << o.n_values.size() << " choice counts for " << task << "\n";
    const auto rows = sweep_choices(c, o.n_values, o.rules, o.grid, search_seed);

    CsvFile table(c.seed, search_seed, kSweepHeader);
    json selected = json::object();
    for (const auto& r : rows) {
        const std::string name(to_string(r.rule));
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const double ttp_mean = r.time_to_preference ? r.time_to_preference->mean : nan;
        const double ttp_ci = r.time_to_preference ? r.time_to_preference->ci95_halfwidth : nan;
        table.row(task, name, r.n, num(r.reward_per_step.mean), num(r.reward_per_step.ci95_halfwidth),
                  num(ttp_mean), num(ttp_ci));
        selected[name][std::to_string(r.n)] = hyperparams_json(r.hyperparams, std::nullopt);
    }
    const json manifest{{"config", to_json(o)},
                        {"seeds", seeds_json(c, search_seed)},
                        {"selected_hyperparams", selected},
                        {"version", kVersion}};
    return {{o.out / ("sweep_" + task + ".csv"), table.str(), table.rows(), kSweepHeader},
            {o.out / ("sweep_" + task + "_manifest.json"), manifest.dump(2) + "\n", 0, nullptr}};
}

}  // namespace

Outputs execute(const RunOptions& options, std::ostream& log) {
    options.validate();
    fs::create_directories(options.out);
    const auto search_seed = default_search_seed(options.config.seed);
    const auto files = options.command == Command::sweep ? run_sweep(options, search_seed, log)
                                                          : run_single(options, search_seed, log);
    Outputs out;
    for (const auto& f : files) {
        write_and_check(f);
        out.files.push_back(f.path);
        log << "wrote " << f.path.string() << "\n";
    }
    return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Modulated TD-error experiment harness"};
    app.name("modtd");
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    json doc;
    struct Bound {
        CLI::Option* option;
        std::string key;
        std::function<void(json&)> store;
    };
    std::vector<Bound> bound;

    // Scalars and lists live here until they are copied into `doc`.
    int arms = 0, classes = 0, dim = 0, change_period = 0, steps = 0, reps = 0;
    std::size_t hidden = 0, buffer_capacity = 0;
    int sync_period = 0;
    std::uint64_t seed = 0;
    double cluster_std = 0.0, gamma = 0.0;
    std::string agents, task, format, out_dir, output_head, config_path;
    std::vector<double> alpha_grid, tau_grid;
    std::vector<int> n_values, k_values;

    const auto bind = [&](CLI::App* sub, const std::string& flag, const std::string& key, auto& target,
                          const std::string& help) {
        auto* opt = sub->add_option(flag, target, help);
        bound.push_back({opt, key, [&target, key](json& d) { d[key] = target; }});
        return opt;
    };
    const auto common = [&](CLI::App* sub) {
        bind(sub, "--change-period", "change_period", change_period, "Steps per regime (default 100)");
        bind(sub, "--steps", "steps", steps, "Steps per run (default 1500)");
        bind(sub, "--reps", "reps", reps, "Repetitions (default 20)");
        bind(sub, "--agents", "agents", agents, "conventional | modulated | both (default both)");
        bind(sub, "--seed", "seed", seed, "Evaluation seed (default 1)");
        bind(sub, "--gamma", "gamma", gamma, "Discount factor");
        bind(sub, "--alpha-grid", "alpha_grid", alpha_grid, "Learning-rate grid, comma separated")
            ->delimiter(',');
        bind(sub, "--tau-grid", "tau_grid", tau_grid, "Temperature grid, comma separated")->delimiter(',');
        bind(sub, "--format", "format", format, "Output format (csv)");
        bind(sub, "--out", "out", out_dir, "Output directory")->required();
    };
    const auto geometry = [&](CLI::App* sub) {
        bind(sub, "--dim", "dim", dim, "Feature dimension (default 2)");
        bind(sub, "--cluster-std", "cluster_std", cluster_std, "Cluster standard deviation (default 0.25)");
        bind(sub, "--hidden", "hidden", hidden, "Hidden units (default 20)");
        bind(sub, "--buffer", "buffer_capacity", buffer_capacity, "Replay buffer capacity (default 10)");
        bind(sub, "--sync-period", "sync_period", sync_period, "Target sync period in trials (default 5)");
        bind(sub, "--output-head", "output_head", output_head, "linear | tanh (default linear)");
    };

    auto* bandit = app.add_subcommand("bandit", "Rotating n-armed bandit, both update rules");
    bind(bandit, "--arms", "arms", arms, "Number of arms (default 7)");
    common(bandit);
    auto* cardsort = app.add_subcommand("cardsort", "Card-sorting classification task with a deep Q network");
    bind(cardsort, "--classes", "classes", classes, "Number of classes (default 4)");
    geometry(cardsort);
    common(cardsort);
    auto* sweep = app.add_subcommand("sweep", "Reward per step and time to preference versus choice count");
    bind(sweep, "--task", "task", task, "bandit | cardsort")->required();
    bind(sweep, "--n-values", "n_values", n_values, "Arm counts, comma separated")->delimiter(',');
    bind(sweep, "--k-values", "k_values", k_values, "Class counts, comma separated")->delimiter(',');
    geometry(sweep);
    common(sweep);
    auto* run = app.add_subcommand("run", "Run from a JSON run-config file");
    run->add_option("--config", config_path, "Run-config JSON")->required()->check(CLI::ExistingFile);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    RunOptions options;
    try {
        if (*run) {
            std::ifstream is(config_path);
            json file;
            try {
                file = json::parse(is);
            } catch (const json::parse_error& e) {
                throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
            }
            options = parse_run_config(file);
        } else {
            CLI::App* active = *bandit ? bandit : (*cardsort ? cardsort : sweep);
            doc["command"] = active->get_name();
            for (const auto& b : bound) {
                if (b.option->count() > 0) b.store(doc);
            }
            if (*sweep) {
                const bool want_n = task == "bandit";
                const auto& given = want_n ? n_values : k_values;
                const std::string key = want_n ? "n_values" : "k_values";
                if (doc.contains(want_n ? "k_values" : "n_values")) {
                    throw ConfigError(want_n ? "k_values" : "n_values",
                                      "use --" + std::string(want_n ? "n-values" : "k-values") +
                                          " for task " + task);
                }
                if (given.empty()) throw ConfigError(key, "must list at least one value");
            }
            options = parse_run_config(doc);
        }
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    }

    try {
        execute(options, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kOk;
}

}  // namespace modtd::cli
