#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "modtd/cli.hpp"

namespace modtd::cli {

namespace {

using nlohmann::json;

std::string command_name(Command c) {
    switch (c) {
        case Command::bandit: return "bandit";
        case Command::cardsort: return "cardsort";
        case Command::sweep: return "sweep";
    }
    return "?";
}

Command parse_command(const std::string& text) {
    if (text == "bandit") return Command::bandit;
    if (text == "cardsort") return Command::cardsort;
    if (text == "sweep") return Command::sweep;
    throw ConfigError("command", "expected bandit, cardsort or sweep, got '" + text + "'");
}

std::string agents_name(const std::vector<UpdateRule>& rules) {
    if (rules.size() == 2) return "both";
    return std::string(to_string(rules.front()));
}

std::vector<UpdateRule> parse_agents(const std::string& text) {
    if (text == "both") return {UpdateRule::conventional, UpdateRule::modulated};
    if (text == "conventional") return {UpdateRule::conventional};
    if (text == "modulated") return {UpdateRule::modulated};
    throw ConfigError("agents", "expected conventional, modulated or both, got '" + text + "'");
}

// Name of the choice-count key: arms for the bandit, classes for card sort.
std::string choices_key(Task task) { return task == Task::bandit ? "arms" : "classes"; }
std::string sweep_values_key(Task task) { return task == Task::bandit ? "n_values" : "k_values"; }

template <class T>
T get_as(const json& doc, const std::string& key) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key, "has the wrong type");
    }
}

}  // namespace

void RunOptions::validate() const {
    const auto& c = config;
    if (c.n_choices < 2) {
        throw ConfigError(command == Command::sweep ? sweep_values_key(c.task) : choices_key(c.task),
                          "must be >= 2, got " + std::to_string(c.n_choices));
    }
    if (c.change_period < 1) throw ConfigError("change_period", "must be >= 1");
    if (c.total_steps < 0) throw ConfigError("steps", "must be >= 0");
    if (c.total_steps > 0 && c.total_steps < c.change_period) {
        throw ConfigError("steps", "must be >= change_period");
    }
    if (c.repetitions < 1) throw ConfigError("reps", "must be >= 1");
    if (!(c.hyperparams.gamma >= 0.0 && c.hyperparams.gamma <= 1.0)) {
        throw ConfigError("gamma", "must lie in [0, 1]");
    }
    if (c.task == Task::cardsort) {
        if (c.dim < 1) throw ConfigError("dim", "must be >= 1");
        if (!(c.cluster_std >= 0.0) || !std::isfinite(c.cluster_std)) {
            throw ConfigError("cluster_std", "must be >= 0");
        }
    }
    if (rules.empty()) throw ConfigError("agents", "no update rule selected");
    if (grid.alphas.empty()) throw ConfigError("alpha_grid", "must not be empty");
    if (grid.taus.empty()) throw ConfigError("tau_grid", "must not be empty");
    for (double a : grid.alphas) {
        if (!(a >= 0.0 && a <= 2.0)) throw ConfigError("alpha_grid", "values must lie in [0, 2]");
    }
    for (double t : grid.taus) {
        if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("tau_grid", "values must be positive");
    }
    if (command == Command::sweep) {
        const auto key = sweep_values_key(c.task);
        if (n_values.empty()) throw ConfigError(key, "must not be empty");
        for (int n : n_values) {
            if (n < 2) throw ConfigError(key, "values must be >= 2, got " + std::to_string(n));
        }
    }
    if (out.empty()) throw ConfigError("out", "output directory is required");
}

RunOptions parse_run_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("<root>", "run config must be a JSON object");
    for (const char* key : {"command", "out"}) {
        if (!doc.contains(key)) throw ConfigError(key, "required key is missing");
    }

    RunOptions o;
    o.command = parse_command(get_as<std::string>(doc, "command"));
    Task task = Task::bandit;
    if (o.command == Command::cardsort) task = Task::cardsort;
    if (o.command == Command::sweep) {
        if (!doc.contains("task")) throw ConfigError("task", "required key is missing");
        try {
            task = parse_task(get_as<std::string>(doc, "task"));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw ConfigError("task", e.what());
        }
    }
    o.config = task == Task::bandit ? ExperimentConfig::bandit_defaults()
                                    : ExperimentConfig::cardsort_defaults();
    o.grid = HyperparamGrid::for_task(task);

    std::set<std::string> allowed{"command", "out",  "change_period", "steps",     "reps",
                                  "agents",  "seed", "gamma",         "alpha_grid", "tau_grid",
                                  "format"};
    if (o.command == Command::sweep) {
        allowed.insert({"task", sweep_values_key(task)});
    } else {
        allowed.insert(choices_key(task));
    }
    if (task == Task::cardsort) {
        allowed.insert({"dim", "cluster_std", "hidden", "buffer_capacity", "sync_period", "output_head"});
    }
    for (const auto& [key, value] : doc.items()) {
        if (!allowed.count(key)) {
            throw ConfigError(key, "unknown key for command '" + command_name(o.command) + "'");
        }
    }

    auto& c = o.config;
    const auto opt = [&](const std::string& key, auto& target) {
        if (doc.contains(key)) target = get_as<std::remove_reference_t<decltype(target)>>(doc, key);
    };
    o.out = get_as<std::string>(doc, "out");
    if (o.command != Command::sweep) opt(choices_key(task), c.n_choices);
    opt("change_period", c.change_period);
    opt("steps", c.total_steps);
    opt("reps", c.repetitions);
    opt("seed", c.seed);
    opt("gamma", c.hyperparams.gamma);
    opt("alpha_grid", o.grid.alphas);
    opt("tau_grid", o.grid.taus);
    if (doc.contains("agents")) o.rules = parse_agents(get_as<std::string>(doc, "agents"));
    if (doc.contains("format") && get_as<std::string>(doc, "format") != "csv") {
        throw ConfigError("format", "only csv is supported");
    }
    if (task == Task::cardsort) {
        opt("dim", c.dim);
        opt("cluster_std", c.cluster_std);
        opt("hidden", c.hidden);
        opt("buffer_capacity", c.buffer_capacity);
        opt("sync_period", c.sync_period);
        if (doc.contains("output_head")) {
            const auto head = get_as<std::string>(doc, "output_head");
            if (head == "linear") {
                c.head = OutputHead::linear;
            } else if (head == "tanh") {
                c.head = OutputHead::tanh;
            } else {
                throw ConfigError("output_head", "expected linear or tanh, got '" + head + "'");
            }
        }
        if (c.hidden < 1) throw ConfigError("hidden", "must be >= 1");
        if (c.buffer_capacity < 1) throw ConfigError("buffer_capacity", "must be >= 1");
        if (c.sync_period < 1) throw ConfigError("sync_period", "must be >= 1");
    }
    if (o.command == Command::sweep) {
        o.n_values = get_as<std::vector<int>>(doc, sweep_values_key(task));
        if (!o.n_values.empty()) c.n_choices = o.n_values.front();
    }
    o.validate();
    return o;
}

json to_json(const RunOptions& o) {
    const auto& c = o.config;
    json doc;
    doc["command"] = command_name(o.command);
    if (o.command == Command::sweep) {
        doc["task"] = std::string(to_string(c.task));
        doc[sweep_values_key(c.task)] = o.n_values;
    } else {
        doc[choices_key(c.task)] = c.n_choices;
    }
    doc["change_period"] = c.change_period;
    doc["steps"] = c.total_steps;
    doc["reps"] = c.repetitions;
    doc["agents"] = agents_name(o.rules);
    doc["seed"] = c.seed;
    doc["gamma"] = c.hyperparams.gamma;
    doc["alpha_grid"] = o.grid.alphas;
    doc["tau_grid"] = o.grid.taus;
    doc["format"] = "csv";
    if (c.task == Task::cardsort) {
        doc["dim"] = c.dim;
        doc["cluster_std"] = c.cluster_std;
        doc["hidden"] = c.hidden;
        doc["buffer_capacity"] = c.buffer_capacity;
        doc["sync_period"] = c.sync_period;
        doc["output_head"] = c.head == OutputHead::tanh ? "tanh" : "linear";
    }
    doc["out"] = o.out.string();
    return doc;
}

}  // namespace modtd::cli
