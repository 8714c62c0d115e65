#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

#include "modtd/core.hpp"

namespace modtd {

/// Raised when a training step leaves a non-finite parameter behind.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OutputHead { linear, tanh };

/// One-hidden-layer perceptron: q = head(w2 * tanh(w1 * x + b1) + b2), where
/// head is the identity or tanh.
/// Weight matrices are row-major (w1 is hidden x inputs, w2 is outputs x hidden).
struct Mlp {
    std::size_t inputs = 0;
    std::size_t hidden = 0;
    std::size_t outputs = 0;
    OutputHead head = OutputHead::linear;
    std::vector<double> w1, b1, w2, b2;

    Mlp() = default;
    /// Zero-initialised network.
    Mlp(std::size_t inputs, std::size_t hidden, std::size_t outputs,
        OutputHead head = OutputHead::linear);

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
    static Mlp random(std::size_t inputs, std::size_t hidden, std::size_t outputs, Rng& rng,
                      OutputHead head = OutputHead::linear);

    double& w1_at(std::size_t h, std::size_t i) { return w1[h * inputs + i]; }
    double w1_at(std::size_t h, std::size_t i) const { return w1[h * inputs + i]; }
    double& w2_at(std::size_t o, std::size_t h) { return w2[o * hidden + h]; }
    double w2_at(std::size_t o, std::size_t h) const { return w2[o * hidden + h]; }

    bool all_finite() const;

    friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Same layout as Mlp; holds dL/dparam.
using MlpGradients = Mlp;

/// Throws std::invalid_argument if x has the wrong dimension.
std::vector<double> forward(const Mlp& net, std::span<const double> x);

/// Gradient of L = 1/2 (target - q[action])^2 where the residual
/// (target - q[action]) equals `error_signal` and is held constant.
/// Only output unit `action` receives error.
MlpGradients backward(const Mlp& net, std::span<const double> x, std::size_t action,
                      double error_signal);

struct Transition {
    std::vector<double> point;
    std::size_t action = 0;
    double reward = 0.0;
    double pi = 1.0;  // probability of `action` when it was selected
    std::vector<double> next_point;  // empty: no successor, no bootstrap
};

/// Fixed-capacity FIFO of recent transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 10);

    void push(Transition t);
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return entries_.empty(); }
    const std::deque<Transition>& entries() const { return entries_; }

private:
    std::size_t capacity_;
    std::deque<Transition> entries_;
};

struct DqnOptions {
    std::size_t hidden = 20;
    OutputHead head = OutputHead::linear;
    std::size_t buffer_capacity = 10;
    int sync_period = 5;
    double step_size = 0.05;
    double tau = 1.0;
    double gamma = 0.0;
    UpdateRule rule = UpdateRule::modulated;
    bool unit_modulation = false;

    void validate() const;
};

/// Deep-Q agent for one-step tasks with softmax action selection, a replay
/// buffer replayed in full every trial and a periodically synchronised target
/// network.
class DqnAgent {
public:
    DqnAgent(std::size_t inputs, std::size_t actions, const DqnOptions& options, std::uint64_t seed);

    struct Decision {
        std::size_t action;
        PolicyDistribution policy;
    };

    /// Softmax over the policy network's q-values at `x`, then a draw.
    Decision act(std::span<const double> x, Rng& rng) const;

    /// Stores the transition, trains on the buffer and syncs the target every
    /// sync_period trials.
    void observe(Transition t);

    /// One gradient-descent step on the mean loss over the whole buffer.
    /// Residual per transition is r - q(x)[a], scaled by the stored pi under
    /// the modulated rule. No-op on an empty buffer. Throws DivergenceError if
    /// any parameter stops being finite.
    void train_step();

    void sync_target() { target_ = policy_; }

    const Mlp& policy_net() const { return policy_; }
    Mlp& policy_net() { return policy_; }
    const Mlp& target_net() const { return target_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    ReplayBuffer& buffer() { return buffer_; }
    const DqnOptions& options() const { return options_; }
    long trials() const { return trials_; }

private:
    DqnOptions options_;
    Mlp policy_;
    Mlp target_;
    ReplayBuffer buffer_;
    long trials_ = 0;
};

}  // namespace modtd
