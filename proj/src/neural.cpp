#include "modtd/neural.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace modtd {

namespace {

std::vector<double> hidden_activations(const Mlp& net, std::span<const double> x) {
    std::vector<double> h(net.hidden);
    for (std::size_t j = 0; j < net.hidden; ++j) {
        double z = net.b1[j];
        for (std::size_t i = 0; i < net.inputs; ++i) z += net.w1_at(j, i) * x[i];
        h[j] = std::tanh(z);
    }
    return h;
}

void check_input(const Mlp& net, std::span<const double> x) {
    if (x.size() != net.inputs) {
        throw std::invalid_argument("input has dimension " + std::to_string(x.size()) +
                                    ", network expects " + std::to_string(net.inputs));
    }
}

}  // namespace

Mlp::Mlp(std::size_t in, std::size_t hid, std::size_t out, OutputHead h)
    : inputs(in), hidden(hid), outputs(out), head(h),
      w1(hid * in, 0.0), b1(hid, 0.0), w2(out * hid, 0.0), b2(out, 0.0) {
    if (in == 0 || hid == 0 || out == 0) throw std::invalid_argument("network layers must be non-empty");
}

Mlp Mlp::random(std::size_t in, std::size_t hid, std::size_t out, Rng& rng, OutputHead h) {
    Mlp net(in, hid, out, h);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(in));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(hid));
    std::uniform_real_distribution<double> u1(-r1, r1);
    std::uniform_real_distribution<double> u2(-r2, r2);
    for (double& w : net.w1) w = u1(rng);
    for (double& b : net.b1) b = u1(rng);
    for (double& w : net.w2) w = u2(rng);
    for (double& b : net.b2) b = u2(rng);
    return net;
}

bool Mlp::all_finite() const {
    const auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
    };
    return finite(w1) && finite(b1) && finite(w2) && finite(b2);
}

std::vector<double> forward(const Mlp& net, std::span<const double> x) {
    check_input(net, x);
    const auto h = hidden_activations(net, x);
    std::vector<double> q(net.outputs);
    for (std::size_t o = 0; o < net.outputs; ++o) {
        double s = net.b2[o];
        for (std::size_t j = 0; j < net.hidden; ++j) s += net.w2_at(o, j) * h[j];
        q[o] = net.head == OutputHead::tanh ? std::tanh(s) : s;
    }
    return q;
}

MlpGradients backward(const Mlp& net, std::span<const double> x, std::size_t action,
                      double error_signal) {
    check_input(net, x);
    if (action >= net.outputs) throw std::out_of_range("action out of range");
    MlpGradients g(net.inputs, net.hidden, net.outputs, net.head);
    if (error_signal == 0.0) return g;

    const auto h = hidden_activations(net, x);
    // dL/dq[action] = -(target - q[action]); chained through the head.
    double dq = -error_signal;
    if (net.head == OutputHead::tanh) {
        double s = net.b2[action];
        for (std::size_t j = 0; j < net.hidden; ++j) s += net.w2_at(action, j) * h[j];
        const double q = std::tanh(s);
        dq *= 1.0 - q * q;
    }
    g.b2[action] = dq;
    for (std::size_t j = 0; j < net.hidden; ++j) {
        g.w2_at(action, j) = dq * h[j];
        const double dz = dq * net.w2_at(action, j) * (1.0 - h[j] * h[j]);
        g.b1[j] = dz;
        for (std::size_t i = 0; i < net.inputs; ++i) g.w1_at(j, i) = dz * x[i];
    }
    return g;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.push_back(std::move(t));
}

void DqnOptions::validate() const {
    if (hidden == 0) throw std::invalid_argument("hidden must be >= 1");
    if (buffer_capacity == 0) throw std::invalid_argument("buffer_capacity must be >= 1");
    if (sync_period < 1) throw std::invalid_argument("sync_period must be >= 1");
    if (!(step_size >= 0.0) || !std::isfinite(step_size)) throw std::invalid_argument("step_size must be >= 0");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
}

DqnAgent::DqnAgent(std::size_t inputs, std::size_t actions, const DqnOptions& options,
                   std::uint64_t seed)
    : options_(options), buffer_(options.buffer_capacity) {
    options_.validate();
    Rng init(seed);
    policy_ = Mlp::random(inputs, options_.hidden, actions, init, options_.head);
    target_ = policy_;
}

DqnAgent::Decision DqnAgent::act(std::span<const double> x, Rng& rng) const {
    auto policy = softmax_policy(forward(policy_, x), options_.tau);
    const auto action = sample_action(policy, rng);
    return {action, std::move(policy)};
}

void DqnAgent::observe(Transition t) {
    if (!(t.pi >= 0.0 && t.pi <= 1.0)) throw std::invalid_argument("pi must lie in [0, 1]");
    buffer_.push(std::move(t));
    train_step();
    ++trials_;
    if (trials_ % options_.sync_period == 0) sync_target();
}

void DqnAgent::train_step() {
    if (buffer_.empty()) return;
    MlpGradients total(policy_.inputs, policy_.hidden, policy_.outputs, policy_.head);
    const auto accumulate = [](std::vector<double>& dst, const std::vector<double>& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };
    for (const auto& t : buffer_.entries()) {
        const auto q = forward(policy_, t.point);
        double target = t.reward;
        if (!t.next_point.empty() && options_.gamma != 0.0) {
            const auto next = forward(target_, t.next_point);
            target += options_.gamma * *std::max_element(next.begin(), next.end());
        }
        double residual = target - q[t.action];
        if (options_.rule == UpdateRule::modulated) {
            residual *= options_.unit_modulation ? 1.0 : t.pi;
        }
        const auto g = backward(policy_, t.point, t.action, residual);
        accumulate(total.w1, g.w1);
        accumulate(total.b1, g.b1);
        accumulate(total.w2, g.w2);
        accumulate(total.b2, g.b2);
    }
    const double scale = options_.step_size / static_cast<double>(buffer_.size());
    const auto descend = [scale](std::vector<double>& p, const std::vector<double>& g) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= scale * g[i];
    };
    descend(policy_.w1, total.w1);
    descend(policy_.b1, total.b1);
    descend(policy_.w2, total.w2);
    descend(policy_.b2, total.b2);
    if (!policy_.all_finite()) throw DivergenceError("policy network diverged");
}

}  // namespace modtd
