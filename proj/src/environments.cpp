#include "modtd/environments.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace modtd {

Bandit::Bandit(int n_arms, int change_period, std::uint64_t seed)
    : change_period_(change_period), rng_(seed) {
    if (n_arms < 2) throw std::invalid_argument("arms must be >= 2, got " + std::to_string(n_arms));
    if (change_period < 1) throw std::invalid_argument("change_period must be >= 1");
    base_.reserve(static_cast<std::size_t>(n_arms));
    base_.push_back(kHighRewardProb);
    base_.push_back(kNoRewardProb);
    std::uniform_real_distribution<double> fill(kFillLow, kFillHigh);
    for (int i = 2; i < n_arms; ++i) base_.push_back(fill(rng_));
}

Bandit::Bandit(std::vector<double> base_probs, int change_period, std::uint64_t seed)
    : base_(std::move(base_probs)), change_period_(change_period), rng_(seed) {
    if (base_.size() < 2) throw std::invalid_argument("arms must be >= 2");
    if (change_period < 1) throw std::invalid_argument("change_period must be >= 1");
    if (base_[0] != kHighRewardProb || base_[1] != kNoRewardProb) {
        throw std::invalid_argument("base list must start with 0.9, 0.0");
    }
    for (std::size_t i = 2; i < base_.size(); ++i) {
        if (!(base_[i] >= kFillLow && base_[i] <= kFillHigh)) {
            throw std::invalid_argument("fill probabilities must lie in [0.25, 0.75]");
        }
    }
}

double Bandit::arm_probability(int arm) const {
    const long n = n_arms();
    if (arm < 0 || arm >= n) throw std::out_of_range("arm " + std::to_string(arm) + " out of range");
    return base_[static_cast<std::size_t>((arm + change_count_) % n)];
}

std::vector<double> Bandit::arm_probabilities() const {
    std::vector<double> out(base_.size());
    for (int i = 0; i < n_arms(); ++i) out[static_cast<std::size_t>(i)] = arm_probability(i);
    return out;
}

int Bandit::best_arm() const {
    const long n = n_arms();
    return static_cast<int>(((-change_count_) % n + n) % n);
}

double Bandit::step(int arm) {
    const double p = arm_probability(arm);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double reward = unit(rng_) < p ? 1.0 : -1.0;
    ++step_;
    if (step_ % change_period_ == 0) rotate();
    return reward;
}

void CardSortOptions::validate() const {
    if (k_classes < 2) throw std::invalid_argument("classes must be >= 2, got " + std::to_string(k_classes));
    if (dim < 1) throw std::invalid_argument("dim must be >= 1, got " + std::to_string(dim));
    if (!(cluster_std >= 0.0)) throw std::invalid_argument("cluster_std must be >= 0");
    if (change_period < 1) throw std::invalid_argument("change_period must be >= 1");
}

CardSort::CardSort(const CardSortOptions& options, std::uint64_t seed)
    : options_(options), rng_(seed) {
    options_.validate();
    std::normal_distribution<double> standard(0.0, 1.0);
    centers_.assign(static_cast<std::size_t>(options_.k_classes),
                    std::vector<double>(static_cast<std::size_t>(options_.dim)));
    for (auto& c : centers_) {
        for (double& x : c) x = standard(rng_);
    }
    label_perm_.resize(static_cast<std::size_t>(options_.k_classes));
    std::iota(label_perm_.begin(), label_perm_.end(), 0);
}

const CardSort::Trial& CardSort::present() {
    std::uniform_int_distribution<int> pick(0, options_.k_classes - 1);
    const int c = pick(rng_);
    const auto& center = centers_[static_cast<std::size_t>(c)];
    pending_.point.assign(center.begin(), center.end());
    if (options_.cluster_std > 0.0) {
        std::normal_distribution<double> noise(0.0, options_.cluster_std);
        for (double& x : pending_.point) x += noise(rng_);
    }
    pending_.cluster = c;
    pending_.true_label = label_perm_[static_cast<std::size_t>(c)];
    has_pending_ = true;
    return pending_;
}

double CardSort::respond(int guess) {
    if (!has_pending_) throw std::logic_error("respond() called without a pending trial");
    if (guess < 0 || guess >= options_.k_classes) {
        throw std::out_of_range("guess " + std::to_string(guess) + " out of range");
    }
    has_pending_ = false;
    const double reward = guess == pending_.true_label ? 1.0 : -1.0;
    ++step_;
    if (step_ % options_.change_period == 0) scramble();
    return reward;
}

void CardSort::scramble() {
    const std::size_t k = label_perm_.size();
    std::vector<int> d(k);
    std::iota(d.begin(), d.end(), 0);
    // Rejection sampling gives a uniform derangement; ~e shuffles on average.
    const auto has_fixed_point = [&] {
        for (std::size_t i = 0; i < k; ++i) {
            if (d[i] == static_cast<int>(i)) return true;
        }
        return false;
    };
    do {
        std::shuffle(d.begin(), d.end(), rng_);
    } while (has_fixed_point());
    std::vector<int> next(k);
    for (std::size_t c = 0; c < k; ++c) next[c] = label_perm_[static_cast<std::size_t>(d[c])];
    label_perm_ = std::move(next);
}

}  // namespace modtd
