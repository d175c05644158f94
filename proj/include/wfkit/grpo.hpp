#pragma once

// Group-normalized advantages, the clipped surrogate term, and the KL
// estimator, as plain desk-checkable functions over reward values and
// probability ratios. Policy evaluation itself happens elsewhere; callers
// supply the ratios.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "wfkit/error.hpp"

namespace wfkit {

struct GroupSample {
    double reward = 0.0;
    double ratio = 1.0;      // pi_theta / pi_theta_old for this sample
    double ref_ratio = 1.0;  // pi_ref / pi_theta for this sample
};

struct GrpoConfig {
    int group_size = 4;
    double clip_eps = 0.2;
    double kl_beta = 0.001;
    double std_floor = 1e-8;

    void validate() const {
        if (group_size < 2) throw GroupTooSmall("group_size must be >= 2");
        if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw Error("clip_eps must be in (0, 1)");
        if (kl_beta < 0.0) throw Error("kl_beta must be >= 0");
    }
};

// A_i = (r_i - mean) / max(population std, std_floor).
inline std::vector<double> group_advantages(std::span<const double> rewards,
                                            double std_floor = 1e-8) {
    const std::size_t n = rewards.size();
    if (n < 2) throw GroupTooSmall("advantage normalization needs a group of at least 2");

    double mean = 0.0;
    for (const double r : rewards) mean += r;
    mean /= static_cast<double>(n);

    double var = 0.0;
    for (const double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(n);
    const double denom = std::max(std::sqrt(var), std_floor);

    std::vector<double> advantages(n);
    for (std::size_t i = 0; i < n; ++i) advantages[i] = (rewards[i] - mean) / denom;
    return advantages;
}

// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)
inline double clipped_term(double ratio, double advantage, double clip_eps) {
    if (!(ratio > 0.0)) throw NonPositiveRatio("probability ratio must be positive");
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    return std::min(ratio * advantage, clipped * advantage);
}

// k3 estimator: x - ln(x) - 1, nonnegative, zero only at x = 1.
inline double kl_estimate(double ref_ratio) {
    if (!(ref_ratio > 0.0)) throw NonPositiveRatio("reference ratio must be positive");
    return ref_ratio - std::log(ref_ratio) - 1.0;
}

inline double grpo_objective(std::span<const GroupSample> samples, const GrpoConfig& config) {
    config.validate();
    std::vector<double> rewards;
    rewards.reserve(samples.size());
    for (const GroupSample& s : samples) rewards.push_back(s.reward);
    const std::vector<double> advantages = group_advantages(rewards, config.std_floor);

    const double n = static_cast<double>(samples.size());
    double surrogate = 0.0;
    double kl = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        surrogate += clipped_term(samples[i].ratio, advantages[i], config.clip_eps);
        kl += kl_estimate(samples[i].ref_ratio);
    }
    return surrogate / n - config.kl_beta * (kl / n);
}

}  // namespace wfkit
