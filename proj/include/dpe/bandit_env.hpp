#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dpe/rng.hpp"

namespace dpe {

// Hidden instance: K Bernoulli means, strictly inside (0,1), pairwise
// distinct so the minimum gap is positive.
class ArmMeans {
public:
    explicit ArmMeans(std::vector<double> means) : means_(std::move(means)) {
        if (means_.size() < 2)
            throw std::invalid_argument("ArmMeans: need at least 2 arms");
        for (double m : means_) {
            if (!(m > 0.0 && m < 1.0))
                throw std::invalid_argument("ArmMeans: every mean must lie strictly in (0,1)");
        }
        std::vector<double> sorted = means_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("ArmMeans: means must be pairwise distinct");
    }

    int num_arms() const { return static_cast<int>(means_.size()); }
    // 1-based arm index, matching the protocol's arithmetic.
    double mean(int arm) const { return means_[static_cast<std::size_t>(arm - 1)]; }
    const std::vector<double>& values() const { return means_; }

private:
    std::vector<double> means_;
};

// Per-player observation for one round. The reward is present exactly when
// there was no collision on the selected arm.
struct Feedback {
    bool collision = false;
    std::optional<int> reward;
};

// Ground-truth record of one round, consumed by diagnostics only.
struct RoundLog {
    long round = 0;
    std::vector<int> selections;     // arm per player, 1-based
    std::vector<int> draws;          // potential reward X_k for every arm
    std::vector<int> collided_arms;  // arms selected by >= 2 players, ascending

    bool player_collided(int player_index) const {
        return std::binary_search(collided_arms.begin(), collided_arms.end(),
                                  selections[static_cast<std::size_t>(player_index)]);
    }
};

// Sum of the M largest means: the best achievable expected reward per round.
inline double optimal_round_reward(const ArmMeans& means, int M) {
    if (M < 1 || M >= means.num_arms())
        throw std::invalid_argument("optimal_round_reward: require 1 <= M < K");
    std::vector<double> sorted = means.values();
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double total = 0.0;
    for (int i = 0; i < M; ++i) total += sorted[static_cast<std::size_t>(i)];
    return total;
}

// K Bernoulli arms with collision feedback. One draw per arm per round, no
// matter how many players select it; a collision destroys the reward. All K
// arms are drawn every round so that runs with the same seed see coupled
// randomness across algorithms.
class Environment {
public:
    Environment(ArmMeans means, int num_players, std::uint64_t run_seed)
        : means_(std::move(means)),
          num_players_(num_players),
          rng_(make_stream(run_seed, 0)) {
        if (num_players < 1 || num_players >= means_.num_arms())
            throw std::invalid_argument("Environment: require 1 <= num_players < K");
    }

    int num_arms() const { return means_.num_arms(); }
    int num_players() const { return num_players_; }
    long round() const { return round_; }
    const ArmMeans& means() const { return means_; }

    std::pair<std::vector<Feedback>, RoundLog> step(const std::vector<int>& selections) {
        if (static_cast<int>(selections.size()) != num_players_)
            throw std::invalid_argument("Environment::step: one selection per player required");
        const int K = means_.num_arms();
        for (int arm : selections) {
            if (arm < 1 || arm > K)
                throw std::out_of_range("Environment::step: arm index out of range");
        }

        RoundLog log;
        log.round = ++round_;
        log.selections = selections;
        log.draws.resize(static_cast<std::size_t>(K));
        for (int k = 1; k <= K; ++k)
            log.draws[static_cast<std::size_t>(k - 1)] = bernoulli_draw(rng_, means_.mean(k)) ? 1 : 0;

        std::vector<int> count(static_cast<std::size_t>(K + 1), 0);
        for (int arm : selections) count[static_cast<std::size_t>(arm)]++;
        for (int k = 1; k <= K; ++k)
            if (count[static_cast<std::size_t>(k)] >= 2) log.collided_arms.push_back(k);

        std::vector<Feedback> feedback(static_cast<std::size_t>(num_players_));
        for (int i = 0; i < num_players_; ++i) {
            const int arm = selections[static_cast<std::size_t>(i)];
            Feedback& fb = feedback[static_cast<std::size_t>(i)];
            if (count[static_cast<std::size_t>(arm)] >= 2) {
                fb.collision = true;
            } else {
                fb.collision = false;
                fb.reward = log.draws[static_cast<std::size_t>(arm - 1)];
            }
        }
        return {std::move(feedback), std::move(log)};
    }

private:
    ArmMeans means_;
    int num_players_;
    std::mt19937_64 rng_;
    long round_ = 0;
};

}  // namespace dpe
