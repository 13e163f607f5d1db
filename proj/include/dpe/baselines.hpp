#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "dpe/bandit_env.hpp"
#include "dpe/kl_ucb.hpp"

namespace dpe {

// The true top-M arms; zero regret by definition.
inline std::vector<int> oracle_select(const ArmMeans& means, int M) {
    std::vector<int> arms(static_cast<std::size_t>(means.num_arms()));
    std::iota(arms.begin(), arms.end(), 1);
    std::stable_sort(arms.begin(), arms.end(),
                     [&](int a, int b) { return means.mean(a) > means.mean(b); });
    arms.resize(static_cast<std::size_t>(M));
    std::sort(arms.begin(), arms.end());
    return arms;
}

// Centralized parsimonious KL-UCB: one controller plays the M-1 best
// empirical arms greedily plus the largest-index arm among the rest, updating
// statistics every round. Selections are a set, so it never collides.
class CentralizedKlUcb {
public:
    CentralizedKlUcb(int K, int M, double bisect_tolerance = 1e-9)
        : K_(K), M_(M), tol_(bisect_tolerance), stats_(static_cast<std::size_t>(K)) {
        if (M < 1 || M >= K) throw std::invalid_argument("CentralizedKlUcb: require 1 <= M < K");
    }

    std::vector<int> select(long t) {
        std::vector<int> order(static_cast<std::size_t>(K_));
        std::iota(order.begin(), order.end(), 1);
        // greedy part: M-1 best empirical means, ties to the lowest index
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return stat(a).mean() > stat(b).mean();
        });
        std::vector<int> plays(order.begin(), order.begin() + (M_ - 1));
        // exploratory arm: largest KL-UCB index among the remaining arms
        const double f = exploration_rate(t);
        int best = 0;
        double best_index = -1.0;
        for (auto it = order.begin() + (M_ - 1); it != order.end(); ++it) {
            const double idx = klucb_index(stat(*it), f, tol_);
            if (idx > best_index || (idx == best_index && *it < best)) {
                best_index = idx;
                best = *it;
            }
        }
        plays.push_back(best);
        std::sort(plays.begin(), plays.end());
        return plays;
    }

    void update(const std::vector<int>& plays, const std::vector<Feedback>& feedback) {
        if (plays.size() != feedback.size())
            throw std::invalid_argument("CentralizedKlUcb::update: plays/feedback length mismatch");
        for (std::size_t i = 0; i < plays.size(); ++i) {
            if (!feedback[i].reward)
                throw std::invalid_argument("CentralizedKlUcb::update: missing reward (collision?)");
            stats_[static_cast<std::size_t>(plays[i] - 1)].record(*feedback[i].reward);
        }
        ++rounds_;
    }

    const std::vector<ArmStatistics>& statistics() const { return stats_; }
    long rounds() const { return rounds_; }

private:
    const ArmStatistics& stat(int arm) const { return stats_[static_cast<std::size_t>(arm - 1)]; }

    int K_;
    int M_;
    double tol_;
    std::vector<ArmStatistics> stats_;
    long rounds_ = 0;
};

}  // namespace dpe
