#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "dpe/bandit_env.hpp"
#include "dpe/kl_ucb.hpp"
#include "dpe/rng.hpp"

namespace dpe {

// Asymptotic lower-bound constant C = sum_{k>M} (mu_M - mu_k) / kl(mu_k, mu_M)
// over the means sorted in decreasing order.
inline double lower_bound_constant(const ArmMeans& means, int M) {
    if (M < 1 || M >= means.num_arms())
        throw std::invalid_argument("lower_bound_constant: require 1 <= M < K");
    std::vector<double> mu = means.values();
    std::sort(mu.begin(), mu.end(), std::greater<>());
    double total = 0.0;
    for (int k = M; k < means.num_arms(); ++k)
        total += (mu[static_cast<std::size_t>(M - 1)] - mu[static_cast<std::size_t>(k)]) /
                 kl_bernoulli(mu[static_cast<std::size_t>(k)], mu[static_cast<std::size_t>(M - 1)]);
    return total;
}

// Ground truth of one instance, precomputed for measurement: sorted means,
// the identity of the top-M arms, the half-gap delta0 and the probe width
// delta = delta0 / 2 used by the bad-round counters.
struct InstanceTruth {
    std::vector<double> means;        // original order, 1-based via index+1
    std::vector<double> sorted_means; // descending
    std::set<int> top_arms;           // indices of the M best arms
    int M = 0;
    double optimal_reward = 0.0;
    double min_half_gap = 0.0;        // delta0
    double delta = 0.0;               // delta0 / 2
    double lower_bound = 0.0;         // C(mu)

    static InstanceTruth from(const ArmMeans& arm_means, int M) {
        InstanceTruth truth;
        truth.means = arm_means.values();
        truth.sorted_means = truth.means;
        std::sort(truth.sorted_means.begin(), truth.sorted_means.end(), std::greater<>());
        truth.M = M;
        truth.optimal_reward = optimal_round_reward(arm_means, M);
        double half_gap = 1.0;
        for (std::size_t i = 0; i + 1 < truth.sorted_means.size(); ++i)
            half_gap = std::min(half_gap, (truth.sorted_means[i] - truth.sorted_means[i + 1]) / 2.0);
        truth.min_half_gap = half_gap;
        truth.delta = half_gap / 2.0;
        truth.lower_bound = lower_bound_constant(arm_means, M);
        const double cutoff = truth.sorted_means[static_cast<std::size_t>(M - 1)];
        for (int k = 1; k <= arm_means.num_arms(); ++k)
            if (arm_means.mean(k) >= cutoff) truth.top_arms.insert(k);
        return truth;
    }

    double mean_of(int arm) const { return means[static_cast<std::size_t>(arm - 1)]; }
    bool is_top(int arm) const { return top_arms.count(arm) > 0; }
};

// Cumulative pseudo-regret. The primary metric zeroes the reward of collided
// plays; the literal variant credits the selected arm's mean regardless of
// collisions and is reported alongside.
class RegretAccumulator {
public:
    explicit RegretAccumulator(const InstanceTruth& truth) : truth_(&truth) {}

    void add(const RoundLog& log) {
        double collected_zeroed = 0.0;
        double collected_literal = 0.0;
        for (std::size_t i = 0; i < log.selections.size(); ++i) {
            const double mu = truth_->mean_of(log.selections[i]);
            collected_literal += mu;
            if (!log.player_collided(static_cast<int>(i))) collected_zeroed += mu;
        }
        zeroed_ += truth_->optimal_reward - collected_zeroed;
        literal_ += truth_->optimal_reward - collected_literal;
    }

    double zeroed() const { return zeroed_; }
    double literal() const { return literal_; }

private:
    const InstanceTruth* truth_;
    double zeroed_ = 0.0;
    double literal_ = 0.0;
};

// Tallies of the proof's round sets, accumulated over the rounds where the
// leader acts on block variables (outside initialization and communication):
//   A: the set in force differs from the true top-M set,
//   D: some in-set arm's frozen mean is off by >= delta,
//   E: some true-top arm's frozen index sits below its true mean,
//   G: rounds of A \ (D u E) where a missing true-top arm is off by >= delta,
//   C_k (k outside the true top-M): rounds outside A u D with rho = k.
struct RoundCounters {
    long tally_A = 0;
    long tally_D = 0;
    long tally_E = 0;
    long tally_G = 0;
    std::map<int, long> tally_C;
    long comm_rounds = 0;
    long init_rounds = 0;
    long collisions = 0;
};

class BadRoundCounter {
public:
    explicit BadRoundCounter(const InstanceTruth& truth) : truth_(&truth) {}

    void add(const std::vector<int>& in_force, const std::vector<double>& frozen_means,
             const std::vector<double>& frozen_indices, int leader_selection) {
        const auto& truth = *truth_;
        const bool in_A = !set_matches_top(in_force);

        bool in_D = false;
        for (int arm : in_force)
            if (std::abs(frozen_means[static_cast<std::size_t>(arm - 1)] - truth.mean_of(arm)) >= truth.delta)
                in_D = true;

        bool in_E = false;
        for (int arm : truth.top_arms)
            if (frozen_indices[static_cast<std::size_t>(arm - 1)] < truth.mean_of(arm)) in_E = true;

        bool in_G = false;
        if (in_A && !in_D && !in_E) {
            for (int arm : truth.top_arms) {
                if (std::find(in_force.begin(), in_force.end(), arm) != in_force.end()) continue;
                if (std::abs(frozen_means[static_cast<std::size_t>(arm - 1)] - truth.mean_of(arm)) >= truth.delta)
                    in_G = true;
            }
        }

        counters_.tally_A += in_A;
        counters_.tally_D += in_D;
        counters_.tally_E += in_E;
        counters_.tally_G += in_G;
        if (!in_A && !in_D && !truth.is_top(leader_selection))
            counters_.tally_C[leader_selection] += 1;
    }

    RoundCounters& counters() { return counters_; }
    const RoundCounters& counters() const { return counters_; }

    // Pull-count ceiling of the C_k analysis at horizon T:
    // (ln T + 4 ln ln T) / kl(mu_k + delta, mu_M - delta).
    double t0_for(int arm, long T) const {
        const auto& truth = *truth_;
        const double mu_M = truth.sorted_means[static_cast<std::size_t>(truth.M - 1)];
        return exploration_rate(T) / kl_bernoulli(truth.mean_of(arm) + truth.delta, mu_M - truth.delta);
    }

private:
    bool set_matches_top(const std::vector<int>& in_force) const {
        if (in_force.size() != truth_->top_arms.size()) return false;
        for (int arm : in_force)
            if (!truth_->is_top(arm)) return false;
        return true;
    }

    const InstanceTruth* truth_;
    RoundCounters counters_;
};

// Truncated evaluation of the index-concentration series
//   e * M * sum_{s>=1} ceil(f(sM) * ln(sM)) * exp(-f(sM)),
// f(x) = ln(x) + 4 ln(ln(x)), terms with sM <= e skipped. `tail` is an
// integral-comparison bound on the discarded remainder, valid because the
// term majorant (ln^2 x + 4 ln x ln ln x + 1) / (x ln^4 x) decreases.
struct Lemma2Result {
    double value = 0.0;
    double tail = 0.0;
    double total() const { return value + tail; }
};

inline Lemma2Result lemma2_constant(int M, long truncation) {
    if (M < 1) throw std::invalid_argument("lemma2_constant: M must be >= 1");
    if (truncation < 10000)
        throw std::invalid_argument("lemma2_constant: truncation must be >= 10^4");
    double sum = 0.0;
    double prev_term = std::numeric_limits<double>::infinity();
    for (long s = 1; s <= truncation; ++s) {
        const double x = static_cast<double>(s) * M;
        if (x <= 2.0) continue;  // ln ln undefined or negative at integer sM <= e
        const double L = std::log(x);
        const double f = L + 4.0 * std::log(L);
        const double term = std::ceil(f * L) * std::exp(-f);
        if (x >= 16.0 && term > prev_term)
            throw std::logic_error("lemma2_constant: series terms stopped decreasing");
        prev_term = term;
        sum += term;
    }
    Lemma2Result result;
    result.value = std::exp(1.0) * M * sum;
    const double V = std::log(static_cast<double>(truncation) * M);
    result.tail = std::exp(1.0) *
                  (1.0 / V + 2.0 * std::log(V) / (V * V) + 1.0 / (V * V) + 1.0 / (3.0 * V * V * V));
    return result;
}

// Monte Carlo estimate of the concentration series
//   sum_n P[n in H, |mu_hat(n) - mu| >= delta]
// for the simplest admissible predictable set H = all rounds: each round the
// deviation indicator is evaluated on the samples gathered so far, then an
// independent coin with success probability c decides whether a new sample
// of the arm is drawn. Returns (empirical series, analytic bound).
struct ConcentrationExperiment {
    double c = 0.5;
    double delta = 0.1;
    double arm_mean = 0.5;
    long horizon = 100000;
    long trials = 1000;
};

inline std::pair<double, double> lemma1_monte_carlo(const ConcentrationExperiment& exp,
                                                    std::uint64_t seed) {
    if (!(exp.c > 0.0 && exp.c <= 1.0))
        throw std::invalid_argument("lemma1_monte_carlo: c must lie in (0,1]");
    if (exp.trials < 1000)
        throw std::invalid_argument("lemma1_monte_carlo: need at least 10^3 trials");
    double total = 0.0;
    for (long trial = 0; trial < exp.trials; ++trial) {
        auto rng = make_stream(seed, static_cast<std::uint64_t>(trial));
        long pulls = 0;
        long reward_sum = 0;
        long fired = 0;
        for (long n = 1; n <= exp.horizon; ++n) {
            const double mean = pulls > 0 ? static_cast<double>(reward_sum) / static_cast<double>(pulls) : 0.0;
            if (std::abs(mean - exp.arm_mean) >= exp.delta) ++fired;
            if (bernoulli_draw(rng, exp.c)) {
                ++pulls;
                reward_sum += bernoulli_draw(rng, exp.arm_mean) ? 1 : 0;
            }
        }
        total += static_cast<double>(fired);
    }
    const double bound = (2.0 / exp.c) * (2.0 / exp.c + 1.0 / (exp.delta * exp.delta));
    return {total / static_cast<double>(exp.trials), bound};
}

}  // namespace dpe
