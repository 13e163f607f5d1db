#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpe {

// KL divergence between Bernoulli(p) and Bernoulli(q), with the boundary
// conventions 0*ln(0) = 0 and +infinity when q is degenerate but p is not.
inline double kl_bernoulli(double p, double q) {
    if (!(p >= 0.0 && p <= 1.0) || !(q >= 0.0 && q <= 1.0))
        throw std::domain_error("kl_bernoulli: arguments must lie in [0,1]");
    if (p == q) return 0.0;
    if (q == 0.0 || q == 1.0) return std::numeric_limits<double>::infinity();
    double value = 0.0;
    if (p > 0.0) value += p * std::log(p / q);
    if (p < 1.0) value += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    return value;
}

// f(t) = ln(t) + 4 ln(ln(t)), clamped to 0 where the expression is negative
// or undefined (t <= e).
inline double exploration_rate(long t) {
    if (t < 1) throw std::invalid_argument("exploration_rate: t must be >= 1");
    if (t <= 2) return 0.0;
    const double lt = std::log(static_cast<double>(t));
    return std::max(0.0, lt + 4.0 * std::log(lt));
}

// Pull count and reward sum for one arm; the empirical mean is 0 before the
// first pull.
struct ArmStatistics {
    long pulls = 0;
    long reward_sum = 0;

    double mean() const { return pulls > 0 ? static_cast<double>(reward_sum) / static_cast<double>(pulls) : 0.0; }
    void record(int reward) {
        pulls += 1;
        reward_sum += reward;
    }
};

// KL-UCB index: sup{ q in [0,1] : pulls * kl(mean, q) <= f_value }, located
// by bisection on [mean, 1]. The constraint always holds at q = mean, so the
// bracket is never empty.
inline double klucb_index(const ArmStatistics& stats, double f_value, double tolerance = 1e-9) {
    if (!(tolerance > 0.0))
        throw std::invalid_argument("klucb_index: tolerance must be positive");
    if (stats.pulls == 0) return 1.0;
    const double mu = stats.mean();
    if (mu >= 1.0) return 1.0;
    const double n = static_cast<double>(stats.pulls);
    double lo = mu, hi = 1.0;
    for (int iter = 0; iter < 100 && hi - lo > tolerance; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (n * kl_bernoulli(mu, mid) <= f_value)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace dpe
