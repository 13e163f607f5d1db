#pragma once

#include <algorithm>
#include <deque>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dpe/bandit_env.hpp"
#include "dpe/comm_protocol.hpp"
#include "dpe/init_protocol.hpp"
#include "dpe/kl_ucb.hpp"
#include "dpe/rng.hpp"

namespace dpe {

// The M best empirical arms in slot order. Slot order is independent of the
// empirical ranking: an entering arm always takes the slot of the arm it
// replaces, so followers can keep playing by slot number.
struct OrderedBestSet {
    std::vector<int> slots;  // arm held by slot 1..M
    int pivot_slot = 1;      // slot of the smallest frozen empirical mean

    int arm_at(int slot) const { return slots[static_cast<std::size_t>(slot - 1)]; }
    bool holds(int arm) const { return std::find(slots.begin(), slots.end(), arm) != slots.end(); }
};

// Exploration-exploitation logic of the rank-1 player. The leader keeps the
// only statistics of the run, refreshes frozen block variables every M
// rounds, explores through the pivot slot with a fair coin, and delivers set
// changes to the followers one (leaving_slot, entering_arm) pair per
// communication phase. Statistics and block updates freeze while phases are
// in flight.
class LeaderCore {
public:
    LeaderCore(int M, int K, double bisect_tolerance = 1e-9)
        : M_(M), K_(K), tol_(bisect_tolerance),
          stats_(static_cast<std::size_t>(K)),
          frozen_means_(static_cast<std::size_t>(K), 0.0),
          frozen_indices_(static_cast<std::size_t>(K), 0.0) {
        set_.slots.resize(static_cast<std::size_t>(M));
        std::iota(set_.slots.begin(), set_.slots.end(), 1);
        refresh_pivot_and_candidates(set_.slots);
    }

    int select(long u, std::mt19937_64& rng) {
        round_start(u);
        if (plan_) {
            rho_ = plan_->leader_arm(u, set_.slots);
            return rho_;
        }
        const int slot_arm = set_.arm_at(slot_of(u, 1, M_));
        const int pivot_arm = set_.arm_at(set_.pivot_slot);
        if (candidates_.empty() || slot_arm != pivot_arm) {
            rho_ = slot_arm;
        } else if (fair_coin(rng)) {
            rho_ = pivot_arm;
        } else {
            rho_ = candidates_[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(candidates_.size())))];
        }
        return rho_;
    }

    void observe(long u, const Feedback& fb) {
        if (plan_) {
            if (u == plan_->phase_end()) {
                set_.slots[static_cast<std::size_t>(plan_->leaving_slot - 1)] = plan_->entering_arm;
                plan_.reset();
            }
            return;
        }
        if (!fb.collision && fb.reward)
            stats_[static_cast<std::size_t>(rho_ - 1)].record(*fb.reward);
    }

    // instrumentation
    bool in_comm_phase() const { return plan_.has_value(); }
    const OrderedBestSet& in_force() const { return set_; }
    const std::vector<double>& frozen_means() const { return frozen_means_; }
    const std::vector<double>& frozen_indices() const { return frozen_indices_; }
    const std::vector<int>& candidates() const { return candidates_; }
    const std::vector<ArmStatistics>& statistics() const { return stats_; }
    int last_selection() const { return rho_; }
    long phases_started() const { return phases_started_; }
    long set_change_events() const { return set_change_events_; }
    const CommPlan* active_plan() const { return plan_ ? &*plan_ : nullptr; }

private:
    void round_start(long u) {
        if (plan_) return;
        if (swap_queue_.empty() && u % M_ == 0) block_update(u);
        if (!swap_queue_.empty()) {
            const auto [slot, arm] = swap_queue_.front();
            swap_queue_.pop_front();
            plan_ = comm_schedule(M_, K_, u, slot, arm);
            ++phases_started_;
        }
    }

    void block_update(long u) {
        const double f = exploration_rate(u);
        for (int k = 1; k <= K_; ++k) {
            const auto& st = stats_[static_cast<std::size_t>(k - 1)];
            frozen_means_[static_cast<std::size_t>(k - 1)] = st.mean();
            frozen_indices_[static_cast<std::size_t>(k - 1)] = klucb_index(st, f, tol_);
        }

        // Incumbent hysteresis: an outside arm displaces the weakest
        // incumbent only with strictly greater frozen mean. Ties break to
        // the lowest arm index on both sides.
        std::vector<int> target = set_.slots;
        std::vector<std::pair<int, int>> swaps;  // (leaving_slot, entering_arm)
        for (;;) {
            int weakest_slot = 1;
            for (int s = 2; s <= M_; ++s) {
                if (weaker(target[static_cast<std::size_t>(s - 1)],
                           target[static_cast<std::size_t>(weakest_slot - 1)]))
                    weakest_slot = s;
            }
            int best_outsider = 0;
            for (int k = 1; k <= K_; ++k) {
                if (std::find(target.begin(), target.end(), k) != target.end()) continue;
                if (best_outsider == 0 || stronger(k, best_outsider)) best_outsider = k;
            }
            const int incumbent = target[static_cast<std::size_t>(weakest_slot - 1)];
            if (best_outsider == 0 ||
                frozen_mean(best_outsider) <= frozen_mean(incumbent))
                break;
            target[static_cast<std::size_t>(weakest_slot - 1)] = best_outsider;
            swaps.emplace_back(weakest_slot, best_outsider);
        }

        if (!swaps.empty()) {
            ++set_change_events_;
            std::sort(swaps.begin(), swaps.end());
            if (M_ == 1) {
                // no followers, nothing to communicate
                set_.slots = target;
            } else {
                for (const auto& sw : swaps) swap_queue_.push_back(sw);
            }
        }
        refresh_pivot_and_candidates(target);
    }

    double frozen_mean(int arm) const { return frozen_means_[static_cast<std::size_t>(arm - 1)]; }
    // both comparisons break ties toward the lowest arm index
    bool weaker(int a, int b) const {
        return frozen_mean(a) < frozen_mean(b) || (frozen_mean(a) == frozen_mean(b) && a < b);
    }
    bool stronger(int a, int b) const {
        return frozen_mean(a) > frozen_mean(b) || (frozen_mean(a) == frozen_mean(b) && a < b);
    }

    void refresh_pivot_and_candidates(const std::vector<int>& target) {
        int pivot = 1;
        for (int s = 2; s <= M_; ++s) {
            if (weaker(target[static_cast<std::size_t>(s - 1)],
                       target[static_cast<std::size_t>(pivot - 1)]))
                pivot = s;
        }
        set_.pivot_slot = pivot;
        const double pivot_mean = frozen_mean(target[static_cast<std::size_t>(pivot - 1)]);
        candidates_.clear();
        for (int k = 1; k <= K_; ++k) {
            if (std::find(target.begin(), target.end(), k) != target.end()) continue;
            if (frozen_indices_[static_cast<std::size_t>(k - 1)] >= pivot_mean) candidates_.push_back(k);
        }
    }

    int M_;
    int K_;
    double tol_;
    std::vector<ArmStatistics> stats_;
    std::vector<double> frozen_means_;
    std::vector<double> frozen_indices_;
    OrderedBestSet set_;                         // in force (what followers play)
    std::vector<int> candidates_;                // exploration candidates B
    std::deque<std::pair<int, int>> swap_queue_; // undelivered swaps
    std::optional<CommPlan> plan_;
    int rho_ = 0;
    long phases_started_ = 0;
    long set_change_events_ = 0;
};

// A follower greedily plays her slot of the set in force and decodes the
// leader's collision-coded messages. The first collision outside a decode
// window is a signal; the next M rounds carry the leaving slot, the K rounds
// after that the entering arm. The new set applies at the end of the whole
// phase, whose position the follower knows from her rank.
class FollowerCore {
public:
    FollowerCore(int rank, int M, int K, std::vector<int> initial_slots = {})
        : rank_(rank), M_(M), K_(K) {
        if (initial_slots.empty()) {
            set_.slots.resize(static_cast<std::size_t>(M));
            std::iota(set_.slots.begin(), set_.slots.end(), 1);
        } else {
            if (static_cast<int>(initial_slots.size()) != M)
                throw std::invalid_argument("FollowerCore: initial slots must have length M");
            set_.slots = std::move(initial_slots);
        }
    }

    int select(long u) const { return set_.arm_at(slot_of(u, rank_, M_)); }

    void observe(long u, const Feedback& fb) {
        switch (stage_) {
            case Stage::Idle:
                if (fb.collision) {
                    signal_time_ = u;
                    slot_hits_.clear();
                    arm_hits_.clear();
                    stage_ = Stage::Decoding;
                }
                break;
            case Stage::Decoding: {
                const long offset = u - signal_time_;
                if (fb.collision) {
                    if (offset <= M_)
                        slot_hits_.push_back(static_cast<int>(offset));
                    else
                        arm_hits_.push_back(static_cast<int>(offset - M_));
                }
                if (offset == M_ + K_) {
                    if (slot_hits_.size() != 1 || arm_hits_.size() != 1)
                        throw protocol_violation("follower decode: message window must contain exactly one collision");
                    pending_slot_ = slot_hits_.front();
                    pending_arm_ = arm_hits_.front();
                    apply_at_ = signal_time_ + static_cast<long>(M_ - rank_ + 1) * (M_ + K_ + 1) - 1;
                    stage_ = Stage::Pending;
                    if (u == apply_at_) apply_pending();
                }
                break;
            }
            case Stage::Pending:
                // collisions here address other ranks; the message is self-delimiting
                if (u == apply_at_) apply_pending();
                break;
        }
    }

    int rank() const { return rank_; }
    const OrderedBestSet& in_force() const { return set_; }
    bool decoding() const { return stage_ != Stage::Idle; }

private:
    enum class Stage { Idle, Decoding, Pending };

    void apply_pending() {
        set_.slots[static_cast<std::size_t>(pending_slot_ - 1)] = pending_arm_;
        stage_ = Stage::Idle;
    }

    int rank_;
    int M_;
    int K_;
    OrderedBestSet set_;
    Stage stage_ = Stage::Idle;
    long signal_time_ = 0;
    std::vector<int> slot_hits_;
    std::vector<int> arm_hits_;
    int pending_slot_ = 0;
    int pending_arm_ = 0;
    long apply_at_ = 0;
};

// One DPE player as wired to the harness: initialization first, then leader
// or follower depending on the learned rank. The exploration-exploitation
// clock starts at 1 on the round after initialization completes.
class DpePlayer {
public:
    explicit DpePlayer(int num_arms, double bisect_tolerance = 1e-9)
        : K_(num_arms), tol_(bisect_tolerance), init_(num_arms) {}

    int select(long t, std::mt19937_64& rng) {
        if (!init_.done()) return init_.select(rng);
        const long u = t - ee_offset_;
        return leader_ ? leader_->select(u, rng) : follower_->select(u);
    }

    void observe(long t, const Feedback& fb) {
        if (!init_.done()) {
            init_.observe(fb.collision);
            if (init_.done()) {
                outcome_ = init_.result();
                ee_offset_ = t;
                if (outcome_->rank == 1)
                    leader_.emplace(outcome_->num_players, K_, tol_);
                else
                    follower_.emplace(outcome_->rank, outcome_->num_players, K_);
            }
            return;
        }
        const long u = t - ee_offset_;
        if (leader_)
            leader_->observe(u, fb);
        else
            follower_->observe(u, fb);
    }

    bool in_init() const { return !init_.done(); }
    const InitOutcome* outcome() const { return outcome_ ? &*outcome_ : nullptr; }
    const LeaderCore* leader() const { return leader_ ? &*leader_ : nullptr; }
    const FollowerCore* follower() const { return follower_ ? &*follower_ : nullptr; }
    long ee_round(long t) const { return t - ee_offset_; }

private:
    int K_;
    double tol_;
    InitProtocol init_;
    std::optional<InitOutcome> outcome_;
    std::optional<LeaderCore> leader_;
    std::optional<FollowerCore> follower_;
    long ee_offset_ = 0;
};

}  // namespace dpe
