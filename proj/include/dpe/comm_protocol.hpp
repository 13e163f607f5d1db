#pragma once

#include <stdexcept>
#include <vector>

namespace dpe {

// Raised when a decoded message window does not contain exactly one
// collision. The harness aborts the offending run with a diagnostic row.
struct protocol_violation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Slot played at round t by the player of the given rank (leader is rank 1).
// For fixed t the map rank -> slot is a permutation of 1..M.
inline int slot_of(long t, int rank, int M) {
    return static_cast<int>((t + rank) % M) + 1;
}

// One (leaving_slot, entering_arm) message, delivered as M-1 sub-blocks of
// M+K+1 rounds, one per follower rank 2..M. Within the sub-block for rank r
// the leader collides with that follower three times: the signal in round 1,
// the slot message in round 1+leaving_slot, and the arm message in round
// 1+M+entering_arm. Everybody else keeps playing their slot arms of the set
// in force, so those are the only collisions of the phase.
struct CommPlan {
    long phase_start = 0;  // absolute round of the rank-2 signal
    int leaving_slot = 0;  // 1..M
    int entering_arm = 0;  // 1..K
    int M = 0;
    int K = 0;

    long length() const { return static_cast<long>(M - 1) * (M + K + 1); }
    long phase_end() const { return phase_start + length() - 1; }
    bool contains(long t) const { return t >= phase_start && t <= phase_end(); }

    // Follower rank addressed at absolute round t, and the position within
    // that follower's sub-block (1..M+K+1).
    int target_rank(long t) const { return 2 + static_cast<int>((t - phase_start) / (M + K + 1)); }
    int sub_block_pos(long t) const { return 1 + static_cast<int>((t - phase_start) % (M + K + 1)); }

    bool is_collision_round(long t) const {
        const int p = sub_block_pos(t);
        return p == 1 || p == 1 + leaving_slot || p == 1 + M + entering_arm;
    }

    // Arm the leader selects at round t of the phase: the addressed
    // follower's current arm on collision rounds, her own slot arm otherwise.
    // `in_force` holds the ordered set the followers still play.
    int leader_arm(long t, const std::vector<int>& in_force) const {
        const int rank = is_collision_round(t) ? target_rank(t) : 1;
        return in_force[static_cast<std::size_t>(slot_of(t, rank, M) - 1)];
    }

    // Absolute rounds at which the follower of the given rank experiences a
    // collision from this plan.
    std::vector<long> collision_rounds(int rank) const {
        const long base = phase_start + static_cast<long>(rank - 2) * (M + K + 1);
        return {base, base + leaving_slot, base + M + entering_arm};
    }
};

inline CommPlan comm_schedule(int M, int K, long phase_start, int leaving_slot, int entering_arm) {
    if (leaving_slot < 1 || leaving_slot > M)
        throw std::invalid_argument("comm_schedule: leaving_slot out of range");
    if (entering_arm < 1 || entering_arm > K)
        throw std::invalid_argument("comm_schedule: entering_arm out of range");
    CommPlan plan;
    plan.phase_start = phase_start;
    plan.leaving_slot = leaving_slot;
    plan.entering_arm = entering_arm;
    plan.M = M;
    plan.K = K;
    return plan;
}

}  // namespace dpe
