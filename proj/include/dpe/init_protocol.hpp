#pragma once

#include <stdexcept>
#include <vector>

#include "dpe/rng.hpp"

namespace dpe {

enum class InitPhase { Orthogonalization, RankAssignment, Done };

struct InitOutcome {
    int rank = 0;         // 1..M, 1 is the leader
    int num_players = 0;  // M, learned from the occupancy vector
    long duration_rounds = 0;
};

// Two-sub-phase initialization. Orthogonalization assigns each player a
// distinct arm in {1..K-1} via blocks of K+1 rounds: one grab round, then K
// signalling rounds played on arm K. A block without any observed collision
// means everyone is satisfied, and every player observes this simultaneously.
// Rank assignment then runs K-1 blocks of K-1 rounds; in block k the state-k
// player sweeps arms 1..K-1, colliding once with every sitter, which tells
// all players which states are occupied. Rank and M follow from occupancy.
class InitProtocol {
public:
    explicit InitProtocol(int num_arms) : K_(num_arms), occupancy_(static_cast<std::size_t>(num_arms), false) {
        if (num_arms < 2) throw std::invalid_argument("InitProtocol: need K >= 2");
    }

    InitPhase phase() const { return phase_; }
    bool done() const { return phase_ == InitPhase::Done; }
    int internal_state() const { return state_; }

    int select(std::mt19937_64& rng) {
        switch (phase_) {
            case InitPhase::Orthogonalization:
                if (pos_ == 0) {
                    if (state_ != 0) return state_;
                    last_pick_ = 1 + uniform_index(rng, K_ - 1);
                    return last_pick_;
                }
                // signalling round pos_ in 1..K
                if (state_ == 0 || state_ == pos_) return K_;
                return state_;
            case InitPhase::RankAssignment:
                return state_ == block_ ? pos_ : state_;
            case InitPhase::Done:
                throw std::logic_error("InitProtocol::select called after completion");
        }
        return 0;  // unreachable
    }

    void observe(bool collision) {
        if (phase_ == InitPhase::Done)
            throw std::logic_error("InitProtocol::observe called after completion");
        ++duration_;
        if (phase_ == InitPhase::Orthogonalization) {
            if (pos_ == 0 && state_ == 0 && !collision) state_ = last_pick_;
            block_collision_seen_ = block_collision_seen_ || collision;
            if (pos_ == K_) {
                if (!block_collision_seen_) {
                    phase_ = InitPhase::RankAssignment;
                    block_ = 1;
                    pos_ = 1;
                    block_collision_seen_ = false;
                } else {
                    pos_ = 0;
                    block_collision_seen_ = false;
                }
            } else {
                ++pos_;
            }
            return;
        }
        // RankAssignment: in block k, the sweeper knows her own row is
        // occupied; sitters infer occupancy from the single sweep collision.
        if (state_ == block_) {
            occupancy_[static_cast<std::size_t>(block_)] = true;
        } else if (collision) {
            occupancy_[static_cast<std::size_t>(block_)] = true;
        }
        if (pos_ == K_ - 1) {
            ++block_;
            pos_ = 1;
            if (block_ > K_ - 1) phase_ = InitPhase::Done;
        } else {
            ++pos_;
        }
    }

    InitOutcome result() const {
        if (phase_ != InitPhase::Done)
            throw std::logic_error("InitProtocol::result called before completion");
        InitOutcome out;
        out.duration_rounds = duration_;
        for (int k = 1; k <= K_ - 1; ++k) {
            if (!occupancy_[static_cast<std::size_t>(k)]) continue;
            ++out.num_players;
            if (k < state_) ++out.rank;
        }
        out.rank += 1;
        return out;
    }

private:
    int K_;
    InitPhase phase_ = InitPhase::Orthogonalization;
    int state_ = 0;      // 0 = unsatisfied, else the held arm
    int pos_ = 0;        // orthogonalization: 0 = grab round, 1..K signalling;
                         // rank assignment: round 1..K-1 within the block
    int block_ = 0;      // rank-assignment block index 1..K-1
    int last_pick_ = 0;
    bool block_collision_seen_ = false;
    std::vector<bool> occupancy_;  // index 1..K-1
    long duration_ = 0;
};

}  // namespace dpe
