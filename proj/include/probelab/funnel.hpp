#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "probelab/metrics.hpp"
#include "probelab/probe.hpp"

namespace probelab {

struct FunnelParams {
    std::uint64_t n = 0;
    unsigned log2_inv_delta = 3;  // delta = 2^-k; k < 3 is clamped for layout math
    std::uint64_t seed = 0;
};

// Bucketed geometric levels plus the two-part special array: B (uniform
// probing, capped attempts) and C (two-choice buckets).
struct FunnelLayout {
    unsigned alpha = 0;  // number of levels
    unsigned beta = 0;   // slots per bucket
    unsigned log2_inv_delta_effective = 3;
    bool delta_clamped = false;
    std::vector<std::uint64_t> level_buckets;  // a_1..a_alpha
    std::vector<std::uint64_t> level_offsets;
    std::uint64_t special_size = 0;
    std::uint64_t b_size = 0;
    std::uint64_t c_size = 0;
    std::uint64_t b_offset = 0;
    std::uint64_t c_offset = 0;
    std::uint64_t c_bucket_size = 0;   // 2*ceil(log2 log2 n)
    std::uint64_t c_bucket_count = 0;
    std::uint64_t c_waste = 0;         // trailing C slots too few for a bucket
    unsigned b_probe_cap = 1;          // ceil(log2 log2 n), floor 1
    // Reported, not enforced: min over i in [1, alpha-10] of
    // sum_{j>i}|A_j| / |A_i| (the ideal geometry keeps this above 2.5; tiny
    // clamped tails can drop below).
    double min_tail_ratio = 0.0;
};

FunnelLayout build_funnel_layout(const FunnelParams& params);

// Interleaved two-choice scan over buckets a and b with the given occupancy:
// a1, b1, a2, b2, ... stopping at the first empty slot. Equivalent to
// choosing the emptier bucket, ties to a.
struct TwoChoiceScan {
    bool overflow = false;
    bool use_b = false;
    std::uint64_t slot_in_bucket = 0;
    std::uint64_t probes = 0;  // scan position of the first empty slot
};

TwoChoiceScan two_choice_scan(std::uint64_t occ_a, std::uint64_t occ_b,
                              std::uint64_t bucket_size, bool same_bucket);

// Greedy bucketed table: each insertion attempts levels 1..alpha in order,
// then falls through to B and finally C. Search cost equals insertion cost.
class FunnelTable {
public:
    struct AttemptResult {
        bool success = false;
        std::uint64_t probes = 0;  // slots examined in the bucket
        std::uint64_t bucket = 0;
        std::uint64_t slot = 0;  // global slot when success
    };

    // Per-insertion probe breakdown of the most recent insert().
    struct ProbeBreakdown {
        std::uint64_t level_probes = 0;
        std::uint64_t b_probes = 0;
        std::uint64_t c_probes = 0;
    };

    // Two-choice decision trace of the most recent insert() that reached C.
    struct CDecision {
        bool used = false;
        std::uint64_t bucket_a = 0;
        std::uint64_t bucket_b = 0;
        std::uint64_t occ_a = 0;
        std::uint64_t occ_b = 0;
        std::uint64_t chosen = 0;
    };

    explicit FunnelTable(const FunnelParams& params);

    // Throws FunnelOverflow when both C buckets are full.
    InsertRecord insert(Key key);

    // One hashed-bucket attempt at the given level (sub-operation of
    // insert(); does not advance the insertion cursor).
    AttemptResult attempted_insertion(unsigned level, Key key);

    LookupResult lookup(Key key) const;

    const FunnelParams& params() const { return params_; }
    const FunnelLayout& layout() const { return layout_; }
    std::span<const std::optional<Key>> slots() const { return slots_; }
    std::uint64_t completed_insertions() const { return completed_; }
    std::uint64_t max_insertions() const {
        return params_.n - (params_.n >> params_.log2_inv_delta);
    }
    std::uint64_t level_attempts(unsigned level) const {
        return level_attempts_[level - 1];
    }
    std::uint64_t level_occupancy(unsigned level) const {
        return level_occ_[level - 1];
    }
    std::uint64_t level_size(unsigned level) const {
        return layout_.level_buckets[level - 1] * layout_.beta;
    }
    std::uint64_t b_occupancy() const { return b_occ_; }
    std::uint64_t keys_reaching_special() const { return special_keys_; }
    const ProbeBreakdown& last_breakdown() const { return last_; }
    const CDecision& last_c_decision() const { return last_c_; }
    // Deterministic per-insertion probe ceiling.
    std::uint64_t probe_cap() const {
        return std::uint64_t{1} * layout_.alpha * layout_.beta + layout_.b_probe_cap +
               2 * layout_.c_bucket_size;
    }

private:
    std::uint64_t bucket_occ(unsigned level, std::uint64_t bucket) const;

    FunnelParams params_;
    FunnelLayout layout_;
    ProbeSource source_;
    std::vector<std::optional<Key>> slots_;
    std::vector<std::uint16_t> bucket_occ_;  // level buckets, flattened
    std::vector<std::uint64_t> bucket_occ_base_;
    std::vector<std::uint64_t> level_occ_;
    std::vector<std::uint64_t> level_attempts_;
    std::vector<std::uint16_t> c_occ_;
    std::uint64_t b_occ_ = 0;
    std::uint64_t completed_ = 0;
    std::uint64_t special_keys_ = 0;
    ProbeBreakdown last_{};
    CDecision last_c_{};
};

}  // namespace probelab
