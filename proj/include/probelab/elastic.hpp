#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "probelab/metrics.hpp"
#include "probelab/probe.hpp"

namespace probelab {

struct ElasticParams {
    std::uint64_t n = 0;
    unsigned log2_inv_delta = 1;  // delta = 2^-k, k >= 1
    unsigned budget_c = 4;
    std::uint64_t seed = 0;
    // Testing knob: overrides the 64*|A_i|*ceil(log2 n) uniform-scan cap when
    // nonzero. Leave 0 for the real cap.
    std::uint64_t probe_cap_override = 0;
};

// Geometric subarray decomposition: sizes halve (within +-1) and sum to n;
// there are ceil(log2 n) of them.
struct ElasticLayout {
    std::vector<std::uint64_t> sizes;
    std::vector<std::uint64_t> offsets;
};

ElasticLayout build_elastic_layout(std::uint64_t n);

// Insertion schedule. batch_sizes[0] fills A_1 to ceil(0.75*|A_1|); batch i
// then tops A_i up to |A_i| - floor(delta*|A_i|/2) while filling A_{i+1} to
// ceil(0.75*|A_{i+1}|). Truncated so the sizes sum to exactly
// m = n - floor(delta*n); the final batch may be partial.
struct BatchPlan {
    std::vector<std::uint64_t> batch_sizes;
    std::uint64_t total_insertions = 0;
};

BatchPlan plan_batches(const ElasticLayout& layout, unsigned log2_inv_delta);

// Probe budget f(eps) = ceil(c * min(log2(eps^-1)^2, log2(delta^-1))) for
// eps = free_slots/size. free_slots must be >= 1 (callers branch to Case 2
// when an array is at its fill target).
std::uint64_t f_budget(std::uint64_t free_slots, std::uint64_t size,
                       unsigned log2_inv_delta, unsigned budget_c);

// Non-greedy open-addressing table with geometric subarrays. Insertions are
// driven in batches; within batch i >= 1 each key lands in A_i or A_{i+1}
// according to the three-case rule on the arrays' free fractions. Keys are
// never moved once placed.
class ElasticTable {
public:
    explicit ElasticTable(const ElasticParams& params);

    // Places the key and reports its probe accounting. tag is 0 for batch-0
    // insertions and 1/2/3 for the case used. search_probes is always
    // phi(array, j) for the placement's within-array probe index j.
    InsertRecord insert(Key key);

    // Walks the linearized probe sequence h_1, h_2, ..., probing only indices
    // that decode to a valid (array, j) pair. For an inserted key the found
    // index equals the recorded search_probes. probe_cap 0 means the default.
    LookupResult lookup(Key key, std::uint64_t probe_cap = 0) const;

    const ElasticParams& params() const { return params_; }
    const ElasticLayout& layout() const { return layout_; }
    const BatchPlan& plan() const { return plan_; }
    std::span<const std::optional<Key>> slots() const { return slots_; }
    std::span<const std::uint64_t> occupancy() const { return occupancy_; }
    std::uint64_t completed_insertions() const { return completed_; }
    std::uint64_t total_insertions() const { return plan_.total_insertions; }
    // Batch the next insertion belongs to.
    std::size_t current_batch() const { return batch_; }
    std::uint64_t free_slots_in(std::size_t array_1based) const {
        return layout_.sizes[array_1based - 1] - occupancy_[array_1based - 1];
    }
    std::uint64_t default_lookup_cap() const;

private:
    struct Placement {
        std::uint64_t j = 0;     // within-array probe index
        std::uint64_t slot = 0;  // local slot in the array
    };

    std::uint64_t scan_cap(std::size_t array_1based) const;
    // First free slot along h_{array,1}, h_{array,2}, ...; counts every probe
    // into probes. max_j 0 means capped only by scan_cap (throws
    // ExpensiveCaseCapExceeded beyond it); otherwise returns nullopt once
    // max_j probes all hit occupied slots.
    std::optional<Placement> scan_array(std::size_t array_1based, Key key,
                                        std::uint64_t max_j, std::uint64_t& probes);
    InsertRecord place(std::size_t array_1based, Placement where, Key key,
                       std::int32_t tag, std::uint64_t probes);
    void advance_cursor();

    ElasticParams params_;
    ElasticLayout layout_;
    BatchPlan plan_;
    ProbeSource source_;
    std::vector<std::optional<Key>> slots_;
    std::vector<std::uint64_t> occupancy_;
    std::uint64_t completed_ = 0;
    std::size_t batch_ = 0;
    std::uint64_t batch_done_ = 0;
};

}  // namespace probelab
