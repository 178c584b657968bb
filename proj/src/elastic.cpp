#include "probelab/elastic.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "probelab/errors.hpp"

namespace probelab {

ElasticLayout build_elastic_layout(std::uint64_t n) {
    if (n < 2) throw ConfigError("elastic layout requires n >= 2");
    const unsigned levels = ceil_log2(n);
    ElasticLayout layout;
    layout.sizes.reserve(levels);
    std::uint64_t remaining = n;
    for (unsigned i = 0; i + 1 < levels; ++i) {
        const std::uint64_t s = (remaining + 1) / 2;
        layout.sizes.push_back(s);
        remaining -= s;
    }
    layout.sizes.push_back(remaining);  // last array absorbs the remainder
    layout.offsets.reserve(levels);
    std::uint64_t off = 0;
    for (std::uint64_t s : layout.sizes) {
        layout.offsets.push_back(off);
        off += s;
    }
    assert(off == n);
    return layout;
}

// End-of-batch occupancy target for A_i: |A_i| - floor(delta*|A_i|/2).
static std::uint64_t array_fill_target(std::uint64_t size, unsigned k) {
    return size - (size >> (k + 1));
}

static std::uint64_t three_quarters_up(std::uint64_t size) {
    return (3 * size + 3) / 4;  // ceil(0.75*size)
}

BatchPlan plan_batches(const ElasticLayout& layout, unsigned log2_inv_delta) {
    if (log2_inv_delta < 1) throw ConfigError("delta must be 2^-k with k >= 1");
    const unsigned k = log2_inv_delta;
    std::uint64_t n = 0;
    for (std::uint64_t s : layout.sizes) n += s;
    if ((n >> k) == 0) throw ConfigError("delta*n must be >= 1");

    BatchPlan plan;
    plan.total_insertions = n - (n >> k);
    std::uint64_t remaining = plan.total_insertions;

    std::uint64_t b0 = three_quarters_up(layout.sizes[0]);
    b0 = std::min(b0, remaining);
    plan.batch_sizes.push_back(b0);
    remaining -= b0;

    for (std::size_t i = 1; remaining > 0; ++i) {
        if (i + 1 > layout.sizes.size())
            throw std::logic_error("batch plan ran out of arrays before m insertions");
        const std::uint64_t size_i = layout.sizes[i - 1];
        const std::uint64_t size_next = layout.sizes[i];
        const std::uint64_t raw = array_fill_target(size_i, k) -
                                  three_quarters_up(size_i) +
                                  three_quarters_up(size_next);
        // raw is >= 0 for delta <= 1/2; keep the clamp for degenerate inputs.
        std::uint64_t b = std::min<std::uint64_t>(raw, remaining);
        plan.batch_sizes.push_back(b);
        remaining -= b;
    }
    return plan;
}

std::uint64_t f_budget(std::uint64_t free_slots, std::uint64_t size,
                       unsigned log2_inv_delta, unsigned budget_c) {
    if (free_slots == 0)
        throw std::domain_error("f_budget: array is full; callers must branch first");
    if (free_slots >= size) return 0;  // eps = 1
    const double log_inv_eps =
        std::log2(static_cast<double>(size) / static_cast<double>(free_slots));
    const double v = static_cast<double>(budget_c) *
                     std::min(log_inv_eps * log_inv_eps,
                              static_cast<double>(log2_inv_delta));
    return static_cast<std::uint64_t>(std::ceil(v));
}

ElasticTable::ElasticTable(const ElasticParams& params)
    : params_(params),
      layout_(build_elastic_layout(params.n)),
      plan_(plan_batches(layout_, params.log2_inv_delta)),
      source_{params.seed},
      slots_(params.n),
      occupancy_(layout_.sizes.size(), 0) {
    if (params.budget_c < 1) throw ConfigError("budget constant c must be >= 1");
}

std::uint64_t ElasticTable::scan_cap(std::size_t array_1based) const {
    std::uint64_t cap = params_.probe_cap_override;
    if (cap == 0)
        cap = 64 * layout_.sizes[array_1based - 1] *
              std::max<std::uint64_t>(1, ceil_log2(params_.n));
    // phi must stay encodable for any successful probe index.
    const int i_bits = std::bit_width(static_cast<std::uint64_t>(array_1based));
    const int j_bits = (62 - i_bits) / 2;
    const std::uint64_t phi_safe = (std::uint64_t{1} << j_bits) - 1;
    return std::min(cap, phi_safe);
}

std::optional<ElasticTable::Placement> ElasticTable::scan_array(
    std::size_t array_1based, Key key, std::uint64_t max_j, std::uint64_t& probes) {
    const std::uint64_t size = layout_.sizes[array_1based - 1];
    const std::uint64_t offset = layout_.offsets[array_1based - 1];
    const std::uint64_t cap = max_j != 0 ? max_j : scan_cap(array_1based);
    for (std::uint64_t j = 1; j <= cap; ++j) {
        const std::uint64_t local = source_.probe(key, array_1based, j, size);
        ++probes;
        if (!slots_[offset + local]) return Placement{j, local};
    }
    if (max_j != 0) return std::nullopt;
    throw ExpensiveCaseCapExceeded("elastic scan exceeded its probe cap in array " +
                                   std::to_string(array_1based));
}

InsertRecord ElasticTable::place(std::size_t array_1based, Placement where, Key key,
                                 std::int32_t tag, std::uint64_t probes) {
    const std::uint64_t global = layout_.offsets[array_1based - 1] + where.slot;
    assert(!slots_[global]);
    slots_[global] = key;
    ++occupancy_[array_1based - 1];

    InsertRecord rec;
    rec.scheme = Scheme::elastic;
    rec.insert_index = static_cast<std::uint32_t>(completed_);
    rec.tag = tag;
    rec.search_probes = phi_encode({array_1based, where.j});
    rec.insert_probes = probes;
    rec.slot = global;
    advance_cursor();
    return rec;
}

void ElasticTable::advance_cursor() {
    ++completed_;
    ++batch_done_;
    if (batch_ < plan_.batch_sizes.size() && batch_done_ == plan_.batch_sizes[batch_]) {
#ifndef NDEBUG
        // Completed batch i leaves A_j at its fill target for j <= i and
        // A_{i+1} exactly 3/4 full (unless this was the truncated final batch).
        if (completed_ < plan_.total_insertions) {
            for (std::size_t j = 1; j <= batch_; ++j)
                assert(occupancy_[j - 1] ==
                       array_fill_target(layout_.sizes[j - 1], params_.log2_inv_delta));
            assert(occupancy_[batch_] == three_quarters_up(layout_.sizes[batch_]));
        }
#endif
        ++batch_;
        batch_done_ = 0;
    }
}

InsertRecord ElasticTable::insert(Key key) {
    if (completed_ >= plan_.total_insertions)
        throw std::logic_error("elastic table: all planned insertions already done");

    std::uint64_t probes = 0;
    if (batch_ == 0) {
        auto spot = scan_array(1, key, 0, probes);
        return place(1, *spot, key, 0, probes);
    }

    const std::size_t a = batch_;  // batch i targets arrays i and i+1
    const std::uint64_t size1 = layout_.sizes[a - 1];
    const std::uint64_t size2 = layout_.sizes[a];
    const std::uint64_t free1 = size1 - occupancy_[a - 1];
    const std::uint64_t free2 = size2 - occupancy_[a];
    const std::uint64_t inv_delta = std::uint64_t{1} << params_.log2_inv_delta;

    // Exact rational comparisons: eps1 > delta/2 and eps2 > 1/4.
    const bool eps1_above = 2 * free1 * inv_delta > size1;
    const bool eps2_above = 4 * free2 > size2;

    if (eps1_above && eps2_above) {  // Case 1
        const std::uint64_t budget =
            f_budget(free1, size1, params_.log2_inv_delta, params_.budget_c);
        if (budget > 0) {
            if (auto spot = scan_array(a, key, budget, probes))
                return place(a, *spot, key, 1, probes);
        }
        auto spot = scan_array(a + 1, key, 0, probes);
        return place(a + 1, *spot, key, 1, probes);
    }
    if (!eps1_above) {  // Case 2: A_i is at target, everything goes to A_{i+1}
        auto spot = scan_array(a + 1, key, 0, probes);
        return place(a + 1, *spot, key, 2, probes);
    }
    if (!eps2_above) {  // Case 3: A_{i+1} is 3/4 full, uniform-probe A_i
        auto spot = scan_array(a, key, 0, probes);
        return place(a, *spot, key, 3, probes);
    }
    throw std::logic_error("elastic table: batch arithmetic violated");
}

std::uint64_t ElasticTable::default_lookup_cap() const {
    return 64 * params_.n * std::max<std::uint64_t>(1, ceil_log2(params_.n));
}

LookupResult ElasticTable::lookup(Key key, std::uint64_t probe_cap) const {
    const std::uint64_t cap = probe_cap != 0 ? probe_cap : default_lookup_cap();
    for (std::uint64_t p = 1; p <= cap; ++p) {
        const auto pair = phi_decode(p);
        if (!pair || pair->i > layout_.sizes.size()) continue;
        const std::uint64_t size = layout_.sizes[pair->i - 1];
        const std::uint64_t local = source_.probe(key, pair->i, pair->j, size);
        const auto& slot = slots_[layout_.offsets[pair->i - 1] + local];
        if (slot && *slot == key) return {true, p};
    }
    return {false, cap};
}

}  // namespace probelab
