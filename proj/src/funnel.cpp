#include "probelab/funnel.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <stdexcept>

#include "probelab/errors.hpp"

namespace probelab {

FunnelLayout build_funnel_layout(const FunnelParams& params) {
    if (params.log2_inv_delta < 1)
        throw ConfigError("funnel: delta must be 2^-k with k >= 1");
    const std::uint64_t n = params.n;

    FunnelLayout layout;
    layout.delta_clamped = params.log2_inv_delta < 3;
    layout.log2_inv_delta_effective = std::max(params.log2_inv_delta, 3u);
    const unsigned k = layout.log2_inv_delta_effective;
    layout.alpha = 4 * k + 10;
    layout.beta = 2 * k;

    // Special array: smallest size in [ceil(delta*n/2), floor(3*delta*n/4)]
    // leaving the level region divisible by beta.
    const std::uint64_t lo =
        (n + (std::uint64_t{1} << (k + 1)) - 1) >> (k + 1);
    const std::uint64_t hi = (3 * n) >> (k + 2);
    if (lo < 2 || hi < lo)
        throw ConfigError("funnel: n too small for this delta");
    std::uint64_t special = 0;
    for (std::uint64_t s = lo; s <= hi; ++s) {
        if ((n - s) % layout.beta == 0) {
            special = s;
            break;
        }
    }
    if (special == 0)
        throw ConfigError("funnel: no feasible special-array size (n too small)");
    layout.special_size = special;

    const std::uint64_t total_buckets = (n - special) / layout.beta;
    if (total_buckets < layout.alpha)
        throw ConfigError("funnel: fewer buckets than levels (n too small)");

    // a_1 = ceil(total/4), then a_{i+1} = ceil(3*a_i/4), reserving one bucket
    // per remaining level. A level that cannot afford its target takes either
    // target-1 (still within the +-1 ratio tolerance) or clamps to 1; the
    // final level absorbs whatever is left.
    layout.level_buckets.reserve(layout.alpha);
    std::uint64_t rem = total_buckets;
    std::uint64_t prev = 0;
    for (unsigned i = 0; i < layout.alpha; ++i) {
        const std::uint64_t prelim =
            i == 0 ? (total_buckets + 3) / 4 : (3 * prev + 3) / 4;
        const std::uint64_t cap = rem - (layout.alpha - i - 1);
        std::uint64_t take;
        if (i + 1 == layout.alpha)
            take = rem;
        else if (cap >= prelim)
            take = prelim;
        else if (cap + 1 >= prelim)
            take = cap;
        else
            take = 1;
        assert(take >= 1 && take <= rem);
        layout.level_buckets.push_back(take);
        rem -= take;
        prev = take;
    }
    assert(rem == 0);

    layout.level_offsets.reserve(layout.alpha);
    std::uint64_t off = 0;
    for (std::uint64_t a : layout.level_buckets) {
        layout.level_offsets.push_back(off);
        off += a * layout.beta;
    }
    assert(off == n - special);

    layout.b_size = (special + 1) / 2;
    layout.c_size = special / 2;
    layout.b_offset = off;
    layout.c_offset = off + layout.b_size;

    const unsigned log2n = ceil_log2(n);
    layout.b_probe_cap = std::max(1u, ceil_log2(log2n));
    layout.c_bucket_size = 2 * layout.b_probe_cap;
    layout.c_bucket_count = layout.c_size / layout.c_bucket_size;
    layout.c_waste = layout.c_size % layout.c_bucket_size;
    if (layout.c_bucket_count == 0)
        throw ConfigError("funnel: special array too small for a two-choice bucket");

    // Tail-mass report for the first alpha-10 levels.
    layout.min_tail_ratio = std::numeric_limits<double>::infinity();
    std::uint64_t tail = 0;
    for (unsigned i = layout.alpha; i >= 1; --i) {
        if (i <= layout.alpha - 10)
            layout.min_tail_ratio =
                std::min(layout.min_tail_ratio,
                         static_cast<double>(tail) /
                             static_cast<double>(layout.level_buckets[i - 1]));
        tail += layout.level_buckets[i - 1];
    }
    return layout;
}

TwoChoiceScan two_choice_scan(std::uint64_t occ_a, std::uint64_t occ_b,
                              std::uint64_t bucket_size, bool same_bucket) {
    TwoChoiceScan r;
    if (same_bucket) {
        // a1, b1 probe the same slot; the first empty is seen on the a side.
        if (occ_a >= bucket_size) {
            r.overflow = true;
            return r;
        }
        r.use_b = false;
        r.slot_in_bucket = occ_a;
        r.probes = 2 * occ_a + 1;
        return r;
    }
    const std::uint64_t inf = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t pos_a = occ_a < bucket_size ? 2 * occ_a + 1 : inf;
    const std::uint64_t pos_b = occ_b < bucket_size ? 2 * occ_b + 2 : inf;
    if (pos_a == inf && pos_b == inf) {
        r.overflow = true;
        return r;
    }
    r.use_b = pos_b < pos_a;
    r.slot_in_bucket = r.use_b ? occ_b : occ_a;
    r.probes = std::min(pos_a, pos_b);
    return r;
}

FunnelTable::FunnelTable(const FunnelParams& params)
    : params_(params),
      layout_(build_funnel_layout(params)),
      source_{params.seed},
      slots_(params.n),
      level_occ_(layout_.alpha, 0),
      level_attempts_(layout_.alpha, 0),
      c_occ_(layout_.c_bucket_count, 0) {
    std::uint64_t total_buckets = 0;
    bucket_occ_base_.reserve(layout_.alpha);
    for (std::uint64_t a : layout_.level_buckets) {
        bucket_occ_base_.push_back(total_buckets);
        total_buckets += a;
    }
    bucket_occ_.assign(total_buckets, 0);
}

std::uint64_t FunnelTable::bucket_occ(unsigned level, std::uint64_t bucket) const {
    return bucket_occ_[bucket_occ_base_[level - 1] + bucket];
}

FunnelTable::AttemptResult FunnelTable::attempted_insertion(unsigned level, Key key) {
    AttemptResult r;
    r.bucket = source_.probe(key, level, 1, layout_.level_buckets[level - 1]);
    auto& occ = bucket_occ_[bucket_occ_base_[level - 1] + r.bucket];
    if (occ >= layout_.beta) {
        r.probes = layout_.beta;  // scanned the whole bucket
        return r;
    }
    r.success = true;
    r.probes = occ + 1;  // buckets fill in slot order, so first empty = occ
    r.slot = layout_.level_offsets[level - 1] + r.bucket * layout_.beta + occ;
    assert(!slots_[r.slot]);
    slots_[r.slot] = key;
    ++occ;
    ++level_occ_[level - 1];
    return r;
}

InsertRecord FunnelTable::insert(Key key) {
    if (completed_ >= max_insertions())
        throw std::logic_error("funnel table: all planned insertions already done");

    last_ = {};
    last_c_ = {};
    InsertRecord rec;
    rec.scheme = Scheme::funnel;
    rec.insert_index = static_cast<std::uint32_t>(completed_);

    std::uint64_t probes = 0;
    for (unsigned level = 1; level <= layout_.alpha; ++level) {
        ++level_attempts_[level - 1];
        const AttemptResult attempt = attempted_insertion(level, key);
        probes += attempt.probes;
        if (attempt.success) {
            last_.level_probes = probes;
            rec.tag = static_cast<std::int32_t>(level);
            rec.search_probes = rec.insert_probes = probes;
            rec.slot = attempt.slot;
            ++completed_;
            return rec;
        }
    }
    last_.level_probes = probes;
    ++special_keys_;

    for (std::uint64_t t = 1; t <= layout_.b_probe_cap; ++t) {
        const std::uint64_t local =
            source_.probe(key, layout_.alpha + 1, t, layout_.b_size);
        ++probes;
        ++last_.b_probes;
        auto& slot = slots_[layout_.b_offset + local];
        if (!slot) {
            slot = key;
            ++b_occ_;
            rec.tag = kTagB;
            rec.search_probes = rec.insert_probes = probes;
            rec.slot = layout_.b_offset + local;
            ++completed_;
            return rec;
        }
    }

    const std::uint64_t cnt = layout_.c_bucket_count;
    const std::uint64_t a = source_.probe(key, layout_.alpha + 2, 1, cnt);
    const std::uint64_t b = source_.probe(key, layout_.alpha + 3, 1, cnt);
    const TwoChoiceScan scan =
        two_choice_scan(c_occ_[a], c_occ_[b], layout_.c_bucket_size, a == b);
    last_c_ = {true, a, b, c_occ_[a], c_occ_[b], scan.use_b ? b : a};
    if (scan.overflow)
        throw FunnelOverflow("funnel table: both two-choice buckets are full");
    const std::uint64_t chosen = scan.use_b ? b : a;
    const std::uint64_t global =
        layout_.c_offset + chosen * layout_.c_bucket_size + scan.slot_in_bucket;
    assert(!slots_[global]);
    slots_[global] = key;
    ++c_occ_[chosen];
    probes += scan.probes;
    last_.c_probes = scan.probes;
    rec.tag = kTagC;
    rec.search_probes = rec.insert_probes = probes;
    rec.slot = global;
    ++completed_;
    return rec;
}

LookupResult FunnelTable::lookup(Key key) const {
    std::uint64_t probes = 0;
    for (unsigned level = 1; level <= layout_.alpha; ++level) {
        const std::uint64_t bucket =
            source_.probe(key, level, 1, layout_.level_buckets[level - 1]);
        const std::uint64_t base =
            layout_.level_offsets[level - 1] + bucket * layout_.beta;
        for (std::uint64_t t = 0; t < layout_.beta; ++t) {
            ++probes;
            const auto& slot = slots_[base + t];
            if (!slot) return {false, probes};  // greedy stop
            if (*slot == key) return {true, probes};
        }
    }
    for (std::uint64_t t = 1; t <= layout_.b_probe_cap; ++t) {
        const std::uint64_t local =
            source_.probe(key, layout_.alpha + 1, t, layout_.b_size);
        ++probes;
        const auto& slot = slots_[layout_.b_offset + local];
        if (!slot) return {false, probes};
        if (*slot == key) return {true, probes};
    }
    const std::uint64_t cnt = layout_.c_bucket_count;
    const std::uint64_t a = source_.probe(key, layout_.alpha + 2, 1, cnt);
    const std::uint64_t b = source_.probe(key, layout_.alpha + 3, 1, cnt);
    for (std::uint64_t t = 0; t < layout_.c_bucket_size; ++t) {
        for (const std::uint64_t bucket : {a, b}) {
            ++probes;
            const auto& slot =
                slots_[layout_.c_offset + bucket * layout_.c_bucket_size + t];
            if (!slot) return {false, probes};
            if (*slot == key) return {true, probes};
        }
    }
    return {false, probes};
}

}  // namespace probelab
