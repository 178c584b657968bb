#include <doctest.h>

#include <cstdint>
#include <numeric>
#include <vector>

#include "probelab/errors.hpp"
#include "probelab/funnel.hpp"
#include "probelab/probe.hpp"

using namespace probelab;

namespace {

// Finds a key whose level-`level` bucket equals `bucket`.
std::uint64_t key_for_bucket(const FunnelTable& table, unsigned level,
                             std::uint64_t bucket, std::uint64_t start = 0) {
    const ProbeSource source{table.params().seed};
    for (std::uint64_t key = start;; ++key) {
        if (source.probe(Key{key}, level, 1,
                         table.layout().level_buckets[level - 1]) == bucket)
            return key;
    }
}

void check_layout_invariants(const FunnelParams& params) {
    const FunnelLayout layout = build_funnel_layout(params);
    const unsigned k = layout.log2_inv_delta_effective;
    CHECK(layout.alpha == 4 * k + 10);
    CHECK(layout.beta == 2 * k);

    const std::uint64_t n = params.n;
    const std::uint64_t lo = (n + (1ULL << (k + 1)) - 1) >> (k + 1);
    const std::uint64_t hi = (3 * n) >> (k + 2);
    CHECK(layout.special_size >= lo);
    CHECK(layout.special_size <= hi);
    CHECK((n - layout.special_size) % layout.beta == 0);

    CHECK(layout.level_buckets.size() == layout.alpha);
    std::uint64_t buckets = 0;
    for (const std::uint64_t a : layout.level_buckets) {
        CHECK(a >= 1);
        buckets += a;
    }
    CHECK(buckets * layout.beta == n - layout.special_size);

    // +-1 ratio band on unadjusted pairs: both ends >= 2, the lower one not
    // clamped and not the final absorbing level.
    for (std::size_t i = 0; i + 2 < layout.level_buckets.size(); ++i) {
        const std::uint64_t a = layout.level_buckets[i];
        const std::uint64_t b = layout.level_buckets[i + 1];
        if (a < 2 || b < 2) continue;
        const std::uint64_t target = (3 * a + 3) / 4;
        CHECK(b >= target - 1);
        CHECK(b <= target + 1);
    }

    CHECK(layout.b_size + layout.c_size == layout.special_size);
    CHECK(layout.b_size - layout.c_size <= 1);
    CHECK(layout.c_bucket_size == 2 * layout.b_probe_cap);
    CHECK(layout.c_bucket_count * layout.c_bucket_size + layout.c_waste ==
          layout.c_size);
    CHECK(layout.c_bucket_count >= 1);
}

}  // namespace

TEST_CASE("funnel layout for n=1024, delta=1/8 matches the worked example") {
    const FunnelLayout layout = build_funnel_layout({1024, 3, 0});
    CHECK(layout.alpha == 22);
    CHECK(layout.beta == 6);
    CHECK(layout.special_size == 64);  // smallest of [64, 96] with 960 % 6 == 0
    CHECK((1024 - layout.special_size) / layout.beta == 160);

    // a_1 = ceil(160/4) = 40, then ceil(3a/4): 30 23 18 14 11 9, after which
    // the remaining 15 buckets spread one per level.
    const std::vector<std::uint64_t> prefix{40, 30, 23, 18, 14, 11, 9};
    REQUIRE(layout.level_buckets.size() == 22);
    for (std::size_t i = 0; i < prefix.size(); ++i)
        CHECK(layout.level_buckets[i] == prefix[i]);
    for (std::size_t i = prefix.size(); i < 22; ++i)
        CHECK(layout.level_buckets[i] == 1);
    CHECK(std::accumulate(layout.level_buckets.begin(), layout.level_buckets.end(),
                          std::uint64_t{0}) == 160);

    CHECK(layout.b_probe_cap == 4);     // ceil(log2 log2 1024) = ceil(log2 10)
    CHECK(layout.c_bucket_size == 8);   // 2 * 4
    CHECK(layout.b_size == 32);
    CHECK(layout.c_size == 32);
    CHECK(layout.c_bucket_count == 4);
    CHECK(layout.c_waste == 0);
}

TEST_CASE("funnel layout invariants hold across the envelope") {
    for (const std::uint64_t n : {1024ULL, 4096ULL, 16384ULL, 65536ULL}) {
        for (unsigned k = 3; k <= 8; ++k) {
            check_layout_invariants({n, k, 0});
        }
    }
}

TEST_CASE("delta above 1/8 is clamped for layout math only") {
    FunnelTable table(FunnelParams{4096, 2, 0});
    CHECK(table.layout().delta_clamped);
    CHECK(table.layout().log2_inv_delta_effective == 3);
    CHECK(table.max_insertions() == 4096 - 1024);  // requested delta drives m

    const FunnelLayout unclamped = build_funnel_layout({4096, 3, 0});
    CHECK(!unclamped.delta_clamped);
}

TEST_CASE("funnel rejects infeasible tiny configurations") {
    CHECK_THROWS_AS(build_funnel_layout({64, 3, 0}), ConfigError);
    CHECK_THROWS_AS(build_funnel_layout({128, 0, 0}), ConfigError);
}

TEST_CASE("attempted insertion scans one bucket in slot order") {
    FunnelTable table(FunnelParams{1024, 3, 17});
    const unsigned beta = table.layout().beta;

    // Route beta keys into one level-1 bucket.
    const std::uint64_t bucket = 5 % table.layout().level_buckets[0];
    std::uint64_t key = key_for_bucket(table, 1, bucket);
    auto first = table.attempted_insertion(1, Key{key});
    CHECK(first.success);
    CHECK(first.probes == 1);

    std::uint64_t probes_seen = 1;
    for (unsigned fill = 1; fill < beta; ++fill) {
        key = key_for_bucket(table, 1, bucket, key + 1);
        const auto r = table.attempted_insertion(1, Key{key});
        CHECK(r.success);
        CHECK(r.probes == fill + 1);  // first empty slot is the fill level
        probes_seen = r.probes;
    }
    CHECK(probes_seen == beta);  // last success scanned the whole bucket

    key = key_for_bucket(table, 1, bucket, key + 1);
    const auto full = table.attempted_insertion(1, Key{key});
    CHECK(!full.success);
    CHECK(full.probes == beta);
}

TEST_CASE("two-choice scan lands in the emptier bucket, ties to a") {
    // Worked example: occ(a)=2, occ(b)=1 -> b's second slot at scan position 4.
    const TwoChoiceScan r = two_choice_scan(2, 1, 8, false);
    CHECK(!r.overflow);
    CHECK(r.use_b);
    CHECK(r.slot_in_bucket == 1);
    CHECK(r.probes == 4);

    const TwoChoiceScan tie = two_choice_scan(3, 3, 8, false);
    CHECK(!tie.use_b);
    CHECK(tie.probes == 7);

    const TwoChoiceScan same = two_choice_scan(2, 2, 8, true);
    CHECK(!same.use_b);
    CHECK(same.probes == 5);

    CHECK(two_choice_scan(8, 8, 8, false).overflow);
    CHECK(two_choice_scan(8, 8, 8, true).overflow);
    const TwoChoiceScan one_full = two_choice_scan(8, 0, 8, false);
    CHECK(one_full.use_b);
    CHECK(one_full.probes == 2);
}

TEST_CASE("first insertion into a fresh table costs one probe at level 1") {
    FunnelTable table(FunnelParams{1024, 3, 9});
    const InsertRecord rec = table.insert(Key{0});
    CHECK(rec.tag == 1);
    CHECK(rec.search_probes == 1);
    CHECK(rec.insert_probes == 1);
}

TEST_CASE("a full build respects caps, greedy identity and the B/C accounting") {
    FunnelTable table(FunnelParams{16384, 3, 123});
    const std::uint64_t cap = table.probe_cap();
    const unsigned alpha = table.layout().alpha;
    const unsigned beta = table.layout().beta;
    const std::uint64_t m = table.max_insertions();

    std::vector<InsertRecord> records;
    records.reserve(m);
    std::uint64_t b_first_probe = 0, c_count = 0;
    for (std::uint64_t key = 0; key < m; ++key) {
        const InsertRecord rec = table.insert(Key{key});
        REQUIRE(rec.search_probes == rec.insert_probes);
        REQUIRE(rec.insert_probes <= cap);
        const auto& parts = table.last_breakdown();
        REQUIRE(parts.level_probes + parts.b_probes + parts.c_probes ==
                rec.insert_probes);
        if (rec.tag == kTagB || rec.tag == kTagC) {
            // Reaching the special array means every level scanned a full bucket.
            REQUIRE(parts.level_probes ==
                    std::uint64_t{alpha} * beta);
            if (rec.tag == kTagB && parts.b_probes == 1) {
                REQUIRE(rec.insert_probes == std::uint64_t{alpha} * beta + 1);
                ++b_first_probe;
            }
        }
        if (rec.tag == kTagC) {
            ++c_count;
            const auto& c = table.last_c_decision();
            REQUIRE(c.used);
            const std::uint64_t emptier = c.occ_a <= c.occ_b ? c.bucket_a : c.bucket_b;
            REQUIRE(c.chosen == emptier);
        }
        records.push_back(rec);
    }
    // The drive must actually exercise the special array for the assertions
    // above to mean anything.
    CHECK(b_first_probe > 0);
    CHECK(c_count > 0);

    std::uint64_t occupied = 0;
    for (const auto& slot : table.slots()) occupied += slot.has_value();
    CHECK(occupied == m);
    for (const InsertRecord& rec : records) {
        REQUIRE(table.slots()[rec.slot].has_value());
        REQUIRE(table.slots()[rec.slot]->value == rec.insert_index);
    }
}

TEST_CASE("lookup replays insertion order exactly") {
    FunnelTable table(FunnelParams{4096, 4, 77});
    std::vector<InsertRecord> records;
    for (std::uint64_t key = 0; key < table.max_insertions(); ++key)
        records.push_back(table.insert(Key{key}));
    for (const InsertRecord& rec : records) {
        const LookupResult r = table.lookup(Key{rec.insert_index});
        REQUIRE(r.found);
        REQUIRE(r.probes == rec.search_probes);
    }
    for (std::uint64_t key = table.max_insertions(); key < 8192; ++key) {
        const LookupResult r = table.lookup(Key{key});
        CHECK(!r.found);
        CHECK(r.probes <= table.probe_cap());
    }
}

TEST_CASE("exhausting the special array raises FunnelOverflow") {
    FunnelTable table(FunnelParams{1024, 3, 31});
    // Saturate every level bucket directly, bypassing the cursor.
    for (unsigned level = 1; level <= table.layout().alpha; ++level) {
        std::uint64_t key = 1'000'000;
        while (table.level_occupancy(level) < table.level_size(level)) {
            table.attempted_insertion(level, Key{key});
            ++key;
        }
    }
    // Now every insert lands in the special array, which has 64 slots but
    // m-insertions' worth of demand behind it.
    CHECK_THROWS_AS(
        [&] {
            for (std::uint64_t key = 0; key < table.max_insertions(); ++key)
                table.insert(Key{key});
        }(),
        FunnelOverflow);
}

TEST_CASE("well-loaded levels end almost full") {
    // Statistical witness: any level that saw at least 2|A_i| attempted
    // insertions keeps fewer than delta/4 of its slots free.
    constexpr unsigned k = 6;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        FunnelTable table(FunnelParams{1ULL << 18, k, seed});
        for (std::uint64_t key = 0; key < table.max_insertions(); ++key)
            table.insert(Key{key});
        for (unsigned level = 1; level <= table.layout().alpha; ++level) {
            const std::uint64_t size = table.level_size(level);
            if (table.level_attempts(level) < 2 * size) continue;
            const std::uint64_t free = size - table.level_occupancy(level);
            CHECK(free * (1ULL << k) * 4 < size);  // free/size < delta/4
        }
    }
}
