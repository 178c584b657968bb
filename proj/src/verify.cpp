#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include "probelab/bench.hpp"
#include "probelab/elastic.hpp"
#include "probelab/errors.hpp"
#include "probelab/funnel.hpp"
#include "probelab/metrics.hpp"
#include "probelab/probe.hpp"
#include "probelab/uniform.hpp"

namespace probelab {

namespace {

// nullopt = pass, string = failure detail.
using CheckResult = std::optional<std::string>;

constexpr std::uint64_t kPhiRange = 512;

std::uint64_t encode_maybe_faulted(ProbeIndexPair pair, bool fault) {
    const std::uint64_t v = phi_encode(pair);
    return fault ? (v & ~std::uint64_t{1}) : v;  // fault drops the low bit
}

CheckResult check_phi_injectivity(bool fault) {
    std::vector<std::uint64_t> values;
    values.reserve(kPhiRange * kPhiRange);
    for (std::uint64_t i = 1; i <= kPhiRange; ++i)
        for (std::uint64_t j = 1; j <= kPhiRange; ++j)
            values.push_back(encode_maybe_faulted({i, j}, fault));
    std::sort(values.begin(), values.end());
    const auto dup = std::adjacent_find(values.begin(), values.end());
    if (dup != values.end())
        return "collision at encoded value " + std::to_string(*dup);
    return std::nullopt;
}

CheckResult check_phi_roundtrip(bool fault) {
    for (std::uint64_t i = 1; i <= kPhiRange; ++i) {
        for (std::uint64_t j = 1; j <= kPhiRange; ++j) {
            const auto back = phi_decode(encode_maybe_faulted({i, j}, fault));
            if (!back || !(*back == ProbeIndexPair{i, j}))
                return "decode(encode(" + std::to_string(i) + "," +
                       std::to_string(j) + ")) mismatch";
        }
    }
    return std::nullopt;
}

CheckResult check_phi_bound(bool fault) {
    for (std::uint64_t i = 1; i <= kPhiRange; ++i) {
        for (std::uint64_t j = 1; j <= kPhiRange; ++j) {
            const std::uint64_t v = encode_maybe_faulted({i, j}, fault);
            if (v >= 16 * i * j * j)
                return "phi(" + std::to_string(i) + "," + std::to_string(j) +
                       ") = " + std::to_string(v) + " >= 16*i*j^2";
        }
    }
    return std::nullopt;
}

CheckResult check_probe_determinism_range() {
    const ProbeSource source{12345};
    for (std::uint64_t key = 0; key < 64; ++key) {
        for (std::uint64_t modulus : {1ULL, 2ULL, 3ULL, 64ULL, 1000ULL, 65536ULL}) {
            for (std::uint64_t idx = 1; idx <= 16; ++idx) {
                const std::uint64_t a = source.probe(Key{key}, 7, idx, modulus);
                const std::uint64_t b = source.probe(Key{key}, 7, idx, modulus);
                if (a != b) return "probe not deterministic";
                if (a >= modulus)
                    return "probe out of range: " + std::to_string(a) +
                           " for modulus " + std::to_string(modulus);
            }
        }
    }
    if (source.probe(Key{7}, 0, 1, 1) != 0) return "modulus 1 must map to slot 0";
    return std::nullopt;
}

// Drives one elastic build, checking every completed batch boundary plus the
// end-of-build conservation, case-disjointness and no-reordering properties.
CheckResult drive_elastic_checked(std::uint64_t n, unsigned k, std::uint64_t seed) {
    ElasticTable table(ElasticParams{n, k, 4, seed});
    const auto& layout = table.layout();
    const auto& plan = table.plan();
    const std::uint64_t m = plan.total_insertions;

    std::vector<InsertRecord> records;
    records.reserve(m);
    std::uint64_t cumulative = 0;
    for (std::size_t b = 0; b < plan.batch_sizes.size(); ++b) {
        // The final batch is complete only when its size was not truncated.
        bool complete = b + 1 < plan.batch_sizes.size();
        if (!complete && b >= 1) {
            const std::uint64_t size_i = layout.sizes[b - 1];
            const std::uint64_t size_next = layout.sizes[b];
            const std::uint64_t raw = size_i - (size_i >> (k + 1)) -
                                      (3 * size_i + 3) / 4 +
                                      (3 * size_next + 3) / 4;
            complete = plan.batch_sizes[b] == raw;
        } else if (!complete) {
            complete = plan.batch_sizes[b] == (3 * layout.sizes[0] + 3) / 4;
        }

        for (std::uint64_t t = 0; t < plan.batch_sizes[b]; ++t)
            records.push_back(table.insert(Key{cumulative + t}));
        cumulative += plan.batch_sizes[b];

        if (!complete) continue;
        for (std::size_t j = 1; j <= b; ++j) {
            const std::uint64_t want =
                layout.sizes[j - 1] - (layout.sizes[j - 1] >> (k + 1));
            if (table.occupancy()[j - 1] != want)
                return "batch " + std::to_string(b) + " boundary: A_" +
                       std::to_string(j) + " occupancy " +
                       std::to_string(table.occupancy()[j - 1]) + " != " +
                       std::to_string(want);
        }
        const std::uint64_t want_next = (3 * layout.sizes[b] + 3) / 4;
        if (table.occupancy()[b] != want_next)
            return "batch " + std::to_string(b) + " boundary: A_" +
                   std::to_string(b + 1) + " occupancy " +
                   std::to_string(table.occupancy()[b]) + " != " +
                   std::to_string(want_next);
        for (std::size_t j = b + 2; j <= layout.sizes.size(); ++j)
            if (table.occupancy()[j - 1] != 0)
                return "batch boundary: A_" + std::to_string(j) + " touched early";
    }

    // Conservation: m slots filled, floor(delta*n) free.
    std::uint64_t occupied = 0;
    for (const auto& s : table.slots()) occupied += s.has_value();
    if (occupied != m || table.params().n - occupied != (n >> k))
        return "conservation violated after build";

    // No reordering: every record's slot still holds its key.
    for (const InsertRecord& rec : records) {
        const auto& s = table.slots()[rec.slot];
        if (!s || s->value != static_cast<std::uint64_t>(rec.insert_index))
            return "slot content changed after insertion";
    }

    // Case disjointness per batch: no batch mixes Case 2 and Case 3.
    std::size_t batch = 0;
    std::uint64_t upto = plan.batch_sizes.empty() ? 0 : plan.batch_sizes[0];
    bool saw2 = false, saw3 = false;
    for (const InsertRecord& rec : records) {
        while (rec.insert_index >= upto) {
            ++batch;
            upto += plan.batch_sizes[batch];
            saw2 = saw3 = false;
        }
        saw2 |= rec.tag == 2;
        saw3 |= rec.tag == 3;
        if (saw2 && saw3)
            return "batch " + std::to_string(batch) + " mixes Cases 2 and 3";
    }
    return std::nullopt;
}

CheckResult check_elastic_batch_boundaries(bool fast) {
    const std::vector<std::uint64_t> sizes = {1ULL << 6, 1ULL << 10, 1ULL << 14};
    const std::vector<unsigned> deltas = {2, 4};
    const unsigned seeds = fast ? 1 : 5;
    for (std::uint64_t n : sizes)
        for (unsigned k : deltas)
            for (unsigned s = 0; s < seeds; ++s)
                if (auto fail = drive_elastic_checked(n, k, mix_seed(99, s)))
                    return "n=" + std::to_string(n) + " k=" + std::to_string(k) +
                           " seed=" + std::to_string(s) + ": " + *fail;
    return std::nullopt;
}

template <typename Table>
CheckResult replay_lookup(Table& table, std::uint64_t m) {
    std::vector<InsertRecord> records;
    records.reserve(m);
    for (std::uint64_t key = 0; key < m; ++key)
        records.push_back(table.insert(Key{key}));
    for (const InsertRecord& rec : records) {
        const LookupResult found =
            table.lookup(Key{static_cast<std::uint64_t>(rec.insert_index)});
        if (!found.found)
            return "inserted key " + std::to_string(rec.insert_index) + " not found";
        if (found.probes != rec.search_probes)
            return "key " + std::to_string(rec.insert_index) + " found at probe " +
                   std::to_string(found.probes) + ", recorded " +
                   std::to_string(rec.search_probes);
    }
    for (std::uint64_t key = m; key < m + 64; ++key)
        if (table.lookup(Key{key}).found) return "absent key reported found";
    return std::nullopt;
}

CheckResult check_elastic_replay(bool fast) {
    const std::uint64_t n = fast ? (1ULL << 10) : (1ULL << 14);
    ElasticTable table(ElasticParams{n, 4, 4, 2024});
    return replay_lookup(table, table.total_insertions());
}

CheckResult check_uniform_replay(bool fast) {
    const std::uint64_t n = fast ? (1ULL << 10) : (1ULL << 14);
    UniformTable table(UniformParams{n, 2024});
    return replay_lookup(table, n - (n >> 4));
}

CheckResult check_funnel_replay(bool fast) {
    const std::uint64_t n = fast ? (1ULL << 12) : (1ULL << 14);
    FunnelTable table(FunnelParams{n, 4, 2024});
    return replay_lookup(table, table.max_insertions());
}

CheckResult check_funnel_probe_caps(bool fast) {
    const std::uint64_t n = fast ? (1ULL << 12) : (1ULL << 14);
    for (unsigned k : {3u, 5u}) {
        FunnelTable table(FunnelParams{n, k, 7});
        const std::uint64_t cap = table.probe_cap();
        const std::uint64_t m = table.max_insertions();
        for (std::uint64_t key = 0; key < m; ++key) {
            const InsertRecord rec = table.insert(Key{key});
            if (rec.search_probes != rec.insert_probes)
                return "greedy identity violated at key " + std::to_string(key);
            if (rec.insert_probes > cap)
                return "probe count " + std::to_string(rec.insert_probes) +
                       " exceeds deterministic cap " + std::to_string(cap);
            const auto& c = table.last_c_decision();
            if (c.used) {
                const std::uint64_t emptier =
                    c.occ_a <= c.occ_b ? c.bucket_a : c.bucket_b;
                if (c.chosen != emptier)
                    return "two-choice rule violated: chose bucket with occupancy " +
                           std::to_string(c.chosen == c.bucket_a ? c.occ_a : c.occ_b);
            }
        }
        std::uint64_t occupied = 0;
        for (const auto& s : table.slots()) occupied += s.has_value();
        if (occupied != m) return "funnel conservation violated";
    }
    return std::nullopt;
}

// ---- full-mode statistical sweeps -----------------------------------------

CheckResult check_elastic_uniform_trends(unsigned jobs) {
    const std::uint64_t n = 1ULL << 18;
    const unsigned trials = 20;
    std::vector<std::pair<double, double>> wce_points;
    double elastic_lo = 0, elastic_hi = 0, uniform_lo = 0, uniform_hi = 0;
    for (unsigned k = 2; k <= 8; ++k) {
        const CellResult e =
            run_cell(Scheme::elastic, n, k, 4, trials, 404, jobs, false);
        const CellResult u =
            run_cell(Scheme::uniform, n, k, 4, trials, 404, jobs, false);
        wce_points.emplace_back(static_cast<double>(k),
                                e.summary.worst_case_expected);
        if (k == 2) {
            elastic_lo = e.summary.amortized_mean;
            uniform_lo = u.summary.amortized_mean;
        }
        if (k == 8) {
            elastic_hi = e.summary.amortized_mean;
            uniform_hi = u.summary.amortized_mean;
        }
    }
    const double e_ratio = elastic_hi / elastic_lo;
    const double u_ratio = uniform_hi / uniform_lo;
    if (e_ratio > 1.5)
        return "elastic amortized ratio " + format_double(e_ratio) + " > 1.5";
    if (u_ratio < 2.0)
        return "uniform amortized ratio " + format_double(u_ratio) + " < 2.0";
    const LinearFit fit = growth_fit(wce_points);
    if (fit.r_squared < 0.8)
        return "elastic worst-case-expected linear fit r^2 = " +
               format_double(fit.r_squared) + " < 0.8";
    const double wce_ratio = wce_points.back().second / wce_points.front().second;
    if (wce_ratio > 6.0)
        return "elastic worst-case-expected ratio " + format_double(wce_ratio) +
               " > 6";
    return std::nullopt;
}

CheckResult check_funnel_reliability(unsigned jobs) {
    for (unsigned k : {3u, 6u}) {
        const CellResult cell =
            run_cell(Scheme::funnel, 1ULL << 18, k, 4, 20, 404, jobs, false);
        if (cell.summary.failures != 0)
            return std::to_string(cell.summary.failures) +
                   " funnel failures at k=" + std::to_string(k);
    }
    return std::nullopt;
}

CheckResult check_uniform_final_insert(unsigned jobs) {
    const CellResult cell =
        run_cell(Scheme::uniform, 1ULL << 16, 4, 4, 200, 404, jobs, false);
    const double mean = cell.summary.per_index_mean.back();
    if (mean < 0.85 * 16.0 || mean > 1.15 * 16.0)
        return "final-insertion mean " + format_double(mean) +
               " outside [13.6, 18.4]";
    return std::nullopt;
}

}  // namespace

bool run_verify(const VerifyOptions& options, std::ostream& report) {
    struct Property {
        const char* name;
        std::function<CheckResult()> run;
    };
    const bool fast = options.fast;
    const bool fault = options.inject_phi_fault;
    std::vector<Property> properties = {
        {"phi-injectivity", [=] { return check_phi_injectivity(fault); }},
        {"phi-roundtrip", [=] { return check_phi_roundtrip(fault); }},
        {"phi-bound", [=] { return check_phi_bound(fault); }},
        {"probe-determinism-range", [] { return check_probe_determinism_range(); }},
        {"elastic-batch-boundaries",
         [=] { return check_elastic_batch_boundaries(fast); }},
        {"elastic-replay-lookup", [=] { return check_elastic_replay(fast); }},
        {"funnel-probe-caps", [=] { return check_funnel_probe_caps(fast); }},
        {"funnel-replay-lookup", [=] { return check_funnel_replay(fast); }},
        {"uniform-replay-lookup", [=] { return check_uniform_replay(fast); }},
    };
    if (!fast) {
        const unsigned jobs = options.jobs;
        properties.push_back({"sweep-elastic-uniform-trends",
                              [=] { return check_elastic_uniform_trends(jobs); }});
        properties.push_back({"sweep-funnel-reliability",
                              [=] { return check_funnel_reliability(jobs); }});
        properties.push_back({"sweep-uniform-final-insert",
                              [=] { return check_uniform_final_insert(jobs); }});
    }

    unsigned passed = 0;
    for (const Property& property : properties) {
        const CheckResult failure = property.run();
        if (failure) {
            report << "FAIL  " << property.name << ": " << *failure << '\n';
        } else {
            report << "ok    " << property.name << '\n';
            ++passed;
        }
    }
    report << "verify: " << passed << "/" << properties.size()
           << " properties passed\n";
    return passed == properties.size();
}

}  // namespace probelab
