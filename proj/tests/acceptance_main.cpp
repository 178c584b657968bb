// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code 0 iff all pass.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "probelab/bench.hpp"
#include "probelab/elastic.hpp"
#include "probelab/errors.hpp"
#include "probelab/funnel.hpp"
#include "probelab/metrics.hpp"
#include "probelab/probe.hpp"
#include "probelab/uniform.hpp"

using namespace probelab;

namespace {

constexpr std::uint64_t kSweepN = 1ULL << 18;
constexpr unsigned kSweepTrials = 20;
constexpr std::uint64_t kSweepSeed = 1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) { return format_double(v); }

unsigned jobs() {
    return std::max(1u, std::thread::hardware_concurrency());
}

// ---- shared sweep data ------------------------------------------------------

struct SweepData {
    std::map<unsigned, SweepSummary> elastic;
    std::map<unsigned, SweepSummary> uniform;
    std::map<unsigned, SweepSummary> funnel;
    unsigned elastic_trials = 0;
    unsigned elastic_case3_big_batch_trials = 0;
    bool funnel_cap_ok = true;
    std::string funnel_cap_detail;
};

std::size_t array_of_slot(const ElasticLayout& layout, std::uint64_t slot) {
    for (std::size_t a = layout.sizes.size(); a >= 1; --a)
        if (slot >= layout.offsets[a - 1]) return a;
    return 0;
}

const SweepData& sweeps() {
    static const SweepData data = [] {
        SweepData d;
        for (unsigned k = 2; k <= 8; ++k) {
            std::cerr << "  [sweep] n=2^18 k=" << k << " x" << kSweepTrials
                      << " trials (elastic, uniform, funnel)\n";
            // Elastic keeps records long enough to scan for Case-3 events in
            // large batches.
            CellResult e = run_cell(Scheme::elastic, kSweepN, k, 4, kSweepTrials,
                                    kSweepSeed, jobs(), /*keep_records=*/true);
            const ElasticLayout layout = build_elastic_layout(kSweepN);
            for (const TrialResult& trial : e.trials) {
                if (trial.failed) continue;
                ++d.elastic_trials;
                for (const InsertRecord& rec : trial.records) {
                    if (rec.tag == 3 &&
                        layout.sizes[array_of_slot(layout, rec.slot) - 1] >=
                            (1ULL << 10)) {
                        ++d.elastic_case3_big_batch_trials;
                        break;
                    }
                }
            }
            e.trials.clear();
            d.elastic.emplace(k, std::move(e.summary));

            d.uniform.emplace(k, run_cell(Scheme::uniform, kSweepN, k, 4,
                                          kSweepTrials, kSweepSeed, jobs(), false)
                                     .summary);

            CellResult f = run_cell(Scheme::funnel, kSweepN, k, 4, kSweepTrials,
                                    kSweepSeed, jobs(), /*keep_records=*/true);
            const FunnelLayout fl = build_funnel_layout({kSweepN, k, 0});
            const std::uint64_t cap = std::uint64_t{fl.alpha} * fl.beta +
                                      5 * ceil_log2(ceil_log2(kSweepN));
            for (const TrialResult& trial : f.trials) {
                for (const InsertRecord& rec : trial.records) {
                    if (rec.search_probes > cap) {
                        d.funnel_cap_ok = false;
                        d.funnel_cap_detail =
                            "k=" + std::to_string(k) + " trial " +
                            std::to_string(trial.trial) + " probes " +
                            std::to_string(rec.search_probes) + " > " +
                            std::to_string(cap);
                    }
                }
            }
            f.trials.clear();
            d.funnel.emplace(k, std::move(f.summary));
        }
        return d;
    }();
    return data;
}

// ---- criteria ---------------------------------------------------------------

Outcome criterion_phi_suite() {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::uint64_t> values;
    values.reserve(512 * 512);
    for (std::uint64_t i = 1; i <= 512; ++i) {
        for (std::uint64_t j = 1; j <= 512; ++j) {
            const std::uint64_t v = phi_encode({i, j});
            if (v >= 16 * i * j * j)
                return {false, "bound violated at (" + std::to_string(i) + "," +
                                   std::to_string(j) + ")"};
            if (phi_decode(v) != ProbeIndexPair{i, j})
                return {false, "round-trip failed at (" + std::to_string(i) + "," +
                                   std::to_string(j) + ")"};
            values.push_back(v);
        }
    }
    std::sort(values.begin(), values.end());
    if (std::adjacent_find(values.begin(), values.end()) != values.end())
        return {false, "injectivity violated"};
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (secs >= 5.0) return {false, "suite took " + fmt(secs) + "s >= 5s"};
    return {true, "262144 pairs injective, reversible, bounded in " + fmt(secs) + "s"};
}

std::optional<std::string> elastic_boundaries(std::uint64_t n, unsigned k,
                                              std::uint64_t seed) {
    ElasticTable table(ElasticParams{n, k, 4, seed});
    const auto& plan = table.plan();
    const auto& layout = table.layout();
    std::uint64_t done = 0;
    for (std::size_t b = 0; b < plan.batch_sizes.size(); ++b) {
        for (std::uint64_t t = 0; t < plan.batch_sizes[b]; ++t)
            table.insert(Key{done + t});
        done += plan.batch_sizes[b];

        std::uint64_t untruncated;
        if (b == 0) {
            untruncated = (3 * layout.sizes[0] + 3) / 4;
        } else {
            untruncated = layout.sizes[b - 1] - (layout.sizes[b - 1] >> (k + 1)) -
                          (3 * layout.sizes[b - 1] + 3) / 4 +
                          (3 * layout.sizes[b] + 3) / 4;
        }
        if (plan.batch_sizes[b] != untruncated) continue;  // partial final batch

        for (std::size_t j = 1; j <= b; ++j) {
            const std::uint64_t want =
                layout.sizes[j - 1] - (layout.sizes[j - 1] >> (k + 1));
            if (table.occupancy()[j - 1] != want)
                return "n=" + std::to_string(n) + " k=" + std::to_string(k) +
                       " batch " + std::to_string(b) + ": A_" + std::to_string(j) +
                       " holds " + std::to_string(table.occupancy()[j - 1]) +
                       ", expected " + std::to_string(want);
        }
        const std::uint64_t want_next = (3 * layout.sizes[b] + 3) / 4;
        if (table.occupancy()[b] != want_next)
            return "n=" + std::to_string(n) + " k=" + std::to_string(k) +
                   " batch " + std::to_string(b) + ": A_" + std::to_string(b + 1) +
                   " holds " + std::to_string(table.occupancy()[b]) +
                   ", expected " + std::to_string(want_next);
        for (std::size_t j = b + 2; j <= layout.sizes.size(); ++j)
            if (table.occupancy()[j - 1] != 0)
                return "n=" + std::to_string(n) + " batch " + std::to_string(b) +
                       ": A_" + std::to_string(j) + " touched early";
    }
    return std::nullopt;
}

Outcome criterion_batch_exactness() {
    unsigned boundaries = 0;
    for (const std::uint64_t n : {1ULL << 6, 1ULL << 10, 1ULL << 14}) {
        for (const unsigned k : {2u, 4u}) {
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                if (auto fail = elastic_boundaries(n, k, mix_seed(2, seed)))
                    return {false, *fail};
                ++boundaries;
            }
        }
    }
    return {true, std::to_string(boundaries) + " builds, every completed batch exact"};
}

Outcome criterion_elastic_flatness() {
    const SweepData& d = sweeps();
    const double e_ratio =
        d.elastic.at(8).amortized_mean / d.elastic.at(2).amortized_mean;
    const double u_ratio =
        d.uniform.at(8).amortized_mean / d.uniform.at(2).amortized_mean;
    const bool pass = e_ratio <= 1.5 && u_ratio >= 2.0;
    return {pass, "elastic ratio " + fmt(e_ratio) + " (<= 1.5), uniform ratio " +
                      fmt(u_ratio) + " (>= 2.0)"};
}

Outcome criterion_elastic_worst_case_growth() {
    const SweepData& d = sweeps();
    std::vector<std::pair<double, double>> points;
    for (unsigned k = 2; k <= 8; ++k)
        points.emplace_back(static_cast<double>(k),
                            d.elastic.at(k).worst_case_expected);
    const LinearFit fit = growth_fit(points);
    const double ratio = d.elastic.at(8).worst_case_expected /
                         d.elastic.at(2).worst_case_expected;
    const bool pass = fit.r_squared >= 0.8 && ratio <= 6.0;
    return {pass, "linear r^2 " + fmt(fit.r_squared) + " (>= 0.8), ratio " +
                      fmt(ratio) + " (<= 6)"};
}

Outcome criterion_expensive_case_rarity() {
    const SweepData& d = sweeps();
    const double fraction = static_cast<double>(d.elastic_case3_big_batch_trials) /
                            static_cast<double>(d.elastic_trials);
    const bool pass = fraction <= 0.05;
    return {pass, std::to_string(d.elastic_case3_big_batch_trials) + "/" +
                      std::to_string(d.elastic_trials) +
                      " trials with Case 3 in a batch of size >= 2^10 (" +
                      fmt(fraction * 100) + "%, <= 5%)"};
}

Outcome criterion_funnel_cap() {
    const SweepData& d = sweeps();
    if (!d.funnel_cap_ok) return {false, d.funnel_cap_detail};
    return {true, "all records within alpha*beta + 5*ceil(log2 log2 n)"};
}

Outcome criterion_funnel_failures() {
    const SweepData& d = sweeps();
    const unsigned f3 = d.funnel.at(3).failures;
    const unsigned f6 = d.funnel.at(6).failures;
    const bool pass = f3 == 0 && f6 == 0;
    return {pass, "failures k=3: " + std::to_string(f3) +
                      ", k=6: " + std::to_string(f6) + " (both must be 0)"};
}

Outcome criterion_funnel_worst_case_fit() {
    const SweepData& d = sweeps();
    std::vector<std::pair<double, double>> quad, lin;
    for (unsigned k = 3; k <= 8; ++k) {
        const double y = d.funnel.at(k).worst_case_expected;
        quad.emplace_back(static_cast<double>(k) * k, y);
        lin.emplace_back(static_cast<double>(1ULL << k), y);
    }
    const double r2_quad = growth_fit(quad).r_squared;
    const double r2_lin = growth_fit(lin).r_squared;
    const bool pass = r2_quad >= r2_lin;
    return {pass, "r^2(log^2 model) " + fmt(r2_quad) + " vs r^2(1/delta model) " +
                      fmt(r2_lin)};
}

Outcome criterion_funnel_amortized() {
    const SweepData& d = sweeps();
    const double lo = d.funnel.at(2).amortized_mean;
    const double hi = d.funnel.at(8).amortized_mean;
    const bool pass = hi <= 4.0 * lo;
    return {pass, "amortized k=8 " + fmt(hi) + " vs 4 x k=2 " + fmt(4.0 * lo)};
}

Outcome criterion_uniform_baseline() {
    const CellResult cell =
        run_cell(Scheme::uniform, 1ULL << 16, 4, 4, 200, 10, jobs(), false);
    const double mean = cell.summary.per_index_mean.back();
    const bool pass = mean >= 0.85 * 16.0 && mean <= 1.15 * 16.0;
    return {pass, "final-insertion mean " + fmt(mean) + " in [13.6, 18.4]"};
}

template <typename Table>
std::optional<std::string> replay_multiset(Table& table, std::uint64_t m) {
    std::vector<std::uint64_t> recorded, replayed;
    recorded.reserve(m);
    replayed.reserve(m);
    for (std::uint64_t key = 0; key < m; ++key)
        recorded.push_back(table.insert(Key{key}).search_probes);
    for (std::uint64_t key = 0; key < m; ++key) {
        const LookupResult r = table.lookup(Key{key});
        if (!r.found) return "key " + std::to_string(key) + " not found";
        replayed.push_back(r.probes);
    }
    std::sort(recorded.begin(), recorded.end());
    std::sort(replayed.begin(), replayed.end());
    if (recorded != replayed) return "lookup multiset differs from records";
    return std::nullopt;
}

Outcome criterion_replay_equality() {
    const std::uint64_t n = 1ULL << 14;
    {
        ElasticTable table(ElasticParams{n, 4, 4, 21});
        if (auto fail = replay_multiset(table, table.total_insertions()))
            return {false, "elastic: " + *fail};
    }
    {
        FunnelTable table(FunnelParams{n, 4, 21});
        if (auto fail = replay_multiset(table, table.max_insertions()))
            return {false, "funnel: " + *fail};
    }
    {
        UniformTable table(UniformParams{n, 4, 21});
        if (auto fail = replay_multiset(table, table.max_insertions()))
            return {false, "uniform: " + *fail};
    }
    return {true, "multisets equal for all three schemes at n=2^14"};
}

int command_status(const std::string& command) {
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Outcome criterion_cli_determinism() {
    const char* bin = std::getenv("PROBELAB_BIN");
    if (!bin) return {false, "PROBELAB_BIN not set"};
    const auto tmp = std::filesystem::temp_directory_path();
    const std::string a = (tmp / "probelab_acc_a.csv").string();
    const std::string b = (tmp / "probelab_acc_b.csv").string();

    const std::string run = std::string(bin) +
                            " run --scheme elastic --n 16384 --log2-inv-delta 4"
                            " --trials 3 --seed 9 --detail per_insertion --out ";
    if (command_status(run + a + " 2>/dev/null") != 0)
        return {false, "per-insertion run failed"};
    if (command_status(run + b + " 2>/dev/null") != 0)
        return {false, "per-insertion rerun failed"};
    if (read_file(a) != read_file(b))
        return {false, "per-insertion reruns differ"};

    const std::string sweep =
        std::string(bin) +
        " sweep --scheme uniform,funnel --n 4096 --log2-inv-delta 2:5"
        " --trials 4 --seed 9 --out ";
    if (command_status(sweep + a + " --jobs 1 2>/dev/null") != 0)
        return {false, "sweep (jobs=1) failed"};
    if (command_status(sweep + b + " --jobs 4 2>/dev/null") != 0)
        return {false, "sweep (jobs=4) failed"};
    const bool same = read_file(a) == read_file(b);
    std::filesystem::remove(a);
    std::filesystem::remove(b);
    if (!same) return {false, "sweep bytes depend on --jobs"};
    return {true, "reruns and jobs=1/4 byte-identical"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "phi suite (exhaustive, < 5s)", criterion_phi_suite},
        {2, "elastic batch exactness", criterion_batch_exactness},
        {3, "elastic amortized flatness", criterion_elastic_flatness},
        {4, "elastic worst-case growth", criterion_elastic_worst_case_growth},
        {5, "elastic expensive-case rarity", criterion_expensive_case_rarity},
        {6, "funnel deterministic cap", criterion_funnel_cap},
        {7, "funnel failure rate", criterion_funnel_failures},
        {8, "funnel worst-case-expected growth", criterion_funnel_worst_case_fit},
        {9, "funnel amortized growth", criterion_funnel_amortized},
        {10, "uniform baseline sanity", criterion_uniform_baseline},
        {11, "replay-lookup equality", criterion_replay_equality},
        {12, "output determinism", criterion_cli_determinism},
    };

    int failures = 0;
    const auto suite_start = std::chrono::steady_clock::now();
    for (const Criterion& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        std::printf("[%2d] %s  %s: %s  (%.1fs)\n", criterion.id,
                    outcome.pass ? "PASS" : "FAIL", criterion.name,
                    outcome.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !outcome.pass;
    }
    const double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - suite_start)
            .count();
    std::printf("%zu criteria, %d failed, %.1fs total\n", criteria.size(), failures,
                total);
    return failures == 0 ? 0 : 1;
}
