#include "probelab/bench.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "probelab/elastic.hpp"
#include "probelab/errors.hpp"
#include "probelab/funnel.hpp"
#include "probelab/uniform.hpp"

namespace probelab {

namespace {

constexpr std::uint64_t kMinN = std::uint64_t{1} << 6;
constexpr std::uint64_t kMaxN = std::uint64_t{1} << 26;
constexpr char kVersion[] = "0.1.0";

unsigned effective_jobs(unsigned jobs, unsigned trials) {
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    return std::max(1u, std::min(jobs, trials));
}

}  // namespace

void validate_spec(const RunSpec& spec) {
    if (spec.schemes.empty()) throw UsageError("at least one scheme is required");
    if (!std::has_single_bit(spec.n) || spec.n < kMinN || spec.n > kMaxN)
        throw UsageError("n must be a power of two between 2^6 and 2^26");
    if (spec.delta_log2_lo < 1 || spec.delta_log2_hi > 12 ||
        spec.delta_log2_lo > spec.delta_log2_hi)
        throw UsageError("log2-inv-delta must satisfy 1 <= lo <= hi <= 12");
    if ((spec.n >> spec.delta_log2_hi) == 0)
        throw UsageError("delta*n must be >= 1");
    if (spec.trials < 1) throw UsageError("trials must be >= 1");
    if (spec.budget_c < 1) throw UsageError("c must be >= 1");
    if (spec.detail == Detail::per_insertion &&
        (spec.schemes.size() != 1 || spec.delta_log2_lo != spec.delta_log2_hi))
        throw UsageError("per-insertion detail requires a single scheme and delta");
    if (spec.detail == Detail::per_insertion && spec.format == OutputFormat::json)
        throw UsageError("per-insertion output is CSV only");
}

TrialResult run_single_trial(Scheme scheme, std::uint64_t n, unsigned log2_inv_delta,
                             unsigned budget_c, std::uint32_t trial,
                             std::uint64_t master_seed) {
    TrialResult result;
    result.trial = trial;
    const std::uint64_t seed = mix_seed(master_seed, trial);
    const std::uint64_t m = n - (n >> log2_inv_delta);
    result.records.reserve(m);
    try {
        switch (scheme) {
            case Scheme::elastic: {
                ElasticTable table(ElasticParams{n, log2_inv_delta, budget_c, seed});
                for (std::uint64_t key = 0; key < m; ++key) {
                    InsertRecord rec = table.insert(Key{key});
                    rec.trial = trial;
                    result.records.push_back(rec);
                }
                break;
            }
            case Scheme::funnel: {
                FunnelTable table(FunnelParams{n, log2_inv_delta, seed});
                for (std::uint64_t key = 0; key < m; ++key) {
                    InsertRecord rec = table.insert(Key{key});
                    rec.trial = trial;
                    result.records.push_back(rec);
                }
                break;
            }
            case Scheme::uniform: {
                UniformTable table(UniformParams{n, seed});
                for (std::uint64_t key = 0; key < m; ++key) {
                    InsertRecord rec = table.insert(Key{key});
                    rec.trial = trial;
                    result.records.push_back(rec);
                }
                break;
            }
        }
    } catch (const TrialAbort& abort) {
        result.failed = true;
        result.failure_reason = abort.what();
        result.records.clear();
    }
    return result;
}

CellResult run_cell(Scheme scheme, std::uint64_t n, unsigned log2_inv_delta,
                    unsigned budget_c, unsigned trials, std::uint64_t master_seed,
                    unsigned jobs, bool keep_records) {
    const std::uint64_t m = n - (n >> log2_inv_delta);
    const unsigned workers = effective_jobs(jobs, trials);

    CellResult out;
    if (scheme == Scheme::funnel && log2_inv_delta < 3)
        out.warnings.push_back("funnel: delta > 1/8 clamped to 1/8 for layout math");

    SummaryAccumulator acc(m);
    for (unsigned base = 0; base < trials; base += workers) {
        const unsigned count = std::min(workers, trials - base);
        std::vector<TrialResult> chunk(count);
        std::vector<std::exception_ptr> errors(count);
        std::vector<std::thread> threads;
        threads.reserve(count);
        for (unsigned i = 0; i < count; ++i) {
            threads.emplace_back([&, i] {
                try {
                    chunk[i] = run_single_trial(scheme, n, log2_inv_delta, budget_c,
                                                base + i, master_seed);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (unsigned i = 0; i < count; ++i)
            if (errors[i]) std::rethrow_exception(errors[i]);

        // Reduce strictly in trial order; workers only produce.
        for (unsigned i = 0; i < count; ++i) {
            if (chunk[i].failed)
                acc.note_failed_trial();
            else
                acc.add_completed_trial(chunk[i].records);
            if (keep_records)
                out.trials.push_back(std::move(chunk[i]));
            else if (chunk[i].failed)
                out.warnings.push_back("trial " + std::to_string(chunk[i].trial) +
                                       " failed: " + chunk[i].failure_reason);
        }
    }
    out.summary = acc.finalize(trials);
    out.summary.scheme = scheme;
    out.summary.n = n;
    out.summary.log2_inv_delta = log2_inv_delta;
    return out;
}

std::string format_double(double value) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

void write_per_insertion_csv(std::ostream& out, std::uint64_t n,
                             unsigned log2_inv_delta,
                             const std::vector<TrialResult>& trials) {
    out << "scheme,n,delta_log2,trial,insert_index,tag,search_probes,"
           "insert_probes,slot\n";
    for (const TrialResult& trial : trials) {
        for (const InsertRecord& rec : trial.records) {
            out << to_string(rec.scheme) << ',' << n << ',' << log2_inv_delta << ','
                << rec.trial << ',' << rec.insert_index << ','
                << tag_to_string(rec.scheme, rec.tag) << ',' << rec.search_probes
                << ',' << rec.insert_probes << ',' << rec.slot << '\n';
        }
    }
}

void write_aggregate_csv(std::ostream& out, std::span<const SweepSummary> rows) {
    out << "scheme,n,delta_log2,trials,failures,amortized_mean,worst_case_expected,"
           "max_observed,insert_probes_amortized,insert_probes_worst_expected\n";
    for (const SweepSummary& row : rows) {
        out << to_string(row.scheme) << ',' << row.n << ',' << row.log2_inv_delta
            << ',' << row.trials << ',' << row.failures << ','
            << format_double(row.amortized_mean) << ','
            << format_double(row.worst_case_expected) << ',' << row.max_observed
            << ',' << format_double(row.insert_probes_amortized) << ','
            << format_double(row.insert_probes_worst_expected) << '\n';
    }
}

void write_aggregate_json(std::ostream& out, std::span<const SweepSummary> rows,
                          std::uint64_t master_seed, double wall_time_seconds,
                          const std::vector<std::string>& warnings) {
    nlohmann::ordered_json doc;
    doc["metadata"] = {{"version", kVersion},
                       {"seed", master_seed},
                       {"wall_time_seconds", wall_time_seconds},
                       {"warnings", warnings}};
    auto& arr = doc["rows"] = nlohmann::ordered_json::array();
    for (const SweepSummary& row : rows) {
        arr.push_back({{"scheme", to_string(row.scheme)},
                       {"n", row.n},
                       {"delta_log2", row.log2_inv_delta},
                       {"trials", row.trials},
                       {"failures", row.failures},
                       {"amortized_mean", row.amortized_mean},
                       {"worst_case_expected", row.worst_case_expected},
                       {"max_observed", row.max_observed},
                       {"insert_probes_amortized", row.insert_probes_amortized},
                       {"insert_probes_worst_expected",
                        row.insert_probes_worst_expected}});
    }
    out << doc.dump(2) << '\n';
}

namespace {

int write_artifact(const RunSpec& spec, const std::string& body) {
    if (spec.out_path.empty()) {
        std::cout << body;
        return std::cout ? 0 : 1;
    }
    const std::filesystem::path target(spec.out_path);
    const std::filesystem::path temp(spec.out_path + ".tmp");
    try {
        {
            std::ofstream file(temp, std::ios::binary | std::ios::trunc);
            if (!file) throw std::runtime_error("cannot open " + temp.string());
            file << body;
            if (!file) throw std::runtime_error("write failed: " + temp.string());
        }
        std::filesystem::rename(temp, target);
    } catch (const std::exception& e) {
        std::error_code ec;
        std::filesystem::remove(temp, ec);
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace

int run_experiment(const RunSpec& spec) {
    validate_spec(spec);
    const auto start = std::chrono::steady_clock::now();

    std::vector<SweepSummary> rows;
    std::vector<std::string> warnings;
    std::ostringstream body;
    unsigned total_failures = 0;

    const bool keep = spec.detail == Detail::per_insertion;
    for (const Scheme scheme : spec.schemes) {
        for (unsigned k = spec.delta_log2_lo; k <= spec.delta_log2_hi; ++k) {
            CellResult cell = run_cell(scheme, spec.n, k, spec.budget_c, spec.trials,
                                       spec.master_seed, spec.jobs, keep);
            total_failures += cell.summary.failures;
            warnings.insert(warnings.end(), cell.warnings.begin(),
                            cell.warnings.end());
            if (keep) {
                std::erase_if(cell.trials,
                              [](const TrialResult& t) { return t.failed; });
                write_per_insertion_csv(body, spec.n, k, cell.trials);
            } else {
                rows.push_back(std::move(cell.summary));
            }
        }
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (!keep) {
        if (spec.format == OutputFormat::csv)
            write_aggregate_csv(body, rows);
        else
            write_aggregate_json(body, rows, spec.master_seed, wall, warnings);
    }

    for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
    const int io_status = write_artifact(spec, body.str());
    if (io_status != 0) return io_status;
    if (total_failures > 0) {
        std::cerr << total_failures << " trial(s) failed\n";
        if (!spec.allow_failures) return 1;
    }
    return 0;
}

}  // namespace probelab
