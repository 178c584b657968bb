#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "probelab/metrics.hpp"

namespace probelab {

// Bad command-line spec; maps to exit code 2.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

enum class OutputFormat : std::uint8_t { csv, json };
enum class Detail : std::uint8_t { aggregate, per_insertion };

struct RunSpec {
    std::vector<Scheme> schemes;
    std::uint64_t n = 0;
    unsigned delta_log2_lo = 0;  // delta = 2^-k; sweep covers [lo, hi]
    unsigned delta_log2_hi = 0;
    unsigned trials = 1;
    std::uint64_t master_seed = 0;
    unsigned budget_c = 4;  // elastic only
    OutputFormat format = OutputFormat::csv;
    std::string out_path;  // empty writes to stdout
    Detail detail = Detail::aggregate;
    unsigned jobs = 0;  // 0 = hardware concurrency
    bool allow_failures = false;
};

// Throws UsageError; n must be a power of two in [2^6, 2^26], k in [1, 12],
// with delta*n >= 1.
void validate_spec(const RunSpec& spec);

struct TrialResult {
    std::uint32_t trial = 0;
    bool failed = false;
    std::string failure_reason;
    std::vector<InsertRecord> records;  // empty when failed
};

// One seeded trial: keys 0..m-1 inserted in order, trial seed
// mix_seed(master_seed, trial). A TrialAbort is converted into failed=true.
TrialResult run_single_trial(Scheme scheme, std::uint64_t n, unsigned log2_inv_delta,
                             unsigned budget_c, std::uint32_t trial,
                             std::uint64_t master_seed);

struct CellResult {
    SweepSummary summary;
    std::vector<TrialResult> trials;  // populated only when keep_records
    std::vector<std::string> warnings;
};

// All trials of one (scheme, n, delta) cell. Trials run concurrently in
// chunks of size jobs; accumulation happens in trial order, so the result is
// byte-identical for any jobs value.
CellResult run_cell(Scheme scheme, std::uint64_t n, unsigned log2_inv_delta,
                    unsigned budget_c, unsigned trials, std::uint64_t master_seed,
                    unsigned jobs, bool keep_records);

// Full experiment: runs every (scheme, delta) cell, writes the artifact
// (atomically when a path is given). Returns 0 on success, 1 when any trial
// failed (unless allow_failures) or on I/O failure.
int run_experiment(const RunSpec& spec);

// Writers, exposed so tests can pin the schemas.
void write_per_insertion_csv(std::ostream& out, std::uint64_t n,
                             unsigned log2_inv_delta,
                             const std::vector<TrialResult>& trials);
void write_aggregate_csv(std::ostream& out, std::span<const SweepSummary> rows);
void write_aggregate_json(std::ostream& out, std::span<const SweepSummary> rows,
                          std::uint64_t master_seed, double wall_time_seconds,
                          const std::vector<std::string>& warnings);

// Shortest round-trip decimal form.
std::string format_double(double value);

struct VerifyOptions {
    bool fast = false;              // property suites only, skips the sweeps
    bool inject_phi_fault = false;  // testing hook: corrupts phi in the phi suite
    unsigned jobs = 0;
};

// Runs the module property suites (and, unless fast, the statistical
// sweeps), printing one line per property. Returns true iff all pass.
bool run_verify(const VerifyOptions& options, std::ostream& report);

}  // namespace probelab
