#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace probelab {

enum class Scheme : std::uint8_t { elastic, funnel, uniform };

const char* to_string(Scheme scheme);
std::optional<Scheme> scheme_from_string(std::string_view name);

// Funnel special-array tags; positive tags are level numbers. Elastic uses
// tags 0..3 for the insertion case, uniform always 0.
inline constexpr std::int32_t kTagB = -1;
inline constexpr std::int32_t kTagC = -2;

std::string tag_to_string(Scheme scheme, std::int32_t tag);

// One insertion's outcome.
struct InsertRecord {
    std::uint32_t trial = 0;
    std::uint32_t insert_index = 0;
    Scheme scheme = Scheme::uniform;
    std::int32_t tag = 0;
    std::uint64_t search_probes = 0;  // probes a query needs to find the key
    std::uint64_t insert_probes = 0;  // slots examined while placing the key
    std::uint64_t slot = 0;
};

struct LookupResult {
    bool found = false;
    std::uint64_t probes = 0;
};

// Cross-trial statistics for one (scheme, n, delta) cell.
struct SweepSummary {
    Scheme scheme = Scheme::uniform;
    std::uint64_t n = 0;
    unsigned log2_inv_delta = 0;
    unsigned trials = 0;    // attempted
    unsigned failures = 0;  // aborted trials, excluded from all means
    double amortized_mean = 0.0;
    double worst_case_expected = 0.0;  // max over insert index of the per-index mean
    std::uint64_t max_observed = 0;    // max single search probe count
    double insert_probes_amortized = 0.0;
    double insert_probes_worst_expected = 0.0;
    std::vector<double> per_index_mean;         // length m
    std::vector<double> insert_per_index_mean;  // length m
};

// Streaming builder for SweepSummary. Trials must be fed in ascending trial
// order so floating-point accumulation is reproducible regardless of how the
// trials were computed.
class SummaryAccumulator {
public:
    explicit SummaryAccumulator(std::size_t m);

    // records must be exactly one completed trial: m records with
    // insert_index covering 0..m-1 in order.
    void add_completed_trial(std::span<const InsertRecord> records);
    void note_failed_trial();

    SweepSummary finalize(unsigned trials_attempted) const;

private:
    std::size_t m_;
    unsigned completed_ = 0;
    unsigned failed_ = 0;
    std::uint64_t max_observed_ = 0;
    std::vector<double> search_sum_;
    std::vector<double> insert_sum_;
};

// Aggregates a record stream (any order; failed trials simply have no
// records). trials is the number attempted; failures are inferred.
SweepSummary aggregate(std::span<const InsertRecord> records, std::size_t m,
                       unsigned trials);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares through (x, y) points. Requires >= 2 points with at
// least two distinct x values. A zero-variance y is reported as r^2 = 1.
LinearFit growth_fit(std::span<const std::pair<double, double>> points);

}  // namespace probelab
