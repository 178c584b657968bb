#pragma once

#include <stdexcept>
#include <string>

namespace probelab {

// Invalid parameters (bad n/delta combinations, infeasible layouts).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A single trial had to be abandoned; the run survives and counts the failure.
struct TrialAbort : std::runtime_error {
    explicit TrialAbort(const std::string& what) : std::runtime_error(what) {}
};

// Elastic insertion exceeded its uniform-scan probe cap.
struct ExpensiveCaseCapExceeded final : TrialAbort {
    explicit ExpensiveCaseCapExceeded(const std::string& what) : TrialAbort(what) {}
};

// Uniform-probing insertion exceeded its probe cap.
struct ProbeCapExceeded final : TrialAbort {
    explicit ProbeCapExceeded(const std::string& what) : TrialAbort(what) {}
};

// Funnel insertion found both two-choice buckets full.
struct FunnelOverflow final : TrialAbort {
    explicit FunnelOverflow(const std::string& what) : TrialAbort(what) {}
};

// Record stream handed to aggregate() is malformed.
struct AggregationError : std::runtime_error {
    explicit AggregationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace probelab
