#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "probelab/metrics.hpp"
#include "probelab/probe.hpp"

namespace probelab {

struct UniformParams {
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    // Testing knob: overrides the 64*n*ceil(log2 n) probe cap when nonzero.
    std::uint64_t probe_cap_override = 0;
};

// Greedy uniform probing over the whole array: i.i.d. probes, first empty
// slot wins, search cost equals insertion cost. The experiment decides how
// many insertions to perform; the table accepts up to n.
class UniformTable {
public:
    explicit UniformTable(const UniformParams& params);

    InsertRecord insert(Key key);  // throws ProbeCapExceeded past the cap
    LookupResult lookup(Key key) const;

    const UniformParams& params() const { return params_; }
    std::span<const std::optional<Key>> slots() const { return slots_; }
    std::uint64_t completed_insertions() const { return count_; }

private:
    std::uint64_t probe_cap() const;

    UniformParams params_;
    ProbeSource source_;
    std::vector<std::optional<Key>> slots_;
    std::uint64_t count_ = 0;
};

}  // namespace probelab
