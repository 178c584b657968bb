#include "probelab/uniform.hpp"

#include <stdexcept>

#include "probelab/errors.hpp"

namespace probelab {

UniformTable::UniformTable(const UniformParams& params)
    : params_(params), source_{params.seed}, slots_(params.n) {
    if (params.n < 2) throw ConfigError("uniform table requires n >= 2");
}

std::uint64_t UniformTable::probe_cap() const {
    if (params_.probe_cap_override != 0) return params_.probe_cap_override;
    return 64 * params_.n * std::max<std::uint64_t>(1, ceil_log2(params_.n));
}

InsertRecord UniformTable::insert(Key key) {
    if (count_ >= params_.n)
        throw std::logic_error("uniform table: no free slots remain");
    const std::uint64_t cap = probe_cap();
    for (std::uint64_t t = 1; t <= cap; ++t) {
        const std::uint64_t s = source_.probe(key, 0, t, params_.n);
        if (!slots_[s]) {
            slots_[s] = key;
            InsertRecord rec;
            rec.scheme = Scheme::uniform;
            rec.insert_index = static_cast<std::uint32_t>(count_);
            rec.tag = 0;
            rec.search_probes = rec.insert_probes = t;
            rec.slot = s;
            ++count_;
            return rec;
        }
    }
    throw ProbeCapExceeded("uniform table: insertion exceeded its probe cap");
}

LookupResult UniformTable::lookup(Key key) const {
    const std::uint64_t cap = probe_cap();
    for (std::uint64_t t = 1; t <= cap; ++t) {
        const auto& slot = slots_[source_.probe(key, 0, t, params_.n)];
        if (!slot) return {false, t};  // greedy stop
        if (*slot == key) return {true, t};
    }
    return {false, cap};
}

}  // namespace probelab
