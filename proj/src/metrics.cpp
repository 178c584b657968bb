#include "probelab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "probelab/errors.hpp"

namespace probelab {

const char* to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::elastic: return "elastic";
        case Scheme::funnel: return "funnel";
        case Scheme::uniform: return "uniform";
    }
    return "?";
}

std::optional<Scheme> scheme_from_string(std::string_view name) {
    if (name == "elastic") return Scheme::elastic;
    if (name == "funnel") return Scheme::funnel;
    if (name == "uniform") return Scheme::uniform;
    return std::nullopt;
}

std::string tag_to_string(Scheme scheme, std::int32_t tag) {
    if (scheme == Scheme::funnel) {
        if (tag == kTagB) return "B";
        if (tag == kTagC) return "C";
    }
    return std::to_string(tag);
}

SummaryAccumulator::SummaryAccumulator(std::size_t m)
    : m_(m), search_sum_(m, 0.0), insert_sum_(m, 0.0) {}

void SummaryAccumulator::add_completed_trial(std::span<const InsertRecord> records) {
    if (records.size() != m_)
        throw AggregationError("trial has " + std::to_string(records.size()) +
                               " records, expected " + std::to_string(m_));
    for (std::size_t i = 0; i < m_; ++i) {
        const InsertRecord& rec = records[i];
        if (rec.insert_index != i)
            throw AggregationError("trial records out of order or missing index " +
                                   std::to_string(i));
        search_sum_[i] += static_cast<double>(rec.search_probes);
        insert_sum_[i] += static_cast<double>(rec.insert_probes);
        max_observed_ = std::max(max_observed_, rec.search_probes);
    }
    ++completed_;
}

void SummaryAccumulator::note_failed_trial() { ++failed_; }

SweepSummary SummaryAccumulator::finalize(unsigned trials_attempted) const {
    if (completed_ + failed_ > trials_attempted)
        throw AggregationError("more trials fed than attempted");
    SweepSummary s;
    s.trials = trials_attempted;
    s.failures = trials_attempted - completed_;
    s.max_observed = max_observed_;
    s.per_index_mean.assign(m_, 0.0);
    s.insert_per_index_mean.assign(m_, 0.0);
    if (completed_ == 0 || m_ == 0) return s;

    double search_total = 0.0;
    double insert_total = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
        s.per_index_mean[i] = search_sum_[i] / completed_;
        s.insert_per_index_mean[i] = insert_sum_[i] / completed_;
        search_total += search_sum_[i];
        insert_total += insert_sum_[i];
        s.worst_case_expected = std::max(s.worst_case_expected, s.per_index_mean[i]);
        s.insert_probes_worst_expected =
            std::max(s.insert_probes_worst_expected, s.insert_per_index_mean[i]);
    }
    const double count = static_cast<double>(m_) * completed_;
    s.amortized_mean = search_total / count;
    s.insert_probes_amortized = insert_total / count;
    return s;
}

SweepSummary aggregate(std::span<const InsertRecord> records, std::size_t m,
                       unsigned trials) {
    // Group by trial, then feed trials in ascending order so the result is
    // independent of the stream's permutation.
    std::map<std::uint32_t, std::vector<InsertRecord>> by_trial;
    for (const InsertRecord& rec : records) by_trial[rec.trial].push_back(rec);
    if (by_trial.size() > trials)
        throw AggregationError("record stream names more trials than attempted");

    SummaryAccumulator acc(m);
    Scheme scheme = records.empty() ? Scheme::uniform : records.front().scheme;
    for (auto& [trial, recs] : by_trial) {
        std::sort(recs.begin(), recs.end(),
                  [](const InsertRecord& a, const InsertRecord& b) {
                      return a.insert_index < b.insert_index;
                  });
        acc.add_completed_trial(recs);
    }
    SweepSummary s = acc.finalize(trials);
    s.scheme = scheme;
    return s;
}

LinearFit growth_fit(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2)
        throw std::invalid_argument("growth_fit: need at least 2 points");
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [x, y] : points) {
        mean_x += x;
        mean_y += y;
    }
    mean_x /= points.size();
    mean_y /= points.size();

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("growth_fit: all x values are equal");

    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    if (syy == 0.0) {
        fit.r_squared = 1.0;  // constant y: the line is exact
    } else {
        double ss_res = 0.0;
        for (const auto& [x, y] : points) {
            const double e = y - (fit.intercept + fit.slope * x);
            ss_res += e * e;
        }
        fit.r_squared = 1.0 - ss_res / syy;
    }
    return fit;
}

}  // namespace probelab
