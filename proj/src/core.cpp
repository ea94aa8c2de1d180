#include "stepdp/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace stepdp {

double interval_iou(const ClipInterval& a, const ClipInterval& b) {
    const std::size_t lo = std::max(a.start, b.start);
    const std::size_t hi = std::min(a.end, b.end);
    if (lo > hi) {
        return 0.0;
    }
    const double inter = static_cast<double>(hi - lo + 1);
    const double uni = static_cast<double>(a.length() + b.length()) - inter;
    return inter / uni;
}

bool intervals_overlap(const ClipInterval& a, const ClipInterval& b) {
    return std::max(a.start, b.start) <= std::min(a.end, b.end);
}

bool pairwise_disjoint(std::span<const ClipInterval> intervals) {
    std::vector<ClipInterval> sorted(intervals.begin(), intervals.end());
    std::sort(sorted.begin(), sorted.end(), [](const ClipInterval& a, const ClipInterval& b) {
        return a.start < b.start || (a.start == b.start && a.end < b.end);
    });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i - 1].end >= sorted[i].start) {
            return false;
        }
    }
    return true;
}

TemporalFeatureMap::TemporalFeatureMap(std::size_t num_clips, std::size_t dim, std::vector<double> values)
    : num_clips_(num_clips), dim_(dim), values_(std::move(values)) {
    if (num_clips == 0 || dim == 0) {
        throw InvalidArgument("feature map needs N >= 1 and D >= 1");
    }
    if (values_.size() != num_clips * num_clips * dim) {
        throw InvalidArgument("feature map expects " + std::to_string(num_clips * num_clips * dim) +
                              " values, got " + std::to_string(values_.size()));
    }
    for (std::size_t s = 0; s < num_clips_; ++s) {
        for (std::size_t e = s; e < num_clips_; ++e) {
            for (double v : cell(s, e)) {
                if (!std::isfinite(v)) {
                    throw InvalidArgument("non-finite feature at cell (" + std::to_string(s) + "," +
                                          std::to_string(e) + ")");
                }
            }
        }
    }
}

std::span<const double> TemporalFeatureMap::cell(std::size_t start, std::size_t end) const {
    return std::span<const double>(values_).subspan((start * num_clips_ + end) * dim_, dim_);
}

namespace {
constexpr double kMask = std::numeric_limits<double>::quiet_NaN();
}

ScoreMap::ScoreMap(std::size_t num_clips, double fill)
    : num_clips_(num_clips), values_(num_clips * num_clips, kMask) {
    for (std::size_t s = 0; s < num_clips_; ++s) {
        std::fill(values_.begin() + s * num_clips_ + s, values_.begin() + (s + 1) * num_clips_, fill);
    }
}

ScoreMap ScoreMap::from_dense(std::size_t num_clips, std::vector<double> values) {
    if (values.size() != num_clips * num_clips) {
        throw InvalidArgument("score map expects " + std::to_string(num_clips * num_clips) + " values, got " +
                              std::to_string(values.size()));
    }
    ScoreMap map;
    map.num_clips_ = num_clips;
    map.values_ = std::move(values);
    for (std::size_t s = 0; s < num_clips; ++s) {
        for (std::size_t e = 0; e < num_clips; ++e) {
            double& v = map.values_[s * num_clips + e];
            if (s > e) {
                v = kMask;
            } else if (!std::isfinite(v)) {
                throw InvalidArgument("non-finite score at cell (" + std::to_string(s) + "," + std::to_string(e) +
                                      ")");
            }
        }
    }
    return map;
}

void ScoreMap::set(std::size_t start, std::size_t end, double value) {
    if (!valid(start, end)) {
        throw InvalidArgument("cannot write masked cell (" + std::to_string(start) + "," + std::to_string(end) + ")");
    }
    values_[start * num_clips_ + end] = value;
}

bool operator==(const ScoreMap& a, const ScoreMap& b) {
    if (a.num_clips_ != b.num_clips_) {
        return false;
    }
    bool same = true;
    a.for_each_valid([&](std::size_t s, std::size_t e, double v) { same = same && v == b.at(s, e); });
    return same;
}

void ScoreStack::validate() const {
    if (maps.empty()) {
        throw InvalidArgument("video '" + video_id + "' has no queries");
    }
    const std::size_t n = maps.front().num_clips();
    if (n == 0) {
        throw InvalidArgument("video '" + video_id + "' has an empty clip grid");
    }
    for (std::size_t k = 1; k < maps.size(); ++k) {
        if (maps[k].num_clips() != n) {
            throw InvalidArgument("video '" + video_id + "': query " + std::to_string(k) + " has N=" +
                                  std::to_string(maps[k].num_clips()) + ", expected " + std::to_string(n));
        }
    }
}

std::string_view to_string(SelectMethod method) {
    switch (method) {
    case SelectMethod::dp:
        return "dp";
    case SelectMethod::greedy:
        return "greedy";
    case SelectMethod::brute_force:
        return "brute";
    }
    return "unknown";
}

SelectMethod parse_select_method(std::string_view name) {
    if (name == "dp") {
        return SelectMethod::dp;
    }
    if (name == "greedy") {
        return SelectMethod::greedy;
    }
    if (name == "brute" || name == "brute-force" || name == "brute_force") {
        return SelectMethod::brute_force;
    }
    throw InvalidArgument("unknown selection method '" + std::string(name) + "'");
}

std::vector<ClipInterval> Assignment::intervals() const {
    std::vector<ClipInterval> out;
    out.reserve(entries.size());
    for (const auto& entry : entries) {
        out.push_back(entry.interval);
    }
    return out;
}

bool Assignment::non_overlapping() const {
    const auto iv = intervals();
    return pairwise_disjoint(iv);
}

void check_assignment(const Assignment& assignment, std::size_t num_queries, std::size_t num_clips) {
    const std::string where = "assignment for '" + assignment.video_id + "': ";
    if (assignment.entries.size() != num_queries) {
        throw InvariantError(where + "expected " + std::to_string(num_queries) + " entries, got " +
                             std::to_string(assignment.entries.size()));
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < num_queries; ++k) {
        const auto& entry = assignment.entries[k];
        if (entry.query != k) {
            throw InvariantError(where + "entry " + std::to_string(k) + " names query " + std::to_string(entry.query));
        }
        if (!entry.interval.valid() || entry.interval.end >= num_clips) {
            throw InvariantError(where + "query " + std::to_string(k) + " has an interval outside the grid");
        }
        sum += entry.log_prob;
    }
    if (!(std::abs(sum - assignment.objective) <= 1e-9)) {
        throw InvariantError(where + "objective does not match the sum of entry log-probabilities");
    }
    const bool promises_disjoint = assignment.method != SelectMethod::greedy && !assignment.fallback_used;
    if (promises_disjoint && !assignment.non_overlapping()) {
        throw InvariantError(where + "intervals overlap");
    }
}

} // namespace stepdp
