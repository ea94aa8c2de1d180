#pragma once

// Domain types shared by every stepdp module: clip intervals on the N-clip
// grid, the 2D proposal feature map, query features, score maps and
// assignments. All indices are 0-based and inclusive.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stepdp/errors.hpp"

namespace stepdp {

struct ClipInterval {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start + 1; }
    bool valid() const { return start <= end; }

    friend bool operator==(const ClipInterval&, const ClipInterval&) = default;
};

// |a ∩ b| / |a ∪ b| counted in clips.
double interval_iou(const ClipInterval& a, const ClipInterval& b);

// True iff the two intervals share at least one clip. Adjacent intervals
// ([0,2] and [3,5]) do not overlap.
bool intervals_overlap(const ClipInterval& a, const ClipInterval& b);

// True iff no two intervals in the list overlap.
bool pairwise_disjoint(std::span<const ClipInterval> intervals);

// Number of proposals (cells with start <= end) on an N-clip grid.
constexpr std::size_t num_valid_cells(std::size_t num_clips) {
    return num_clips * (num_clips + 1) / 2;
}

// N x N x D proposal feature tensor. Only cells with start <= end are stored
// meaningfully; the lower triangle is never read.
class TemporalFeatureMap {
public:
    // `values` is row-major over (start, end, dim). Lower-triangle entries
    // are ignored; upper-triangle entries must be finite.
    TemporalFeatureMap(std::size_t num_clips, std::size_t dim, std::vector<double> values);

    std::size_t num_clips() const { return num_clips_; }
    std::size_t dim() const { return dim_; }

    std::span<const double> cell(std::size_t start, std::size_t end) const;

private:
    std::size_t num_clips_;
    std::size_t dim_;
    std::vector<double> values_;
};

// Sentence feature, phrase features and importance logits for one query.
// importance_logits[0] belongs to the sentence, [1 + i] to phrase i.
struct QueryFeatures {
    std::string query_id;
    std::vector<double> sentence;
    std::vector<std::vector<double>> phrases;
    std::vector<double> importance_logits;

    std::size_t num_phrases() const { return phrases.size(); }
};

// N x N matching scores. Cells with start > end hold a quiet NaN so that any
// accidental read poisons downstream arithmetic instead of passing silently.
class ScoreMap {
public:
    ScoreMap() = default;
    // All valid cells set to `fill`.
    explicit ScoreMap(std::size_t num_clips, double fill = 0.0);

    // Row-major N*N values. Lower-triangle entries are discarded and
    // replaced by the mask; valid entries must be finite.
    static ScoreMap from_dense(std::size_t num_clips, std::vector<double> values);

    std::size_t num_clips() const { return num_clips_; }
    bool valid(std::size_t start, std::size_t end) const {
        return start <= end && end < num_clips_;
    }
    bool masked(std::size_t start, std::size_t end) const { return !valid(start, end); }

    double at(std::size_t start, std::size_t end) const { return values_[start * num_clips_ + end]; }
    void set(std::size_t start, std::size_t end, double value);

    // Raw row-major storage, masked cells included.
    std::span<const double> dense() const { return values_; }

    template <class Fn>
    void for_each_valid(Fn&& fn) const {
        for (std::size_t s = 0; s < num_clips_; ++s) {
            for (std::size_t e = s; e < num_clips_; ++e) {
                fn(s, e, values_[s * num_clips_ + e]);
            }
        }
    }

    friend bool operator==(const ScoreMap& a, const ScoreMap& b);

private:
    std::size_t num_clips_ = 0;
    std::vector<double> values_;
};

// Score maps for all K step queries of one video.
struct ScoreStack {
    std::string video_id;
    std::vector<ScoreMap> maps;

    std::size_t num_queries() const { return maps.size(); }
    std::size_t num_clips() const { return maps.empty() ? 0 : maps.front().num_clips(); }

    // Throws InvalidArgument if K == 0 or the maps disagree on N.
    void validate() const;
};

enum class SelectMethod { dp, greedy, brute_force };

std::string_view to_string(SelectMethod method);
SelectMethod parse_select_method(std::string_view name);

struct AssignmentEntry {
    std::size_t query = 0;
    ClipInterval interval;
    double log_prob = 0.0;
};

// One interval per query. For dp/brute_force without fallback the intervals
// are pairwise disjoint.
struct Assignment {
    std::string video_id;
    std::vector<AssignmentEntry> entries;
    double objective = 0.0;
    SelectMethod method = SelectMethod::dp;
    bool fallback_used = false;

    std::vector<ClipInterval> intervals() const;
    bool non_overlapping() const;
};

// Checks one entry per query index 0..K-1 in order, valid intervals inside
// the grid, objective == sum of entry log-probabilities within 1e-9, and
// disjointness when the method promises it. Throws InvariantError.
void check_assignment(const Assignment& assignment, std::size_t num_queries, std::size_t num_clips);

} // namespace stepdp
