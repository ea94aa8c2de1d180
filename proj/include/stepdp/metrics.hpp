#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stepdp/core.hpp"

namespace stepdp {

struct LabeledInterval {
    std::string query_id;
    ClipInterval interval;
};

struct EvalReport {
    // threshold -> R@1 percentage
    std::map<double, double> recall_at;
    double avg = 0.0;
    // percentage of queries overlapping another prediction of the same video
    double overlap_fraction = 0.0;
    std::size_t num_videos = 0;
    std::size_t num_queries = 0;
    std::size_t fallback_count = 0;
};

// R@1: percentage of predictions with IoU >= threshold against the ground
// truth of the same query id. Throws InvalidArgument for a prediction
// without ground truth or an empty prediction list.
double recall_at_iou(std::span<const LabeledInterval> predictions, std::span<const LabeledInterval> ground_truth,
                     double threshold);

// Arithmetic mean; throws InvalidArgument on an empty list.
double average_recall(std::span<const double> recalls);

// Percentage of queries whose interval overlaps at least one other interval
// of the same video. A query counts once however many it overlaps.
double overlap_fraction(std::span<const Assignment> per_video);

std::vector<double> default_thresholds();

} // namespace stepdp
