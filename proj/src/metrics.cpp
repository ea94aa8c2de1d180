#include "stepdp/metrics.hpp"

#include <unordered_map>

namespace stepdp {

double recall_at_iou(std::span<const LabeledInterval> predictions, std::span<const LabeledInterval> ground_truth,
                     double threshold) {
    if (predictions.empty()) {
        throw InvalidArgument("recall needs at least one prediction");
    }
    std::unordered_map<std::string, ClipInterval> truth;
    truth.reserve(ground_truth.size());
    for (const auto& gt : ground_truth) {
        truth.emplace(gt.query_id, gt.interval);
    }
    std::size_t hits = 0;
    for (const auto& pred : predictions) {
        const auto it = truth.find(pred.query_id);
        if (it == truth.end()) {
            throw InvalidArgument("no ground truth for query '" + pred.query_id + "'");
        }
        if (interval_iou(pred.interval, it->second) >= threshold) {
            ++hits;
        }
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double average_recall(std::span<const double> recalls) {
    if (recalls.empty()) {
        throw InvalidArgument("average of an empty recall list");
    }
    double sum = 0.0;
    for (double r : recalls) {
        sum += r;
    }
    return sum / static_cast<double>(recalls.size());
}

double overlap_fraction(std::span<const Assignment> per_video) {
    std::size_t total = 0;
    std::size_t overlapping = 0;
    for (const auto& video : per_video) {
        const auto& entries = video.entries;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            for (std::size_t j = 0; j < entries.size(); ++j) {
                if (i != j && intervals_overlap(entries[i].interval, entries[j].interval)) {
                    ++overlapping;
                    break;
                }
            }
        }
        total += entries.size();
    }
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(overlapping) / static_cast<double>(total);
}

std::vector<double> default_thresholds() { return {0.3, 0.5, 0.7}; }

} // namespace stepdp
