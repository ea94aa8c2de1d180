#pragma once

// Training objectives evaluated as plain functions of score maps.
//
//   total = bce + alpha * mm + beta * exc
//
// bce supervises each query map with scaled-IoU targets, exc penalises the
// product of the two best query scores at every proposal, and mm (the
// mutual matching term) is supplied by the caller as a scalar.

#include "stepdp/core.hpp"

namespace stepdp {

struct LossConfig {
    double alpha = 0.1;
    double beta = 0.05;
    double iou_scale_min = 0.5;
    double iou_scale_max = 1.0;

    // Throws InvalidArgument on negative weights or a bad IoU scaling range.
    void validate() const;
};

// target[s,e] = clamp((iou([s,e], gt) - min) / (max - min), 0, 1).
ScoreMap iou_targets(std::size_t num_clips, const ClipInterval& gt, const LossConfig& config = {});

// Mean over valid cells of -[t ln p + (1 - t) ln(1 - p)], with p clamped to
// [epsilon, 1 - epsilon].
double bce_loss(const ScoreMap& pred, const ScoreMap& target, double epsilon = 1e-8);

// d bce_loss / d pred[s,e] for every valid cell. Zero where the clamp is
// active.
ScoreMap bce_loss_gradient(const ScoreMap& pred, const ScoreMap& target, double epsilon = 1e-8);

// Mean over valid cells of the product of the two largest scores across the
// K query maps. Scores must lie in [0, 1]. Zero when K == 1.
double exclusiveness_loss(const ScoreStack& stack);

double total_loss(double bce, double mm, double exc, const LossConfig& config = {});

} // namespace stepdp
