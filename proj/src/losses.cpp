#include "stepdp/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stepdp {

namespace {

void require_same_shape(const ScoreMap& a, const ScoreMap& b) {
    if (a.num_clips() != b.num_clips()) {
        throw InvalidArgument("score maps differ in shape: N=" + std::to_string(a.num_clips()) + " vs N=" +
                              std::to_string(b.num_clips()));
    }
}

} // namespace

void LossConfig::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) {
        throw InvalidArgument("loss weights alpha and beta must be >= 0");
    }
    if (!(iou_scale_min >= 0.0 && iou_scale_min < 1.0) || !(iou_scale_max > iou_scale_min && iou_scale_max <= 1.0)) {
        throw InvalidArgument("IoU scaling needs 0 <= min < max <= 1");
    }
}

ScoreMap iou_targets(std::size_t num_clips, const ClipInterval& gt, const LossConfig& config) {
    config.validate();
    if (!gt.valid() || gt.end >= num_clips) {
        throw InvalidArgument("ground truth [" + std::to_string(gt.start) + "," + std::to_string(gt.end) +
                              "] outside a grid of " + std::to_string(num_clips) + " clips");
    }
    const double span = config.iou_scale_max - config.iou_scale_min;
    ScoreMap target(num_clips);
    for (std::size_t s = 0; s < num_clips; ++s) {
        for (std::size_t e = s; e < num_clips; ++e) {
            const double iou = interval_iou({s, e}, gt);
            target.set(s, e, std::clamp((iou - config.iou_scale_min) / span, 0.0, 1.0));
        }
    }
    return target;
}

double bce_loss(const ScoreMap& pred, const ScoreMap& target, double epsilon) {
    require_same_shape(pred, target);
    double total = 0.0;
    pred.for_each_valid([&](std::size_t s, std::size_t e, double raw) {
        const double p = std::clamp(raw, epsilon, 1.0 - epsilon);
        const double t = target.at(s, e);
        total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    });
    return total / static_cast<double>(num_valid_cells(pred.num_clips()));
}

ScoreMap bce_loss_gradient(const ScoreMap& pred, const ScoreMap& target, double epsilon) {
    require_same_shape(pred, target);
    const double scale = 1.0 / static_cast<double>(num_valid_cells(pred.num_clips()));
    ScoreMap grad(pred.num_clips());
    pred.for_each_valid([&](std::size_t s, std::size_t e, double p) {
        if (p < epsilon || p > 1.0 - epsilon) {
            grad.set(s, e, 0.0);
            return;
        }
        const double t = target.at(s, e);
        grad.set(s, e, scale * ((1.0 - t) / (1.0 - p) - t / p));
    });
    return grad;
}

double exclusiveness_loss(const ScoreStack& stack) {
    stack.validate();
    for (std::size_t k = 0; k < stack.num_queries(); ++k) {
        stack.maps[k].for_each_valid([&](std::size_t s, std::size_t e, double v) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw InvalidArgument("exclusiveness loss needs scores in [0,1]; query " + std::to_string(k) +
                                      " has " + std::to_string(v) + " at (" + std::to_string(s) + "," +
                                      std::to_string(e) + ")");
            }
        });
    }
    if (stack.num_queries() == 1) {
        return 0.0;
    }
    double total = 0.0;
    stack.maps.front().for_each_valid([&](std::size_t s, std::size_t e, double) {
        double first = 0.0;
        double second = 0.0;
        for (const auto& map : stack.maps) {
            const double v = map.at(s, e);
            if (v > first) {
                second = first;
                first = v;
            } else if (v > second) {
                second = v;
            }
        }
        total += first * second;
    });
    return total / static_cast<double>(num_valid_cells(stack.num_clips()));
}

double total_loss(double bce, double mm, double exc, const LossConfig& config) {
    return bce + config.alpha * mm + config.beta * exc;
}

} // namespace stepdp
