#pragma once

// Sentence/phrase score maps from cosine similarity against the proposal
// feature map, fused with softmax importance weights.

#include <span>
#include <vector>

#include "stepdp/core.hpp"

namespace stepdp {

struct ImportanceWeights {
    double sentence_weight = 1.0;
    std::vector<double> phrase_weights;
};

// Cosine similarity of every valid proposal feature with `text`.
// Throws InvalidArgument for a zero-norm text vector ("degenerate text
// feature") or a zero-norm proposal cell ("degenerate proposal feature").
ScoreMap cosine_score_map(const TemporalFeatureMap& features, std::span<const double> text);

// Max-subtracted softmax. logits[0] is the sentence logit.
ImportanceWeights softmax_importance(std::span<const double> logits);

// w_s * sentence + sum_i w_i * phrase_i, cell-wise over valid cells. No
// re-normalization afterwards.
ScoreMap fuse_score_maps(const ScoreMap& sentence_map, std::span<const ScoreMap> phrase_maps,
                         const ImportanceWeights& weights);

// cosine_score_map for the sentence and each phrase, then
// fuse_score_maps with softmax_importance(q.importance_logits).
ScoreMap build_query_score_map(const TemporalFeatureMap& features, const QueryFeatures& query);

// Uniform element-wise mean of aligned maps (ensemble averaging).
ScoreMap average_score_maps(std::span<const ScoreMap> maps);

} // namespace stepdp
