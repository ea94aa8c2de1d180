#include "stepdp/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stepdp {

namespace {

double norm(std::span<const double> v) {
    double sq = 0.0;
    for (double x : v) {
        sq += x * x;
    }
    return std::sqrt(sq);
}

} // namespace

ScoreMap cosine_score_map(const TemporalFeatureMap& features, std::span<const double> text) {
    if (text.size() != features.dim()) {
        throw InvalidArgument("text feature has dimension " + std::to_string(text.size()) + ", feature map has " +
                              std::to_string(features.dim()));
    }
    const double text_norm = norm(text);
    if (!(text_norm > 0.0) || !std::isfinite(text_norm)) {
        throw InvalidArgument("degenerate text feature");
    }

    const std::size_t n = features.num_clips();
    ScoreMap out(n);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t e = s; e < n; ++e) {
            const auto cell = features.cell(s, e);
            const double cell_norm = norm(cell);
            if (!(cell_norm > 0.0)) {
                throw InvalidArgument("degenerate proposal feature at cell (" + std::to_string(s) + "," +
                                      std::to_string(e) + ")");
            }
            double dot = 0.0;
            for (std::size_t d = 0; d < cell.size(); ++d) {
                dot += cell[d] * text[d];
            }
            // rounding can push |cos| a hair past 1
            out.set(s, e, std::clamp(dot / (cell_norm * text_norm), -1.0, 1.0));
        }
    }
    return out;
}

ImportanceWeights softmax_importance(std::span<const double> logits) {
    if (logits.empty()) {
        throw InvalidArgument("importance logits must contain at least the sentence logit");
    }
    for (double x : logits) {
        if (!std::isfinite(x)) {
            throw InvalidArgument("importance logits must be finite");
        }
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> exps(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        exps[i] = std::exp(logits[i] - top);
        total += exps[i];
    }
    ImportanceWeights w;
    w.sentence_weight = exps[0] / total;
    w.phrase_weights.reserve(logits.size() - 1);
    for (std::size_t i = 1; i < logits.size(); ++i) {
        w.phrase_weights.push_back(exps[i] / total);
    }
    return w;
}

ScoreMap fuse_score_maps(const ScoreMap& sentence_map, std::span<const ScoreMap> phrase_maps,
                         const ImportanceWeights& weights) {
    if (phrase_maps.size() != weights.phrase_weights.size()) {
        throw InvalidArgument("got " + std::to_string(phrase_maps.size()) + " phrase maps but " +
                              std::to_string(weights.phrase_weights.size()) + " phrase weights");
    }
    const std::size_t n = sentence_map.num_clips();
    for (const auto& map : phrase_maps) {
        if (map.num_clips() != n) {
            throw InvalidArgument("phrase map has N=" + std::to_string(map.num_clips()) + ", sentence map has N=" +
                                  std::to_string(n));
        }
    }

    ScoreMap fused(n);
    sentence_map.for_each_valid([&](std::size_t s, std::size_t e, double v) {
        double acc = weights.sentence_weight * v;
        for (std::size_t i = 0; i < phrase_maps.size(); ++i) {
            acc += weights.phrase_weights[i] * phrase_maps[i].at(s, e);
        }
        fused.set(s, e, acc);
    });
    return fused;
}

ScoreMap build_query_score_map(const TemporalFeatureMap& features, const QueryFeatures& query) {
    if (query.importance_logits.size() != query.num_phrases() + 1) {
        throw InvalidArgument("query '" + query.query_id + "' has " + std::to_string(query.num_phrases()) +
                              " phrases but " + std::to_string(query.importance_logits.size()) +
                              " importance logits");
    }
    const ScoreMap sentence = cosine_score_map(features, query.sentence);
    std::vector<ScoreMap> phrases;
    phrases.reserve(query.num_phrases());
    for (const auto& phrase : query.phrases) {
        phrases.push_back(cosine_score_map(features, phrase));
    }
    return fuse_score_maps(sentence, phrases, softmax_importance(query.importance_logits));
}

ScoreMap average_score_maps(std::span<const ScoreMap> maps) {
    if (maps.empty()) {
        throw InvalidArgument("ensemble needs at least one score map");
    }
    const std::size_t n = maps.front().num_clips();
    for (const auto& map : maps) {
        if (map.num_clips() != n) {
            throw InvalidArgument("ensemble members disagree on N");
        }
    }
    const double scale = 1.0 / static_cast<double>(maps.size());
    ScoreMap mean(n);
    mean.for_each_valid([&](std::size_t s, std::size_t e, double) {
        double acc = 0.0;
        for (const auto& map : maps) {
            acc += map.at(s, e);
        }
        mean.set(s, e, acc * scale);
    });
    return mean;
}

} // namespace stepdp
