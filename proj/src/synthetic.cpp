#include "stepdp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

namespace stepdp {

void SyntheticSpec::validate() const {
    if (num_videos == 0) {
        throw InvalidArgument("synthetic corpus needs at least one video");
    }
    if (num_clips == 0) {
        throw InvalidArgument("synthetic corpus needs N >= 1");
    }
    if (min_queries == 0 || min_queries > max_queries) {
        throw InvalidArgument("queries per video must be a range 1 <= min <= max");
    }
    if (max_queries > num_clips) {
        throw InfeasibleError("cannot place " + std::to_string(max_queries) + " disjoint intervals in " +
                              std::to_string(num_clips) + " clips");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw InvalidArgument("noise_sigma must be finite and >= 0");
    }
    if (!(score_sharpness > 0.0) || !std::isfinite(score_sharpness)) {
        throw InvalidArgument("score_sharpness must be finite and > 0");
    }
}

std::mt19937_64 video_rng(std::uint64_t seed, std::uint64_t video_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(video_index), static_cast<std::uint32_t>(video_index >> 32)};
    return std::mt19937_64(seq);
}

std::vector<ClipInterval> sample_disjoint_intervals(std::size_t num_queries, std::size_t num_clips,
                                                    std::mt19937_64& rng) {
    if (num_queries > num_clips) {
        throw InfeasibleError("cannot place " + std::to_string(num_queries) + " disjoint intervals in " +
                              std::to_string(num_clips) + " clips");
    }
    // s_0 <= e_0 < s_1 <= e_1 < ... maps one-to-one onto 2K strictly
    // increasing picks from {0 .. N+K-1} via t[2i] = s_i + i, t[2i+1] = e_i + i + 1.
    std::vector<std::size_t> pool(num_clips + num_queries);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<std::size_t> picks;
    picks.reserve(2 * num_queries);
    std::sample(pool.begin(), pool.end(), std::back_inserter(picks), 2 * num_queries, rng);

    std::vector<ClipInterval> out(num_queries);
    for (std::size_t i = 0; i < num_queries; ++i) {
        out[i] = {picks[2 * i] - i, picks[2 * i + 1] - i - 1};
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    SyntheticCorpus corpus;
    const std::size_t n = spec.num_clips;
    for (std::size_t v = 0; v < spec.num_videos; ++v) {
        auto rng = video_rng(spec.seed, v);
        std::uniform_int_distribution<std::size_t> count(spec.min_queries, spec.max_queries);
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        const std::size_t num_queries = count(rng);
        const auto truth = sample_disjoint_intervals(num_queries, n, rng);

        char name[32];
        std::snprintf(name, sizeof(name), "vid%05zu", v);
        VideoScoreFile video;
        video.video_id = name;
        video.num_clips = n;
        VideoGroundTruth gt;
        gt.video_id = name;
        for (std::size_t k = 0; k < num_queries; ++k) {
            QueryScores query;
            query.query_id = "q" + std::to_string(k);
            query.sentence_scores = ScoreMap(n);
            for (std::size_t s = 0; s < n; ++s) {
                for (std::size_t e = s; e < n; ++e) {
                    double score = std::pow(interval_iou({s, e}, truth[k]), spec.score_sharpness);
                    if (spec.noise_sigma > 0.0) {
                        score += noise(rng);
                    }
                    query.sentence_scores.set(s, e, std::clamp(score, 0.0, 1.0));
                }
            }
            gt.queries.push_back({query.query_id, truth[k]});
            video.queries.push_back(std::move(query));
        }
        corpus.videos.push_back(std::move(video));
        corpus.ground_truth.push_back(std::move(gt));
    }
    return corpus;
}

} // namespace stepdp
