#pragma once

// Seeded synthetic corpus: per video, K disjoint ground-truth intervals drawn
// uniformly among all feasible placements, and per query a score map
//
//   score[s,e] = clamp(iou([s,e], gt)^sharpness + N(0, noise_sigma), 0, 1).
//
// Every random draw derives from `seed`; video v uses its own stream so the
// corpus does not depend on generation order.

#include <cstdint>
#include <random>
#include <vector>

#include "stepdp/io.hpp"

namespace stepdp {

struct SyntheticSpec {
    std::size_t num_videos = 10;
    std::size_t num_clips = 32;
    std::size_t min_queries = 2;
    std::size_t max_queries = 6;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    double score_sharpness = 1.0;

    // Throws InfeasibleError when max_queries > num_clips, InvalidArgument
    // for other bad fields.
    void validate() const;
};

struct SyntheticCorpus {
    std::vector<VideoScoreFile> videos;
    std::vector<VideoGroundTruth> ground_truth;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

// K pairwise-disjoint intervals on an N-clip grid, uniform over all ordered
// placements, returned in random query order.
std::vector<ClipInterval> sample_disjoint_intervals(std::size_t num_queries, std::size_t num_clips,
                                                    std::mt19937_64& rng);

// Generator for one video's stream.
std::mt19937_64 video_rng(std::uint64_t seed, std::uint64_t video_index);

} // namespace stepdp
