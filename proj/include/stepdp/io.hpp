#pragma once

// File formats. Every file carries "format" and "version" fields; clip
// indices are 0-based and inclusive everywhere.
//
//   video scores   JSON, or packed little-endian binary (magic "SDPB")
//   features       JSON, proposal features plus per-query text features
//   ground truth   JSON, one interval per (video, query)
//   predictions    JSON, one interval + log-probability per query
//
// Score arrays are N*N row-major with null on every cell where start > end.
// Readers throw ParseError naming the file and the offending field.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stepdp/core.hpp"
#include "stepdp/metrics.hpp"

namespace stepdp {

inline constexpr int kFormatVersion = 1;

struct QueryScores {
    std::string query_id;
    ScoreMap sentence_scores;
    std::vector<ScoreMap> phrase_scores;
    // Empty, or N_p + 1 logits with the sentence first.
    std::vector<double> importance_logits;
};

struct VideoScoreFile {
    std::string video_id;
    std::size_t num_clips = 0;
    std::vector<QueryScores> queries;

    // Per-query fused maps; queries without phrases pass through unchanged.
    ScoreStack fused_stack() const;
    std::vector<std::string> query_ids() const;
};

struct VideoFeatures {
    std::string video_id;
    TemporalFeatureMap features;
    std::vector<QueryFeatures> queries;
};

struct VideoGroundTruth {
    std::string video_id;
    std::vector<LabeledInterval> queries;
};

struct VideoPrediction {
    Assignment assignment;
    // query_ids[k] names assignment.entries[k].query
    std::vector<std::string> query_ids;
};

enum class ScoreFileFormat { json, binary };

std::string encode_video_scores_json(const VideoScoreFile& file);
std::string encode_video_scores_binary(const VideoScoreFile& file);
// Detects the binary variant by its magic bytes.
VideoScoreFile decode_video_scores(std::string_view bytes, std::string_view source);

std::string encode_features(const VideoFeatures& video);
VideoFeatures decode_features(std::string_view text, std::string_view source);

std::string encode_ground_truth(const std::vector<VideoGroundTruth>& videos);
std::vector<VideoGroundTruth> decode_ground_truth(std::string_view text, std::string_view source);

std::string encode_predictions(const std::vector<VideoPrediction>& videos);
std::vector<VideoPrediction> decode_predictions(std::string_view text, std::string_view source);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

VideoScoreFile read_video_scores(const std::filesystem::path& path);
void write_video_scores(const std::filesystem::path& path, const VideoScoreFile& file,
                        ScoreFileFormat format = ScoreFileFormat::json);

// Expands directories to the *.json / *.sdpb files inside them, sorted by
// name; plain files pass through.
std::vector<std::filesystem::path> expand_inputs(const std::vector<std::filesystem::path>& inputs);

} // namespace stepdp
