#pragma once

// End-to-end evaluation: fuse -> log-probabilities -> select -> evaluate.

#include <cstdint>
#include <string>
#include <vector>

#include "stepdp/io.hpp"
#include "stepdp/metrics.hpp"
#include "stepdp/solver.hpp"

namespace stepdp {

struct PipelineConfig {
    SelectMethod method = SelectMethod::dp;
    SolverConfig solver;
    ProbMapping prob_map = ProbMapping::clamp;
    double epsilon = 1e-8;
    std::vector<double> thresholds = default_thresholds();
    // Videos solved concurrently. Output is identical for any value.
    std::size_t workers = 1;
};

struct RunStats {
    double wall_seconds = 0.0;
    double objective_total = 0.0;
    std::uint64_t peak_rss_bytes = 0;
    std::uint64_t max_dp_table_bytes = 0;
};

struct PipelineResult {
    std::vector<VideoPrediction> predictions; // input order
    EvalReport report;
    RunStats stats;
};

// Solves every video. Throws InvalidArgument on an empty list or duplicate
// video ids; solver errors propagate with the video id prepended.
std::vector<VideoPrediction> select_videos(const std::vector<VideoScoreFile>& videos, const PipelineConfig& config,
                                           RunStats* stats = nullptr);

// R@1 per threshold, AVG, overlap fraction and counts. Every predicted query
// needs ground truth.
EvalReport evaluate(const std::vector<VideoPrediction>& predictions, const std::vector<VideoGroundTruth>& truth,
                    const std::vector<double>& thresholds = default_thresholds());

PipelineResult run_pipeline(const std::vector<VideoScoreFile>& videos, const std::vector<VideoGroundTruth>& truth,
                            const PipelineConfig& config);

std::string format_report_text(const EvalReport& report);
std::string encode_report_json(const EvalReport& report, const PipelineConfig* config = nullptr,
                               const RunStats* stats = nullptr);

std::uint64_t peak_rss_bytes();

} // namespace stepdp
