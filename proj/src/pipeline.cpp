#include "stepdp/pipeline.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>
#include <unordered_map>

#include "json.hpp"

namespace stepdp {

namespace {

std::string threshold_key(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", t);
    return buf;
}

template <class Fn>
void rethrow_with_video(const std::string& video_id, Fn&& fn) {
    try {
        fn();
    } catch (const InfeasibleError& e) {
        throw InfeasibleError("video '" + video_id + "': " + e.what());
    } catch (const InvariantError& e) {
        throw InvariantError("video '" + video_id + "': " + e.what());
    } catch (const InvalidArgument& e) {
        throw InvalidArgument("video '" + video_id + "': " + e.what());
    }
}

} // namespace

std::uint64_t peak_rss_bytes() {
    rusage usage{};
    if (getrusage(RUSAGE_SELF, &usage) != 0) {
        return 0;
    }
    return static_cast<std::uint64_t>(usage.ru_maxrss) * 1024; // kilobytes on Linux
}

std::vector<VideoPrediction> select_videos(const std::vector<VideoScoreFile>& videos, const PipelineConfig& config,
                                           RunStats* stats) {
    if (videos.empty()) {
        throw InvalidArgument("no videos to process");
    }
    std::set<std::string> seen;
    for (const auto& video : videos) {
        if (!seen.insert(video.video_id).second) {
            throw InvalidArgument("duplicate video id '" + video.video_id + "'");
        }
    }

    const auto started = std::chrono::steady_clock::now();
    std::vector<VideoPrediction> out(videos.size());
    std::vector<std::exception_ptr> errors(videos.size());
    std::vector<std::uint64_t> table_bytes(videos.size(), 0);
    std::atomic<std::size_t> next{0};

    SolverConfig solver = config.solver;
    solver.workers = 1; // parallelism is across videos here

    auto work = [&] {
        for (std::size_t i = next++; i < videos.size(); i = next++) {
            try {
                const auto& video = videos[i];
                rethrow_with_video(video.video_id, [&] {
                    const ScoreStack stack = video.fused_stack();
                    const LogProbStack logp = score_to_logprob(stack, config.prob_map, config.epsilon);
                    Assignment a = select(logp, config.method, solver);
                    a.video_id = video.video_id;
                    check_assignment(a, stack.num_queries(), stack.num_clips());
                    if (a.method == SelectMethod::dp && !a.fallback_used) {
                        table_bytes[i] = dp_table_bytes(stack.num_queries(), stack.num_clips());
                    }
                    out[i] = VideoPrediction{std::move(a), video.query_ids()};
                });
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, videos.size()));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    // lowest index first so the reported error does not depend on scheduling
    for (const auto& error : errors) {
        if (error) {
            std::rethrow_exception(error);
        }
    }

    if (stats != nullptr) {
        stats->wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        stats->objective_total = 0.0;
        for (const auto& p : out) {
            stats->objective_total += p.assignment.objective;
        }
        stats->max_dp_table_bytes = *std::max_element(table_bytes.begin(), table_bytes.end());
        stats->peak_rss_bytes = peak_rss_bytes();
    }
    return out;
}

EvalReport evaluate(const std::vector<VideoPrediction>& predictions, const std::vector<VideoGroundTruth>& truth,
                    const std::vector<double>& thresholds) {
    if (predictions.empty()) {
        throw InvalidArgument("no predictions to evaluate");
    }
    if (thresholds.empty()) {
        throw InvalidArgument("at least one IoU threshold is required");
    }
    std::vector<LabeledInterval> gt;
    for (const auto& video : truth) {
        for (const auto& q : video.queries) {
            gt.push_back({video.video_id + "/" + q.query_id, q.interval});
        }
    }
    std::vector<LabeledInterval> pred;
    std::vector<Assignment> assignments;
    EvalReport report;
    for (const auto& p : predictions) {
        const auto& a = p.assignment;
        for (const auto& entry : a.entries) {
            pred.push_back({a.video_id + "/" + p.query_ids.at(entry.query), entry.interval});
        }
        assignments.push_back(a);
        report.fallback_count += a.fallback_used ? 1 : 0;
    }
    report.num_videos = predictions.size();
    report.num_queries = pred.size();
    std::vector<double> recalls;
    for (double t : thresholds) {
        const double r = recall_at_iou(pred, gt, t);
        report.recall_at[t] = r;
        recalls.push_back(r);
    }
    report.avg = average_recall(recalls);
    report.overlap_fraction = overlap_fraction(assignments);
    return report;
}

PipelineResult run_pipeline(const std::vector<VideoScoreFile>& videos, const std::vector<VideoGroundTruth>& truth,
                            const PipelineConfig& config) {
    PipelineResult result;
    result.predictions = select_videos(videos, config, &result.stats);
    result.report = evaluate(result.predictions, truth, config.thresholds);
    return result;
}

std::string format_report_text(const EvalReport& report) {
    std::string out;
    char line[128];
    for (const auto& [t, r] : report.recall_at) {
        std::snprintf(line, sizeof(line), "R@1 IoU=%-4s %6.2f\n", threshold_key(t).c_str(), r);
        out += line;
    }
    std::snprintf(line, sizeof(line), "AVG          %6.2f\n", report.avg);
    out += line;
    std::snprintf(line, sizeof(line), "overlap      %6.2f%%\n", report.overlap_fraction);
    out += line;
    std::snprintf(line, sizeof(line), "videos %zu  queries %zu  fallbacks %zu\n", report.num_videos,
                  report.num_queries, report.fallback_count);
    out += line;
    return out;
}

std::string encode_report_json(const EvalReport& report, const PipelineConfig* config, const RunStats* stats) {
    nlohmann::json doc;
    doc["format"] = "stepdp-eval-report";
    doc["version"] = kFormatVersion;
    nlohmann::json recall = nlohmann::json::object();
    for (const auto& [t, r] : report.recall_at) {
        recall[threshold_key(t)] = r;
    }
    doc["recall_at"] = std::move(recall);
    doc["avg"] = report.avg;
    doc["overlap_fraction"] = report.overlap_fraction;
    doc["num_videos"] = report.num_videos;
    doc["num_queries"] = report.num_queries;
    doc["fallback_count"] = report.fallback_count;
    if (config != nullptr) {
        doc["config"] = {{"method", std::string(to_string(config->method))},
                         {"max_exact_queries", config->solver.max_exact_queries},
                         {"prob_map", std::string(to_string(config->prob_map))},
                         {"epsilon", config->epsilon},
                         {"workers", config->workers}};
    }
    if (stats != nullptr) {
        doc["stats"] = {{"wall_seconds", stats->wall_seconds},
                        {"objective_total", stats->objective_total},
                        {"peak_rss_bytes", stats->peak_rss_bytes},
                        {"max_dp_table_bytes", stats->max_dp_table_bytes}};
    }
    return doc.dump(1) + "\n";
}

} // namespace stepdp
