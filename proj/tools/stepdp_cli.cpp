// stepdp command-line tool.
//
// Exit codes: 0 ok, 1 other error, 2 usage or parse error, 3 infeasible,
// 4 invariant violation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stepdp/bench.hpp"
#include "stepdp/errors.hpp"
#include "stepdp/fusion.hpp"
#include "stepdp/io.hpp"
#include "stepdp/losses.hpp"
#include "stepdp/pipeline.hpp"
#include "stepdp/synthetic.hpp"

namespace fs = std::filesystem;
using namespace stepdp;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kUsage = 2, kInfeasible = 3, kInvariant = 4 };

ScoreFileFormat parse_format(const std::string& name) {
    if (name == "json") {
        return ScoreFileFormat::json;
    }
    if (name == "binary") {
        return ScoreFileFormat::binary;
    }
    throw InvalidArgument("unknown score file format '" + name + "'");
}

const char* extension(ScoreFileFormat f) { return f == ScoreFileFormat::json ? ".json" : ".sdpb"; }

std::vector<VideoScoreFile> read_all_scores(const std::vector<std::string>& inputs) {
    std::vector<fs::path> paths(inputs.begin(), inputs.end());
    std::vector<VideoScoreFile> videos;
    for (const auto& p : expand_inputs(paths)) {
        videos.push_back(read_video_scores(p));
    }
    if (videos.empty()) {
        throw InvalidArgument("no score files found");
    }
    return videos;
}

std::vector<VideoGroundTruth> read_truth(const std::string& path) {
    return decode_ground_truth(read_file(path), path);
}

struct SelectOptions {
    std::string method = "dp";
    std::size_t max_exact_queries = SolverConfig{}.max_exact_queries;
    std::string prob_map = "clamp";
    double epsilon = 1e-8;
    std::size_t workers = 1;
    std::size_t solver_workers = 1;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--method", method, "dp, greedy or brute")
            ->check(CLI::IsMember({"dp", "greedy", "brute"}))
            ->capture_default_str();
        cmd->add_option("--max-exact-queries", max_exact_queries, "Largest K solved exactly")->capture_default_str();
        cmd->add_option("--prob-map", prob_map, "clamp, sigmoid or minmax")
            ->check(CLI::IsMember({"clamp", "sigmoid", "minmax"}))
            ->capture_default_str();
        cmd->add_option("--epsilon", epsilon, "Probability floor")->capture_default_str();
        cmd->add_option("--workers", workers, "Videos solved concurrently")->capture_default_str();
        cmd->add_option("--solver-workers", solver_workers, "Threads inside one DP solve")->capture_default_str();
    }

    PipelineConfig config() const {
        PipelineConfig c;
        c.method = parse_select_method(method);
        c.solver.max_exact_queries = max_exact_queries;
        c.solver.workers = solver_workers;
        c.prob_map = parse_prob_mapping(prob_map);
        c.epsilon = epsilon;
        c.workers = workers;
        return c;
    }
};

void print_stats(const RunStats& stats) {
    std::fprintf(stderr, "wall %.3fs  peak rss %.1f MiB  largest dp table %.1f MiB\n", stats.wall_seconds,
                 stats.peak_rss_bytes / 1048576.0, stats.max_dp_table_bytes / 1048576.0);
}

// fuse ---------------------------------------------------------------------

struct FuseCommand {
    std::vector<std::string> inputs;
    std::string output;
    std::string format = "json";
    bool ensemble = false;

    void run() const {
        const auto fmt = parse_format(format);
        if (ensemble) {
            run_ensemble(fmt);
            return;
        }
        std::vector<fs::path> paths(inputs.begin(), inputs.end());
        const auto files = expand_inputs(paths);
        if (files.empty()) {
            throw InvalidArgument("no feature files found");
        }
        for (const auto& path : files) {
            const auto video = decode_features(read_file(path), path.string());
            VideoScoreFile out;
            out.video_id = video.video_id;
            out.num_clips = video.features.num_clips();
            for (const auto& q : video.queries) {
                QueryScores scores;
                scores.query_id = q.query_id;
                scores.sentence_scores = build_query_score_map(video.features, q);
                out.queries.push_back(std::move(scores));
            }
            write_video_scores(fs::path(output) / (video.video_id + extension(fmt)), out, fmt);
        }
    }

    void run_ensemble(ScoreFileFormat fmt) const {
        const auto members = read_all_scores(inputs);
        const auto& first = members.front();
        VideoScoreFile out;
        out.video_id = first.video_id;
        out.num_clips = first.num_clips;
        std::vector<ScoreStack> stacks;
        for (const auto& m : members) {
            if (m.video_id != first.video_id || m.query_ids() != first.query_ids()) {
                throw InvalidArgument("ensemble members must share the video id and query ids");
            }
            stacks.push_back(m.fused_stack());
        }
        for (std::size_t k = 0; k < first.queries.size(); ++k) {
            std::vector<ScoreMap> maps;
            for (const auto& s : stacks) {
                maps.push_back(s.maps[k]);
            }
            out.queries.push_back({first.queries[k].query_id, average_score_maps(maps), {}, {}});
        }
        write_video_scores(output, out, fmt);
    }
};

// select / eval / run -------------------------------------------------------

struct SelectCommand {
    std::vector<std::string> inputs;
    std::string output;
    SelectOptions options;

    void run() const {
        RunStats stats;
        const auto predictions = select_videos(read_all_scores(inputs), options.config(), &stats);
        write_file(output, encode_predictions(predictions));
        print_stats(stats);
    }
};

struct EvalCommand {
    std::string predictions;
    std::string truth;
    std::string report;
    std::vector<double> thresholds = default_thresholds();

    void run() const {
        const auto preds = decode_predictions(read_file(predictions), predictions);
        const auto result = evaluate(preds, read_truth(truth), thresholds);
        std::cout << format_report_text(result);
        if (!report.empty()) {
            write_file(report, encode_report_json(result));
        }
    }
};

struct RunCommand {
    std::vector<std::string> inputs;
    std::string truth;
    std::string output;
    std::vector<double> thresholds = default_thresholds();
    SelectOptions options;

    void run() const {
        auto config = options.config();
        config.thresholds = thresholds;
        const auto result = run_pipeline(read_all_scores(inputs), read_truth(truth), config);
        const fs::path dir(output);
        write_file(dir / "predictions.json", encode_predictions(result.predictions));
        write_file(dir / "report.json", encode_report_json(result.report, &config, &result.stats));
        std::cout << format_report_text(result.report);
        print_stats(result.stats);
    }
};

// loss ----------------------------------------------------------------------

struct LossCommand {
    std::vector<std::string> inputs;
    std::string truth;
    LossConfig config;
    double mm = 0.0;
    double epsilon = 1e-8;

    void run() const {
        config.validate();
        const auto videos = read_all_scores(inputs);
        std::map<std::string, const VideoGroundTruth*> by_id;
        const auto gt = read_truth(truth);
        for (const auto& v : gt) {
            by_id[v.video_id] = &v;
        }

        double sum_total = 0.0;
        for (const auto& video : videos) {
            const auto it = by_id.find(video.video_id);
            if (it == by_id.end()) {
                throw InvalidArgument("no ground truth for video '" + video.video_id + "'");
            }
            const auto stack = video.fused_stack();
            double bce = 0.0;
            for (std::size_t k = 0; k < stack.maps.size(); ++k) {
                const auto& qid = video.queries[k].query_id;
                const LabeledInterval* label = nullptr;
                for (const auto& l : it->second->queries) {
                    if (l.query_id == qid) {
                        label = &l;
                    }
                }
                if (label == nullptr) {
                    throw InvalidArgument("no ground truth for query '" + video.video_id + "/" + qid + "'");
                }
                bce += bce_loss(stack.maps[k], iou_targets(video.num_clips, label->interval, config), epsilon);
            }
            bce /= static_cast<double>(stack.maps.size());
            const double exc = exclusiveness_loss(stack);
            const double total = total_loss(bce, mm, exc, config);
            sum_total += total;
            std::printf("%-24s bce %.6f  exc %.6f  total %.6f\n", video.video_id.c_str(), bce, exc, total);
        }
        std::printf("mean total %.6f over %zu videos\n", sum_total / videos.size(), videos.size());
    }
};

// gen / bench ---------------------------------------------------------------

struct GenCommand {
    SyntheticSpec spec;
    std::string output;
    std::string format = "json";

    void run() const {
        const auto fmt = parse_format(format);
        const auto corpus = generate_synthetic(spec);
        const fs::path dir(output);
        for (const auto& video : corpus.videos) {
            write_video_scores(dir / "scores" / (video.video_id + extension(fmt)), video, fmt);
        }
        write_file(dir / "ground_truth.json", encode_ground_truth(corpus.ground_truth));
    }
};

struct BenchCommand {
    std::size_t queries = 10;
    std::size_t clips = 64;
    std::size_t repeats = 3;
    std::size_t max_exact_queries = SolverConfig{}.max_exact_queries;
    std::uint64_t seed = 0;

    void run() const {
        const auto r = bench(queries, clips, repeats, max_exact_queries, seed);
        auto row = [](const BenchTiming& t) {
            std::printf("K=%-3zu N=%-4zu median %.4fs  tables %.1f MiB\n", t.num_queries, t.num_clips,
                        t.median_seconds, t.table_bytes / 1048576.0);
        };
        row(r.base);
        row(r.more_queries);
        row(r.more_clips);
        std::printf("K+1 ratio %.3f  band [%.1f, %.1f]  %s\n", r.query_ratio, kQueryRatioLow, kQueryRatioHigh,
                    r.query_ratio_in_band ? "in band" : "OUT OF BAND");
        std::printf("2N  ratio %.3f  band [%.1f, %.1f]  %s\n", r.clip_ratio, kClipRatioLow, kClipRatioHigh,
                    r.clip_ratio_in_band ? "in band" : "OUT OF BAND");
        std::printf("peak rss %.1f MiB\n", r.peak_rss_bytes / 1048576.0);
    }
};

void add_thresholds(CLI::App* cmd, std::vector<double>& thresholds) {
    cmd->add_option("--thresholds", thresholds, "IoU thresholds, comma separated")
        ->delimiter(',')
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-overlapping multi-query temporal grounding"};
    app.set_config("--config");
    app.require_subcommand(1);

    FuseCommand fuse;
    auto* fuse_cmd = app.add_subcommand("fuse", "Feature files to fused score files, or --ensemble averaging");
    fuse_cmd->add_option("inputs", fuse.inputs, "Feature files (or score files with --ensemble)")->required();
    fuse_cmd->add_option("-o,--output", fuse.output, "Output directory (output file with --ensemble)")->required();
    fuse_cmd->add_flag("--ensemble", fuse.ensemble, "Element-wise mean of aligned score files");
    fuse_cmd->add_option("--format", fuse.format, "json or binary")->capture_default_str();

    SelectCommand select_c;
    auto* select_cmd = app.add_subcommand("select", "Score files to a predictions file");
    select_cmd->add_option("inputs", select_c.inputs, "Score files or directories")->required();
    select_cmd->add_option("-o,--output", select_c.output, "Predictions file")->required();
    select_c.options.add_to(select_cmd);

    EvalCommand eval;
    auto* eval_cmd = app.add_subcommand("eval", "Score a predictions file against ground truth");
    eval_cmd->add_option("predictions", eval.predictions, "Predictions file")->required();
    eval_cmd->add_option("-g,--ground-truth", eval.truth, "Ground-truth file")->required();
    eval_cmd->add_option("--report", eval.report, "Also write a JSON report here");
    add_thresholds(eval_cmd, eval.thresholds);

    RunCommand run;
    auto* run_cmd = app.add_subcommand("run", "select followed by eval");
    run_cmd->add_option("inputs", run.inputs, "Score files or directories")->required();
    run_cmd->add_option("-g,--ground-truth", run.truth, "Ground-truth file")->required();
    run_cmd->add_option("-o,--output", run.output, "Directory for predictions.json and report.json")->required();
    add_thresholds(run_cmd, run.thresholds);
    run.options.add_to(run_cmd);

    LossCommand loss;
    auto* loss_cmd = app.add_subcommand("loss", "Training losses of stored score maps");
    loss_cmd->add_option("inputs", loss.inputs, "Score files or directories")->required();
    loss_cmd->add_option("-g,--ground-truth", loss.truth, "Ground-truth file")->required();
    loss_cmd->add_option("--alpha", loss.config.alpha, "Mutual matching weight")->capture_default_str();
    loss_cmd->add_option("--beta", loss.config.beta, "Exclusiveness weight")->capture_default_str();
    loss_cmd->add_option("--iou-scale-min", loss.config.iou_scale_min)->capture_default_str();
    loss_cmd->add_option("--iou-scale-max", loss.config.iou_scale_max)->capture_default_str();
    loss_cmd->add_option("--mm", loss.mm, "Mutual matching loss value")->capture_default_str();
    loss_cmd->add_option("--epsilon", loss.epsilon, "BCE probability clamp")->capture_default_str();

    GenCommand gen;
    auto* gen_cmd = app.add_subcommand("gen", "Write a seeded synthetic corpus");
    gen_cmd->add_option("-o,--output", gen.output, "Output directory")->required();
    gen_cmd->add_option("--videos", gen.spec.num_videos)->capture_default_str();
    gen_cmd->add_option("--clips", gen.spec.num_clips)->capture_default_str();
    gen_cmd->add_option("--min-queries", gen.spec.min_queries)->capture_default_str();
    gen_cmd->add_option("--max-queries", gen.spec.max_queries)->capture_default_str();
    gen_cmd->add_option("--noise", gen.spec.noise_sigma, "Gaussian noise sigma")->capture_default_str();
    gen_cmd->add_option("--sharpness", gen.spec.score_sharpness, "IoU exponent")->capture_default_str();
    gen_cmd->add_option("--seed", gen.spec.seed)->capture_default_str();
    gen_cmd->add_option("--format", gen.format, "json or binary")->capture_default_str();

    BenchCommand bench_c;
    auto* bench_cmd = app.add_subcommand("bench", "Time dp_select at (K,N), (K+1,N) and (K,2N)");
    bench_cmd->add_option("-k,--queries", bench_c.queries)->capture_default_str();
    bench_cmd->add_option("-n,--clips", bench_c.clips)->capture_default_str();
    bench_cmd->add_option("--repeats", bench_c.repeats)->capture_default_str();
    bench_cmd->add_option("--max-exact-queries", bench_c.max_exact_queries)->capture_default_str();
    bench_cmd->add_option("--seed", bench_c.seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*fuse_cmd) {
            fuse.run();
        } else if (*select_cmd) {
            select_c.run();
        } else if (*eval_cmd) {
            eval.run();
        } else if (*run_cmd) {
            run.run();
        } else if (*loss_cmd) {
            loss.run();
        } else if (*gen_cmd) {
            gen.run();
        } else if (*bench_cmd) {
            bench_c.run();
        }
    } catch (const stepdp::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kUsage;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return kInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kOther;
    }
    return kOk;
}
