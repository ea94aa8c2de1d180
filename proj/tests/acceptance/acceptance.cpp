// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stepdp/bench.hpp"
#include "stepdp/fusion.hpp"
#include "stepdp/losses.hpp"
#include "stepdp/metrics.hpp"
#include "stepdp/pipeline.hpp"
#include "stepdp/solver.hpp"
#include "stepdp/synthetic.hpp"
#include "test_support.hpp"

using namespace stepdp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), format, args...);
    return buf;
}

// 1 ------------------------------------------------------------------------

Outcome oracle_equivalence() {
    std::mt19937_64 rng(1001);
    std::size_t instances = 0;
    double worst = 0.0;
    bool ok = true;
    for (std::size_t n = 2; n <= 8; ++n) {
        for (std::size_t k = 1; k <= std::min<std::size_t>(4, n); ++k) {
            for (int rep = 0; rep < 24; ++rep) {
                const auto logp = rep % 3 == 0 ? testing::tied_logp(k, n, rng) : testing::random_logp(k, n, rng);
                const auto dp = dp_select(logp);
                const auto brute = brute_force_select(logp);
                const double enumerated = testing::enumerate_best_objective(logp);
                worst = std::max({worst, std::abs(dp.objective - brute.objective),
                                  std::abs(dp.objective - enumerated)});
                ok = ok && dp.non_overlapping() && brute.non_overlapping() && !dp.fallback_used;
                ++instances;
            }
        }
    }
    ok = ok && worst <= 1e-9 && instances >= 500;
    return {ok, fmt("%zu instances, max |dp - brute| = %.3g, all non-overlapping", instances, worst)};
}

// 2 ------------------------------------------------------------------------

Outcome non_overlap_fuzz() {
    std::mt19937_64 rng(1002);
    std::uniform_int_distribution<std::size_t> kd(1, 10);
    std::vector<Assignment> dp_all;
    std::vector<Assignment> greedy_planted;
    std::size_t planted_overlapping = 0;
    bool valid = true;
    const std::size_t instances = 1000;
    for (std::size_t i = 0; i < instances; ++i) {
        const std::size_t k = kd(rng);
        std::uniform_int_distribution<std::size_t> nd(k, 64);
        const std::size_t n = nd(rng);
        auto logp = testing::random_logp(k, n, rng);
        // every other instance with K >= 2 gets two queries sharing a peak cell
        const bool planted = k >= 2 && i % 2 == 0;
        if (planted) {
            std::uniform_int_distribution<std::size_t> cd(0, n - 1);
            std::size_t s = cd(rng);
            std::size_t e = cd(rng);
            if (s > e) {
                std::swap(s, e);
            }
            logp.set(0, s, e, 0.0);
            logp.set(1, s, e, 0.0);
        }
        auto dp = dp_select(logp);
        try {
            check_assignment(dp, k, n);
        } catch (const InvariantError&) {
            valid = false;
        }
        valid = valid && dp.non_overlapping() && !dp.fallback_used;
        dp_all.push_back(std::move(dp));
        if (planted) {
            auto g = greedy_select(logp);
            planted_overlapping += g.non_overlapping() ? 0 : 1;
            greedy_planted.push_back(std::move(g));
        }
    }
    const double dp_frac = overlap_fraction(dp_all);
    const double greedy_frac = overlap_fraction(greedy_planted);
    const bool ok = valid && dp_frac == 0.0 && greedy_frac > 0.0 && planted_overlapping == greedy_planted.size();
    return {ok, fmt("%zu instances, dp overlap %.2f%%; greedy overlaps on %zu/%zu planted collisions (%.2f%%)",
                    instances, dp_frac, planted_overlapping, greedy_planted.size(), greedy_frac)};
}

// 3 ------------------------------------------------------------------------

Outcome worked_example() {
    const auto logp = testing::worked_example();
    const auto dp = dp_select(logp);
    const auto g = greedy_select(logp);
    const bool dp_ok = dp.entries.size() == 2 && dp.entries[0].interval == ClipInterval{0, 0} &&
                       dp.entries[1].interval == ClipInterval{1, 2} && std::abs(dp.objective + 0.45) <= 1e-12;
    const bool greedy_ok = g.entries.size() == 2 && g.entries[0].interval == ClipInterval{0, 1} &&
                           g.entries[1].interval == ClipInterval{0, 1} && !g.non_overlapping();
    return {dp_ok && greedy_ok,
            fmt("dp A=[%zu,%zu] B=[%zu,%zu] objective %.4f; greedy A=[%zu,%zu] B=[%zu,%zu]",
                dp.entries[0].interval.start, dp.entries[0].interval.end, dp.entries[1].interval.start,
                dp.entries[1].interval.end, dp.objective, g.entries[0].interval.start, g.entries[0].interval.end,
                g.entries[1].interval.start, g.entries[1].interval.end)};
}

// 4 ------------------------------------------------------------------------

Outcome avg_semantics() {
    const double a = average_recall(std::vector<double>{59.43, 46.73, 27.57});
    const double b = average_recall(std::vector<double>{70.22, 56.83, 34.73});
    const bool ok = std::abs(a - 44.58) <= 0.01 && std::abs(b - 53.93) <= 0.01;
    return {ok, fmt("AVG %.4f (want 44.58) and %.4f (want 53.93)", a, b)};
}

// 5 ------------------------------------------------------------------------

TemporalFeatureMap random_features(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> values(n * n * d);
    for (double& v : values) {
        v = g(rng);
    }
    return TemporalFeatureMap(n, d, std::move(values));
}

std::vector<double> random_vec(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(d);
    for (double& x : v) {
        x = g(rng);
    }
    return v;
}

Outcome fusion_math() {
    const double tol = 1e-6;
    std::mt19937_64 rng(1005);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    std::normal_distribution<double> g(0.0, 2.0);
    double worst_bound = 0.0;
    double worst_scale = 0.0;
    double worst_shift = 0.0;
    double worst_identity = 0.0;
    const int trials = 300;
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = 1 + t % 8;
        const std::size_t d = 2 + t % 5;
        const std::size_t np = t % 4;
        const auto features = random_features(n, d, rng);
        const auto text = random_vec(d, rng);

        // cosine maps do not change when the text vector is scaled by c > 0
        auto scaled = text;
        const double c = scale(rng);
        for (double& x : scaled) {
            x *= c;
        }
        const auto base = cosine_score_map(features, text);
        const auto again = cosine_score_map(features, scaled);
        base.for_each_valid([&](std::size_t s, std::size_t e, double v) {
            worst_scale = std::max(worst_scale, std::abs(v - again.at(s, e)));
        });

        // softmax is unchanged by a constant shift of the logits
        std::vector<double> logits(np + 1);
        for (double& x : logits) {
            x = g(rng);
        }
        auto shifted = logits;
        const double delta = g(rng) * 50.0;
        for (double& x : shifted) {
            x += delta;
        }
        const auto w = softmax_importance(logits);
        const auto ws = softmax_importance(shifted);
        worst_shift = std::max(worst_shift, std::abs(w.sentence_weight - ws.sentence_weight));
        for (std::size_t i = 0; i < np; ++i) {
            worst_shift = std::max(worst_shift, std::abs(w.phrase_weights[i] - ws.phrase_weights[i]));
        }

        // fused cells are convex combinations of the component cells
        std::vector<ScoreMap> phrases;
        for (std::size_t i = 0; i < np; ++i) {
            phrases.push_back(cosine_score_map(features, random_vec(d, rng)));
        }
        const auto fused = fuse_score_maps(base, phrases, w);
        fused.for_each_valid([&](std::size_t s, std::size_t e, double v) {
            double lo = base.at(s, e);
            double hi = lo;
            for (const auto& p : phrases) {
                lo = std::min(lo, p.at(s, e));
                hi = std::max(hi, p.at(s, e));
            }
            worst_bound = std::max({worst_bound, lo - v, v - hi});
        });

        // no phrases, or all weight on the sentence, gives the sentence map
        const auto alone = fuse_score_maps(base, {}, ImportanceWeights{1.0, {}});
        ImportanceWeights all_sentence{1.0, std::vector<double>(np, 0.0)};
        const auto pinned = fuse_score_maps(base, phrases, all_sentence);
        base.for_each_valid([&](std::size_t s, std::size_t e, double v) {
            worst_identity = std::max({worst_identity, std::abs(alone.at(s, e) - v), std::abs(pinned.at(s, e) - v)});
        });
    }
    const bool ok = worst_bound <= tol && worst_scale <= tol && worst_shift <= tol && worst_identity <= tol;
    return {ok, fmt("%d trials; max violation: bounds %.2g, scale %.2g, shift %.2g, identity %.2g", trials,
                    std::max(worst_bound, 0.0), worst_scale, worst_shift, worst_identity)};
}

// 6 ------------------------------------------------------------------------

Outcome loss_suite() {
    std::mt19937_64 rng(1006);
    std::size_t disjoint_zero = 0;
    std::size_t shared_positive = 0;
    const std::size_t trials = 400;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t k = 2 + t % 4;
        const std::size_t n = 1 + t % 7;
        std::uniform_int_distribution<std::size_t> owner(0, k);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        ScoreStack stack;
        stack.video_id = "v";
        stack.maps.assign(k, ScoreMap(n, 0.0));
        std::vector<std::pair<std::size_t, std::size_t>> cells;
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t e = s; e < n; ++e) {
                cells.emplace_back(s, e);
                const std::size_t o = owner(rng);
                if (o < k) {
                    stack.maps[o].set(s, e, u(rng));
                }
            }
        }
        disjoint_zero += exclusiveness_loss(stack) == 0.0 ? 1 : 0;

        // one shared cell between two distinct queries
        const auto [s, e] = cells[rng() % cells.size()];
        const std::size_t a = rng() % k;
        const std::size_t b = (a + 1 + rng() % (k - 1)) % k;
        stack.maps[a].set(s, e, u(rng));
        stack.maps[b].set(s, e, u(rng));
        shared_positive += exclusiveness_loss(stack) > 0.0 ? 1 : 0;
    }

    ScoreMap x(3, 0.0);
    x.set(0, 1, 1.0);
    ScoreStack example{"v", {x, x}};
    const double sixth = exclusiveness_loss(example);

    const double h = 1e-5;
    double worst_rel = 0.0;
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 2 + t % 6;
        auto pred = testing::random_map(n, rng, 0.05, 0.95);
        const auto target = testing::random_map(n, rng, 0.0, 1.0);
        const auto grad = bce_loss_gradient(pred, target);
        pred.for_each_valid([&](std::size_t s, std::size_t e, double p) {
            auto up = pred;
            auto down = pred;
            up.set(s, e, p + h);
            down.set(s, e, p - h);
            const double numeric = (bce_loss(up, target) - bce_loss(down, target)) / (2 * h);
            const double analytic = grad.at(s, e);
            worst_rel = std::max(worst_rel, std::abs(numeric - analytic) / std::max(std::abs(analytic), 1e-12));
        });
    }
    const bool ok = disjoint_zero == trials && shared_positive == trials && sixth == 1.0 / 6.0 && worst_rel <= 1e-3;
    return {ok, fmt("disjoint->0 %zu/%zu, shared->positive %zu/%zu, example %.17g (1/6), BCE FD max rel err %.2g",
                    disjoint_zero, trials, shared_positive, trials, sixth, worst_rel)};
}

// 7 ------------------------------------------------------------------------

Outcome complexity() {
    const auto r = bench(10, 64, 5);
    const std::size_t k = 17;
    const std::size_t n = 128;
    const auto logp = random_logprob_stack(k, n, 7);
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = dp_select(logp);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double rss_gib = peak_rss_bytes() / (1024.0 * 1024.0 * 1024.0);
    const double table_gib = dp_table_bytes(k, n) / (1024.0 * 1024.0 * 1024.0);
    const bool full_ok = !a.fallback_used && a.non_overlapping() && seconds <= 600.0 && rss_gib <= 8.0;
    const bool ok = r.query_ratio_in_band && r.clip_ratio_in_band && full_ok;
    return {ok, fmt("K 10->11 at N=64 x%.2f [%.1f,%.1f]; N 64->128 at K=10 x%.2f [%.1f,%.1f]; "
                    "K=17 N=128 solve %.1fs, tables %.2f GiB, peak RSS %.2f GiB",
                    r.query_ratio, kQueryRatioLow, kQueryRatioHigh, r.clip_ratio, kClipRatioLow, kClipRatioHigh,
                    seconds, table_gib, rss_gib)};
}

// 8 ------------------------------------------------------------------------

// Queries in order of their best score each take the best cell that does not
// overlap earlier picks. nullopt when some query is left without a cell.
std::optional<double> sequential_feasible(const LogProbStack& logp) {
    const std::size_t k = logp.num_queries();
    const std::size_t n = logp.num_clips();
    std::vector<double> best(k, -std::numeric_limits<double>::infinity());
    for (std::size_t q = 0; q < k; ++q) {
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t e = s; e < n; ++e) {
                best[q] = std::max(best[q], logp.at(q, s, e));
            }
        }
    }
    std::vector<std::size_t> order(k);
    for (std::size_t q = 0; q < k; ++q) {
        order[q] = q;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return best[a] > best[b]; });
    std::vector<bool> used(n, false);
    double total = 0.0;
    for (const std::size_t q : order) {
        double pick = -std::numeric_limits<double>::infinity();
        ClipInterval where{};
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t e = s; e < n && !used[e]; ++e) {
                if (!used[s] && logp.at(q, s, e) > pick) {
                    pick = logp.at(q, s, e);
                    where = {s, e};
                }
            }
        }
        if (!std::isfinite(pick)) {
            return std::nullopt;
        }
        for (std::size_t c = where.start; c <= where.end; ++c) {
            used[c] = true;
        }
        total += pick;
    }
    return total;
}

Outcome end_to_end() {
    SyntheticSpec clean;
    clean.num_videos = 40;
    clean.num_clips = 32;
    clean.min_queries = 2;
    clean.max_queries = 8;
    clean.seed = 2024;
    const auto c = generate_synthetic(clean);
    const auto perfect = run_pipeline(c.videos, c.ground_truth, PipelineConfig{});
    bool clean_ok = perfect.report.overlap_fraction == 0.0;
    for (const auto& [t, r] : perfect.report.recall_at) {
        clean_ok = clean_ok && r == 100.0;
    }

    SyntheticSpec noisy = clean;
    noisy.noise_sigma = 0.3;
    noisy.seed = 2025;
    const auto v = generate_synthetic(noisy);
    PipelineConfig greedy_cfg;
    greedy_cfg.method = SelectMethod::greedy;
    const auto dp = run_pipeline(v.videos, v.ground_truth, PipelineConfig{});
    const auto greedy = run_pipeline(v.videos, v.ground_truth, greedy_cfg);

    std::size_t compared = 0;
    std::size_t dominated = 0;
    for (std::size_t i = 0; i < v.videos.size(); ++i) {
        const auto logp = score_to_logprob(v.videos[i].fused_stack());
        const double d = dp.predictions[i].assignment.objective;
        std::optional<double> feasible = sequential_feasible(logp);
        const auto& g = greedy.predictions[i].assignment;
        if (g.non_overlapping()) {
            feasible = feasible ? std::max(*feasible, g.objective) : g.objective;
        }
        if (feasible) {
            ++compared;
            dominated += d >= *feasible - 1e-9 ? 1 : 0;
        }
    }
    // videos where neither greedy nor its sequential repair is feasible have
    // no greedy-feasible objective to compare against
    const bool noisy_ok = compared > 0 && dominated == compared &&
                          dp.report.overlap_fraction == 0.0 && greedy.report.overlap_fraction > 0.0;
    return {clean_ok && noisy_ok,
            fmt("noiseless: AVG %.2f overlap %.2f%%; noisy: dp >= greedy-feasible on %zu/%zu comparable videos "
                "(%zu of %zu have a greedy-feasible assignment), overlap dp %.2f%% vs greedy %.2f%% "
                "(AVG dp %.2f, greedy %.2f)",
                perfect.report.avg, perfect.report.overlap_fraction, dominated, compared, compared, v.videos.size(),
                dp.report.overlap_fraction, greedy.report.overlap_fraction, dp.report.avg, greedy.report.avg)};
}

// 9 ------------------------------------------------------------------------

Outcome determinism() {
    SyntheticSpec spec;
    spec.num_videos = 30;
    spec.num_clips = 32;
    spec.min_queries = 2;
    spec.max_queries = 9;
    spec.noise_sigma = 0.3;
    spec.seed = 77;
    const auto dir = std::filesystem::temp_directory_path() / "stepdp_acceptance_determinism";
    std::filesystem::remove_all(dir);
    std::vector<std::string> files;
    const std::size_t worker_counts[] = {1, 2, 5};
    for (const std::size_t workers : worker_counts) {
        // regenerate each time: the whole run, not just selection, is repeated
        const auto corpus = generate_synthetic(spec);
        PipelineConfig cfg;
        cfg.workers = workers;
        cfg.solver.workers = workers;
        const auto result = run_pipeline(corpus.videos, corpus.ground_truth, cfg);
        const auto path = dir / ("predictions_w" + std::to_string(workers) + ".json");
        write_file(path, encode_predictions(result.predictions));
        files.push_back(read_file(path));
    }
    std::filesystem::remove_all(dir);
    const bool ok = files[0] == files[1] && files[0] == files[2];
    return {ok, fmt("workers 1/2/5 prediction files %s (%zu bytes)", ok ? "identical" : "DIFFER", files[0].size())};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"oracle equivalence", oracle_equivalence}, {"non-overlap invariant", non_overlap_fuzz},
        {"worked example", worked_example},         {"AVG semantics", avg_semantics},
        {"fusion math", fusion_math},               {"loss suite", loss_suite},
        {"complexity conformance", complexity},     {"end-to-end synthetic", end_to_end},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
