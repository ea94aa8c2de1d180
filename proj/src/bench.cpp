#include "stepdp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "stepdp/pipeline.hpp"

namespace stepdp {

LogProbStack random_logprob_stack(std::size_t num_queries, std::size_t num_clips, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> prob(1e-3, 1.0);
    LogProbStack logp(num_queries, num_clips);
    for (std::size_t k = 0; k < num_queries; ++k) {
        for (std::size_t s = 0; s < num_clips; ++s) {
            for (std::size_t e = s; e < num_clips; ++e) {
                logp.set(k, s, e, std::log(prob(rng)));
            }
        }
    }
    return logp;
}

BenchTiming time_dp(std::size_t num_queries, std::size_t num_clips, std::size_t repeats, std::uint64_t seed,
                    std::size_t workers) {
    if (repeats == 0) {
        throw InvalidArgument("bench needs at least one repeat");
    }
    if (num_queries == 0 || num_queries > num_clips) {
        throw InvalidArgument("bench needs 1 <= K <= N");
    }
    const LogProbStack logp = random_logprob_stack(num_queries, num_clips, seed);
    SolverConfig config;
    config.max_exact_queries = num_queries;
    config.workers = workers;
    std::vector<double> seconds;
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const Assignment a = dp_select(logp, config);
        const auto t1 = std::chrono::steady_clock::now();
        if (a.fallback_used) {
            throw InvariantError("bench instance fell back to greedy");
        }
        seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(seconds.begin(), seconds.end());
    BenchTiming out;
    out.num_queries = num_queries;
    out.num_clips = num_clips;
    out.median_seconds = seconds[seconds.size() / 2];
    out.table_bytes = dp_table_bytes(num_queries, num_clips);
    return out;
}

BenchReport bench(std::size_t num_queries, std::size_t num_clips, std::size_t repeats, std::size_t max_exact_queries,
                  std::uint64_t seed) {
    if (repeats == 0) {
        throw InvalidArgument("bench needs at least one repeat");
    }
    if (num_queries == 0 || num_queries + 1 > max_exact_queries) {
        throw InvalidArgument("bench cap exceeded: K + 1 = " + std::to_string(num_queries + 1) +
                              " > max exact queries " + std::to_string(max_exact_queries));
    }
    if (num_queries + 1 > num_clips) {
        throw InvalidArgument("bench needs K + 1 <= N");
    }
    BenchReport report;
    report.base = time_dp(num_queries, num_clips, repeats, seed);
    report.more_queries = time_dp(num_queries + 1, num_clips, repeats, seed);
    report.more_clips = time_dp(num_queries, 2 * num_clips, repeats, seed);
    report.query_ratio = report.more_queries.median_seconds / report.base.median_seconds;
    report.clip_ratio = report.more_clips.median_seconds / report.base.median_seconds;
    report.query_ratio_in_band = report.query_ratio >= kQueryRatioLow && report.query_ratio <= kQueryRatioHigh;
    report.clip_ratio_in_band = report.clip_ratio >= kClipRatioLow && report.clip_ratio <= kClipRatioHigh;
    report.peak_rss_bytes = peak_rss_bytes();
    return report;
}

} // namespace stepdp
