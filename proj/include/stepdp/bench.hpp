#pragma once

// Timing harness for dp_select. Work grows as 2^K * K * N^2, so adding one
// query should roughly double the time and doubling N should roughly
// quadruple it.

#include <cstddef>
#include <cstdint>

#include "stepdp/solver.hpp"

namespace stepdp {

inline constexpr double kQueryRatioLow = 1.6;
inline constexpr double kQueryRatioHigh = 2.8;
inline constexpr double kClipRatioLow = 3.0;
inline constexpr double kClipRatioHigh = 5.5;

struct BenchTiming {
    std::size_t num_queries = 0;
    std::size_t num_clips = 0;
    double median_seconds = 0.0;
    std::uint64_t table_bytes = 0;
};

struct BenchReport {
    BenchTiming base;         // (K, N)
    BenchTiming more_queries; // (K + 1, N)
    BenchTiming more_clips;   // (K, 2N)
    double query_ratio = 0.0;
    double clip_ratio = 0.0;
    bool query_ratio_in_band = false;
    bool clip_ratio_in_band = false;
    std::uint64_t peak_rss_bytes = 0;
};

// Random log-probabilities log(U(1e-3, 1)) on every valid cell.
LogProbStack random_logprob_stack(std::size_t num_queries, std::size_t num_clips, std::uint64_t seed);

// Median wall time of `repeats` exact solves of one random K x N instance.
BenchTiming time_dp(std::size_t num_queries, std::size_t num_clips, std::size_t repeats, std::uint64_t seed = 0,
                    std::size_t workers = 1);

// Times (K, N), (K+1, N) and (K, 2N). Throws InvalidArgument when repeats is
// 0 or K + 1 exceeds `max_exact_queries`.
BenchReport bench(std::size_t num_queries, std::size_t num_clips, std::size_t repeats,
                  std::size_t max_exact_queries = 17, std::uint64_t seed = 0);

} // namespace stepdp
