#pragma once

// Non-overlapping proposal assignment across all step queries of a video.
//
// dp_select runs a subset dynamic program over (set of assigned queries,
// end clip). With logp[k][s][n] the log-probability that query k takes
// clips s..n:
//
//   f[Q][n] = max_{k in Q, s <= n} g[Q \ {k}][s - 1] + logp[k][s][n]
//   g[Q][n] = max(g[Q][n - 1], f[Q][n])
//
// where g[Q][n] is the best score placing every query of Q strictly inside
// clips 0..n, g[{}][.] = 0 and g[Q][-1] = -inf for Q non-empty. The answer
// is g[all][N - 1]. Cost is O(2^K * K * N^2) time and O(2^K * N) memory.
//
// Ties resolve deterministically: the optimum whose last interval ends
// earliest wins, then the smaller query index, then the smaller start, and
// the same rule recurses on the remaining queries. brute_force_select and
// greedy_select apply the same ordering.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "stepdp/core.hpp"

namespace stepdp {

enum class ProbMapping { clamp, sigmoid, minmax };

std::string_view to_string(ProbMapping mode);
ProbMapping parse_prob_mapping(std::string_view name);

// K x N x N log-probabilities; masked cells are -inf.
class LogProbStack {
public:
    LogProbStack(std::size_t num_queries, std::size_t num_clips);
    // Dense K*N*N values, row-major over (query, start, end). Entries with
    // start > end are forced to -inf.
    LogProbStack(std::size_t num_queries, std::size_t num_clips, std::vector<double> values);

    std::size_t num_queries() const { return num_queries_; }
    std::size_t num_clips() const { return num_clips_; }

    double at(std::size_t query, std::size_t start, std::size_t end) const {
        return values_[(query * num_clips_ + start) * num_clips_ + end];
    }
    void set(std::size_t query, std::size_t start, std::size_t end, double value);

    // Adds `delta` to every valid cell of every query.
    LogProbStack shifted(double delta) const;

private:
    std::size_t num_queries_;
    std::size_t num_clips_;
    std::vector<double> values_;
};

// Maps scores to probabilities and takes logs.
//   clamp:   p = min(max(score, eps), 1)
//   sigmoid: p = 1 / (1 + exp(-score))
//   minmax:  valid cells of each map rescaled linearly onto [eps, 1]
LogProbStack score_to_logprob(const ScoreStack& stack, ProbMapping mode = ProbMapping::clamp,
                              double epsilon = 1e-8);

struct SolverConfig {
    // Largest K solved exactly; larger videos fall back to greedy.
    std::size_t max_exact_queries = 17;
    // Threads used to split the subsets of one clip column. The result does
    // not depend on this value.
    std::size_t workers = 1;
};

// Best non-overlapping assignment (exact), or greedy with fallback_used set
// when K > max_exact_queries or K > N. Throws InfeasibleError when a query
// has no finite cell or no finite disjoint assignment exists.
Assignment dp_select(const LogProbStack& logp, const SolverConfig& config = {});

// Exhaustive search over disjoint assignments; requires K <= 6 and N <= 12.
Assignment brute_force_select(const LogProbStack& logp);

// Independent per-query argmax; overlaps allowed.
Assignment greedy_select(const LogProbStack& logp);

Assignment select(const LogProbStack& logp, SelectMethod method, const SolverConfig& config = {});

// Bytes held by the DP tables for a K x N instance.
std::uint64_t dp_table_bytes(std::size_t num_queries, std::size_t num_clips);

// Sum of logp over the given intervals, one per query.
double score_intervals(const LogProbStack& logp, std::span<const ClipInterval> intervals);

} // namespace stepdp
