#include "stepdp/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

namespace stepdp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Hard ceiling for the subset tables: masks are 32-bit and 2^K rows must fit
// in memory long before this.
constexpr std::size_t kMaxDpQueries = 24;

constexpr std::size_t kMaxBruteQueries = 6;
constexpr std::size_t kMaxBruteClips = 12;

// Argmax record for g[Q][j]: the interval whose end is last among the
// queries of Q in the best placement.
struct Choice {
    std::uint16_t start;
    std::uint16_t end;
    std::uint16_t query;
};
constexpr std::uint16_t kNoChoice = std::numeric_limits<std::uint16_t>::max();

double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

void require_assignable(const LogProbStack& logp) {
    const std::size_t n = logp.num_clips();
    for (std::size_t k = 0; k < logp.num_queries(); ++k) {
        bool any = false;
        for (std::size_t s = 0; s < n && !any; ++s) {
            for (std::size_t e = s; e < n && !any; ++e) {
                any = std::isfinite(logp.at(k, s, e));
            }
        }
        if (!any) {
            throw InfeasibleError("unassignable query " + std::to_string(k) + ": every proposal is -inf");
        }
    }
}

} // namespace

std::string_view to_string(ProbMapping mode) {
    switch (mode) {
    case ProbMapping::clamp:
        return "clamp";
    case ProbMapping::sigmoid:
        return "sigmoid";
    case ProbMapping::minmax:
        return "minmax";
    }
    return "unknown";
}

ProbMapping parse_prob_mapping(std::string_view name) {
    if (name == "clamp") {
        return ProbMapping::clamp;
    }
    if (name == "sigmoid") {
        return ProbMapping::sigmoid;
    }
    if (name == "minmax") {
        return ProbMapping::minmax;
    }
    throw InvalidArgument("unknown probability mapping '" + std::string(name) + "'");
}

LogProbStack::LogProbStack(std::size_t num_queries, std::size_t num_clips)
    : num_queries_(num_queries), num_clips_(num_clips), values_(num_queries * num_clips * num_clips, kNegInf) {}

LogProbStack::LogProbStack(std::size_t num_queries, std::size_t num_clips, std::vector<double> values)
    : num_queries_(num_queries), num_clips_(num_clips), values_(std::move(values)) {
    if (values_.size() != num_queries * num_clips * num_clips) {
        throw InvalidArgument("log-prob stack expects " + std::to_string(num_queries * num_clips * num_clips) +
                              " values, got " + std::to_string(values_.size()));
    }
    for (std::size_t k = 0; k < num_queries_; ++k) {
        for (std::size_t s = 0; s < num_clips_; ++s) {
            for (std::size_t e = 0; e < num_clips_; ++e) {
                double& v = values_[(k * num_clips_ + s) * num_clips_ + e];
                if (s > e || std::isnan(v)) {
                    v = kNegInf;
                }
            }
        }
    }
}

void LogProbStack::set(std::size_t query, std::size_t start, std::size_t end, double value) {
    if (query >= num_queries_ || start > end || end >= num_clips_) {
        throw InvalidArgument("log-prob cell out of range");
    }
    values_[(query * num_clips_ + start) * num_clips_ + end] = value;
}

LogProbStack LogProbStack::shifted(double delta) const {
    LogProbStack out = *this;
    for (double& v : out.values_) {
        if (std::isfinite(v)) {
            v += delta;
        }
    }
    return out;
}

LogProbStack score_to_logprob(const ScoreStack& stack, ProbMapping mode, double epsilon) {
    stack.validate();
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw InvalidArgument("epsilon must lie in (0, 1)");
    }
    const std::size_t n = stack.num_clips();
    LogProbStack out(stack.num_queries(), n);
    for (std::size_t k = 0; k < stack.num_queries(); ++k) {
        const ScoreMap& map = stack.maps[k];
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        if (mode == ProbMapping::minmax) {
            map.for_each_valid([&](std::size_t, std::size_t, double v) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            });
        }
        map.for_each_valid([&](std::size_t s, std::size_t e, double v) {
            double lp = 0.0;
            switch (mode) {
            case ProbMapping::clamp:
                lp = std::log(std::min(std::max(v, epsilon), 1.0));
                break;
            case ProbMapping::sigmoid:
                lp = log_sigmoid(v);
                break;
            case ProbMapping::minmax:
                lp = hi > lo ? std::log(epsilon + (1.0 - epsilon) * (v - lo) / (hi - lo)) : 0.0;
                break;
            }
            out.set(k, s, e, lp);
        });
    }
    return out;
}

std::uint64_t dp_table_bytes(std::size_t num_queries, std::size_t num_clips) {
    const std::uint64_t cells = (std::uint64_t{1} << num_queries) * (num_clips + 1);
    const std::uint64_t transposed = std::uint64_t{num_queries} * num_clips * num_clips * sizeof(double);
    return cells * (sizeof(double) + sizeof(Choice)) + transposed;
}

double score_intervals(const LogProbStack& logp, std::span<const ClipInterval> intervals) {
    if (intervals.size() != logp.num_queries()) {
        throw InvalidArgument("need one interval per query");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < intervals.size(); ++k) {
        total += logp.at(k, intervals[k].start, intervals[k].end);
    }
    return total;
}

Assignment greedy_select(const LogProbStack& logp) {
    if (logp.num_queries() == 0 || logp.num_clips() == 0) {
        throw InvalidArgument("greedy selection needs K >= 1 and N >= 1");
    }
    require_assignable(logp);
    const std::size_t n = logp.num_clips();
    Assignment out;
    out.method = SelectMethod::greedy;
    for (std::size_t k = 0; k < logp.num_queries(); ++k) {
        double best = kNegInf;
        ClipInterval pick;
        // earliest end first, then earliest start
        for (std::size_t e = 0; e < n; ++e) {
            for (std::size_t s = 0; s <= e; ++s) {
                const double v = logp.at(k, s, e);
                if (v > best) {
                    best = v;
                    pick = {s, e};
                }
            }
        }
        out.entries.push_back({k, pick, best});
        out.objective += best;
    }
    return out;
}

Assignment dp_select(const LogProbStack& logp, const SolverConfig& config) {
    const std::size_t num_queries = logp.num_queries();
    const std::size_t n = logp.num_clips();
    if (num_queries == 0 || n == 0) {
        throw InvalidArgument("dp selection needs K >= 1 and N >= 1");
    }
    if (num_queries > std::min(config.max_exact_queries, kMaxDpQueries) || num_queries > n) {
        Assignment fallback = greedy_select(logp);
        fallback.method = SelectMethod::dp;
        fallback.fallback_used = true;
        return fallback;
    }
    if (n >= kNoChoice) {
        throw InvalidArgument("dp selection supports at most " + std::to_string(kNoChoice - 1) + " clips");
    }
    require_assignable(logp);

    const std::size_t num_sets = std::size_t{1} << num_queries;
    const std::size_t full = num_sets - 1;
    const std::size_t width = n + 1; // column j holds "everything placed within clips 0..j-1"

    // logp transposed to [query][end][start] so the start loop is contiguous.
    std::vector<double> by_end(num_queries * n * n, kNegInf);
    for (std::size_t k = 0; k < num_queries; ++k) {
        for (std::size_t e = 0; e < n; ++e) {
            for (std::size_t s = 0; s <= e; ++s) {
                by_end[(k * n + e) * n + s] = logp.at(k, s, e);
            }
        }
    }

    std::vector<double> g(num_sets * width, kNegInf);
    std::vector<Choice> choice(num_sets * width, Choice{0, 0, kNoChoice});
    std::fill(g.begin(), g.begin() + width, 0.0);

    auto fill_sets = [&](std::size_t e, std::size_t first, std::size_t last) {
        const std::size_t j = e + 1;
        for (std::size_t set = first; set < last; ++set) {
            double best = kNegInf;
            std::size_t best_query = kNoChoice;
            std::size_t best_start = 0;
            for (std::size_t bits = set; bits != 0; bits &= bits - 1) {
                const std::size_t k = static_cast<std::size_t>(std::countr_zero(bits));
                const double* rest = &g[(set ^ (std::size_t{1} << k)) * width];
                const double* cells = &by_end[(k * n + e) * n];
                for (std::size_t s = 0; s <= e; ++s) {
                    const double v = rest[s] + cells[s];
                    if (v > best) {
                        best = v;
                        best_query = k;
                        best_start = s;
                    }
                }
            }
            const std::size_t here = set * width + j;
            if (best > g[here - 1]) {
                g[here] = best;
                choice[here] = Choice{static_cast<std::uint16_t>(best_start), static_cast<std::uint16_t>(e),
                                      static_cast<std::uint16_t>(best_query)};
            } else {
                g[here] = g[here - 1];
                choice[here] = choice[here - 1];
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, num_sets / 64));
    for (std::size_t e = 0; e < n; ++e) {
        if (workers == 1) {
            fill_sets(e, 1, num_sets);
            continue;
        }
        // Column e only reads columns < e + 1, so subsets split freely.
        std::vector<std::jthread> pool;
        const std::size_t chunk = (num_sets - 1 + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t first = 1 + w * chunk;
            const std::size_t last = std::min(num_sets, first + chunk);
            if (first < last) {
                pool.emplace_back(fill_sets, e, first, last);
            }
        }
    }

    if (!std::isfinite(g[full * width + n])) {
        throw InfeasibleError("no finite non-overlapping assignment exists");
    }

    Assignment out;
    out.method = SelectMethod::dp;
    out.entries.resize(num_queries);
    std::size_t set = full;
    std::size_t j = n;
    while (set != 0) {
        const Choice c = choice[set * width + j];
        if (c.query == kNoChoice || (set & (std::size_t{1} << c.query)) == 0) {
            throw InvariantError("dp backtrack reached an empty record");
        }
        const ClipInterval interval{c.start, c.end};
        out.entries[c.query] = {c.query, interval, logp.at(c.query, c.start, c.end)};
        set ^= std::size_t{1} << c.query;
        j = c.start;
    }
    // accumulate in temporal order, as the recurrence did
    std::vector<AssignmentEntry> ordered = out.entries;
    std::sort(ordered.begin(), ordered.end(),
              [](const AssignmentEntry& a, const AssignmentEntry& b) { return a.interval.start < b.interval.start; });
    for (const auto& entry : ordered) {
        out.objective += entry.log_prob;
    }
    return out;
}

Assignment brute_force_select(const LogProbStack& logp) {
    const std::size_t num_queries = logp.num_queries();
    const std::size_t n = logp.num_clips();
    if (num_queries == 0 || n == 0) {
        throw InvalidArgument("brute force needs K >= 1 and N >= 1");
    }
    if (num_queries > kMaxBruteQueries || n > kMaxBruteClips) {
        throw InvalidArgument("brute force limited to K <= " + std::to_string(kMaxBruteQueries) +
                              " and N <= " + std::to_string(kMaxBruteClips));
    }
    if (num_queries > n) {
        throw InfeasibleError("cannot place " + std::to_string(num_queries) + " disjoint intervals in " +
                              std::to_string(n) + " clips");
    }
    require_assignable(logp);

    std::vector<ClipInterval> current(num_queries);
    std::vector<ClipInterval> best(num_queries);
    double best_value = kNegInf;
    std::vector<std::size_t> best_key;
    bool found = false;

    // Sum in temporal order and the tie key (end, query, start) read from
    // the last interval backwards.
    auto evaluate = [&](double& value, std::vector<std::size_t>& key) {
        std::vector<std::size_t> order(num_queries);
        for (std::size_t k = 0; k < num_queries; ++k) {
            order[k] = k;
        }
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return current[a].start < current[b].start; });
        value = 0.0;
        for (std::size_t k : order) {
            value += logp.at(k, current[k].start, current[k].end);
        }
        key.clear();
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            key.push_back(current[*it].end);
            key.push_back(*it);
            key.push_back(current[*it].start);
        }
    };

    std::vector<std::size_t> key;
    auto recurse = [&](auto&& self, std::size_t k, std::uint32_t occupied) -> void {
        if (k == num_queries) {
            double value = 0.0;
            evaluate(value, key);
            if (!std::isfinite(value)) {
                return;
            }
            if (!found || value > best_value || (value == best_value && key < best_key)) {
                found = true;
                best_value = value;
                best_key = key;
                best = current;
            }
            return;
        }
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t e = s; e < n; ++e) {
                const std::uint32_t cells = ((std::uint32_t{1} << (e + 1)) - 1) & ~((std::uint32_t{1} << s) - 1);
                if ((cells & occupied) != 0) {
                    break; // longer intervals from s overlap too
                }
                if (!std::isfinite(logp.at(k, s, e))) {
                    continue;
                }
                current[k] = {s, e};
                self(self, k + 1, occupied | cells);
            }
        }
    };
    recurse(recurse, 0, 0);

    if (!found) {
        throw InfeasibleError("no finite non-overlapping assignment exists");
    }
    Assignment out;
    out.method = SelectMethod::brute_force;
    out.objective = best_value;
    for (std::size_t k = 0; k < num_queries; ++k) {
        out.entries.push_back({k, best[k], logp.at(k, best[k].start, best[k].end)});
    }
    return out;
}

Assignment select(const LogProbStack& logp, SelectMethod method, const SolverConfig& config) {
    switch (method) {
    case SelectMethod::dp:
        return dp_select(logp, config);
    case SelectMethod::greedy:
        return greedy_select(logp);
    case SelectMethod::brute_force:
        return brute_force_select(logp);
    }
    throw InvalidArgument("unknown selection method");
}

} // namespace stepdp
