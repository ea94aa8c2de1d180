#include <cmath>
#include <random>

#include "doctest.h"
#include "stepdp/core.hpp"

using namespace stepdp;

TEST_CASE("interval_iou examples") {
    CHECK(interval_iou({3, 6}, {3, 6}) == 1.0);
    CHECK(interval_iou({0, 1}, {2, 5}) == 0.0);
    // intersection {2,3}, union {0..5}
    CHECK(interval_iou({0, 3}, {2, 5}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(interval_iou({0, 0}, {0, 9}) == doctest::Approx(0.1));
}

TEST_CASE("intervals_overlap examples") {
    CHECK_FALSE(intervals_overlap({0, 2}, {3, 5}));
    CHECK(intervals_overlap({0, 2}, {2, 5}));
    CHECK(intervals_overlap({1, 1}, {1, 1}));
    CHECK(intervals_overlap({0, 9}, {4, 4}));
}

TEST_CASE("iou and overlap properties over random intervals") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> clip(0, 20);
    auto draw = [&] {
        std::size_t a = clip(rng);
        std::size_t b = clip(rng);
        return ClipInterval{std::min(a, b), std::max(a, b)};
    };
    for (int i = 0; i < 5000; ++i) {
        const auto a = draw();
        const auto b = draw();
        const double ab = interval_iou(a, b);
        CHECK(ab == interval_iou(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK((ab == 1.0) == (a == b));
        CHECK(intervals_overlap(a, b) == (ab > 0.0));
    }
}

TEST_CASE("pairwise_disjoint") {
    const std::vector<ClipInterval> ok{{4, 6}, {0, 1}, {2, 3}};
    const std::vector<ClipInterval> touching{{0, 2}, {2, 3}};
    CHECK(pairwise_disjoint(ok));
    CHECK_FALSE(pairwise_disjoint(touching));
    CHECK(pairwise_disjoint(std::vector<ClipInterval>{}));
}

TEST_CASE("score map masks the lower triangle") {
    ScoreMap map(3, 0.5);
    CHECK(map.valid(0, 2));
    CHECK(map.masked(2, 0));
    CHECK(std::isnan(map.at(2, 0)));
    CHECK(map.at(1, 1) == 0.5);
    CHECK_THROWS_AS(map.set(2, 1, 1.0), InvalidArgument);

    std::size_t visited = 0;
    map.for_each_valid([&](std::size_t s, std::size_t e, double v) {
        CHECK(s <= e);
        CHECK_FALSE(std::isnan(v));
        ++visited;
    });
    CHECK(visited == num_valid_cells(3));
}

TEST_CASE("score map from dense input") {
    std::vector<double> dense{1, 2, 3, 99, 5, 6, 99, 99, 9};
    const auto map = ScoreMap::from_dense(3, dense);
    CHECK(map.at(0, 2) == 3);
    CHECK(std::isnan(map.at(1, 0)));
    dense[4] = std::nan("");
    CHECK_THROWS_AS(ScoreMap::from_dense(3, dense), InvalidArgument);
    CHECK_THROWS_AS(ScoreMap::from_dense(2, dense), InvalidArgument);
}

TEST_CASE("feature map validation") {
    std::vector<double> values(2 * 2 * 3, 1.0);
    values[(1 * 2 + 0) * 3] = std::nan(""); // lower triangle, never read
    const TemporalFeatureMap fm(2, 3, values);
    CHECK(fm.cell(0, 1).size() == 3);
    values[(0 * 2 + 1) * 3] = INFINITY;
    CHECK_THROWS_AS(TemporalFeatureMap(2, 3, values), InvalidArgument);
    CHECK_THROWS_AS(TemporalFeatureMap(2, 3, std::vector<double>(5)), InvalidArgument);
}

TEST_CASE("score stack validation") {
    ScoreStack stack;
    stack.video_id = "v";
    CHECK_THROWS_AS(stack.validate(), InvalidArgument);
    stack.maps = {ScoreMap(4), ScoreMap(5)};
    CHECK_THROWS_AS(stack.validate(), InvalidArgument);
    stack.maps = {ScoreMap(4), ScoreMap(4)};
    CHECK_NOTHROW(stack.validate());
}

TEST_CASE("check_assignment") {
    Assignment a;
    a.video_id = "v";
    a.entries = {{0, {0, 1}, -0.5}, {1, {2, 3}, -0.25}};
    a.objective = -0.75;
    CHECK_NOTHROW(check_assignment(a, 2, 4));
    CHECK_THROWS_AS(check_assignment(a, 3, 4), InvariantError);
    CHECK_THROWS_AS(check_assignment(a, 2, 3), InvariantError);

    auto wrong_sum = a;
    wrong_sum.objective = -0.7;
    CHECK_THROWS_AS(check_assignment(wrong_sum, 2, 4), InvariantError);

    auto overlapping = a;
    overlapping.entries[1].interval = {1, 3};
    CHECK_THROWS_AS(check_assignment(overlapping, 2, 4), InvariantError);
    overlapping.method = SelectMethod::greedy;
    CHECK_NOTHROW(check_assignment(overlapping, 2, 4));
    overlapping.method = SelectMethod::dp;
    overlapping.fallback_used = true;
    CHECK_NOTHROW(check_assignment(overlapping, 2, 4));
}

TEST_CASE("select method names") {
    CHECK(parse_select_method("dp") == SelectMethod::dp);
    CHECK(parse_select_method("brute") == SelectMethod::brute_force);
    CHECK(to_string(SelectMethod::greedy) == "greedy");
    CHECK_THROWS_AS(parse_select_method("beam"), InvalidArgument);
}
