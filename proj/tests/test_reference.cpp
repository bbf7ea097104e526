#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tofprox/histogram.hpp"
#include "tofprox/reference.hpp"

using namespace tofprox;

namespace {

TransientHistogram spiky_frame(double ambient, double spike, std::size_t at, std::size_t bins) {
    TransientHistogram h;
    h.counts.assign(bins, ambient);
    h.counts[at] += spike;
    return h;
}

}  // namespace

TEST_CASE("identical frames give zero spread and the processed frame as mean") {
    const KdeConfig cfg;
    std::vector<TransientHistogram> frames(50, spiky_frame(5.0, 120.0, 7, 20));
    const ReferencePose pose = summarize_pose(JointState{{0.0}}, frames, cfg);
    const ProcessedHistogram expect = preprocess(frames.front(), cfg);
    REQUIRE(pose.sample_count == 50);
    REQUIRE(pose.mean == expect.values);
    for (double s : pose.spread) REQUIRE(s == 0.0);
}

TEST_CASE("mean and sample std match hand arithmetic") {
    // Raw domain keeps the values literal: bin 0 sees {0.1, 0.3}.
    std::vector<TransientHistogram> frames = {TransientHistogram{{0.1, 7.0}},
                                              TransientHistogram{{0.3, 7.0}}};
    const ReferencePose pose =
        summarize_pose(JointState{{0.0}}, frames, {}, StatsDomain::Raw);
    REQUIRE(pose.mean[0] == Catch::Approx(0.2).margin(1e-15));
    REQUIRE(pose.spread[0] == Catch::Approx(std::sqrt(0.02)).margin(1e-12));
    REQUIRE(pose.spread[1] == 0.0);
}

TEST_CASE("processed-domain statistics match a direct two-pass oracle") {
    const KdeConfig cfg;
    std::mt19937_64 rng(21);
    std::vector<TransientHistogram> frames;
    std::poisson_distribution<long> noise(40.0);
    for (int f = 0; f < 20; ++f) {
        TransientHistogram h;
        for (int i = 0; i < 30; ++i) h.counts.push_back(static_cast<double>(noise(rng)));
        h.counts[11] += 500.0;
        frames.push_back(std::move(h));
    }
    const ReferencePose pose = summarize_pose(JointState{{0.1, 0.2}}, frames, cfg);

    std::vector<std::vector<double>> processed;
    for (const auto& f : frames) processed.push_back(preprocess(f, cfg).values);
    for (std::size_t i = 0; i < 30; ++i) {
        double m = 0.0;
        for (const auto& r : processed) m += r[i];
        m /= static_cast<double>(processed.size());
        double v = 0.0;
        for (const auto& r : processed) v += (r[i] - m) * (r[i] - m);
        v = std::sqrt(v / static_cast<double>(processed.size() - 1));
        REQUIRE(pose.mean[i] == Catch::Approx(m).margin(1e-15));
        REQUIRE(pose.spread[i] == Catch::Approx(v).margin(1e-15));
    }
}

TEST_CASE("frame order does not change the statistics") {
    const KdeConfig cfg;
    std::mt19937_64 rng(22);
    std::poisson_distribution<long> noise(30.0);
    std::vector<TransientHistogram> frames;
    for (int f = 0; f < 9; ++f) {
        TransientHistogram h;
        for (int i = 0; i < 16; ++i) h.counts.push_back(static_cast<double>(noise(rng)));
        h.counts[3] += 200.0;
        frames.push_back(std::move(h));
    }
    const ReferencePose a = summarize_pose(JointState{{0.0}}, frames, cfg);
    std::reverse(frames.begin(), frames.end());
    const ReferencePose b = summarize_pose(JointState{{0.0}}, frames, cfg);
    for (std::size_t i = 0; i < 16; ++i) {
        REQUIRE(a.mean[i] == Catch::Approx(b.mean[i]).margin(1e-14));
        REQUIRE(a.spread[i] == Catch::Approx(b.spread[i]).margin(1e-14));
    }
}

TEST_CASE("degenerate frames are dropped; too few survivors is an error") {
    const KdeConfig cfg;
    std::vector<TransientHistogram> frames = {
        spiky_frame(5.0, 100.0, 2, 10), TransientHistogram{std::vector<double>(10, 4.0)},
        spiky_frame(5.0, 90.0, 2, 10)};
    const ReferencePose pose = summarize_pose(JointState{{0.0}}, frames, cfg);
    REQUIRE(pose.sample_count == 2);

    std::vector<TransientHistogram> flat(5, TransientHistogram{std::vector<double>(10, 4.0)});
    REQUIRE_THROWS_AS(summarize_pose(JointState{{0.0}}, flat, cfg), DegenerateSignal);
    REQUIRE_THROWS_AS(summarize_pose(JointState{{0.0}}, {}, cfg), std::invalid_argument);
}

TEST_CASE("grid axis counts include both endpoints for integral spans") {
    const double pi = 3.14159265358979323846;
    REQUIRE(grid_axis_count(-pi, -pi / 12.0, pi / 12.0) == 12);
    REQUIRE(grid_axis_count(-5.0 * pi / 6.0, 5.0 * pi / 12.0, pi / 12.0) == 16);
    REQUIRE(grid_axis_count(-pi / 2.0, 5.0 * pi / 12.0, pi / 12.0) == 12);
    REQUIRE(grid_axis_count(0.0, 1.0, 0.4) == 3);  // 0.0 0.4 0.8
}

TEST_CASE("the sampling lattice of the reference hardware setup has 2304 poses") {
    const double pi = 3.14159265358979323846;
    const GridSpec g = make_grid({-pi, -5.0 * pi / 6.0, -pi / 2.0},
                                 {-pi / 12.0, 5.0 * pi / 12.0, 5.0 * pi / 12.0},
                                 {pi / 12.0, pi / 12.0, pi / 12.0});
    REQUIRE(g.pose_count() == 2304);
}

TEST_CASE("pose enumeration is row-major with axis 0 slowest") {
    const GridSpec g = make_grid({0.0, 10.0}, {2.0, 11.0}, {1.0, 1.0});
    REQUIRE(g.pose_count() == 6);
    REQUIRE(g.pose_at(0) == std::vector<double>{0.0, 10.0});
    REQUIRE(g.pose_at(1) == std::vector<double>{0.0, 11.0});
    REQUIRE(g.pose_at(2) == std::vector<double>{1.0, 10.0});
    REQUIRE(g.pose_at(5) == std::vector<double>{2.0, 11.0});
}
