#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tofprox/simulator.hpp"

using namespace tofprox;

TEST_CASE("empty scene with no ambient renders to zero") {
    SensorSpec spec;
    spec.bin_count = 32;
    const auto expected = render_expected({}, spec);
    for (double v : expected) REQUIRE(v == 0.0);
}

TEST_CASE("a single patch peaks at its distance-equivalent bin") {
    SensorSpec spec;
    spec.bin_count = 80;
    const ScenePatch patch{0.3723, 1.0, PatchLabel::Object};
    const auto expected = render_expected({patch}, spec);
    const auto it = std::max_element(expected.begin(), expected.end());
    REQUIRE(std::distance(expected.begin(), it) == 40);
}

TEST_CASE("range consistency holds across the sensor span") {
    SensorSpec spec;
    spec.bin_count = 80;
    for (double r : {0.05, 0.1, 0.2, 0.3, 0.45, 0.6, 0.8}) {
        const auto expected = render_expected({{r, 1.0, PatchLabel::Object}}, spec);
        const long peak =
            std::distance(expected.begin(), std::max_element(expected.begin(), expected.end()));
        const long want = std::lround(spec.distance_to_bin(r));
        REQUIRE(std::abs(peak - want) <= 1);
    }
}

TEST_CASE("ambient-only scene is a constant") {
    SensorSpec spec;
    spec.bin_count = 16;
    spec.ambient_rate = 12.5;
    const auto expected = render_expected({}, spec);
    for (double v : expected) REQUIRE(v == 12.5);
}

TEST_CASE("adding a patch never decreases any expected bin") {
    SensorSpec spec;
    spec.bin_count = 64;
    spec.ambient_rate = 2.0;
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> rd(0.0, 0.9), ad(0.0, 2.0);
    std::vector<ScenePatch> patches;
    auto last = render_expected(patches, spec);
    for (int k = 0; k < 12; ++k) {
        patches.push_back({rd(rng), ad(rng), PatchLabel::Object});
        const auto cur = render_expected(patches, spec);
        for (std::size_t i = 0; i < cur.size(); ++i) REQUIRE(cur[i] >= last[i] - 1e-12);
        last = cur;
    }
}

TEST_CASE("sampling zero expectation yields zero counts") {
    const auto h = sample_frame(std::vector<double>(10, 0.0), 1);
    for (double c : h.counts) REQUIRE(c == 0.0);
}

TEST_CASE("Poisson sampling has matching mean and variance") {
    const std::vector<double> expected(4, 1000.0);
    std::mt19937_64 rng(52);
    const int n = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto h = sample_frame(expected, rng);
        for (double c : h.counts) {
            sum += c;
            sumsq += c * c;
        }
    }
    const double count = static_cast<double>(n) * 4.0;
    const double mean = sum / count;
    const double var = sumsq / count - mean * mean;
    REQUIRE(std::abs(mean - 1000.0) <= 3.0 * std::sqrt(1000.0 / count));
    REQUIRE(std::abs(var - 1000.0) <= 5.0 * std::sqrt(2.0) * 1000.0 / std::sqrt(count));
}

TEST_CASE("sampling is deterministic per seed") {
    const std::vector<double> expected = {5.0, 100.0, 0.0, 77.0};
    REQUIRE(sample_frame(expected, 99).counts == sample_frame(expected, 99).counts);
    REQUIRE(sample_frame(expected, 99).counts != sample_frame(expected, 100).counts);
}

TEST_CASE("negative expectations are rejected") {
    REQUIRE_THROWS_AS(sample_frame(std::vector<double>{-1.0}, 1), std::invalid_argument);
}

TEST_CASE("arm surfaces move continuously with the joint state") {
    SensorSpec spec;
    spec.bin_count = 80;
    const SimArm arm = SimArm::standard(3);
    const double step = 1e-4;
    for (double q0 : {-1.0, 0.0, 0.7}) {
        const JointState a{{q0, 0.3, -0.2}};
        const JointState b{{q0 + step, 0.3, -0.2}};
        const auto pa = arm.surface(a, spec);
        const auto pb = arm.surface(b, spec);
        REQUIRE(pa.size() == pb.size());
        for (std::size_t i = 0; i < pa.size(); ++i)
            REQUIRE(std::abs(pa[i].distance - pb[i].distance) < 10.0 * step);
    }
}

TEST_CASE("reference generation bookkeeping") {
    SensorSpec spec;
    spec.bin_count = 40;
    spec.ambient_rate = 3.0;
    const SimArm arm = SimArm::standard(1);
    const GridSpec grid = make_grid({-0.4}, {0.4}, {0.2});
    REQUIRE(grid.pose_count() == 5);
    const auto ds = generate_reference(arm, grid, 50, spec, KdeConfig{}, 61);
    REQUIRE(ds.poses.size() == 5);
    for (const auto& p : ds.poses) REQUIRE(p.sample_count == 50);
    REQUIRE(ds.raw_mean_first_pose.size() == 40);
    REQUIRE(ds.grid.has_value());
    REQUIRE(ds.domain == StatsDomain::Processed);
}

TEST_CASE("grid pose counts match an independent enumeration oracle") {
    const double pi = 3.14159265358979323846;
    struct Axis {
        double lo, hi, step;
    };
    const std::vector<std::vector<Axis>> cases = {
        {{-pi, -pi / 12.0, pi / 12.0}, {-5 * pi / 6, 5 * pi / 12, pi / 12}, {-pi / 2, 5 * pi / 12, pi / 12}},
        {{-pi, -pi / 12.0, pi / 6.0}, {-5 * pi / 6, 5 * pi / 12, pi / 6}, {-pi / 2, 5 * pi / 12, pi / 6}},
        {{0.0, 1.0, 0.3}, {0.0, 2.0, 0.7}},
    };
    for (const auto& axes : cases) {
        std::vector<double> lo, hi, step;
        std::size_t oracle = 1;
        for (const auto& ax : axes) {
            lo.push_back(ax.lo);
            hi.push_back(ax.hi);
            step.push_back(ax.step);
            // Independent enumeration: walk the lattice points directly.
            std::size_t n = 0;
            for (double x = ax.lo; x <= ax.hi + 1e-9; x += ax.step) ++n;
            oracle *= n;
        }
        REQUIRE(make_grid(lo, hi, step).pose_count() == oracle);
    }
    // The dense reference lattice and its double-step version.
    REQUIRE(make_grid({-pi, -5 * pi / 6, -pi / 2}, {-pi / 12, 5 * pi / 12, 5 * pi / 12},
                      {pi / 12, pi / 12, pi / 12})
                .pose_count() == 2304);
}

TEST_CASE("labeled scenes carry their ground truth") {
    SensorSpec spec;
    spec.bin_count = 80;
    spec.ambient_rate = 2.0;
    const SimArm arm = SimArm::standard(2);
    const JointState q{{0.1, -0.3}};

    const LabeledFrame clean = generate_eval_scene(arm, q, std::nullopt, spec, 71);
    REQUIRE_FALSE(clean.has_object);

    const ObjectSpec obj{0.20, 0.004, 5, 0.75};
    const LabeledFrame labeled = generate_eval_scene(arm, q, obj, spec, 71);
    REQUIRE(labeled.has_object);
    REQUIRE(labeled.true_distance == 0.20);

    // Zero-albedo objects are invisible: same expected scene, same draws.
    const ObjectSpec ghost{0.20, 0.0, 5, 0.75};
    const LabeledFrame ghosted = generate_eval_scene(arm, q, ghost, spec, 71);
    REQUIRE(ghosted.frame.counts == clean.frame.counts);
}

TEST_CASE("object patches taper away from the leading edge") {
    SensorSpec spec;
    spec.bin_count = 80;
    const ObjectSpec obj{0.3, 0.01, 4, 0.8};
    const auto patches = obj.patches(spec);
    REQUIRE(patches.size() == 4);
    for (std::size_t i = 0; i + 1 < patches.size(); ++i) {
        REQUIRE(patches[i].distance < patches[i + 1].distance);
        REQUIRE(patches[i].effective_albedo > patches[i + 1].effective_albedo);
        REQUIRE(patches[i].label == PatchLabel::Object);
    }
}

TEST_CASE("per-pose seeds are independent of generation order") {
    SensorSpec spec;
    spec.bin_count = 24;
    spec.ambient_rate = 4.0;
    const SimArm arm = SimArm::standard(1);
    const GridSpec grid = make_grid({-0.2}, {0.2}, {0.2});
    const auto a = generate_reference(arm, grid, 5, spec, KdeConfig{}, 81);
    const auto b = generate_reference(arm, grid, 5, spec, KdeConfig{}, 81);
    for (std::size_t p = 0; p < a.poses.size(); ++p) {
        REQUIRE(a.poses[p].mean == b.poses[p].mean);
        REQUIRE(a.poses[p].spread == b.poses[p].spread);
    }
}
