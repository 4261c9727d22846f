#include <doctest.h>

#include <cmath>

#include "scenefuse/placement.hpp"
#include "scenefuse/reference.hpp"
#include "scenefuse/synth.hpp"

using namespace scenefuse;

namespace {

struct SceneFixture {
    SynthScene scene;
    ToolInstance tool;

    explicit SceneFixture(std::uint64_t seed, Difficulty d = Difficulty::Displaced)
        : scene(generate(seed, d)), tool(scene_tool_instance(scene)) {}
};

}  // namespace

TEST_CASE("bbox_area of a 2D point set") {
    const std::vector<std::array<double, 2>> pts = {{0, 0}, {2, 1}, {1, 3}};
    CHECK(bbox_area(pts) == 6.0);
    const std::vector<std::array<double, 2>> one = {{5, 5}};
    CHECK(bbox_area(one) == 0.0);
    const std::vector<std::array<double, 2>> none;
    CHECK_THROWS_AS(bbox_area(none), DegenerateError);
}

TEST_CASE("solve_scale returns exactly 1 for a self-sized tool") {
    const SceneFixture fx(4);
    const PointCloud masked =
        select_points_in_mask(fx.scene.tissue, fx.scene.camera, fx.scene.mask);
    ToolInstance self;
    self.id = 1;
    self.points = masked;
    self.mask = fx.scene.mask;
    CHECK(solve_scale(self, fx.scene.tissue, masked) == 1.0);
}

TEST_CASE("solve_scale obeys the similarity scale law") {
    const SceneFixture fx(5);
    const PointCloud masked =
        select_points_in_mask(fx.scene.tissue, fx.scene.camera, fx.scene.mask);
    const double base = solve_scale(fx.tool, fx.scene.tissue, masked);
    CHECK(base > 0.0);
    for (double k : {0.25, 0.5, 2.0, 4.0}) {
        ToolInstance scaled = fx.tool;
        for (Vec3& p : scaled.points.positions) p = p * k;
        const double got = solve_scale(scaled, fx.scene.tissue, masked);
        CHECK(std::abs(got - base / k) <= 1e-6 * (base / k));
    }
}

TEST_CASE("solve_scale throws on degenerate inputs") {
    const SceneFixture fx(6);
    const PointCloud masked =
        select_points_in_mask(fx.scene.tissue, fx.scene.camera, fx.scene.mask);
    ToolInstance empty_tool;
    empty_tool.mask = fx.scene.mask;
    CHECK_THROWS_AS(solve_scale(empty_tool, fx.scene.tissue, masked), DegenerateError);
    CHECK_THROWS_AS(solve_scale(fx.tool, fx.scene.tissue, PointCloud{}), DegenerateError);
}

TEST_CASE("both scale-area modes produce positive scales") {
    const SceneFixture fx(7);
    const PointCloud masked =
        select_points_in_mask(fx.scene.tissue, fx.scene.camera, fx.scene.mask);
    CHECK(solve_scale(fx.tool, fx.scene.tissue, masked, ScaleAreaMode::OrthoPoints) > 0.0);
    CHECK(solve_scale(fx.tool, fx.scene.tissue, masked, ScaleAreaMode::ImagePlaneMask) > 0.0);
}

TEST_CASE("the ground-truth placement scores silhouette IoU 1") {
    const SceneFixture fx(8);
    SilhouetteIoU eval(fx.tool, fx.scene.true_sigma, fx.scene.camera, RasterConfig{});
    CHECK(eval.at(fx.scene.true_offset) == 1.0);
}

TEST_CASE("behind-camera candidates score 0 without throwing") {
    const SceneFixture fx(9);
    SilhouetteIoU eval(fx.tool, fx.scene.true_sigma, fx.scene.camera, RasterConfig{});
    bool any_in_front = true;
    const double v = eval.at(Vec3{0, 0, -5.0}, any_in_front);
    CHECK(v == 0.0);
    CHECK_FALSE(any_in_front);
}

TEST_CASE("optimize_position recovers a displaced tool") {
    const SceneFixture fx(10);
    SearchConfig cfg;
    cfg.initial_offset = fx.scene.true_offset + fx.scene.init_perturbation;
    cfg.initial_step = 0.048;
    cfg.min_step = 0.003;
    const PlacementResult res =
        optimize_position(fx.tool, fx.scene.true_sigma, fx.scene.camera, cfg, RasterConfig{});
    CHECK(res.sigma == fx.scene.true_sigma);
    CHECK(res.iou >= 0.95);
    CHECK(std::abs(res.offset.x - fx.scene.true_offset.x) <= 2 * cfg.min_step);
    CHECK(std::abs(res.offset.y - fx.scene.true_offset.y) <= 2 * cfg.min_step);
    CHECK(std::abs(res.offset.z - fx.scene.true_offset.z) <= 2 * cfg.min_step);
    CHECK(res.iterations > 0);
    CHECK(res.candidate_evaluations > 0);
}

TEST_CASE("optimize_position is deterministic") {
    const SceneFixture fx(11);
    SearchConfig cfg;
    cfg.initial_offset = fx.scene.true_offset + fx.scene.init_perturbation;
    const PlacementResult a =
        optimize_position(fx.tool, fx.scene.true_sigma, fx.scene.camera, cfg, RasterConfig{});
    const PlacementResult b =
        optimize_position(fx.tool, fx.scene.true_sigma, fx.scene.camera, cfg, RasterConfig{});
    CHECK(a.offset == b.offset);
    CHECK(a.iou == b.iou);
    CHECK(a.iterations == b.iterations);
    CHECK(a.candidate_evaluations == b.candidate_evaluations);
}

TEST_CASE("the result never scores below its initialization") {
    const SceneFixture fx(12);
    SearchConfig cfg;
    const Vec3 init = fx.scene.true_offset + Vec3{0.03, -0.02, 0.05};
    cfg.initial_offset = init;
    SilhouetteIoU eval(fx.tool, fx.scene.true_sigma, fx.scene.camera, RasterConfig{});
    const PlacementResult res =
        optimize_position(fx.tool, fx.scene.true_sigma, fx.scene.camera, cfg, RasterConfig{});
    CHECK(res.iou >= eval.at(init));
}

TEST_CASE("max_iterations 0 returns the initialization untouched") {
    const SceneFixture fx(13);
    SearchConfig cfg;
    const Vec3 init = fx.scene.true_offset + Vec3{0.01, 0.01, 0.01};
    cfg.initial_offset = init;
    cfg.max_iterations = 0;
    const PlacementResult res =
        optimize_position(fx.tool, fx.scene.true_sigma, fx.scene.camera, cfg, RasterConfig{});
    CHECK(res.offset == init);
    CHECK(res.iterations == 0);
    CHECK(res.candidate_evaluations == 0);
}

TEST_CASE("SearchConfig validation") {
    SearchConfig cfg;
    cfg.min_step = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = SearchConfig{};
    cfg.min_step = cfg.initial_step * 2;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = SearchConfig{};
    cfg.shrink_factor = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = SearchConfig{};
    cfg.max_iterations = -1;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("optimize_position without init uses the mask centroid and depth prior") {
    const SceneFixture fx(14);
    const PointCloud masked = select_points_in_mask(fx.scene.tissue, fx.scene.camera,
                                                    fx.scene.mask);
    SearchConfig cfg;
    cfg.depth_prior = median_depth(masked);
    const PlacementResult res =
        optimize_position(fx.tool, fx.scene.true_sigma, fx.scene.camera, cfg, RasterConfig{});
    CHECK(res.iou > 0.5);  // centroid init lands near enough for the descent to latch on
}

TEST_CASE("compose_scene concatenates with labels and mid-gray fill") {
    SceneFixture fx(15);
    PlacementResult res;
    res.sigma = 2.0;
    res.offset = {1.0, -1.0, 0.5};
    fx.tool.points.colors.clear();  // colorless tool against colored tissue
    const ComposedScene out = compose_scene(fx.scene.tissue, {{fx.tool, res}});

    const std::size_t nt = fx.scene.tissue.size();
    REQUIRE(out.cloud.size() == nt + fx.tool.points.size());
    REQUIRE(out.labels.size() == out.cloud.size());
    CHECK(out.labels[0] == 0);
    CHECK(out.labels[nt] == fx.tool.id);
    CHECK(out.cloud.positions[0] == fx.scene.tissue.positions[0]);
    const Vec3 expect = fx.tool.points.positions[0] * 2.0 + res.offset;
    CHECK(out.cloud.positions[nt] == expect);
    CHECK(out.cloud.colors[0] == fx.scene.tissue.colors[0]);
    CHECK(out.cloud.colors[nt] == Vec3{0.5, 0.5, 0.5});
}

TEST_CASE("compose_scene with no tools is just the tissue") {
    const SceneFixture fx(16);
    const ComposedScene out = compose_scene(fx.scene.tissue, {});
    CHECK(out.cloud.size() == fx.scene.tissue.size());
    CHECK(out.labels == std::vector<int>(fx.scene.tissue.size(), 0));
}

TEST_CASE("parallel lattice search equals the serial one and contains its center") {
    const SceneFixture fx(17);
    LatticeSpec lattice;
    lattice.center = fx.scene.true_offset;
    lattice.spacing = 0.004;
    lattice.half_extent = 3;
    const OracleResult par =
        exhaustive_search_oracle(fx.tool, fx.scene.true_sigma, fx.scene.camera, lattice,
                                 RasterConfig{});
    const OracleResult ser = reference::exhaustive_search_serial(
        fx.tool, fx.scene.true_sigma, fx.scene.camera, lattice, RasterConfig{});
    CHECK(par.offset == ser.offset);
    CHECK(par.iou == ser.iou);
    CHECK(par.evaluated == std::size_t(7 * 7 * 7));
    CHECK(par.iou == 1.0);  // the lattice contains the ground truth at its center
}

TEST_CASE("LatticeSpec validation bounds the candidate count") {
    LatticeSpec lattice;
    lattice.spacing = 0.0;
    lattice.half_extent = 1;
    CHECK_THROWS_AS(lattice.validate(), InvalidArgument);
    lattice.spacing = 0.01;
    lattice.half_extent = 11;
    CHECK_THROWS_AS(lattice.validate(), InvalidArgument);
    lattice.half_extent = -1;
    CHECK_THROWS_AS(lattice.validate(), InvalidArgument);
}
