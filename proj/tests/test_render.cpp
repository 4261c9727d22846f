#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "scenefuse/reference.hpp"
#include "scenefuse/render.hpp"
#include "scenefuse/synth.hpp"

using namespace scenefuse;

namespace {

Camera small_cam() { return Camera(8.0, 8.0, 3.5, 3.5, 8, 8); }

SplatSet random_splats(SplitMix64& rng, const Camera& cam, int count, bool some_behind) {
    SplatSet s;
    for (int i = 0; i < count; ++i) {
        const double z = some_behind && i % 4 == 3 ? rng.uniform(-1.0, 0.0) : rng.uniform(0.5, 3.0);
        const double u = rng.uniform(-1.0, cam.width());
        const double v = rng.uniform(-1.0, cam.height());
        s.centers.push_back(z > 0 ? cam.lift(u, v, z) : Vec3{u * 0.01, v * 0.01, z});
        s.colors.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
        s.opacities.push_back(rng.uniform(0.05, 1.0));
        s.radii.push_back(rng.uniform(0.05, 0.6));
    }
    return s;
}

double max_image_diff(const ImageRGB& a, const ImageRGB& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        m = std::max(m, std::abs(a.pixels[i] - b.pixels[i]));
    return m;
}

}  // namespace

TEST_CASE("empty splat set renders black, zero depth, zero alpha") {
    const RenderOutput out = render(SplatSet{}, small_cam(), RasterConfig{});
    CHECK(std::all_of(out.color.pixels.begin(), out.color.pixels.end(),
                      [](double v) { return v == 0.0; }));
    CHECK(std::all_of(out.depth.values.begin(), out.depth.values.end(),
                      [](double v) { return v == 0.0; }));
    CHECK(std::all_of(out.alpha.begin(), out.alpha.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("single opaque splat hits its center pixel exactly") {
    const Camera cam = small_cam();
    SplatSet s;
    s.centers = {cam.lift(3.0, 4.0, 2.0)};
    s.colors = {{0.25, 0.5, 0.75}};
    s.opacities = {1.0};
    s.radii = {0.5};
    const RenderOutput out = render(s, cam, RasterConfig{});
    // At the center pixel d=0, so alpha = opacity * exp(0) = 1.
    CHECK(out.color.get(3, 4) == Vec3{0.25, 0.5, 0.75});
    CHECK(out.depth.at(3, 4) == 2.0);
    CHECK(out.alpha[4 * 8 + 3] == 1.0);
    // Off-center within the footprint: the analytic Gaussian falloff.
    const double s_px = 0.5 * 8.0 / 2.0;  // world radius * focal / z
    const double a = std::exp(-1.0 / (2.0 * s_px * s_px));
    CHECK(out.color.get(4, 4).x == doctest::Approx(0.25 * a).epsilon(1e-12));
    CHECK(out.alpha[4 * 8 + 4] == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("footprint is truncated at cutoff * projected sigma") {
    const Camera cam = small_cam();
    SplatSet s;
    s.centers = {cam.lift(0.0, 0.0, 1.0)};
    s.colors = {{1.0, 1.0, 1.0}};
    s.opacities = {1.0};
    s.radii = {0.1};  // projected sigma = 0.8 px, cutoff 3 -> radius 2.4 px
    const RenderOutput out = render(s, cam, RasterConfig{});
    CHECK(out.alpha[0] == 1.0);
    CHECK(out.alpha[2] > 0.0);      // pixel (2,0): d=2 < 2.4
    CHECK(out.alpha[3] == 0.0);     // pixel (3,0): d=3 > 2.4
    CHECK(out.color.get(3, 0) == Vec3{0.0, 0.0, 0.0});
}

TEST_CASE("nearer opaque splat occludes a farther one") {
    const Camera cam = small_cam();
    SplatSet s;
    s.centers = {cam.lift(3.0, 3.0, 2.5), cam.lift(3.0, 3.0, 1.0)};
    s.colors = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
    s.opacities = {1.0, 1.0};
    s.radii = {0.5, 0.2};
    const RenderOutput out = render(s, cam, RasterConfig{});
    CHECK(out.color.get(3, 3) == Vec3{0.0, 1.0, 0.0});
    CHECK(out.depth.at(3, 3) == 1.0);
}

TEST_CASE("input order does not change the output") {
    SplitMix64 rng(21);
    const Camera cam = small_cam();
    SplatSet s = random_splats(rng, cam, 24, false);
    // Distinct depths, so ordering is decided by z alone.
    for (std::size_t i = 0; i < s.centers.size(); ++i) s.centers[i].z += 1e-3 * double(i);

    const RenderOutput a = render(s, cam, RasterConfig{});
    SplatSet rev;
    for (std::size_t i = s.size(); i-- > 0;) {
        rev.centers.push_back(s.centers[i]);
        rev.colors.push_back(s.colors[i]);
        rev.opacities.push_back(s.opacities[i]);
        rev.radii.push_back(s.radii[i]);
    }
    const RenderOutput b = render(rev, cam, RasterConfig{});
    CHECK(max_image_diff(a.color, b.color) == 0.0);
    CHECK(a.depth.values == b.depth.values);
    CHECK(a.alpha == b.alpha);
}

TEST_CASE("equal-depth ties fall back to input order") {
    const Camera cam = small_cam();
    SplatSet s;
    s.centers = {cam.lift(3.0, 3.0, 2.0), cam.lift(3.0, 3.0, 2.0)};
    s.colors = {{1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}};
    s.opacities = {1.0, 1.0};
    s.radii = {0.5, 0.5};
    const RenderOutput out = render(s, cam, RasterConfig{});
    CHECK(out.color.get(3, 3) == Vec3{1.0, 0.0, 0.0});  // index 0 composites first
}

TEST_CASE("alpha_epsilon stops compositing once transmittance is spent") {
    const Camera cam = small_cam();
    SplatSet s;
    s.centers = {cam.lift(3.0, 3.0, 1.0), cam.lift(3.0, 3.0, 2.0)};
    s.colors = {{1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}};
    s.opacities = {0.6, 1.0};
    s.radii = {0.5, 0.5};
    RasterConfig cfg;
    cfg.alpha_epsilon = 0.5;  // T after the first splat = 0.4 < 0.5: stop
    const RenderOutput out = render(s, cam, cfg);
    CHECK(out.color.get(3, 3) == Vec3{0.6, 0.0, 0.0});
    CHECK(out.alpha[3 * 8 + 3] == 0.6);
}

TEST_CASE("render matches the naive reference on random scenes") {
    SplitMix64 rng(33);
    RasterConfig cfg;
    cfg.alpha_epsilon = 1e-12;  // keep the early exit from truncating the comparison
    for (int trial = 0; trial < 40; ++trial) {
        const int w = 2 + int(rng.next() % 7);
        const int h = 2 + int(rng.next() % 7);
        const Camera cam(rng.uniform(4, 12), rng.uniform(4, 12), rng.uniform(0, w - 1),
                         rng.uniform(0, h - 1), w, h);
        const SplatSet s = random_splats(rng, cam, 1 + int(rng.next() % 10), true);
        const RenderOutput fast = render(s, cam, cfg);
        const RenderOutput ref = reference::render_reference(s, cam, cfg);
        CHECK(max_image_diff(fast.color, ref.color) <= 1e-9);
        for (std::size_t i = 0; i < fast.depth.values.size(); ++i) {
            CHECK(std::abs(fast.depth.values[i] - ref.depth.values[i]) <= 1e-9);
            CHECK(std::abs(fast.alpha[i] - ref.alpha[i]) <= 1e-9);
        }
    }
}

TEST_CASE("SplatSet validation names the broken invariant") {
    SplatSet s;
    s.centers = {{0, 0, 1}};
    s.colors = {{0, 0, 0}};
    s.opacities = {1.5};
    s.radii = {0.1};
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.opacities = {0.0};
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.opacities = {0.5};
    s.radii = {0.0};
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.radii = {0.1};
    s.colors.clear();
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("silhouette point mode stamps clipped discs") {
    const Camera cam = small_cam();
    PointCloud cloud;
    cloud.positions = {cam.lift(0.0, 0.0, 1.0), cam.lift(20.0, 20.0, 1.0),
                       cam.lift(4.0, 4.0, -1.0)};
    const Projection proj = perspective_project(cloud, cam, RigidTransform::identity());
    RasterConfig cfg;
    cfg.splat_px = 2;
    const BinaryMask m = rasterize_silhouette(proj, cam, cfg, nullptr);
    CHECK(m.semantics == MaskSemantics::Tool);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(2, 0) == 1);   // distance 2 <= splat_px
    CHECK(m.at(2, 2) == 0);   // distance 2.83 > splat_px
    CHECK(m.at(7, 7) == 0);   // other in-frame points: one off-frame, one behind
    CHECK(m.count_set() == 6);  // quarter disc of radius 2 clipped at the corner
}

TEST_CASE("silhouette faces mode fills triangles and skips behind-camera faces") {
    const Camera cam = small_cam();
    PointCloud cloud;
    cloud.positions = {cam.lift(1.0, 1.0, 1.0), cam.lift(6.0, 1.0, 1.0), cam.lift(1.0, 6.0, 1.0),
                       cam.lift(4.0, 4.0, -2.0)};
    const Projection proj = perspective_project(cloud, cam, RigidTransform::identity());
    const std::vector<std::array<int, 3>> faces = {{0, 1, 2}, {0, 1, 3}};
    const BinaryMask m = rasterize_silhouette(proj, cam, RasterConfig{}, &faces);
    CHECK(m.at(1, 1) == 1);
    CHECK(m.at(6, 1) == 1);
    CHECK(m.at(2, 2) == 1);   // interior
    CHECK(m.at(6, 6) == 0);   // outside the hypotenuse
    // The second face references a behind-camera vertex, so it must not fill:
    // nothing outside the first triangle is set.
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            if (x + y > 7) CHECK(m.at(x, y) == 0);
}

TEST_CASE("triangle fill matches the point-in-triangle reference") {
    SplitMix64 rng(77);
    const Camera cam(30.0, 30.0, 15.5, 11.5, 32, 24);
    for (int trial = 0; trial < 60; ++trial) {
        PointCloud cloud;
        const int nv = 3 + int(rng.next() % 9);
        for (int i = 0; i < nv; ++i)
            cloud.positions.push_back(
                {rng.uniform(-1.2, 1.2), rng.uniform(-1.0, 1.0), rng.uniform(0.5, 3.0)});
        std::vector<std::array<int, 3>> faces;
        for (int i = 0; i + 2 < nv; ++i) faces.push_back({i, i + 1, i + 2});
        const Projection proj = perspective_project(cloud, cam, RigidTransform::identity());
        const BinaryMask fast = rasterize_silhouette(proj, cam, RasterConfig{}, &faces);
        const BinaryMask ref = reference::triangle_mask_reference(proj, cam, faces);
        CHECK(fast.values == ref.values);
    }
}

TEST_CASE("degenerate (zero-area) triangles rasterize to nothing") {
    const Camera cam = small_cam();
    PointCloud cloud;
    cloud.positions = {cam.lift(1.0, 1.0, 1.0), cam.lift(5.0, 5.0, 1.0), cam.lift(3.0, 3.0, 1.0)};
    const Projection proj = perspective_project(cloud, cam, RigidTransform::identity());
    const std::vector<std::array<int, 3>> faces = {{0, 1, 2}};
    const BinaryMask m = rasterize_silhouette(proj, cam, RasterConfig{}, &faces);
    CHECK(m.count_set() == 0);
}
