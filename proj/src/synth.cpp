#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "scenefuse/geometry.hpp"
#include "scenefuse/io.hpp"
#include "scenefuse/synth.hpp"

namespace scenefuse {
namespace {

constexpr int kWidth = 192, kHeight = 160;
constexpr double kFocal = 210.0;
constexpr double kDepthScale = 5e-5;  // 16-bit ceiling 3.27 scene units

constexpr double kTau = 2.0 * std::numbers::pi;

// Smooth tissue height field and palette, evaluated at real-valued pixel
// coordinates so the anchor depth and the per-pixel depth map agree.
struct TissueField {
    double z0, amp1, amp2, ku, kv, ph1, ph2, tilt_u, tilt_v;
    double cr, cg, cb, pr, pg, pb;

    explicit TissueField(SplitMix64& rng) {
        z0 = rng.uniform(0.95, 1.05);
        amp1 = rng.uniform(0.02, 0.05);
        amp2 = rng.uniform(0.008, 0.02);
        ku = rng.uniform(1.0, 2.5);
        kv = rng.uniform(1.0, 2.5);
        ph1 = rng.uniform(0.0, kTau);
        ph2 = rng.uniform(0.0, kTau);
        tilt_u = rng.uniform(-0.05, 0.05);
        tilt_v = rng.uniform(-0.05, 0.05);
        cr = rng.uniform(0.5, 2.0);
        cg = rng.uniform(0.5, 2.0);
        cb = rng.uniform(0.5, 2.0);
        pr = rng.uniform(0.0, kTau);
        pg = rng.uniform(0.0, kTau);
        pb = rng.uniform(0.0, kTau);
    }

    double depth(double u, double v) const {
        return z0 + tilt_u * (u / kWidth - 0.5) + tilt_v * (v / kHeight - 0.5) +
               amp1 * std::sin(kTau * ku * u / kWidth + ph1) *
                   std::cos(kTau * kv * v / kHeight + ph2) +
               amp2 * std::sin(kTau * (u + v) / (kWidth + kHeight));
    }

    Vec3 color(double u, double v) const {
        return {0.55 + 0.18 * std::sin(kTau * cr * u / kWidth + pr),
                0.30 + 0.10 * std::sin(kTau * cg * v / kHeight + pg),
                0.32 + 0.10 * std::sin(kTau * cb * (u + v) / (kWidth + kHeight) + pb)};
    }
};

Mat3 rotation_x(double a) {
    Mat3 r = Mat3::identity();
    r.m[1][1] = std::cos(a);
    r.m[1][2] = -std::sin(a);
    r.m[2][1] = std::sin(a);
    r.m[2][2] = std::cos(a);
    return r;
}

Mat3 rotation_y(double a) {
    Mat3 r = Mat3::identity();
    r.m[0][0] = std::cos(a);
    r.m[0][2] = std::sin(a);
    r.m[2][0] = -std::sin(a);
    r.m[2][2] = std::cos(a);
    return r;
}

Mat3 rotation_z(double a) {
    Mat3 r = Mat3::identity();
    r.m[0][0] = std::cos(a);
    r.m[0][1] = -std::sin(a);
    r.m[1][0] = std::sin(a);
    r.m[1][1] = std::cos(a);
    return r;
}

// Capped cylinder shaft plus a tapered wedge jaw, axis along +x, roughly
// [-1,1] model extent, with a seeded rotation baked into the vertices.
TriangleMesh make_tool(SplitMix64& rng) {
    // Shaft radius sets the silhouette's narrow extent, and with it how
    // sharply IoU drops per pixel of lateral misalignment. Keep it wide
    // enough that millimeter-scale placement errors stay above IoU 0.95.
    const double r0 = rng.uniform(0.26, 0.34);
    const double x_jaw = rng.uniform(0.25, 0.45);
    const double jaw_w = r0 * rng.uniform(1.2, 1.6);
    const double jaw_t = rng.uniform(0.06, 0.12);
    const double roll = rng.uniform(0.0, kTau);
    const double yaw = rng.uniform(-0.45, 0.45);
    const double pitch = rng.uniform(-0.45, 0.45);

    TriangleMesh mesh;
    // Dense enough that the vertices alone cover the silhouette when splatted.
    constexpr int kSeg = 28;       // samples around the shaft
    constexpr int kStations = 24;  // shaft stations from x=-1 to x=x_jaw
    constexpr int kWt = 12;        // wedge stations from x=x_jaw to x=1
    constexpr int kWy = 10;        // wedge samples across the width
    constexpr int kWz = 3;         // wedge samples across the thickness

    // Shaft: kStations rings of kSeg vertices, ring s starts at s*kSeg.
    for (int s = 0; s < kStations; ++s) {
        const double x = -1.0 + (x_jaw + 1.0) * s / (kStations - 1);
        for (int k = 0; k < kSeg; ++k) {
            const double th = kTau * k / kSeg;
            mesh.vertices.push_back({x, r0 * std::cos(th), r0 * std::sin(th)});
        }
    }
    for (int s = 0; s + 1 < kStations; ++s)
        for (int k = 0; k < kSeg; ++k) {
            const int k1 = (k + 1) % kSeg;
            const int a = s * kSeg;
            mesh.faces.push_back({a + k, a + k1, a + kSeg + k1});
            mesh.faces.push_back({a + k, a + kSeg + k1, a + kSeg + k});
        }
    const int back_center = int(mesh.vertices.size());
    mesh.vertices.push_back({-1.0, 0.0, 0.0});
    const int front_center = int(mesh.vertices.size());
    mesh.vertices.push_back({x_jaw, 0.0, 0.0});
    const int last_ring = (kStations - 1) * kSeg;
    for (int k = 0; k < kSeg; ++k) {
        const int k1 = (k + 1) % kSeg;
        mesh.faces.push_back({back_center, k1, k});
        mesh.faces.push_back({front_center, last_ring + k, last_ring + k1});
    }

    // Wedge: square base at x_jaw tapering to a thin blade at x=1. Each of the
    // six box faces is a grid over the tapered section
    //   x(t) = lerp(x_jaw, 1, t), half-width lerp(r0, jaw_w, t),
    //   half-thickness lerp(r0, jaw_t, t).
    const auto sect_x = [&](double t) { return x_jaw + (1.0 - x_jaw) * t; };
    const auto sect_y = [&](double t) { return r0 + (jaw_w - r0) * t; };
    const auto sect_z = [&](double t) { return r0 + (jaw_t - r0) * t; };
    const auto add_grid = [&mesh](int na, int nb, auto&& point) {
        const int base = int(mesh.vertices.size());
        for (int a = 0; a < na; ++a)
            for (int b = 0; b < nb; ++b)
                mesh.vertices.push_back(point(a / double(na - 1), b / double(nb - 1)));
        for (int a = 0; a + 1 < na; ++a)
            for (int b = 0; b + 1 < nb; ++b) {
                const int v = base + a * nb + b;
                mesh.faces.push_back({v, v + 1, v + nb + 1});
                mesh.faces.push_back({v, v + nb + 1, v + nb});
            }
    };
    for (double sy : {-1.0, 1.0})
        add_grid(kWt, kWz, [&](double t, double w) {
            return Vec3{sect_x(t), sy * sect_y(t), (2.0 * w - 1.0) * sect_z(t)};
        });
    for (double sz : {-1.0, 1.0})
        add_grid(kWt, kWy, [&](double t, double w) {
            return Vec3{sect_x(t), (2.0 * w - 1.0) * sect_y(t), sz * sect_z(t)};
        });
    add_grid(kWy, kWz, [&](double a, double b) {
        return Vec3{x_jaw, (2.0 * a - 1.0) * r0, (2.0 * b - 1.0) * r0};
    });
    add_grid(kWy, kWz, [&](double a, double b) {
        return Vec3{1.0, (2.0 * a - 1.0) * jaw_w, (2.0 * b - 1.0) * jaw_t};
    });

    const Mat3 rot = rotation_z(pitch) * rotation_y(yaw) * rotation_x(roll);
    for (Vec3& v : mesh.vertices) v = rot * v;
    return mesh;
}

Vec3 mesh_centroid(const TriangleMesh& mesh) {
    Vec3 c;
    for (const Vec3& v : mesh.vertices) c += v;
    return c / double(mesh.vertices.size());
}

BinaryMask silhouette_of_placement(const TriangleMesh& tool, double sigma, const Vec3& offset,
                                   const Camera& cam) {
    PointCloud placed;
    placed.positions.reserve(tool.vertices.size());
    for (const Vec3& v : tool.vertices) placed.positions.push_back(v * sigma + offset);
    const Projection proj = perspective_project(placed, cam, RigidTransform::identity());
    return rasterize_silhouette(proj, cam, RasterConfig{}, &tool.faces);
}

}  // namespace

Difficulty difficulty_from_string(const std::string& s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "displaced") return Difficulty::Displaced;
    if (s == "occluded") return Difficulty::Occluded;
    throw InvalidArgument("unknown difficulty '" + s + "' (easy, displaced, occluded)");
}

std::string to_string(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Displaced: return "displaced";
        case Difficulty::Occluded: return "occluded";
    }
    return "easy";
}

SynthScene generate(std::uint64_t seed, Difficulty difficulty) {
    SplitMix64 rng(seed);
    const Camera cam(kFocal, kFocal, (kWidth - 1) / 2.0, (kHeight - 1) / 2.0, kWidth, kHeight);
    const TissueField field(rng);

    SynthScene scene(cam);
    scene.rng_seed = seed;
    scene.difficulty = difficulty;
    scene.depth_scale = kDepthScale;

    scene.depth = DepthMap(kWidth, kHeight);
    scene.image = ImageRGB(kWidth, kHeight);
    scene.tissue.positions.reserve(std::size_t(kWidth) * kHeight);
    scene.tissue.colors.reserve(std::size_t(kWidth) * kHeight);
    for (int y = 0; y < kHeight; ++y)
        for (int x = 0; x < kWidth; ++x) {
            const double d = field.depth(x, y);
            scene.depth.at(x, y) = d;
            scene.tissue.positions.push_back(cam.lift(x, y, d));
            scene.tissue.colors.push_back(field.color(x, y));
            scene.image.set(x, y, field.color(x, y));
        }

    Vec3 lo = scene.tissue.positions[0], hi = lo;
    for (const Vec3& p : scene.tissue.positions)
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    scene.tissue_diag = norm(hi - lo);

    scene.tool = make_tool(rng);
    // Silhouette length drives how visible a depth error is (the tip moves
    // length_px * dz / z pixels); sigma is kept large enough that depth
    // converges to a few millimeters.
    scene.true_sigma = rng.uniform(0.145, 0.20);
    const Vec3 centroid = mesh_centroid(scene.tool);

    double ua = 0.0, va = 0.0;
    if (difficulty == Difficulty::Occluded) {
        switch (rng.next() % 4) {
            case 0:
                ua = -rng.uniform(4.0, 12.0);
                va = cam.cy() + rng.uniform(-20.0, 20.0);
                break;
            case 1:
                ua = kWidth - 1 + rng.uniform(4.0, 12.0);
                va = cam.cy() + rng.uniform(-20.0, 20.0);
                break;
            case 2:
                ua = cam.cx() + rng.uniform(-24.0, 24.0);
                va = -rng.uniform(4.0, 10.0);
                break;
            default:
                ua = cam.cx() + rng.uniform(-24.0, 24.0);
                va = kHeight - 1 + rng.uniform(4.0, 10.0);
                break;
        }
    } else {
        // A near-center anchor keeps depth steps from doubling as lateral
        // silhouette shifts, which would put the IoU optimum at the bottom
        // of a diagonal valley no axis-aligned search resolves well.
        ua = cam.cx() + rng.uniform(-8.0, 8.0);
        va = cam.cy() + rng.uniform(-6.0, 6.0);
    }
    const double clearance = rng.uniform(0.12, 0.20);

    // The anchor is pulled toward the frame until the silhouette is usable;
    // occluded anchors stay just outside so part of the tool stays off-frame.
    const std::size_t min_pixels = difficulty == Difficulty::Occluded ? 12 : 25;
    for (int attempt = 0;; ++attempt) {
        const double z_a = field.depth(ua, va) - clearance;
        scene.true_offset = cam.lift(ua, va, z_a) - centroid * scene.true_sigma;
        scene.mask = silhouette_of_placement(scene.tool, scene.true_sigma, scene.true_offset, cam);
        if (scene.mask.count_set() >= min_pixels) break;
        if (attempt >= 8) throw Error("synth: could not place the tool in frame");
        if (difficulty == Difficulty::Occluded) {
            ua = std::clamp(ua, -4.0, kWidth + 3.0);
            va = std::clamp(va, -4.0, kHeight + 3.0);
        } else {
            ua = 0.75 * ua + 0.25 * cam.cx();
            va = 0.75 * va + 0.25 * cam.cy();
        }
    }

    if (difficulty != Difficulty::Easy) {
        const double reach = 0.055 * scene.tissue_diag;
        scene.init_perturbation = {rng.uniform(-reach, reach), rng.uniform(-reach, reach),
                                   rng.uniform(-reach, reach)};
    }

    // Paint the tool over the image: flat-ish gray with a gradient across the
    // mask bounding box so rendered-versus-observed PSNR stays finite.
    int ub0 = kWidth, ub1 = -1, vb0 = kHeight, vb1 = -1;
    for (int y = 0; y < kHeight; ++y)
        for (int x = 0; x < kWidth; ++x)
            if (scene.mask.at(x, y)) {
                ub0 = std::min(ub0, x);
                ub1 = std::max(ub1, x);
                vb0 = std::min(vb0, y);
                vb1 = std::max(vb1, y);
            }
    for (int y = 0; y < kHeight; ++y)
        for (int x = 0; x < kWidth; ++x) {
            if (!scene.mask.at(x, y)) continue;
            const double fu = double(x - ub0) / std::max(1, ub1 - ub0);
            const double fv = double(y - vb0) / std::max(1, vb1 - vb0);
            const double g = 0.42 + 0.18 * fu + 0.05 * fv;
            scene.image.set(x, y, {std::clamp(g, 0.0, 1.0), std::clamp(g * 0.95, 0.0, 1.0),
                                   std::clamp(g * 1.05, 0.0, 1.0)});
        }

    return scene;
}

ToolInstance scene_tool_instance(const SynthScene& scene) {
    ToolInstance tool;
    tool.id = 1;
    tool.points.positions = scene.tool.vertices;
    tool.faces = scene.tool.faces;
    tool.mask = scene.mask;
    return tool;
}

void write_scene_dir(const SynthScene& scene, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    CameraConfig cam_cfg;
    cam_cfg.fx = scene.camera.fx();
    cam_cfg.fy = scene.camera.fy();
    cam_cfg.cx = scene.camera.cx();
    cam_cfg.cy = scene.camera.cy();
    cam_cfg.width = scene.camera.width();
    cam_cfg.height = scene.camera.height();
    cam_cfg.depth_scale = scene.depth_scale;
    write_camera(dir / "camera.json", cam_cfg);

    write_image(dir / "image.png", scene.image);
    write_depth(dir / "depth.png", scene.depth, scene.depth_scale);
    write_label_masks(dir / "mask.png", {{1, scene.mask}});
    write_pointcloud(dir / "tissue.ply", scene.tissue);
    write_obj(dir / "tool.obj", scene.tool);

    nlohmann::json truth;
    truth["schema_version"] = 1;
    truth["seed"] = scene.rng_seed;
    truth["difficulty"] = to_string(scene.difficulty);
    truth["label"] = 1;
    truth["true_sigma"] = scene.true_sigma;
    truth["true_offset"] = {scene.true_offset.x, scene.true_offset.y, scene.true_offset.z};
    truth["init_perturbation"] = {scene.init_perturbation.x, scene.init_perturbation.y,
                                  scene.init_perturbation.z};
    truth["tissue_diag"] = scene.tissue_diag;
    atomic_write_bytes(dir / "truth.json", truth.dump(2) + "\n");
}

void LatticeSpec::validate() const {
    if (!(spacing > 0.0)) throw InvalidArgument("LatticeSpec: spacing must be > 0");
    if (half_extent < 0 || 2 * half_extent + 1 > 21)
        throw InvalidArgument("LatticeSpec: lattice exceeds 21^3 candidates");
}

OracleResult exhaustive_search_oracle(const ToolInstance& tool, double sigma, const Camera& cam,
                                      const LatticeSpec& lattice, const RasterConfig& raster_cfg) {
    lattice.validate();
    const int n = 2 * lattice.half_extent + 1;
    const long long total = (long long)n * n * n;

    struct Best {
        double iou = -1.0;
        Vec3 offset;
    };
    // Strict total order: higher IoU first, then lexicographically smaller
    // offset. Unique per candidate, so the parallel merge is deterministic.
    const auto better = [](const Best& a, const Best& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.offset.x != b.offset.x) return a.offset.x < b.offset.x;
        if (a.offset.y != b.offset.y) return a.offset.y < b.offset.y;
        return a.offset.z < b.offset.z;
    };

    Best global;
#pragma omp parallel
    {
        SilhouetteIoU eval(tool, sigma, cam, raster_cfg);
        Best local;
#pragma omp for schedule(static) nowait
        for (long long idx = 0; idx < total; ++idx) {
            const int ix = int(idx / (n * n)) - lattice.half_extent;
            const int iy = int((idx / n) % n) - lattice.half_extent;
            const int iz = int(idx % n) - lattice.half_extent;
            const Vec3 off = lattice.center + Vec3{ix * lattice.spacing, iy * lattice.spacing,
                                                   iz * lattice.spacing};
            const Best cand{eval.at(off), off};
            if (better(cand, local)) local = cand;
        }
#pragma omp critical
        {
            if (better(local, global)) global = local;
        }
    }
    return {global.offset, global.iou, std::size_t(total)};
}

}  // namespace scenefuse
