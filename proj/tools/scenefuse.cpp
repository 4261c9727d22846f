// scenefuse CLI. Subcommands cover the full pipeline: synth (generate a
// ground-truth scene), backproject (RGB-D frame -> tissue cloud), opjpo
// (scale + position each masked tool), render (splat a composed cloud),
// metrics (per-region IoU/PSNR/SSIM report).
//
// Exit codes: 0 success, 1 computation failure (degenerate geometry, every
// tool failed), 2 usage or I/O failure (bad flags, unreadable files,
// malformed content, dimension mismatches).

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scenefuse/geometry.hpp"
#include "scenefuse/io.hpp"
#include "scenefuse/losses.hpp"
#include "scenefuse/metrics.hpp"
#include "scenefuse/placement.hpp"
#include "scenefuse/render.hpp"
#include "scenefuse/synth.hpp"
#include "scenefuse/types.hpp"

namespace sf = scenefuse;
using nlohmann::json;

namespace {

bool verbose() {
    static const bool on = [] {
        const char* v = std::getenv("SCENEFUSE_VERBOSE");
        return v && *v && std::string_view(v) != "0";
    }();
    return on;
}

void vlog(const std::string& msg) {
    if (verbose()) std::cerr << "[scenefuse] " << msg << "\n";
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sf::IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof()) throw sf::IoError("cannot read " + path.string());
    return std::move(buf).str();
}

json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw sf::ParseError(origin + ": " + e.what(), e.byte);
    }
}

sf::PointCloud to_camera_frame(sf::PointCloud cloud, const sf::RigidTransform& pose) {
    if (pose.is_identity()) return cloud;
    const sf::RigidTransform inv = pose.inverse();
    for (sf::Vec3& p : cloud.positions) p = inv.apply(p);
    return cloud;
}

sf::BinaryMask union_tool_mask(const std::vector<sf::LabeledMask>& masks, int width, int height) {
    sf::BinaryMask u(width, height, sf::MaskSemantics::Tool, 0);
    for (const auto& lm : masks) {
        sf::require_same_dims(lm.mask.width, lm.mask.height, width, height, "mask", "frame");
        for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] |= lm.mask.values[i];
    }
    return u;
}

// ---------------------------------------------------------------- backproject

struct BackprojectArgs {
    std::string image, depth, mask, camera, out;
    int dilate = 47;
};

int run_backproject(const BackprojectArgs& a) {
    const sf::CameraConfig cc = sf::read_camera(a.camera);
    const sf::Camera cam = cc.camera();
    const sf::ImageRGB image = sf::read_image(a.image);
    const sf::DepthMap depth = sf::read_depth(a.depth, cc.depth_scale);
    const auto masks = sf::read_label_masks(a.mask);
    const sf::BinaryMask tools = union_tool_mask(masks, cam.width(), cam.height());
    const sf::BinaryMask keep = sf::dilate_mask(tools, a.dilate).complement();
    const sf::PointCloud cloud = sf::back_project(image, depth, keep, cam, cc.pose);
    sf::write_pointcloud(a.out, cloud);
    vlog("kept " + std::to_string(keep.count_set()) + " of " +
         std::to_string(keep.values.size()) + " pixels");
    std::cout << cloud.size() << "\n";
    return 0;
}

// ---------------------------------------------------------------------- opjpo

struct OpjpoArgs {
    std::string tissue, mask, camera, config, out_placement, out_scene;
    std::vector<std::string> tools;
};

struct OpjpoConfig {
    sf::SearchConfig search;
    sf::RasterConfig raster;
    int dilate = 5;  // mask dilation before selecting tissue points for the scale solve
    sf::ScaleAreaMode mode = sf::ScaleAreaMode::OrthoPoints;
};

OpjpoConfig load_opjpo_config(const std::string& path) {
    OpjpoConfig cfg;
    if (path.empty()) return cfg;
    const json j = parse_json(slurp(path), path);
    if (!j.is_object()) throw sf::ParseError(path + ": config must be a JSON object", 0);
    if (j.value("schema_version", 1) != 1)
        throw sf::ParseError(path + ": unsupported schema_version", 0);
    cfg.dilate = j.value("dilate", cfg.dilate);
    const std::string mode = j.value("scale_area_mode", std::string("ortho_points"));
    if (mode == "ortho_points")
        cfg.mode = sf::ScaleAreaMode::OrthoPoints;
    else if (mode == "image_plane_mask")
        cfg.mode = sf::ScaleAreaMode::ImagePlaneMask;
    else
        throw sf::InvalidArgument(path + ": unknown scale_area_mode '" + mode + "'");
    if (auto it = j.find("search"); it != j.end()) {
        cfg.search.initial_step = it->value("initial_step", cfg.search.initial_step);
        cfg.search.min_step = it->value("min_step", cfg.search.min_step);
        cfg.search.shrink_factor = it->value("shrink_factor", cfg.search.shrink_factor);
        cfg.search.max_iterations = it->value("max_iterations", cfg.search.max_iterations);
        if (it->contains("depth_prior")) cfg.search.depth_prior = (*it)["depth_prior"].get<double>();
        if (it->contains("initial_offset")) {
            const auto& v = (*it)["initial_offset"];
            if (!v.is_array() || v.size() != 3)
                throw sf::ParseError(path + ": initial_offset must be [x, y, z]", 0);
            cfg.search.initial_offset =
                sf::Vec3{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
        }
    }
    if (auto it = j.find("raster"); it != j.end()) {
        cfg.raster.splat_px = it->value("splat_px", cfg.raster.splat_px);
        cfg.raster.gaussian_cutoff = it->value("gaussian_cutoff", cfg.raster.gaussian_cutoff);
        cfg.raster.alpha_epsilon = it->value("alpha_epsilon", cfg.raster.alpha_epsilon);
    }
    cfg.search.validate();
    cfg.raster.validate();
    return cfg;
}

sf::ToolInstance load_tool(const std::filesystem::path& path, int id, const sf::BinaryMask& mask) {
    sf::ToolInstance inst;
    inst.id = id;
    inst.mask = mask;
    const std::string ext = path.extension().string();
    if (ext == ".obj") {
        sf::TriangleMesh mesh = sf::read_mesh(path);
        inst.points.positions = std::move(mesh.vertices);
        inst.faces = std::move(mesh.faces);
    } else if (ext == ".ply") {
        sf::PlyData ply = sf::read_ply(path);
        inst.points = std::move(ply.cloud);
        inst.faces = std::move(ply.faces);
    } else {
        throw sf::InvalidArgument("tool geometry must be .obj or .ply: " + path.string());
    }
    return inst;
}

int run_opjpo(const OpjpoArgs& a) {
    const sf::CameraConfig cc = sf::read_camera(a.camera);
    const sf::Camera cam = cc.camera();
    const OpjpoConfig cfg = load_opjpo_config(a.config);
    const sf::PointCloud tissue = to_camera_frame(sf::read_pointcloud(a.tissue), cc.pose);
    const auto masks = sf::read_label_masks(a.mask);
    if (masks.empty()) throw sf::InvalidArgument("no tool labels in mask: " + a.mask);
    if (a.tools.size() != 1 && a.tools.size() != masks.size())
        throw sf::InvalidArgument("need one --tool per mask label (or a single shared one): " +
                                  std::to_string(masks.size()) + " labels, " +
                                  std::to_string(a.tools.size()) + " tools");

    json jtools = json::array();
    std::vector<std::pair<sf::ToolInstance, sf::PlacementResult>> placed;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const auto& lm = masks[i];
        json entry{{"id", lm.label}};
        // Per-tool isolation: one degenerate tool must not sink the others.
        try {
            sf::ToolInstance inst =
                load_tool(a.tools.size() == 1 ? a.tools[0] : a.tools[i], lm.label, lm.mask);
            const sf::BinaryMask dil =
                cfg.dilate > 1 ? sf::dilate_mask(lm.mask, cfg.dilate) : lm.mask;
            const sf::PointCloud mask_points = sf::select_points_in_mask(tissue, cam, dil);
            const double sigma = sf::solve_scale(inst, tissue, mask_points, cfg.mode);
            sf::SearchConfig sc = cfg.search;
            if (!sc.depth_prior && !sc.initial_offset)
                sc.depth_prior = sf::median_depth(mask_points);
            const sf::PlacementResult res = sf::optimize_position(inst, sigma, cam, sc, cfg.raster);
            entry["sigma"] = res.sigma;
            entry["offset"] = {res.offset.x, res.offset.y, res.offset.z};
            entry["iou"] = res.iou;
            entry["iterations"] = res.iterations;
            entry["candidate_evaluations"] = res.candidate_evaluations;
            vlog("tool " + std::to_string(lm.label) + ": sigma " + std::to_string(res.sigma) +
                 ", iou " + std::to_string(res.iou));
            placed.emplace_back(std::move(inst), res);
        } catch (const sf::Error& e) {
            entry["error"] = e.what();
            vlog("tool " + std::to_string(lm.label) + " failed: " + e.what());
        }
        jtools.push_back(std::move(entry));
    }

    const json report{{"schema_version", 1}, {"tools", std::move(jtools)}};
    sf::atomic_write_bytes(a.out_placement, report.dump(2) + "\n");
    if (!a.out_scene.empty()) {
        sf::ComposedScene scene = sf::compose_scene(tissue, placed);
        if (!cc.pose.is_identity())
            for (sf::Vec3& p : scene.cloud.positions) p = cc.pose.apply(p);
        sf::write_pointcloud(a.out_scene, scene.cloud, sf::PlyFormat::BinaryLittleEndian,
                             &scene.labels);
    }
    return placed.empty() ? 1 : 0;
}

// ---------------------------------------------------------------------- render

struct RenderArgs {
    std::string scene, camera, out_color, out_depth;
    double splat_radius = 0.0;  // world units; 0 = auto from each splat's depth
    double opacity = 0.9;
};

int run_render(const RenderArgs& a) {
    const sf::CameraConfig cc = sf::read_camera(a.camera);
    const sf::Camera cam = cc.camera();
    sf::PointCloud cloud = to_camera_frame(sf::read_ply(a.scene).cloud, cc.pose);

    sf::SplatSet splats;
    const std::size_t n = cloud.positions.size();
    const bool colored = cloud.has_colors();
    splats.centers = std::move(cloud.positions);
    splats.colors =
        colored ? std::move(cloud.colors) : std::vector<sf::Vec3>(n, sf::Vec3{0.5, 0.5, 0.5});
    splats.opacities.assign(n, a.opacity);
    if (a.splat_radius > 0.0) {
        splats.radii.assign(n, a.splat_radius);
    } else {
        // Auto: ~1.4 px projected sigma at each splat's own depth, so coverage
        // is uniform across the depth range. Behind-camera splats are culled
        // by the renderer; they only need a positive placeholder.
        constexpr double kAutoPx = 1.4;
        const double focal = (cam.fx() + cam.fy()) / 2.0;
        splats.radii.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = splats.centers[i].z;
            splats.radii[i] = z > 0.0 ? kAutoPx * z / focal : 1e-9;
        }
    }

    sf::RenderOutput out = sf::render(splats, cam, sf::RasterConfig{});
    for (double& v : out.color.pixels) v = std::clamp(v, 0.0, 1.0);
    sf::write_image(a.out_color, out.color);
    sf::write_depth(a.out_depth, out.depth, cc.depth_scale);
    vlog("rendered " + std::to_string(n) + " splats");
    return 0;
}

// --------------------------------------------------------------------- metrics

struct MetricsArgs {
    std::string rendered, reference, mask, report, placement;
};

int run_metrics(const MetricsArgs& a) {
    const sf::ImageRGB rendered = sf::read_image(a.rendered);
    const sf::ImageRGB reference = sf::read_image(a.reference);
    sf::require_same_dims(rendered.width, rendered.height, reference.width, reference.height,
                          "rendered", "reference");
    const auto masks = sf::read_label_masks(a.mask);
    const sf::BinaryMask tools = union_tool_mask(masks, rendered.width, rendered.height);

    std::map<int, double> placement_iou;
    if (!a.placement.empty()) {
        const json pj = parse_json(slurp(a.placement), a.placement);
        for (const auto& t : pj.value("tools", json::array()))
            if (t.contains("id") && t.contains("iou"))
                placement_iou[t["id"].get<int>()] = t["iou"].get<double>();
    }

    json regions = json::array();
    const auto add_region = [&](const std::string& label, const sf::BinaryMask& keep,
                                std::optional<double> iou_value) {
        json r{{"label", label}};
        if (iou_value) r["iou"] = *iou_value;
        try {
            const double p = sf::psnr(rendered, reference, keep);
            r["psnr"] = std::isinf(p) ? json("inf") : json(p);
            r["ssim"] = sf::ssim(rendered, reference, keep);
        } catch (const sf::DegenerateError& e) {
            // Region too small (or empty) for the metric; report it, keep going.
            r["error"] = e.what();
        }
        regions.push_back(std::move(r));
    };

    add_region("tissue", tools.complement(), std::nullopt);
    for (const auto& lm : masks) {
        std::optional<double> iou_value;
        if (auto it = placement_iou.find(lm.label); it != placement_iou.end())
            iou_value = it->second;
        add_region(std::to_string(lm.label), lm.mask.with_semantics(sf::MaskSemantics::Keep),
                   iou_value);
    }

    const json rep{{"schema_version", 1}, {"regions", std::move(regions)}};
    sf::atomic_write_bytes(a.report, rep.dump(2) + "\n");
    return 0;
}

// ----------------------------------------------------------------------- synth

struct SynthArgs {
    std::uint64_t seed = 0;
    std::string difficulty = "easy";
    std::string out_dir;
};

int run_synth(const SynthArgs& a) {
    const sf::SynthScene scene = sf::generate(a.seed, sf::difficulty_from_string(a.difficulty));
    sf::write_scene_dir(scene, a.out_dir);
    vlog("wrote scene (seed " + std::to_string(a.seed) + ", " + a.difficulty + ") to " +
         a.out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fuse surgical-tool geometry into tissue point clouds and evaluate the result"};
    app.require_subcommand(1);

    BackprojectArgs bp;
    auto* bp_cmd = app.add_subcommand(
        "backproject", "Back-project an RGB-D frame into a tissue cloud, dropping dilated tool pixels");
    bp_cmd->add_option("--image", bp.image, "RGB PNG")->required();
    bp_cmd->add_option("--depth", bp.depth, "16-bit depth PNG")->required();
    bp_cmd->add_option("--mask", bp.mask, "tool label PNG")->required();
    bp_cmd->add_option("--camera", bp.camera, "camera JSON")->required();
    bp_cmd->add_option("--out", bp.out, "output PLY")->required();
    bp_cmd->add_option("--dilate", bp.dilate, "odd dilation kernel width")->capture_default_str();

    OpjpoArgs op;
    auto* op_cmd = app.add_subcommand(
        "opjpo", "Solve each masked tool's scale, then refine its position by silhouette IoU");
    op_cmd->add_option("--tissue", op.tissue, "tissue PLY")->required();
    op_cmd->add_option("--tool", op.tools, "tool geometry (.obj or .ply); one per label or one shared")
        ->required();
    op_cmd->add_option("--mask", op.mask, "tool label PNG")->required();
    op_cmd->add_option("--camera", op.camera, "camera JSON")->required();
    op_cmd->add_option("--config", op.config, "search/raster config JSON");
    op_cmd->add_option("--out-placement", op.out_placement, "placement report JSON")->required();
    op_cmd->add_option("--out-scene", op.out_scene, "composed labeled PLY");

    RenderArgs rd;
    auto* rd_cmd = app.add_subcommand("render", "Splat-render a point cloud to color and depth");
    rd_cmd->add_option("--scene", rd.scene, "scene PLY")->required();
    rd_cmd->add_option("--camera", rd.camera, "camera JSON")->required();
    rd_cmd->add_option("--out-color", rd.out_color, "output RGB PNG")->required();
    rd_cmd->add_option("--out-depth", rd.out_depth, "output 16-bit depth PNG")->required();
    rd_cmd->add_option("--splat-radius", rd.splat_radius, "world-space splat sigma (0 = auto)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    rd_cmd->add_option("--opacity", rd.opacity, "per-splat opacity")
        ->check(CLI::Range(1e-9, 1.0))
        ->capture_default_str();

    MetricsArgs mt;
    auto* mt_cmd = app.add_subcommand("metrics", "Per-region IoU/PSNR/SSIM report");
    mt_cmd->add_option("--rendered", mt.rendered, "rendered RGB PNG")->required();
    mt_cmd->add_option("--reference", mt.reference, "reference RGB PNG")->required();
    mt_cmd->add_option("--mask", mt.mask, "tool label PNG")->required();
    mt_cmd->add_option("--report", mt.report, "output report JSON")->required();
    mt_cmd->add_option("--placement", mt.placement, "placement JSON; copies per-tool IoU");

    SynthArgs sy;
    auto* sy_cmd = app.add_subcommand("synth", "Generate a synthetic ground-truth scene directory");
    sy_cmd->add_option("--seed", sy.seed, "RNG seed")->required();
    sy_cmd->add_option("--difficulty", sy.difficulty, "easy | displaced | occluded")->required();
    sy_cmd->add_option("--out-dir", sy.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // --help exits 0; every parse failure is a usage error
    }

    try {
        if (bp_cmd->parsed()) return run_backproject(bp);
        if (op_cmd->parsed()) return run_opjpo(op);
        if (rd_cmd->parsed()) return run_render(rd);
        if (mt_cmd->parsed()) return run_metrics(mt);
        if (sy_cmd->parsed()) return run_synth(sy);
    } catch (const sf::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sf::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sf::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sf::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
