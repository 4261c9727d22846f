#include "scenefuse/placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scenefuse/metrics.hpp"

namespace scenefuse {

double bbox_area(std::span<const std::array<double, 2>> points2d) {
    if (points2d.empty()) throw DegenerateError("bbox_area: empty point set");
    double x0 = points2d[0][0], x1 = x0, y0 = points2d[0][1], y1 = y0;
    for (const auto& p : points2d) {
        x0 = std::min(x0, p[0]);
        x1 = std::max(x1, p[0]);
        y0 = std::min(y0, p[1]);
        y1 = std::max(y1, p[1]);
    }
    return (x1 - x0) * (y1 - y0);
}

namespace {

double mask_bbox_area_ndc(const BinaryMask& mask) {
    int x0 = mask.width, x1 = -1, y0 = mask.height, y1 = -1;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y)) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) throw DegenerateError("solve_scale: tool mask has no set pixels");
    const double wx = 2.0 * double(x1 - x0) / double(mask.width);
    const double wy = 2.0 * double(y1 - y0) / double(mask.height);
    return wx * wy;
}

}  // namespace

double solve_scale(const ToolInstance& tool, const PointCloud& tissue,
                   const PointCloud& tissue_mask_points, ScaleAreaMode mode) {
    if (tool.points.empty()) throw DegenerateError("solve_scale: tool geometry is empty");
    if (tissue_mask_points.empty())
        throw DegenerateError("solve_scale: no tissue points under the tool mask");

    const OrthoMatrix m = make_ortho_matrix(tissue);

    const double a_tool = bbox_area(ortho_project(tool.points, m));
    if (!(a_tool > 0.0))
        throw DegenerateError("solve_scale: tool projection has zero bounding-box area");

    double a_mask = 0.0;
    if (mode == ScaleAreaMode::OrthoPoints) {
        a_mask = bbox_area(ortho_project(tissue_mask_points, m));
    } else {
        a_mask = mask_bbox_area_ndc(tool.mask);
    }
    if (!(a_mask > 0.0))
        throw DegenerateError("solve_scale: mask projection has zero bounding-box area");

    return std::sqrt(a_mask / a_tool);
}

namespace {

Vec3 centroid(const PointCloud& cloud) {
    Vec3 c{};
    for (const Vec3& p : cloud.positions) c += p;
    return c / double(cloud.size());
}

// Poll directions: signed axis steps first (+ before -, axes in x,y,z
// order), then the 12 face diagonals, then the 8 corner diagonals, each
// displacing every involved axis by a full step. Single-axis polls alone
// stall on the coupled scale/position valley of an off-center silhouette
// (a depth step rescales the footprint but also shifts it laterally);
// the diagonal moves track that valley.
constexpr std::array<std::array<int, 3>, 26> make_poll_directions() {
    std::array<std::array<int, 3>, 26> dirs{};
    std::size_t n = 0;
    for (int axis = 0; axis < 3; ++axis)
        for (int s : {1, -1}) dirs[n++][axis] = s;
    for (int nonzero : {2, 3})
        for (int dx : {1, 0, -1})
            for (int dy : {1, 0, -1})
                for (int dz : {1, 0, -1})
                    if ((dx != 0) + (dy != 0) + (dz != 0) == nonzero) dirs[n++] = {dx, dy, dz};
    return dirs;
}

constexpr auto kPollDirections = make_poll_directions();

}  // namespace

SilhouetteIoU::SilhouetteIoU(const ToolInstance& tool, double sigma, const Camera& cam,
                             const RasterConfig& raster_cfg)
    : tool_(tool), sigma_(sigma), cam_(cam), raster_(raster_cfg) {
    if (!(sigma > 0.0)) throw InvalidArgument("SilhouetteIoU: sigma must be > 0");
    if (tool.points.empty()) throw DegenerateError("SilhouetteIoU: tool geometry is empty");
    require_same_dims(tool.mask.width, tool.mask.height, cam.width(), cam.height(), "tool mask",
                      "camera");
    raster_.validate();
    scratch_.positions.resize(tool.points.size());
}

double SilhouetteIoU::at(const Vec3& offset) {
    bool unused = false;
    return at(offset, unused);
}

double SilhouetteIoU::at(const Vec3& offset, bool& any_in_front) {
    for (std::size_t i = 0; i < tool_.points.size(); ++i)
        scratch_.positions[i] = tool_.points.positions[i] * sigma_ + offset;
    const Projection proj = perspective_project(scratch_, cam_, RigidTransform::identity());
    any_in_front = proj.behind_count < proj.uvz.size();
    const BinaryMask sil =
        rasterize_silhouette(proj, cam_, raster_, tool_.has_mesh() ? &tool_.faces : nullptr);
    return iou(sil, tool_.mask);
}

PlacementResult optimize_position(const ToolInstance& tool, double sigma, const Camera& cam,
                                  const SearchConfig& cfg, const RasterConfig& raster_cfg) {
    if (!(sigma > 0.0)) throw InvalidArgument("optimize_position: sigma must be > 0");
    if (tool.points.empty()) throw DegenerateError("optimize_position: tool geometry is empty");
    if (tool.mask.count_set() == 0)
        throw DegenerateError("optimize_position: tool mask has no set pixels");
    require_same_dims(tool.mask.width, tool.mask.height, cam.width(), cam.height(), "tool mask",
                      "camera");
    cfg.validate();
    raster_cfg.validate();

    Vec3 offset;
    if (cfg.initial_offset) {
        offset = *cfg.initial_offset;
    } else {
        // Align the scaled tool's centroid with the mask centroid lifted to
        // the prior depth.
        double su = 0.0, sv = 0.0;
        std::size_t n = 0;
        for (int y = 0; y < tool.mask.height; ++y)
            for (int x = 0; x < tool.mask.width; ++x)
                if (tool.mask.at(x, y)) {
                    su += x;
                    sv += y;
                    ++n;
                }
        const Vec3 tool_centroid = centroid(tool.points) * sigma;
        const double z0 = cfg.depth_prior ? *cfg.depth_prior : tool_centroid.z;
        const Vec3 target = cam.lift(su / double(n), sv / double(n), z0);
        offset = target - tool_centroid;
    }

    SilhouetteIoU eval(tool, sigma, cam, raster_cfg);

    bool any_in_front = false;
    double best = eval.at(offset, any_in_front);
    if (!any_in_front)
        throw DegenerateError("optimize_position: tool fully behind camera at initialization");

    PlacementResult result;
    result.sigma = sigma;

    double step = cfg.initial_step;
    int iterations = 0, evaluations = 0;
    while (iterations < cfg.max_iterations && step >= cfg.min_step) {
        bool improved = false;
        for (const auto& d : kPollDirections) {
            const Vec3 cand{offset.x + d[0] * step, offset.y + d[1] * step,
                            offset.z + d[2] * step};
            const double ci = eval.at(cand);
            ++evaluations;
            if (ci > best) {
                best = ci;
                offset = cand;
                improved = true;
                break;  // greedy: take the first improving move, repoll from the top
            }
        }
        ++iterations;
        if (!improved) step *= cfg.shrink_factor;
    }

    result.offset = offset;
    result.iou = best;
    result.iterations = iterations;
    result.candidate_evaluations = evaluations;
    return result;
}

ComposedScene compose_scene(
    const PointCloud& tissue,
    const std::vector<std::pair<ToolInstance, PlacementResult>>& placements) {
    for (const auto& [tool, placement] : placements)
        if (!(placement.sigma > 0.0))
            throw InvalidArgument("compose_scene: non-positive sigma for tool " +
                                  std::to_string(tool.id));

    const Vec3 kFillGray{0.5, 0.5, 0.5};
    bool any_colors = tissue.has_colors();
    for (const auto& [tool, placement] : placements)
        any_colors = any_colors || tool.points.has_colors();

    ComposedScene out;
    out.cloud.positions = tissue.positions;
    out.labels.assign(tissue.size(), 0);
    if (any_colors) {
        if (tissue.has_colors())
            out.cloud.colors = tissue.colors;
        else
            out.cloud.colors.assign(tissue.size(), kFillGray);
    }

    for (const auto& [tool, placement] : placements) {
        const PointCloud placed =
            apply_transform(tool.points, placement.sigma, placement.offset);
        out.cloud.positions.insert(out.cloud.positions.end(), placed.positions.begin(),
                                   placed.positions.end());
        out.labels.insert(out.labels.end(), placed.size(), tool.id);
        if (any_colors) {
            if (placed.has_colors())
                out.cloud.colors.insert(out.cloud.colors.end(), placed.colors.begin(),
                                        placed.colors.end());
            else
                out.cloud.colors.insert(out.cloud.colors.end(), placed.size(), kFillGray);
        }
    }
    return out;
}

}  // namespace scenefuse
