#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "scenefuse/geometry.hpp"
#include "scenefuse/render.hpp"
#include "scenefuse/types.hpp"

namespace scenefuse {

/// One tool to place: its reconstructed geometry (mesh vertices with faces,
/// or a bare point cloud) and its binary mask in the evaluated frame.
struct ToolInstance {
    int id = 0;
    PointCloud points;                     // mesh vertices when faces is non-empty
    std::vector<std::array<int, 3>> faces;  // empty for point-cloud tools
    BinaryMask mask;                       // TOOL semantics

    bool has_mesh() const { return !faces.empty(); }
};

struct PlacementResult {
    double sigma = 0.0;
    Vec3 offset{};
    double iou = 0.0;
    int iterations = 0;
    int candidate_evaluations = 0;  // silhouette IoU evaluations, excluding the initialization
};

/// Controls the translation search. Steps shrink geometrically, so with
/// shrink_factor 0.5 every visited offset lies on the min_step lattice around
/// the initialization whenever initial_step is a power-of-two multiple of
/// min_step.
struct SearchConfig {
    double initial_step = 0.05;
    double min_step = 1e-3;
    double shrink_factor = 0.5;
    int max_iterations = 200;
    std::optional<double> depth_prior;   // initial z, typically the median masked tissue depth
    std::optional<Vec3> initial_offset;  // overrides the centroid initialization entirely

    void validate() const {
        if (!(min_step > 0.0) || !(min_step <= initial_step))
            throw InvalidArgument("SearchConfig: need 0 < min_step <= initial_step");
        if (!(shrink_factor > 0.0 && shrink_factor < 1.0))
            throw InvalidArgument("SearchConfig: shrink_factor must be in (0,1)");
        if (max_iterations < 0)
            throw InvalidArgument("SearchConfig: max_iterations must be >= 0");
    }
};

/// Which footprint defines the mask area in the scale ratio. OrthoPoints is
/// the default reading (bounding box of the orthographically projected
/// masked-tissue points). ImagePlaneMask measures the 2D mask's pixel
/// bounding box in [-1,1]-normalized image coordinates instead; its units are
/// not commensurate with the tool's orthographic footprint, so it is exposed
/// for comparison only.
enum class ScaleAreaMode { OrthoPoints, ImagePlaneMask };

/// Axis-aligned bounding box area of a 2D point set. Empty input throws;
/// a single point yields 0 (caller decides whether that is degenerate).
double bbox_area(std::span<const std::array<double, 2>> points2d);

/// Scale factor sqrt(A_mask / A_tool) from the orthographic footprints of the
/// masked-tissue points and the tool geometry, both normalized by the tissue
/// cloud's AABB.
double solve_scale(const ToolInstance& tool, const PointCloud& tissue,
                   const PointCloud& tissue_mask_points,
                   ScaleAreaMode mode = ScaleAreaMode::OrthoPoints);

/// Reusable evaluator: IoU between the silhouette of the scaled tool placed
/// at a candidate offset and the tool's mask. Holds scratch buffers, so keep
/// one instance per thread.
class SilhouetteIoU {
public:
    SilhouetteIoU(const ToolInstance& tool, double sigma, const Camera& cam,
                  const RasterConfig& raster_cfg);

    double at(const Vec3& offset);
    double at(const Vec3& offset, bool& any_in_front);

private:
    const ToolInstance& tool_;
    double sigma_;
    const Camera& cam_;
    RasterConfig raster_;
    PointCloud scratch_;
};

/// Greedy compass search on silhouette IoU with geometric step shrinking.
/// Starts from cfg.initial_offset if given, otherwise aligns the scaled
/// tool's centroid with the mask centroid back-projected at cfg.depth_prior
/// (or at the scaled tool's own centroid depth). Each sweep polls a fixed
/// direction set (signed axis steps with + before - and axes in x,y,z order,
/// then face and corner diagonals) and takes the first strict IoU
/// improvement; when no direction improves, the step shrinks. The result IoU
/// never falls below the initialization IoU. Deterministic: identical inputs
/// produce bitwise-identical results.
PlacementResult optimize_position(const ToolInstance& tool, double sigma, const Camera& cam,
                                  const SearchConfig& cfg, const RasterConfig& raster_cfg);

struct ComposedScene {
    PointCloud cloud;
    std::vector<int> labels;  // 0 = tissue, otherwise the tool id
};

/// Tissue plus every tool transformed by its placement (p' = sigma*p + offset),
/// with per-point provenance labels. Colorless constituents are filled with
/// mid-gray when any constituent carries color.
ComposedScene compose_scene(const PointCloud& tissue,
                            const std::vector<std::pair<ToolInstance, PlacementResult>>& placements);

}  // namespace scenefuse
