#pragma once

#include <optional>
#include <vector>

#include "scenefuse/geometry.hpp"
#include "scenefuse/types.hpp"

namespace scenefuse {

/// Isotropic point-Gaussian primitives in the camera frame. All arrays have
/// equal length; opacities in (0,1], radii > 0 (world-space Gaussian sigma).
struct SplatSet {
    std::vector<Vec3> centers;
    std::vector<Vec3> colors;
    std::vector<double> opacities;
    std::vector<double> radii;

    std::size_t size() const { return centers.size(); }

    void validate() const {
        if (colors.size() != centers.size() || opacities.size() != centers.size() ||
            radii.size() != centers.size())
            throw InvalidArgument("SplatSet: array lengths differ");
        for (double o : opacities)
            if (!(o > 0.0 && o <= 1.0)) throw InvalidArgument("SplatSet: opacity outside (0,1]");
        for (double r : radii)
            if (!(r > 0.0)) throw InvalidArgument("SplatSet: radius must be > 0");
    }
};

struct RasterConfig {
    int splat_px = 2;                // point footprint radius (px) for silhouette mode
    double gaussian_cutoff = 3.0;    // footprint truncated at cutoff * projected sigma
    double alpha_epsilon = 1e-4;     // stop compositing once transmittance falls below this

    void validate() const {
        if (splat_px < 1) throw InvalidArgument("RasterConfig: splat_px must be >= 1");
        if (!(gaussian_cutoff > 0.0))
            throw InvalidArgument("RasterConfig: gaussian_cutoff must be > 0");
        if (!(alpha_epsilon > 0.0 && alpha_epsilon < 1.0))
            throw InvalidArgument("RasterConfig: alpha_epsilon must be in (0,1)");
    }
};

struct RenderOutput {
    ImageRGB color;
    DepthMap depth;
    std::vector<double> alpha;  // accumulated opacity per pixel, row-major
};

/// Front-to-back alpha compositing of the splats. Per pixel, contributors are
/// ordered by camera-frame z (index breaks ties); alpha of splat i at a pixel
/// is opacity_i * exp(-d^2 / (2 s^2)) with d the pixel-center distance to the
/// projected center and s the projected sigma in pixels, zero beyond
/// gaussian_cutoff * s. Per-pixel results do not depend on the parallel
/// schedule.
RenderOutput render(const SplatSet& splats, const Camera& cam, const RasterConfig& cfg);

/// Binary footprint of projected geometry. With faces: inclusive edge-function
/// fill of every triangle whose three vertices are in front of the camera
/// (winding ignored, no shading). Without faces: a disc of radius splat_px
/// around each projected point. Output is clipped to the image bounds and
/// carries TOOL semantics.
BinaryMask rasterize_silhouette(const Projection& projected, const Camera& cam,
                                const RasterConfig& cfg,
                                const std::vector<std::array<int, 3>>* faces = nullptr);

}  // namespace scenefuse
