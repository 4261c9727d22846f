#pragma once

#include "scenefuse/placement.hpp"
#include "scenefuse/render.hpp"
#include "scenefuse/synth.hpp"
#include "scenefuse/types.hpp"

/// Serial reference implementations. Each mirrors a parallel kernel with the
/// simplest possible algorithm (global sort, full per-pixel sums, no tiling,
/// no early exit) so the kernels can be checked against them and benchmarked.
namespace scenefuse::reference {

/// Naive compositing: every splat considered at every pixel in global
/// front-to-back order, transmittance never truncated.
RenderOutput render_reference(const SplatSet& splats, const Camera& cam, const RasterConfig& cfg);

/// Brute-force dilation: scan the full kernel window per output pixel.
BinaryMask dilate_reference(const BinaryMask& mask, int kernel);

/// Direct-window SSIM: explicit 11x11 weighted sums per masked center.
double ssim_reference(const ImageRGB& a, const ImageRGB& b, const BinaryMask& keep);

/// Per-pixel point-in-triangle silhouette, independent of the incremental
/// edge-function rasterizer.
BinaryMask triangle_mask_reference(const Projection& projected, const Camera& cam,
                                   const std::vector<std::array<int, 3>>& faces);

/// Single-threaded lattice scan with the same tie-break as the parallel
/// oracle.
OracleResult exhaustive_search_serial(const ToolInstance& tool, double sigma, const Camera& cam,
                                      const LatticeSpec& lattice, const RasterConfig& raster_cfg);

}  // namespace scenefuse::reference
