#include "scenefuse/render.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace scenefuse {

namespace {

constexpr int kTile = 16;

struct ProjectedSplat {
    double u, v, z, sigma_px;
    int x0, x1, y0, y1;  // inclusive pixel bbox, clipped
    int index;
};

// Key for the per-tile front-to-back order: z ascending, input index breaks
// ties.
inline bool front_of(const ProjectedSplat& a, const ProjectedSplat& b) {
    if (a.z != b.z) return a.z < b.z;
    return a.index < b.index;
}

}  // namespace

RenderOutput render(const SplatSet& splats, const Camera& cam, const RasterConfig& cfg) {
    splats.validate();
    cfg.validate();

    const int w = cam.width(), h = cam.height();
    RenderOutput out;
    out.color = ImageRGB(w, h);
    out.depth = DepthMap(w, h, 0.0);
    out.alpha.assign(std::size_t(w) * h, 0.0);

    const std::size_t n = splats.size();
    if (n == 0) return out;

    const double focal = 0.5 * (cam.fx() + cam.fy());

    // Project and cull.
    std::vector<ProjectedSplat> proj(n);
    std::vector<std::uint8_t> live(n, 0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
        const Vec3& c = splats.centers[i];
        if (!(c.z > 0.0)) continue;
        double u, v;
        cam.project(c, u, v);
        const double s = splats.radii[i] * focal / c.z;
        const double r = cfg.gaussian_cutoff * s;
        const int x0 = std::max(0, int(std::ceil(u - r)));
        const int x1 = std::min(w - 1, int(std::floor(u + r)));
        const int y0 = std::max(0, int(std::ceil(v - r)));
        const int y1 = std::min(h - 1, int(std::floor(v + r)));
        if (x0 > x1 || y0 > y1) continue;
        proj[i] = {u, v, c.z, s, x0, x1, y0, y1, int(i)};
        live[i] = 1;
    }

    // Bin to tiles. Scatter order is arbitrary; the per-tile sort below makes
    // the final order canonical.
    const int tx = (w + kTile - 1) / kTile;
    const int ty = (h + kTile - 1) / kTile;
    const int ntiles = tx * ty;
    std::vector<std::atomic<std::uint32_t>> tile_count(ntiles);
    for (auto& c : tile_count) c.store(0, std::memory_order_relaxed);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
        if (!live[i]) continue;
        const ProjectedSplat& p = proj[i];
        for (int tyi = p.y0 / kTile; tyi <= p.y1 / kTile; ++tyi)
            for (int txi = p.x0 / kTile; txi <= p.x1 / kTile; ++txi)
                tile_count[tyi * tx + txi].fetch_add(1, std::memory_order_relaxed);
    }

    std::vector<std::uint32_t> tile_offset(ntiles + 1, 0);
    for (int t = 0; t < ntiles; ++t)
        tile_offset[t + 1] = tile_offset[t] + tile_count[t].load(std::memory_order_relaxed);

    std::vector<std::uint32_t> tile_items(tile_offset[ntiles]);
    std::vector<std::atomic<std::uint32_t>> tile_cursor(ntiles);
    for (int t = 0; t < ntiles; ++t)
        tile_cursor[t].store(tile_offset[t], std::memory_order_relaxed);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
        if (!live[i]) continue;
        const ProjectedSplat& p = proj[i];
        for (int tyi = p.y0 / kTile; tyi <= p.y1 / kTile; ++tyi)
            for (int txi = p.x0 / kTile; txi <= p.x1 / kTile; ++txi) {
                const std::uint32_t slot =
                    tile_cursor[tyi * tx + txi].fetch_add(1, std::memory_order_relaxed);
                tile_items[slot] = std::uint32_t(i);
            }
    }

#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < ntiles; ++t) {
        const std::uint32_t begin = tile_offset[t], end = tile_offset[t + 1];
        if (begin == end) continue;
        std::sort(tile_items.begin() + begin, tile_items.begin() + end,
                  [&](std::uint32_t a, std::uint32_t b) { return front_of(proj[a], proj[b]); });

        const int px0 = (t % tx) * kTile, py0 = (t / tx) * kTile;
        const int px1 = std::min(px0 + kTile, w), py1 = std::min(py0 + kTile, h);
        for (int py = py0; py < py1; ++py) {
            for (int px = px0; px < px1; ++px) {
                double T = 1.0;
                double cr = 0.0, cg = 0.0, cb = 0.0, cd = 0.0, ca = 0.0;
                for (std::uint32_t it = begin; it < end; ++it) {
                    const ProjectedSplat& p = proj[tile_items[it]];
                    if (px < p.x0 || px > p.x1 || py < p.y0 || py > p.y1) continue;
                    const double dx = px - p.u, dy = py - p.v;
                    const double d2 = dx * dx + dy * dy;
                    const double r = cfg.gaussian_cutoff * p.sigma_px;
                    if (d2 > r * r) continue;
                    const double a =
                        splats.opacities[p.index] * std::exp(-d2 / (2.0 * p.sigma_px * p.sigma_px));
                    const double wgt = a * T;
                    const Vec3& col = splats.colors[p.index];
                    cr += col.x * wgt;
                    cg += col.y * wgt;
                    cb += col.z * wgt;
                    cd += p.z * wgt;
                    ca += wgt;
                    T *= 1.0 - a;
                    if (T < cfg.alpha_epsilon) break;
                }
                double* c = out.color.at(px, py);
                c[0] = cr;
                c[1] = cg;
                c[2] = cb;
                out.depth.at(px, py) = cd;
                out.alpha[std::size_t(py) * w + px] = ca;
            }
        }
    }

    return out;
}

namespace {

// Inclusive edge-function fill; the sign of twice the signed area normalizes
// winding so front- and back-facing triangles fill alike. Degenerate
// (collinear) projections rasterize nothing.
void fill_triangle(BinaryMask& mask, const std::array<double, 3>& a,
                   const std::array<double, 3>& b, const std::array<double, 3>& c) {
    const double area2 =
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    if (area2 == 0.0) return;
    const double sgn = area2 > 0.0 ? 1.0 : -1.0;

    const int x0 = std::max(0, int(std::ceil(std::min({a[0], b[0], c[0]}))));
    const int x1 = std::min(mask.width - 1, int(std::floor(std::max({a[0], b[0], c[0]}))));
    const int y0 = std::max(0, int(std::ceil(std::min({a[1], b[1], c[1]}))));
    const int y1 = std::min(mask.height - 1, int(std::floor(std::max({a[1], b[1], c[1]}))));

    for (int py = y0; py <= y1; ++py) {
        for (int px = x0; px <= x1; ++px) {
            const double e0 = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]);
            const double e1 = (c[0] - b[0]) * (py - b[1]) - (c[1] - b[1]) * (px - b[0]);
            const double e2 = (a[0] - c[0]) * (py - c[1]) - (a[1] - c[1]) * (px - c[0]);
            if (sgn * e0 >= 0.0 && sgn * e1 >= 0.0 && sgn * e2 >= 0.0) mask.at(px, py) = 1;
        }
    }
}

}  // namespace

BinaryMask rasterize_silhouette(const Projection& projected, const Camera& cam,
                                const RasterConfig& cfg,
                                const std::vector<std::array<int, 3>>* faces) {
    cfg.validate();
    BinaryMask mask(cam.width(), cam.height(), MaskSemantics::Tool);

    if (faces) {
        for (const auto& f : *faces) {
            if (!projected.in_front[f[0]] || !projected.in_front[f[1]] ||
                !projected.in_front[f[2]])
                continue;
            fill_triangle(mask, projected.uvz[f[0]], projected.uvz[f[1]], projected.uvz[f[2]]);
        }
        return mask;
    }

    const int r = cfg.splat_px;
    const int r2 = r * r;
    for (std::size_t i = 0; i < projected.uvz.size(); ++i) {
        if (!projected.in_front[i]) continue;
        const double u = projected.uvz[i][0], v = projected.uvz[i][1];
        const int x0 = std::max(0, int(std::ceil(u - r)));
        const int x1 = std::min(mask.width - 1, int(std::floor(u + r)));
        const int y0 = std::max(0, int(std::ceil(v - r)));
        const int y1 = std::min(mask.height - 1, int(std::floor(v + r)));
        for (int py = y0; py <= y1; ++py)
            for (int px = x0; px <= x1; ++px) {
                const double dx = px - u, dy = py - v;
                if (dx * dx + dy * dy <= double(r2)) mask.at(px, py) = 1;
            }
    }
    return mask;
}

}  // namespace scenefuse
