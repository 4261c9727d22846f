#include <algorithm>
#include <cmath>

#include "scenefuse/reference.hpp"

namespace scenefuse::reference {

RenderOutput render_reference(const SplatSet& splats, const Camera& cam,
                              const RasterConfig& cfg) {
    splats.validate();
    cfg.validate();

    const int w = cam.width(), h = cam.height();
    RenderOutput out;
    out.color = ImageRGB(w, h);
    out.depth = DepthMap(w, h, 0.0);
    out.alpha.assign(std::size_t(w) * h, 0.0);

    const double focal = 0.5 * (cam.fx() + cam.fy());

    struct P {
        double u, v, z, s;
        int index;
    };
    std::vector<P> proj;
    for (std::size_t i = 0; i < splats.size(); ++i) {
        const Vec3& c = splats.centers[i];
        if (!(c.z > 0.0)) continue;
        double u, v;
        cam.project(c, u, v);
        proj.push_back({u, v, c.z, splats.radii[i] * focal / c.z, int(i)});
    }
    std::sort(proj.begin(), proj.end(), [](const P& a, const P& b) {
        if (a.z != b.z) return a.z < b.z;
        return a.index < b.index;
    });

    for (int py = 0; py < h; ++py)
        for (int px = 0; px < w; ++px) {
            double T = 1.0;
            double cr = 0.0, cg = 0.0, cb = 0.0, cd = 0.0, ca = 0.0;
            for (const P& p : proj) {
                const double dx = px - p.u, dy = py - p.v;
                const double d2 = dx * dx + dy * dy;
                const double r = cfg.gaussian_cutoff * p.s;
                if (d2 > r * r) continue;
                const double a = splats.opacities[p.index] * std::exp(-d2 / (2.0 * p.s * p.s));
                const double wgt = a * T;
                const Vec3& col = splats.colors[p.index];
                cr += col.x * wgt;
                cg += col.y * wgt;
                cb += col.z * wgt;
                cd += p.z * wgt;
                ca += wgt;
                T *= 1.0 - a;
            }
            double* c = out.color.at(px, py);
            c[0] = cr;
            c[1] = cg;
            c[2] = cb;
            out.depth.at(px, py) = cd;
            out.alpha[std::size_t(py) * w + px] = ca;
        }
    return out;
}

BinaryMask dilate_reference(const BinaryMask& mask, int kernel) {
    if (kernel < 1 || kernel % 2 == 0)
        throw InvalidArgument("dilate_reference: kernel must be odd and >= 1");
    const int r = (kernel - 1) / 2;
    BinaryMask out(mask.width, mask.height, mask.semantics);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            std::uint8_t v = 0;
            for (int yy = std::max(0, y - r); yy <= std::min(mask.height - 1, y + r) && !v; ++yy)
                for (int xx = std::max(0, x - r); xx <= std::min(mask.width - 1, x + r) && !v;
                     ++xx)
                    v = mask.at(xx, yy);
            out.at(x, y) = v;
        }
    return out;
}

double ssim_reference(const ImageRGB& a, const ImageRGB& b, const BinaryMask& keep) {
    require_same_dims(a.width, a.height, b.width, b.height, "image a", "image b");
    require_same_dims(keep.width, keep.height, a.width, a.height, "mask", "image a");
    if (keep.semantics != MaskSemantics::Keep)
        throw InvalidArgument("ssim_reference: mask must carry KEEP semantics");

    constexpr int kWin = 11, kRad = 5;
    double taps[kWin];
    double tap_sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - kRad;
        taps[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        tap_sum += taps[i];
    }
    for (double& t : taps) t /= tap_sum;

    const int w = a.width, h = a.height;
    const auto lum = [](const ImageRGB& img, int x, int y) {
        const double* p = img.at(x, y);
        return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    };

    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double sum = 0.0;
    std::size_t count = 0;
    for (int y = kRad; y < h - kRad; ++y)
        for (int x = kRad; x < w - kRad; ++x) {
            if (!keep.at(x, y)) continue;
            double ma = 0.0, mb = 0.0, maa = 0.0, mbb = 0.0, mab = 0.0;
            for (int j = -kRad; j <= kRad; ++j)
                for (int i = -kRad; i <= kRad; ++i) {
                    const double wt = taps[j + kRad] * taps[i + kRad];
                    const double va = lum(a, x + i, y + j), vb = lum(b, x + i, y + j);
                    ma += wt * va;
                    mb += wt * vb;
                    maa += wt * va * va;
                    mbb += wt * vb * vb;
                    mab += wt * va * vb;
                }
            const double var_a = maa - ma * ma;
            const double var_b = mbb - mb * mb;
            const double cov = mab - ma * mb;
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
            ++count;
        }
    if (count == 0)
        throw DegenerateError("ssim_reference: no masked window centers with a full window");
    return sum / double(count);
}

BinaryMask triangle_mask_reference(const Projection& projected, const Camera& cam,
                                   const std::vector<std::array<int, 3>>& faces) {
    BinaryMask mask(cam.width(), cam.height(), MaskSemantics::Tool);
    for (int py = 0; py < mask.height; ++py)
        for (int px = 0; px < mask.width; ++px) {
            bool inside = false;
            for (const auto& f : faces) {
                if (!projected.in_front[std::size_t(f[0])] ||
                    !projected.in_front[std::size_t(f[1])] ||
                    !projected.in_front[std::size_t(f[2])])
                    continue;
                const auto& A = projected.uvz[std::size_t(f[0])];
                const auto& B = projected.uvz[std::size_t(f[1])];
                const auto& C = projected.uvz[std::size_t(f[2])];
                const double area2 =
                    (B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0]);
                if (area2 == 0.0) continue;  // degenerate projections rasterize nothing
                const double e0 = (B[0] - A[0]) * (py - A[1]) - (B[1] - A[1]) * (px - A[0]);
                const double e1 = (C[0] - B[0]) * (py - B[1]) - (C[1] - B[1]) * (px - B[0]);
                const double e2 = (A[0] - C[0]) * (py - C[1]) - (A[1] - C[1]) * (px - C[0]);
                if ((e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0) ||
                    (e0 <= 0.0 && e1 <= 0.0 && e2 <= 0.0)) {
                    inside = true;
                    break;
                }
            }
            if (inside) mask.at(px, py) = 1;
        }
    return mask;
}

OracleResult exhaustive_search_serial(const ToolInstance& tool, double sigma, const Camera& cam,
                                      const LatticeSpec& lattice,
                                      const RasterConfig& raster_cfg) {
    lattice.validate();
    const int n = 2 * lattice.half_extent + 1;

    SilhouetteIoU eval(tool, sigma, cam, raster_cfg);
    OracleResult best{{}, -1.0, std::size_t(n) * n * n};
    for (int ix = -lattice.half_extent; ix <= lattice.half_extent; ++ix)
        for (int iy = -lattice.half_extent; iy <= lattice.half_extent; ++iy)
            for (int iz = -lattice.half_extent; iz <= lattice.half_extent; ++iz) {
                const Vec3 off = lattice.center + Vec3{ix * lattice.spacing,
                                                       iy * lattice.spacing,
                                                       iz * lattice.spacing};
                const double v = eval.at(off);
                const bool win =
                    v > best.iou ||
                    (v == best.iou &&
                     (off.x < best.offset.x ||
                      (off.x == best.offset.x &&
                       (off.y < best.offset.y ||
                        (off.y == best.offset.y && off.z < best.offset.z)))));
                if (win) {
                    best.offset = off;
                    best.iou = v;
                }
            }
    return best;
}

}  // namespace scenefuse::reference
