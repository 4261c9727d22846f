#include "scenefuse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scenefuse {

PointCloud back_project(const ImageRGB& image, const DepthMap& depth, const BinaryMask& keep,
                        const Camera& cam, const RigidTransform& pose) {
    require_same_dims(image.width, image.height, cam.width(), cam.height(), "image", "camera");
    require_same_dims(depth.width, depth.height, cam.width(), cam.height(), "depth", "camera");
    require_same_dims(keep.width, keep.height, cam.width(), cam.height(), "mask", "camera");
    if (keep.semantics != MaskSemantics::Keep)
        throw InvalidArgument("back_project: mask must carry KEEP semantics");

    const int w = cam.width(), h = cam.height();

    // Per-row counts, then prefix offsets, then a parallel fill. Output order
    // is row-major regardless of scheduling.
    std::vector<std::size_t> row_count(h, 0);
#pragma omp parallel for schedule(static)
    for (int v = 0; v < h; ++v) {
        std::size_t n = 0;
        for (int u = 0; u < w; ++u)
            if (keep.at(u, v) && depth.at(u, v) > 0.0) ++n;
        row_count[v] = n;
    }
    std::vector<std::size_t> row_offset(h + 1, 0);
    for (int v = 0; v < h; ++v) row_offset[v + 1] = row_offset[v] + row_count[v];

    PointCloud out;
    out.positions.resize(row_offset[h]);
    out.colors.resize(row_offset[h]);
    const bool identity = pose.is_identity();

#pragma omp parallel for schedule(static)
    for (int v = 0; v < h; ++v) {
        std::size_t i = row_offset[v];
        for (int u = 0; u < w; ++u) {
            const double d = depth.at(u, v);
            if (!keep.at(u, v) || !(d > 0.0)) continue;
            Vec3 p = cam.lift(double(u), double(v), d);
            if (!identity) p = pose.apply(p);
            out.positions[i] = p;
            out.colors[i] = image.get(u, v);
            ++i;
        }
    }
    return out;
}

Projection perspective_project(const PointCloud& points, const Camera& cam,
                               const RigidTransform& pose) {
    const std::size_t n = points.size();
    Projection out;
    out.uvz.resize(n);
    out.in_front.resize(n);
    const bool identity = pose.is_identity();

    std::size_t behind = 0;
#pragma omp parallel for schedule(static) reduction(+ : behind)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
        Vec3 p = points.positions[i];
        if (!identity) p = pose.apply(p);
        if (p.z > 0.0) {
            double u, v;
            cam.project(p, u, v);
            out.uvz[i] = {u, v, p.z};
            out.in_front[i] = 1;
        } else {
            out.uvz[i] = {0.0, 0.0, p.z};
            out.in_front[i] = 0;
            ++behind;
        }
    }
    out.behind_count = behind;
    return out;
}

OrthoMatrix make_ortho_matrix(const PointCloud& cloud) {
    if (cloud.empty()) throw DegenerateError("make_ortho_matrix: empty cloud");

    double l = std::numeric_limits<double>::infinity(), r = -l;
    double b = l, t = -l;
    double n = l, f = -l;
    for (const Vec3& p : cloud.positions) {
        l = std::min(l, p.x);
        r = std::max(r, p.x);
        b = std::min(b, p.y);
        t = std::max(t, p.y);
        n = std::min(n, p.z);
        f = std::max(f, p.z);
    }

    std::string degenerate;
    if (!(r > l)) degenerate += degenerate.empty() ? "x" : ", x";
    if (!(t > b)) degenerate += degenerate.empty() ? "y" : ", y";
    if (!(f > n)) degenerate += degenerate.empty() ? "z" : ", z";
    if (!degenerate.empty())
        throw DegenerateError("make_ortho_matrix: zero-extent AABB on axis " + degenerate);

    OrthoMatrix m;
    m.scale = {2.0 / (r - l), 2.0 / (t - b), -2.0 / (f - n)};
    m.offset = {-(r + l) / (r - l), -(t + b) / (t - b), (f + n) / (f - n)};
    return m;
}

std::vector<std::array<double, 2>> ortho_project(const PointCloud& points, const OrthoMatrix& m) {
    std::vector<std::array<double, 2>> out(points.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(points.size()); ++i) {
        const Vec3 p = m.apply(points.positions[i]);
        out[i] = {p.x, p.y};
    }
    return out;
}

PointCloud apply_transform(const PointCloud& points, double scale, const Vec3& offset) {
    if (!(scale > 0.0)) throw InvalidArgument("apply_transform: scale must be > 0");
    PointCloud out;
    out.positions.resize(points.size());
    out.colors = points.colors;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(points.size()); ++i)
        out.positions[i] = points.positions[i] * scale + offset;
    return out;
}

PointCloud select_points_in_mask(const PointCloud& points, const Camera& cam,
                                 const BinaryMask& mask) {
    require_same_dims(mask.width, mask.height, cam.width(), cam.height(), "mask", "camera");
    PointCloud out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3& p = points.positions[i];
        if (!(p.z > 0.0)) continue;
        double u, v;
        cam.project(p, u, v);
        const int ui = int(std::lround(u)), vi = int(std::lround(v));
        if (ui < 0 || ui >= mask.width || vi < 0 || vi >= mask.height) continue;
        if (!mask.at(ui, vi)) continue;
        out.positions.push_back(p);
        if (points.has_colors()) out.colors.push_back(points.colors[i]);
    }
    return out;
}

double median_depth(const PointCloud& points) {
    if (points.empty()) throw DegenerateError("median_depth: empty cloud");
    std::vector<double> z(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) z[i] = points.positions[i].z;
    const std::size_t mid = (z.size() - 1) / 2;  // lower median
    std::nth_element(z.begin(), z.begin() + mid, z.end());
    return z[mid];
}

}  // namespace scenefuse
