#pragma once

#include <array>
#include <vector>

#include "scenefuse/types.hpp"

namespace scenefuse {

/// Per-point perspective projection results. Index-aligned with the input
/// cloud; points with camera-frame z <= 0 are flagged (in_front = 0) and must
/// be skipped by rasterization.
struct Projection {
    std::vector<std::array<double, 3>> uvz;  // (u, v, camera-frame z)
    std::vector<std::uint8_t> in_front;
    std::size_t behind_count = 0;
};

/// Lift every pixel with keep=1 and depth>0 into a colored 3D point:
/// p = pose(d * K^-1 [u v 1]^T). Output order is row-major over pixels.
PointCloud back_project(const ImageRGB& image, const DepthMap& depth, const BinaryMask& keep,
                        const Camera& cam, const RigidTransform& pose);

/// u = fx*x/z + cx, v = fy*y/z + cy on pose-transformed points.
Projection perspective_project(const PointCloud& points, const Camera& cam,
                               const RigidTransform& pose);

/// Affine normalization mapping an AABB onto [-1,1]^3: p' = scale .* p + offset,
/// with x and y mapped min->-1/max->+1 and z flipped (min->+1, max->-1).
struct OrthoMatrix {
    Vec3 scale;   // diagonal of S
    Vec3 offset;  // translation column

    Vec3 apply(const Vec3& p) const {
        return {scale.x * p.x + offset.x, scale.y * p.y + offset.y, scale.z * p.z + offset.z};
    }

    /// Assembled 4x4 in column-vector convention (offset in the last column).
    Mat4 matrix() const {
        Mat4 m;
        m.m[0][0] = scale.x;
        m.m[1][1] = scale.y;
        m.m[2][2] = scale.z;
        m.m[0][3] = offset.x;
        m.m[1][3] = offset.y;
        m.m[2][3] = offset.z;
        m.m[3][3] = 1.0;
        return m;
    }
};

/// Build the normalization from the cloud's axis-aligned bounding box.
/// Throws DegenerateError if the cloud is empty or any axis has zero extent.
OrthoMatrix make_ortho_matrix(const PointCloud& cloud);

/// Map points by the normalization and drop z'. No clipping.
std::vector<std::array<double, 2>> ortho_project(const PointCloud& points, const OrthoMatrix& m);

/// p' = scale * p + offset, colors preserved. scale must be > 0.
PointCloud apply_transform(const PointCloud& points, double scale, const Vec3& offset);

/// Points whose projection lands on a set pixel of the mask (nearest pixel
/// center; behind-camera and out-of-frame points never match).
PointCloud select_points_in_mask(const PointCloud& points, const Camera& cam,
                                 const BinaryMask& mask);

/// Lower median of the camera-frame depths (z coordinates) of a cloud.
double median_depth(const PointCloud& points);

}  // namespace scenefuse
