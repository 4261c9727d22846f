#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scenefuse {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two gridded inputs (image/depth/mask) disagree on dimensions. The message
/// names the offending input.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Geometry too degenerate to operate on (empty cloud, zero-extent AABB axis,
/// zero-area projection). The message names what collapsed.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// A caller-supplied value is out of contract (non-positive scale, even
/// dilation kernel, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// File content could not be parsed. Carries the byte offset at which parsing
/// failed.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}
    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// Filesystem-level failure (missing file, unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Small linear algebra
// ---------------------------------------------------------------------------

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    bool operator==(const Vec3& o) const = default;
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};

    static Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
        return r;
    }

    Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += m[i][k] * o.m[k][j];
                r.m[i][j] = s;
            }
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }

    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
};

/// Row-major 4x4 matrix, column-vector convention: p' = M * [x y z 1]^T.
struct Mat4 {
    std::array<std::array<double, 4>, 4> m{};

    static Mat4 identity() {
        Mat4 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = r.m[3][3] = 1.0;
        return r;
    }
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Pinhole intrinsics. Owns the projection conventions: the camera looks down
/// +z with x right and y down, and integer pixel coordinates address pixel
/// centers.
class Camera {
public:
    Camera(double fx, double fy, double cx, double cy, int width, int height)
        : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height) {
        if (!(fx > 0.0) || !(fy > 0.0))
            throw InvalidArgument("Camera: focal lengths must be positive");
        if (width < 1 || height < 1)
            throw InvalidArgument("Camera: image size must be at least 1x1");
        if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
            throw InvalidArgument("Camera: principal point must lie inside the image");
    }

    double fx() const { return fx_; }
    double fy() const { return fy_; }
    double cx() const { return cx_; }
    double cy() const { return cy_; }
    int width() const { return width_; }
    int height() const { return height_; }

    /// Lift pixel (u,v) with depth d into the camera frame: d * K^-1 [u v 1]^T.
    Vec3 lift(double u, double v, double d) const {
        return {d * (u - cx_) / fx_, d * (v - cy_) / fy_, d};
    }

    /// Project a camera-frame point; caller must check p.z > 0.
    void project(const Vec3& p, double& u, double& v) const {
        u = fx_ * p.x / p.z + cx_;
        v = fy_ * p.y / p.z + cy_;
    }

private:
    double fx_, fy_, cx_, cy_;
    int width_, height_;
};

/// Rigid motion p' = R p + t. The rotation is validated at construction:
/// R^T R = I and det R = 1, both within 1e-9.
class RigidTransform {
public:
    RigidTransform() : rotation_(Mat3::identity()), translation_{} {}

    RigidTransform(const Mat3& rotation, const Vec3& translation)
        : rotation_(rotation), translation_(translation) {
        const Mat3 g = rotation.transposed() * rotation;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double want = i == j ? 1.0 : 0.0;
                if (std::abs(g.m[i][j] - want) > 1e-9)
                    throw InvalidArgument("RigidTransform: rotation is not orthonormal");
            }
        if (std::abs(rotation.det() - 1.0) > 1e-9)
            throw InvalidArgument("RigidTransform: rotation determinant is not +1");
    }

    static RigidTransform identity() { return RigidTransform(); }

    const Mat3& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }

    Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

    RigidTransform inverse() const {
        RigidTransform inv;  // bypass the ctor check: R^T of an orthonormal R stays orthonormal
        inv.rotation_ = rotation_.transposed();
        inv.translation_ = (inv.rotation_ * translation_) * -1.0;
        return inv;
    }

    bool is_identity() const {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (rotation_.m[i][j] != (i == j ? 1.0 : 0.0)) return false;
        return translation_ == Vec3{};
    }

private:
    Mat3 rotation_;
    Vec3 translation_;
};

/// 3D points with optional per-point RGB in [0,1]. `colors` is either empty
/// or the same length as `positions`.
struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Vec3> colors;

    bool has_colors() const { return !colors.empty(); }
    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }

    /// Checks the declared invariants; readers call this on deserialized data.
    void validate() const {
        if (has_colors() && colors.size() != positions.size())
            throw InvalidArgument("PointCloud: colors length differs from positions length");
        for (const Vec3& p : positions)
            if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
                throw InvalidArgument("PointCloud: non-finite coordinate");
    }
};

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    void validate() const {
        const int n = static_cast<int>(vertices.size());
        for (const auto& f : faces) {
            for (int k = 0; k < 3; ++k)
                if (f[k] < 0 || f[k] >= n)
                    throw InvalidArgument("TriangleMesh: face index out of range");
            if (f[0] == f[1] && f[1] == f[2])
                throw InvalidArgument("TriangleMesh: degenerate face with three identical indices");
        }
    }
};

/// Per-pixel depth in scene units; 0 encodes invalid (no measurement).
struct DepthMap {
    int width = 0, height = 0;
    std::vector<double> values;  // row-major, height*width

    DepthMap() = default;
    DepthMap(int w, int h, double fill = 0.0) : width(w), height(h), values(size_t(w) * h, fill) {}

    double at(int x, int y) const { return values[std::size_t(y) * width + x]; }
    double& at(int x, int y) { return values[std::size_t(y) * width + x]; }

    void validate() const {
        for (double d : values)
            if (!(d >= 0.0) || !std::isfinite(d))
                throw InvalidArgument("DepthMap: values must be finite and >= 0");
    }
};

/// RGB image with channels in [0,1], row-major, interleaved.
struct ImageRGB {
    int width = 0, height = 0;
    std::vector<double> pixels;  // 3 * height * width

    ImageRGB() = default;
    ImageRGB(int w, int h) : width(w), height(h), pixels(std::size_t(3) * w * h, 0.0) {}

    const double* at(int x, int y) const { return &pixels[3 * (std::size_t(y) * width + x)]; }
    double* at(int x, int y) { return &pixels[3 * (std::size_t(y) * width + x)]; }

    void set(int x, int y, const Vec3& rgb) {
        double* p = at(x, y);
        p[0] = rgb.x;
        p[1] = rgb.y;
        p[2] = rgb.z;
    }
    Vec3 get(int x, int y) const {
        const double* p = at(x, y);
        return {p[0], p[1], p[2]};
    }

    void validate() const {
        for (double v : pixels)
            if (!(v >= 0.0 && v <= 1.0))
                throw InvalidArgument("ImageRGB: channel outside [0,1]");
    }
};

/// What a set bit means: TOOL masks mark tool pixels, KEEP masks mark pixels
/// that participate in an operation.
enum class MaskSemantics { Tool, Keep };

struct BinaryMask {
    int width = 0, height = 0;
    std::vector<std::uint8_t> values;  // row-major, {0,1}
    MaskSemantics semantics = MaskSemantics::Keep;

    BinaryMask() = default;
    BinaryMask(int w, int h, MaskSemantics s, std::uint8_t fill = 0)
        : width(w), height(h), values(std::size_t(w) * h, fill), semantics(s) {}

    std::uint8_t at(int x, int y) const { return values[std::size_t(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return values[std::size_t(y) * width + x]; }

    std::size_t count_set() const {
        std::size_t n = 0;
        for (std::uint8_t v : values) n += v;
        return n;
    }

    /// Flipped mask; a complemented TOOL mask is the KEEP mask used to gate
    /// tool pixels out of tissue operations.
    BinaryMask complement() const {
        BinaryMask out(width, height,
                       semantics == MaskSemantics::Tool ? MaskSemantics::Keep
                                                        : MaskSemantics::Tool);
        for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = values[i] ? 0 : 1;
        return out;
    }

    /// Same bits reinterpreted: a tool mask reused as the KEEP mask of a
    /// region-restricted metric.
    BinaryMask with_semantics(MaskSemantics s) const {
        BinaryMask out = *this;
        out.semantics = s;
        return out;
    }

    void validate() const {
        for (std::uint8_t v : values)
            if (v > 1) throw InvalidArgument("BinaryMask: values must be 0 or 1");
    }
};

inline void require_same_dims(int wa, int ha, int wb, int hb, const char* a, const char* b) {
    if (wa != wb || ha != hb)
        throw DimensionError(std::string(a) + " is " + std::to_string(wa) + "x" +
                             std::to_string(ha) + " but " + b + " is " + std::to_string(wb) +
                             "x" + std::to_string(hb));
}

}  // namespace scenefuse
