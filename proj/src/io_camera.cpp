#include <cmath>

#include <json.hpp>

#include "io_internal.hpp"
#include "scenefuse/io.hpp"

namespace scenefuse {
namespace {

using nlohmann::json;

double num_field(const json& j, const char* name) {
    if (!j.contains(name) || !j.at(name).is_number())
        throw ParseError(std::string("camera config: missing or non-numeric field '") + name +
                             "'",
                         0);
    return j.at(name).get<double>();
}

int int_field(const json& j, const char* name) {
    if (!j.contains(name) || !j.at(name).is_number_integer())
        throw ParseError(std::string("camera config: missing or non-integer field '") + name +
                             "'",
                         0);
    return j.at(name).get<int>();
}

Vec3 normalized(const Vec3& v) { return v / norm(v); }

// The file contract tolerates 1e-6 orthonormality; RigidTransform demands
// 1e-9, so sloppy-but-in-contract rotations are re-orthonormalized.
RigidTransform pose_from_rows(const std::array<std::array<double, 4>, 4>& rows) {
    for (int k = 0; k < 4; ++k) {
        const double want = k == 3 ? 1.0 : 0.0;
        if (std::abs(rows[3][std::size_t(k)] - want) > 1e-9)
            throw ParseError("camera config: pose bottom row must be (0,0,0,1)", 0);
    }
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.m[std::size_t(i)][std::size_t(j)] = rows[std::size_t(i)][std::size_t(j)];
    const Vec3 t{rows[0][3], rows[1][3], rows[2][3]};

    const Mat3 g = r.transposed() * r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            if (std::abs(g.m[std::size_t(i)][std::size_t(j)] - want) > 1e-6)
                throw ParseError("camera config: pose rotation is not orthonormal", 0);
        }
    if (std::abs(r.det() - 1.0) > 1e-6)
        throw ParseError("camera config: pose rotation determinant is not +1", 0);

    try {
        return RigidTransform(r, t);
    } catch (const InvalidArgument&) {
        Vec3 r0{r.m[0][0], r.m[0][1], r.m[0][2]};
        Vec3 r1{r.m[1][0], r.m[1][1], r.m[1][2]};
        r0 = normalized(r0);
        r1 = normalized(r1 - r0 * dot(r1, r0));
        const Vec3 r2 = cross(r0, r1);
        Mat3 fixed;
        const Vec3 rows3[3] = {r0, r1, r2};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) fixed.m[std::size_t(i)][std::size_t(j)] = rows3[i][j];
        return RigidTransform(fixed, t);
    }
}

}  // namespace

CameraConfig read_camera(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file_bytes(path);
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("camera config: ") + e.what(), e.byte);
    }
    if (!j.is_object()) throw ParseError("camera config: top level is not an object", 0);
    if (j.contains("schema_version") && j.at("schema_version") != 1)
        throw ParseError("camera config: unsupported schema_version", 0);

    CameraConfig cfg;
    cfg.fx = num_field(j, "fx");
    cfg.fy = num_field(j, "fy");
    cfg.cx = num_field(j, "cx");
    cfg.cy = num_field(j, "cy");
    cfg.width = int_field(j, "width");
    cfg.height = int_field(j, "height");
    cfg.depth_scale = num_field(j, "depth_scale");
    if (!(cfg.depth_scale > 0.0))
        throw InvalidArgument("camera config: depth_scale must be > 0");

    if (j.contains("pose")) {
        const auto& p = j.at("pose");
        if (!p.is_array() || p.size() != 4)
            throw ParseError("camera config: pose must be a 4x4 array", 0);
        std::array<std::array<double, 4>, 4> rows{};
        for (int i = 0; i < 4; ++i) {
            const auto& row = p.at(std::size_t(i));
            if (!row.is_array() || row.size() != 4)
                throw ParseError("camera config: pose must be a 4x4 array", 0);
            for (int k = 0; k < 4; ++k) {
                if (!row.at(std::size_t(k)).is_number())
                    throw ParseError("camera config: pose entries must be numbers", 0);
                rows[std::size_t(i)][std::size_t(k)] = row.at(std::size_t(k)).get<double>();
            }
        }
        cfg.pose = pose_from_rows(rows);
    }

    cfg.camera();  // validates the intrinsic invariants
    return cfg;
}

void write_camera(const std::filesystem::path& path, const CameraConfig& cfg) {
    cfg.camera();
    if (!(cfg.depth_scale > 0.0))
        throw InvalidArgument("write_camera: depth_scale must be > 0");

    json j;
    j["schema_version"] = 1;
    j["fx"] = cfg.fx;
    j["fy"] = cfg.fy;
    j["cx"] = cfg.cx;
    j["cy"] = cfg.cy;
    j["width"] = cfg.width;
    j["height"] = cfg.height;
    j["depth_scale"] = cfg.depth_scale;

    json pose = json::array();
    const Mat3& r = cfg.pose.rotation();
    const Vec3& t = cfg.pose.translation();
    for (int i = 0; i < 3; ++i)
        pose.push_back({r.m[std::size_t(i)][0], r.m[std::size_t(i)][1], r.m[std::size_t(i)][2],
                        t[i]});
    pose.push_back({0.0, 0.0, 0.0, 1.0});
    j["pose"] = pose;

    atomic_write_bytes(path, j.dump(2) + "\n");
}

}  // namespace scenefuse
