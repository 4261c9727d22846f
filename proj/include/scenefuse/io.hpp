#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "scenefuse/types.hpp"

namespace scenefuse {

enum class PlyFormat { Ascii, BinaryLittleEndian };

/// Everything a PLY file carried: geometry plus whichever optional vertex
/// attributes and face elements were present.
struct PlyData {
    PointCloud cloud;
    std::vector<int> labels;                 // per-vertex "label" property, or empty
    std::vector<std::array<int, 3>> faces;   // fan-triangulated face element, or empty
};

/// PLY, ascii or binary little-endian. Vertex x/y/z may be float or double;
/// red/green/blue (uchar) map to [0,1]; a scalar integer "label" property is
/// preserved; unknown properties are skipped. Malformed input throws
/// ParseError carrying the byte offset.
PlyData read_ply(const std::filesystem::path& path);

PointCloud read_pointcloud(const std::filesystem::path& path);

/// Positions are written as doubles, so a binary round-trip is bitwise.
/// Colors quantize to uchar, labels to int32.
void write_pointcloud(const std::filesystem::path& path, const PointCloud& cloud,
                      PlyFormat format = PlyFormat::BinaryLittleEndian,
                      const std::vector<int>* labels = nullptr);

/// Dispatches on extension: .obj (v/f subset, polygons fan-triangulated) or
/// .ply with a face element.
TriangleMesh read_mesh(const std::filesystem::path& path);

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

/// 8-bit RGB PNG, channels mapped to [0,1] by /255.
ImageRGB read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const ImageRGB& image);

/// 8-bit grayscale PNG; any nonzero sample reads as 1.
BinaryMask read_mask(const std::filesystem::path& path, MaskSemantics semantics);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

struct LabeledMask {
    int label = 0;
    BinaryMask mask;  // TOOL semantics
};

/// Splits an 8-bit label PNG into one mask per distinct nonzero value,
/// ascending by label.
std::vector<LabeledMask> read_label_masks(const std::filesystem::path& path);

/// Inverse of read_label_masks. Masks must share dimensions and be disjoint;
/// labels must fit in [1,255].
void write_label_masks(const std::filesystem::path& path,
                       const std::vector<LabeledMask>& masks);

/// 16-bit grayscale PNG; stored sample * depth_scale = scene units.
DepthMap read_depth(const std::filesystem::path& path, double depth_scale);

/// Throws InvalidArgument if any value / depth_scale rounds outside uint16.
void write_depth(const std::filesystem::path& path, const DepthMap& depth, double depth_scale);

/// Camera calibration document: intrinsics, image size, the depth encoding
/// multiplier, and an optional rigid pose.
struct CameraConfig {
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    double depth_scale = 1.0;
    RigidTransform pose;  // identity when the file omits it

    Camera camera() const { return Camera(fx, fy, cx, cy, width, height); }
};

CameraConfig read_camera(const std::filesystem::path& path);
void write_camera(const std::filesystem::path& path, const CameraConfig& cfg);

/// Write to a sibling temp file, then rename over the target.
void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace scenefuse
