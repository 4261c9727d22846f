#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "scenefuse/placement.hpp"
#include "scenefuse/render.hpp"
#include "scenefuse/types.hpp"

namespace scenefuse {

/// splitmix64. The exact sequence is part of the scene format: uniform()
/// takes the top 53 bits of next() scaled by 2^-53. Documented in the README.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1).
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

enum class Difficulty { Easy, Displaced, Occluded };

Difficulty difficulty_from_string(const std::string& s);
std::string to_string(Difficulty d);

/// A complete synthetic observation with its generating ground truth. The
/// depth map carries the tissue surface at every pixel (as if the occluded
/// tissue had been reconstructed); the image shows tissue colors with the
/// tool silhouette painted over; the mask is the exact silhouette of the
/// ground-truth placement.
struct SynthScene {
    explicit SynthScene(const Camera& cam) : camera(cam) {}

    Camera camera;
    PointCloud tissue;
    TriangleMesh tool;            // grasper proxy in model space, rotation baked in
    double true_sigma = 0.0;
    Vec3 true_offset;             // p_cam = true_sigma * p_model + true_offset
    Vec3 init_perturbation;       // displaced/occluded: added to true_offset to seed a search
    BinaryMask mask;              // TOOL semantics
    DepthMap depth;
    ImageRGB image;
    std::uint64_t rng_seed = 0;
    Difficulty difficulty = Difficulty::Easy;
    double tissue_diag = 0.0;     // tissue AABB diagonal, scene units
    double depth_scale = 0.0;     // 16-bit encoding step for write_scene_dir
};

/// Deterministic: the same seed and difficulty regenerate the scene bitwise.
SynthScene generate(std::uint64_t seed, Difficulty difficulty);

/// The scene's tool as a placement input (id 1, mesh faces, ground-truth mask).
ToolInstance scene_tool_instance(const SynthScene& scene);

/// Writes camera.json, image.png, depth.png, mask.png, tissue.ply, tool.obj
/// and truth.json under dir, creating it if needed.
void write_scene_dir(const SynthScene& scene, const std::filesystem::path& dir);

struct LatticeSpec {
    Vec3 center;
    double spacing = 0.0;
    int half_extent = 0;  // candidates per axis = 2*half_extent + 1

    void validate() const;  // spacing > 0, 0 <= half_extent <= 10 (21^3 candidates)
};

struct OracleResult {
    Vec3 offset;
    double iou = 0.0;
    std::size_t evaluated = 0;
};

/// Silhouette IoU at every lattice offset; returns the argmax, ties broken by
/// lexicographically smallest offset. Candidates evaluate in parallel; the
/// total order makes the result schedule-independent.
OracleResult exhaustive_search_oracle(const ToolInstance& tool, double sigma, const Camera& cam,
                                      const LatticeSpec& lattice, const RasterConfig& raster_cfg);

}  // namespace scenefuse
