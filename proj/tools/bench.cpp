// Benchmark: OpenMP kernels against their serial references, with agreement
// checks. Run with --quick for a fast smoke pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include <omp.h>

#include "scenefuse/geometry.hpp"
#include "scenefuse/losses.hpp"
#include "scenefuse/metrics.hpp"
#include "scenefuse/placement.hpp"
#include "scenefuse/reference.hpp"
#include "scenefuse/render.hpp"
#include "scenefuse/synth.hpp"
#include "scenefuse/types.hpp"

using namespace scenefuse;

namespace {

template <typename F>
double time_of(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

void report(const char* name, double par, double ser, bool agree) {
    std::printf("%-22s parallel %8.4f s   serial %8.4f s   speedup %5.2fx   %s\n", name, par, ser,
                par > 0 ? ser / par : 0.0, agree ? "agree" : "MISMATCH");
}

double max_abs_diff(const ImageRGB& a, const ImageRGB& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        m = std::max(m, std::abs(a.pixels[i] - b.pixels[i]));
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i)
        if (std::string_view(argv[i]) == "--quick") quick = true;

    std::printf("threads: %d\n", omp_get_max_threads());
    const SynthScene scene = generate(7, Difficulty::Displaced);
    const ToolInstance tool = scene_tool_instance(scene);
    const Camera& cam = scene.camera;
    int failures = 0;

    {
        // Splat compositing over the full synthetic tissue cloud.
        SplatSet splats;
        const std::size_t n = scene.tissue.positions.size();
        splats.centers = scene.tissue.positions;
        splats.colors = scene.tissue.colors;
        splats.opacities.assign(n, 0.9);
        splats.radii.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            splats.radii[i] = 1.4 * splats.centers[i].z / cam.fx();
        RasterConfig cfg;
        cfg.alpha_epsilon = 1e-12;  // keep truncation out of the comparison
        RenderOutput par, ser;
        const int reps = quick ? 1 : 3;
        const double tp = time_of([&] {
            for (int r = 0; r < reps; ++r) par = render(splats, cam, cfg);
        });
        const double ts = time_of([&] {
            for (int r = 0; r < reps; ++r) ser = reference::render_reference(splats, cam, cfg);
        });
        const double diff = max_abs_diff(par.color, ser.color);
        report("render", tp / reps, ts / reps, diff <= 1e-9);
        if (diff > 1e-9) ++failures;
    }

    {
        const int reps = quick ? 5 : 50;
        BinaryMask par(1, 1, MaskSemantics::Tool), ser(1, 1, MaskSemantics::Tool);
        const double tp = time_of([&] {
            for (int r = 0; r < reps; ++r) par = dilate_mask(scene.mask, 47);
        });
        const double ts = time_of([&] {
            for (int r = 0; r < reps; ++r) ser = reference::dilate_reference(scene.mask, 47);
        });
        const bool agree = par.values == ser.values;
        report("dilate 47x47", tp / reps, ts / reps, agree);
        if (!agree) ++failures;
    }

    {
        const int reps = quick ? 2 : 10;
        const BinaryMask keep(scene.image.width, scene.image.height, MaskSemantics::Keep, 1);
        ImageRGB other = scene.image;
        for (std::size_t i = 0; i < other.pixels.size(); ++i)
            other.pixels[i] = std::min(1.0, other.pixels[i] * 0.97 + 0.01);
        double par = 0.0, ser = 0.0;
        const double tp = time_of([&] {
            for (int r = 0; r < reps; ++r) par = ssim(scene.image, other, keep);
        });
        const double ts = time_of([&] {
            for (int r = 0; r < reps; ++r) ser = reference::ssim_reference(scene.image, other, keep);
        });
        const bool agree = std::abs(par - ser) <= 1e-9;
        report("ssim", tp / reps, ts / reps, agree);
        if (!agree) ++failures;
    }

    {
        LatticeSpec lattice;
        lattice.center = scene.true_offset;
        lattice.spacing = 0.01 * scene.tissue_diag;
        lattice.half_extent = quick ? 3 : 8;
        OracleResult par, ser;
        const double tp = time_of([&] {
            par = exhaustive_search_oracle(tool, scene.true_sigma, cam, lattice, RasterConfig{});
        });
        const double ts = time_of([&] {
            ser = reference::exhaustive_search_serial(tool, scene.true_sigma, cam, lattice,
                                                      RasterConfig{});
        });
        const bool agree = par.offset == ser.offset && par.iou == ser.iou;
        report("lattice search", tp, ts, agree);
        if (!agree) ++failures;
    }

    if (failures) std::printf("%d kernel(s) disagree with their reference\n", failures);
    return failures == 0 ? 0 : 1;
}
