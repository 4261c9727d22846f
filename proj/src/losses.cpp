#include "scenefuse/losses.hpp"

#include <algorithm>
#include <cmath>

namespace scenefuse {

namespace {

void check_loss_inputs(int wr, int hr, int wf, int hf, const BinaryMask& keep) {
    require_same_dims(wr, hr, wf, hf, "rendered", "reference");
    require_same_dims(keep.width, keep.height, wf, hf, "mask", "reference");
    if (keep.semantics != MaskSemantics::Keep)
        throw InvalidArgument("loss mask must carry KEEP semantics");
}

}  // namespace

double color_loss(const ImageRGB& rendered, const ImageRGB& reference, const BinaryMask& keep) {
    check_loss_inputs(rendered.width, rendered.height, reference.width, reference.height, keep);
    const std::size_t npx = keep.values.size();
    double sum = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : sum)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(npx); ++i) {
        if (!keep.values[i]) continue;
        const double* a = &rendered.pixels[3 * i];
        const double* b = &reference.pixels[3 * i];
        sum += std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
    }
    return sum;
}

double color_loss_mean(const ImageRGB& rendered, const ImageRGB& reference,
                       const BinaryMask& keep) {
    const std::size_t n = keep.count_set();
    if (n == 0) return 0.0;
    return color_loss(rendered, reference, keep) / double(n);
}

DepthLoss depth_loss(const DepthMap& rendered, const DepthMap& reference, const BinaryMask& keep) {
    check_loss_inputs(rendered.width, rendered.height, reference.width, reference.height, keep);

    double sum_l1 = 0.0, sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
    std::size_t count = 0;
    const std::size_t npx = keep.values.size();
#pragma omp parallel for schedule(static) \
    reduction(+ : sum_l1, sa, sb, saa, sbb, sab, count)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(npx); ++i) {
        if (!keep.values[i]) continue;
        const double a = rendered.values[i], b = reference.values[i];
        if (a <= kEpsilonDepth || b <= kEpsilonDepth) continue;
        sum_l1 += std::abs(1.0 / a - 1.0 / b);
        sa += a;
        sb += b;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
        ++count;
    }

    if (count < 2)
        throw DegenerateError("depth_loss: correlation undefined, fewer than 2 masked valid pixels");
    const double n = double(count);
    const double var_a = saa / n - (sa / n) * (sa / n);
    const double var_b = sbb / n - (sb / n) * (sb / n);
    const double cov = sab / n - (sa / n) * (sb / n);
    if (!(var_a > 0.0) || !(var_b > 0.0))
        throw DegenerateError("depth_loss: correlation undefined, zero variance in masked depths");

    DepthLoss out;
    out.inverse_l1 = sum_l1;
    out.inverse_l1_mean = sum_l1 / n;
    out.correlation_term = 1.0 - cov / std::sqrt(var_a * var_b);
    return out;
}

BinaryMask dilate_mask(const BinaryMask& mask, int kernel) {
    if (kernel < 1 || kernel % 2 == 0)
        throw InvalidArgument("dilate_mask: kernel must be odd and >= 1");
    if (kernel == 1) return mask;

    const int r = (kernel - 1) / 2;
    const int w = mask.width, h = mask.height;

    // A square kernel separates into a horizontal then a vertical pass.
    BinaryMask horiz(w, h, mask.semantics);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t v = 0;
            const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
            for (int xx = x0; xx <= x1 && !v; ++xx) v = mask.at(xx, y);
            horiz.at(x, y) = v;
        }
    }

    BinaryMask out(w, h, mask.semantics);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
        for (int x = 0; x < w; ++x) {
            std::uint8_t v = 0;
            for (int yy = y0; yy <= y1 && !v; ++yy) v = horiz.at(x, yy);
            out.at(x, y) = v;
        }
    }
    return out;
}

}  // namespace scenefuse
