#include "scenefuse/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace scenefuse {

double iou(const BinaryMask& a, const BinaryMask& b) {
    require_same_dims(a.width, a.height, b.width, b.height, "mask a", "mask b");
    std::size_t inter = 0, uni = 0;
    const std::size_t n = a.values.size();
#pragma omp parallel for schedule(static) reduction(+ : inter, uni)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
        inter += a.values[i] & b.values[i];
        uni += a.values[i] | b.values[i];
    }
    if (uni == 0) return 1.0;
    return double(inter) / double(uni);
}

double psnr(const ImageRGB& a, const ImageRGB& b, const BinaryMask& keep) {
    require_same_dims(a.width, a.height, b.width, b.height, "image a", "image b");
    require_same_dims(keep.width, keep.height, a.width, a.height, "mask", "image a");
    if (keep.semantics != MaskSemantics::Keep)
        throw InvalidArgument("psnr: mask must carry KEEP semantics");

    double se = 0.0;
    std::size_t count = 0;
    const std::size_t n = keep.values.size();
#pragma omp parallel for schedule(static) reduction(+ : se, count)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
        if (!keep.values[i]) continue;
        const double* pa = &a.pixels[3 * i];
        const double* pb = &b.pixels[3 * i];
        for (int c = 0; c < 3; ++c) {
            const double d = pa[c] - pb[c];
            se += d * d;
        }
        ++count;
    }
    if (count == 0) throw DegenerateError("psnr: empty mask");
    const double mse = se / (3.0 * double(count));
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kWin = 11;
constexpr int kRad = kWin / 2;

std::array<double, kWin> gaussian_taps() {
    std::array<double, kWin> g{};
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - kRad;
        g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

std::vector<double> luma(const ImageRGB& img) {
    std::vector<double> out(std::size_t(img.width) * img.height);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(out.size()); ++i) {
        const double* p = &img.pixels[3 * i];
        out[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
    return out;
}

// Separable Gaussian filter evaluated only where the full window fits.
// Row pass fills columns [kRad, w-1-kRad]; column pass consumes it at valid
// centers only.
std::vector<double> blur_valid(const std::vector<double>& in, int w, int h,
                               const std::array<double, kWin>& g) {
    std::vector<double> rowpass(in.size(), 0.0), out(in.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = kRad; x < w - kRad; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWin; ++k) s += g[k] * in[std::size_t(y) * w + x - kRad + k];
            rowpass[std::size_t(y) * w + x] = s;
        }
    }
#pragma omp parallel for schedule(static)
    for (int y = kRad; y < h - kRad; ++y) {
        for (int x = kRad; x < w - kRad; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWin; ++k) s += g[k] * rowpass[std::size_t(y - kRad + k) * w + x];
            out[std::size_t(y) * w + x] = s;
        }
    }
    return out;
}

}  // namespace

double ssim(const ImageRGB& a, const ImageRGB& b, const BinaryMask& keep) {
    require_same_dims(a.width, a.height, b.width, b.height, "image a", "image b");
    require_same_dims(keep.width, keep.height, a.width, a.height, "mask", "image a");
    if (keep.semantics != MaskSemantics::Keep)
        throw InvalidArgument("ssim: mask must carry KEEP semantics");

    const int w = a.width, h = a.height;
    const auto g = gaussian_taps();
    const std::vector<double> la = luma(a);
    const std::vector<double> lb = luma(b);

    std::vector<double> laa(la.size()), lbb(la.size()), lab(la.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(la.size()); ++i) {
        laa[i] = la[i] * la[i];
        lbb[i] = lb[i] * lb[i];
        lab[i] = la[i] * lb[i];
    }

    const std::vector<double> mu_a = blur_valid(la, w, h, g);
    const std::vector<double> mu_b = blur_valid(lb, w, h, g);
    const std::vector<double> m_aa = blur_valid(laa, w, h, g);
    const std::vector<double> m_bb = blur_valid(lbb, w, h, g);
    const std::vector<double> m_ab = blur_valid(lab, w, h, g);

    constexpr double c1 = 0.01 * 0.01;  // (K1 * L)^2 with L = 1
    constexpr double c2 = 0.03 * 0.03;

    double sum = 0.0;
    std::size_t count = 0;
#pragma omp parallel for schedule(static) reduction(+ : sum, count)
    for (int y = kRad; y < h - kRad; ++y) {
        for (int x = kRad; x < w - kRad; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            if (!keep.values[i]) continue;
            const double ma = mu_a[i], mb = mu_b[i];
            const double va = m_aa[i] - ma * ma;
            const double vb = m_bb[i] - mb * mb;
            const double cov = m_ab[i] - ma * mb;
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    }
    if (count == 0)
        throw DegenerateError("ssim: no masked window centers with a full 11x11 window in frame");
    return sum / double(count);
}

}  // namespace scenefuse
