#pragma once

#include <optional>
#include <string>

#include "scenefuse/types.hpp"

namespace scenefuse {

/// Per-region evaluation record. `label` is "tissue" or a tool id rendered as
/// a decimal string. psnr is +inf for identical images (serialized as "inf").
struct RegionReport {
    std::string label;
    std::optional<double> iou;
    double psnr = 0.0;
    double ssim = 0.0;
};

/// |a n b| / |a u b|; 1.0 when both masks are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

/// 10*log10(1/MSE) with peak 1.0, MSE over masked pixels and all channels.
/// Identical pixels yield +infinity. Throws on an empty mask.
double psnr(const ImageRGB& a, const ImageRGB& b, const BinaryMask& keep);

/// Mean structural similarity on BT.601 luma: 11x11 Gaussian window with
/// sigma 1.5, K1=0.01, K2=0.03, dynamic range 1.0. Averaged over window
/// centers whose center pixel is masked and whose window lies fully inside
/// the image. Throws when no such center exists.
double ssim(const ImageRGB& a, const ImageRGB& b, const BinaryMask& keep);

}  // namespace scenefuse
