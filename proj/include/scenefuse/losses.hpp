#pragma once

#include "scenefuse/types.hpp"

namespace scenefuse {

/// Inverse-depth pixels below this are treated as invalid (guards the 1/D
/// term against missing-measurement zeros).
constexpr double kEpsilonDepth = 1e-6;

/// Sum over masked pixels of the per-channel L1 color difference
/// (unnormalized sum).
double color_loss(const ImageRGB& rendered, const ImageRGB& reference, const BinaryMask& keep);

/// Same loss divided by the number of masked pixels (convenience; 0 for an
/// all-zero mask).
double color_loss_mean(const ImageRGB& rendered, const ImageRGB& reference,
                       const BinaryMask& keep);

struct DepthLoss {
    double inverse_l1 = 0.0;        // sum over masked valid pixels of |1/Dhat - 1/D|
    double inverse_l1_mean = 0.0;   // inverse_l1 / (number of masked valid pixels)
    double correlation_term = 0.0;  // 1 - Pearson(Dhat, D) over masked valid pixels

    double total() const { return inverse_l1 + correlation_term; }
};

/// Inverse-depth L1 plus decorrelation. A pixel is valid when both depths
/// exceed kEpsilonDepth. Throws DegenerateError when fewer than 2 masked
/// valid pixels exist or either depth set has zero variance (correlation
/// undefined).
DepthLoss depth_loss(const DepthMap& rendered, const DepthMap& reference, const BinaryMask& keep);

/// Morphological dilation with a kernel x kernel square structuring element;
/// the kernel is clipped at image borders. kernel must be odd and >= 1.
BinaryMask dilate_mask(const BinaryMask& mask, int kernel);

}  // namespace scenefuse
