#pragma once

#include "lantern/image.hpp"

namespace lantern {

// Peak signal-to-noise ratio in dB for unit-range images:
// 10 log10(1 / MSE), capped at 99.0 when the images are identical.
inline constexpr double kPsnrCap = 99.0;

double psnr(const Image& a, const Image& b);

}  // namespace lantern
