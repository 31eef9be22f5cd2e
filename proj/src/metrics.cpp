#include "lantern/metrics.hpp"

#include <cmath>

#include "lantern/kernels.hpp"

namespace lantern {

double psnr(const Image& a, const Image& b) {
  LANTERN_CHECK(a.width == b.width && a.height == b.height &&
                    a.channels == b.channels,
                "psnr: shape mismatch");
  LANTERN_CHECK(!a.data.empty(), "psnr: empty image");
  for (const Image* img : {&a, &b})
    for (double v : img->data)
      LANTERN_CHECK(v >= -1e-6 && v <= 1.0 + 1e-6,
                    "psnr: image values must lie in [0,1]");
  const double mse =
      kernels::ops_f64().sq_diff_sum(a.data.data(), b.data.data(),
                                     a.data.size()) /
      static_cast<double>(a.data.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

}  // namespace lantern
