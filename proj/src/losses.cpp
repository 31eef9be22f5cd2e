#include "lantern/losses.hpp"

#include <cmath>

#include "lantern/kernels.hpp"

namespace lantern {

double color_loss(std::span<const double> pred, std::span<const double> gt,
                  std::span<double> grad) {
  LANTERN_CHECK(pred.size() == gt.size(), "color_loss: shape mismatch (",
                pred.size(), " vs ", gt.size(), ")");
  LANTERN_CHECK(!pred.empty(), "color_loss: empty batch");
  const double count = static_cast<double>(pred.size());
  const double loss =
      kernels::ops_f64().sq_diff_sum(pred.data(), gt.data(), pred.size()) /
      count;
  if (!grad.empty()) {
    LANTERN_CHECK(grad.size() == pred.size(),
                  "color_loss: gradient shape mismatch");
    for (std::size_t i = 0; i < pred.size(); ++i)
      grad[i] = 2.0 * (pred[i] - gt[i]) / count;
  }
  return loss;
}

PatchLossOut patch_loss(const Image& pred, const Image& gt, double lambda,
                        Image* grad) {
  LANTERN_CHECK(pred.width == gt.width && pred.height == gt.height &&
                    pred.channels == gt.channels,
                "patch_loss: shape mismatch");
  LANTERN_CHECK(pred.width == pred.height, "patch_loss: patches are square");
  LANTERN_CHECK(lambda >= 0, "patch_loss: lambda must be >= 0");
  const int W = pred.width, H = pred.height, C = pred.channels;

  PatchLossOut out;
  out.mse = color_loss(pred.data, gt.data,
                       grad ? std::span<double>(grad->data) : std::span<double>());

  // Forward-difference gradients in x and y; one term per valid pair per
  // channel.
  const double n_terms =
      static_cast<double>(C) * ((W - 1) * H + W * (H - 1));
  double acc = 0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        if (x + 1 < W) {
          const double dp = pred.at(x + 1, y, c) - pred.at(x, y, c);
          const double dg = gt.at(x + 1, y, c) - gt.at(x, y, c);
          const double t = dp - dg;
          acc += std::abs(t);
          if (grad && t != 0.0) {
            const double s = (t > 0 ? 1.0 : -1.0) * lambda / n_terms;
            grad->at(x + 1, y, c) += s;
            grad->at(x, y, c) -= s;
          }
        }
        if (y + 1 < H) {
          const double dp = pred.at(x, y + 1, c) - pred.at(x, y, c);
          const double dg = gt.at(x, y + 1, c) - gt.at(x, y, c);
          const double t = dp - dg;
          acc += std::abs(t);
          if (grad && t != 0.0) {
            const double s = (t > 0 ? 1.0 : -1.0) * lambda / n_terms;
            grad->at(x, y + 1, c) += s;
            grad->at(x, y, c) -= s;
          }
        }
      }
  out.perceptual = lambda * acc / n_terms;
  out.total = out.mse + out.perceptual;
  return out;
}

}  // namespace lantern
