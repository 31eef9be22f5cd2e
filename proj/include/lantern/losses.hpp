#pragma once

#include <span>

#include "lantern/image.hpp"

namespace lantern {

// Mean squared color error over all entries; grad (when non-null) receives
// dL/dpred = 2 (pred - gt) / count.
double color_loss(std::span<const double> pred, std::span<const double> gt,
                  std::span<double> grad = {});

struct PatchLossOut {
  double total = 0;
  double mse = 0;
  double perceptual = 0;  // the lambda-weighted term
};

// Fine-tuning patch objective: MSE plus lambda times a self-contained
// perceptual term, the mean absolute difference of forward-difference image
// gradients between prediction and ground truth.
PatchLossOut patch_loss(const Image& pred, const Image& gt, double lambda,
                        Image* grad = nullptr);

}  // namespace lantern
