#pragma once

#include <string>
#include <vector>

#include "lantern/common.hpp"

namespace lantern {

// Row-major interleaved image, values nominally in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c = 3)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, 0.0) {}

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// 8-bit PNG, channel values round(clamp(v,0,1)*255). RGB only.
void write_png(const std::string& path, const Image& img);

// Raw float32 container: header {width, height, channels} as u32
// little-endian, then row-major float32 data.
void write_float_image(const std::string& path, const Image& img);
Image read_float_image(const std::string& path);

}  // namespace lantern
