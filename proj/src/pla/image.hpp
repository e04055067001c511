#pragma once

#include <string>
#include <vector>

#include "pla/common.hpp"

namespace pla {

// Interleaved float image, values in [0,1], row-major, channels last.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> pixels;  // height * width * channels

  float at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  static Image filled(int w, int h, int c, float v) {
    Image im;
    im.width = w;
    im.height = h;
    im.channels = c;
    im.pixels.assign(static_cast<std::size_t>(w) * h * c, v);
    return im;
  }
};

// Reads PNG (8-bit gray/RGB/RGBA, non-interlaced) or binary PPM (P6),
// dispatched on the file signature.
Image read_image(const std::string& path);
// Writes by extension: ".png" or ".ppm".
void write_image(const std::string& path, const Image& img);

// Bilinear resize (half-pixel centers).
Image resize_bilinear(const Image& img, int out_w, int out_h);

}  // namespace pla
