#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tote {

// HWC interleaved, values in [0,1].
struct Image {
  int h = 0, w = 0, c = 0;
  std::vector<double> px;

  Image() = default;
  Image(int h_, int w_, int c_) : h(h_), w(w_), c(c_), px(size_t(h_) * w_ * c_, 0.0) {}

  double& at(int y, int x, int ch) { return px[(size_t(y) * w + x) * c + ch]; }
  double at(int y, int x, int ch) const { return px[(size_t(y) * w + x) * c + ch]; }

  Image crop(int y0, int x0, int ch, int cw) const;  // clamped border replication
  Image resize_bilinear(int nh, int nw) const;

  // Clamp all samples into [0,1].
  void clamp01();
};

// Binary mask over a pixel grid.
struct Mask {
  int h = 0, w = 0;
  std::vector<uint8_t> on;

  Mask() = default;
  Mask(int h_, int w_) : h(h_), w(w_), on(size_t(h_) * w_, 0) {}

  uint8_t& at(int y, int x) { return on[size_t(y) * w + x]; }
  uint8_t at(int y, int x) const { return on[size_t(y) * w + x]; }
  int area() const;
};

// Row-major run-length encoding: alternating run lengths of 0s and 1s,
// starting with the zero run (possibly length 0).
std::vector<int> rle_encode(const Mask& m);
Mask rle_decode(const std::vector<int>& runs, int h, int w);

// Connected components of the set pixels, 4-connectivity.
int count_components(const Mask& m);

// 8-bit PNG I/O (RGB or grayscale written as RGB; reader handles the subset
// this project writes plus RGBA/gray).
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

}  // namespace tote
