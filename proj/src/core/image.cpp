#include "tote/core/image.hpp"

#include <algorithm>
#include <cmath>

namespace tote {

Image Image::crop(int y0, int x0, int ch, int cw) const {
  Image out(ch, cw, c);
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x) {
      const int sy = std::clamp(y0 + y, 0, h - 1);
      const int sx = std::clamp(x0 + x, 0, w - 1);
      for (int k = 0; k < c; ++k) out.at(y, x, k) = at(sy, sx, k);
    }
  return out;
}

Image Image::resize_bilinear(int nh, int nw) const {
  Image out(nh, nw, c);
  const double sy = double(h) / nh;
  const double sx = double(w) / nw;
  for (int y = 0; y < nh; ++y)
    for (int x = 0; x < nw; ++x) {
      const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(h - 1));
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(w - 1));
      const int y0 = std::min(int(fy), h - 2 >= 0 ? h - 2 : 0);
      const int x0 = std::min(int(fx), w - 2 >= 0 ? w - 2 : 0);
      const int y1 = std::min(y0 + 1, h - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const double wy = fy - y0, wx = fx - x0;
      for (int k = 0; k < c; ++k) {
        out.at(y, x, k) = (1 - wy) * ((1 - wx) * at(y0, x0, k) + wx * at(y0, x1, k)) +
                          wy * ((1 - wx) * at(y1, x0, k) + wx * at(y1, x1, k));
      }
    }
  return out;
}

void Image::clamp01() {
  for (double& v : px) v = std::clamp(v, 0.0, 1.0);
}

int Mask::area() const {
  int a = 0;
  for (uint8_t v : on) a += v ? 1 : 0;
  return a;
}

std::vector<int> rle_encode(const Mask& m) {
  std::vector<int> runs;
  uint8_t cur = 0;
  int len = 0;
  for (size_t i = 0; i < m.on.size(); ++i) {
    const uint8_t v = m.on[i] ? 1 : 0;
    if (v == cur) {
      ++len;
    } else {
      runs.push_back(len);
      cur = v;
      len = 1;
    }
  }
  runs.push_back(len);
  return runs;
}

Mask rle_decode(const std::vector<int>& runs, int h, int w) {
  Mask m(h, w);
  size_t pos = 0;
  uint8_t cur = 0;
  for (int len : runs) {
    for (int i = 0; i < len && pos < m.on.size(); ++i) m.on[pos++] = cur;
    cur = cur ? 0 : 1;
  }
  return m;
}

int count_components(const Mask& m) {
  std::vector<uint8_t> seen(m.on.size(), 0);
  std::vector<int> stack;
  int count = 0;
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      const int idx = y * m.w + x;
      if (!m.on[size_t(idx)] || seen[size_t(idx)]) continue;
      ++count;
      stack.push_back(idx);
      seen[size_t(idx)] = 1;
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cy = cur / m.w, cx = cur % m.w;
        const int ny[4] = {cy - 1, cy + 1, cy, cy};
        const int nx[4] = {cx, cx, cx - 1, cx + 1};
        for (int k = 0; k < 4; ++k) {
          if (ny[k] < 0 || ny[k] >= m.h || nx[k] < 0 || nx[k] >= m.w) continue;
          const int nidx = ny[k] * m.w + nx[k];
          if (m.on[size_t(nidx)] && !seen[size_t(nidx)]) {
            seen[size_t(nidx)] = 1;
            stack.push_back(nidx);
          }
        }
      }
    }
  return count;
}

}  // namespace tote
