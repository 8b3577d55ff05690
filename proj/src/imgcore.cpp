#include "inscribin/imgcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace inscribin {

std::size_t count_foreground(const BinaryMask& mask) {
  const auto px = mask.pixels();
  return static_cast<std::size_t>(std::count_if(px.begin(), px.end(), [](auto v) { return v != 0; }));
}

BinaryMask threshold(const ProbabilityMap& prob, float cut) {
  BinaryMask out(prob.width(), prob.height());
  auto src = prob.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > cut ? 1 : 0;
  return out;
}

BinaryMask invert(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  auto src = mask.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 0 : 1;
  return out;
}

namespace {

class DisjointSets {
 public:
  int make() {
    parent_.push_back(static_cast<int>(parent_.size()));
    return parent_.back();
  }

  int find(int x) {
    int root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const int next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent_[b] = a;
    else parent_[a] = b;
  }

 private:
  std::vector<int> parent_;
};

}  // namespace

LabelImage label_components(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  LabelImage result{Raster<int, LabelTag>(w, h, 0), {}};
  auto& labels = result.labels;

  // First pass: provisional labels (0-based in the disjoint sets, stored +1).
  DisjointSets sets;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      int current = 0;
      auto visit = [&](int nx, int ny) {
        if (nx < 0 || nx >= w || ny < 0) return;
        const int other = labels.at(nx, ny);
        if (other == 0) return;
        if (current == 0) current = other;
        else sets.unite(current - 1, other - 1);
      };
      visit(x - 1, y);
      visit(x - 1, y - 1);
      visit(x, y - 1);
      visit(x + 1, y - 1);
      labels.at(x, y) = current != 0 ? current : sets.make() + 1;
    }
  }

  // Second pass: resolve to roots and renumber by first encounter.
  std::vector<int> final_label;
  auto& comps = result.components;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int& l = labels.at(x, y);
      if (l == 0) continue;
      const auto root = static_cast<std::size_t>(sets.find(l - 1));
      if (final_label.size() <= root) final_label.resize(root + 1, 0);
      if (final_label[root] == 0) {
        comps.push_back(Component{static_cast<int>(comps.size()) + 1, BoundingBox{x, y, x, y}, 0});
        final_label[root] = static_cast<int>(comps.size());
      }
      l = final_label[root];
      auto& c = comps[static_cast<std::size_t>(l - 1)];
      c.bbox.x_min = std::min(c.bbox.x_min, x);
      c.bbox.x_max = std::max(c.bbox.x_max, x);
      c.bbox.y_max = y;
      ++c.pixel_count;
    }
  }
  return result;
}

std::vector<Component> connected_components(const BinaryMask& mask) {
  return label_components(mask).components;
}

StructuringElement::StructuringElement(int kernel_w, int kernel_h)
    : kernel_w_(kernel_w), kernel_h_(kernel_h) {
  if (kernel_w < 1 || kernel_h < 1 || kernel_w % 2 == 0 || kernel_h % 2 == 0) {
    fail(ErrorKind::InvalidParam, "structuring element sides must be odd and >= 1, got " +
                                      std::to_string(kernel_w) + "x" + std::to_string(kernel_h));
  }
}

int odd_kernel_size(double extent) {
  if (!(extent > 1.0)) return 1;
  return 2 * static_cast<int>(std::floor((extent - 1.0) / 2.0 + 0.5)) + 1;
}

namespace {

// Sliding OR along one axis using a running count of set pixels.
void dilate_line(const std::uint8_t* in, std::uint8_t* out, int n, std::ptrdiff_t step, int radius) {
  int count = 0;
  for (int i = 0; i < std::min(radius, n); ++i) count += in[i * step] ? 1 : 0;
  for (int i = 0; i < n; ++i) {
    const int enter = i + radius;
    const int leave = i - radius - 1;
    if (enter < n) count += in[enter * step] ? 1 : 0;
    if (leave >= 0) count -= in[leave * step] ? 1 : 0;
    out[i * step] = count > 0 ? 1 : 0;
  }
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask horizontal(w, h);
  for (int y = 0; y < h; ++y) dilate_line(mask.row(y), horizontal.row(y), w, 1, se.kernel_w() / 2);
  BinaryMask out(w, h);
  for (int x = 0; x < w; ++x) {
    dilate_line(horizontal.row(0) + x, out.row(0) + x, h, w, se.kernel_h() / 2);
  }
  return out;
}

BinaryMask rasterize_boxes(const std::vector<Component>& components, int width, int height) {
  BinaryMask out(width, height);
  for (const auto& c : components) {
    const int x0 = std::max(c.bbox.x_min, 0);
    const int x1 = std::min(c.bbox.x_max, width - 1);
    for (int y = std::max(c.bbox.y_min, 0); y <= std::min(c.bbox.y_max, height - 1); ++y) {
      for (int x = x0; x <= x1; ++x) out.at(x, y) = 1;
    }
  }
  return out;
}

namespace {

struct Tap {
  int i0;
  int i1;
  float frac;
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in - 1);
    taps[static_cast<std::size_t>(i)] = Tap{i0, i1, static_cast<float>(src - i0)};
  }
  return taps;
}

inline float lerp(float a, float b, float t) { return a + t * (b - a); }

template <typename Out, typename In, typename Store>
Out resize_bilinear(const In& src, int out_w, int out_h, Store store) {
  if (out_w < 1 || out_h < 1) fail(ErrorKind::InvalidDims, "resize target must be at least 1x1");
  Out out(out_w, out_h);
  const auto xs = bilinear_taps(src.width(), out_w);
  const auto ys = bilinear_taps(src.height(), out_h);
  for (int y = 0; y < out_h; ++y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    const auto* r0 = src.row(ty.i0);
    const auto* r1 = src.row(ty.i1);
    auto* dst = out.row(y);
    for (int x = 0; x < out_w; ++x) {
      const auto& tx = xs[static_cast<std::size_t>(x)];
      const float top = lerp(static_cast<float>(r0[tx.i0]), static_cast<float>(r0[tx.i1]), tx.frac);
      const float bottom = lerp(static_cast<float>(r1[tx.i0]), static_cast<float>(r1[tx.i1]), tx.frac);
      dst[x] = store(lerp(top, bottom, ty.frac));
    }
  }
  return out;
}

}  // namespace

GrayImage resize_gray(const GrayImage& img, int out_w, int out_h) {
  return resize_bilinear<GrayImage>(img, out_w, out_h, [](float v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  });
}

ProbabilityMap resize_probability(const ProbabilityMap& prob, int out_w, int out_h) {
  return resize_bilinear<ProbabilityMap>(prob, out_w, out_h,
                                         [](float v) { return std::clamp(v, 0.0f, 1.0f); });
}

BinaryMask resize_mask(const BinaryMask& mask, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) fail(ErrorKind::InvalidDims, "resize target must be at least 1x1");
  const auto nearest = [](int i, int in, int out) {
    const long long src = (2LL * i + 1) * in / (2LL * out);
    return static_cast<int>(std::min<long long>(src, in - 1));
  };
  BinaryMask out(out_w, out_h);
  std::vector<int> xs(static_cast<std::size_t>(out_w));
  for (int x = 0; x < out_w; ++x) xs[static_cast<std::size_t>(x)] = nearest(x, mask.width(), out_w);
  for (int y = 0; y < out_h; ++y) {
    const auto* src = mask.row(nearest(y, mask.height(), out_h));
    auto* dst = out.row(y);
    for (int x = 0; x < out_w; ++x) dst[x] = src[xs[static_cast<std::size_t>(x)]] ? 1 : 0;
  }
  return out;
}

}  // namespace inscribin
