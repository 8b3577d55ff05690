#pragma once

#include <vector>

#include "inscribin/raster.hpp"

namespace inscribin {

// Inclusive pixel bounding box.
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const noexcept { return x_max - x_min + 1; }
  int height() const noexcept { return y_max - y_min + 1; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Component {
  int label = 0;
  BoundingBox bbox;
  long pixel_count = 0;

  int height() const noexcept { return bbox.height(); }

  friend bool operator==(const Component&, const Component&) = default;
};

struct LabelImage {
  // 0 = background, otherwise the component label (1..N).
  Raster<int, struct LabelTag> labels;
  std::vector<Component> components;
};

/// 8-connected labeling. Labels are 1..N in order of first encounter in a
/// row-major scan.
LabelImage label_components(const BinaryMask& mask);

std::vector<Component> connected_components(const BinaryMask& mask);

// All-ones rectangular structuring element with odd sides.
class StructuringElement {
 public:
  StructuringElement(int kernel_w, int kernel_h);

  int kernel_w() const noexcept { return kernel_w_; }
  int kernel_h() const noexcept { return kernel_h_; }

 private:
  int kernel_w_;
  int kernel_h_;
};

/// Rounds a real-valued kernel extent to the nearest odd integer (halves
/// round up), never below 1.
int odd_kernel_size(double extent);

/// Binary dilation by a centered rectangle; pixels outside the image count
/// as background.
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se);

/// Filled rectangles for each component bounding box.
BinaryMask rasterize_boxes(const std::vector<Component>& components, int width, int height);

// Bilinear, pixel-center aligned (sample point (i + 0.5) * scale - 0.5,
// clamped to the source).
GrayImage resize_gray(const GrayImage& img, int out_w, int out_h);
ProbabilityMap resize_probability(const ProbabilityMap& prob, int out_w, int out_h);

// Nearest neighbor; source index floor((i + 0.5) * scale).
BinaryMask resize_mask(const BinaryMask& mask, int out_w, int out_h);

}  // namespace inscribin
