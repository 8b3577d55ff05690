#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "inscribin/error.hpp"

namespace inscribin {

// Row-major single-channel raster. The tag keeps images, masks and
// probability maps from being mixed up even when they share a pixel type.
template <typename Pixel, typename Tag>
class Raster {
 public:
  using value_type = Pixel;

  Raster() = default;

  Raster(int width, int height, Pixel fill = Pixel{})
      : width_(width), height_(height), data_(checked_area(width, height), fill) {}

  Raster(int width, int height, std::vector<Pixel> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_area(width, height)) {
      fail(ErrorKind::InvalidDims, "raster data length does not match " + std::to_string(width) +
                                       "x" + std::to_string(height));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Pixel& at(int x, int y) { return data_[index(x, y)]; }
  const Pixel& at(int x, int y) const { return data_[index(x, y)]; }

  Pixel* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
  const Pixel* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

  std::span<Pixel> pixels() noexcept { return data_; }
  std::span<const Pixel> pixels() const noexcept { return data_; }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  static std::size_t checked_area(int width, int height) {
    if (width < 1 || height < 1) {
      fail(ErrorKind::InvalidDims,
           "raster must be at least 1x1, got " + std::to_string(width) + "x" + std::to_string(height));
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Pixel> data_;
};

struct GrayTag;
struct MaskTag;
struct ProbabilityTag;

// 8-bit intensities in [0, 255].
using GrayImage = Raster<std::uint8_t, GrayTag>;
// 1 = text foreground, 0 = background.
using BinaryMask = Raster<std::uint8_t, MaskTag>;
// Per-pixel text probabilities in [0, 1].
using ProbabilityMap = Raster<float, ProbabilityTag>;

inline float normalized(const GrayImage& img, int x, int y) {
  return static_cast<float>(img.at(x, y)) / 255.0f;
}

// Square window into an image; top-left corner plus side length.
struct Window {
  int x = 0;
  int y = 0;
  int side = 0;

  friend bool operator==(const Window&, const Window&) = default;
};

template <typename R>
R crop(const R& src, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > src.width() || y + h > src.height()) {
    fail(ErrorKind::InvalidDims, "crop rectangle outside raster");
  }
  R out(w, h);
  for (int r = 0; r < h; ++r) {
    const auto* in = src.row(y + r) + x;
    std::copy(in, in + w, out.row(r));
  }
  return out;
}

template <typename R>
R crop(const R& src, const Window& win) {
  return crop(src, win.x, win.y, win.side, win.side);
}

std::size_t count_foreground(const BinaryMask& mask);

BinaryMask threshold(const ProbabilityMap& prob, float cut);

BinaryMask invert(const BinaryMask& mask);

}  // namespace inscribin
