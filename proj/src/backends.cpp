#include "inscribin/backends.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "inscribin/imgcore.hpp"

namespace inscribin {

Polarity parse_polarity(std::string_view text) {
  if (text == "dark") return Polarity::DarkText;
  if (text == "light") return Polarity::LightText;
  fail(ErrorKind::InvalidParam, "polarity must be 'dark' or 'light', got '" + std::string(text) + "'");
}

int otsu_threshold(const GrayImage& img) {
  std::array<std::uint64_t, 256> hist{};
  for (auto v : img.pixels()) ++hist[v];

  const auto total = static_cast<double>(img.size());
  double sum_all = 0;
  for (int t = 0; t < 256; ++t) sum_all += static_cast<double>(t) * static_cast<double>(hist[t]);

  int best = -1;
  double best_var = 0;
  std::uint64_t n0 = 0;
  double sum0 = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += hist[t];
    sum0 += static_cast<double>(t) * static_cast<double>(hist[t]);
    const auto n1 = img.size() - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double w0 = static_cast<double>(n0) / total;
    const double w1 = static_cast<double>(n1) / total;
    const double diff = sum0 / static_cast<double>(n0) - (sum_all - sum0) / static_cast<double>(n1);
    const double var = w0 * w1 * diff * diff;
    if (best < 0 || var > best_var) {
      best = t;
      best_var = var;
    }
  }
  if (best < 0) return img.pixels().front();
  return best;
}

namespace {

ProbabilityMap apply_polarity(ProbabilityMap map, Polarity polarity) {
  if (polarity == Polarity::LightText) {
    for (auto& v : map.pixels()) v = 1.0f - v;
  }
  return map;
}

}  // namespace

ProbabilityMap otsu_binarize(const GrayImage& img, Polarity polarity) {
  const int t = otsu_threshold(img);
  ProbabilityMap out(img.width(), img.height());
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] <= t ? 1.0f : 0.0f;
  return apply_polarity(std::move(out), polarity);
}

void SauvolaParams::validate() const {
  if (window < 3 || window % 2 == 0) {
    fail(ErrorKind::InvalidParam, "Sauvola window must be odd and >= 3, got " + std::to_string(window));
  }
  if (!(r > 0)) fail(ErrorKind::InvalidParam, "Sauvola dynamic range r must be positive");
}

ProbabilityMap sauvola_binarize(const GrayImage& img, const SauvolaParams& params, Polarity polarity) {
  params.validate();
  const int w = img.width();
  const int h = img.height();
  const auto stride = static_cast<std::size_t>(w) + 1;

  // Integral images with a zero first row/column; exact in 64-bit.
  std::vector<std::uint64_t> sum(stride * (static_cast<std::size_t>(h) + 1), 0);
  std::vector<std::uint64_t> sq(sum.size(), 0);
  for (int y = 0; y < h; ++y) {
    std::uint64_t row_sum = 0;
    std::uint64_t row_sq = 0;
    const auto* src = img.row(y);
    for (int x = 0; x < w; ++x) {
      row_sum += src[x];
      row_sq += static_cast<std::uint64_t>(src[x]) * src[x];
      const std::size_t i = (static_cast<std::size_t>(y) + 1) * stride + static_cast<std::size_t>(x) + 1;
      sum[i] = sum[i - stride] + row_sum;
      sq[i] = sq[i - stride] + row_sq;
    }
  }
  auto box = [&](const std::vector<std::uint64_t>& t, int x0, int y0, int x1, int y1) {
    // Half-open [x0, x1) x [y0, y1).
    const auto at = [&](int x, int y) { return t[static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x)]; };
    return at(x1, y1) + at(x0, y0) - at(x0, y1) - at(x1, y0);
  };

  const int half = params.window / 2;
  ProbabilityMap out(w, h);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - half);
    const int y1 = std::min(h, y + half + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - half);
      const int x1 = std::min(w, x + half + 1);
      const auto n = static_cast<std::int64_t>(x1 - x0) * (y1 - y0);
      const auto s1 = static_cast<std::int64_t>(box(sum, x0, y0, x1, y1));
      const auto s2 = static_cast<std::int64_t>(box(sq, x0, y0, x1, y1));
      const double mean = static_cast<double>(s1) / static_cast<double>(n);
      const double var = static_cast<double>(n * s2 - s1 * s1) / static_cast<double>(n * n);
      const double stddev = std::sqrt(var);
      const double t = mean * (1.0 + params.k * (stddev / params.r - 1.0));
      out.at(x, y) = static_cast<double>(img.at(x, y)) < t ? 1.0f : 0.0f;
    }
  }
  return apply_polarity(std::move(out), polarity);
}

namespace {

class OtsuBinarizer final : public PatchBinarizer {
 public:
  explicit OtsuBinarizer(Polarity polarity) : polarity_(polarity) {}
  std::string name() const override { return "otsu"; }
  std::optional<int> input_side() const override { return std::nullopt; }
  ProbabilityMap predict(const GrayImage& patch, const Window&) const override {
    return otsu_binarize(patch, polarity_);
  }

 private:
  Polarity polarity_;
};

class SauvolaBinarizer final : public PatchBinarizer {
 public:
  SauvolaBinarizer(const SauvolaParams& params, Polarity polarity) : params_(params), polarity_(polarity) {
    params_.validate();
  }
  std::string name() const override { return "sauvola"; }
  std::optional<int> input_side() const override { return std::nullopt; }
  ProbabilityMap predict(const GrayImage& patch, const Window&) const override {
    return sauvola_binarize(patch, params_, polarity_);
  }

 private:
  SauvolaParams params_;
  Polarity polarity_;
};

class OracleBinarizer final : public PatchBinarizer {
 public:
  OracleBinarizer(BinaryMask gt, int side) : gt_(std::move(gt)), side_(side) {}
  std::string name() const override { return "oracle"; }
  std::optional<int> input_side() const override { return side_; }

  ProbabilityMap predict(const GrayImage& patch, const Window& source) const override {
    if (gt_.empty() || source.side < 1 || !gt_.contains(source.x, source.y) ||
        !gt_.contains(source.x + source.side - 1, source.y + source.side - 1)) {
      fail(ErrorKind::MissingGroundTruth, "no ground truth registered under the requested window");
    }
    const BinaryMask labels = resize_mask(crop(gt_, source), patch.width(), patch.height());
    ProbabilityMap out(patch.width(), patch.height());
    auto src = labels.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 1.0f : 0.0f;
    return out;
  }

 private:
  BinaryMask gt_;
  int side_;
};

}  // namespace

std::unique_ptr<PatchBinarizer> otsu_binarizer(Polarity polarity) {
  return std::make_unique<OtsuBinarizer>(polarity);
}

std::unique_ptr<PatchBinarizer> sauvola_binarizer(const SauvolaParams& params, Polarity polarity) {
  return std::make_unique<SauvolaBinarizer>(params, polarity);
}

std::unique_ptr<PatchBinarizer> oracle_binarizer(BinaryMask gt, int input_side) {
  if (input_side < 1) fail(ErrorKind::InvalidParam, "oracle input side must be >= 1");
  return std::make_unique<OracleBinarizer>(std::move(gt), input_side);
}

}  // namespace inscribin
