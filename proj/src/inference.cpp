#include "inscribin/inference.hpp"

#include <algorithm>
#include <cmath>

#include "inscribin/parallel.hpp"

namespace inscribin {

void InferenceConfig::validate() const {
  if (scales.empty()) fail(ErrorKind::InvalidParam, "at least one sliding-window scale is required");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] < 1) fail(ErrorKind::InvalidParam, "scales must be >= 1");
    if (i > 0 && scales[i] <= scales[i - 1]) fail(ErrorKind::InvalidParam, "scales must be strictly ascending");
  }
  if (!(stride_fraction > 0 && stride_fraction <= 1)) fail(ErrorKind::InvalidParam, "stride fraction must lie in (0, 1]");
  if (!(threshold > 0 && threshold < 1)) fail(ErrorKind::InvalidParam, "threshold must lie in (0, 1)");
  if (!(refine_k > 0)) fail(ErrorKind::InvalidParam, "refine_k must be positive");
  if (!(refine_overlap >= 0 && refine_overlap < 1)) fail(ErrorKind::InvalidParam, "refine overlap must lie in [0, 1)");
  if (!(epsilon >= 0)) fail(ErrorKind::InvalidParam, "epsilon must be >= 0");
}

std::vector<Window> sliding_window_locations(int width, int height, int scale, double stride_fraction) {
  if (scale < 1) fail(ErrorKind::InvalidParam, "window scale must be >= 1");
  const int side = std::min({scale, width, height});
  const int stride = std::max(1, static_cast<int>(std::floor(side * stride_fraction)));
  std::vector<Window> out;
  for (int y : grid_offsets(height, side, stride)) {
    for (int x : grid_offsets(width, side, stride)) out.push_back(Window{x, y, side});
  }
  return out;
}

SlidingWindows sliding_window(const GrayImage& img, int scale, double stride_fraction) {
  SlidingWindows sw;
  sw.locations = sliding_window_locations(img.width(), img.height(), scale, stride_fraction);
  sw.patches.reserve(sw.locations.size());
  for (const auto& loc : sw.locations) sw.patches.push_back(crop(img, loc));
  return sw;
}

Accumulator::Accumulator(int width, int height, double epsilon)
    : sum_(width, height, 0.0), count_(width, height, 0), epsilon_(epsilon) {}

void Accumulator::add(const ProbabilityMap& pred, const Window& loc) {
  if (pred.width() != loc.side || pred.height() != loc.side) {
    fail(ErrorKind::DimMismatch, "prediction is " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                                     " but its window side is " + std::to_string(loc.side));
  }
  if (loc.x < 0 || loc.y < 0 || loc.x + loc.side > sum_.width() || loc.y + loc.side > sum_.height()) {
    fail(ErrorKind::DimMismatch, "window lies outside the accumulator");
  }
  for (int r = 0; r < loc.side; ++r) {
    const float* src = pred.row(r);
    double* s = sum_.row(loc.y + r) + loc.x;
    int* c = count_.row(loc.y + r) + loc.x;
    for (int i = 0; i < loc.side; ++i) {
      s[i] += src[i];
      ++c[i];
    }
  }
}

ProbabilityMap Accumulator::average() const {
  ProbabilityMap out(sum_.width(), sum_.height());
  auto s = sum_.pixels();
  auto c = count_.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>(s[i] / (static_cast<double>(c[i]) + epsilon_));
  }
  return out;
}

ProbabilityMap Accumulator::mean() const {
  ProbabilityMap out(sum_.width(), sum_.height());
  auto s = sum_.pixels();
  auto c = count_.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = c[i] == 0 ? 0.0f : static_cast<float>(s[i] / c[i]);
  }
  return out;
}

ProbabilityMap merge_patch_pred(std::span<const ProbabilityMap> preds, std::span<const Window> locations,
                                int height, int width) {
  if (preds.size() != locations.size()) fail(ErrorKind::DimMismatch, "predictions and locations differ in length");
  Accumulator acc(width, height);
  for (std::size_t i = 0; i < preds.size(); ++i) acc.add(preds[i], locations[i]);
  return acc.mean();
}

namespace {

ProbabilityMap predict_one(const GrayImage& img, const PatchBinarizer& backend, const Window& win) {
  GrayImage patch = crop(img, win);
  const auto side = backend.input_side();
  if (side && *side != win.side) patch = resize_gray(patch, *side, *side);
  ProbabilityMap pred = backend.predict(patch, win);
  if (pred.width() != patch.width() || pred.height() != patch.height()) {
    fail(ErrorKind::InferenceError, "backend '" + backend.name() + "' changed the patch size");
  }
  if (pred.width() != win.side || pred.height() != win.side) pred = resize_probability(pred, win.side, win.side);
  return pred;
}

// Predicts windows in parallel chunks and feeds them to `sink` in window
// order, so accumulation is identical for any worker count.
template <typename Sink>
void for_each_prediction(const GrayImage& img, const PatchBinarizer& backend, std::span<const Window> windows,
                         int workers, Sink sink) {
  const std::size_t chunk = static_cast<std::size_t>(std::max(1, workers)) * 4;
  std::vector<ProbabilityMap> preds;
  for (std::size_t begin = 0; begin < windows.size(); begin += chunk) {
    const std::size_t n = std::min(chunk, windows.size() - begin);
    preds.assign(n, ProbabilityMap{});
    parallel_for(n, workers, [&](std::size_t i) { preds[i] = predict_one(img, backend, windows[begin + i]); });
    for (std::size_t i = 0; i < n; ++i) sink(preds[i], windows[begin + i]);
  }
}

}  // namespace

std::vector<ProbabilityMap> predict_windows(const GrayImage& img, const PatchBinarizer& backend,
                                            std::span<const Window> windows, int workers) {
  std::vector<ProbabilityMap> out(windows.size());
  parallel_for(windows.size(), workers, [&](std::size_t i) { out[i] = predict_one(img, backend, windows[i]); });
  return out;
}

CoarseResult coarse_predict(const GrayImage& img, const PatchBinarizer& backend, const InferenceConfig& cfg) {
  cfg.validate();
  const int w = img.width();
  const int h = img.height();
  CoarseResult result;
  result.coarse = ProbabilityMap(w, h, 0.0f);
  for (int scale : cfg.scales) {
    const auto windows = sliding_window_locations(w, h, scale, cfg.stride_fraction);
    Accumulator acc(w, h);
    for_each_prediction(img, backend, windows, cfg.workers,
                        [&](const ProbabilityMap& p, const Window& loc) { acc.add(p, loc); });
    ProbabilityMap merged = acc.mean();
    auto dst = result.coarse.pixels();
    auto src = merged.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::max(dst[i], src[i]);
    result.per_scale.push_back(std::move(merged));
  }
  result.pseudo = threshold(result.coarse, static_cast<float>(cfg.threshold));
  return result;
}

std::vector<Window> refinement_windows(const BinaryMask& foreground, double mean_height, const InferenceConfig& cfg) {
  const int w = foreground.width();
  const int h = foreground.height();
  const int side = std::clamp(static_cast<int>(std::lround(cfg.refine_k * mean_height)), 1, std::min(w, h));
  const int stride = std::max(1, static_cast<int>(std::floor(side * (1.0 - cfg.refine_overlap))));

  // Integral image of the foreground for O(1) window occupancy tests.
  const auto stride_i = static_cast<std::size_t>(w) + 1;
  std::vector<long long> integral(stride_i * (static_cast<std::size_t>(h) + 1), 0);
  for (int y = 0; y < h; ++y) {
    long long row = 0;
    for (int x = 0; x < w; ++x) {
      row += foreground.at(x, y) ? 1 : 0;
      const std::size_t i = (static_cast<std::size_t>(y) + 1) * stride_i + static_cast<std::size_t>(x) + 1;
      integral[i] = integral[i - stride_i] + row;
    }
  }
  const auto at = [&](int x, int y) { return integral[static_cast<std::size_t>(y) * stride_i + static_cast<std::size_t>(x)]; };

  std::vector<Window> out;
  for (int y : grid_offsets(h, side, stride)) {
    for (int x : grid_offsets(w, side, stride)) {
      const long long n = at(x + side, y + side) + at(x, y) - at(x, y + side) - at(x + side, y);
      if (n > 0) out.push_back(Window{x, y, side});
    }
  }
  return out;
}

RefineResult refine_detailed(const GrayImage& img, const BinaryMask& pseudo, const PatchBinarizer& backend,
                             const InferenceConfig& cfg, const DilationConfig& dilation) {
  cfg.validate();
  if (!img.same_shape(pseudo)) fail(ErrorKind::DimMismatch, "pseudo mask does not match image");
  RefineResult result;
  const auto components = connected_components(pseudo);
  if (components.empty()) {
    result.final_mask = pseudo;
    result.fell_back = true;
    return result;
  }
  result.stats = height_stats(components);
  const auto partition =
      partition_regions(components, *result.stats, dilation, img.width(), img.height());
  result.windows = refinement_windows(partition.foreground, result.stats->mean_iqr_height, cfg);

  Accumulator acc(img.width(), img.height(), cfg.epsilon);
  for_each_prediction(img, backend, result.windows, cfg.workers,
                      [&](const ProbabilityMap& p, const Window& loc) { acc.add(p, loc); });
  result.probability = acc.average();
  result.final_mask = threshold(result.probability, static_cast<float>(cfg.threshold));
  return result;
}

BinaryMask refine(const GrayImage& img, const BinaryMask& pseudo, const PatchBinarizer& backend,
                  const InferenceConfig& cfg, const DilationConfig& dilation) {
  return refine_detailed(img, pseudo, backend, cfg, dilation).final_mask;
}

PipelineResult run_pipeline(const GrayImage& img, const PatchBinarizer& backend, const InferenceConfig& cfg,
                            const DilationConfig& dilation) {
  PipelineResult result;
  result.coarse = coarse_predict(img, backend, cfg);
  result.refined = refine_detailed(img, result.coarse.pseudo, backend, cfg, dilation);
  return result;
}

BinaryMask binarize(const GrayImage& img, const PatchBinarizer& backend, const InferenceConfig& cfg,
                    const DilationConfig& dilation) {
  return run_pipeline(img, backend, cfg, dilation).refined.final_mask;
}

}  // namespace inscribin
