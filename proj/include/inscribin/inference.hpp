#pragma once

#include <optional>
#include <span>
#include <vector>

#include "inscribin/backends.hpp"
#include "inscribin/patching.hpp"

namespace inscribin {

struct InferenceConfig {
  std::vector<int> scales{256, 384, 512, 768};
  double stride_fraction = 0.5;
  double threshold = 0.5;
  double refine_k = 8.0;
  double refine_overlap = 0.5;
  double epsilon = 1e-8;
  // Patch predictions run on this many threads; results do not depend on it.
  int workers = 1;

  void validate() const;
};

struct SlidingWindows {
  std::vector<GrayImage> patches;  // native-size crops
  std::vector<Window> locations;
};

/// Windows of side min(scale, min(W, H)) with stride max(1, floor(side *
/// stride_fraction)); the last row and column are snapped to the image edge.
std::vector<Window> sliding_window_locations(int width, int height, int scale, double stride_fraction);

SlidingWindows sliding_window(const GrayImage& img, int scale, double stride_fraction);

// Sum map A and count map C for averaging overlapping predictions.
class Accumulator {
 public:
  Accumulator(int width, int height, double epsilon = 1e-8);

  // Throws DimMismatch if pred is not loc.side square or loc leaves the map.
  void add(const ProbabilityMap& pred, const Window& loc);

  /// A / (C + epsilon); zero wherever nothing was added.
  ProbabilityMap average() const;

  /// Exact A / C; zero wherever nothing was added.
  ProbabilityMap mean() const;

  double sum_at(int x, int y) const { return sum_.at(x, y); }
  int count_at(int x, int y) const { return count_.at(x, y); }

 private:
  Raster<double, struct SumTag> sum_;
  Raster<int, struct CountTag> count_;
  double epsilon_;
};

/// Per-pixel mean of the window predictions covering it, 0 where uncovered.
/// Each prediction must already be at its window's native size.
ProbabilityMap merge_patch_pred(std::span<const ProbabilityMap> preds, std::span<const Window> locations,
                                int height, int width);

/// Crops each window, resizes it to the backend's input side when it has
/// one, predicts, and resizes the prediction back to the window size.
/// Output order matches `windows` for any worker count.
std::vector<ProbabilityMap> predict_windows(const GrayImage& img, const PatchBinarizer& backend,
                                            std::span<const Window> windows, int workers);

struct CoarseResult {
  ProbabilityMap coarse;                 // pointwise max over scales
  BinaryMask pseudo;                     // coarse > threshold
  std::vector<ProbabilityMap> per_scale; // averaged within each scale
};

CoarseResult coarse_predict(const GrayImage& img, const PatchBinarizer& backend, const InferenceConfig& cfg);

/// Tiles the whole image with side round(refine_k * mean_height) (clamped to
/// the shorter side) at refine_overlap, keeping windows that touch the
/// foreground. Every foreground pixel ends up covered.
std::vector<Window> refinement_windows(const BinaryMask& foreground, double mean_height, const InferenceConfig& cfg);

struct RefineResult {
  BinaryMask final_mask;
  ProbabilityMap probability;  // A / (C + eps); empty on fallback
  std::vector<Window> windows;
  std::optional<HeightStats> stats;
  // True when the pseudo mask had no components and was returned unchanged.
  bool fell_back = false;
};

RefineResult refine_detailed(const GrayImage& img, const BinaryMask& pseudo, const PatchBinarizer& backend,
                             const InferenceConfig& cfg, const DilationConfig& dilation);

BinaryMask refine(const GrayImage& img, const BinaryMask& pseudo, const PatchBinarizer& backend,
                  const InferenceConfig& cfg, const DilationConfig& dilation);

struct PipelineResult {
  CoarseResult coarse;
  RefineResult refined;
};

PipelineResult run_pipeline(const GrayImage& img, const PatchBinarizer& backend, const InferenceConfig& cfg,
                            const DilationConfig& dilation);

/// Coarse multi-scale pass followed by context-aware refinement.
BinaryMask binarize(const GrayImage& img, const PatchBinarizer& backend, const InferenceConfig& cfg,
                    const DilationConfig& dilation);

}  // namespace inscribin
