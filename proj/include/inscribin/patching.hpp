#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inscribin/imgcore.hpp"

namespace inscribin {

// Robust character-height statistics over component heights.
struct HeightStats {
  double q1 = 0;
  double q3 = 0;
  double iqr = 0;
  // Mean of the heights h with q1 <= h <= q3.
  double mean_iqr_height = 0;
  int n_components = 0;
};

/// Quartiles use linear interpolation between closest ranks (position
/// p * (n - 1) in the sorted heights). With exactly two distinct heights no
/// sample falls inside [q1, q3]; the mean of both is used then.
/// Throws EmptyMask on an empty list.
HeightStats height_stats(std::span<const Component> components);

// Linear-interpolated percentile of an ascending sequence, p in [0, 1].
double interpolated_percentile(std::span<const double> sorted, double p);

struct DilationConfig {
  double s1 = 0.3;
  double s2 = 0.9;

  void validate() const;
};

struct DilationKernels {
  StructuringElement first;
  StructuringElement second;
};

/// First stage: height s1*h, width s2*h. Second stage swaps them. Sides are
/// rounded with odd_kernel_size.
DilationKernels dilation_kernels(double mean_height, const DilationConfig& cfg);

struct RegionPartition {
  BinaryMask foreground;  // text-context region
  BinaryMask background;  // complement of foreground
  long long area_fg = 0;
  long long area_bg = 0;
  long long area_total = 0;
};

/// Rasterizes the component bounding boxes and dilates them twice.
RegionPartition partition_regions(std::span<const Component> components, const HeightStats& stats,
                                  const DilationConfig& cfg, int width, int height);

struct SamplingConfig {
  double r_base = 0.5;
  int n_min = 10;
  int n_max = 250;
  int n_bg_max = 75;
  double k_min = 4.0;
  double k_max = 12.0;
  double q1_fence = 1.5;
  double q2_fence = 1.5;
  int out_side = 512;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Components with q1 - q1_fence*iqr <= h <= q3 + q2_fence*iqr, order kept.
std::vector<Component> valid_components(std::span<const Component> components, const HeightStats& stats,
                                        const SamplingConfig& cfg);

struct PatchCounts {
  int n_fg = 0;
  int n_bg = 0;

  friend bool operator==(const PatchCounts&, const PatchCounts&) = default;
};

/// n_fg = clamp(round(n_valid * r_base), n_min, n_max) with halves rounded up;
/// n_bg = floor(area_bg / area_total * n_bg_max).
PatchCounts patch_counts(std::size_t n_valid, const RegionPartition& partition, const SamplingConfig& cfg);

enum class Region { Foreground, Background, Grid };

std::string_view to_string(Region region);

struct PatchSpec {
  int x = 0;
  int y = 0;
  int side = 0;
  Region region = Region::Foreground;
  // Sampled size multiplier; 0 for grid patches.
  double k = 0;
  // Sampled anchor pixel (the intended center before shifting to fit).
  int anchor_x = 0;
  int anchor_y = 0;

  Window window() const { return Window{x, y, side}; }

  friend bool operator==(const PatchSpec&, const PatchSpec&) = default;
};

struct PatchBatch {
  std::vector<PatchSpec> specs;
  std::vector<GrayImage> images;
  std::optional<std::vector<BinaryMask>> labels;
};

/// Draws counts.n_fg anchors from foreground pixels, then counts.n_bg from
/// background pixels, with an mt19937_64 seeded from cfg.rng_seed. Each patch
/// gets k ~ U[k_min, k_max), side = round(k * h) clamped to the shorter image
/// side, centered on its anchor and shifted to fit inside the image. A region
/// without pixels contributes no patches. Crops are resized to out_side
/// (bilinear for the image, nearest for labels).
PatchBatch sample_patches(const GrayImage& img, const BinaryMask* gt, const RegionPartition& partition,
                          const HeightStats& stats, PatchCounts counts, const SamplingConfig& cfg);

/// Offsets 0, stride, 2*stride, ... with the last window snapped to
/// extent - side, so [0, extent) is fully covered.
std::vector<int> grid_offsets(int extent, int side, int stride);

/// Regular tiling with stride size * (1 - overlap_fraction); crops keep their
/// native size (clamped to the shorter image side).
PatchBatch fixed_grid_patches(const GrayImage& img, int size, double overlap_fraction);

// Everything the context-aware sampler derives from one annotated image.
struct ContextAwarePlan {
  std::vector<Component> components;
  HeightStats stats;
  RegionPartition partition;
  std::size_t n_valid = 0;
  PatchCounts counts;
};

/// Labels gt, then runs height_stats, partition_regions, valid_components and
/// patch_counts. Throws EmptyMask when gt has no foreground.
ContextAwarePlan plan_context_aware(const BinaryMask& gt, const DilationConfig& dilation,
                                    const SamplingConfig& sampling);

/// Per-image seed from a global seed and an image id (FNV-1a + splitmix64).
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view image_id);

/// Writes <dir>/fg_<n>.png, fg_<n>_mask.png, bg_<n>.png, bg_<n>_mask.png and
/// specs.json. The JSON layout is documented in docs/formats.md.
void write_patch_directory(const std::filesystem::path& dir, std::string_view image_id, const PatchBatch& batch,
                           const ContextAwarePlan& plan, const DilationConfig& dilation,
                           const SamplingConfig& sampling, int image_width, int image_height);

}  // namespace inscribin
