#include "inscribin/patching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "inscribin/image_io.hpp"

namespace inscribin {

double interpolated_percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(ErrorKind::EmptySet, "percentile of an empty sequence");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

HeightStats height_stats(std::span<const Component> components) {
  if (components.empty()) fail(ErrorKind::EmptyMask, "no connected components to measure");
  std::vector<double> heights;
  heights.reserve(components.size());
  for (const auto& c : components) heights.push_back(c.height());
  std::sort(heights.begin(), heights.end());

  HeightStats s;
  s.n_components = static_cast<int>(heights.size());
  s.q1 = interpolated_percentile(heights, 0.25);
  s.q3 = interpolated_percentile(heights, 0.75);
  s.iqr = s.q3 - s.q1;

  double sum = 0;
  int kept = 0;
  for (double h : heights) {
    if (h >= s.q1 && h <= s.q3) {
      sum += h;
      ++kept;
    }
  }
  if (kept == 0) {
    // Only reachable with two distinct heights.
    for (double h : heights) sum += h;
    kept = static_cast<int>(heights.size());
  }
  s.mean_iqr_height = sum / kept;
  return s;
}

void DilationConfig::validate() const {
  if (!(s1 > 0) || !(s2 > 0)) fail(ErrorKind::InvalidParam, "dilation scales s1 and s2 must be positive");
}

DilationKernels dilation_kernels(double mean_height, const DilationConfig& cfg) {
  cfg.validate();
  const int short_side = odd_kernel_size(cfg.s1 * mean_height);
  const int long_side = odd_kernel_size(cfg.s2 * mean_height);
  return DilationKernels{StructuringElement(long_side, short_side), StructuringElement(short_side, long_side)};
}

RegionPartition partition_regions(std::span<const Component> components, const HeightStats& stats,
                                  const DilationConfig& cfg, int width, int height) {
  if (components.empty()) fail(ErrorKind::EmptyMask, "no components to partition around");
  if (!(stats.mean_iqr_height >= 1.0)) fail(ErrorKind::InvalidParam, "mean character height must be >= 1");
  const auto kernels = dilation_kernels(stats.mean_iqr_height, cfg);
  const std::vector<Component> boxes(components.begin(), components.end());
  BinaryMask fg = dilate(dilate(rasterize_boxes(boxes, width, height), kernels.first), kernels.second);

  RegionPartition p;
  p.area_total = static_cast<long long>(fg.size());
  p.area_fg = static_cast<long long>(count_foreground(fg));
  p.area_bg = p.area_total - p.area_fg;
  p.background = invert(fg);
  p.foreground = std::move(fg);
  return p;
}

void SamplingConfig::validate() const {
  if (!(k_min > 0) || !(k_min <= k_max)) fail(ErrorKind::InvalidParam, "need 0 < k_min <= k_max");
  if (n_min < 0 || n_max < 0 || n_bg_max < 0) fail(ErrorKind::InvalidParam, "patch counts must be >= 0");
  if (n_min > n_max) fail(ErrorKind::InvalidParam, "need n_min <= n_max");
  if (!(r_base >= 0)) fail(ErrorKind::InvalidParam, "r_base must be >= 0");
  if (!(q1_fence >= 0) || !(q2_fence >= 0)) fail(ErrorKind::InvalidParam, "IQR fence factors must be >= 0");
  if (out_side < 1) fail(ErrorKind::InvalidParam, "out_side must be >= 1");
}

std::vector<Component> valid_components(std::span<const Component> components, const HeightStats& stats,
                                        const SamplingConfig& cfg) {
  const double lower = stats.q1 - cfg.q1_fence * stats.iqr;
  const double upper = stats.q3 + cfg.q2_fence * stats.iqr;
  std::vector<Component> out;
  std::copy_if(components.begin(), components.end(), std::back_inserter(out), [&](const Component& c) {
    const double h = c.height();
    return h >= lower && h <= upper;
  });
  return out;
}

PatchCounts patch_counts(std::size_t n_valid, const RegionPartition& partition, const SamplingConfig& cfg) {
  if (partition.area_total <= 0) fail(ErrorKind::InvalidDims, "partition has zero area");
  const double preliminary = static_cast<double>(n_valid) * cfg.r_base;
  const auto rounded = static_cast<long long>(std::floor(preliminary + 0.5));
  PatchCounts counts;
  counts.n_fg = static_cast<int>(std::clamp<long long>(rounded, cfg.n_min, cfg.n_max));
  counts.n_bg = static_cast<int>(partition.area_bg * cfg.n_bg_max / partition.area_total);
  return counts;
}

std::string_view to_string(Region region) {
  switch (region) {
    case Region::Foreground: return "foreground";
    case Region::Background: return "background";
    case Region::Grid: return "grid";
  }
  return "unknown";
}

namespace {

std::vector<std::size_t> pixel_indices(const BinaryMask& mask) {
  std::vector<std::size_t> out;
  const auto px = mask.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (px[i]) out.push_back(i);
  }
  return out;
}

void append_crop(PatchBatch& batch, const GrayImage& img, const BinaryMask* gt, const PatchSpec& spec, int out_side) {
  batch.images.push_back(resize_gray(crop(img, spec.window()), out_side, out_side));
  if (gt) batch.labels->push_back(resize_mask(crop(*gt, spec.window()), out_side, out_side));
  batch.specs.push_back(spec);
}

}  // namespace

PatchBatch sample_patches(const GrayImage& img, const BinaryMask* gt, const RegionPartition& partition,
                          const HeightStats& stats, PatchCounts counts, const SamplingConfig& cfg) {
  cfg.validate();
  if (!img.same_shape(partition.foreground)) fail(ErrorKind::DimMismatch, "partition does not match image");
  if (gt && !img.same_shape(*gt)) fail(ErrorKind::DimMismatch, "ground truth does not match image");

  const int w = img.width();
  const int h = img.height();
  const int max_side = std::min(w, h);
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> draw_k(cfg.k_min, cfg.k_max);

  PatchBatch batch;
  if (gt) batch.labels.emplace();

  auto draw = [&](const BinaryMask& region_mask, Region region, int count) {
    const auto anchors = pixel_indices(region_mask);
    if (anchors.empty()) return;
    std::uniform_int_distribution<std::size_t> pick(0, anchors.size() - 1);
    for (int i = 0; i < count; ++i) {
      const std::size_t a = anchors[pick(rng)];
      const double k = draw_k(rng);
      const int ax = static_cast<int>(a % static_cast<std::size_t>(w));
      const int ay = static_cast<int>(a / static_cast<std::size_t>(w));
      const int side = std::clamp(static_cast<int>(std::lround(k * stats.mean_iqr_height)), 1, max_side);
      PatchSpec spec;
      spec.side = side;
      spec.x = std::clamp(ax - side / 2, 0, w - side);
      spec.y = std::clamp(ay - side / 2, 0, h - side);
      spec.region = region;
      spec.k = k;
      spec.anchor_x = ax;
      spec.anchor_y = ay;
      append_crop(batch, img, gt, spec, cfg.out_side);
    }
  };
  draw(partition.foreground, Region::Foreground, counts.n_fg);
  draw(partition.background, Region::Background, counts.n_bg);
  return batch;
}

std::vector<int> grid_offsets(int extent, int side, int stride) {
  if (side < 1 || side > extent) fail(ErrorKind::InvalidParam, "grid side must lie in [1, extent]");
  stride = std::max(stride, 1);
  std::vector<int> out;
  int off = 0;
  for (; off + side < extent; off += stride) out.push_back(off);
  if (out.empty() || out.back() != extent - side) out.push_back(extent - side);
  return out;
}

PatchBatch fixed_grid_patches(const GrayImage& img, int size, double overlap_fraction) {
  if (size < 1) fail(ErrorKind::InvalidParam, "grid patch size must be >= 1");
  if (!(overlap_fraction >= 0 && overlap_fraction < 1)) {
    fail(ErrorKind::InvalidParam, "overlap fraction must lie in [0, 1)");
  }
  const int side = std::min({size, img.width(), img.height()});
  const int stride = static_cast<int>(std::floor(side * (1.0 - overlap_fraction)));
  PatchBatch batch;
  for (int y : grid_offsets(img.height(), side, stride)) {
    for (int x : grid_offsets(img.width(), side, stride)) {
      PatchSpec spec{x, y, side, Region::Grid, 0.0, x + side / 2, y + side / 2};
      batch.images.push_back(crop(img, spec.window()));
      batch.specs.push_back(spec);
    }
  }
  return batch;
}

ContextAwarePlan plan_context_aware(const BinaryMask& gt, const DilationConfig& dilation,
                                    const SamplingConfig& sampling) {
  sampling.validate();
  ContextAwarePlan plan;
  plan.components = connected_components(gt);
  if (plan.components.empty()) fail(ErrorKind::EmptyMask, "mask has no foreground components");
  plan.stats = height_stats(plan.components);
  plan.partition = partition_regions(plan.components, plan.stats, dilation, gt.width(), gt.height());
  plan.n_valid = valid_components(plan.components, plan.stats, sampling).size();
  plan.counts = patch_counts(plan.n_valid, plan.partition, sampling);
  return plan;
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view image_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : image_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = h ^ (global_seed + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void write_patch_directory(const std::filesystem::path& dir, std::string_view image_id, const PatchBatch& batch,
                           const ContextAwarePlan& plan, const DilationConfig& dilation,
                           const SamplingConfig& sampling, int image_width, int image_height) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json patches = nlohmann::ordered_json::array();
  int n_fg = 0;
  int n_bg = 0;
  for (std::size_t i = 0; i < batch.specs.size(); ++i) {
    const auto& spec = batch.specs[i];
    const bool fg = spec.region != Region::Background;
    const std::string stem = (fg ? "fg_" : "bg_") + std::to_string(fg ? n_fg++ : n_bg++);
    write_gray(dir / (stem + ".png"), batch.images[i]);
    nlohmann::ordered_json entry;
    entry["file"] = stem + ".png";
    if (batch.labels) {
      write_mask(dir / (stem + "_mask.png"), (*batch.labels)[i]);
      entry["mask"] = stem + "_mask.png";
    }
    entry["region"] = to_string(spec.region);
    entry["x"] = spec.x;
    entry["y"] = spec.y;
    entry["side"] = spec.side;
    entry["k"] = spec.k;
    entry["anchor_x"] = spec.anchor_x;
    entry["anchor_y"] = spec.anchor_y;
    patches.push_back(std::move(entry));
  }

  nlohmann::ordered_json doc;
  doc["image_id"] = image_id;
  doc["seed"] = sampling.rng_seed;
  doc["image_width"] = image_width;
  doc["image_height"] = image_height;
  doc["height_stats"] = {{"q1", plan.stats.q1},
                         {"q3", plan.stats.q3},
                         {"iqr", plan.stats.iqr},
                         {"mean_iqr_height", plan.stats.mean_iqr_height},
                         {"n_components", plan.stats.n_components}};
  doc["n_valid"] = plan.n_valid;
  doc["area"] = {{"fg", plan.partition.area_fg}, {"bg", plan.partition.area_bg}, {"total", plan.partition.area_total}};
  doc["counts"] = {{"fg", n_fg}, {"bg", n_bg}};
  doc["config"] = {{"s1", dilation.s1},
                   {"s2", dilation.s2},
                   {"r_base", sampling.r_base},
                   {"n_min", sampling.n_min},
                   {"n_max", sampling.n_max},
                   {"n_bg_max", sampling.n_bg_max},
                   {"k_min", sampling.k_min},
                   {"k_max", sampling.k_max},
                   {"q1_fence", sampling.q1_fence},
                   {"q2_fence", sampling.q2_fence},
                   {"out_side", sampling.out_side}};
  doc["patches"] = std::move(patches);

  std::ofstream out(dir / "specs.json", std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + (dir / "specs.json").string());
  out << doc.dump(2) << '\n';
}

}  // namespace inscribin
