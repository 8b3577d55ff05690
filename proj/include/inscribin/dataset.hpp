#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "inscribin/patching.hpp"

namespace inscribin {

struct ManifestEntry {
  std::string id;
  std::filesystem::path image;               // as written in the manifest
  std::optional<std::filesystem::path> mask;
  std::vector<std::string> tags;
};

enum class SplitSet { Train, Test };

std::string_view to_string(SplitSet set);

// Paths inside a manifest are relative to the manifest file's directory.
struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;
  std::map<std::string, SplitSet> split;

  std::filesystem::path resolve(const std::filesystem::path& p) const;

  /// Throws DataContract on duplicate ids or a split that does not cover
  /// every entry, Io when a referenced file is missing.
  void validate() const;

  static Manifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct ImageStats {
  std::string id;
  long components = 0;
  int width = 0;
  int height = 0;
  double aspect = 0;  // width / height
};

struct Range {
  double min = 0;
  double max = 0;
};

struct CorpusStats {
  std::vector<ImageStats> images;  // manifest order
  Range components;
  Range width;
  Range height;
  Range aspect;
};

/// Counts 8-connected components of every mask. Entries without a mask
/// raise DataContract.
CorpusStats compute_stats(const Manifest& manifest, int workers = 1);

/// Seeded shuffle, then per tag group (entries with identical tag sets) a
/// largest-remainder allocation so the train total is round(n * fraction)
/// and each group is within one entry of its proportional share.
Manifest split(const Manifest& manifest, double train_fraction, std::uint64_t seed);

struct ExportItem {
  std::string id;
  int n_fg = 0;
  int n_bg = 0;
  bool skipped = false;
  std::string warning;
};

struct ExportSummary {
  std::vector<ExportItem> items;  // manifest order
};

/// Samples context-aware patches for every training entry (all entries when
/// the manifest has no split) into out_dir/<image_id>/. Each image uses
/// derive_seed(sampling.rng_seed, id). Images whose mask is empty are
/// skipped with a warning.
ExportSummary export_patches(const Manifest& manifest, const SamplingConfig& sampling,
                             const DilationConfig& dilation, const std::filesystem::path& out_dir, int workers = 1);

}  // namespace inscribin
