#include "inscribin/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "inscribin/image_io.hpp"
#include "inscribin/parallel.hpp"

namespace inscribin {

namespace fs = std::filesystem;

std::string_view to_string(SplitSet set) { return set == SplitSet::Train ? "train" : "test"; }

fs::path Manifest::resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }

void Manifest::validate() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (e.id.empty()) fail(ErrorKind::DataContract, "manifest entry with an empty id");
    if (!ids.insert(e.id).second) fail(ErrorKind::DataContract, "duplicate image id '" + e.id + "'");
    if (!fs::exists(resolve(e.image))) fail(ErrorKind::Io, "image for '" + e.id + "' not found: " + resolve(e.image).string());
    if (e.mask && !fs::exists(resolve(*e.mask))) {
      fail(ErrorKind::Io, "mask for '" + e.id + "' not found: " + resolve(*e.mask).string());
    }
  }
  if (!split.empty()) {
    for (const auto& e : entries) {
      if (!split.contains(e.id)) fail(ErrorKind::DataContract, "split does not assign '" + e.id + "'");
    }
    for (const auto& [id, set] : split) {
      if (!ids.contains(id)) fail(ErrorKind::DataContract, "split names unknown id '" + id + "'");
    }
  }
}

Manifest Manifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::DataContract, "malformed manifest " + path.string() + ": " + e.what());
  }

  Manifest m;
  m.base_dir = path.parent_path();
  try {
    for (const auto& item : doc.at("entries")) {
      ManifestEntry e;
      e.id = item.at("id").get<std::string>();
      e.image = item.at("image").get<std::string>();
      if (item.contains("mask") && !item["mask"].is_null()) e.mask = item["mask"].get<std::string>();
      if (item.contains("tags")) e.tags = item["tags"].get<std::vector<std::string>>();
      m.entries.push_back(std::move(e));
    }
    if (doc.contains("split")) {
      for (const auto& [id, value] : doc["split"].items()) {
        const auto name = value.get<std::string>();
        if (name != "train" && name != "test") fail(ErrorKind::DataContract, "split value must be train or test");
        m.split[id] = name == "train" ? SplitSet::Train : SplitSet::Test;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::DataContract, "manifest " + path.string() + " does not match the schema: " + e.what());
  }
  m.validate();
  return m;
}

void Manifest::save(const fs::path& path) const {
  // Re-express paths relative to the new manifest location.
  const fs::path target_dir = fs::absolute(path).parent_path();
  auto relative_to_target = [&](const fs::path& p) {
    return fs::absolute(resolve(p)).lexically_normal().lexically_relative(target_dir).generic_string();
  };
  nlohmann::ordered_json doc;
  doc["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json item;
    item["id"] = e.id;
    item["image"] = relative_to_target(e.image);
    if (e.mask) item["mask"] = relative_to_target(*e.mask);
    item["tags"] = e.tags;
    doc["entries"].push_back(std::move(item));
  }
  if (!split.empty()) {
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    for (const auto& e : entries) s[e.id] = to_string(split.at(e.id));
    doc["split"] = std::move(s);
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

namespace {

Range range_of(const std::vector<ImageStats>& images, auto field) {
  Range r{field(images.front()), field(images.front())};
  for (const auto& s : images) {
    r.min = std::min(r.min, static_cast<double>(field(s)));
    r.max = std::max(r.max, static_cast<double>(field(s)));
  }
  return r;
}

}  // namespace

CorpusStats compute_stats(const Manifest& manifest, int workers) {
  if (manifest.entries.empty()) fail(ErrorKind::EmptySet, "manifest has no entries");
  CorpusStats stats;
  stats.images.resize(manifest.entries.size());
  parallel_for(manifest.entries.size(), workers, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    if (!e.mask) fail(ErrorKind::DataContract, "entry '" + e.id + "' has no mask");
    const BinaryMask mask = read_mask(manifest.resolve(*e.mask));
    auto& s = stats.images[i];
    s.id = e.id;
    s.components = static_cast<long>(connected_components(mask).size());
    s.width = mask.width();
    s.height = mask.height();
    s.aspect = static_cast<double>(s.width) / static_cast<double>(s.height);
  });
  stats.components = range_of(stats.images, [](const ImageStats& s) { return static_cast<double>(s.components); });
  stats.width = range_of(stats.images, [](const ImageStats& s) { return static_cast<double>(s.width); });
  stats.height = range_of(stats.images, [](const ImageStats& s) { return static_cast<double>(s.height); });
  stats.aspect = range_of(stats.images, [](const ImageStats& s) { return s.aspect; });
  return stats;
}

Manifest split(const Manifest& manifest, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0 && train_fraction < 1)) fail(ErrorKind::InvalidParam, "train fraction must lie in (0, 1)");
  const std::size_t n = manifest.entries.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t idx : order) {
    auto tags = manifest.entries[idx].tags;
    std::sort(tags.begin(), tags.end());
    std::string key;
    for (const auto& t : tags) key += t + '\x1f';
    groups[key].push_back(idx);
  }

  struct Quota {
    std::vector<std::size_t>* members;
    std::size_t train;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (auto& [key, members] : groups) {
    const double share = static_cast<double>(members.size()) * train_fraction;
    const auto base = static_cast<std::size_t>(std::floor(share));
    quotas.push_back(Quota{&members, base, share - static_cast<double>(base)});
    assigned += base;
  }
  const auto target = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction + 0.5));
  std::vector<std::size_t> by_remainder(quotas.size());
  std::iota(by_remainder.begin(), by_remainder.end(), 0);
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder; });
  for (std::size_t i = 0; assigned < target && i < by_remainder.size(); ++i) {
    auto& q = quotas[by_remainder[i]];
    if (q.train < q.members->size()) {
      ++q.train;
      ++assigned;
    }
  }

  Manifest out = manifest;
  out.split.clear();
  for (const auto& q : quotas) {
    for (std::size_t i = 0; i < q.members->size(); ++i) {
      out.split[manifest.entries[(*q.members)[i]].id] = i < q.train ? SplitSet::Train : SplitSet::Test;
    }
  }
  return out;
}

ExportSummary export_patches(const Manifest& manifest, const SamplingConfig& sampling,
                             const DilationConfig& dilation, const fs::path& out_dir, int workers) {
  sampling.validate();
  dilation.validate();
  std::vector<const ManifestEntry*> selected;
  for (const auto& e : manifest.entries) {
    if (manifest.split.empty() || manifest.split.at(e.id) == SplitSet::Train) selected.push_back(&e);
  }
  for (const auto* e : selected) {
    if (!e->mask) fail(ErrorKind::DataContract, "training entry '" + e->id + "' has no mask");
  }

  ExportSummary summary;
  summary.items.resize(selected.size());
  parallel_for(selected.size(), workers, [&](std::size_t i) {
    const auto& e = *selected[i];
    auto& item = summary.items[i];
    item.id = e.id;
    const GrayImage img = read_gray(manifest.resolve(e.image));
    const BinaryMask gt = read_mask(manifest.resolve(*e.mask));
    if (!img.same_shape(gt)) fail(ErrorKind::DataContract, "image and mask sizes differ for '" + e.id + "'");

    SamplingConfig cfg = sampling;
    cfg.rng_seed = derive_seed(sampling.rng_seed, e.id);
    ContextAwarePlan plan;
    try {
      plan = plan_context_aware(gt, dilation, cfg);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::EmptyMask) throw;
      item.skipped = true;
      item.warning = err.what();
      return;
    }
    const PatchBatch batch = sample_patches(img, &gt, plan.partition, plan.stats, plan.counts, cfg);
    write_patch_directory(out_dir / e.id, e.id, batch, plan, dilation, cfg, img.width(), img.height());
    for (const auto& spec : batch.specs) {
      if (spec.region == Region::Background) ++item.n_bg;
      else ++item.n_fg;
    }
  });
  return summary;
}

}  // namespace inscribin
