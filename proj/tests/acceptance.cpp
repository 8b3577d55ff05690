// Acceptance run: one PASS/FAIL/SKIP line per criterion. Exit status is
// nonzero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "inscribin/backends.hpp"
#include "inscribin/dataset.hpp"
#include "inscribin/image_io.hpp"
#include "inscribin/inference.hpp"
#include "inscribin/metrics.hpp"
#include "inscribin/patching.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

using namespace inscribin;
using inscribin::testing::TempDir;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

// Collects the first few failure reasons of a criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) reasons_ += (reasons_.empty() ? "" : "; ") + what;
  }
  bool ok() const { return failures_ == 0; }
  Outcome outcome(const std::string& summary) const {
    if (ok()) return {Status::Pass, summary};
    return {Status::Fail, summary + "; " + std::to_string(failures_) + " failure(s): " + reasons_};
  }

 private:
  int failures_ = 0;
  std::string reasons_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = "'" + std::string(INSCRIBIN_CLI) + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Relative path -> bytes for every file below dir.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  return out;
}

Outcome metric_oracle_suite() {
  Check c;
  std::mt19937_64 rng(2024);
  double worst[4] = {0, 0, 0, 0};
  const auto t0 = Clock::now();
  for (int i = 0; i < 200; ++i) {
    const int w = 1 + static_cast<int>(rng() % 64);
    const int h = 1 + static_cast<int>(rng() % 64);
    const double density = static_cast<double>(rng() % 101) / 100.0;
    const auto gt = inscribin::testing::random_mask(rng(), w, h, density);
    const auto pred = inscribin::testing::random_mask(rng(), w, h, static_cast<double>(rng() % 101) / 100.0);
    const double d[4] = {std::abs(psnr(pred, gt) - oracle::psnr(pred, gt, kDefaultPsnrCap)),
                         std::abs(f_measure(pred, gt) - oracle::f_measure(pred, gt)),
                         std::abs(pseudo_f_measure(pred, gt) - oracle::pseudo_f_measure(pred, gt)),
                         std::abs(drd(pred, gt) - oracle::drd(pred, gt))};
    for (int k = 0; k < 4; ++k) {
      worst[k] = std::max(worst[k], d[k]);
      c.expect(d[k] <= 1e-9, "pair " + std::to_string(i) + " metric " + std::to_string(k) + " off by " + fmt("%.3g", d[k]));
    }
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "runtime " + fmt("%.2f", secs) + " s");
  return c.outcome("200 pairs <= 64x64, max |diff| psnr=" + fmt("%.2g", worst[0]) + " fm=" + fmt("%.2g", worst[1]) +
                   " fps=" + fmt("%.2g", worst[2]) + " drd=" + fmt("%.2g", worst[3]) + " (tol 1e-9), " +
                   fmt("%.2f", secs) + " s (limit 10 s)");
}

Outcome drd_hand_case() {
  Check c;
  BinaryMask gt(40, 40);
  // Non-uniform blocks far from the flipped pixel.
  gt.at(36, 36) = 1;
  gt.at(4, 36) = 1;
  BinaryMask pred = gt;
  pred.at(12, 12) = 1;
  const auto r = drd_detailed(pred, gt);
  c.expect(r.distortion_sum == 1.0, "sum DRD_k = " + fmt("%.17g", r.distortion_sum));
  c.expect(r.nubn == 2, "NUBN = " + std::to_string(r.nubn));
  c.expect(r.drd == 1.0 / static_cast<double>(r.nubn), "DRD = " + fmt("%.17g", r.drd));
  return c.outcome("sum DRD_k=" + fmt("%.17g", r.distortion_sum) + " NUBN=" + std::to_string(r.nubn) +
                   " DRD=" + fmt("%.17g", r.drd) + " (exact)");
}

Outcome patching_invariants() {
  Check c;
  const SamplingConfig defaults;
  std::mt19937_64 rng(77);
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  int min_fg = 1 << 30;
  int max_fg = 0;
  int max_bg = 0;
  long long specs_checked = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 100; ++i) {
    const int w = pick(200, 900);
    const int h = pick(150, 700);
    const int min_side = pick(3, 12);
    const auto gt = inscribin::testing::random_rectangles(rng(), w, h, pick(1, 600), min_side, min_side + pick(0, 30));
    GrayImage img(w, h, 170);
    for (std::size_t p = 0; p < gt.size(); ++p)
      if (gt.pixels()[p]) img.pixels()[p] = 60;

    SamplingConfig cfg = defaults;
    cfg.rng_seed = rng();
    const auto plan = plan_context_aware(gt, DilationConfig{}, cfg);
    const auto batch = sample_patches(img, &gt, plan.partition, plan.stats, plan.counts, cfg);

    std::vector<int> heights;
    for (const auto& comp : oracle::flood_fill_components(gt)) {
      int lo = h;
      int hi = -1;
      for (const auto& [x, y] : comp) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
      heights.push_back(hi - lo + 1);
    }
    const double expect_h = oracle::iqr_mean(heights);
    c.expect(plan.stats.mean_iqr_height == expect_h,
             "image " + std::to_string(i) + " mean height " + fmt("%.17g", plan.stats.mean_iqr_height) + " vs " +
                 fmt("%.17g", expect_h));

    int n_fg = 0;
    int n_bg = 0;
    for (std::size_t k = 0; k < batch.specs.size(); ++k) {
      const auto& s = batch.specs[k];
      ++specs_checked;
      (s.region == Region::Background ? n_bg : n_fg) += 1;
      const bool in_bounds = s.side >= 1 && s.x >= 0 && s.y >= 0 && s.x + s.side <= w && s.y + s.side <= h;
      c.expect(in_bounds, "image " + std::to_string(i) + " patch out of bounds");
      c.expect(s.k >= cfg.k_min && s.k < cfg.k_max, "image " + std::to_string(i) + " k out of range");
      const auto& region = s.region == Region::Background ? plan.partition.background : plan.partition.foreground;
      c.expect(region.at(s.anchor_x, s.anchor_y) == 1, "image " + std::to_string(i) + " anchor outside its region");
      c.expect(batch.images[k].width() == cfg.out_side && batch.images[k].height() == cfg.out_side,
               "image " + std::to_string(i) + " patch not resized");
    }
    c.expect(n_fg >= 10 && n_fg <= 250, "image " + std::to_string(i) + " n_fg=" + std::to_string(n_fg));
    c.expect(n_bg <= 75, "image " + std::to_string(i) + " n_bg=" + std::to_string(n_bg));
    min_fg = std::min(min_fg, n_fg);
    max_fg = std::max(max_fg, n_fg);
    max_bg = std::max(max_bg, n_bg);
  }

  RegionPartition half;
  half.area_fg = 50;
  half.area_bg = 50;
  half.area_total = 100;
  const int hi_clamp = patch_counts(600, half, defaults).n_fg;
  const int lo_clamp = patch_counts(4, half, defaults).n_fg;
  c.expect(hi_clamp == 250, "n_valid=600 gives " + std::to_string(hi_clamp));
  c.expect(lo_clamp == 10, "n_valid=4 gives " + std::to_string(lo_clamp));

  return c.outcome("100 images, " + std::to_string(specs_checked) + " specs in bounds, n_fg in [" +
                   std::to_string(min_fg) + "," + std::to_string(max_fg) + "], max n_bg " + std::to_string(max_bg) +
                   ", clamps 600->" + std::to_string(hi_clamp) + " 4->" + std::to_string(lo_clamp) +
                   ", mean height exact, " + fmt("%.1f", seconds_since(t0)) + " s");
}

Outcome oracle_end_to_end() {
  Check c;
  double min_fm = 100;
  double max_drd = 0;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ins = inscribin::testing::make_inscription(1000 + seed);
    const auto backend = oracle_binarizer(ins.truth);
    const auto out = binarize(ins.image, *backend, InferenceConfig{}, DilationConfig{});
    const double fm = f_measure(out, ins.truth);
    const double d = drd(out, ins.truth);
    min_fm = std::min(min_fm, fm);
    max_drd = std::max(max_drd, d);
    c.expect(fm >= 99.0, "seed " + std::to_string(seed) + " FM " + fmt("%.3f", fm));
    c.expect(d <= 0.5, "seed " + std::to_string(seed) + " DRD " + fmt("%.3f", d));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "runtime " + fmt("%.1f", secs) + " s");
  return c.outcome("20 inscriptions, min FM " + fmt("%.3f", min_fm) + " (>= 99), max DRD " + fmt("%.4f", max_drd) +
                   " (<= 0.5), " + fmt("%.1f", secs) + " s (limit 60 s)");
}

Outcome determinism() {
  Check c;
  TempDir dir;
  const std::string model = std::string(INSCRIBIN_FIXTURES) + "/models/tiny_unet.onnx";
  Manifest m;
  m.base_dir = dir.path();
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto ins = inscribin::testing::make_inscription(500 + s);
    const std::string id = "ins" + std::to_string(s);
    write_gray(dir / (id + ".png"), ins.image);
    write_mask(dir / (id + "_gt.png"), ins.truth);
    m.entries.push_back(ManifestEntry{id, id + ".png", fs::path(id + "_gt.png"), {}});
  }
  m.save(dir / "manifest.json");

  std::map<std::string, std::map<std::string, std::string>> runs;
  for (const std::string tag : {"w1a", "w1b", "w4a", "w4b"}) {
    const std::string workers = tag.substr(1, 1);
    const auto out = dir / ("run_" + tag);
    int code = run_cli("--seed 31 --workers " + workers + " binarize --backend model:" + q(model) + " -i " +
                       q(dir / "ins0.png") + " -o " + q(out / "mask.png") + " --debug " + q(out / "debug"));
    c.expect(code == 0, "binarize exit " + std::to_string(code));
    code = run_cli("--seed 31 --workers " + workers + " export-patches -m " + q(dir / "manifest.json") + " -o " +
                   q(out / "patches"));
    c.expect(code == 0, "export-patches exit " + std::to_string(code));
    runs[tag] = snapshot(out);
  }
  const auto& ref = runs["w1a"];
  std::size_t patch_files = 0;
  for (const auto& [name, _] : ref) patch_files += name.rfind("patches/", 0) == 0;
  c.expect(ref.count("mask.png") == 1 && patch_files > 3, "expected outputs missing");
  for (const auto& [tag, files] : runs) c.expect(files == ref, "run " + tag + " differs from w1a");
  return c.outcome("binarize (tiny model) + export-patches, 4 runs over workers {1,4}, " +
                   std::to_string(ref.size()) + " files compared byte for byte");
}

Outcome classical_baselines() {
  Check c;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const auto img = inscribin::testing::random_gray(seed, 8 + static_cast<int>(rng() % 57), 8 + static_cast<int>(rng() % 57));
    const int t = otsu_threshold(img);
    double best = 0;
    int argmax = 0;
    for (int cand = 0; cand < 256; ++cand) {
      const double v = oracle::between_class_variance(img, cand);
      if (v > best) {
        best = v;
        argmax = cand;
      }
    }
    c.expect(std::abs(oracle::between_class_variance(img, t) - best) <= 1e-9 * std::max(1.0, best),
             "seed " + std::to_string(seed) + " otsu " + std::to_string(t) + " vs argmax " + std::to_string(argmax));
  }
  int sauvola_images = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto img = inscribin::testing::random_gray(100 + seed, 32, 32);
    for (int window : {3, 15, 25}) {
      SauvolaParams p;
      p.window = window;
      for (auto pol : {Polarity::DarkText, Polarity::LightText})
        c.expect(sauvola_binarize(img, p, pol) == oracle::sauvola(img, p, pol),
                 "sauvola seed " + std::to_string(seed) + " window " + std::to_string(window));
    }
    ++sauvola_images;
  }
  return c.outcome("otsu = brute-force argmax on 50 random images; sauvola = naive on " +
                   std::to_string(sauvola_images) + " 32x32 images x 3 windows x 2 polarities (exact)");
}

Outcome corpus_ranges() {
  const char* manifest = std::getenv("INSCRIBIN_CORPUS_MANIFEST");
  if (!manifest || !*manifest)
    return {Status::Skip, "corpus not available; set INSCRIBIN_CORPUS_MANIFEST to a manifest of the inscription corpus"};
  Check c;
  const auto stats = compute_stats(Manifest::load(manifest), 4);
  auto range = [&](const char* name, Range got, double lo, double hi, double tol) {
    c.expect(std::abs(got.min - lo) <= tol && std::abs(got.max - hi) <= tol,
             std::string(name) + " [" + fmt("%g", got.min) + "," + fmt("%g", got.max) + "]");
  };
  range("fragments", stats.components, 1, 708, 0);
  range("width", stats.width, 351, 3840, 0);
  range("height", stats.height, 148, 2784, 0);
  // Reference aspect ratios are given to two decimals.
  range("aspect", stats.aspect, 0.34, 13.3, 0.005);
  return c.outcome(std::to_string(stats.images.size()) + " images vs fragments [1,708], width [351,3840], height "
                   "[148,2784], aspect [0.34,13.3]");
}

Outcome fixture_model_interop() {
  Check c;
  const std::string dir = std::string(INSCRIBIN_FIXTURES) + "/models/";
  const auto model = model_binarizer(dir + "tiny_unet.onnx");
  c.expect(model->input_side() == kModelSide, "input side");
  float lo = 1;
  float hi = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto patch = inscribin::testing::random_gray(seed, 512, 512);
    const auto out = model->predict(patch, Window{0, 0, 512});
    c.expect(out.width() == 512 && out.height() == 512, "output shape");
    for (float v : out.pixels()) {
      c.expect(std::isfinite(v) && v >= 0.0f && v <= 1.0f, "value outside [0,1]");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const auto half = model_binarizer(dir + "constant_half.onnx")->predict(GrayImage(512, 512, 90), Window{0, 0, 512});
  c.expect(std::all_of(half.pixels().begin(), half.pixels().end(), [](float v) { return v == 0.5f; }),
           "constant model not 0.5");
  bool rejected = false;
  try {
    model_binarizer(dir + "wrong_side_256.onnx");
  } catch (const Error& e) {
    rejected = e.kind() == ErrorKind::SignatureMismatch;
  }
  c.expect(rejected, "256-side model accepted");
  return c.outcome("tiny model 512x512 -> 512x512, outputs in [" + fmt("%.4f", lo) + "," + fmt("%.4f", hi) +
                   "], constant model 0.5, 256-side model rejected");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric-oracle-suite", metric_oracle_suite},
      {"drd-hand-case", drd_hand_case},
      {"patching-invariants", patching_invariants},
      {"oracle-end-to-end", oracle_end_to_end},
      {"determinism", determinism},
      {"classical-baselines", classical_baselines},
      {"corpus-ranges", corpus_ranges},
      {"fixture-model-interop", fixture_model_interop},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("threw: ") + e.what()};
    }
    const char* label = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("%s %s: %s\n", label, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.status == Status::Fail;
  }
  return failed == 0 ? 0 : 1;
}
