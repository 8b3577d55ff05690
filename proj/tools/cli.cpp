#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "inscribin/dataset.hpp"
#include "inscribin/image_io.hpp"
#include "inscribin/metrics.hpp"
#include "inscribin/parallel.hpp"

namespace inscribin::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return kIo;
    case ErrorKind::ModelLoadError:
    case ErrorKind::SignatureMismatch:
    case ErrorKind::InferenceError: return kModel;
    case ErrorKind::InvalidParam:
    case ErrorKind::UnknownMethod: return kUsage;
    default: return kDataContract;
  }
}

std::unique_ptr<PatchBinarizer> make_backend(const RunConfig& cfg, const BinaryMask* gt) {
  const Polarity polarity = parse_polarity(cfg.polarity);
  const std::string& b = cfg.backend;
  if (b == "otsu") return otsu_binarizer(polarity);
  if (b == "sauvola") return sauvola_binarizer(cfg.sauvola, polarity);
  if (b == "oracle") {
    if (!gt) fail(ErrorKind::InvalidParam, "the oracle backend needs --gt");
    return oracle_binarizer(*gt, cfg.sampling.out_side);
  }
  if (b == "model") {
    if (cfg.model_path.empty()) {
      fail(ErrorKind::ModelLoadError, "no model given (use --model, --backend model:<path> or INSCRIBIN_MODEL)");
    }
    return model_binarizer(cfg.model_path);
  }
  if (b.starts_with("model:")) return model_binarizer(b.substr(6));
  fail(ErrorKind::UnknownMethod, "unknown backend '" + b + "'");
}

void cmd_binarize(const RunConfig& cfg, const BinarizeArgs& args) {
  const GrayImage img = read_gray(args.input);
  std::optional<BinaryMask> gt;
  if (args.gt) {
    gt = read_mask(*args.gt);
    if (!gt->same_shape(img)) fail(ErrorKind::DimMismatch, "--gt does not match the input image size");
  }
  const auto backend = make_backend(cfg, gt ? &*gt : nullptr);
  InferenceConfig inference = cfg.inference;
  inference.workers = cfg.workers;
  const auto result = run_pipeline(img, *backend, inference, cfg.dilation);

  write_mask(args.output, result.refined.final_mask);
  if (args.overlay) write_overlay(*args.overlay, img, result.refined.final_mask);
  if (args.debug_dir) {
    write_probability(*args.debug_dir / "coarse.png", result.coarse.coarse);
    write_mask(*args.debug_dir / "pseudo.png", result.coarse.pseudo);
    write_mask(*args.debug_dir / "final.png", result.refined.final_mask);
  }
}

namespace {

std::map<std::string, fs::path> masks_by_stem(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, "not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".png" && ext != ".tif" && ext != ".tiff") continue;
    out[entry.path().stem().string()] = entry.path();
  }
  return out;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

}  // namespace

void cmd_evaluate(const RunConfig& cfg, const EvaluateArgs& args) {
  const auto preds = masks_by_stem(args.pred_dir);
  const auto gts = masks_by_stem(args.gt_dir);
  std::vector<std::string> unmatched;
  for (const auto& [stem, path] : preds) {
    if (!gts.contains(stem)) unmatched.push_back(stem + " (prediction only)");
  }
  for (const auto& [stem, path] : gts) {
    if (!preds.contains(stem)) unmatched.push_back(stem + " (ground truth only)");
  }
  if (!unmatched.empty()) {
    std::string list;
    for (const auto& u : unmatched) list += (list.empty() ? "" : ", ") + u;
    fail(ErrorKind::UnmatchedPair, "unmatched files: " + list);
  }
  if (preds.empty()) fail(ErrorKind::EmptySet, "no masks found in " + args.pred_dir.string());

  std::vector<std::string> ids;
  for (const auto& [stem, path] : preds) ids.push_back(stem);
  std::vector<EvalReport> reports(ids.size());
  parallel_for(ids.size(), cfg.workers, [&](std::size_t i) {
    reports[i] = evaluate_pair(read_mask(preds.at(ids[i])), read_mask(gts.at(ids[i])), cfg.psnr_cap);
  });

  std::string csv = "image_id,psnr,fm,fps,drd\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& r = reports[i];
    csv += ids[i] + "," + fixed6(r.psnr) + "," + fixed6(r.fm) + "," + fixed6(r.f_ps) + "," + fixed6(r.drd) + "\n";
  }
  if (args.csv) write_text(*args.csv, csv);
  else std::cout << csv;

  if (args.json) {
    const auto mean = mean_report(reports);
    nlohmann::ordered_json doc;
    doc["images"] = ids.size();
    doc["psnr_cap"] = cfg.psnr_cap;
    doc["mean"] = {{"psnr", mean.psnr}, {"fm", mean.fm}, {"fps", mean.f_ps}, {"drd", mean.drd}};
    nlohmann::ordered_json degenerate = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (reports[i].drd_degenerate) degenerate.push_back(ids[i]);
    }
    doc["drd_degenerate"] = std::move(degenerate);
    write_text(*args.json, doc.dump(2) + "\n");
  }
}

void cmd_baseline(const RunConfig& cfg, const std::string& method, const fs::path& input, const fs::path& output) {
  const Polarity polarity = parse_polarity(cfg.polarity);
  if (method != "otsu" && method != "sauvola") fail(ErrorKind::UnknownMethod, "unknown baseline '" + method + "'");
  const GrayImage img = read_gray(input);
  const ProbabilityMap prob =
      method == "otsu" ? otsu_binarize(img, polarity) : sauvola_binarize(img, cfg.sauvola, polarity);
  write_mask(output, threshold(prob, 0.5f));
}

void cmd_export_patches(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& out) {
  const Manifest manifest = Manifest::load(manifest_path);
  SamplingConfig sampling = cfg.sampling;
  sampling.rng_seed = cfg.seed;
  const auto summary = export_patches(manifest, sampling, cfg.dilation, out, cfg.workers);

  nlohmann::ordered_json doc;
  doc["seed"] = cfg.seed;
  doc["images"] = nlohmann::ordered_json::array();
  for (const auto& item : summary.items) {
    nlohmann::ordered_json j;
    j["id"] = item.id;
    j["n_fg"] = item.n_fg;
    j["n_bg"] = item.n_bg;
    j["skipped"] = item.skipped;
    if (item.skipped) {
      j["warning"] = item.warning;
      std::cerr << "warning: skipped " << item.id << ": " << item.warning << "\n";
    }
    doc["images"].push_back(std::move(j));
  }
  write_text(out / "summary.json", doc.dump(2) + "\n");
}

void cmd_stats(const RunConfig& cfg, const fs::path& manifest_path, const std::optional<fs::path>& json) {
  const auto stats = compute_stats(Manifest::load(manifest_path), cfg.workers);
  std::cout << "image_id,components,width,height,aspect\n";
  for (const auto& s : stats.images) {
    std::cout << s.id << "," << s.components << "," << s.width << "," << s.height << "," << fixed6(s.aspect) << "\n";
  }
  auto range_line = [](const char* name, const Range& r) {
    std::cout << "# " << name << " min=" << fixed6(r.min) << " max=" << fixed6(r.max) << "\n";
  };
  range_line("components", stats.components);
  range_line("width", stats.width);
  range_line("height", stats.height);
  range_line("aspect", stats.aspect);
  if (json) {
    nlohmann::ordered_json doc;
    auto range = [](const Range& r) { return nlohmann::ordered_json{{"min", r.min}, {"max", r.max}}; };
    doc["components"] = range(stats.components);
    doc["width"] = range(stats.width);
    doc["height"] = range(stats.height);
    doc["aspect"] = range(stats.aspect);
    doc["images"] = nlohmann::ordered_json::array();
    for (const auto& s : stats.images) {
      doc["images"].push_back(
          {{"id", s.id}, {"components", s.components}, {"width", s.width}, {"height", s.height}, {"aspect", s.aspect}});
    }
    write_text(*json, doc.dump(2) + "\n");
  }
}

void cmd_split(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& out, double train_fraction) {
  split(Manifest::load(manifest_path), train_fraction, cfg.seed).save(out);
}

namespace {

void add_shared_options(CLI::App& app, RunConfig& cfg) {
  app.option_defaults()->always_capture_default();

  app.add_option("--s1", cfg.dilation.s1, "Dilation kernel short side, in units of the mean character height")
      ->group("Patching");
  app.add_option("--s2", cfg.dilation.s2, "Dilation kernel long side, in units of the mean character height")
      ->group("Patching");
  app.add_option("--r-base", cfg.sampling.r_base, "Foreground patches per valid component")->group("Patching");
  app.add_option("--n-min", cfg.sampling.n_min, "Minimum foreground patches per image")->group("Patching");
  app.add_option("--n-max", cfg.sampling.n_max, "Maximum foreground patches per image")->group("Patching");
  app.add_option("--n-bg-max", cfg.sampling.n_bg_max, "Background patches for an all-background image")
      ->group("Patching");
  app.add_option("--k-min", cfg.sampling.k_min, "Smallest patch side, in mean character heights")->group("Patching");
  app.add_option("--k-max", cfg.sampling.k_max, "Largest patch side, in mean character heights")->group("Patching");
  app.add_option("--q1-fence", cfg.sampling.q1_fence, "Lower IQR fence factor for valid components")
      ->group("Patching");
  app.add_option("--q2-fence", cfg.sampling.q2_fence, "Upper IQR fence factor for valid components")
      ->group("Patching");
  app.add_option("--out-side", cfg.sampling.out_side, "Side that sampled patches are resized to")->group("Patching");

  app.add_option("--scales", cfg.inference.scales, "Coarse sliding-window scales in pixels")->group("Inference");
  app.add_option("--stride-fraction", cfg.inference.stride_fraction, "Coarse window stride as a fraction of its side")
      ->group("Inference");
  app.add_option("--threshold", cfg.inference.threshold, "Probability cut for the pseudo and final masks")
      ->group("Inference");
  app.add_option("--refine-k", cfg.inference.refine_k, "Refinement window side, in mean character heights")
      ->group("Inference");
  app.add_option("--refine-overlap", cfg.inference.refine_overlap, "Overlap between refinement windows")
      ->group("Inference");
  app.add_option("--epsilon", cfg.inference.epsilon, "Added to counts when averaging refinement predictions")
      ->group("Inference");

  app.add_option("--sauvola-window", cfg.sauvola.window, "Sauvola window side (odd)")->group("Backends");
  app.add_option("--sauvola-k", cfg.sauvola.k, "Sauvola sensitivity k")->group("Backends");
  app.add_option("--sauvola-r", cfg.sauvola.r, "Sauvola dynamic range r")->group("Backends");
  app.add_option("--polarity", cfg.polarity, "Text polarity for classical backends")
      ->check(CLI::IsMember({"dark", "light"}))
      ->group("Backends");

  app.add_option("--seed", cfg.seed, "Random seed for sampling and splitting");
  app.add_option("--workers", cfg.workers, "Worker threads; results do not depend on it")
      ->default_val(default_workers())
      ->check(CLI::PositiveNumber);
  app.add_option("--psnr-cap", cfg.psnr_cap, "PSNR reported for identical masks, in dB");
}

}  // namespace

int run(int argc, const char* const* argv) {
  RunConfig cfg;
  CLI::App app{"Stone-inscription binarization with character-context-aware patching"};
  app.name("inscribin");
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  add_shared_options(app, cfg);

  BinarizeArgs bin;
  auto* binarize_cmd = app.add_subcommand("binarize", "Two-stage binarization of one image");
  binarize_cmd->add_option("-i,--input", bin.input, "Input image")->required();
  binarize_cmd->add_option("-o,--output", bin.output, "Output mask PNG (0/255)")->required();
  binarize_cmd->add_option("--backend", cfg.backend, "otsu | sauvola | oracle | model | model:<path>")
      ->capture_default_str();
  binarize_cmd->add_option("--model", cfg.model_path, "ONNX model for the model backend")->envname("INSCRIBIN_MODEL");
  binarize_cmd->add_option("--gt", bin.gt, "Ground-truth mask (oracle backend)");
  binarize_cmd->add_option("--overlay", bin.overlay, "Also write the input with predicted text tinted");
  auto* debug_opt = binarize_cmd->add_option("--debug", bin.debug_dir, "Write coarse.png, pseudo.png, final.png here");

  EvaluateArgs eval;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "PSNR, FM, pseudo-FM and DRD over matched mask files");
  evaluate_cmd->add_option("--pred-dir", eval.pred_dir, "Predicted masks")->required();
  evaluate_cmd->add_option("--gt-dir", eval.gt_dir, "Ground-truth masks with the same file stems")->required();
  evaluate_cmd->add_option("--csv", eval.csv, "Per-image CSV (default: stdout)");
  evaluate_cmd->add_option("--json", eval.json, "JSON summary with means");

  std::string method;
  fs::path base_in;
  fs::path base_out;
  auto* baseline_cmd = app.add_subcommand("baseline", "Full-image classical binarization");
  baseline_cmd->add_option("method", method, "otsu | sauvola")->required();
  baseline_cmd->add_option("-i,--input", base_in, "Input image")->required();
  baseline_cmd->add_option("-o,--output", base_out, "Output mask PNG")->required();

  fs::path manifest;
  fs::path out;
  auto* export_cmd = app.add_subcommand("export-patches", "Sample training patches for every train entry");
  export_cmd->add_option("-m,--manifest", manifest, "manifest.json")->required();
  export_cmd->add_option("-o,--out", out, "Patch root directory")->required();

  std::optional<fs::path> stats_json;
  auto* stats_cmd = app.add_subcommand("stats", "Per-image component counts and sizes with corpus ranges");
  stats_cmd->add_option("-m,--manifest", manifest, "manifest.json")->required();
  stats_cmd->add_option("--json", stats_json, "Also write the statistics as JSON");

  double train_fraction = 0.85;
  auto* split_cmd = app.add_subcommand("split", "Seeded, tag-stratified train/test split");
  split_cmd->add_option("-m,--manifest", manifest, "manifest.json")->required();
  split_cmd->add_option("-o,--out", out, "Output manifest with the split")->required();
  split_cmd->add_option("--train-fraction", train_fraction, "Fraction of entries assigned to train")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  cfg.debug = debug_opt->count() > 0;

  try {
    cfg.dilation.validate();
    cfg.sampling.validate();
    cfg.inference.validate();
    cfg.sauvola.validate();
    if (binarize_cmd->parsed()) cmd_binarize(cfg, bin);
    else if (evaluate_cmd->parsed()) cmd_evaluate(cfg, eval);
    else if (baseline_cmd->parsed()) cmd_baseline(cfg, method, base_in, base_out);
    else if (export_cmd->parsed()) cmd_export_patches(cfg, manifest, out);
    else if (stats_cmd->parsed()) cmd_stats(cfg, manifest, stats_json);
    else if (split_cmd->parsed()) cmd_split(cfg, manifest, out, train_fraction);
  } catch (const Error& e) {
    std::cerr << "inscribin: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "inscribin: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}

}  // namespace inscribin::cli
