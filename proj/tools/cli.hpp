#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "inscribin/backends.hpp"
#include "inscribin/inference.hpp"
#include "inscribin/metrics.hpp"
#include "inscribin/patching.hpp"

namespace inscribin::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kModel = 4,
  kDataContract = 5,
};

int exit_code_for(ErrorKind kind);

struct RunConfig {
  DilationConfig dilation;
  SamplingConfig sampling;
  InferenceConfig inference;
  SauvolaParams sauvola;
  std::string polarity = "dark";
  // otsu | sauvola | oracle | model | model:<path>
  std::string backend = "model";
  std::string model_path;  // used by "model"; defaults to $INSCRIBIN_MODEL
  std::uint64_t seed = 0;
  int workers = 1;
  double psnr_cap = kDefaultPsnrCap;
  bool debug = false;
};

struct BinarizeArgs {
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<std::filesystem::path> gt;
  std::optional<std::filesystem::path> overlay;
  std::optional<std::filesystem::path> debug_dir;
};

// Exactly one backend, resolved from cfg.backend.
std::unique_ptr<PatchBinarizer> make_backend(const RunConfig& cfg, const BinaryMask* gt);

void cmd_binarize(const RunConfig& cfg, const BinarizeArgs& args);

struct EvaluateArgs {
  std::filesystem::path pred_dir;
  std::filesystem::path gt_dir;
  std::optional<std::filesystem::path> csv;   // stdout when absent
  std::optional<std::filesystem::path> json;
};

void cmd_evaluate(const RunConfig& cfg, const EvaluateArgs& args);

void cmd_baseline(const RunConfig& cfg, const std::string& method, const std::filesystem::path& input,
                  const std::filesystem::path& output);

void cmd_export_patches(const RunConfig& cfg, const std::filesystem::path& manifest, const std::filesystem::path& out);

void cmd_stats(const RunConfig& cfg, const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& json);

void cmd_split(const RunConfig& cfg, const std::filesystem::path& manifest, const std::filesystem::path& out,
               double train_fraction);

/// Parses arguments and dispatches; returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace inscribin::cli
