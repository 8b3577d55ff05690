#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "inscribin/raster.hpp"

namespace inscribin {

enum class Polarity { DarkText, LightText };

Polarity parse_polarity(std::string_view text);

// A patch-level binarizer: maps a gray patch to per-pixel text probabilities
// of the same size. `source` is where the patch was cut from the full image
// (before any resize); most backends ignore it.
//
// predict() may be called from several threads at once.
class PatchBinarizer {
 public:
  virtual ~PatchBinarizer() = default;

  virtual std::string name() const = 0;

  // Side length patches are resized to before predict(); nullopt = any size.
  virtual std::optional<int> input_side() const = 0;

  virtual ProbabilityMap predict(const GrayImage& patch, const Window& source) const = 0;
};

/// Global Otsu threshold t over the 256-bin histogram: the class split
/// {v <= t} / {v > t} maximizing between-class variance, smallest t on ties.
/// A constant image returns its value.
int otsu_threshold(const GrayImage& img);

/// DarkText marks pixels <= threshold as 1.0; LightText is the complement.
ProbabilityMap otsu_binarize(const GrayImage& img, Polarity polarity);

struct SauvolaParams {
  int window = 25;
  double k = 0.2;
  double r = 128.0;

  void validate() const;
};

/// T = m * (1 + k * (s / r - 1)) with the mean m and population standard
/// deviation s of the window clipped to the image. DarkText marks v < T.
ProbabilityMap sauvola_binarize(const GrayImage& img, const SauvolaParams& params, Polarity polarity);

std::unique_ptr<PatchBinarizer> otsu_binarizer(Polarity polarity);
std::unique_ptr<PatchBinarizer> sauvola_binarizer(const SauvolaParams& params, Polarity polarity);

/// Test double that answers with the ground-truth crop under `source`,
/// nearest-resized to the patch size. Throws MissingGroundTruth when the
/// window falls outside the registered mask.
std::unique_ptr<PatchBinarizer> oracle_binarizer(BinaryMask gt, int input_side = 512);

// Expected model signature: float32 `input` and `prob`, both N x 1 x 512 x 512.
inline constexpr int kModelSide = 512;

/// Loads an ONNX model (opset <= 11 is what the runtime is tested against).
/// Throws ModelLoadError when the file is missing or unparsable and
/// SignatureMismatch when its declared tensors differ from the contract.
std::unique_ptr<PatchBinarizer> model_binarizer(const std::filesystem::path& model_path);

}  // namespace inscribin
