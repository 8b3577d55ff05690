#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "inscribin/raster.hpp"

namespace inscribin {

// Foreground (1) is the positive class.
struct Confusion {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long tn = 0;
};

Confusion confusion(const BinaryMask& pred, const BinaryMask& gt);

/// 2PR / (P + R) in percent; 0 when P + R = 0.
double f_measure(const BinaryMask& pred, const BinaryMask& gt);

inline constexpr double kDefaultPsnrCap = 100.0;

/// 10 log10(1 / MSE) over {0, 1} maps, capped at `cap` dB (MSE = 0 gives cap).
double psnr(const BinaryMask& pred, const BinaryMask& gt, double cap = kDefaultPsnrCap);

/// Zhang-Suen thinning to a unit-width 8-connected skeleton. Components
/// that thinning would erase entirely (2x2 blocks) keep their first pixel in
/// scan order, so every foreground component is represented.
BinaryMask skeletonize(const BinaryMask& mask);

/// Precision against gt combined with recall against skeletonize(gt), in
/// percent.
double pseudo_f_measure(const BinaryMask& pred, const BinaryMask& gt);

// 5x5 inverse-distance weights centered on the flipped pixel, W(0,0) = 0.
struct DrdWeights {
  std::array<std::array<double, 5>, 5> raw{};
  double raw_sum = 0;  // sum of raw in row-major order

  double normalized(int dy, int dx) const { return raw[static_cast<std::size_t>(dy + 2)][static_cast<std::size_t>(dx + 2)] / raw_sum; }
};

const DrdWeights& drd_weights();

struct DrdResult {
  double drd = 0;
  double distortion_sum = 0;  // sum of DRD_k over flipped pixels
  long long nubn = 0;         // non-uniform 8x8 gt blocks
  // gt had no non-uniform block while pred != gt; NUBN was taken as 1.
  bool degenerate = false;
};

/// Distance reciprocal distortion. Out-of-image neighbors contribute 0; the
/// 8x8 block grid is anchored at (0, 0) and partial edge blocks count.
DrdResult drd_detailed(const BinaryMask& pred, const BinaryMask& gt);

double drd(const BinaryMask& pred, const BinaryMask& gt);

struct EvalReport {
  double psnr = 0;
  double fm = 0;
  double f_ps = 0;
  double drd = 0;
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long tn = 0;
  bool drd_degenerate = false;
};

EvalReport evaluate_pair(const BinaryMask& pred, const BinaryMask& gt, double psnr_cap = kDefaultPsnrCap);

/// Arithmetic mean of the metrics in the given order; counts are summed.
/// Throws EmptySet for an empty list.
EvalReport mean_report(std::span<const EvalReport> reports);

using MaskPair = std::pair<BinaryMask, BinaryMask>;  // (pred, gt)

EvalReport evaluate_set(std::span<const MaskPair> pairs, double psnr_cap = kDefaultPsnrCap, int workers = 1);

}  // namespace inscribin
