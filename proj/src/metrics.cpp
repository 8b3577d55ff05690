#include "inscribin/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "inscribin/imgcore.hpp"
#include "inscribin/parallel.hpp"

namespace inscribin {

namespace {

void require_same_shape(const BinaryMask& pred, const BinaryMask& gt) {
  if (!pred.same_shape(gt)) {
    fail(ErrorKind::DimMismatch, "prediction " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                                     " vs ground truth " + std::to_string(gt.width()) + "x" +
                                     std::to_string(gt.height()));
  }
}

double harmonic_percent(double p, double r) { return p + r > 0 ? 200.0 * p * r / (p + r) : 0.0; }

double precision(const Confusion& c) {
  return c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
}

}  // namespace

Confusion confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt);
  Confusion c;
  auto p = pred.pixels();
  auto g = gt.pixels();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pi = p[i] != 0;
    const bool gi = g[i] != 0;
    if (pi && gi) ++c.tp;
    else if (pi) ++c.fp;
    else if (gi) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f_measure(const BinaryMask& pred, const BinaryMask& gt) {
  const auto c = confusion(pred, gt);
  const double r = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  return harmonic_percent(precision(c), r);
}

double psnr(const BinaryMask& pred, const BinaryMask& gt, double cap) {
  const auto c = confusion(pred, gt);
  const double mse = static_cast<double>(c.fp + c.fn) / static_cast<double>(pred.size());
  if (mse == 0) return cap;
  return std::min(cap, 10.0 * std::log10(1.0 / mse));
}

BinaryMask skeletonize(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask img = mask;
  auto px = [&](int x, int y) -> int { return img.contains(x, y) && img.at(x, y) ? 1 : 0; };

  std::vector<std::pair<int, int>> doomed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      doomed.clear();
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!img.at(x, y)) continue;
          // Neighbors clockwise from north.
          const int p[8] = {px(x, y - 1), px(x + 1, y - 1), px(x + 1, y), px(x + 1, y + 1),
                            px(x, y + 1), px(x - 1, y + 1), px(x - 1, y), px(x - 1, y - 1)};
          int b = 0;
          int a = 0;
          for (int i = 0; i < 8; ++i) {
            b += p[i];
            if (p[i] == 0 && p[(i + 1) % 8] == 1) ++a;
          }
          if (b < 2 || b > 6 || a != 1) continue;
          const int n = p[0], e = p[2], s = p[4], wv = p[6];
          const bool ok = pass == 0 ? (n * e * s == 0 && e * s * wv == 0) : (n * e * wv == 0 && n * s * wv == 0);
          if (ok) doomed.emplace_back(x, y);
        }
      }
      for (auto [x, y] : doomed) img.at(x, y) = 0;
      changed = changed || !doomed.empty();
    }
  }

  const auto labeled = label_components(mask);
  std::vector<char> represented(labeled.components.size() + 1, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (img.at(x, y)) represented[static_cast<std::size_t>(labeled.labels.at(x, y))] = 1;
    }
  }
  for (const auto& c : labeled.components) {
    if (represented[static_cast<std::size_t>(c.label)]) continue;
    // First pixel in scan order lies on the top row of the bounding box.
    for (int x = c.bbox.x_min; x <= c.bbox.x_max; ++x) {
      if (labeled.labels.at(x, c.bbox.y_min) == c.label) {
        img.at(x, c.bbox.y_min) = 1;
        break;
      }
    }
  }
  return img;
}

double pseudo_f_measure(const BinaryMask& pred, const BinaryMask& gt) {
  const auto c = confusion(pred, gt);
  const BinaryMask skel = skeletonize(gt);
  long long skel_total = 0;
  long long skel_hit = 0;
  auto s = skel.pixels();
  auto p = pred.pixels();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s[i]) continue;
    ++skel_total;
    if (p[i]) ++skel_hit;
  }
  const double recall = skel_total > 0 ? static_cast<double>(skel_hit) / static_cast<double>(skel_total) : 0.0;
  return harmonic_percent(precision(c), recall);
}

const DrdWeights& drd_weights() {
  static const DrdWeights weights = [] {
    DrdWeights w;
    for (int dy = -2; dy <= 2; ++dy) {
      for (int dx = -2; dx <= 2; ++dx) {
        const double v = (dx == 0 && dy == 0) ? 0.0 : 1.0 / std::sqrt(static_cast<double>(dx * dx + dy * dy));
        w.raw[static_cast<std::size_t>(dy + 2)][static_cast<std::size_t>(dx + 2)] = v;
        w.raw_sum += v;
      }
    }
    return w;
  }();
  return weights;
}

DrdResult drd_detailed(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt);
  const int w = gt.width();
  const int h = gt.height();
  const auto& weights = drd_weights();

  DrdResult result;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int value = pred.at(x, y) ? 1 : 0;
      if (value == (gt.at(x, y) ? 1 : 0)) continue;
      // Raw weights accumulate in the same order as raw_sum, so a uniform
      // interior neighborhood gives exactly raw_sum / raw_sum = 1.
      double acc = 0;
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (!gt.contains(nx, ny)) continue;
          const int diff = std::abs((gt.at(nx, ny) ? 1 : 0) - value);
          acc += diff * weights.raw[static_cast<std::size_t>(dy + 2)][static_cast<std::size_t>(dx + 2)];
        }
      }
      result.distortion_sum += acc / weights.raw_sum;
    }
  }

  for (int by = 0; by < h; by += 8) {
    for (int bx = 0; bx < w; bx += 8) {
      bool any_fg = false;
      bool any_bg = false;
      for (int y = by; y < std::min(by + 8, h); ++y) {
        for (int x = bx; x < std::min(bx + 8, w); ++x) {
          if (gt.at(x, y)) any_fg = true;
          else any_bg = true;
        }
      }
      if (any_fg && any_bg) ++result.nubn;
    }
  }

  if (result.nubn == 0) {
    if (result.distortion_sum == 0) return result;
    result.degenerate = true;
    result.drd = result.distortion_sum;
    return result;
  }
  result.drd = result.distortion_sum / static_cast<double>(result.nubn);
  return result;
}

double drd(const BinaryMask& pred, const BinaryMask& gt) { return drd_detailed(pred, gt).drd; }

EvalReport evaluate_pair(const BinaryMask& pred, const BinaryMask& gt, double psnr_cap) {
  EvalReport r;
  const auto c = confusion(pred, gt);
  r.tp = c.tp;
  r.fp = c.fp;
  r.fn = c.fn;
  r.tn = c.tn;
  r.psnr = psnr(pred, gt, psnr_cap);
  r.fm = f_measure(pred, gt);
  r.f_ps = pseudo_f_measure(pred, gt);
  const auto d = drd_detailed(pred, gt);
  r.drd = d.drd;
  r.drd_degenerate = d.degenerate;
  return r;
}

EvalReport mean_report(std::span<const EvalReport> reports) {
  if (reports.empty()) fail(ErrorKind::EmptySet, "cannot average an empty evaluation set");
  EvalReport m;
  for (const auto& r : reports) {
    m.psnr += r.psnr;
    m.fm += r.fm;
    m.f_ps += r.f_ps;
    m.drd += r.drd;
    m.tp += r.tp;
    m.fp += r.fp;
    m.fn += r.fn;
    m.tn += r.tn;
    m.drd_degenerate = m.drd_degenerate || r.drd_degenerate;
  }
  const auto n = static_cast<double>(reports.size());
  m.psnr /= n;
  m.fm /= n;
  m.f_ps /= n;
  m.drd /= n;
  return m;
}

EvalReport evaluate_set(std::span<const MaskPair> pairs, double psnr_cap, int workers) {
  if (pairs.empty()) fail(ErrorKind::EmptySet, "cannot evaluate an empty set");
  std::vector<EvalReport> reports(pairs.size());
  parallel_for(pairs.size(), workers,
               [&](std::size_t i) { reports[i] = evaluate_pair(pairs[i].first, pairs[i].second, psnr_cap); });
  return mean_report(reports);
}

}  // namespace inscribin
