#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "inscribin/metrics.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace inscribin;
using inscribin::testing::mask_from_rows;
using inscribin::testing::random_mask;

namespace {

BinaryMask complement(const BinaryMask& m) {
  BinaryMask out = m;
  for (auto& v : out.pixels()) v = v ? 0 : 1;
  return out;
}

struct SkeletonCase {
  std::string name;
  BinaryMask input;
  BinaryMask skeleton;
};

BinaryMask parse_block(std::ifstream& in, std::string& line) {
  std::vector<std::string> rows;
  while (std::getline(in, line) && line.rfind('#', 0) != 0) rows.push_back(line);
  std::vector<const char*> ptrs;
  for (const auto& r : rows) ptrs.push_back(r.c_str());
  return mask_from_rows(ptrs);
}

std::vector<SkeletonCase> load_skeleton_fixtures() {
  std::vector<SkeletonCase> out;
  for (const auto& entry : std::filesystem::directory_iterator(std::string(INSCRIBIN_FIXTURES) + "/skeleton")) {
    std::ifstream in(entry.path());
    std::string line;
    std::getline(in, line);  // "# input"
    SkeletonCase c;
    c.name = entry.path().stem().string();
    c.input = parse_block(in, line);
    c.skeleton = parse_block(in, line);
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

}  // namespace

TEST_CASE("confusion: trivial cases and naive loop") {
  const auto gt = random_mask(1, 20, 15, 0.3);
  const auto same = confusion(gt, gt);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
  const auto inv = confusion(complement(gt), gt);
  CHECK(inv.tp == 0);
  CHECK(inv.tn == 0);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = random_mask(100 + s, 20, 15, 0.4);
    const auto c = confusion(p, gt);
    const auto o = oracle::confusion(p, gt);
    CHECK(c.tp == o.tp);
    CHECK(c.fp == o.fp);
    CHECK(c.fn == o.fn);
    CHECK(c.tn == o.tn);
    CHECK(c.tp + c.fp + c.fn + c.tn == 300);
  }
  CHECK_THROWS_AS(confusion(BinaryMask(3, 3), BinaryMask(3, 4)), Error);
}

TEST_CASE("f_measure examples") {
  const auto gt = mask_from_rows({"#..", "...", "..."});
  CHECK(f_measure(gt, gt) == 100.0);
  CHECK(f_measure(mask_from_rows({"...", "...", "..#"}), gt) == 0.0);
  // tp = 1, fp = 1, fn = 0
  CHECK(f_measure(mask_from_rows({"##.", "...", "..."}), gt) == doctest::Approx(66.6667).epsilon(1e-5));
  CHECK(f_measure(BinaryMask(3, 3), BinaryMask(3, 3)) == 0.0);
}

TEST_CASE("psnr examples") {
  const auto gt = random_mask(3, 10, 10, 0.5);
  CHECK(psnr(gt, gt) == 100.0);
  CHECK(psnr(gt, gt, 60.0) == 60.0);
  auto one_off = gt;
  one_off.at(4, 4) ^= 1;
  CHECK(psnr(one_off, gt) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("pseudo f-measure examples") {
  const auto gt = mask_from_rows({".........", ".#######.", ".#######.", ".#######.", "........."});
  CHECK(pseudo_f_measure(gt, gt) == 100.0);
  CHECK(pseudo_f_measure(BinaryMask(9, 5), gt) == 0.0);
  const auto skel = oracle::zhang_suen(gt);
  REQUIRE(count_foreground(skel) > 0);
  CHECK(pseudo_f_measure(skel, gt) == 100.0);
  CHECK(f_measure(skel, gt) < 100.0);
}

TEST_CASE("skeleton golden fixtures") {
  const auto cases = load_skeleton_fixtures();
  REQUIRE(cases.size() >= 5);
  for (const auto& c : cases) {
    CAPTURE(c.name);
    CHECK(skeletonize(c.input) == c.skeleton);
    CHECK(oracle::zhang_suen(c.input) == c.skeleton);
  }
}

TEST_CASE("skeleton is a subset of the mask and keeps every component") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto m = inscribin::testing::random_rectangles(s, 60, 50, 6, 2, 12);
    const auto sk = skeletonize(m);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (sk.pixels()[i]) CHECK(m.pixels()[i] == 1);
    for (const auto& comp : oracle::flood_fill_components(m)) {
      const bool kept = std::any_of(comp.begin(), comp.end(), [&](const auto& p) { return sk.at(p.first, p.second); });
      CHECK(kept);
    }
  }
}

TEST_CASE("drd weights are normalized and symmetric") {
  const auto& w = drd_weights();
  double sum = 0;
  for (int dy = -2; dy <= 2; ++dy)
    for (int dx = -2; dx <= 2; ++dx) {
      const double v = w.normalized(dy, dx);
      CHECK(v >= 0);
      sum += v;
      CHECK(v == w.normalized(-dy, -dx));
      CHECK(v == w.normalized(dx, dy));
      if (dy != 0 || dx != 0) CHECK(w.raw[dy + 2][dx + 2] == doctest::Approx(1.0 / std::hypot(dy, dx)));
    }
  CHECK(w.normalized(0, 0) == 0.0);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("drd examples") {
  BinaryMask gt(32, 32);
  gt.at(30, 30) = 1;  // one non-uniform block, far from the flip
  CHECK(drd(gt, gt) == 0.0);
  auto pred = gt;
  pred.at(10, 10) = 1;
  const auto r = drd_detailed(pred, gt);
  CHECK(r.distortion_sum == 1.0);
  CHECK(r.nubn == 1);
  CHECK(r.drd == 1.0);
  CHECK_FALSE(r.degenerate);

  // Partial blocks at the border count toward NUBN.
  BinaryMask edge(10, 10);
  edge.at(9, 9) = 1;
  CHECK(drd_detailed(edge, edge).nubn == 1);
  CHECK(oracle::nubn(edge) == 1);

  // Uniform gt with a difference: NUBN taken as 1 and flagged.
  const BinaryMask blank(16, 16);
  BinaryMask dot(16, 16);
  dot.at(8, 8) = 1;
  const auto d = drd_detailed(dot, blank);
  CHECK(d.degenerate);
  CHECK(d.drd == 1.0);
  CHECK_FALSE(drd_detailed(blank, blank).degenerate);
}

TEST_CASE("drd: out-of-image neighbors contribute nothing") {
  BinaryMask gt(8, 8);
  gt.at(7, 7) = 1;
  BinaryMask pred = gt;
  pred.at(0, 0) = 1;
  // Only the in-image part of the 5x5 window around the corner counts.
  double expect = 0;
  for (int dy = 0; dy <= 2; ++dy)
    for (int dx = 0; dx <= 2; ++dx) expect += drd_weights().normalized(dy, dx);
  CHECK(drd_detailed(pred, gt).distortion_sum == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("metrics agree with brute-force oracles on random pairs") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 64);
    const int h = 1 + static_cast<int>(rng() % 64);
    const double density = static_cast<double>(rng() % 100) / 100.0;
    const auto gt = random_mask(rng(), w, h, density);
    const auto pred = random_mask(rng(), w, h, density);
    CAPTURE(w);
    CAPTURE(h);
    CHECK(std::abs(psnr(pred, gt) - oracle::psnr(pred, gt, 100.0)) <= 1e-9);
    CHECK(std::abs(f_measure(pred, gt) - oracle::f_measure(pred, gt)) <= 1e-9);
    CHECK(std::abs(pseudo_f_measure(pred, gt) - oracle::pseudo_f_measure(pred, gt)) <= 1e-9);
    CHECK(std::abs(drd(pred, gt) - oracle::drd(pred, gt)) <= 1e-9);
    CHECK(skeletonize(gt) == oracle::zhang_suen(gt));
  }
}

TEST_CASE("precision and recall make the pseudo f-measure asymmetric") {
  const auto gt = mask_from_rows({".......", ".#####.", ".#####.", ".#####.", "......."});
  const auto pred = mask_from_rows({".......", ".......", "..###..", ".......", "......."});
  CHECK(pseudo_f_measure(pred, gt) != doctest::Approx(pseudo_f_measure(gt, pred)));
  // FM itself only swaps fp and fn, which leaves 2tp / (2tp + fp + fn) unchanged.
  CHECK(f_measure(pred, gt) == doctest::Approx(f_measure(gt, pred)));
}

TEST_CASE("monotonicity: more wrong pixels never improve drd or psnr") {
  const auto gt = inscribin::testing::random_rectangles(5, 40, 40, 6, 3, 10);
  std::mt19937_64 rng(5);
  auto pred = gt;
  double last_drd = drd(pred, gt);
  double last_psnr = psnr(pred, gt);
  for (int step = 0; step < 200; ++step) {
    const int x = static_cast<int>(rng() % 40);
    const int y = static_cast<int>(rng() % 40);
    if (pred.at(x, y) != gt.at(x, y)) continue;
    pred.at(x, y) ^= 1;
    const double d = drd(pred, gt);
    const double p = psnr(pred, gt);
    CHECK(d >= last_drd);
    CHECK(p <= last_psnr);
    last_drd = d;
    last_psnr = p;
  }
}

TEST_CASE("evaluate_pair fills every field") {
  const auto gt = random_mask(6, 30, 30, 0.3);
  const auto pred = random_mask(7, 30, 30, 0.3);
  const auto r = evaluate_pair(pred, gt);
  CHECK(r.psnr == psnr(pred, gt));
  CHECK(r.fm == f_measure(pred, gt));
  CHECK(r.f_ps == pseudo_f_measure(pred, gt));
  CHECK(r.drd == drd(pred, gt));
  CHECK(r.tp + r.fp + r.fn + r.tn == 900);
  CHECK(r.fm >= 0);
  CHECK(r.fm <= 100);
  CHECK(r.f_ps >= 0);
  CHECK(r.f_ps <= 100);
}

TEST_CASE("evaluate_set averages per-image reports") {
  std::vector<MaskPair> pairs;
  for (std::uint64_t s = 0; s < 6; ++s) pairs.emplace_back(random_mask(s, 25, 20, 0.4), random_mask(s + 50, 25, 20, 0.4));
  pairs.emplace_back(pairs[0].second, pairs[0].second);  // perfect: psnr capped before averaging

  const auto single = evaluate_set(std::span(pairs).first(1));
  const auto direct = evaluate_pair(pairs[0].first, pairs[0].second);
  CHECK(single.psnr == direct.psnr);
  CHECK(single.drd == direct.drd);

  const auto all = evaluate_set(pairs, 50.0);
  double psnr_sum = 0;
  double fm_sum = 0;
  for (const auto& [p, g] : pairs) {
    psnr_sum += std::min(psnr(p, g, 50.0), 50.0);
    fm_sum += f_measure(p, g);
  }
  CHECK(all.psnr == doctest::Approx(psnr_sum / pairs.size()).epsilon(1e-12));
  CHECK(all.fm == doctest::Approx(fm_sum / pairs.size()).epsilon(1e-12));

  auto shuffled = pairs;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(3));
  const auto again = evaluate_set(shuffled, 50.0, 3);
  CHECK(again.psnr == doctest::Approx(all.psnr).epsilon(1e-12));
  CHECK(again.drd == doctest::Approx(all.drd).epsilon(1e-12));
  CHECK(evaluate_set(pairs, 50.0, 4).psnr == all.psnr);

  try {
    evaluate_set(std::span<const MaskPair>{});
    FAIL("expected EmptySet");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptySet);
  }
}
