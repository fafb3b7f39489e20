#include <gtest/gtest.h>

#include "regstrip/family.hpp"
#include "regstrip/measure.hpp"

using namespace regstrip;

namespace {

StripFamily single(double delta, double rho, const LLine& core) {
  StripFamily fam(delta, rho);
  fam.add(core);
  return fam;
}

StripFamily small_sl2(double delta) { return gen_sl2_example(delta, {{0.5, 1}, {-0.5, 0.5}, {-0.5, 0}}, 1); }

}  // namespace

TEST(OccupancyGrid, SpansAndCounts) {
  OccupancyGrid g(Vec3::Zero(), 0.5, 130, 3, 2);
  EXPECT_EQ(g.popcount(), 0u);
  g.set_span(1, 1, 60, 70);
  g.set_span(1, 1, 65, 129);
  g.set_span(0, 0, 0, 0);
  EXPECT_EQ(g.popcount(), 71u);
  EXPECT_EQ(g.layer_popcount(1), 70u);
  EXPECT_TRUE(g.test(129, 1, 1));
  EXPECT_FALSE(g.test(59, 1, 1));
  EXPECT_DOUBLE_EQ(g.measure(), 71 * 0.125);
  EXPECT_EQ(g.center(0, 0, 0), Vec3(0.25, 0.25, 0.25));
}

TEST(OccupancyGrid, UnitCubeAndLimit) {
  const auto g = OccupancyGrid::unit_cube(0.3);
  EXPECT_EQ(g.nx(), 3);
  EXPECT_DOUBLE_EQ(g.h(), 1.0 / 3);
  EXPECT_THROW(OccupancyGrid::unit_cube(1.0 / 2048), GridTooLarge);
}

TEST(Rasterize, EmptyFamily) {
  EXPECT_EQ(rasterize(StripFamily(1.0 / 16, 1.0 / 4), 1.0 / 32).measure(), 0.0);
}

TEST(Rasterize, DuplicateStripIsIdempotent) {
  StripFamily fam = single(1.0 / 32, 1.0 / 8, {0.4, 0.3, 0.2});
  const double one = rasterize(fam, 1.0 / 64).measure();
  fam.add({0.4, 0.3, 0.2});
  EXPECT_EQ(rasterize(fam, 1.0 / 64).measure(), one);
}

TEST(Rasterize, SingleStripNearReference) {
  const double delta = 1.0 / 16;
  const StripFamily fam = single(delta, 0.25, {0.4, 0.3, 0.2});
  const double ref = reference_strip_volume(fam.strips[0], delta / 8);
  EXPECT_NEAR(rasterize(fam, delta / 2).measure() / ref, 1.0, 0.15);
}

TEST(Rasterize, CellsAgreeWithMembership) {
  const double delta = 1.0 / 32, h = delta / 2;
  const StripFamily fam = single(delta, 1.0 / 8, {0.5, 0.4, 0.1});
  const auto g = rasterize(fam, h);
  CounterRng rng(3);
  int agree = 0, total = 0;
  for (int k = 0; k < g.nz(); ++k)
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const bool in = fam.strips[0].contains(g.center(i, j, k));
        if (!in && !g.test(i, j, k)) continue;
        ++total;
        agree += in == g.test(i, j, k) ? 1 : 0;
      }
  ASSERT_GT(total, 100);
  EXPECT_GE(static_cast<double>(agree) / total, 0.97);
}

TEST(Rasterize, MonotoneAndSubadditive) {
  const double delta = 1.0 / 32, h = delta / 2;
  const StripFamily fam = small_sl2(delta);
  StripFamily sub(delta, fam.rho);
  for (std::size_t i = 0; i < fam.size(); i += 3) sub.add(fam.strips[i].core);
  const double all = rasterize(fam, h).measure();
  EXPECT_LE(rasterize(sub, h).measure(), all);
  EXPECT_LE(all, sum_strip_volumes(fam, h) * (1 + 1e-12));
}

TEST(MonteCarlo, EmptyFamily) {
  const auto e = mc_union_measure(StripFamily(1.0 / 16, 1.0 / 4), 20000, 1);
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.stderr_, 0.0);
}

TEST(MonteCarlo, AxisBox) {
  const auto e = mc_measure([](const Vec3& p) { return (p.array() <= 0.5).all(); }, 200000, 4);
  EXPECT_NEAR(e.value, 0.125, 4 * e.stderr_);
  EXPECT_THROW(mc_measure([](const Vec3&) { return true; }, 10, 1), std::invalid_argument);
}

TEST(MonteCarlo, AgreesWithGrid) {
  const double delta = 1.0 / 32;
  const StripFamily fam = small_sl2(delta);
  const double grid = rasterize(fam, delta / 4).measure();
  const auto mc = mc_union_measure(fam, 400000, 9);
  EXPECT_NEAR(mc.value / grid, 1.0, 0.03);
}

TEST(MonteCarlo, ThreadCountInvariant) {
  const StripFamily fam = small_sl2(1.0 / 32);
  const auto a = mc_union_measure(fam, 150000, 2);
  set_threads(1);
  const auto b = mc_union_measure(fam, 150000, 2);
  set_threads(0);
  EXPECT_EQ(a.value, b.value);
}

TEST(Slice, MatchesPointwiseMembership) {
  const double delta = 1.0 / 32;
  const StripFamily fam = single(delta, 1.0 / 8, {0.5, 0.4, 0.1});
  for (double t : {0.25, 0.5, 0.75}) {
    const int n = 256;
    int hits = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) hits += fam.strips[0].contains({(i + 0.5) / n, (j + 0.5) / n, t}) ? 1 : 0;
    const double brute = static_cast<double>(hits) / (n * n);
    EXPECT_NEAR(slice_measure(fam, t, delta / 8) / brute, 1.0, 0.05);
    // The slice contains the planar stadium about the horizontal ruling.
    const double stadium = 4 * delta * fam.rho * std::sqrt(1 + t * t) + M_PI * delta * delta;
    EXPECT_GE(slice_measure(fam, t, delta / 8), 0.95 * stadium);
  }
}

TEST(Slice, FubiniAgainstVolume) {
  const double delta = 1.0 / 32, h = delta / 2;
  const StripFamily fam = small_sl2(delta);
  const int m = 64;
  double sum = 0;
  for (int k = 0; k < m; ++k) sum += slice_measure(fam, (k + 0.5) / m, h);
  EXPECT_NEAR(sum / m / rasterize(fam, h).measure(), 1.0, 0.1);
}

TEST(Slice, RejectsCoarseResolution) {
  const StripFamily fam = single(1.0 / 32, 1.0 / 8, {0.5, 0.4, 0.1});
  EXPECT_THROW(slice_measure(fam, 0.5, 1.0 / 32), std::invalid_argument);
}

TEST(Planks, SinglePoint) {
  const double delta = 1.0 / 16, rho = 1.0 / 4;
  const StripFamily fam = single(delta, rho, {1.0, 0.0, 0.0});
  const auto u = plank_union_measure(fam, 0.5, delta / 4);
  EXPECT_NEAR(u.volume3d / (8 * rho * delta), 1.0, 0.25);
  EXPECT_NEAR(u.projected_area / (4 * rho * delta), 1.0, 0.25);
}

TEST(Planks, EmptyFamily) {
  const auto u = plank_union_measure(StripFamily(1.0 / 16, 1.0 / 4), 0.5, 1.0 / 32);
  EXPECT_EQ(u.volume3d, 0.0);
  EXPECT_EQ(u.projected_area, 0.0);
}

TEST(HTubes, Decomposition) {
  const double delta = 1.0 / 16;
  const StripFamily fam = single(delta, 0.25, {0.4, 0.3, 0.2});
  const auto tubes = decompose_htubes(0, fam);
  ASSERT_EQ(tubes.size(), 16u);
  for (int k = 0; k < 16; ++k) {
    EXPECT_EQ(tubes[k].t_index, k);
    EXPECT_DOUBLE_EQ(tubes[k].center.z(), (k + 0.5) * delta);
    EXPECT_TRUE(tubes[k].contains(fam.strips[0], tubes[k].center));
    if (k + 1 < 16) EXPECT_FALSE(tubes[k].contains(fam.strips[0], tubes[k + 1].center));
  }
}

TEST(Shading, Constructors) {
  const double delta = 1.0 / 16;
  const StripFamily fam = small_sl2(delta);
  const Shading full = full_shading(fam);
  EXPECT_EQ(full.mass(), fam.size() * 16);
  EXPECT_DOUBLE_EQ(full.min_density(delta), 1.0);

  const Shading half = random_shading(fam, 0.5, 3);
  const double frac = static_cast<double>(half.mass()) / full.mass();
  EXPECT_NEAR(frac, 0.5, 0.1);
  EXPECT_THROW(random_shading(fam, 0.0, 3), std::invalid_argument);

  const Shading low = region_shading(fam, Vec3(0, 0, 0), Vec3(1, 1, 0.5));
  for (const auto& sel : low.selected)
    for (int k : sel) EXPECT_LT((k + 0.5) * delta, 0.5);
}

TEST(Shading, JsonRoundTripAndErrors) {
  const StripFamily fam = small_sl2(1.0 / 16);
  const Shading sh = random_shading(fam, 0.3, 8);
  const Shading back = shading_from_json(nlohmann::json::parse(shading_to_json(sh).dump()), fam.size());
  EXPECT_EQ(back.selected, sh.selected);

  const nlohmann::json dup = {{"selected", {{"0", {3, 1, 3}}}}};
  EXPECT_EQ(shading_from_json(dup, 2).selected[0], (std::vector<int>{1, 3}));
  EXPECT_THROW(shading_from_json({{"selected", {{"5", {1}}}}}, 2), InputError);
  EXPECT_THROW(shading_from_json({{"selected", {{"x", {1}}}}}, 2), InputError);
  EXPECT_THROW(shading_from_json({{"selected", {{"0", "bad"}}}}, 2), InputError);
  EXPECT_THROW(shading_from_json(nlohmann::json::object(), 2), InputError);
}

TEST(Regularize, FullShadingKeepsEverything) {
  const double delta = 1.0 / 64;
  const StripFamily fam = small_sl2(delta);
  const Regularized r = regularize(fam, full_shading(fam));
  EXPECT_EQ(r.mu, 64);
  EXPECT_EQ(r.family.size(), fam.size());
  EXPECT_EQ(r.kept.size(), fam.size());
}

TEST(Regularize, KeepsDenseClass) {
  const double delta = 1.0 / 64;
  StripFamily fam(delta, 1.0 / 8);
  for (const Vec3& x : {Vec3(0.2, 0.1, 0), Vec3(0.6, 0.1, 0), Vec3(0.2, 0.6, 0), Vec3(0.6, 0.6, 0)})
    fam.add(LLine::from_params(x));
  Shading sh = full_shading(fam);
  sh.selected[2] = {0, 1, 2, 3};
  sh.selected[3] = {0, 1, 2, 3};
  const Regularized r = regularize(fam, sh);
  EXPECT_EQ(r.mu, 64);
  EXPECT_EQ(r.kept, (std::vector<std::size_t>{0, 1}));
  for (const auto& sel : r.shading.selected) EXPECT_GE(sel.size(), static_cast<std::size_t>(r.mu));
}

TEST(Regularize, RejectsEmptyShading) {
  const StripFamily fam = small_sl2(1.0 / 16);
  Shading sh;
  sh.selected.resize(fam.size());
  EXPECT_THROW(regularize(fam, sh), std::invalid_argument);
}

TEST(Kakeya, SingleStripFullShading) {
  const double delta = 1.0 / 32;
  const StripFamily fam = single(delta, 1.0 / 8, {0.5, 0.4, 0.1});
  const auto k = kakeya_ratio(fam, full_shading(fam), delta / 2);
  EXPECT_DOUBLE_EQ(k.lambda, 1.0);
  EXPECT_NEAR(k.ratio, 1.0, 0.2);
}

TEST(Kakeya, Sl2FullAndHalfShading) {
  const double delta = 1.0 / 64, h = delta / 2;
  const StripFamily fam = small_sl2(delta);
  const auto full = kakeya_ratio(fam, full_shading(fam), h);
  EXPECT_GE(full.ratio, std::pow(delta, 0.2));
  const auto half = kakeya_ratio(fam, random_shading(fam, 0.5, 7), h);
  EXPECT_LE(half.lhs, full.lhs);
  EXPECT_GE(half.lhs, full.lhs / 4);
  EXPECT_DOUBLE_EQ(half.rhs_basis, std::pow(half.lambda, 6) * sum_strip_volumes(fam, h));
}

TEST(Kakeya, EmptyShadingUnion) {
  const StripFamily fam = small_sl2(1.0 / 16);
  Shading sh;
  sh.selected.resize(fam.size());
  EXPECT_EQ(rasterize_shading(fam, sh, 1.0 / 32).measure(), 0.0);
}
