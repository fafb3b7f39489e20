#pragma once

// Seeded generators: the SL2 example, greedy random families under the ball
// condition, clustered families that break it, and random refinement.

#include "regstrip/conditions.hpp"

namespace regstrip {

/// Box used when the SL2 example is generated without one.
inline ParamBox default_sl2_box() { return {{0.5, 1.5}, {-1.5, 1.0}, {-1.5, 0.5}}; }

/// Uniform point in the ball of radius `radius` (3D).
inline Vec3 uniform_in_ball(CounterRng& rng, double radius) {
  for (;;) {
    const Vec3 v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (v.squaredNorm() <= 1.0) return radius * v;
  }
}

/// Cell-centered lattice sqrt(delta) Z^3 inside `box`, each point jittered
/// uniformly within sqrt(delta)/10. rho = sqrt(delta).
inline StripFamily gen_sl2_example(double delta, const ParamBox& box, std::uint64_t seed) {
  if (!(delta > 0.0) || delta > 1.0 / 16.0) throw BadScale("gen_sl2_example: delta must lie in (0, 1/16]");
  const double s = std::sqrt(delta);
  StripFamily fam(delta, s);
  auto count = [&](const Interval& iv) {
    return static_cast<int>(std::floor((iv.hi - iv.lo) / s + 1e-9));
  };
  const int na = count(box.a), nb = count(box.b), nc = count(box.c);
  CounterRng rng(seed, 0);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j)
      for (int k = 0; k < nc; ++k) {
        const Vec3 x(box.a.lo + (i + 0.5) * s, box.b.lo + (j + 0.5) * s, box.c.lo + (k + 0.5) * s);
        fam.add(LLine::from_params(x + uniform_in_ball(rng, s / 10.0)));
      }
  return fam;
}

inline ParamBox default_random_box() { return {}; }

/// Greedy rejection sampling: uniform candidates in `box`, accepted only if
/// they keep the parameter points delta-separated and the counting bounds
/// (times `constant`) satisfied.
inline StripFamily gen_random_family(double delta, double rho, int n, std::uint64_t seed,
                                     int max_rejects = 10000, double constant = 1.0,
                                     const ParamBox& box = default_random_box()) {
  if (n < 1) throw std::invalid_argument("gen_random_family: n must be >= 1");
  StripFamily fam(delta, rho);
  CounterRng rng(seed, 1);
  IncrementalBallCheck check(delta, rho, constant);
  PointGrid3 params(delta);
  int rejects = 0;
  while (static_cast<int>(fam.size()) < n) {
    const Vec3 x(rng.uniform(box.a.lo, box.a.hi), rng.uniform(box.b.lo, box.b.hi),
                 rng.uniform(box.c.lo, box.c.hi));
    bool separated = true;
    params.for_each_near(x, delta, [&](int, const Vec3&) { separated = false; });
    const LLine core = LLine::from_params(x);
    if (separated && check.try_add(dual_embed(core))) {
      params.insert(x, static_cast<int>(fam.size()));
      fam.add(core);
      rejects = 0;
    } else if (++rejects >= max_rejects) {
      throw GenerationExhausted("gen_random_family: " + std::to_string(max_rejects) +
                                " consecutive rejections after " + std::to_string(fam.size()) +
                                " strips");
    }
  }
  return fam;
}

inline Vec3 default_cluster_center() { return {0.75, 0.0, -0.25}; }

/// Dual centers uniform in the 4-ball of radius r about the breve image of
/// `center` (intersected with the hyperplane x1 = x4).
inline StripFamily gen_clustered_family(double delta, double rho, double r, int n,
                                        std::uint64_t seed,
                                        const Vec3& center = default_cluster_center()) {
  if (!(r >= delta && r <= 1.0)) throw std::invalid_argument("gen_clustered_family: r must lie in [delta, 1]");
  StripFamily fam(delta, rho);
  CounterRng rng(seed, 2);
  for (int i = 0; i < n; ++i) {
    const Vec3 e = uniform_in_ball(rng, r);
    fam.add(LLine::from_params(center + Vec3(e.x() / std::sqrt(2.0), e.y(), e.z())));
  }
  return fam;
}

/// Keep probability of the sampling step: 1/log2(1/delta) * (delta/delta') * (rho/rho').
inline double refine_probability(double delta, double rho, double delta_new, double rho_new) {
  return std::min(1.0, (delta / delta_new) * (rho / rho_new) / log2_inv(delta));
}

/// Keeps each strip independently with refine_probability and re-emits the
/// survivors at (delta_new, rho_new).
inline StripFamily sample_refine(const StripFamily& fam, double delta_new, double rho_new,
                                 std::uint64_t seed) {
  if (delta_new < fam.delta || rho_new < fam.rho)
    throw std::invalid_argument("sample_refine: scales must not decrease");
  const double p = refine_probability(fam.delta, fam.rho, delta_new, rho_new);
  StripFamily out(delta_new, rho_new);
  CounterRng rng(seed, 3);
  for (const auto& s : fam.strips)
    if (p >= 1.0 || rng.bernoulli(p)) out.add(s.core);
  return out;
}

}  // namespace regstrip
