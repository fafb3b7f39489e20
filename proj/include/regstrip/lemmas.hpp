#pragma once

// Residual checks for the closed-form identities: reparameterization,
// incidence, frames, coplanarity, normals and the span ruling. Each check
// reports its worst residual over a seeded sample.

#include "regstrip/duality.hpp"
#include "regstrip/rng.hpp"

namespace regstrip {

struct LemmaCheck {
  std::string id;
  std::string name;
  double worst = 0;
  double tol = 0;
  [[nodiscard]] bool pass() const { return worst <= tol; }
};

namespace detail {

inline CurveSystem random_polynomial_curve(CounterRng& rng) {
  std::array<std::vector<double>, 3> c;
  for (auto& comp : c) {
    comp.resize(1 + rng.below(4));
    for (auto& v : comp) v = rng.uniform(-1, 1);
  }
  c[0][0] = 1.5 + rng.uniform();
  for (std::size_t k = 1; k < c[0].size(); ++k) c[0][k] *= 0.3;
  return polynomial_curve(c);
}

}  // namespace detail

inline LemmaCheck check_reparameterization(std::uint64_t seed, int lines = 1000) {
  LemmaCheck c{"a", "sl2 reparameterization round trip", 0, 1e-9};
  CounterRng rng(seed, 10);
  for (int done = 0; done < lines;) {
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), cc = rng.uniform(-2, 2);
    if (std::abs(a) < 0.1 || std::abs(1 + b * cc) < 0.1) continue;
    const Line line{a, b, cc, (1 + b * cc) / a};
    const LLine l = sl2_reparameterize(line);
    for (int i = 0; i <= 100; ++i) {
      const Vec3 q = swap_yz(line.point_at(i / 100.0));
      c.worst = std::max(c.worst, (l.point_at(q.z()) - q).norm());
    }
    ++done;
  }
  return c;
}

inline LemmaCheck check_duality_incidence(std::uint64_t seed, int n = 1000) {
  LemmaCheck c{"b", "dual ray incidence", 0, 1e-9};
  CounterRng rng(seed, 11);
  for (int i = 0; i < n; ++i) {
    const Vec3 x(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const double t = rng.uniform();
    c.worst = std::max(c.worst, dual_ray(LLine::from_params(x).point_at(t)).distance(x));
  }
  return c;
}

inline LemmaCheck check_coplanarity(std::uint64_t seed, int curves = 20, int heights = 100) {
  LemmaCheck c{"c", "coplanarity defect", 0, 1e-9};
  CounterRng rng(seed, 12);
  for (int k = 0; k < curves; ++k) {
    const CurveSystem cs = detail::random_polynomial_curve(rng);
    for (int i = 0; i < heights; ++i) c.worst = std::max(c.worst, coplanarity_defect(cs, rng.uniform()));
  }
  return c;
}

/// v = -sqrt(1 + t^2 + t^4) xi'.
inline LemmaCheck check_reversal_identity() {
  LemmaCheck c{"d", "v parallel to xi' (reversal identity)", 0, 1e-9};
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    const Frame f = frame_at(t);
    c.worst = std::max(c.worst, (f.v + std::sqrt(1 + t * t + t * t * t * t) * f.xi_prime).norm());
  }
  return c;
}

/// The printed xi' against a central difference of xi.
inline LemmaCheck check_printed_xi_prime() {
  LemmaCheck c{"e", "printed xi' vs numerical derivative", 0, 1e-6};
  const double h = 1e-5;
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    const Vec3 num = (frame_at(t + h).xi - frame_at(t - h).xi) / (2 * h);
    c.worst = std::max(c.worst, (printed_xi_prime(t) - num).norm());
  }
  return c;
}

inline LemmaCheck check_normal_orthogonality(std::uint64_t seed, int curves = 20, int heights = 100) {
  LemmaCheck c{"f", "n . v1 orthogonality", 0, 1e-9};
  CounterRng rng(seed, 13);
  for (int k = 0; k < curves; ++k) {
    const CurveSystem cs = detail::random_polynomial_curve(rng);
    for (int i = 0; i < heights; ++i) {
      const double t = rng.uniform();
      c.worst = std::max(c.worst, std::abs(curve_normal(cs, t).head<2>().dot(curve_v1(cs, t))));
    }
  }
  return c;
}

inline LemmaCheck check_span_ruling(std::uint64_t seed, int lines = 50) {
  LemmaCheck c{"g", "ruling defect of span-ruling lines", 0, 1e-6};
  CounterRng rng(seed, 14);
  for (int i = 0; i < lines; ++i) {
    const LLine ell{rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const double s = rng.uniform(0.5, 2.0);
    c.worst = std::max(c.worst, ruling_defect(ell, s, 32));
  }
  return c;
}

inline std::vector<LemmaCheck> exact_lemma_suite(std::uint64_t seed) {
  return {check_reparameterization(seed),  check_duality_incidence(seed), check_coplanarity(seed),
          check_reversal_identity(),       check_printed_xi_prime(),      check_normal_orthogonality(seed),
          check_span_ruling(seed)};
}

}  // namespace regstrip
