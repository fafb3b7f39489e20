#pragma once

// Lines in R^3 and their parameter-space images, SL2 lines and the a = d
// chart, reguli, (delta, rho)-regulus strips, and the dual tubes in R^4.

#include <array>
#include <limits>
#include <optional>

#include "regstrip/core.hpp"

namespace regstrip {

/// The non-horizontal line (a, b, 0) + span(c, d, 1).
struct Line {
  double a = 0, b = 0, c = 0, d = 0;

  [[nodiscard]] Vec3 point_at(double t) const { return {a + c * t, b + d * t, t}; }
  [[nodiscard]] Vec4 breve() const { return {a, b, c, d}; }
};

/// A line of the a = d family: l_(a,b,c) := l_(a,b,c,a).
struct LLine {
  double a = 0, b = 0, c = 0;

  [[nodiscard]] Vec3 point_at(double t) const { return {a + c * t, b + a * t, t}; }
  [[nodiscard]] Vec4 breve() const { return {a, b, c, a}; }
  [[nodiscard]] Vec3 params() const { return {a, b, c}; }
  [[nodiscard]] Line as_line() const { return {a, b, c, a}; }

  static LLine from_params(const Vec3& x) { return {x.x(), x.y(), x.z()}; }
};

inline Vec3 line_point(const Line& line, double t) { return line.point_at(t); }

inline bool sl2_check(const Line& line, double tol) {
  return std::abs(line.a * line.d - line.b * line.c - 1.0) <= tol;
}

/// Rewrites an SL2 line with ad != 0 as an a = d line after swapping the 2nd
/// and 3rd physical coordinates. The swapped point l(t) lands on the result
/// at parameter b + d t.
inline LLine sl2_reparameterize(const Line& line) {
  const double ad = line.a * line.d;
  const double denom = 1.0 + line.b * line.c;
  if (std::abs(ad) <= kEpsMin)
    throw DegenerateLine("sl2_reparameterize: a*d vanishes, chart does not cover the line");
  if (std::abs(denom) <= kEpsMin)
    throw DegenerateLine("sl2_reparameterize: 1+bc vanishes, chart does not cover the line");
  return {line.a / denom, -line.a * line.b / denom, line.a * line.c / denom};
}

/// Inverse of sl2_reparameterize: the SL2 line whose coordinate swap is `ell`.
inline Line sl2_from_lline(const LLine& ell) {
  if (std::abs(ell.a) <= kEpsMin) throw DegenerateLine("sl2_from_lline: a vanishes");
  return {ell.a - ell.c * ell.b / ell.a, -ell.b / ell.a, ell.c / ell.a, 1.0 / ell.a};
}

/// Swaps the 2nd and 3rd coordinates (the chart change between SL2 lines and
/// the a = d family).
inline Vec3 swap_yz(const Vec3& p) { return {p.x(), p.z(), p.y()}; }

/// The ruled quadric swept by the horizontal segments through the core:
/// (a+ct, b+at, t) + u(1, -t, 0).
struct Regulus {
  LLine core;

  [[nodiscard]] Vec3 point_at(double t, double u) const {
    return core.point_at(t) + u * Vec3(1.0, -t, 0.0);
  }
};

/// Rejects (delta, rho) outside 0 < delta < 1, delta <= rho <= sqrt(delta).
inline void validate_scales(double delta, double rho) {
  if (!(delta > 0.0 && delta < 1.0)) throw BadScale("delta must lie in (0,1)");
  if (!(rho >= delta * (1.0 - 1e-12) && rho <= std::sqrt(delta) * (1.0 + 1e-9)))
    throw BadScale("rho must lie in [delta, sqrt(delta)]");
}

struct StripWitness {
  double t = 0;
  double u = 0;
  double residual = 0;
};

/// Heights probed around p3: p3 and p3 +- k*delta/4 for k = 1..4, kept inside
/// [0,1]. p3 comes first.
struct HeightNet {
  std::array<double, 9> t{};
  int size = 0;
};

inline HeightNet height_net(double p3, double delta) {
  HeightNet net;
  auto push = [&](double t) {
    if (t >= 0.0 && t <= 1.0) net.t[net.size++] = t;
  };
  push(p3);
  for (int k = 1; k <= 4; ++k) {
    push(p3 - k * delta / 4.0);
    push(p3 + k * delta / 4.0);
  }
  return net;
}

/// A (delta, rho)-regulus strip: {(a+ct, b+at, t) + u(1,-t,0) : t in [0,1],
/// |u| <= rho} + B_delta, clipped to [0,1]^3.
struct RegulusStrip {
  LLine core;
  double delta = 0;
  double rho = 0;

  RegulusStrip() = default;
  RegulusStrip(const LLine& core_, double delta_, double rho_)
      : core(core_), delta(delta_), rho(rho_) {
    validate_scales(delta, rho);
  }

  [[nodiscard]] Regulus regulus() const { return {core}; }

  /// Best (t, u) over the height net with u solved in closed form and clamped.
  [[nodiscard]] StripWitness nearest(const Vec3& p) const {
    const HeightNet net = height_net(p.z(), delta);
    StripWitness best{0, 0, std::numeric_limits<double>::infinity()};
    for (int i = 0; i < net.size; ++i) {
      const double t = net.t[i];
      const Vec3 diff = p - core.point_at(t);
      const Vec3 w(1.0, -t, 0.0);
      const double u = std::clamp(diff.dot(w) / w.squaredNorm(), -rho, rho);
      const double r = (diff - u * w).norm();
      if (r < best.residual) best = {t, u, r};
    }
    return best;
  }

  [[nodiscard]] bool contains(const Vec3& p) const {
    if (p.x() < 0 || p.x() > 1 || p.y() < 0 || p.y() > 1 || p.z() < 0 || p.z() > 1) return false;
    return nearest(p).residual <= delta;
  }
};

struct Membership {
  bool inside = false;
  std::optional<StripWitness> witness;
};

inline Membership strip_membership(const RegulusStrip& strip, const Vec3& p) {
  if (p.x() < 0 || p.x() > 1 || p.y() < 0 || p.y() > 1 || p.z() < 0 || p.z() > 1) return {};
  const StripWitness w = strip.nearest(p);
  if (w.residual <= strip.delta) return {true, w};
  return {};
}

/// {center + s * axis : |s| <= half_length} + B^4_radius. For a strip this is
/// breve(core) + u(1,0,0,-1), |u| <= rho, so half_length = sqrt(2) rho.
struct DualTube {
  Vec4 center = Vec4::Zero();
  Vec4 axis = Vec4(1, 0, 0, -1) / std::sqrt(2.0);
  double half_length = 0;
  double radius = 0;

  [[nodiscard]] Vec4 spine_point(double s) const { return center + s * axis; }

  [[nodiscard]] double spine_distance(const Vec4& p) const {
    return std::sqrt(segment_distance_sq(p, spine_point(-half_length), spine_point(half_length)));
  }

  [[nodiscard]] bool contains(const Vec4& p) const { return spine_distance(p) <= radius; }

  /// Exact volume of the 4D tube: cylinder plus two half 4-balls.
  [[nodiscard]] double volume() const {
    return 2.0 * half_length * (4.0 / 3.0) * M_PI * std::pow(radius, 3) +
           0.5 * M_PI * M_PI * std::pow(radius, 4);
  }
};

inline DualTube dual_tube(const RegulusStrip& strip) {
  DualTube tube;
  tube.center = strip.core.breve();
  tube.half_length = std::sqrt(2.0) * strip.rho;
  tube.radius = strip.delta;
  return tube;
}

/// Lower bound on the diameter of A ∩ B: the extent of A's spine points that
/// lie inside B (sampled at 2001 points).
inline double dual_tube_overlap_diameter(const DualTube& a, const DualTube& b) {
  constexpr int kSamples = 2001;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < kSamples; ++i) {
    const double s = -a.half_length + 2.0 * a.half_length * i / (kSamples - 1);
    if (b.contains(a.spine_point(s))) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  return hi >= lo ? hi - lo : 0.0;
}

namespace detail {

/// min over t' near q3 of the distance from q to the line base(t') + R dir(t').
/// Coarse scan over [q3 - window, q3 + window] then golden-section refinement.
template <class Base, class Dir>
double ruled_surface_distance(const Vec3& q, Base base, Dir dir, double window = 0.25,
                              int scan = 501) {
  auto dist = [&](double t) {
    const Vec3 diff = q - base(t);
    const Vec3 w = dir(t);
    const double w2 = w.squaredNorm();
    const double u = w2 > 0 ? diff.dot(w) / w2 : 0.0;
    return (diff - u * w).norm();
  };
  const double step = 2.0 * window / (scan - 1);
  double best_t = q.z();
  double best = dist(best_t);
  for (int i = 0; i < scan; ++i) {
    const double t = q.z() - window + i * step;
    const double d = dist(t);
    if (d < best) {
      best = d;
      best_t = t;
    }
  }
  double lo = best_t - step;
  double hi = best_t + step;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  double f1 = dist(x1);
  double f2 = dist(x2);
  for (int it = 0; it < 100; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = dist(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = dist(x2);
    }
  }
  return std::min({best, f1, f2});
}

}  // namespace detail

/// Distance from q to the regulus of `core` in the a = d chart (u unbounded).
inline double regulus_distance(const Regulus& reg, const Vec3& q) {
  return detail::ruled_surface_distance(
      q, [&](double t) { return reg.core.point_at(t); },
      [](double t) { return Vec3(1.0, -t, 0.0); });
}

/// Distance from q to the regulus of a line as first introduced: the union
/// over p on the line of the horizontal lines p + span(p1, p2, 0).
inline double span_regulus_distance(const Line& line, const Vec3& q) {
  return detail::ruled_surface_distance(
      q, [&](double t) { return line.point_at(t); },
      [&](double t) {
        const Vec3 p = line.point_at(t);
        return Vec3(p.x(), p.y(), 0.0);
      });
}

/// Same measurement for an arbitrary candidate line.
inline double ruling_defect_of(const Line& ell, const Line& candidate, int n_samples) {
  double worst = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i) / (n_samples - 1);
    worst = std::max(worst, span_regulus_distance(ell, candidate.point_at(t)));
  }
  return worst;
}

/// Max over n_samples heights of the distance from l'(t) to R(l), where
/// breve(l') = s * breve(l) and R(l) is the union of the horizontal lines
/// p + span(p1, p2, 0) over p in l.
inline double ruling_defect(const LLine& ell, double s, int n_samples) {
  if (s == 0.0) throw std::invalid_argument("ruling_defect: s must be nonzero");
  if (n_samples < 2) throw std::invalid_argument("ruling_defect: n_samples must be >= 2");
  const Line scaled{s * ell.a, s * ell.b, s * ell.c, s * ell.a};
  return ruling_defect_of(ell.as_line(), scaled, n_samples);
}

}  // namespace regstrip
