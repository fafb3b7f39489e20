#pragma once

// Point-line duality for the a = d family, the moving frame of the dual-ray
// direction, the projections pi_t, wave-packet planks, and the curve
// generalization of the same frame computation.

#include <optional>
#include <utility>

#include "regstrip/geom_core.hpp"

namespace regstrip {

/// A line {base + s * direction} in parameter space.
struct Ray3 {
  Vec3 base;
  Vec3 direction;

  [[nodiscard]] Vec3 at(double s) const { return base + s * direction; }

  [[nodiscard]] double distance(const Vec3& x) const {
    const Vec3 d = direction.normalized();
    const Vec3 r = x - base;
    return (r - r.dot(d) * d).norm();
  }
};

/// Dual-ray direction at height t: e1 x e2 for e1 = (1,0,t), e2 = (t,1,0).
inline Vec3 dual_direction(double t) { return {-t, t * t, 1.0}; }

/// All parameters x = (a,b,c) whose line l_x passes through p. The base is the
/// solution with c = 0, which stays finite at every height.
inline Ray3 dual_ray(const Vec3& p) {
  const double t = p.z();
  return {Vec3(p.x(), p.y() - p.x() * t, 0.0), dual_direction(t)};
}

struct Frame {
  double t = 0;
  Vec3 d;         // dual-ray direction
  Vec3 xi;        // d / |d|
  Vec3 xi_prime;  // d/dt of xi, closed form
  Vec3 v;         // second plank axis before normalization
};

inline Frame frame_at(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double t4 = t2 * t2;
  const double D = 1.0 + t2 + t4;
  Frame f;
  f.t = t;
  f.d = dual_direction(t);
  f.xi = f.d / std::sqrt(D);
  f.xi_prime = Vec3(t4 - 1.0, t3 + 2.0 * t, -2.0 * t3 - t) / std::pow(D, 1.5);
  f.v = Vec3(1.0 - t4, -2.0 * t - t3, 2.0 * t3 + t) / D;
  return f;
}

/// The xi' display exactly as printed alongside xi = (1,t^2,-t)/|.|. Kept as a
/// transcription fixture; nothing downstream uses it.
inline Vec3 printed_xi_prime(double t) {
  const double t2 = t * t;
  const double D = 1.0 + t2 + t2 * t2;
  return Vec3(2.0 * t2 * t + t, -t2 * t - 2.0 * t, t2 * t2 - 1.0) / std::pow(D, 1.5);
}

/// Orthonormal basis of d(t)^perp used by pi_t: (xi'/|xi'|, xi x xi'/|xi'|).
inline std::pair<Vec3, Vec3> projection_basis(double t) {
  const Frame f = frame_at(t);
  const Vec3 b1 = f.xi_prime.normalized();
  return {b1, f.xi.cross(b1)};
}

inline Vec2 project_pi_t(const Vec3& y, double t) {
  const auto [b1, b2] = projection_basis(t);
  return {y.dot(b1), y.dot(b2)};
}

/// (y . e1, y . e2): sends a parameter point to the core point of its line at
/// height t. Kills d(t), so it factors through pi_t.
inline Vec2 slice_coordinates(const Vec3& y, double t) {
  return {y.x() + t * y.z(), t * y.x() + y.y()};
}

/// Box {center + sum y_i axes.row(i) : |y_i| <= half_extents_i}.
struct Plank {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  // rows: long, mid, short
  Vec3 half_extents = Vec3::Ones();

  [[nodiscard]] bool contains(const Vec3& p) const {
    const Vec3 local = axes * (p - center);
    return std::abs(local.x()) <= half_extents.x() && std::abs(local.y()) <= half_extents.y() &&
           std::abs(local.z()) <= half_extents.z();
  }

  [[nodiscard]] double volume() const { return 8.0 * half_extents.prod(); }
};

inline Plank plank_for(const Vec3& x, double t, double rho, double delta) {
  if (delta > rho) throw std::invalid_argument("plank_for: delta must not exceed rho");
  const Frame f = frame_at(t);
  const auto [b1, b2] = projection_basis(t);
  Plank p;
  p.center = x;
  p.axes.row(0) = f.xi.transpose();
  p.axes.row(1) = b1.transpose();
  p.axes.row(2) = b2.transpose();
  p.half_extents = Vec3(1.0, rho, delta);
  return p;
}

/// Horizontal slice of a strip at height t before thickening: the segment
/// center +- half_length * direction, thickened by `thickness`.
struct SliceTube {
  Vec2 center;
  Vec2 direction;      // unit
  double half_length;  // Euclidean, = rho * sqrt(1 + t^2)
  double thickness;

  [[nodiscard]] Vec2 end0() const { return center - half_length * direction; }
  [[nodiscard]] Vec2 end1() const { return center + half_length * direction; }

  [[nodiscard]] bool contains(const Vec2& q) const {
    return segment_distance_sq(q, end0(), end1()) <= thickness * thickness;
  }
};

inline SliceTube slice_tube(const RegulusStrip& strip, double t) {
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("slice_tube: t must lie in [0,1]");
  const LLine& c = strip.core;
  const double norm = std::sqrt(1.0 + t * t);
  return {Vec2(c.a + c.c * t, c.b + c.a * t), Vec2(1.0, -t) / norm, strip.rho * norm,
          strip.delta};
}

inline bool slice_tubes_intersect(const SliceTube& a, const SliceTube& b) {
  return segment_segment_distance(a.end0(), a.end1(), b.end0(), b.end1()) <=
         a.thickness + b.thickness;
}

struct Segment2 {
  Vec2 p0;
  Vec2 p1;

  [[nodiscard]] double length() const { return (p1 - p0).norm(); }
};

/// pi_t({x + u(0, -t, 1/t) : |u| <= rho}).
inline Segment2 projected_segment(const Vec3& x, double t, double rho) {
  if (std::abs(t) <= kEpsMin)
    throw DegenerateHeight("projected_segment: direction (0,-t,1/t) is singular at t = 0");
  const Vec3 w(0.0, -t, 1.0 / t);
  return {project_pi_t(x - rho * w, t), project_pi_t(x + rho * w, t)};
}

// ---------------------------------------------------------------------------
// Curve generalization.
// ---------------------------------------------------------------------------

/// A spatial curve gamma: [0,1] -> R^3 with an optional closed-form derivative.
struct CurveSystem {
  std::function<Vec3(double)> gamma;
  std::function<Vec3(double)> gamma_prime;  // empty: central differences

  static constexpr double kDiffStep = 1e-5;

  [[nodiscard]] Vec3 at(double t) const { return gamma(t); }

  [[nodiscard]] Vec3 derivative(double t) const {
    if (gamma_prime) return gamma_prime(t);
    return (gamma(t + kDiffStep) - gamma(t - kDiffStep)) / (2.0 * kDiffStep);
  }
};

/// Polynomial curve with per-component coefficients (constant term first).
inline CurveSystem polynomial_curve(std::array<std::vector<double>, 3> coeffs) {
  auto eval = [](const std::vector<double>& c, double t) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
    return acc;
  };
  auto deriv = [](const std::vector<double>& c, double t) {
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) acc = acc * t + static_cast<double>(k) * c[k];
    return acc;
  };
  CurveSystem cs;
  cs.gamma = [coeffs, eval](double t) {
    return Vec3(eval(coeffs[0], t), eval(coeffs[1], t), eval(coeffs[2], t));
  };
  cs.gamma_prime = [coeffs, deriv](double t) {
    return Vec3(deriv(coeffs[0], t), deriv(coeffs[1], t), deriv(coeffs[2], t));
  };
  return cs;
}

/// gamma(t) = (1, t^2, -t).
inline CurveSystem sl2_curve() { return polynomial_curve({{{1.0}, {0.0, 0.0, 1.0}, {0.0, -1.0}}}); }

namespace detail {
inline void require_gamma1(const CurveSystem& cs, double t, const char* who) {
  if (std::abs(cs.at(t).x()) <= kEpsMin)
    throw DegenerateCurve(std::string(who) + ": gamma_1 vanishes");
}
}  // namespace detail

/// e1 = (g3, 0, -g1), e2 = (g2, -g1, 0); both orthogonal to gamma(t).
inline std::pair<Vec3, Vec3> curve_frames(const CurveSystem& cs, double t) {
  detail::require_gamma1(cs, t, "curve_frames");
  const Vec3 g = cs.at(t);
  return {Vec3(g.z(), 0.0, -g.x()), Vec3(g.y(), -g.x(), 0.0)};
}

/// (x1 g3 - x3 g1, x1 g2 - x2 g1) at height t.
inline Vec2 curve_projection(const CurveSystem& cs, const Vec3& x, double t) {
  const Vec3 g = cs.at(t);
  return {x.x() * g.z() - x.z() * g.x(), x.x() * g.y() - x.y() * g.x()};
}

/// The curve C_x(t) = (pi(x), t).
inline Vec3 curve_point(const CurveSystem& cs, const Vec3& x, double t) {
  const Vec2 q = curve_projection(cs, x, t);
  return {q.x(), q.y(), t};
}

/// v1 = (g1 g3' - g3 g1', g1 g2' - g2 g1').
inline Vec2 curve_v1(const CurveSystem& cs, double t) {
  const Vec3 g = cs.at(t);
  const Vec3 dg = cs.derivative(t);
  return {g.x() * dg.z() - g.z() * dg.x(), g.x() * dg.y() - g.y() * dg.x()};
}

inline Vec3 curve_normal(const CurveSystem& cs, double t) {
  detail::require_gamma1(cs, t, "curve_normal");
  const Vec3 g = cs.at(t);
  const Vec3 dg = cs.derivative(t);
  return Vec3(-g.x() * dg.y() + g.y() * dg.x(), g.x() * dg.z() - g.z() * dg.x(), 0.0) / g.x();
}

/// The two vectors spanning the tangents at z of all curves C_x through z.
inline std::pair<Vec3, Vec3> curve_tangent_plane(const CurveSystem& cs, const Vec3& z) {
  const double t = z.z();
  detail::require_gamma1(cs, t, "curve_tangent_plane");
  const Vec3 g = cs.at(t);
  const Vec3 dg = cs.derivative(t);
  const double r = dg.x() / g.x();
  return {Vec3(dg.z() - g.z() * r, dg.y() - g.y() * r, 0.0), Vec3(z.x() * r, z.y() * r, 1.0)};
}

/// |det[gamma, gamma', (gamma/|gamma|)']|.
inline double coplanarity_defect(const CurveSystem& cs, double t) {
  const Vec3 g = cs.at(t);
  const double n = g.norm();
  if (n <= kEpsMin) throw DegenerateCurve("coplanarity_defect: gamma vanishes");
  const Vec3 dg = cs.derivative(t);
  const Vec3 dunit = dg / n - g * (g.dot(dg)) / (n * n * n);
  Mat3 m;
  m.col(0) = g;
  m.col(1) = dg;
  m.col(2) = dunit;
  return std::abs(m.determinant());
}

/// {z + u n_perp(z3) : z in C_x, |u| <= sqrt(delta)} + B_delta, tested on the
/// same height net as regulus strips.
class GeneralizedStrip {
 public:
  GeneralizedStrip(CurveSystem cs, const Vec3& x, double delta)
      : cs_(std::move(cs)), x_(x), delta_(delta), half_width_(std::sqrt(delta)) {
    for (int i = 0; i <= 100; ++i) detail::require_gamma1(cs_, i / 100.0, "generalized_strip");
  }

  /// Unit horizontal vector orthogonal to n(t).
  [[nodiscard]] Vec3 in_plane_direction(double t) const {
    const Vec3 n = curve_normal(cs_, t);
    const double len = n.head<2>().norm();
    if (len <= kEpsMin) throw DegenerateCurve("generalized_strip: normal vanishes");
    return Vec3(-n.y(), n.x(), 0.0) / len;
  }

  [[nodiscard]] Vec3 core_point(double t) const { return curve_point(cs_, x_, t); }

  [[nodiscard]] bool contains(const Vec3& p) const {
    const HeightNet net = height_net(p.z(), delta_);
    for (int i = 0; i < net.size; ++i) {
      const double t = net.t[i];
      const Vec3 diff = p - core_point(t);
      const Vec3 w = in_plane_direction(t);
      const double u = std::clamp(diff.dot(w), -half_width_, half_width_);
      if ((diff - u * w).norm() <= delta_ * (1.0 + 1e-12)) return true;
    }
    return false;
  }

  [[nodiscard]] double delta() const { return delta_; }

 private:
  CurveSystem cs_;
  Vec3 x_;
  double delta_;
  double half_width_;
};

inline GeneralizedStrip generalized_strip(const CurveSystem& cs, const Vec3& x, double delta) {
  return GeneralizedStrip(cs, x, delta);
}

}  // namespace regstrip
