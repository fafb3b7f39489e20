#pragma once

// First Heisenberg group with the Koranyi gauge, horizontal lines and their
// tubes, a discretized Nikodym maximal function, and the comparison between
// regulus strips and Koranyi tubes.

#include "regstrip/geom_core.hpp"
#include "regstrip/measure.hpp"
#include "regstrip/rng.hpp"

namespace regstrip {

struct HPoint {
  double x = 0, y = 0, z = 0;

  /// (x,y,z)(x',y',z') = (x+x', y+y', z+z' + (x y' - x' y)/2).
  [[nodiscard]] HPoint operator*(const HPoint& q) const {
    return {x + q.x, y + q.y, z + q.z + 0.5 * (x * q.y - q.x * y)};
  }
  [[nodiscard]] HPoint inverse() const { return {-x, -y, -z}; }
  [[nodiscard]] Vec3 vec() const { return {x, y, z}; }
  static HPoint of(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

/// ((x^2 + y^2)^2 + 16 z^2)^(1/4).
inline double koranyi_gauge(const HPoint& p) {
  const double r2 = p.x * p.x + p.y * p.y;
  return std::pow(r2 * r2 + 16.0 * p.z * p.z, 0.25);
}

inline double koranyi_distance(const HPoint& p, const HPoint& q) {
  return koranyi_gauge(q.inverse() * p);
}

/// Horizontal line base * (t u, t v, 0) with (u, v) a unit vector.
struct HLine {
  HPoint base;
  Vec2 direction{1.0, 0.0};

  [[nodiscard]] HPoint point_at(double t) const {
    return base * HPoint{t * direction.x(), t * direction.y(), 0.0};
  }

  /// d/dt point_at(t).
  [[nodiscard]] Vec3 tangent() const {
    return {direction.x(), direction.y(), 0.5 * (base.x * direction.y() - base.y * direction.x())};
  }
};

namespace detail {

/// min over t in [lo, hi] of koranyi_distance(p, line(t)): scan then golden section.
inline double hline_distance(const HLine& line, const HPoint& p, double lo, double hi, int scan = 257) {
  auto f = [&](double t) { return koranyi_distance(p, line.point_at(t)); };
  double best_t = lo, best = f(lo);
  const double step = (hi - lo) / (scan - 1);
  for (int i = 1; i < scan; ++i) {
    const double t = lo + i * step;
    const double d = f(t);
    if (d < best) {
      best = d;
      best_t = t;
    }
  }
  double a = std::max(lo, best_t - step), b = std::min(hi, best_t + step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  return std::min({best, f1, f2});
}

}  // namespace detail

/// Membership in the Koranyi delta-neighbourhood of line(t_window), tested on
/// a t-net of step delta/4.
inline bool htube_membership(const HLine& line, double delta, const HPoint& p, const Interval& t_window) {
  if (!(delta > 0.0)) throw std::invalid_argument("htube_membership: delta must be positive");
  const double step = delta / 4.0;
  const int n = static_cast<int>(std::ceil(t_window.length() / step));
  for (int i = 0; i <= n; ++i) {
    const double t = std::min(t_window.hi, t_window.lo + i * step);
    if (koranyi_distance(p, line.point_at(t)) <= delta * (1.0 + 1e-12)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Strips and Koranyi tubes.
// ---------------------------------------------------------------------------

/// (x, y, z) -> (x, y, z/2): sends SL2 lines (A + C s, B + D s, s) to
/// horizontal lines.
inline HPoint sl2_to_heisenberg(const Vec3& p) { return {p.x(), p.y(), 0.5 * p.z()}; }
inline Vec3 heisenberg_to_sl2(const HPoint& p) { return {p.x, p.y, 2.0 * p.z}; }

/// A strip lives in the a = d chart; undo the coordinate swap, then apply
/// sl2_to_heisenberg.
inline HPoint strip_chart_to_heisenberg(const Vec3& p) { return sl2_to_heisenberg(swap_yz(p)); }
inline Vec3 heisenberg_to_strip_chart(const HPoint& p) { return swap_yz(heisenberg_to_sl2(p)); }

/// Horizontal line carrying the image of the core of `ell`, with the unit-speed
/// parameter tau = s |(C, D)| where s is the SL2 line's own height.
inline HLine hline_of(const LLine& ell) {
  const Line l = sl2_from_lline(ell);
  const Vec2 dir(l.c, l.d);
  return {{l.a, l.b, 0.0}, dir.normalized()};
}

struct StripHTubeConstants {
  double c_in = 0;
  double c_out = 0;
};

namespace detail {

/// Distance from p to the skeleton {core(t) + u (1,-t,0) : t in [0,1], |u| <= half_width}
/// (no cube clipping): fine t-scan then golden-section refinement.
inline double strip_skeleton_distance(const LLine& core, double half_width, const Vec3& p) {
  auto f = [&](double t) {
    const Vec3 diff = p - core.point_at(t);
    const Vec3 w(1.0, -t, 0.0);
    const double u = std::clamp(diff.dot(w) / w.squaredNorm(), -half_width, half_width);
    return (diff - u * w).norm();
  };
  const int scan = 513;
  double best_t = 0, best = f(0);
  for (int i = 1; i < scan; ++i) {
    const double t = static_cast<double>(i) / (scan - 1);
    const double d = f(t);
    if (d < best) {
      best = d;
      best_t = t;
    }
  }
  const double step = 1.0 / (scan - 1);
  double a = std::max(0.0, best_t - step), b = std::min(1.0, best_t + step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  return std::min({best, f1, f2});
}

}  // namespace detail

/// Compares the (delta, sqrt delta)-strip of `ell` with the Koranyi
/// sqrt(delta)-tube around hline_of(ell), over the strip's height range.
///
/// c_out: max over strip samples of (Koranyi distance to the line) / sqrt(delta).
/// c_in: smallest C such that every tube sample with height in [0,1] lies in
/// the strip thickened to C delta and widened to C sqrt(delta) (bisection per
/// sample).
inline StripHTubeConstants strip_vs_htube(const LLine& ell, double delta, int n_samples, std::uint64_t seed) {
  const double rho = std::sqrt(delta);
  const HLine line = hline_of(ell);
  const Line l = sl2_from_lline(ell);
  const double speed = Vec2(l.c, l.d).norm();
  // Strip heights t in [0,1] correspond to SL2 heights s = b + a t.
  const double s_lo = std::min(ell.b, ell.b + ell.a), s_hi = std::max(ell.b, ell.b + ell.a);
  const Interval tau{s_lo * speed - 1.0, s_hi * speed + 1.0};

  StripHTubeConstants out;
  CounterRng rng(seed, 0);
  for (int i = 0; i < n_samples; ++i) {
    const double t = rng.uniform(), u = rng.uniform(-rho, rho);
    Vec3 b;
    do b = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    while (b.squaredNorm() > 1.0);
    const Vec3 p = ell.point_at(t) + u * Vec3(1.0, -t, 0.0) + delta * b;
    const double d = detail::hline_distance(line, strip_chart_to_heisenberg(p), tau.lo, tau.hi);
    out.c_out = std::max(out.c_out, d / rho);
  }

  CounterRng rng2(seed, 1);
  for (int i = 0; i < n_samples; ++i) {
    const double s = rng2.uniform(s_lo, s_hi);
    HPoint g;
    do g = {rng2.uniform(-rho, rho), rng2.uniform(-rho, rho), rng2.uniform(-delta / 4, delta / 4)};
    while (koranyi_gauge(g) > rho);
    const Vec3 q = heisenberg_to_strip_chart(line.point_at(s * speed) * g);
    // The tube's end caps reach sqrt(delta) past the strip's height range.
    if (q.z() < 0.0 || q.z() > 1.0) {
      --i;
      continue;
    }
    double lo = 0.0, hi = 1.0;
    auto inside = [&](double c) {
      return detail::strip_skeleton_distance(ell, c * rho, q) <= c * delta;
    };
    while (!inside(hi)) hi *= 2.0;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      (inside(mid) ? hi : lo) = mid;
    }
    out.c_in = std::max(out.c_in, hi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid functions and the Nikodym maximal function.
// ---------------------------------------------------------------------------

/// Piecewise-constant function on an n^3 grid over [0,1]^3, zero outside.
struct GridFunction {
  int n = 0;
  double h = 0;
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(int n_, double fill = 0.0) : n(n_), h(1.0 / n_), values(std::size_t(n_) * n_ * n_, fill) {}

  [[nodiscard]] std::size_t index(int i, int j, int k) const { return (std::size_t(k) * n + j) * n + i; }
  double& at(int i, int j, int k) { return values[index(i, j, k)]; }
  [[nodiscard]] double at(int i, int j, int k) const { return values[index(i, j, k)]; }
  [[nodiscard]] Vec3 center(int i, int j, int k) const { return h * Vec3(i + 0.5, j + 0.5, k + 0.5); }

  [[nodiscard]] double eval(double x, double y, double z) const {
    if (x < 0 || y < 0 || z < 0 || x >= 1 || y >= 1 || z >= 1) return 0.0;
    return at(std::min(n - 1, int(x * n)), std::min(n - 1, int(y * n)), std::min(n - 1, int(z * n)));
  }

  [[nodiscard]] double norm(double p) const {
    double s = 0.0;
    for (double v : values) s += std::pow(std::abs(v), p);
    return std::pow(h * h * h * s, 1.0 / p);
  }
};

inline GridFunction constant_function(int n, double c = 1.0) { return GridFunction(n, c); }

/// Indicator of the cells met by line(t), t in window.
inline GridFunction tube_function(int n, const HLine& line, const Interval& window) {
  GridFunction f(n);
  const int steps = 64 * n;
  for (int i = 0; i <= steps; ++i) {
    const HPoint p = line.point_at(window.lo + window.length() * i / steps);
    if (p.x < 0 || p.y < 0 || p.z < 0 || p.x >= 1 || p.y >= 1 || p.z >= 1) continue;
    f.at(int(p.x * n), int(p.y * n), int(p.z * n)) = 1.0;
  }
  return f;
}

/// Indicator of the cells whose centers lie in a Koranyi ball.
inline GridFunction ball_function(int n, const HPoint& c, double radius) {
  GridFunction f(n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        f.at(i, j, k) = koranyi_distance(HPoint::of(f.center(i, j, k)), c) <= radius ? 1.0 : 0.0;
  return f;
}

/// Indicator of the cells whose centers lie in the union of the family.
inline GridFunction family_function(int n, const StripFamily& fam) {
  GridFunction f(n);
  const StripIndex index(fam, fam.rho);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) f.at(i, j, k) = index.covered(f.center(i, j, k)) ? 1.0 : 0.0;
  return f;
}

struct NikodymOptions {
  double delta = 1.0 / 16;
  double net_step = 1.0 / 16;
};

/// Discretized Mf(x) = sup over unit-length Koranyi delta-tubes T containing x
/// of the average of f over T. Tubes: directions on an angular net of step
/// delta over [0, pi); axes through x * o for horizontal offsets o on a square
/// net of step net_step inside the delta-disk; unit windows [s0, s0 + 1] with
/// s0 in [-1, 0] on the sampling step. Tube averages use line samples of step
/// max(delta/4, h/4), each averaged over the cross-section {0, +-delta/2
/// horizontally across the axis, +-delta^2/8 vertically}.
inline GridFunction nikodym_maximal(const GridFunction& f, const NikodymOptions& opt) {
  const double delta = opt.delta;
  if (opt.net_step > delta * (1.0 + 1e-12)) throw std::invalid_argument("nikodym_maximal: net_step must be <= delta");
  std::vector<Vec2> offsets;
  const int m = static_cast<int>(std::floor(delta / opt.net_step + 1e-9));
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b) {
      const Vec2 o(a * opt.net_step, b * opt.net_step);
      if (o.norm() <= delta * (1.0 + 1e-12)) offsets.push_back(o);
    }
  const int n_dir = static_cast<int>(std::ceil(M_PI / delta - 1e-9));
  const double sigma = std::max(delta / 4.0, f.h / 4.0);
  const int half = static_cast<int>(std::ceil(1.0 / sigma - 1e-9));  // samples per unit length
  const int n_s = 2 * half + 1;                                        // s in [-1, 1]

  GridFunction out(f.n);
  const std::size_t cells = out.values.size();
  parallel_for(cells, [&](std::size_t c) {
    const int i = static_cast<int>(c % f.n), j = static_cast<int>((c / f.n) % f.n), k = static_cast<int>(c / (std::size_t(f.n) * f.n));
    const HPoint x = HPoint::of(f.center(i, j, k));
    std::vector<double> prefix(n_s + 1);
    double best = 0.0;
    for (int d = 0; d < n_dir; ++d) {
      const double th = d * M_PI / n_dir;
      const Vec2 u(std::cos(th), std::sin(th));
      const HPoint across{-0.5 * delta * u.y(), 0.5 * delta * u.x(), 0.0};
      const HPoint cross[5] = {{0, 0, 0}, across, across.inverse(), {0, 0, delta * delta / 8}, {0, 0, -delta * delta / 8}};
      for (const Vec2& o : offsets) {
        const HPoint P = x * HPoint{o.x(), o.y(), 0.0};
        prefix[0] = 0.0;
        for (int q = 0; q < n_s; ++q) {
          const double s = -1.0 + q * (1.0 / half);
          const HPoint L = P * HPoint{s * u.x(), s * u.y(), 0.0};
          double acc = 0.0;
          for (const HPoint& cs : cross) {
            const HPoint p = L * cs;
            acc += f.eval(p.x, p.y, p.z);
          }
          prefix[q + 1] = prefix[q] + acc / 5.0;
        }
        for (int w = 0; w <= half; ++w) best = std::max(best, (prefix[w + half + 1] - prefix[w]) / (half + 1));
      }
    }
    out.values[c] = best;
  });
  return out;
}

inline double lp_ratio(const GridFunction& f, double p, const NikodymOptions& opt) {
  if (p < 1.0) throw std::invalid_argument("lp_ratio: p must be >= 1");
  const double nf = f.norm(p);
  if (!(nf > 0.0)) throw ZeroFunction("lp_ratio: ||f||_p = 0");
  return nikodym_maximal(f, opt).norm(p) / nf;
}

}  // namespace regstrip
