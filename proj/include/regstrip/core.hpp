#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace regstrip {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

/// Degeneracy threshold shared by every chart and curve computation.
inline constexpr double kEpsMin = 1e-6;

// ---------------------------------------------------------------------------
// Error types. Each names the contract that could not be met.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The SL2 -> a=d reparameterization chart does not cover this line.
struct DegenerateLine : Error {
  using Error::Error;
};
/// A formula containing 1/t was evaluated too close to t = 0.
struct DegenerateHeight : Error {
  using Error::Error;
};
/// gamma_1 (or |gamma|) vanishes where the curve frame needs it.
struct DegenerateCurve : Error {
  using Error::Error;
};
struct BadScale : Error {
  using Error::Error;
};
struct GenerationExhausted : Error {
  using Error::Error;
};
struct InsufficientSamples : Error {
  using Error::Error;
};
struct GridTooLarge : Error {
  using Error::Error;
};
struct ZeroFunction : Error {
  using Error::Error;
};
struct InsufficientData : Error {
  using Error::Error;
};
/// Malformed input file or configuration.
struct InputError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Small geometric helpers.
// ---------------------------------------------------------------------------

/// Closed interval [lo, hi]; empty when lo > hi.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] bool empty() const { return lo > hi; }
  [[nodiscard]] double length() const { return empty() ? 0.0 : hi - lo; }
  [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Dyadic log: log2(1/delta).
inline double log2_inv(double delta) { return std::log2(1.0 / delta); }

/// Squared distance from p to the segment [a, b] in any dimension.
template <class V>
double segment_distance_sq(const V& p, const V& a, const V& b) {
  const V ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = 0.0;
  if (len2 > 0.0) s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).squaredNorm();
}

/// Distance between two 2D segments (zero when they cross).
inline double segment_segment_distance(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                                       const Vec2& b1) {
  auto cross = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
  const Vec2 da = a1 - a0;
  const Vec2 db = b1 - b0;
  const double d1 = cross(da, b0 - a0);
  const double d2 = cross(da, b1 - a0);
  const double d3 = cross(db, a0 - b0);
  const double d4 = cross(db, a1 - b0);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return 0.0;
  const double m = std::min({segment_distance_sq(a0, b0, b1), segment_distance_sq(a1, b0, b1),
                             segment_distance_sq(b0, a0, a1), segment_distance_sq(b1, a0, a1)});
  return std::sqrt(m);
}

/// Uniform hash grid over 3D points with incremental insertion.
class PointGrid3 {
 public:
  explicit PointGrid3(double cell) : cell_(cell) {
    if (!(cell > 0.0)) throw std::invalid_argument("PointGrid3: cell must be positive");
  }

  void insert(const Vec3& p, int id) {
    cells_[key(coord(p.x()), coord(p.y()), coord(p.z()))].push_back(
        static_cast<int>(points_.size()));
    points_.push_back(p);
    ids_.push_back(id);
  }

  /// Calls fn(id, point) for every stored point within `radius` of q.
  template <class Fn>
  void for_each_near(const Vec3& q, double radius, Fn&& fn) const {
    const double r2 = radius * radius;
    const std::int64_t x0 = coord(q.x() - radius), x1 = coord(q.x() + radius);
    const std::int64_t y0 = coord(q.y() - radius), y1 = coord(q.y() + radius);
    const std::int64_t z0 = coord(q.z() - radius), z1 = coord(q.z() + radius);
    const std::int64_t span = (x1 - x0 + 1) * (y1 - y0 + 1) * (z1 - z0 + 1);
    if (span > static_cast<std::int64_t>(cells_.size())) {
      // Query box covers more cells than are occupied: scan occupied cells.
      for (const auto& [k, list] : cells_)
        for (int i : list)
          if ((points_[i] - q).squaredNorm() <= r2) fn(ids_[i], points_[i]);
      return;
    }
    for (std::int64_t x = x0; x <= x1; ++x)
      for (std::int64_t y = y0; y <= y1; ++y)
        for (std::int64_t z = z0; z <= z1; ++z) {
          auto it = cells_.find(key(x, y, z));
          if (it == cells_.end()) continue;
          for (int i : it->second)
            if ((points_[i] - q).squaredNorm() <= r2) fn(ids_[i], points_[i]);
        }
  }

  [[nodiscard]] std::size_t size() const { return points_.size(); }

 private:
  [[nodiscard]] std::int64_t coord(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_));
  }
  static std::uint64_t key(std::int64_t x, std::int64_t y, std::int64_t z) {
    auto u = [](std::int64_t v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1FFFFF; };
    return (u(x) << 42) | (u(y) << 21) | u(z);
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
  std::vector<Vec3> points_;
  std::vector<int> ids_;
};

// ---------------------------------------------------------------------------
// Thread pool substitute: a blocking parallel-for over [0, n).
// ---------------------------------------------------------------------------

inline std::atomic<int>& thread_setting() {
  static std::atomic<int> n{0};
  return n;
}

/// Sets the worker count used by parallel_for; 0 means hardware concurrency.
inline void set_threads(int n) { thread_setting() = std::max(0, n); }

inline int thread_count() {
  const int n = thread_setting();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n). Work items are claimed dynamically, so body
/// must only write to state owned by item i.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const int workers = static_cast<int>(std::min<std::size_t>(n, thread_count()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace regstrip
