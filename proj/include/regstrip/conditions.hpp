#pragma once

// Two-dimensional ball condition: discrete counting form over dual centers and
// the volume form over the union W of dual tubes in R^4.

#include <numeric>

#include "regstrip/rng.hpp"
#include "regstrip/strip_family.hpp"

namespace regstrip {

/// delta, 2 delta, 4 delta, ... up to 1; 1 is appended when not dyadic.
inline std::vector<double> dyadic_radii(double delta) {
  std::vector<double> out;
  double r = delta;
  while (r <= 1.0 * (1.0 + 1e-12)) {
    out.push_back(r);
    r *= 2.0;
  }
  if (out.empty() || out.back() < 1.0 * (1.0 - 1e-12)) out.push_back(1.0);
  return out;
}

/// Counting bound without the tolerance constant.
inline double counting_bound(double r, double delta, double rho) {
  return r <= rho ? r / delta : r * r / (delta * rho);
}

/// Counting bound after random sampling at (delta', rho') from a family at
/// (delta, rho).
inline double sampled_counting_bound(double r, double delta, double rho, double delta_new,
                                     double rho_new) {
  return r <= rho ? r / delta_new * (rho_new / rho) : r * r / (delta * rho);
}

struct BallConditionRow {
  double r = 0;
  Vec4 worst_center = Vec4::Zero();
  double observed = 0;
  double bound = 0;  // includes the constant
  double stderr_ = 0;
  bool pass = true;
  [[nodiscard]] double ratio() const { return bound > 0 ? observed / bound : 0.0; }
};

struct BallConditionReport {
  std::string form;
  std::vector<BallConditionRow> rows;

  [[nodiscard]] bool overall_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
  }

  [[nodiscard]] double worst_ratio() const {
    double w = 0.0;
    for (const auto& r : rows) w = std::max(w, r.ratio());
    return w;
  }

  /// Radius of the row with the largest ratio.
  [[nodiscard]] double worst_radius() const {
    double w = -1.0, rr = 0.0;
    for (const auto& r : rows)
      if (r.ratio() > w) {
        w = r.ratio();
        rr = r.r;
      }
    return rr;
  }
};

namespace detail {

struct CenterCounts {
  std::vector<int> counts;  // per center: #centers within 2r
};

inline CenterCounts count_neighbors(const std::vector<Vec3>& pts, double radius) {
  CenterCounts out;
  out.counts.assign(pts.size(), 0);
  if (pts.empty()) return out;
  Vec3 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  if ((hi - lo).norm() <= radius) {
    std::fill(out.counts.begin(), out.counts.end(), static_cast<int>(pts.size()));
    return out;
  }
  PointGrid3 grid(radius);
  for (std::size_t i = 0; i < pts.size(); ++i) grid.insert(pts[i], static_cast<int>(i));
  parallel_for(pts.size(), [&](std::size_t i) {
    int c = 0;
    grid.for_each_near(pts[i], radius, [&](int, const Vec3&) { ++c; });
    out.counts[i] = c;
  });
  return out;
}

template <class Bound>
BallConditionReport count_report(const StripFamily& fam, double constant, Bound bound) {
  BallConditionReport rep;
  rep.form = "count";
  std::vector<Vec3> pts;
  pts.reserve(fam.size());
  for (const auto& s : fam.strips) pts.push_back(dual_embed(s.core));
  for (double r : dyadic_radii(fam.delta)) {
    BallConditionRow row;
    row.r = r;
    row.bound = constant * bound(r);
    const CenterCounts cc = count_neighbors(pts, 2.0 * r);
    if (!cc.counts.empty()) {
      const auto it = std::max_element(cc.counts.begin(), cc.counts.end());
      row.observed = *it;
      row.worst_center = fam.strips[it - cc.counts.begin()].core.breve();
    }
    row.pass = row.observed <= row.bound;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace detail

/// For each dyadic r: max over dual centers c of #(dual centers in B(c, 2r)),
/// compared with constant * counting_bound(r).
inline BallConditionReport ball_condition_count(const StripFamily& fam, double constant = 100.0) {
  if (constant < 1.0) throw std::invalid_argument("ball_condition_count: constant must be >= 1");
  return detail::count_report(
      fam, constant, [&](double r) { return counting_bound(r, fam.delta, fam.rho); });
}

/// Counting check of a refined family against the bounds the sampling step
/// guarantees, with radii taken at the original scale delta.
inline BallConditionReport ball_condition_count_sampled(const StripFamily& refined, double delta,
                                                        double rho, double constant = 100.0) {
  StripFamily at_original = refined;
  at_original.delta = delta;
  at_original.rho = rho;
  return detail::count_report(at_original, constant, [&](double r) {
    return sampled_counting_bound(r, delta, rho, refined.delta, refined.rho);
  });
}

/// Incremental counting check used by the greedy generator. Holds, for every
/// dyadic radius, the current doubled-ball count of each accepted center.
class IncrementalBallCheck {
 public:
  IncrementalBallCheck(double delta, double rho, double constant)
      : delta_(delta), rho_(rho), constant_(constant), radii_(dyadic_radii(delta)) {
    for (double r : radii_) grids_.emplace_back(2.0 * r);
    counts_.resize(radii_.size());
  }

  /// Adds the center if every bound still holds; returns whether it was added.
  bool try_add(const Vec3& embedded) {
    std::vector<std::vector<int>> hits(radii_.size());
    for (std::size_t k = 0; k < radii_.size(); ++k) {
      const double bound = constant_ * counting_bound(radii_[k], delta_, rho_);
      grids_[k].for_each_near(embedded, 2.0 * radii_[k],
                              [&](int id, const Vec3&) { hits[k].push_back(id); });
      if (static_cast<double>(hits[k].size() + 1) > bound) return false;
      for (int id : hits[k])
        if (static_cast<double>(counts_[k][id] + 1) > bound) return false;
    }
    const int id = static_cast<int>(size_);
    for (std::size_t k = 0; k < radii_.size(); ++k) {
      for (int other : hits[k]) ++counts_[k][other];
      counts_[k].push_back(static_cast<int>(hits[k].size()) + 1);
      grids_[k].insert(embedded, id);
    }
    ++size_;
    return true;
  }

  [[nodiscard]] std::size_t size() const { return size_; }

 private:
  double delta_, rho_, constant_;
  std::vector<double> radii_;
  std::vector<PointGrid3> grids_;
  std::vector<std::vector<int>> counts_;
  std::size_t size_ = 0;
};

/// Volume form: for each dyadic r and the `top_centers` dual centers with the
/// largest doubled-ball counts, estimates |W ∩ B(c, 2r)| delta^-4 and compares
/// with constant * (r / delta)^2.
///
/// |W ∩ B| is estimated by sampling a tube with probability proportional to
/// its volume, a point uniformly inside it, and weighting by the inverse of
/// the number of tubes containing the point. Per-center streams are keyed by
/// (radius index, center index).
inline BallConditionReport ball_condition_volume(const StripFamily& fam, long n_mc,
                                                 std::uint64_t seed, double constant = 800.0,
                                                 int top_centers = 16) {
  if (n_mc < 10000) throw std::invalid_argument("ball_condition_volume: n_mc must be >= 1e4");
  BallConditionReport rep;
  rep.form = "volume";
  const double delta = fam.delta;
  std::vector<DualTube> tubes;
  std::vector<Vec3> pts;
  for (const auto& s : fam.strips) {
    tubes.push_back(dual_tube(s));
    pts.push_back(dual_embed(s.core));
  }
  const double half = tubes.empty() ? 0.0 : tubes[0].half_length;
  const double tube_vol = tubes.empty() ? 0.0 : tubes[0].volume();
  PointGrid3 grid(std::max(2.0 * delta, 1e-9));
  for (std::size_t i = 0; i < pts.size(); ++i) grid.insert(pts[i], static_cast<int>(i));

  // Local orthonormal frame: the tube axis and three vectors spanning x1 = x4.
  const Vec4 axis = Vec4(1, 0, 0, -1) / std::sqrt(2.0);
  const Vec4 f1 = Vec4(1, 0, 0, 1) / std::sqrt(2.0);
  const Vec4 f2(0, 1, 0, 0), f3(0, 0, 1, 0);

  auto multiplicity = [&](const Vec4& p) {
    const Vec3 e(std::sqrt(2.0) * 0.5 * (p(0) + p(3)), p(1), p(2));
    int m = 0;
    grid.for_each_near(e, delta, [&](int id, const Vec3&) { m += tubes[id].contains(p) ? 1 : 0; });
    return m;
  };

  const auto radii = dyadic_radii(delta);
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double r = radii[k];
    BallConditionRow row;
    row.r = r;
    row.bound = constant * (r / delta) * (r / delta);
    if (!tubes.empty()) {
      const auto cc = detail::count_neighbors(pts, 2.0 * r);
      std::vector<int> order(pts.size());
      std::iota(order.begin(), order.end(), 0);
      const int top = std::min<int>(top_centers, static_cast<int>(order.size()));
      std::partial_sort(order.begin(), order.begin() + top, order.end(), [&](int a, int b) {
        return cc.counts[a] != cc.counts[b] ? cc.counts[a] > cc.counts[b] : a < b;
      });
      std::vector<double> est(top), err(top);
      parallel_for(static_cast<std::size_t>(top), [&](std::size_t j) {
        const Vec4 c = tubes[order[j]].center;
        const double R = 2.0 * r;
        std::vector<int> cand;
        grid.for_each_near(pts[order[j]], R + half + delta,
                           [&](int id, const Vec3&) { cand.push_back(id); });
        CounterRng rng(seed, (static_cast<std::uint64_t>(k) << 32) | order[j]);
        const double total = tube_vol * cand.size();
        double sum = 0.0, sum2 = 0.0;
        for (long i = 0; i < n_mc; ++i) {
          const DualTube& t = tubes[cand[rng.below(cand.size())]];
          Vec4 p;
          for (;;) {
            const double s = rng.uniform(-half - delta, half + delta);
            const double y1 = rng.uniform(-delta, delta);
            const double y2 = rng.uniform(-delta, delta);
            const double y3 = rng.uniform(-delta, delta);
            p = t.center + s * axis + y1 * f1 + y2 * f2 + y3 * f3;
            if (t.contains(p)) break;
          }
          double v = 0.0;
          if ((p - c).norm() <= R) v = total / multiplicity(p);
          sum += v;
          sum2 += v * v;
        }
        const double mean = sum / n_mc;
        const double var = std::max(0.0, sum2 / n_mc - mean * mean);
        est[j] = mean / std::pow(delta, 4);
        err[j] = std::sqrt(var / n_mc) / std::pow(delta, 4);
      });
      const auto it = std::max_element(est.begin(), est.end());
      const std::size_t j = it - est.begin();
      row.observed = *it;
      row.stderr_ = err[j];
      row.worst_center = tubes[order[j]].center;
      for (int i = 0; i < top; ++i)
        if (std::abs(est[i] - row.bound) <= 2.0 * err[i] && err[i] > 0.25 * row.bound)
          throw InsufficientSamples("ball_condition_volume: standard error too large at r = " +
                                    std::to_string(r));
    }
    row.pass = row.observed <= row.bound;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace regstrip
