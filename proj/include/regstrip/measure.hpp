#pragma once

// Union measures of strip families: voxel rasterization, Monte Carlo, slices,
// plank unions in parameter space, horizontal tubes, shadings, and the
// regular-shading refinement.

#include <bit>
#include <map>
#include <set>

#include "regstrip/duality.hpp"
#include "regstrip/rng.hpp"
#include "regstrip/strip_family.hpp"

namespace regstrip {

inline constexpr std::uint64_t kMaxGridCells = std::uint64_t{1} << 30;

/// Dense bit grid of nx * ny * nz cells of side h starting at `origin`. Rows
/// along x are padded to whole 64-bit words.
class OccupancyGrid {
 public:
  OccupancyGrid(const Vec3& origin, double h, int nx, int ny, int nz)
      : origin_(origin), h_(h), nx_(nx), ny_(ny), nz_(nz), words_per_row_((nx + 63) / 64) {
    const std::uint64_t cells = std::uint64_t(nx) * ny * nz;
    if (cells > kMaxGridCells) throw GridTooLarge("grid of " + std::to_string(cells) + " cells");
    bits_.assign(std::size_t(words_per_row_) * ny * nz, 0);
  }

  /// Unit cube at resolution h (1/h rounded to the nearest integer cells).
  static OccupancyGrid unit_cube(double h) {
    const double cells = std::round(1.0 / h);
    if (cells * cells * cells > static_cast<double>(kMaxGridCells))
      throw GridTooLarge("unit grid at h = " + std::to_string(h));
    const int n = static_cast<int>(cells);
    return {Vec3::Zero(), 1.0 / n, n, n, n};
  }

  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] int nx() const { return nx_; }
  [[nodiscard]] int ny() const { return ny_; }
  [[nodiscard]] int nz() const { return nz_; }
  [[nodiscard]] const Vec3& origin() const { return origin_; }

  [[nodiscard]] Vec3 center(int i, int j, int k) const {
    return origin_ + h_ * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }

  /// Sets cells i0..i1 (inclusive) of row (j, k).
  void set_span(int j, int k, int i0, int i1) {
    std::uint64_t* row = &bits_[(std::size_t(k) * ny_ + j) * words_per_row_];
    const int w0 = i0 >> 6, w1 = i1 >> 6;
    const std::uint64_t lo = ~std::uint64_t{0} << (i0 & 63);
    const std::uint64_t hi = ~std::uint64_t{0} >> (63 - (i1 & 63));
    if (w0 == w1) {
      row[w0] |= lo & hi;
      return;
    }
    row[w0] |= lo;
    for (int w = w0 + 1; w < w1; ++w) row[w] = ~std::uint64_t{0};
    row[w1] |= hi;
  }

  void set(int i, int j, int k) { set_span(j, k, i, i); }

  [[nodiscard]] bool test(int i, int j, int k) const {
    return (bits_[(std::size_t(k) * ny_ + j) * words_per_row_ + (i >> 6)] >> (i & 63)) & 1U;
  }

  [[nodiscard]] std::uint64_t popcount() const {
    std::uint64_t c = 0;
    for (auto w : bits_) c += std::popcount(w);
    return c;
  }

  [[nodiscard]] std::uint64_t layer_popcount(int k) const {
    std::uint64_t c = 0;
    const std::size_t base = std::size_t(k) * ny_ * words_per_row_;
    for (std::size_t w = 0; w < std::size_t(ny_) * words_per_row_; ++w)
      c += std::popcount(bits_[base + w]);
    return c;
  }

  [[nodiscard]] double measure() const { return h_ * h_ * h_ * static_cast<double>(popcount()); }

 private:
  Vec3 origin_;
  double h_;
  int nx_, ny_, nz_;
  int words_per_row_;
  std::vector<std::uint64_t> bits_;
};

/// Cells j0..j1 whose centers (j + 1/2) h lie in [lo, hi], clamped to [0, n).
inline std::pair<int, int> center_range(double lo, double hi, double h, int n) {
  const int a = std::max(0, static_cast<int>(std::ceil(lo / h - 0.5)));
  const int b = std::min(n - 1, static_cast<int>(std::floor(hi / h - 0.5)));
  return {a, b};
}

struct RowSpan {
  int j;
  int i0;
  int i1;
};

namespace detail {

/// x-extent of {q : dist(q, [A, B]) <= r} on the line y = y0.
inline std::optional<Interval> stadium_row(const Vec2& A, const Vec2& B, double r, double y0) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto take = [&](double x) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  };
  for (const Vec2* c : {&A, &B}) {
    const double dy = c->y() - y0;
    if (std::abs(dy) <= r) {
      const double w = std::sqrt(r * r - dy * dy);
      take(c->x() - w);
      take(c->x() + w);
    }
  }
  const Vec2 d = B - A;
  const double len = d.norm();
  if (len > 0.0) {
    const Vec2 n(-d.y() / len, d.x() / len);
    for (double sgn : {-1.0, 1.0}) {
      const Vec2 a = A + sgn * r * n;
      if (d.y() != 0.0) {
        const double s = (y0 - a.y()) / d.y();
        if (s >= 0.0 && s <= 1.0) take(a.x() + s * d.x());
      }
    }
  }
  if (lo > hi) return std::nullopt;
  return Interval{lo, hi};
}

}  // namespace detail

/// Cells of the horizontal layer at height z (a cell-center height) whose
/// centers satisfy the strip's membership predicate. The predicate tests the
/// height net around z, and at each net height t' the accepted set is the
/// disc-thickened u-segment with radius sqrt(delta^2 - (z - t')^2), so the
/// spans reproduce RegulusStrip::contains exactly.
inline void strip_layer_spans(const RegulusStrip& s, double z, double h, int nx, int ny,
                              std::vector<RowSpan>& out) {
  const HeightNet net = height_net(z, s.delta);
  for (int q = 0; q < net.size; ++q) {
    const double tp = net.t[q];
    const double r2 = s.delta * s.delta - (z - tp) * (z - tp);
    if (r2 < 0.0) continue;
    const double r = std::sqrt(r2);
    const Vec2 c(s.core.a + s.core.c * tp, s.core.b + s.core.a * tp);
    const Vec2 w(1.0, -tp);
    const Vec2 A = c - s.rho * w, B = c + s.rho * w;
    const double ymin = std::min(A.y(), B.y()) - r, ymax = std::max(A.y(), B.y()) + r;
    const double xmin = std::min(A.x(), B.x()) - r, xmax = std::max(A.x(), B.x()) + r;
    if (xmax < 0.0 || xmin > nx * h) continue;
    const auto [j0, j1] = center_range(ymin, ymax, h, ny);
    for (int j = j0; j <= j1; ++j) {
      const auto iv = detail::stadium_row(A, B, r, (j + 0.5) * h);
      if (!iv) continue;
      const auto [i0, i1] = center_range(iv->lo, iv->hi, h, nx);
      if (i0 <= i1) out.push_back({j, i0, i1});
    }
  }
}

/// Number of distinct cells covered by possibly overlapping spans.
inline std::uint64_t count_spans(std::vector<RowSpan>& spans) {
  std::sort(spans.begin(), spans.end(),
            [](const RowSpan& a, const RowSpan& b) { return a.j != b.j ? a.j < b.j : a.i0 < b.i0; });
  std::uint64_t total = 0;
  std::size_t i = 0;
  while (i < spans.size()) {
    const int j = spans[i].j;
    int lo = spans[i].i0, hi = spans[i].i1;
    ++i;
    for (; i < spans.size() && spans[i].j == j; ++i) {
      if (spans[i].i0 > hi + 1) {
        total += hi - lo + 1;
        lo = spans[i].i0;
        hi = spans[i].i1;
      } else {
        hi = std::max(hi, spans[i].i1);
      }
    }
    total += hi - lo + 1;
  }
  return total;
}

/// Per-strip layer filter: which layers (by cell index k) a strip contributes.
using LayerFilter = std::function<bool(std::size_t strip, int k)>;

/// Rasterizes the union over [0,1]^3: cell set iff its center is in some strip.
inline OccupancyGrid rasterize(const StripFamily& fam, double h, const LayerFilter& keep = {}) {
  if (h > fam.delta / 2.0 * (1.0 + 1e-12)) throw std::invalid_argument("rasterize: need h <= delta/2");
  OccupancyGrid grid = OccupancyGrid::unit_cube(h);
  const double hh = grid.h();
  const int n = grid.nx();
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    const double z = (k + 0.5) * hh;
    std::vector<RowSpan> spans;
    for (std::size_t i = 0; i < fam.size(); ++i) {
      if (keep && !keep(i, k)) continue;
      spans.clear();
      strip_layer_spans(fam.strips[i], z, hh, n, n, spans);
      for (const auto& sp : spans) grid.set_span(sp.j, k, sp.i0, sp.i1);
    }
  });
  return grid;
}

/// Rasterized volume of each strip on its own (same cells as rasterize).
inline std::vector<double> strip_volumes(const StripFamily& fam, double h) {
  const int n = static_cast<int>(std::round(1.0 / h));
  const double hh = 1.0 / n;
  std::vector<double> out(fam.size());
  parallel_for(fam.size(), [&](std::size_t i) {
    std::vector<RowSpan> spans;
    std::uint64_t cells = 0;
    for (int k = 0; k < n; ++k) {
      spans.clear();
      strip_layer_spans(fam.strips[i], (k + 0.5) * hh, hh, n, n, spans);
      cells += count_spans(spans);
    }
    out[i] = static_cast<double>(cells) * hh * hh * hh;
  });
  return out;
}

inline double sum_strip_volumes(const StripFamily& fam, double h) {
  const auto v = strip_volumes(fam, h);
  return std::accumulate(v.begin(), v.end(), 0.0);
}

/// Brute-force volume of one strip: membership of every cell center of an
/// h-grid, restricted per layer to the slice's bounding box.
inline double reference_strip_volume(const RegulusStrip& s, double h) {
  const int n = static_cast<int>(std::round(1.0 / h));
  const double hh = 1.0 / n;
  std::vector<std::uint64_t> per_layer(n, 0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t kk) {
    const double z = (kk + 0.5) * hh;
    double xlo = 1e9, xhi = -1e9, ylo = 1e9, yhi = -1e9;
    for (double tp : {std::max(0.0, z - s.delta), std::min(1.0, z + s.delta)}) {
      for (double u : {-s.rho, s.rho}) {
        const Vec3 p = s.regulus().point_at(tp, u);
        xlo = std::min(xlo, p.x());
        xhi = std::max(xhi, p.x());
        ylo = std::min(ylo, p.y());
        yhi = std::max(yhi, p.y());
      }
    }
    const auto [i0, i1] = center_range(xlo - 2 * s.delta, xhi + 2 * s.delta, hh, n);
    const auto [j0, j1] = center_range(ylo - 2 * s.delta, yhi + 2 * s.delta, hh, n);
    std::uint64_t c = 0;
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) c += s.contains({(i + 0.5) * hh, (j + 0.5) * hh, z}) ? 1 : 0;
    per_layer[kk] = c;
  });
  return static_cast<double>(std::accumulate(per_layer.begin(), per_layer.end(), std::uint64_t{0})) *
         hh * hh * hh;
}

/// Strips hashed by (slab of height delta, square cell of side `cell`) over
/// the bounding box of each strip's points in the slab.
class StripIndex {
 public:
  StripIndex(const StripFamily& fam, double cell) : fam_(&fam), cell_(cell) {
    slabs_ = static_cast<int>(std::ceil(1.0 / fam.delta - 1e-9));
    cells_ = static_cast<int>(std::ceil(1.0 / cell - 1e-9));
    std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;
    for (std::size_t i = 0; i < fam.size(); ++i) {
      const RegulusStrip& s = fam.strips[i];
      for (int k = 0; k < slabs_; ++k) {
        double xlo = 1e9, xhi = -1e9, ylo = 1e9, yhi = -1e9;
        for (double tp : {std::max(0.0, (k - 1) * s.delta), std::min(1.0, (k + 2) * s.delta)})
          for (double u : {-s.rho, s.rho}) {
            const Vec3 p = s.regulus().point_at(tp, u);
            xlo = std::min(xlo, p.x());
            xhi = std::max(xhi, p.x());
            ylo = std::min(ylo, p.y());
            yhi = std::max(yhi, p.y());
          }
        const int cx0 = std::max(0, cell_of(xlo - s.delta)), cx1 = std::min(cells_ - 1, cell_of(xhi + s.delta));
        const int cy0 = std::max(0, cell_of(ylo - s.delta)), cy1 = std::min(cells_ - 1, cell_of(yhi + s.delta));
        for (int cx = cx0; cx <= cx1; ++cx)
          for (int cy = cy0; cy <= cy1; ++cy)
            entries.emplace_back(key(k, cx, cy), static_cast<std::uint32_t>(i));
      }
    }
    std::sort(entries.begin(), entries.end());
    offsets_.assign(std::size_t(slabs_) * cells_ * cells_ + 1, 0);
    for (const auto& e : entries) ++offsets_[e.first + 1];
    for (std::size_t b = 1; b < offsets_.size(); ++b) offsets_[b] += offsets_[b - 1];
    ids_.reserve(entries.size());
    for (const auto& e : entries) ids_.push_back(e.second);
  }

  /// Calls fn(strip index) for every candidate strip near p.
  template <class Fn>
  void candidates(const Vec3& p, Fn&& fn) const {
    if (p.x() < 0 || p.x() > 1 || p.y() < 0 || p.y() > 1 || p.z() < 0 || p.z() > 1) return;
    const int k = std::min(slabs_ - 1, static_cast<int>(p.z() / fam_->delta));
    const std::uint32_t b = key(k, std::min(cells_ - 1, cell_of(p.x())), std::min(cells_ - 1, cell_of(p.y())));
    for (std::uint32_t e = offsets_[b]; e < offsets_[b + 1]; ++e) fn(ids_[e]);
  }

  [[nodiscard]] bool covered(const Vec3& p) const {
    bool hit = false;
    candidates(p, [&](std::uint32_t i) { hit = hit || fam_->strips[i].contains(p); });
    return hit;
  }

 private:
  [[nodiscard]] int cell_of(double v) const { return static_cast<int>(std::floor(v / cell_)); }
  [[nodiscard]] std::uint32_t key(int k, int cx, int cy) const {
    return static_cast<std::uint32_t>((std::size_t(k) * cells_ + cx) * cells_ + cy);
  }

  const StripFamily* fam_;
  double cell_;
  int slabs_ = 0, cells_ = 0;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> ids_;
};

struct Estimate {
  double value = 0;
  double stderr_ = 0;
};

/// Hit fraction of n uniform samples in [0,1]^3. Samples are drawn in chunks
/// of 2^16 with one RNG stream per chunk, so the result does not depend on
/// the thread count.
inline Estimate mc_measure(const std::function<bool(const Vec3&)>& inside, long n, std::uint64_t seed) {
  if (n < 10000) throw std::invalid_argument("mc_measure: n must be >= 1e4");
  constexpr long kChunk = 1 << 16;
  const long chunks = (n + kChunk - 1) / kChunk;
  std::vector<long> hits(chunks, 0);
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    CounterRng rng(seed, c);
    const long m = std::min(kChunk, n - static_cast<long>(c) * kChunk);
    long h = 0;
    for (long i = 0; i < m; ++i) {
      const double x = rng.uniform(), y = rng.uniform(), z = rng.uniform();
      h += inside({x, y, z}) ? 1 : 0;
    }
    hits[c] = h;
  });
  const double p = static_cast<double>(std::accumulate(hits.begin(), hits.end(), 0L)) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

inline Estimate mc_union_measure(const StripFamily& fam, long n, std::uint64_t seed) {
  if (n < 10000) throw std::invalid_argument("mc_union_measure: n must be >= 1e4");
  if (fam.empty()) return {0.0, 0.0};
  const StripIndex index(fam, fam.rho);
  return mc_measure([&](const Vec3& p) { return index.covered(p); }, n, seed);
}

/// Area of the slice of the union at height t on a 2D grid of side h2.
inline double slice_measure(const StripFamily& fam, double t, double h2) {
  if (h2 > fam.delta / 2.0 * (1.0 + 1e-12)) throw std::invalid_argument("slice_measure: need h2 <= delta/2");
  const int n = static_cast<int>(std::round(1.0 / h2));
  const double hh = 1.0 / n;
  OccupancyGrid layer(Vec3::Zero(), hh, n, n, 1);
  std::vector<RowSpan> spans;
  for (const auto& s : fam.strips) {
    spans.clear();
    strip_layer_spans(s, t, hh, n, n, spans);
    for (const auto& sp : spans) layer.set_span(sp.j, 0, sp.i0, sp.i1);
  }
  return static_cast<double>(layer.popcount()) * hh * hh;
}

struct PlankUnion {
  double volume3d = 0;
  double projected_area = 0;
};

/// Union of the planks T_x(t) at the family's parameter points (unclipped, in
/// parameter space) and the area of its pi_t image.
inline PlankUnion plank_union_measure(const StripFamily& fam, double t, double h) {
  if (h > fam.delta / 2.0 * (1.0 + 1e-12)) throw std::invalid_argument("plank_union_measure: need h <= delta/2");
  if (fam.empty()) return {};
  std::vector<Plank> planks;
  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  std::vector<std::pair<Vec3, Vec3>> boxes;
  for (const auto& x : fam.parameter_points()) {
    planks.push_back(plank_for(x, t, fam.rho, fam.delta));
    const Plank& p = planks.back();
    const Vec3 ext = p.axes.cwiseAbs().transpose() * p.half_extents;
    boxes.emplace_back(p.center - ext, p.center + ext);
    lo = lo.cwiseMin(boxes.back().first);
    hi = hi.cwiseMax(boxes.back().second);
  }
  const Vec3 dims = ((hi - lo) / h).array().ceil();
  if (dims.prod() > static_cast<double>(kMaxGridCells))
    throw GridTooLarge("plank_union_measure: " + std::to_string(dims.prod()) + " cells");
  OccupancyGrid grid(lo, h, int(dims.x()), int(dims.y()), int(dims.z()));
  parallel_for(static_cast<std::size_t>(grid.nz()), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    const double z0 = lo.z() + (k + 0.5) * h;
    for (std::size_t q = 0; q < planks.size(); ++q) {
      if (z0 < boxes[q].first.z() || z0 > boxes[q].second.z()) continue;
      const Plank& p = planks[q];
      const auto [j0, j1] = center_range(boxes[q].first.y() - lo.y(), boxes[q].second.y() - lo.y(), h, grid.ny());
      for (int j = j0; j <= j1; ++j) {
        const double y0 = lo.y() + (j + 0.5) * h;
        double xl = -1e300, xr = 1e300;
        for (int a = 0; a < 3 && xl <= xr; ++a) {
          const Vec3 ax = p.axes.row(a).transpose();
          const double e = p.half_extents(a);
          const double off = ax.y() * (y0 - p.center.y()) + ax.z() * (z0 - p.center.z());
          if (std::abs(ax.x()) < 1e-14) {
            if (std::abs(off) > e) xr = -1e300;
            continue;
          }
          double u = (-e - off) / ax.x() + p.center.x(), v = (e - off) / ax.x() + p.center.x();
          if (u > v) std::swap(u, v);
          xl = std::max(xl, u);
          xr = std::min(xr, v);
        }
        if (xl > xr) continue;
        const auto [i0, i1] = center_range(xl - lo.x(), xr - lo.x(), h, grid.nx());
        if (i0 <= i1) grid.set_span(j, k, i0, i1);
      }
    }
  });
  PlankUnion out;
  out.volume3d = grid.measure();

  // pi_t maps each plank onto the axis-aligned rectangle [±rho] x [±delta].
  std::vector<Vec2> centers;
  Vec2 plo = Vec2::Constant(1e300), phi = Vec2::Constant(-1e300);
  for (const auto& p : planks) {
    centers.push_back(project_pi_t(p.center, t));
    plo = plo.cwiseMin(centers.back());
    phi = phi.cwiseMax(centers.back());
  }
  const Vec2 pad(fam.rho + h, fam.delta + h);
  plo -= pad;
  phi += pad;
  const int px = static_cast<int>(std::ceil((phi.x() - plo.x()) / h));
  const int py = static_cast<int>(std::ceil((phi.y() - plo.y()) / h));
  OccupancyGrid flat(Vec3(plo.x(), plo.y(), 0), h, px, py, 1);
  for (const auto& c : centers) {
    const auto [i0, i1] = center_range(c.x() - fam.rho - plo.x(), c.x() + fam.rho - plo.x(), h, px);
    const auto [j0, j1] = center_range(c.y() - fam.delta - plo.y(), c.y() + fam.delta - plo.y(), h, py);
    for (int j = j0; j <= j1; ++j)
      if (i0 <= i1) flat.set_span(j, 0, i0, i1);
  }
  out.projected_area = static_cast<double>(flat.popcount()) * h * h;
  return out;
}

// ---------------------------------------------------------------------------
// Horizontal tubes and shadings.
// ---------------------------------------------------------------------------

inline int slab_count(double delta) { return static_cast<int>(std::ceil(1.0 / delta - 1e-9)); }

/// Strip i restricted to the slab [k delta, (k+1) delta).
struct HTube {
  std::size_t strip_index = 0;
  int t_index = 0;
  Vec3 center;  // core point at height (k + 1/2) delta
  double delta = 0;

  [[nodiscard]] bool contains(const RegulusStrip& s, const Vec3& p) const {
    return p.z() >= t_index * delta && p.z() < (t_index + 1) * delta && s.contains(p);
  }
};

inline std::vector<HTube> decompose_htubes(std::size_t strip_index, const StripFamily& fam) {
  std::vector<HTube> out;
  const RegulusStrip& s = fam.strips.at(strip_index);
  for (int k = 0; k < slab_count(fam.delta); ++k) {
    const double t = (k + 0.5) * fam.delta;
    out.push_back({strip_index, k, s.core.point_at(t), fam.delta});
  }
  return out;
}

/// Selected slab indices per strip, kept sorted and unique.
struct Shading {
  std::vector<std::vector<int>> selected;

  [[nodiscard]] double density(std::size_t i, double delta) const {
    return static_cast<double>(selected[i].size()) * delta;
  }

  [[nodiscard]] double min_density(double delta) const {
    if (selected.empty()) return 0.0;
    double m = 1e300;
    for (std::size_t i = 0; i < selected.size(); ++i) m = std::min(m, density(i, delta));
    return m;
  }

  [[nodiscard]] std::size_t mass() const {
    std::size_t m = 0;
    for (const auto& s : selected) m += s.size();
    return m;
  }
};

inline Shading full_shading(const StripFamily& fam) {
  Shading sh;
  std::vector<int> all(slab_count(fam.delta));
  std::iota(all.begin(), all.end(), 0);
  sh.selected.assign(fam.size(), all);
  return sh;
}

/// Each (strip, slab) kept with probability lambda; stream per strip.
inline Shading random_shading(const StripFamily& fam, double lambda, std::uint64_t seed) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("random_shading: lambda in (0,1]");
  Shading sh;
  sh.selected.resize(fam.size());
  for (std::size_t i = 0; i < fam.size(); ++i) {
    CounterRng rng(seed, i);
    for (int k = 0; k < slab_count(fam.delta); ++k)
      if (rng.bernoulli(lambda)) sh.selected[i].push_back(k);
  }
  return sh;
}

/// Slabs whose HTube center lies in the box [lo, hi].
inline Shading region_shading(const StripFamily& fam, const Vec3& lo, const Vec3& hi) {
  Shading sh;
  sh.selected.resize(fam.size());
  for (std::size_t i = 0; i < fam.size(); ++i)
    for (const auto& tube : decompose_htubes(i, fam))
      if ((tube.center.array() >= lo.array()).all() && (tube.center.array() <= hi.array()).all())
        sh.selected[i].push_back(tube.t_index);
  return sh;
}

inline nlohmann::json shading_to_json(const Shading& sh) {
  nlohmann::json sel = nlohmann::json::object();
  for (std::size_t i = 0; i < sh.selected.size(); ++i) sel[std::to_string(i)] = sh.selected[i];
  return {{"selected", sel}};
}

inline Shading shading_from_json(const nlohmann::json& j, std::size_t n_strips) {
  Shading sh;
  sh.selected.resize(n_strips);
  try {
    for (const auto& [key, val] : j.at("selected").items()) {
      const std::size_t i = std::stoul(key);
      if (i >= n_strips) throw InputError("shading: strip index " + key + " out of range");
      auto v = val.get<std::vector<int>>();
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      sh.selected[i] = std::move(v);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("shading: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw InputError("shading: strip keys must be integers");
  }
  return sh;
}

struct Regularized {
  StripFamily family;
  Shading shading;
  int mu = 0;
  std::vector<std::size_t> kept;  // indices into the input family
};

/// Saturation: adds slab k to strip S when S's HTube center at k lies within
/// 2 delta of the skeleton segment of some selected HTube. Then keeps the
/// dyadic class of selected counts [2^j, 2^(j+1)) carrying the most mass
/// (ties go to the larger class); mu = 2^j.
inline Regularized regularize(const StripFamily& fam, const Shading& shading) {
  if (shading.mass() == 0) throw std::invalid_argument("regularize: empty shading");
  const double delta = fam.delta;
  const int slabs = slab_count(delta);
  const double cell = std::max(fam.rho, 2.0 * delta);
  const int cells = static_cast<int>(std::ceil(1.0 / cell)) + 8;
  // Selected skeleton segments hashed by (slab, 2D cell of their bounding box).
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::size_t, int>>> index;
  auto cell_of = [&](double v) { return std::clamp(static_cast<int>(std::floor(v / cell)) + 4, 0, cells - 1); };
  auto key = [&](int k, int cx, int cy) { return (std::uint64_t(k) * cells + cx) * cells + cy; };
  for (std::size_t i = 0; i < fam.size(); ++i)
    for (int k : shading.selected[i]) {
      const RegulusStrip& s = fam.strips[i];
      const double t = (k + 0.5) * delta;
      const Vec3 a = s.regulus().point_at(t, -s.rho), b = s.regulus().point_at(t, s.rho);
      for (int cx = cell_of(std::min(a.x(), b.x()) - 2 * delta); cx <= cell_of(std::max(a.x(), b.x()) + 2 * delta); ++cx)
        for (int cy = cell_of(std::min(a.y(), b.y()) - 2 * delta); cy <= cell_of(std::max(a.y(), b.y()) + 2 * delta); ++cy)
          index[key(k, cx, cy)].emplace_back(i, k);
    }
  Shading sat;
  sat.selected.resize(fam.size());
  parallel_for(fam.size(), [&](std::size_t i) {
    const RegulusStrip& s = fam.strips[i];
    std::vector<char> on(slabs, 0);
    for (int k : shading.selected[i]) on[k] = 1;
    for (int k = 0; k < slabs; ++k) {
      if (on[k]) continue;
      const Vec3 c = s.core.point_at((k + 0.5) * delta);
      for (int kk = std::max(0, k - 2); kk <= std::min(slabs - 1, k + 2) && !on[k]; ++kk) {
        auto it = index.find(key(kk, cell_of(c.x()), cell_of(c.y())));
        if (it == index.end()) continue;
        for (const auto& [j, kj] : it->second) {
          const RegulusStrip& o = fam.strips[j];
          const double t = (kj + 0.5) * delta;
          const Vec3 a = o.regulus().point_at(t, -o.rho), b = o.regulus().point_at(t, o.rho);
          if (segment_distance_sq(c, a, b) <= 4 * delta * delta) {
            on[k] = 1;
            break;
          }
        }
      }
    }
    for (int k = 0; k < slabs; ++k)
      if (on[k]) sat.selected[i].push_back(k);
  });

  std::map<int, std::size_t> class_mass;
  auto class_of = [](std::size_t c) { return static_cast<int>(std::bit_width(c)) - 1; };
  for (const auto& sel : sat.selected)
    if (!sel.empty()) class_mass[class_of(sel.size())] += sel.size();
  int best = -1;
  std::size_t best_mass = 0;
  for (const auto& [cls, m] : class_mass)
    if (m >= best_mass) {
      best = cls;
      best_mass = m;
    }
  Regularized out;
  out.family = StripFamily(fam.delta, fam.rho);
  out.mu = 1 << best;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const auto& sel = sat.selected[i];
    if (sel.empty() || class_of(sel.size()) != best) continue;
    out.family.add(fam.strips[i].core);
    out.shading.selected.push_back(sel);
    out.kept.push_back(i);
  }
  return out;
}

/// Union of the selected HTubes, rasterized at h.
inline OccupancyGrid rasterize_shading(const StripFamily& fam, const Shading& sh, double h) {
  const int n = static_cast<int>(std::round(1.0 / h));
  const double hh = 1.0 / n;
  const int slabs = slab_count(fam.delta);
  std::vector<std::vector<char>> on(fam.size(), std::vector<char>(slabs, 0));
  for (std::size_t i = 0; i < fam.size(); ++i)
    for (int k : sh.selected[i]) on[i][k] = 1;
  return rasterize(fam, h, [&](std::size_t i, int k) {
    const int slab = std::min(slabs - 1, static_cast<int>((k + 0.5) * hh / fam.delta));
    return on[i][slab] != 0;
  });
}

struct KakeyaRatio {
  double ratio = 0;
  double lhs = 0;
  double rhs_basis = 0;
  double lambda = 0;
};

/// lhs = |union of selected HTubes|; rhs_basis = lambda^6 * sum of strip
/// volumes with lambda the minimum density.
inline KakeyaRatio kakeya_ratio(const StripFamily& fam, const Shading& sh, double h) {
  KakeyaRatio out;
  out.lhs = rasterize_shading(fam, sh, h).measure();
  out.lambda = sh.min_density(fam.delta);
  out.rhs_basis = std::pow(out.lambda, 6) * sum_strip_volumes(fam, h);
  out.ratio = out.rhs_basis > 0 ? out.lhs / out.rhs_basis : 0.0;
  return out;
}

/// |union S| / sum |S| on the grid of side h.
inline double disjointness_ratio(const StripFamily& fam, double h) {
  const double total = sum_strip_volumes(fam, h);
  if (total <= 0.0) return 0.0;
  return rasterize(fam, h).measure() / total;
}

}  // namespace regstrip
