#pragma once

// Scaling runs over delta, log-log exponent fits, and the corpus regression
// suite. The CLI in tools/ is a thin wrapper around these.

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "regstrip/family.hpp"
#include "regstrip/heisenberg.hpp"
#include "regstrip/measure.hpp"

namespace regstrip {

/// Thrown when a run finishes but one of its invariant checks fails (exit 1).
struct InvariantFailure : Error {
  using Error::Error;
};

struct FitResult {
  double slope = 0;
  double stderr_ = 0;
  int used = 0;
};

struct ScalingRow {
  std::string name;
  double delta = 0;
  double rho = 0;
  std::size_t n_strips = 0;
  std::optional<double> lambda;
  std::string method;
  double value = 0;
  double stderr_ = 0;
};

/// OLS slope of log2(value) against log2(delta) over rows with value > 0 and
/// stderr/value <= 0.1.
inline FitResult fit_exponent(const std::vector<ScalingRow>& rows) {
  std::vector<double> xs, ys;
  for (const auto& r : rows)
    if (r.value > 0.0 && r.delta > 0.0 && r.stderr_ <= 0.1 * r.value) {
      xs.push_back(std::log2(r.delta));
      ys.push_back(std::log2(r.value));
    }
  const int n = static_cast<int>(xs.size());
  if (n < 3) throw InsufficientData("fit_exponent: " + std::to_string(n) + " usable rows, need 3");
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientData("fit_exponent: all deltas equal");
  FitResult fit;
  fit.slope = sxy / sxx;
  fit.used = n;
  double ssr = 0;
  for (int i = 0; i < n; ++i) {
    const double e = ys[i] - (my + fit.slope * (xs[i] - mx));
    ssr += e * e;
  }
  fit.stderr_ = n > 2 ? std::sqrt(ssr / (n - 2) / sxx) : 0.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Scaling configuration.
// ---------------------------------------------------------------------------

struct ScalingConfig {
  std::string experiment;
  std::string kind;  // sl2 | random | clustered | single
  std::vector<double> deltas;
  std::optional<double> rho;  // nullopt: sqrt(delta)
  std::optional<ParamBox> box;
  std::optional<double> lambda;
  std::string method = "grid";
  double res_factor = 0.5;
  long samples = 200000;
  std::vector<std::uint64_t> seeds{1};
  std::optional<int> n;        // random / clustered; clustered defaults to (r/delta)^3
  std::optional<double> r;     // clustered; nullopt: sqrt(delta)
  double ball_constant = 100;  // sl2 runs must pass the counting check at this constant
  LLine single_core{0.4, 0.3, 0.2};
};

inline bool is_dyadic(double d) {
  if (!(d > 0.0)) return false;
  const double e = std::log2(d);
  return std::abs(e - std::round(e)) < 1e-12;
}

inline ScalingConfig scaling_config_from_json(const nlohmann::json& j) {
  ScalingConfig c;
  try {
    c.experiment = j.at("experiment").get<std::string>();
    c.kind = j.at("kind").get<std::string>();
    if (c.kind != "sl2" && c.kind != "random" && c.kind != "clustered" && c.kind != "single")
      throw InputError("config: unknown kind '" + c.kind + "'");
    c.deltas = j.at("deltas").get<std::vector<double>>();
    if (c.deltas.empty()) throw InputError("config: empty deltas");
    for (double d : c.deltas) {
      if (!is_dyadic(d)) throw InputError("config: delta " + std::to_string(d) + " is not dyadic");
      if (d < std::ldexp(1.0, -10) || d > 0.5) throw InputError("config: delta outside [2^-10, 1/2]");
    }
    if (j.contains("rho") && !j["rho"].is_null()) {
      if (j["rho"].is_string()) {
        if (j["rho"].get<std::string>() != "auto") throw InputError("config: rho must be \"auto\" or a number");
      } else {
        c.rho = j["rho"].get<double>();
      }
    }
    if (j.contains("box") && !j["box"].is_null()) {
      const auto v = j["box"].get<std::vector<double>>();
      if (v.size() != 6) throw InputError("config: box needs 6 numbers");
      c.box = ParamBox{{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}};
      if (c.box->volume() <= 0.0) throw InputError("config: empty box");
    }
    if (j.contains("lambda") && !j["lambda"].is_null()) {
      c.lambda = j["lambda"].get<double>();
      if (!(*c.lambda > 0.0 && *c.lambda <= 1.0)) throw InputError("config: lambda must lie in (0, 1]");
    }
    c.method = j.value("method", std::string("grid"));
    if (c.method != "grid" && c.method != "mc") throw InputError("config: method must be grid or mc");
    if (c.lambda && c.method != "grid") throw InputError("config: shaded runs need method grid");
    c.res_factor = j.value("res_factor", 0.5);
    if (!(c.res_factor > 0.0 && c.res_factor <= 0.5)) throw InputError("config: res_factor must lie in (0, 0.5]");
    c.samples = j.value("samples", 200000L);
    if (c.samples < 10000) throw InputError("config: samples must be >= 10000");
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (c.seeds.empty()) throw InputError("config: empty seeds");
    if (j.contains("n") && !j["n"].is_null() && !(j["n"].is_string() && j["n"] == "auto")) c.n = j["n"].get<int>();
    if (j.contains("r") && !j["r"].is_null() && !(j["r"].is_string() && j["r"] == "sqrt")) c.r = j["r"].get<double>();
    c.ball_constant = j.value("ball_constant", 100.0);
    if (j.contains("core")) {
      const auto v = j["core"].get<std::vector<double>>();
      if (v.size() != 3) throw InputError("config: core needs 3 numbers");
      c.single_core = {v[0], v[1], v[2]};
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (c.kind == "random" && !c.n) throw InputError("config: kind random needs n");
  return c;
}

inline ScalingConfig read_scaling_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("config " + path + ": " + e.what());
  }
  return scaling_config_from_json(j);
}

inline StripFamily generate_for(const ScalingConfig& c, double delta, std::uint64_t seed) {
  const double rho = c.rho ? *c.rho : std::sqrt(delta);
  if (c.kind == "sl2") return gen_sl2_example(delta, c.box ? *c.box : default_sl2_box(), seed);
  if (c.kind == "random")
    return gen_random_family(delta, rho, *c.n, seed, 10000, 1.0, c.box ? *c.box : default_random_box());
  if (c.kind == "clustered") {
    const double r = c.r ? *c.r : std::sqrt(delta);
    const int n = c.n ? *c.n : static_cast<int>(std::ceil(std::pow(r / delta, 3)));
    return gen_clustered_family(delta, rho, r, n, seed);
  }
  StripFamily fam(delta, rho);
  fam.add(c.single_core);
  return fam;
}

struct ScalingResult {
  std::vector<ScalingRow> rows;
  std::optional<FitResult> fit;
  std::vector<std::string> failures;
};

/// One row per delta, averaged over seeds. stderr combines the per-seed
/// estimator error with the spread across seeds.
inline ScalingResult run_scaling(const ScalingConfig& c, const std::function<void(const std::string&)>& log = {}) {
  ScalingResult res;
  for (double delta : c.deltas) {
    ScalingRow row;
    row.name = c.experiment;
    row.delta = delta;
    row.rho = c.rho ? *c.rho : std::sqrt(delta);
    row.lambda = c.lambda;
    row.method = c.method;
    std::vector<double> vals, errs;
    double strips = 0;
    for (std::uint64_t seed : c.seeds) {
      const StripFamily fam = generate_for(c, delta, seed);
      strips += static_cast<double>(fam.size());
      if (c.kind == "sl2") {
        const auto rep = ball_condition_count(fam, c.ball_constant);
        if (!rep.overall_pass())
          res.failures.push_back("conditions.ball_condition_count: sl2 family at delta " + std::to_string(delta) +
                                 " seed " + std::to_string(seed));
      }
      const double h = c.res_factor * delta;
      if (c.lambda) {
        vals.push_back(rasterize_shading(fam, random_shading(fam, *c.lambda, seed), h).measure());
        errs.push_back(0.0);
      } else if (c.method == "grid") {
        vals.push_back(rasterize(fam, h).measure());
        errs.push_back(0.0);
      } else {
        const Estimate e = mc_union_measure(fam, c.samples, seed);
        vals.push_back(e.value);
        errs.push_back(e.stderr_);
      }
      if (log) log("delta " + std::to_string(delta) + " seed " + std::to_string(seed) + ": " + std::to_string(vals.back()));
    }
    const double k = static_cast<double>(vals.size());
    row.n_strips = static_cast<std::size_t>(std::llround(strips / k));
    double mean = 0, e2 = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      mean += vals[i] / k;
      e2 += errs[i] * errs[i];
    }
    double var = 0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var = vals.size() > 1 ? var / (k - 1) : 0.0;
    row.value = mean;
    row.stderr_ = std::sqrt(var / k + e2 / (k * k));
    res.rows.push_back(row);
  }
  try {
    res.fit = fit_exponent(res.rows);
  } catch (const InsufficientData&) {
  }
  return res;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline const char* kScalingCsvHeader = "name,delta,rho,n_strips,lambda,method,value,stderr";

inline std::string scaling_csv_line(const ScalingRow& r) {
  return r.name + "," + format_number(r.delta) + "," + format_number(r.rho) + "," + std::to_string(r.n_strips) +
         "," + (r.lambda ? format_number(*r.lambda) : std::string()) + "," + r.method + "," +
         format_number(r.value) + "," + format_number(r.stderr_);
}

/// Writes the CSV and, next to it, <stem>.fit.json with the fitted slope.
inline void write_scaling(const ScalingResult& res, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw InputError("cannot write " + csv_path);
  out << kScalingCsvHeader << "\n";
  for (const auto& r : res.rows) out << scaling_csv_line(r) << "\n";
  nlohmann::json fit = {{"experiment", res.rows.empty() ? "" : res.rows[0].name}};
  if (res.fit) {
    fit["slope"] = res.fit->slope;
    fit["slope_stderr"] = res.fit->stderr_;
    fit["rows_used"] = res.fit->used;
  } else {
    fit["slope"] = nullptr;
  }
  std::filesystem::path p(csv_path);
  p.replace_extension(".fit.json");
  std::ofstream(p) << fit.dump(1) << "\n";
}

// ---------------------------------------------------------------------------
// Corpus regression.
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct FileReport {
  std::string file;
  std::string label;  // sl2 | random | clustered | other, from the file name prefix
  std::vector<CheckResult> checks;
};

struct RegressionReport {
  std::vector<FileReport> files;

  [[nodiscard]] std::optional<std::string> first_failure() const {
    for (const auto& f : files)
      for (const auto& c : f.checks)
        if (!c.pass) return c.name + " (" + f.file + ": " + c.detail + ")";
    return std::nullopt;
  }
  [[nodiscard]] bool pass() const { return !first_failure(); }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["pass"] = pass();
    if (auto f = first_failure()) j["first_failure"] = *f;
    for (const auto& f : files) {
      nlohmann::json jf = {{"file", f.file}, {"label", f.label}};
      for (const auto& c : f.checks) jf["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
      j["files"].push_back(jf);
    }
    return j;
  }
};

inline std::string corpus_label(const std::string& filename) {
  for (const char* k : {"sl2", "random", "clustered"})
    if (filename.rfind(k, 0) == 0) return k;
  return "other";
}

/// Runs the invariant checks on one family. Checks run in a fixed order and
/// stop at the first failure.
inline FileReport check_family(const std::string& name, const StripFamily& fam, const std::string& label) {
  FileReport rep{name, label, {}};
  auto add = [&](std::string check, bool ok, std::string detail) {
    rep.checks.push_back({std::move(check), ok, std::move(detail)});
    return ok;
  };
  const double delta = fam.delta;

  double worst = 0;
  for (const auto& s : fam.strips) {
    const LLine& l = s.core;
    if (std::abs(l.a) < 1e-3) continue;
    const LLine back = sl2_reparameterize(sl2_from_lline(l));
    worst = std::max({worst, std::abs(back.a - l.a), std::abs(back.b - l.b), std::abs(back.c - l.c)});
  }
  if (!add("geom_core.sl2_reparameterize", worst <= 1e-9, "max round-trip error " + format_number(worst))) return rep;

  worst = 0;
  for (const auto& s : fam.strips)
    for (double t : {0.125, 0.5, 0.875}) {
      const Vec3 p = s.core.point_at(t);
      const Ray3 ray = dual_ray(p);
      worst = std::max(worst, ray.distance(Vec3(s.core.a, s.core.b, s.core.c)));
    }
  if (!add("duality.dual_ray_incidence", worst <= 1e-9, "max distance " + format_number(worst))) return rep;

  if (label == "sl2" || label == "random") {
    const auto ball = ball_condition_count(fam, 100.0);
    if (!add("conditions.ball_condition_count", ball.overall_pass(),
             "worst ratio " + format_number(ball.worst_ratio()) + " at r = " + format_number(ball.worst_radius())))
      return rep;
  } else if (label == "clustered") {
    const auto ball = ball_condition_count(fam, 100.0);
    if (!add("conditions.clustered_violation", !ball.overall_pass(),
             "worst ratio " + format_number(ball.worst_ratio()) + " at r = " + format_number(ball.worst_radius())))
      return rep;
  }

  const double h = delta / 2.0;
  const double grid = rasterize(fam, h).measure();
  const Estimate mc = mc_union_measure(fam, 200000, 17);
  const double tol = std::max(3.0 * mc.stderr_, 0.05 * grid);
  if (!add("measure_engine.grid_vs_mc", std::abs(grid - mc.value) <= tol,
           "grid " + format_number(grid) + " mc " + format_number(mc.value) + " +- " + format_number(mc.stderr_)))
    return rep;

  const double volume = grid;
  double slices = 0.0;
  for (int k = 0; k < 64; ++k) slices += slice_measure(fam, (k + 0.5) / 64, h);
  slices /= 64;
  if (!add("measure_engine.fubini", volume > 0 ? std::abs(slices - volume) <= 0.1 * volume : slices == 0.0,
           "mean slice " + format_number(slices) + " volume " + format_number(volume)))
    return rep;

  double lo = 1e300, hi = 0;
  for (int j = 1; j <= 7; ++j) {
    const double t = j / 8.0;
    const PlankUnion planks = plank_union_measure(fam, t, h);
    const double area = slice_measure(fam, t, h);
    for (double norm : {planks.volume3d / 2.0, planks.projected_area}) {
      const double ratio = norm > 0 ? area / norm : 0.0;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  }
  if (!add("duality.slice_correspondence", lo >= 1.0 / 16 && hi <= 16.0,
           "ratio range [" + format_number(lo) + ", " + format_number(hi) + "]"))
    return rep;

  if (fam.size() > 0) {
    const Shading shading = random_shading(fam, 0.5, 23);
    const auto reg = regularize(fam, shading);
    std::size_t mx = 0, mn = SIZE_MAX;
    for (const auto& s : reg.shading.selected) {
      mx = std::max(mx, s.size());
      mn = std::min(mn, s.size());
    }
    const double retained = static_cast<double>(reg.shading.mass()) / static_cast<double>(shading.mass());
    if (!add("measure_engine.regularize", mn > 0 && mx <= 2 * mn && retained >= 1.0 / (2.0 * std::log2(1.0 / delta)),
             "selected counts in [" + std::to_string(mn) + ", " + std::to_string(mx) + "], retention " +
                 format_number(retained)))
      return rep;

    const auto c = strip_vs_htube(fam.strips[0].core, delta, 50, 5);
    add("heisenberg.strip_vs_htube", c.c_in <= 32 && c.c_out <= 32,
        "c_in " + format_number(c.c_in) + " c_out " + format_number(c.c_out));
  }
  return rep;
}

/// Every *.json family in `dir`, sorted by name. Throws InputError if the
/// directory is missing or holds no family files.
inline RegressionReport run_regression(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw InputError("corpus directory " + dir + " not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  if (files.empty()) throw InputError("corpus directory " + dir + " holds no .json families");
  std::sort(files.begin(), files.end());
  RegressionReport rep;
  for (const auto& p : files) {
    const std::string name = p.filename().string();
    StripFamily fam;
    try {
      fam = read_family(p.string());
    } catch (const Error& e) {
      rep.files.push_back({name, corpus_label(name), {{"geom_core.family_file", false, e.what()}}});
      continue;
    }
    rep.files.push_back(check_family(name, fam, corpus_label(name)));
  }
  return rep;
}

}  // namespace regstrip
