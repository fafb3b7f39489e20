// Command-line front end. Exit codes: 0 success, 1 check failure, 2 input error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "regstrip/regstrip.hpp"

using namespace regstrip;

namespace {

bool quiet = false;

void note(const std::string& msg) {
  if (!quiet) std::cerr << msg << "\n";
}

std::string stem_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw InputError("cannot write " + path);
  return file;
}

double parse_rho(const std::string& text, double delta) {
  if (text == "auto") return std::sqrt(delta);
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw InputError("--rho must be a number or auto");
  }
}

struct GenArgs {
  std::string kind = "sl2", rho = "auto", box, out;
  double delta = 1.0 / 64, r = 0;
  int n = 0;
  std::uint64_t seed = 1;
};

int cmd_gen(const GenArgs& a) {
  StripFamily fam;
  const double rho = parse_rho(a.rho, a.delta);
  if (a.kind == "sl2") {
    fam = gen_sl2_example(a.delta, a.box.empty() ? default_sl2_box() : parse_box(a.box), a.seed);
  } else if (a.kind == "random") {
    if (a.n < 1) throw InputError("gen --kind random needs --n");
    fam = gen_random_family(a.delta, rho, a.n, a.seed, 10000, 1.0, a.box.empty() ? default_random_box() : parse_box(a.box));
  } else if (a.kind == "clustered") {
    const double r = a.r > 0 ? a.r : std::sqrt(a.delta);
    const int n = a.n > 0 ? a.n : static_cast<int>(std::ceil(std::pow(r / a.delta, 3)));
    fam = gen_clustered_family(a.delta, rho, r, n, a.seed);
  } else {
    throw InputError("unknown kind " + a.kind);
  }
  if (a.out.empty() || a.out == "-")
    std::cout << family_to_json(fam).dump(1) << "\n";
  else
    write_family(fam, a.out);
  note("generated " + std::to_string(fam.size()) + " strips");
  return 0;
}

struct CheckBallArgs {
  std::string family, form = "count", report;
  double constant = 100, volume_constant = 800;
  long samples = 20000;
  std::uint64_t seed = 1;
};

int cmd_check_ball(const CheckBallArgs& a) {
  const StripFamily fam = read_family(a.family);
  std::vector<BallConditionReport> reps;
  if (a.form == "count" || a.form == "both") reps.push_back(ball_condition_count(fam, a.constant));
  if (a.form == "volume" || a.form == "both")
    reps.push_back(ball_condition_volume(fam, a.samples, a.seed, a.volume_constant));
  std::ofstream file;
  std::ostream& out = open_or_stdout(a.report, file);
  out << "r,form,observed,bound,ratio,pass\n";
  bool ok = true;
  for (const auto& rep : reps) {
    for (const auto& row : rep.rows)
      out << format_number(row.r) << "," << rep.form << "," << format_number(row.observed) << ","
          << format_number(row.bound) << "," << format_number(row.ratio()) << "," << (row.pass ? 1 : 0) << "\n";
    note(rep.form + ": " + (rep.overall_pass() ? "pass" : "FAIL") + " (worst ratio " +
         format_number(rep.worst_ratio()) + " at r = " + format_number(rep.worst_radius()) + ")");
    ok = ok && rep.overall_pass();
  }
  return ok ? 0 : 1;
}

struct MeasureArgs {
  std::string family, method = "grid", out;
  double res = 0;
  long samples = 200000;
  std::uint64_t seed = 1;
};

int cmd_measure(const MeasureArgs& a) {
  const StripFamily fam = read_family(a.family);
  const double h = a.res > 0 ? a.res : fam.delta / 2;
  std::ofstream file;
  std::ostream& out = open_or_stdout(a.out, file);
  out << kScalingCsvHeader << "\n";
  ScalingRow row{stem_of(a.family), fam.delta, fam.rho, fam.size(), std::nullopt, "", 0, 0};
  if (a.method == "grid" || a.method == "both") {
    row.method = "grid";
    row.value = rasterize(fam, h).measure();
    out << scaling_csv_line(row) << "\n";
  }
  if (a.method == "mc" || a.method == "both") {
    const Estimate e = mc_union_measure(fam, a.samples, a.seed);
    row.method = "mc";
    row.value = e.value;
    row.stderr_ = e.stderr_;
    out << scaling_csv_line(row) << "\n";
  }
  return 0;
}

struct SliceArgs {
  std::string family, report;
  int t_samples = 7;
  double res = 0;
};

int cmd_slice_verify(const SliceArgs& a) {
  const StripFamily fam = read_family(a.family);
  if (a.t_samples < 1) throw InputError("--t-samples must be >= 1");
  const double h = a.res > 0 ? a.res : fam.delta / 2;
  std::ofstream file;
  std::ostream& out = open_or_stdout(a.report, file);
  out << "t,slice_area,plank_volume,projected_area,ratio,pass\n";
  bool ok = true;
  for (int j = 1; j <= a.t_samples; ++j) {
    const double t = static_cast<double>(j) / (a.t_samples + 1);
    const double area = slice_measure(fam, t, h);
    const PlankUnion pu = plank_union_measure(fam, t, h);
    // Planks have long side 2, so half their union volume is an area.
    const double ratio = pu.volume3d > 0 ? area / (pu.volume3d / 2.0) : 0.0;
    const bool pass = ratio >= 1.0 / 16 && ratio <= 16.0;
    ok = ok && pass;
    out << format_number(t) << "," << format_number(area) << "," << format_number(pu.volume3d) << ","
        << format_number(pu.projected_area) << "," << format_number(ratio) << "," << (pass ? 1 : 0) << "\n";
  }
  return ok ? 0 : 1;
}

int cmd_duality_verify(std::uint64_t seed) {
  bool ok = true;
  std::printf("id,check,worst,tol,pass\n");
  for (const auto& c : exact_lemma_suite(seed)) {
    std::printf("%s,%s,%.6g,%.3g,%d\n", c.id.c_str(), c.name.c_str(), c.worst, c.tol, c.pass() ? 1 : 0);
    ok = ok && c.pass();
  }
  return ok ? 0 : 1;
}

struct ShadingArgs {
  std::string family, mode = "full", out, region;
  double lambda = 1.0;
  std::uint64_t seed = 1;
  bool regularize_flag = false;
};

int cmd_shading(const ShadingArgs& a) {
  const StripFamily fam = read_family(a.family);
  Shading sh;
  if (a.mode == "full") {
    sh = full_shading(fam);
  } else if (a.mode == "random") {
    sh = random_shading(fam, a.lambda, a.seed);
  } else if (a.mode == "region") {
    const ParamBox b = a.region.empty() ? ParamBox{{0, 0.5}, {0, 0.5}, {0, 0.5}} : parse_box(a.region);
    sh = region_shading(fam, {b.a.lo, b.b.lo, b.c.lo}, {b.a.hi, b.b.hi, b.c.hi});
  } else {
    throw InputError("unknown shading mode " + a.mode);
  }
  nlohmann::json j;
  if (a.regularize_flag) {
    const Regularized reg = regularize(fam, sh);
    Shading full;
    full.selected.resize(fam.size());
    for (std::size_t q = 0; q < reg.kept.size(); ++q) full.selected[reg.kept[q]] = reg.shading.selected[q];
    j = shading_to_json(full);
    j["mu"] = reg.mu;
    note("regularized: kept " + std::to_string(reg.kept.size()) + " strips, mu = " + std::to_string(reg.mu));
  } else {
    j = shading_to_json(sh);
  }
  std::ofstream file;
  open_or_stdout(a.out, file) << j.dump() << "\n";
  return 0;
}

int cmd_kakeya(const std::string& family, const std::string& shading, double res) {
  StripFamily fam = read_family(family);
  std::ifstream in(shading);
  if (!in) throw InputError("cannot open " + shading);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("shading: ") + e.what());
  }
  Shading sh = shading_from_json(j, fam.size());
  // Strips with nothing selected are not part of the shaded family.
  StripFamily kept(fam.delta, fam.rho);
  Shading ksh;
  for (std::size_t i = 0; i < fam.size(); ++i)
    if (!sh.selected[i].empty()) {
      kept.add(fam.strips[i].core);
      ksh.selected.push_back(sh.selected[i]);
    }
  if (kept.empty()) throw InputError("shading selects nothing");
  const double h = res > 0 ? res : fam.delta / 2;
  const KakeyaRatio k = kakeya_ratio(kept, ksh, h);
  std::cout << kScalingCsvHeader << "\n";
  std::cout << scaling_csv_line({stem_of(family), fam.delta, fam.rho, kept.size(), k.lambda, "grid", k.ratio, 0.0})
            << "\n";
  note("|union Y| = " + format_number(k.lhs) + ", lambda^6 sum|S| = " + format_number(k.rhs_basis));
  return 0;
}

struct NikodymArgs {
  double delta = 1.0 / 16, p = 6, res = 1.0 / 8, net_step = 0;
  std::string f = "const", out;
};

int cmd_nikodym(const NikodymArgs& a) {
  const int n = static_cast<int>(std::round(1.0 / a.res));
  if (n < 1) throw InputError("--res must be in (0, 1]");
  GridFunction f;
  if (a.f == "const") {
    f = constant_function(n);
  } else if (a.f == "tube") {
    f = tube_function(n, {{0.5, 0.5, 0.5}, {1.0, 0.0}}, {-0.5, 0.5});
  } else if (a.f == "ball") {
    f = ball_function(n, HPoint::of(Vec3::Constant((std::floor(n / 2.0) + 0.5) / n)), a.delta);
  } else if (a.f.rfind("family:", 0) == 0) {
    f = family_function(n, read_family(a.f.substr(7)));
  } else {
    throw InputError("unknown --f " + a.f);
  }
  const double step = a.net_step > 0 ? a.net_step : a.delta;
  const double ratio = lp_ratio(f, a.p, {a.delta, step});
  std::ofstream file;
  std::ostream& out = open_or_stdout(a.out, file);
  out << "delta,p,f_kind,lp_ratio,net_step\n";
  out << format_number(a.delta) << "," << format_number(a.p) << "," << a.f << "," << format_number(ratio) << ","
      << format_number(step) << "\n";
  return 0;
}

int cmd_scaling(const std::string& config, const std::string& out) {
  const ScalingConfig c = read_scaling_config(config);
  const ScalingResult res = run_scaling(c, [](const std::string& m) { note(m); });
  const std::string path = out.empty() ? c.experiment + ".csv" : out;
  write_scaling(res, path);
  if (res.fit)
    note("slope " + format_number(res.fit->slope) + " +- " + format_number(res.fit->stderr_));
  else
    note("fewer than 3 usable rows; no slope");
  for (const auto& f : res.failures) std::cerr << "invariant failed: " << f << "\n";
  return res.failures.empty() ? 0 : 1;
}

int cmd_regress(const std::string& dir, const std::string& report) {
  const RegressionReport rep = run_regression(dir);
  const std::string path = report.empty() ? "regression_report.json" : report;
  std::ofstream(path) << rep.to_json().dump(1) << "\n";
  if (auto f = rep.first_failure()) {
    std::cerr << "FAIL: " << *f << "\n";
    return 1;
  }
  note("all invariants pass (" + std::to_string(rep.files.size()) + " files)");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regulus strip families: generation, conditions, measures, scaling"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: hardware concurrency)")->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet", quiet, "Suppress progress messages");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a strip family");
  g->add_option("--kind", gen.kind)->check(CLI::IsMember({"sl2", "random", "clustered"}));
  g->add_option("--delta", gen.delta);
  g->add_option("--rho", gen.rho, "Number or auto (sqrt(delta))");
  g->add_option("--n", gen.n);
  g->add_option("--r", gen.r, "Cluster radius (default sqrt(delta))");
  g->add_option("--box", gen.box, "a0,a1,b0,b1,c0,c1");
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out);

  CheckBallArgs cb;
  auto* c = app.add_subcommand("check-ball", "Two-dimensional ball condition");
  c->add_option("--family", cb.family)->required();
  c->add_option("--form", cb.form)->check(CLI::IsMember({"count", "volume", "both"}));
  c->add_option("--constant", cb.constant, "Counting-form constant");
  c->add_option("--volume-constant", cb.volume_constant, "Volume-form constant");
  c->add_option("--samples", cb.samples);
  c->add_option("--seed", cb.seed);
  c->add_option("--report", cb.report);

  MeasureArgs ms;
  auto* m = app.add_subcommand("measure", "Union measure");
  m->add_option("--family", ms.family)->required();
  m->add_option("--method", ms.method)->check(CLI::IsMember({"grid", "mc", "both"}));
  m->add_option("--res", ms.res, "Grid side (default delta/2)");
  m->add_option("--samples", ms.samples);
  m->add_option("--seed", ms.seed);
  m->add_option("--out", ms.out);

  SliceArgs sl;
  auto* s = app.add_subcommand("slice-verify", "Slices of the union against the plank union");
  s->add_option("--family", sl.family)->required();
  s->add_option("--t-samples", sl.t_samples);
  s->add_option("--res", sl.res);
  s->add_option("--report", sl.report);

  std::uint64_t dv_seed = 1;
  auto* d = app.add_subcommand("duality-verify", "Residuals of the closed-form identities");
  d->add_option("--seed", dv_seed);

  ShadingArgs sh;
  auto* shc = app.add_subcommand("shading", "Build (and optionally regularize) a shading");
  shc->add_option("--family", sh.family)->required();
  shc->add_option("--mode", sh.mode)->check(CLI::IsMember({"full", "random", "region"}));
  shc->add_option("--lambda", sh.lambda);
  shc->add_option("--seed", sh.seed);
  shc->add_option("--region", sh.region, "x0,x1,y0,y1,z0,z1 for --mode region");
  shc->add_flag("--regularize", sh.regularize_flag);
  shc->add_option("--out", sh.out);

  std::string k_family, k_shading;
  double k_res = 0;
  auto* k = app.add_subcommand("kakeya", "Kakeya ratio of a shaded family");
  k->add_option("--family", k_family)->required();
  k->add_option("--shading", k_shading)->required();
  k->add_option("--res", k_res);

  NikodymArgs nk;
  auto* n = app.add_subcommand("nikodym", "Lp ratio of the Nikodym maximal function");
  n->add_option("--delta", nk.delta);
  n->add_option("--p", nk.p);
  n->add_option("--f", nk.f, "const|tube|ball|family:FILE");
  n->add_option("--res", nk.res, "Grid side of f");
  n->add_option("--net-step", nk.net_step, "Offset net step (default delta)");
  n->add_option("--out", nk.out);

  std::string sc_config, sc_out;
  auto* sc = app.add_subcommand("scaling", "Scaling run from a JSON config");
  sc->add_option("--config", sc_config)->required();
  sc->add_option("--out", sc_out, "CSV path (default <experiment>.csv)");

  std::string rg_dir, rg_report;
  auto* rg = app.add_subcommand("regress", "Invariant suite over a corpus directory");
  rg->add_option("--corpus", rg_dir)->required();
  rg->add_option("--report", rg_report, "JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  set_threads(threads);

  try {
    if (*g) return cmd_gen(gen);
    if (*c) return cmd_check_ball(cb);
    if (*m) return cmd_measure(ms);
    if (*s) return cmd_slice_verify(sl);
    if (*d) return cmd_duality_verify(dv_seed);
    if (*shc) return cmd_shading(sh);
    if (*k) return cmd_kakeya(k_family, k_shading, k_res);
    if (*n) return cmd_nikodym(nk);
    if (*sc) return cmd_scaling(sc_config, sc_out);
    if (*rg) return cmd_regress(rg_dir, rg_report);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const BadScale& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
