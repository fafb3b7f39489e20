#pragma once

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "regstrip/geom_core.hpp"

namespace regstrip {

/// Strips sharing (delta, rho). The parameter set E(S) is the list of core
/// parameters; dual centers are their breve images.
struct StripFamily {
  double delta = 0;
  double rho = 0;
  std::vector<RegulusStrip> strips;

  StripFamily() = default;
  StripFamily(double delta_, double rho_) : delta(delta_), rho(rho_) { validate_scales(delta, rho); }

  void add(const LLine& core) { strips.emplace_back(core, delta, rho); }

  [[nodiscard]] std::size_t size() const { return strips.size(); }
  [[nodiscard]] bool empty() const { return strips.empty(); }

  [[nodiscard]] std::vector<Vec3> parameter_points() const {
    std::vector<Vec3> out;
    out.reserve(strips.size());
    for (const auto& s : strips) out.push_back(s.core.params());
    return out;
  }

  [[nodiscard]] std::vector<Vec4> dual_centers() const {
    std::vector<Vec4> out;
    out.reserve(strips.size());
    for (const auto& s : strips) out.push_back(s.core.breve());
    return out;
  }
};

/// Isometric image of the dual center (a, b, c, a) in R^3: (sqrt2 a, b, c).
inline Vec3 dual_embed(const LLine& core) { return {std::sqrt(2.0) * core.a, core.b, core.c}; }

/// Axis-aligned box in (a, b, c) parameter space.
struct ParamBox {
  Interval a{0.5, 1.5};
  Interval b{-0.5, 0.5};
  Interval c{-0.5, 0.5};

  [[nodiscard]] double volume() const { return a.length() * b.length() * c.length(); }
  [[nodiscard]] bool contains(const Vec3& x) const {
    return a.contains(x.x()) && b.contains(x.y()) && c.contains(x.z());
  }
};

/// Parses "a0,a1,b0,b1,c0,c1".
inline ParamBox parse_box(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw InputError("trailing text");
    } catch (const std::exception&) {
      throw InputError("box: cannot parse '" + tok + "'");
    }
  }
  if (v.size() != 6) throw InputError("box: expected 6 comma-separated numbers");
  ParamBox box{{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}};
  if (box.a.empty() || box.b.empty() || box.c.empty()) throw InputError("box: empty interval");
  return box;
}

inline nlohmann::json family_to_json(const StripFamily& fam) {
  nlohmann::json j;
  j["delta"] = fam.delta;
  j["rho"] = fam.rho;
  auto& arr = j["strips"] = nlohmann::json::array();
  for (const auto& s : fam.strips) arr.push_back({{"a", s.core.a}, {"b", s.core.b}, {"c", s.core.c}});
  return j;
}

inline StripFamily family_from_json(const nlohmann::json& j) {
  try {
    const double delta = j.at("delta").get<double>();
    const double rho = j.at("rho").get<double>();
    if (!(delta > 0.0 && delta < 1.0)) throw InputError("family: delta must lie in (0,1)");
    if (!(rho >= delta && rho <= std::sqrt(delta) * (1.0 + 1e-9)))
      throw InputError("family: rho must lie in [delta, sqrt(delta)]");
    StripFamily fam(delta, rho);
    for (const auto& s : j.at("strips"))
      fam.add({s.at("a").get<double>(), s.at("b").get<double>(), s.at("c").get<double>()});
    return fam;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("family: ") + e.what());
  }
}

inline void write_family(const StripFamily& fam, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << family_to_json(fam).dump(1) << '\n';
}

inline StripFamily read_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return family_from_json(j);
}

}  // namespace regstrip
