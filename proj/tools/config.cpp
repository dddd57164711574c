#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kamscar/errors.hpp"
#include "kamscar/models.hpp"

namespace kamscar::cli {

using nlohmann::json;

namespace {

const double kGolden = 0.5 * (1.0 + std::sqrt(5.0));

SeriesLayout layout_of(const ExperimentConfig& c) {
  SeriesLayout l;
  l.dim = c.dim;
  l.base_point = c.base_point;
  l.k_angle = c.k_angle;
  l.k_action = c.k_action;
  l.radius.assign(c.dim, c.radius);
  return l;
}

json box_json(const ActionBox& b) { return {{"lo", b.lo}, {"hi", b.hi}}; }

ActionBox box_from(const json& j) { return ActionBox{j.at("lo").get<RealVec>(), j.at("hi").get<RealVec>()}; }

template <class T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

json ini_value(const std::string& raw) {
  const std::string v = trim(raw);
  try {
    return json::parse(v);
  } catch (const json::parse_error&) {
  }
  if (v.find(',') != std::string::npos) {
    json arr = json::array();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) arr.push_back(ini_value(item));
    return arr;
  }
  return v;
}

}  // namespace

ApproximationFunction DeltaSpec::make(int dim) const {
  if (kind == "power") return ApproximationFunction::power(tau, kappa, sigma, dim);
  if (kind == "exp-power" || kind == "exp_power") return ApproximationFunction::exp_power(a, b, kappa, sigma);
  throw ConfigError("delta.kind must be power or exp-power, got '" + kind + "'");
}

ExperimentConfig default_config(int dim) {
  ExperimentConfig c;
  c.dim = dim;
  if (dim == 1) return c;
  c.model = "example5";
  c.base_point.assign(dim, 1.0);
  c.base_point[1] = kGolden;
  for (int j = 2; j < dim; ++j) c.base_point[j] = std::sqrt(static_cast<double>(j + 1));
  for (int i = 1; i < dim; ++i) {
    AmplitudeSpec f;
    IntVec e1(dim, 0), e12(dim, 0);
    e1[0] = 1;
    e12[0] = 1;
    e12[1] = -1;
    f.cosines = {{e1, 0.5}, {e12, 0.5}};
    c.amplitudes.push_back(f);
  }
  c.radius = 0.1;
  c.r_max = 1;
  c.t = 2e-5;
  c.t0 = 2e-3;
  c.h = {1.0 / 40};
  c.band_lo = 1.78;
  c.band_hi = 1.84;
  c.box = ActionBox{RealVec(dim, -2.2), RealVec(dim, 2.2)};
  c.torus_box = ActionBox{c.base_point, c.base_point};
  for (int j = 0; j < dim; ++j) {
    c.torus_box.lo[j] -= 0.01;
    c.torus_box.hi[j] += 0.01;
  }
  c.margin_layers = 2;
  c.grid_n = 5;
  c.weyl_angle_n = 8;
  c.weyl_action_n = 300;
  c.maslov.assign(dim, 0);
  return c;
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c = default_config(j.value("dim", 1));
  take(j, "model", c.model);
  take(j, "series_file", c.series_file);
  take(j, "eps", c.eps);
  if (j.contains("amplitudes")) {
    c.amplitudes.clear();
    for (const auto& a : j.at("amplitudes")) {
      AmplitudeSpec f;
      f.mean = a.value("mean", 1.0);
      if (a.contains("cos"))
        for (const auto& t : a.at("cos")) f.cosines.push_back({t.at("mode").get<IntVec>(), t.at("coeff").get<double>()});
      c.amplitudes.push_back(f);
    }
  }
  take(j, "profile", c.profile);
  take(j, "base_point", c.base_point);
  take(j, "radius", c.radius);
  take(j, "k_angle", c.k_angle);
  take(j, "k_action", c.k_action);
  take(j, "r_max", c.r_max);
  take(j, "t_order", c.t_order);
  take(j, "t", c.t);
  take(j, "t0", c.t0);
  if (j.contains("h")) c.h = j.at("h").is_array() ? j.at("h").get<std::vector<double>>() : std::vector<double>{j.at("h").get<double>()};
  if (j.contains("delta")) {
    const json& d = j.at("delta");
    take(d, "kind", c.delta.kind);
    take(d, "tau", c.delta.tau);
    take(d, "a", c.delta.a);
    take(d, "b", c.delta.b);
    take(d, "kappa", c.delta.kappa);
    take(d, "sigma", c.delta.sigma);
  }
  if (j.contains("band")) {
    const auto band = j.at("band").get<std::vector<double>>();
    if (band.size() != 2) throw ConfigError("band must be [a, b]");
    c.band_lo = band[0];
    c.band_hi = band[1];
  }
  if (j.contains("box")) c.box = box_from(j.at("box"));
  if (j.contains("torus_box")) c.torus_box = box_from(j.at("torus_box"));
  take(j, "margin_layers", c.margin_layers);
  take(j, "max_dense", c.max_dense);
  take(j, "grid_n", c.grid_n);
  take(j, "k_test", c.k_test);
  take(j, "weyl_angle_n", c.weyl_angle_n);
  take(j, "weyl_action_n", c.weyl_action_n);
  take(j, "gamma", c.gamma);
  take(j, "lambda", c.lambda);
  take(j, "L", c.L);
  take(j, "mass_radius", c.mass_radius);
  take(j, "maslov", c.maslov);
  take(j, "C1", c.C1);
  take(j, "C2", c.C2);
  take(j, "bad_t_samples", c.bad_t_samples);
  take(j, "seed", c.seed);
  take(j, "output", c.output);
  return c;
}

json to_json(const ExperimentConfig& c) {
  json amps = json::array();
  for (const auto& f : c.amplitudes) {
    json cos = json::array();
    for (const auto& t : f.cosines) cos.push_back({{"mode", t.mode}, {"coeff", t.coeff}});
    amps.push_back({{"mean", f.mean}, {"cos", cos}});
  }
  return {{"dim", c.dim},
          {"model", c.model},
          {"series_file", c.series_file},
          {"eps", c.eps},
          {"amplitudes", amps},
          {"profile", c.profile},
          {"base_point", c.base_point},
          {"radius", c.radius},
          {"k_angle", c.k_angle},
          {"k_action", c.k_action},
          {"r_max", c.r_max},
          {"t_order", c.t_order},
          {"t", c.t},
          {"t0", c.t0},
          {"h", c.h},
          {"delta",
           {{"kind", c.delta.kind},
            {"tau", c.delta.tau},
            {"a", c.delta.a},
            {"b", c.delta.b},
            {"kappa", c.delta.kappa},
            {"sigma", c.delta.sigma}}},
          {"band", {c.band_lo, c.band_hi}},
          {"box", box_json(c.box)},
          {"torus_box", box_json(c.torus_box)},
          {"margin_layers", c.margin_layers},
          {"max_dense", c.max_dense},
          {"grid_n", c.grid_n},
          {"k_test", c.k_test},
          {"weyl_angle_n", c.weyl_angle_n},
          {"weyl_action_n", c.weyl_action_n},
          {"gamma", c.window_exponent()},
          {"lambda", c.lambda},
          {"L", c.L},
          {"mass_radius", c.mass_radius},
          {"maslov", c.maslov},
          {"C1", c.C1},
          {"C2", c.C2},
          {"bad_t_samples", c.bad_t_samples},
          {"seed", c.seed},
          {"output", c.output}};
}

json parse_ini(std::istream& in) {
  json root = json::object();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';' || s[0] == '[') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    json* node = &root;
    std::stringstream ks(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ks, part, '.')) parts.push_back(trim(part));
    for (std::size_t k = 0; k + 1 < parts.size(); ++k) node = &(*node)[parts[k]];
    (*node)[parts.back()] = ini_value(s.substr(eq + 1));
  }
  return root;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  try {
    if (first != std::string::npos && text[first] == '{') return from_json(json::parse(text));
    std::istringstream is(text);
    return from_json(parse_ini(is));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void validate(const ExperimentConfig& c) {
  std::ostringstream os;
  const int d = c.dim;
  if (d < 1) throw ConfigError("dim must be at least 1");
  if (c.model != "pendulum1d" && c.model != "example5" && c.model != "custom")
    throw ConfigError("model must be pendulum1d, example5 or custom");
  if (c.model == "pendulum1d" && d != 1) throw ConfigError("pendulum1d needs dim = 1");
  if (c.model == "custom" && c.series_file.empty()) throw ConfigError("custom model needs series_file");
  if (c.model == "example5" && static_cast<int>(c.amplitudes.size()) != d - 1)
    throw ConfigError("example5 needs dim - 1 amplitude functions");
  if (c.profile != "power_sum" && c.profile != "radial") throw ConfigError("profile must be power_sum or radial");
  const double limit = 1.75 + 2.0 * d;
  if (!(c.window_exponent() > limit)) {
    os << "gamma = " << c.window_exponent() << " must exceed 7/4 + 2d = " << limit;
    throw ConfigError(os.str());
  }
  if (c.h.empty()) throw ConfigError("h list is empty");
  for (std::size_t k = 0; k < c.h.size(); ++k) {
    if (!(c.h[k] > 0.0)) throw ConfigError("every h must be positive");
    if (k > 0 && !(c.h[k] < c.h[k - 1])) throw ConfigError("h list must be strictly decreasing");
  }
  if (!(c.band_hi > c.band_lo)) throw ConfigError("band [a, b] must be nonempty (a < b)");
  if (!(c.lambda > 1.0)) throw ConfigError("lambda must exceed 1");
  if (!(c.L > 0.0)) throw ConfigError("L must be positive");
  if (!(c.mass_radius > 0.0)) throw ConfigError("mass_radius must be positive");
  if (!(c.t >= 0.0) || !(c.t0 > 0.0) || c.t > c.t0) throw ConfigError("need 0 <= t <= t0 and t0 > 0");
  if (static_cast<int>(c.base_point.size()) != d) throw ConfigError("base_point must have dim entries");
  if (static_cast<int>(c.maslov.size()) != d) throw ConfigError("maslov must have dim entries");
  for (const auto* b : {&c.box, &c.torus_box}) {
    if (b->dim() != d || static_cast<int>(b->hi.size()) != d) throw ConfigError("boxes must have dim entries");
    for (int j = 0; j < d; ++j)
      if (!(b->hi[j] > b->lo[j])) throw ConfigError("box bounds must satisfy lo < hi");
  }
  for (int j = 0; j < d; ++j)
    if (std::abs(c.torus_box.lo[j] - c.base_point[j]) > c.radius ||
        std::abs(c.torus_box.hi[j] - c.base_point[j]) > c.radius)
      throw ConfigError("torus_box must lie inside base_point +- radius");
  if (c.grid_n < 1 || c.k_test < 1 || c.r_max < 0 || c.t_order < 1) throw ConfigError("grid_n, k_test, t_order >= 1");
  try {
    c.delta.make(d);
    build_model(c);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

TimePolynomial build_model(const ExperimentConfig& c) {
  if (c.model == "custom") {
    std::ifstream in(c.series_file);
    if (!in) throw ConfigError("cannot open series file " + c.series_file);
    return read_time_polynomial(in);
  }
  const SeriesLayout l = layout_of(c);
  if (c.model == "pendulum1d") return model_pendulum1d(c.eps, l, c.t0);
  std::vector<Series> amps;
  for (const auto& spec : c.amplitudes) {
    Series f = constant(l, spec.mean);
    const IntVec zero(c.dim, 0);
    for (const auto& term : spec.cosines) {
      if (static_cast<int>(term.mode.size()) != c.dim) throw ConfigError("amplitude mode must have dim entries");
      IntVec neg = term.mode;
      for (auto& v : neg) v = -v;
      f.set(term.mode, zero, f.coeff(term.mode, zero) + 0.5 * term.coeff);
      f.set(neg, zero, f.coeff(neg, zero) + 0.5 * term.coeff);
    }
    amps.push_back(f);
  }
  return model_example5(amps, l, c.t0, c.profile == "radial" ? ActionProfile::Radial : ActionProfile::PowerSum);
}

TimePolynomial spectral_model(const ExperimentConfig& c, const TimePolynomial& H) {
  // Only exact polynomials in I may be re-boxed.
  if (c.model == "custom" || c.profile == "radial") return H;
  double r = c.radius;
  for (int j = 0; j < c.dim; ++j)
    r = std::max({r, std::abs(c.box.lo[j] - c.base_point[j]), std::abs(c.box.hi[j] - c.base_point[j])});
  return with_radius(H, RealVec(c.dim, 1.001 * r));
}

}  // namespace kamscar::cli
