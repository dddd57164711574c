#pragma once

#include <cstdint>
#include <istream>
#include <json.hpp>
#include <string>
#include <vector>

#include "kamscar/nonres.hpp"
#include "kamscar/series.hpp"
#include "kamscar/time_polynomial.hpp"

namespace kamscar::cli {

// coeff * cos(<mode, theta>)
struct CosineTerm {
  IntVec mode;
  double coeff = 0.0;
};

// f(theta) = mean + sum of cosine terms.
struct AmplitudeSpec {
  double mean = 1.0;
  std::vector<CosineTerm> cosines;
};

struct DeltaSpec {
  std::string kind = "power";
  double tau = 4.5;
  double a = 1.0;
  double b = 0.5;
  double kappa = 0.1;
  double sigma = 2.0;
  ApproximationFunction make(int dim) const;
};

struct ExperimentConfig {
  int dim = 1;
  // pendulum1d | example5 | custom
  std::string model = "pendulum1d";
  std::string series_file;
  double eps = 1.0;
  std::vector<AmplitudeSpec> amplitudes;
  // power_sum | radial
  std::string profile = "power_sum";

  RealVec base_point = {1.0};
  double radius = 0.3;
  int k_angle = 8;
  int k_action = 4;
  int r_max = 3;
  int t_order = 8;

  double t = 0.002;
  double t0 = 0.05;
  std::vector<double> h = {1.0 / 40, 1.0 / 80, 1.0 / 160};
  DeltaSpec delta;

  double band_lo = 0.4;
  double band_hi = 0.6;
  ActionBox box{{0.02}, {1.98}};
  ActionBox torus_box{{0.95}, {1.05}};
  int margin_layers = -1;
  int max_dense = 6000;
  int grid_n = 21;
  int k_test = 20;
  int weyl_angle_n = 32;
  int weyl_action_n = 2000;

  // <= 0 selects 2 + 2d.
  double gamma = 0.0;
  double lambda = 4.0;
  double L = 1.0;
  // Torus-mass radius in units of h.
  double mass_radius = 3.0;
  IntVec maslov = {0};
  double C1 = 1.0;
  // <= 0 calibrates at the first h.
  double C2 = 0.0;
  int bad_t_samples = 20;

  std::uint64_t seed = 0;
  std::string output = "out";

  double window_exponent() const { return gamma > 0.0 ? gamma : 2.0 + 2.0 * dim; }
};

// Built-in defaults: the pendulum for d = 1, the plane example otherwise.
ExperimentConfig default_config(int dim);

// Fields present in `j` override default_config(j["dim"]).
ExperimentConfig from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

// Flat "key = value" lines; dotted keys nest, comma lists become arrays and
// any value that parses as JSON is taken as JSON.
nlohmann::json parse_ini(std::istream& in);

// JSON when the first non-blank character is '{', INI otherwise.
ExperimentConfig load_config(const std::string& path);

// Throws ConfigError.
void validate(const ExperimentConfig& c);

// Model Hamiltonian on the normal-form layout.
TimePolynomial build_model(const ExperimentConfig& c);

// The same Hamiltonian with an action box covering c.box, for the matrix.
TimePolynomial spectral_model(const ExperimentConfig& c, const TimePolynomial& H);

}  // namespace kamscar::cli
