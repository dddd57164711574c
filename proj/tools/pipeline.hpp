#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "kamscar/errors.hpp"
#include "kamscar/normal_form.hpp"
#include "kamscar/quantize.hpp"
#include "kamscar/quasimode.hpp"
#include "kamscar/scar.hpp"

namespace kamscar::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes of the command-line tool.
enum ExitCode { kOk = 0, kConfig = 2, kNumeric = 3, kInvariant = 4 };

int exit_code_for(const Error& e);
std::string remediation(const Error& e);

struct Context {
  ExperimentConfig cfg;
  ApproximationFunction delta;
  TimePolynomial H;
  TimePolynomial H_spectral;
  std::vector<std::string> warnings;
};

// Validates and builds both model copies.
Context make_context(const ExperimentConfig& cfg);

struct NonresStage {
  std::vector<RealVec> grid;
  std::vector<FrequencySample> samples;
  // Cell centres that passed: the sampled torus set.
  std::vector<RealVec> tori;
  double cell_volume = 0.0;
  // (2 pi)^d cell_volume #tori
  double phase_measure = 0.0;
};

NonresStage run_nonres(const Context& ctx);
void write_nonres_csv(std::ostream& out, const NonresStage& s);

NormalFormResult run_bnf(const Context& ctx);
void write_bnf_jsonl(std::ostream& out, const NormalFormResult& nf);
void write_orders_csv(std::ostream& out, const NormalFormResult& nf);

struct SpectrumStage {
  double h = 0.0;
  SpectralProblem sp;
  EigenBand band;
};

SpectrumStage run_spectrum(const Context& ctx, double h);

struct QuasimodeStage {
  QuasimodeSet Q;
  // Index-set members outside the basis or whose window leaves the band.
  std::size_t dropped = 0;
  // Lattice actions resonant within the truncation.
  std::size_t resonant = 0;
};

QuasimodeStage run_quasimodes(const Context& ctx, const SpectrumStage& s, const NonresStage& nonres);
void write_quasimodes_jsonl(std::ostream& out, const SpectralProblem& sp, const QuasimodeSet& Q);

struct HSummary {
  double h = 0.0;
  std::size_t basis = 0;
  std::size_t eigenvalues = 0;
  double weyl_predicted = 0.0;
  std::size_t indices = 0;
  std::size_t dropped = 0;
  std::size_t resonant = 0;
  double gram_error = 0.0;
  double max_residual = 0.0;
  SeparationReport separation;
  double C2 = 0.0;
  double bad_t = 0.0;
  std::optional<WindowStatistics> windows;
  double overlap_bound = 0.0;
  double min_good_overlap = 1.0;
  double random_pass_fraction = 0.0;
};

struct PipelineResult {
  std::vector<HSummary> runs;
  std::vector<std::string> findings;
  // separation, overlap, mass, monotone, good_fraction, windows_overlap
  std::map<std::string, std::size_t> finding_counts;
  std::vector<std::string> warnings;
  std::vector<std::string> artifacts;
  // Log-log slopes over the h sweep.
  std::map<std::string, double> slopes;
  bool complete = false;
  int exit_code = kOk;
};

// nonres -> normal_form -> quantize -> quasimode -> scar for every h,
// writing artifacts and manifest.json into out_dir.
PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::string& out_dir);

// Writes manifest.json listing `files` (relative to dir) with SHA-256 hashes.
void write_manifest(const std::string& dir, const ExperimentConfig& cfg, const std::vector<std::string>& files,
                    bool complete, const std::vector<std::string>& findings,
                    const std::vector<std::string>& warnings, const std::string& error = "",
                    const std::map<std::string, double>& slopes = {});

std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& data);

// Shortest round-trip decimal form, locale independent.
std::string fmt(double v);

}  // namespace kamscar::cli
