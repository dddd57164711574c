#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "config.hpp"
#include "kamscar/homological.hpp"
#include "pipeline.hpp"

namespace {

using namespace kamscar;
using namespace kamscar::cli;
namespace fs = std::filesystem;

struct Overrides {
  std::string delta_kind;
  double tau = NAN, a = NAN, b = NAN, kappa = NAN, sigma = NAN;
  int k_test = 0, grid = 0, r_max = -1, t_order = 0;
  std::string model;
  std::vector<double> h;
  double t = NAN, L = NAN;
  std::vector<double> band;
};

void apply(ExperimentConfig& c, const Overrides& o) {
  if (!o.delta_kind.empty()) c.delta.kind = o.delta_kind;
  if (!std::isnan(o.tau)) c.delta.tau = o.tau;
  if (!std::isnan(o.a)) c.delta.a = o.a;
  if (!std::isnan(o.b)) c.delta.b = o.b;
  if (!std::isnan(o.kappa)) c.delta.kappa = o.kappa;
  if (!std::isnan(o.sigma)) c.delta.sigma = o.sigma;
  if (o.k_test > 0) c.k_test = o.k_test;
  if (o.grid > 0) c.grid_n = o.grid;
  if (o.r_max >= 0) c.r_max = o.r_max;
  if (o.t_order > 0) c.t_order = o.t_order;
  if (!o.model.empty()) c.model = o.model;
  if (!o.h.empty()) c.h = o.h;
  if (!std::isnan(o.t)) {
    c.t = o.t;
    c.t0 = std::max(c.t0, o.t);
  }
  if (!std::isnan(o.L)) c.L = o.L;
  if (!o.band.empty()) {
    if (o.band.size() != 2) throw ConfigError("--band takes a,b");
    c.band_lo = o.band[0];
    c.band_hi = o.band[1];
  }
}

std::ofstream artifact(const std::string& dir, const std::string& name, std::vector<std::string>& files) {
  std::ofstream out(fs::path(dir) / name, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + (fs::path(dir) / name).string());
  files.push_back(name);
  return out;
}

std::string tag(double h) {
  std::ostringstream os;
  os << "h" << std::setprecision(6) << h;
  return os.str();
}

int report(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw ConfigError("no manifest.json in " + dir);
  const auto m = nlohmann::json::parse(in);
  std::cout << "status: " << m.at("status").get<std::string>() << "\n";
  std::cout << "config_hash: " << m.at("config_hash").get<std::string>() << "\n";
  bool ok = true;
  for (const auto& a : m.at("artifacts")) {
    const std::string f = a.at("file");
    const bool same = fs::exists(fs::path(dir) / f) && sha256_file((fs::path(dir) / f).string()) == a.at("sha256");
    std::cout << (same ? "  ok       " : "  MISMATCH ") << f << "\n";
    ok = ok && same;
  }
  for (const auto& w : m.at("warnings")) std::cout << "warning: " << w.get<std::string>() << "\n";
  for (const auto& f : m.at("findings")) std::cout << "finding: " << f.get<std::string>() << "\n";
  if (m.contains("slopes"))
    for (const auto& [k, v] : m.at("slopes").items()) std::cout << "slope " << k << ": " << v.dump() << "\n";
  if (m.contains("error")) std::cout << "error: " << m.at("error").get<std::string>() << "\n";
  std::ifstream sweep(fs::path(dir) / "sweep.csv");
  if (sweep) std::cout << sweep.rdbuf();
  return ok ? kOk : kInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for quasimodes and scars of near-integrable Hamiltonians on the torus"};
  app.set_help_flag("--help", "print help and exit");
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int dim = 1;
  app.add_option("--config", config_path, "JSON or key = value experiment config");
  app.add_option("--out", out_dir, "output directory");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& s) { seed = s, seed_given = true; }, "seed for negative-control vectors");
  app.add_option("--dim", dim, "dimension of the built-in default config");
  Overrides ov;

  auto* nonres = app.add_subcommand("nonres", "non-resonance tools");
  auto* scan = nonres->add_subcommand("scan", "scan the torus box for non-resonant frequencies");
  scan->add_option("--delta", ov.delta_kind, "power or exp-power");
  scan->add_option("--tau", ov.tau);
  scan->add_option("--a", ov.a);
  scan->add_option("--b", ov.b);
  scan->add_option("--kappa", ov.kappa);
  scan->add_option("--ktest", ov.k_test);
  scan->add_option("--grid", ov.grid);
  nonres->require_subcommand(1);

  auto* bnf = app.add_subcommand("bnf", "normal-form tools");
  auto* bnf_run = bnf->add_subcommand("run", "run the block-removal iteration");
  bnf_run->add_option("--model", ov.model);
  bnf_run->add_option("--rmax", ov.r_max);
  bnf_run->add_option("--t-order", ov.t_order);
  bnf_run->add_option("--kappa", ov.kappa);
  bnf_run->add_option("--tau", ov.tau);
  bnf_run->add_option("--delta", ov.delta_kind);
  bnf->require_subcommand(1);

  auto* homological = app.add_subcommand("homological", "homological-equation tools");
  auto* solve = homological->add_subcommand("solve", "solve omega . d_theta psi = f - <f>");
  std::string series_file;
  std::vector<double> omega;
  solve->add_option("--series", series_file, "series JSON-lines file")->required();
  solve->add_option("--omega", omega, "constant frequency vector")->required()->delimiter(',');
  solve->add_option("--kappa", ov.kappa);
  solve->add_option("--tau", ov.tau);
  solve->add_option("--sigma", ov.sigma);
  homological->require_subcommand(1);

  auto* spectrum = app.add_subcommand("spectrum", "band eigenpairs of the quantized model");
  spectrum->add_option("--h", ov.h);
  spectrum->add_option("--t", ov.t);
  spectrum->add_option("--band", ov.band)->delimiter(',');
  spectrum->add_option("--model", ov.model);

  auto* quasimodes = app.add_subcommand("quasimodes", "quasimodes on the non-resonant index set");
  quasimodes->add_option("--h", ov.h);
  quasimodes->add_option("--t", ov.t);
  quasimodes->add_option("--L", ov.L);

  auto* scar = app.add_subcommand("scar", "scar pipeline");
  auto* scar_run = scar->add_subcommand("run", "full pipeline over the h list");
  scar->require_subcommand(1);

  app.add_subcommand("report", "verify and summarise an output directory");
  for (auto* sub : {nonres, bnf, homological, spectrum, quasimodes, scar}) sub->fallthrough();
  for (auto* sub : {scan, bnf_run, solve, scar_run}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (app.got_subcommand("report")) return report(out_dir.empty() ? "out" : out_dir);

    ExperimentConfig cfg = config_path.empty() ? default_config(dim) : load_config(config_path);
    apply(cfg, ov);
    if (seed_given) cfg.seed = seed;
    if (!out_dir.empty()) cfg.output = out_dir;
    const std::string dir = cfg.output;

    if (scar_run->parsed()) {
      const PipelineResult res = run_pipeline(cfg, dir);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& f : res.findings) std::cerr << "finding: " << f << "\n";
      return res.exit_code;
    }

    const Context ctx = make_context(cfg);
    for (const auto& w : ctx.warnings) std::cerr << "warning: " << w << "\n";
    fs::create_directories(dir);
    std::vector<std::string> files;
    if (scan->parsed()) {
      auto out = artifact(dir, "nonres.csv", files);
      write_nonres_csv(out, run_nonres(ctx));
    } else if (bnf_run->parsed()) {
      const auto nf = run_bnf(ctx);
      auto out = artifact(dir, "bnf.jsonl", files);
      write_bnf_jsonl(out, nf);
      auto csv = artifact(dir, "orders.csv", files);
      write_orders_csv(csv, nf);
    } else if (solve->parsed()) {
      std::ifstream in(series_file);
      if (!in) throw ConfigError("cannot open series file " + series_file);
      const Series f = read_jsonl(in);
      if (static_cast<int>(omega.size()) != f.dim()) throw ConfigError("--omega needs one component per dimension");
      const auto sol = solve_homological(f, omega, cfg.delta.make(f.dim()));
      const auto fit = decay_diagnostic(sol, cfg.delta.sigma);
      auto out = artifact(dir, "homological.jsonl", files);
      write_jsonl(out, sol.psi);
      auto csv = artifact(dir, "homological.csv", files);
      csv << "min_divisor,worst_mode,amplification,decay_rate,decay_stderr,decay_points\n";
      std::string worst;
      for (std::size_t j = 0; j < sol.worst_mode.size(); ++j) worst += (j ? ";" : "") + std::to_string(sol.worst_mode[j]);
      csv << fmt(sol.min_divisor) << "," << worst << "," << fmt(sol.amplification) << ","
          << fmt(fit.degenerate ? NAN : fit.rate) << "," << fmt(fit.degenerate ? NAN : fit.rate_stderr) << ","
          << fit.points << "\n";
    } else if (spectrum->parsed() || quasimodes->parsed()) {
      const NonresStage nr = run_nonres(ctx);
      for (double h : cfg.h) {
        const SpectrumStage s = run_spectrum(ctx, h);
        if (spectrum->parsed()) {
          auto out = artifact(dir, "spectrum_" + tag(h) + ".jsonl", files);
          write_jsonl(out, s.sp, s.band, cfg.dim > 1 ? 1e-12 : 0.0);
        } else {
          auto out = artifact(dir, "quasimodes_" + tag(h) + ".jsonl", files);
          write_quasimodes_jsonl(out, s.sp, run_quasimodes(ctx, s, nr).Q);
        }
      }
    }
    write_manifest(dir, cfg, files, true, {}, ctx.warnings);
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n  hint: " << remediation(e) << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
}
