#include "pipeline.hpp"

#include <openssl/evp.h>

#include <Eigen/Core>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

namespace kamscar::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

std::string join(const IntVec& m) {
  std::string s;
  for (std::size_t j = 0; j < m.size(); ++j) s += (j ? ";" : "") + std::to_string(m[j]);
  return s;
}

std::string h_tag(double h) {
  std::ostringstream os;
  os << "h" << std::setprecision(6) << h;
  return os.str();
}

std::ofstream open_artifact(const std::string& dir, const std::string& name, std::vector<std::string>& files) {
  std::ofstream out(fs::path(dir) / name, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + (fs::path(dir) / name).string());
  files.push_back(name);
  return out;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfig;
  if (dynamic_cast<const InvariantViolation*>(&e)) return kInvariant;
  return kNumeric;
}

std::string remediation(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "fix the configuration value named above";
  if (dynamic_cast<const DivisorTooSmall*>(&e)) return "raise kappa, lower k_angle or move base_point off resonances";
  if (dynamic_cast<const InversionDiverged*>(&e)) return "reduce t0 or the action radius";
  if (dynamic_cast<const PhaseTooLarge*>(&e)) return "reduce t or use a larger h";
  if (dynamic_cast<const WindowsOverlap*>(&e)) return "separation failed; check separation.csv or raise gamma";
  if (dynamic_cast<const OutOfBox*>(&e)) return "enlarge radius or box, or shrink torus_box";
  if (e.module() == "quantize") return "enlarge box, narrow the band, lower margin_layers or raise max_dense";
  return "see the message above";
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

Context make_context(const ExperimentConfig& cfg) {
  validate(cfg);
  Context ctx{cfg, cfg.delta.make(cfg.dim), build_model(cfg), TimePolynomial(SeriesLayout{}), {}};
  ctx.H_spectral = spectral_model(cfg, ctx.H);
  if (ctx.delta.kind() == DeltaKind::Power && !(ctx.delta.tau() > 4.0)) {
    std::ostringstream os;
    os << "Delta = s^" << ctx.delta.tau()
       << " violates the separation hypothesis C1 kappa h^-1/2 / Delta^-1(C1 h^-1/2)^2 -> inf (needs tau > 4)";
    ctx.warnings.push_back(os.str());
  }
  return ctx;
}

NonresStage run_nonres(const Context& ctx) {
  const auto& c = ctx.cfg;
  NonresStage s;
  std::vector<Series> grad;
  const Series h0 = angle_average(ctx.H.coefficient(0));
  for (int j = 0; j < c.dim; ++j) grad.push_back(partial_action(h0, j));
  const RealVec zero(c.dim, 0.0);
  s.grid = box_grid(c.torus_box, c.grid_n);
  s.cell_volume = c.torus_box.volume() / std::pow(static_cast<double>(c.grid_n), c.dim);
  for (const auto& I : s.grid) {
    RealVec omega(c.dim);
    for (int j = 0; j < c.dim; ++j) omega[j] = eval(grad[j], zero, I);
    s.samples.push_back(check_frequency(omega, ctx.delta, c.k_test));
    if (s.samples.back().passed()) s.tori.push_back(I);
  }
  s.phase_measure = std::pow(kTwoPi, c.dim) * s.cell_volume * static_cast<double>(s.tori.size());
  return s;
}

void write_nonres_csv(std::ostream& out, const NonresStage& s) {
  const int d = s.grid.empty() ? 0 : static_cast<int>(s.grid.front().size());
  for (int j = 0; j < d; ++j) out << "I" << j + 1 << ",";
  out << "pass,margin,worst_mode\n";
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    for (double v : s.grid[k]) out << fmt(v) << ",";
    out << (s.samples[k].passed() ? 1 : 0) << "," << fmt(s.samples[k].margin) << "," << join(s.samples[k].worst_mode)
        << "\n";
  }
}

NormalFormResult run_bnf(const Context& ctx) {
  const auto& c = ctx.cfg;
  NormalFormOptions o;
  o.r_max = c.r_max;
  o.t_order = c.t_order;
  o.t_grid.clear();
  for (int k = 0; k < 4; ++k) o.t_grid.push_back(c.t0 * std::pow(2.0, k - 3));
  return run_iteration(ctx.H, ctx.delta, o);
}

void write_bnf_jsonl(std::ostream& out, const NormalFormResult& nf) {
  out << json{{"record", "normal_form"}, {"k_order", nf.k_order}, {"remainder_orders", nf.remainder_orders}}.dump()
      << "\n";
  for (const auto& it : nf.iterations)
    out << json{{"record", "iteration"},
                {"r", it.r},
                {"block", {it.block_lo, it.block_hi}},
                {"min_divisor", std::isfinite(it.min_divisor) ? json(it.min_divisor) : json(nullptr)},
                {"amplification", it.amplification},
                {"validity_radius", std::isfinite(it.validity_radius) ? json(it.validity_radius) : json(nullptr)},
                {"box_scale", it.box_scale},
                {"inversion_residual", it.inversion_residual},
                {"order_slope", it.order.slope},
                {"vanishing", it.order.vanishing}}
               .dump()
        << "\n";
  write_jsonl(out, nf.K);
}

void write_orders_csv(std::ostream& out, const NormalFormResult& nf) {
  out << "r,block_lo,block_hi,slope,vanishing,min_divisor,validity_radius,box_scale,chopped\n";
  for (const auto& it : nf.iterations)
    out << it.r << "," << it.block_lo << "," << it.block_hi << "," << fmt(it.order.slope) << ","
        << (it.order.vanishing ? 1 : 0) << "," << fmt(it.min_divisor) << "," << fmt(it.validity_radius) << ","
        << fmt(it.box_scale) << "," << fmt(it.chopped) << "\n";
}

SpectrumStage run_spectrum(const Context& ctx, double h) {
  const auto& c = ctx.cfg;
  SpectralOptions o;
  o.margin_layers = c.margin_layers;
  o.max_dense = c.max_dense;
  SpectrumStage s{h, build_matrix(ctx.H_spectral, c.t, h, c.maslov, c.box, c.band_lo, c.band_hi, o), {}};
  s.band = eigs_in_band(s.sp);
  return s;
}

QuasimodeStage run_quasimodes(const Context& ctx, const SpectrumStage& s, const NonresStage& nonres) {
  const auto& c = ctx.cfg;
  std::vector<IntVec> inside;
  QuasimodeStage out;
  for (const auto& m : index_set(nonres.tori, s.h, c.L, c.maslov)) {
    if (s.sp.index_of(m) >= 0)
      inside.push_back(m);
    else
      ++out.dropped;
  }
  QuasimodeOptions qo;
  qo.skip_resonant = true;
  QuasimodeSet all = build_quasimodes(ctx.H, ctx.delta, s.sp, inside, qo);
  out.resonant = all.resonant.size();
  // Windows must sit inside the band.
  const double w = std::pow(s.h, c.window_exponent()) / 3.0;
  QuasimodeSet& Q = out.Q;
  Q.h = all.h;
  Q.t = all.t;
  Q.maslov = all.maslov;
  std::vector<Eigen::VectorXcd> kept;
  for (const auto& m : all.indices) {
    const double mu = all.mu.at(m);
    if (mu - w < c.band_lo || mu + w > c.band_hi) {
      ++out.dropped;
      continue;
    }
    Q.indices.push_back(m);
    Q.mu[m] = mu;
    Q.residuals[m] = all.residuals.at(m);
    Q.vectors[m] = all.vectors.at(m);
    kept.push_back(all.vectors.at(m));
  }
  Q.gram_error = gram_error(kept);
  return out;
}

void write_quasimodes_jsonl(std::ostream& out, const SpectralProblem& sp, const QuasimodeSet& Q) {
  out << json{{"record", "quasimodes"}, {"hbar", Q.h},           {"t", Q.t},
              {"maslov", Q.maslov},     {"basis", sp.basis.size()}, {"count", Q.indices.size()},
              {"gram_error", Q.gram_error}}
             .dump()
      << "\n";
  for (const auto& m : Q.indices) {
    const auto& v = Q.vectors.at(m);
    std::vector<long> idx;
    std::vector<double> re, im;
    for (long i = 0; i < v.size(); ++i)
      if (std::abs(v(i)) > 1e-15) {
        idx.push_back(i);
        re.push_back(v(i).real());
        im.push_back(v(i).imag());
      }
    out << json{{"record", "quasimode"}, {"m", m},   {"mu", Q.mu.at(m)}, {"residual", Q.residuals.at(m)},
                {"i", idx},              {"re", re}, {"im", im}}
               .dump()
        << "\n";
  }
  out << json{{"record", "end"}}.dump() << "\n";
}

void write_manifest(const std::string& dir, const ExperimentConfig& cfg, const std::vector<std::string>& files,
                    bool complete, const std::vector<std::string>& findings,
                    const std::vector<std::string>& warnings, const std::string& error,
                    const std::map<std::string, double>& slopes) {
  const json config = to_json(cfg);
  json hashed = config;
  hashed.erase("output");
  json arts = json::array();
  for (const auto& f : files) arts.push_back({{"file", f}, {"sha256", sha256_file((fs::path(dir) / f).string())}});
  json m = {{"tool", "kamscar"},
            {"versions",
             {{"kamscar", kVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
            {"config", config},
            {"config_hash", sha256_hex(hashed.dump())},
            {"seed", cfg.seed},
            {"status", complete ? "complete" : "partial"},
            {"artifacts", arts},
            {"findings", findings},
            {"warnings", warnings},
            {"slopes", slopes}};
  if (!error.empty()) m["error"] = error;
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  out << m.dump(2) << "\n";
}

namespace {

void note(PipelineResult& res, const std::string& kind, const std::string& text) {
  res.findings.push_back(text);
  ++res.finding_counts[kind];
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::string& out_dir) {
  PipelineResult res;
  const Context ctx = make_context(cfg);
  res.warnings = ctx.warnings;
  fs::create_directories(out_dir);
  const auto& c = ctx.cfg;
  const int d = c.dim;
  const double gamma = c.window_exponent();
  try {
    const NonresStage nonres = run_nonres(ctx);
    {
      auto out = open_artifact(out_dir, "nonres.csv", res.artifacts);
      write_nonres_csv(out, nonres);
    }
    if (nonres.tori.empty()) throw DomainError("nonres", "no sampled torus in torus_box passes the non-resonance test");

    const NormalFormResult nf = run_bnf(ctx);
    {
      auto out = open_artifact(out_dir, "bnf.jsonl", res.artifacts);
      write_bnf_jsonl(out, nf);
      auto csv = open_artifact(out_dir, "orders.csv", res.artifacts);
      write_orders_csv(csv, nf);
    }

    const double band_measure =
        band_volume(ctx.H_spectral, c.t, c.box, c.band_lo, c.band_hi, c.weyl_angle_n, c.weyl_action_n);
    const double R = nonres.phase_measure / band_measure;

    auto sep_csv = open_artifact(out_dir, "separation.csv", res.artifacts);
    sep_csv << "h,m,other,gap,threshold\n";
    auto win_csv = open_artifact(out_dir, "windows.csv", res.artifacts);
    win_csv << "h,m,mu,lo,hi,N,good,overlap,mass,residual,projection_bound,energy\n";

    double C2 = c.C2;
    std::mt19937_64 rng(c.seed);
    for (std::size_t k = 0; k < c.h.size(); ++k) {
      const double h = c.h[k];
      HSummary sum;
      sum.h = h;
      const SpectrumStage spec = run_spectrum(ctx, h);
      {
        auto out = open_artifact(out_dir, "spectrum_" + h_tag(h) + ".jsonl", res.artifacts);
        write_jsonl(out, spec.sp, spec.band, d > 1 ? 1e-12 : 0.0);
      }
      sum.basis = spec.sp.basis.size();
      sum.eigenvalues = spec.band.pairs.size();
      sum.weyl_predicted = band_measure / std::pow(kTwoPi * h, d);

      const QuasimodeStage qs = run_quasimodes(ctx, spec, nonres);
      const QuasimodeSet& Q = qs.Q;
      {
        auto out = open_artifact(out_dir, "quasimodes_" + h_tag(h) + ".jsonl", res.artifacts);
        write_quasimodes_jsonl(out, spec.sp, Q);
      }
      sum.indices = Q.indices.size();
      sum.dropped = qs.dropped;
      sum.resonant = qs.resonant;
      sum.gram_error = Q.gram_error;
      for (const auto& [m, r] : Q.residuals) sum.max_residual = std::max(sum.max_residual, r);

      const auto mu = lattice_energy(nf.K, h, c.t, c.maslov);
      const double radius = separation_radius(ctx.delta, c.C1, h);
      if (!(C2 > 0.0) && !Q.indices.empty()) C2 = calibrate_separation(Q.indices, mu, h, radius);
      sum.C2 = C2;
      sum.separation = separation_scan(Q.indices, mu, h, radius, C2);
      for (const auto& v : sum.separation.violations) {
        sep_csv << fmt(h) << "," << join(v.m) << "," << join(v.other) << "," << fmt(v.gap) << "," << fmt(v.threshold)
                << "\n";
      }
      if (!sum.separation.violations.empty())
        note(res, "separation", "h = " + fmt(h) + ": " + std::to_string(sum.separation.violations.size()) +
                               " separation violations");

      if (!Q.indices.empty()) {
        std::vector<double> ts;
        for (int j = 0; j < c.bad_t_samples; ++j) ts.push_back(c.t0 * (j + 0.5) / c.bad_t_samples);
        const IntVec& m0 = Q.indices[Q.indices.size() / 2];
        sum.bad_t = bad_t_fraction(timed_lattice_energy(nf.K, h, c.maslov), m0,
                                   std::max(1, static_cast<int>(std::floor(radius))), h, gamma, ts);
      }

      try {
        WindowStatistics st = window_statistics(spec.band, Q, gamma, c.lambda, band_measure, nonres.phase_measure);
        const double delta_mass = c.mass_radius * h;
        overlap_scan(st, spec.band, Q, spec.sp, delta_mass);
        sum.overlap_bound = R / (2.0 * c.lambda);
        for (const auto& r : st.reports) {
          win_csv << fmt(h) << "," << join(r.m) << "," << fmt(r.mu) << "," << fmt(r.lo) << "," << fmt(r.hi) << ","
                  << r.count << "," << (r.lambda_good ? 1 : 0) << "," << fmt(r.best_overlap) << ","
                  << fmt(r.torus_mass) << "," << fmt(r.quasimode_residual) << "," << fmt(r.projection_bound) << ","
                  << fmt(r.best_energy) << "\n";
          if (!r.lambda_good) continue;
          sum.min_good_overlap = std::min(sum.min_good_overlap, r.best_overlap);
          if (!(r.best_overlap > sum.overlap_bound))
            note(res, "overlap", "h = " + fmt(h) + ", m = " + join(r.m) + ": overlap " + fmt(r.best_overlap) +
                                   " <= R / (2 lambda) = " + fmt(sum.overlap_bound) + " (N = " +
                                   std::to_string(r.count) + ")");
          if (r.torus_mass < r.best_overlap * r.best_overlap - 0.05)
            note(res, "mass", "h = " + fmt(h) + ", m = " + join(r.m) + ": torus mass " + fmt(r.torus_mass) +
                                   " below overlap^2 - 0.05");
          if (r.count > 0) {
            const EigenPair* best = nullptr;
            for (const auto& p : spec.band.pairs)
              if (p.E == r.best_energy) best = &p;
            double prev = 0.0;
            for (double f : {0.5, 1.0, 2.0, 1.0 * c.mass_radius, 2.0 * c.mass_radius}) {
              const double mass = torus_mass(spec.sp, best->u, spec.sp.action(r.m), f * h);
              if (mass < prev) note(res, "monotone", "h = " + fmt(h) + ": torus mass not monotone in delta");
              prev = mass;
            }
          }
        }
        if (st.good_fraction < st.good_bound)
          note(res, "good_fraction", "h = " + fmt(h) + ": lambda-good fraction " + fmt(st.good_fraction) +
                                 " below 1 - 2/lambda = " + fmt(st.good_bound));

        // Negative control: seeded random unit vectors in place of quasimodes.
        QuasimodeSet fake = Q;
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& [m, v] : fake.vectors) {
          for (long i = 0; i < v.size(); ++i) v(i) = Complex(normal(rng), normal(rng));
          v.normalize();
        }
        WindowStatistics control = st;
        overlap_scan(control, spec.band, fake, spec.sp, delta_mass);
        std::size_t passed = 0;
        for (const auto& r : control.reports) passed += r.best_overlap > sum.overlap_bound;
        sum.random_pass_fraction =
            control.reports.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(control.reports.size());
        sum.windows = std::move(st);
      } catch (const WindowsOverlap& e) {
        note(res, "windows_overlap", "h = " + fmt(h) + ": " + e.what());
      }
      res.runs.push_back(std::move(sum));
    }
    sep_csv.close();
    win_csv.close();

    {
      auto out = open_artifact(out_dir, "sweep.csv", res.artifacts);
      out << "h,basis,eigenvalues,weyl_predicted,indices,dropped,resonant,gram_error,max_residual,separation_pairs,"
             "separation_radius,C2,separation_threshold,min_separation,violations,bad_t_fraction,windows,"
             "good_fraction,good_bound,overlap_bound,min_good_overlap,random_pass_fraction\n";
      for (const auto& s : res.runs) {
        out << fmt(s.h) << "," << s.basis << "," << s.eigenvalues << "," << fmt(s.weyl_predicted) << ","
            << s.indices << "," << s.dropped << "," << s.resonant << "," << fmt(s.gram_error) << "," << fmt(s.max_residual) << ","
            << s.separation.pairs << "," << fmt(s.separation.radius) << "," << fmt(s.C2) << ","
            << fmt(s.separation.threshold) << "," << fmt(s.separation.min_separation) << ","
            << s.separation.violations.size() << "," << fmt(s.bad_t) << ","
            << (s.windows ? s.windows->reports.size() : 0) << "," << fmt(s.windows ? s.windows->good_fraction : NAN)
            << "," << fmt(s.windows ? s.windows->good_bound : NAN) << "," << fmt(s.overlap_bound) << ","
            << fmt(s.min_good_overlap) << "," << fmt(s.random_pass_fraction) << "\n";
      }
    }
    if (res.runs.size() >= 2) {
      std::vector<double> hs, rs;
      for (const auto& s : res.runs)
        if (s.max_residual > 0.0) {
          hs.push_back(s.h);
          rs.push_back(s.max_residual);
        }
      if (hs.size() >= 2) res.slopes["quasimode_residual"] = log_log_slope(hs, rs);
    }
  } catch (const Error& e) {
    write_manifest(out_dir, c, res.artifacts, false, res.findings, res.warnings, e.what());
    throw;
  }
  res.complete = true;
  write_manifest(out_dir, c, res.artifacts, true, res.findings, res.warnings, "", res.slopes);
  res.exit_code = res.findings.empty() ? kOk : kInvariant;
  return res;
}

}  // namespace kamscar::cli
