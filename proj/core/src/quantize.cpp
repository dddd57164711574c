#include "kamscar/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "kamscar/errors.hpp"

namespace kamscar {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Fourier slices p_gamma(I) of a symbol, evaluated through shared monomials.
class SymbolTable {
 public:
  explicit SymbolTable(const Series& s) : s_(s) {
    for (std::size_t m = 0; m < s.mode_count(); ++m) {
      bool nz = false;
      for (std::size_t a = 0; a < s.action_count(); ++a) nz = nz || s.at(m, a) != Complex(0.0, 0.0);
      if (!nz) continue;
      modes_.push_back(m);
      const IntVec g = s.mode(m);
      int w = 0;
      for (int v : g) w = std::max(w, std::abs(v));
      bandwidth_ = std::max(bandwidth_, w);
    }
  }

  int bandwidth() const { return bandwidth_; }
  const std::vector<std::size_t>& modes() const { return modes_; }
  const Series& series() const { return s_; }

  void monomials(const RealVec& I, std::vector<double>& out) const {
    if (!in_box(s_, I)) throw OutOfBox("quantize", "symbol evaluated outside its action box");
    const MultiIndexSet& A = s_.actions();
    out.assign(A.size(), 1.0);
    for (std::size_t a = 1; a < A.size(); ++a) {
      // Graded order: a = lower(a, k) + e_k for the first k with a_k > 0.
      for (int k = 0; k < s_.dim(); ++k) {
        const int lo = A.lower(a, k);
        if (lo >= 0) {
          out[a] = out[lo] * (I[k] - s_.base_point()[k]);
          break;
        }
      }
    }
  }

  Complex slice(std::size_t mode, const std::vector<double>& mono) const {
    Complex v(0.0, 0.0);
    for (std::size_t a = 0; a < mono.size(); ++a) v += s_.at(mode, a) * mono[a];
    return v;
  }

 private:
  const Series& s_;
  std::vector<std::size_t> modes_;
  int bandwidth_ = 0;
};

std::vector<RealVec> angle_samples(int dim, int n) {
  std::vector<RealVec> pts(1, RealVec{});
  for (int j = 0; j < dim; ++j) {
    std::vector<RealVec> next;
    for (const auto& p : pts)
      for (int k = 0; k < n; ++k) {
        RealVec q = p;
        q.push_back(2.0 * kPi * k / n);
        next.push_back(q);
      }
    pts = std::move(next);
  }
  return pts;
}

}  // namespace

RealVec SpectralProblem::action(const IntVec& m) const {
  RealVec I(dim);
  for (int j = 0; j < dim; ++j) I[j] = hbar * (m[j] + 0.25 * maslov[j]);
  return I;
}

long SpectralProblem::index_of(const IntVec& m) const {
  auto it = lookup_.find(m);
  return it == lookup_.end() ? -1 : it->second;
}

SpectralProblem build_matrix(const TimePolynomial& H, double t, double h, const IntVec& maslov,
                             const ActionBox& box, double band_lo, double band_hi, const SpectralOptions& o) {
  if (!(h > 0.0)) throw DomainError("quantize", "h must be positive");
  if (!(band_lo <= band_hi)) throw DomainError("quantize", "band must satisfy a <= b");
  const int d = H.dim();
  if (static_cast<int>(maslov.size()) != d || box.dim() != d)
    throw DomainError("quantize", "maslov vector and box must match the dimension");
  SpectralProblem sp;
  sp.dim = d;
  sp.hbar = h;
  sp.t = t;
  sp.maslov = maslov;
  sp.band_lo = band_lo;
  sp.band_hi = band_hi;

  const Series symbol = at_time(H, t);
  const SymbolTable table(symbol);
  sp.bandwidth = table.bandwidth();

  // Lattice of the box, first index slowest.
  IntVec lo(d), n(d);
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) {
    lo[j] = static_cast<int>(std::ceil(box.lo[j] / h - 0.25 * maslov[j] - 1e-9));
    const int hi = static_cast<int>(std::floor(box.hi[j] / h - 0.25 * maslov[j] + 1e-9));
    n[j] = hi - lo[j] + 1;
    if (n[j] <= 0) throw DomainError("quantize", "box contains no lattice points");
    total *= static_cast<std::size_t>(n[j]);
  }
  auto decode = [&](std::size_t c) {
    IntVec m(d);
    for (int j = d - 1; j >= 0; --j) {
      m[j] = lo[j] + static_cast<int>(c % n[j]);
      c /= n[j];
    }
    return m;
  };

  // Lattice actions where the angle range of p meets the band.
  const auto thetas = angle_samples(d, o.range_samples);
  std::vector<char> mark(total, 0);
  std::vector<double> mono;
  for (std::size_t c = 0; c < total; ++c) {
    const RealVec I = sp.action(decode(c));
    table.monomials(I, mono);
    std::vector<Complex> slices;
    for (std::size_t m : table.modes()) slices.push_back(table.slice(m, mono));
    double pmin = INFINITY, pmax = -INFINITY;
    for (const auto& th : thetas) {
      double v = 0.0;
      for (std::size_t k = 0; k < slices.size(); ++k) {
        const IntVec g = symbol.mode(table.modes()[k]);
        double ph = 0.0;
        for (int j = 0; j < d; ++j) ph += g[j] * th[j];
        v += (slices[k] * Complex(std::cos(ph), std::sin(ph))).real();
      }
      pmin = std::min(pmin, v);
      pmax = std::max(pmax, v);
    }
    if (pmax >= band_lo && pmin <= band_hi) mark[c] = 1;
  }

  // Separable infinity-norm dilation by the margin.
  const int margin = o.margin_layers < 0 ? H.layout().k_angle : o.margin_layers;
  std::size_t stride = 1;
  for (int j = d - 1; j >= 0; --j) {
    std::vector<char> next(total, 0);
    for (std::size_t c = 0; c < total; ++c) {
      if (!mark[c]) continue;
      const int pos = static_cast<int>((c / stride) % n[j]);
      const int a = std::max(0, pos - margin), b = std::min(n[j] - 1, pos + margin);
      for (int q = a; q <= b; ++q) next[c + static_cast<std::size_t>(q - pos) * stride] = 1;
    }
    mark = std::move(next);
    stride *= static_cast<std::size_t>(n[j]);
  }

  for (std::size_t c = 0; c < total; ++c) {
    if (!mark[c]) continue;
    const IntVec m = decode(c);
    for (int j = 0; j < d; ++j)
      if (m[j] == lo[j] || m[j] == lo[j] + n[j] - 1) {
        std::ostringstream os;
        os << "band region plus " << margin << " lattice layers reaches the edge of the action box";
        throw DomainError("quantize", os.str());
      }
    sp.lookup_[m] = static_cast<long>(sp.basis.size());
    sp.basis.push_back(m);
  }

  const long N = static_cast<long>(sp.basis.size());
  sp.max_dense = o.max_dense;
  std::vector<Eigen::Triplet<Complex>> entries;
  RealVec mid(d);
  for (long col = 0; col < N; ++col) {
    const IntVec& m = sp.basis[col];
    for (std::size_t k = 0; k < table.modes().size(); ++k) {
      const IntVec g = symbol.mode(table.modes()[k]);
      IntVec mp(d);
      for (int j = 0; j < d; ++j) mp[j] = m[j] + g[j];
      const long row = sp.index_of(mp);
      if (row < 0) continue;
      for (int j = 0; j < d; ++j) mid[j] = h * (0.5 * (m[j] + mp[j]) + 0.25 * maslov[j]);
      table.monomials(mid, mono);
      Complex v = table.slice(table.modes()[k], mono);
      if (row == col) v = Complex(v.real(), 0.0);
      if (v != Complex(0.0, 0.0)) entries.emplace_back(row, col, v);
    }
  }
  sp.matrix.resize(N, N);
  sp.matrix.setFromTriplets(entries.begin(), entries.end());
  return sp;
}

long count_below(const SpectralProblem& sp, double sigma, int nudge) {
  const long N = static_cast<long>(sp.basis.size());
  if (N == 0) return 0;
  long w = 0;
  for (long c = 0; c < sp.matrix.outerSize(); ++c)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(sp.matrix, c); it; ++it)
      w = std::max(w, std::abs(it.row() - it.col()));
  // Lower band: band[(i - j) + j * (w + 1)] = A(i, j) for 0 <= i - j <= w.
  auto factor = [&](double shift, long& negatives) {
    std::vector<Complex> band(static_cast<std::size_t>(N * (w + 1)));
    for (long c = 0; c < sp.matrix.outerSize(); ++c)
      for (Eigen::SparseMatrix<Complex>::InnerIterator it(sp.matrix, c); it; ++it)
        if (it.row() >= it.col()) band[(it.row() - it.col()) + it.col() * (w + 1)] = it.value();
    for (long j = 0; j < N; ++j) band[j * (w + 1)] -= shift;
    std::vector<double> D(N);
    negatives = 0;
    double scale = 0.0;
    for (long j = 0; j < N; ++j) scale = std::max(scale, std::abs(band[j * (w + 1)]) + std::abs(shift));
    for (long j = 0; j < N; ++j) {
      // D_j = A_jj - sum_k |L_jk|^2 D_k, with L stored in place of A.
      Complex djj = band[j * (w + 1)];
      for (long k = std::max(0L, j - w); k < j; ++k) {
        const Complex l = band[(j - k) + k * (w + 1)];
        djj -= std::norm(l) * D[k];
      }
      D[j] = djj.real();
      if (std::abs(D[j]) < 1e-14 * std::max(scale, 1.0)) return false;
      if (D[j] < 0.0) ++negatives;
      for (long i = j + 1; i <= std::min(N - 1, j + w); ++i) {
        Complex aij = band[(i - j) + j * (w + 1)];
        for (long k = std::max(0L, i - w); k < j; ++k)
          aij -= band[(i - k) + k * (w + 1)] * std::conj(band[(j - k) + k * (w + 1)]) * D[k];
        band[(i - j) + j * (w + 1)] = aij / D[j];
      }
    }
    return true;
  };
  long negatives = 0;
  double shift = sigma;
  for (int attempt = 0; attempt < 8; ++attempt) {
    if (factor(shift, negatives)) return negatives;
    shift = sigma + (nudge < 0 ? -1.0 : 1.0) * std::ldexp(1e-12, attempt) * std::max(1.0, std::abs(sigma));
  }
  throw DomainError("quantize", "inertia count broke down at repeated pivots");
}

long count_in_band(const SpectralProblem& sp) {
  const double lo = sp.band_lo - 1e-12 * std::max(1.0, std::abs(sp.band_lo));
  const double hi = sp.band_hi + 1e-12 * std::max(1.0, std::abs(sp.band_hi));
  return count_below(sp, hi, 1) - count_below(sp, lo, -1);
}

namespace {

extern "C" void zheevr_(const char* jobz, const char* range, const char* uplo, const int* n, Complex* a,
                        const int* lda, const double* vl, const double* vu, const int* il, const int* iu,
                        const double* abstol, int* m, double* w, Complex* z, const int* ldz, int* isuppz,
                        Complex* work, const int* lwork, double* rwork, const int* lrwork, int* iwork,
                        const int* liwork, int* info);

// Largest |eigenvalue| by bisection on the inertia count inside the
// Gershgorin interval.
double spectral_radius(const SpectralProblem& sp) {
  const long n = static_cast<long>(sp.basis.size());
  double lo = 0.0, hi = 0.0;
  for (int j = 0; j < sp.matrix.outerSize(); ++j) {
    double off = 0.0, diag = 0.0;
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(sp.matrix, j); it; ++it)
      if (it.row() == j)
        diag = it.value().real();
      else
        off += std::abs(it.value());
    lo = std::min(lo, diag - off);
    hi = std::max(hi, diag + off);
  }
  auto bisect = [&](double a, double b, bool top) {
    for (int k = 0; k < 100 && b - a > 1e-14 * std::max(1.0, std::abs(a) + std::abs(b)); ++k) {
      const double c = 0.5 * (a + b);
      const long below = count_below(sp, c);
      if (top ? below < n : below == 0)
        a = c;
      else
        b = c;
    }
    return 0.5 * (a + b);
  };
  return std::max(std::abs(bisect(lo - 1.0, hi + 1.0, false)), std::abs(bisect(lo - 1.0, hi + 1.0, true)));
}

}  // namespace

EigenBand eigs_in_band(const SpectralProblem& sp) {
  EigenBand out;
  if (sp.basis.empty()) return out;
  if (static_cast<long>(sp.basis.size()) > sp.max_dense) {
    std::ostringstream os;
    os << "basis of " << sp.basis.size() << " states exceeds the dense limit " << sp.max_dense;
    throw DomainError("quantize", os.str());
  }
  const int n = static_cast<int>(sp.basis.size());
  std::vector<Complex> a(static_cast<std::size_t>(n) * n, Complex(0.0, 0.0)), z(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < sp.matrix.outerSize(); ++j)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(sp.matrix, j); it; ++it)
      a[static_cast<std::size_t>(j) * n + it.row()] = it.value();
  // Closed band: widen by a relative 1e-12 and filter afterwards.
  const double vl = sp.band_lo - 1e-12 * std::max(1.0, std::abs(sp.band_lo));
  const double vu = sp.band_hi + 1e-12 * std::max(1.0, std::abs(sp.band_hi));
  const int il = 0, iu = 0;
  const double abstol = 0.0;
  int found = 0, info = 0, lwork = -1, lrwork = -1, liwork = -1, iwq = 0;
  Complex wq;
  double rwq = 0.0;
  std::vector<double> w(n);
  std::vector<int> isuppz(2 * static_cast<std::size_t>(n));
  zheevr_("V", "V", "U", &n, a.data(), &n, &vl, &vu, &il, &iu, &abstol, &found, w.data(), z.data(), &n,
          isuppz.data(), &wq, &lwork, &rwq, &lrwork, &iwq, &liwork, &info);
  lwork = static_cast<int>(wq.real());
  lrwork = static_cast<int>(rwq);
  liwork = iwq;
  std::vector<Complex> work(lwork);
  std::vector<double> rwork(lrwork);
  std::vector<int> iwork(liwork);
  zheevr_("V", "V", "U", &n, a.data(), &n, &vl, &vu, &il, &iu, &abstol, &found, w.data(), z.data(), &n,
          isuppz.data(), work.data(), &lwork, rwork.data(), &lrwork, iwork.data(), &liwork, &info);
  if (info != 0) throw DomainError("quantize", "Hermitian eigensolve failed (zheevr info " + std::to_string(info) + ")");
  out.spectral_norm = spectral_radius(sp);
  for (int k = 0; k < found; ++k) {
    if (w[k] < sp.band_lo || w[k] > sp.band_hi) continue;
    EigenPair p;
    p.E = w[k];
    p.u = Eigen::Map<const Eigen::VectorXcd>(z.data() + static_cast<std::size_t>(k) * n, n);
    // Fix the phase: largest component real positive.
    Eigen::Index imax;
    p.u.cwiseAbs().maxCoeff(&imax);
    p.u *= std::abs(p.u(imax)) / p.u(imax);
    out.residual = std::max(out.residual, (sp.matrix * p.u - p.E * p.u).norm());
    out.pairs.push_back(std::move(p));
  }
  const long m = static_cast<long>(out.pairs.size());
  for (long i = 0; i < m; ++i)
    for (long j = i; j < m; ++j) {
      const Complex g = out.pairs[i].u.dot(out.pairs[j].u);
      out.orthonormality = std::max(out.orthonormality, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  return out;
}

namespace {

// P(lo <= sum_j w_j (U_j - 1/2) <= hi) for independent uniform U_j.
double box_spline_mass(std::vector<double> w, double lo, double hi) {
  double total = 0.0;
  for (double v : w) total += v;
  std::vector<double> kept;
  for (double v : w)
    if (v > 1e-14 * std::max(total, 1e-300)) kept.push_back(v);
  if (kept.empty()) return lo <= 0.0 && 0.0 <= hi ? 1.0 : 0.0;
  const int n = static_cast<int>(kept.size());
  double half = 0.0, norm = 1.0;
  for (int j = 0; j < n; ++j) {
    half += 0.5 * kept[j];
    norm *= kept[j] * (j + 1);
  }
  auto cdf = [&](double x) {
    const double y = x + half;
    if (y <= 0.0) return 0.0;
    if (y >= 2.0 * half) return 1.0;
    double acc = 0.0;
    for (int S = 0; S < (1 << n); ++S) {
      double shift = 0.0;
      int bits = 0;
      for (int j = 0; j < n; ++j)
        if (S & (1 << j)) {
          shift += kept[j];
          ++bits;
        }
      const double z = y - shift;
      if (z > 0.0) acc += (bits % 2 ? -1.0 : 1.0) * std::pow(z, n);
    }
    return std::clamp(acc / norm, 0.0, 1.0);
  };
  return std::max(0.0, cdf(hi) - cdf(lo));
}

}  // namespace

double band_volume(const TimePolynomial& H, double t, const ActionBox& box, double band_lo, double band_hi,
                   int angle_n, int action_n) {
  const int d = H.dim();
  const Series symbol = at_time(H, t);
  const SymbolTable table(symbol);
  std::vector<Series> grads;
  for (int j = 0; j < d; ++j) grads.push_back(partial_action(symbol, j));
  std::vector<SymbolTable> grad_tables;
  for (const auto& g : grads) grad_tables.emplace_back(g);
  // Cell-linear p: each sample contributes the exact fraction of its cell
  // where p + grad p . (I - I_c) lies in the band.
  const auto thetas = angle_samples(d, angle_n);
  // Phases e^{i gamma theta} per sample and mode.
  const std::size_t nm = table.modes().size();
  std::vector<Complex> phase(thetas.size() * nm);
  for (std::size_t s = 0; s < thetas.size(); ++s)
    for (std::size_t k = 0; k < nm; ++k) {
      const IntVec g = symbol.mode(table.modes()[k]);
      double ph = 0.0;
      for (int j = 0; j < d; ++j) ph += g[j] * thetas[s][j];
      phase[s * nm + k] = Complex(std::cos(ph), std::sin(ph));
    }
  std::size_t cells = 1;
  for (int j = 0; j < d; ++j) cells *= static_cast<std::size_t>(action_n);
  RealVec width(d);
  double cell_vol = std::pow(2.0 * kPi / angle_n, d);
  for (int j = 0; j < d; ++j) {
    width[j] = (box.hi[j] - box.lo[j]) / action_n;
    cell_vol *= width[j];
  }
  std::vector<double> mono;
  std::vector<Complex> slices(nm), dslices(nm * d);
  std::vector<double> w(d);
  double mass = 0.0;
  RealVec I(d);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t x = c;
    for (int j = d - 1; j >= 0; --j) {
      I[j] = box.lo[j] + ((x % action_n) + 0.5) * width[j];
      x /= action_n;
    }
    table.monomials(I, mono);
    for (std::size_t k = 0; k < nm; ++k) {
      slices[k] = table.slice(table.modes()[k], mono);
      for (int j = 0; j < d; ++j) dslices[k * d + j] = grad_tables[j].slice(table.modes()[k], mono);
    }
    for (std::size_t s = 0; s < thetas.size(); ++s) {
      double v = 0.0;
      for (int j = 0; j < d; ++j) w[j] = 0.0;
      for (std::size_t k = 0; k < nm; ++k) {
        const Complex e = phase[s * nm + k];
        v += (slices[k] * e).real();
        for (int j = 0; j < d; ++j) w[j] += (dslices[k * d + j] * e).real();
      }
      for (int j = 0; j < d; ++j) w[j] = std::abs(w[j]) * width[j];
      mass += box_spline_mass(w, band_lo - v, band_hi - v);
    }
  }
  return mass * cell_vol;
}

WeylCount weyl_count(const TimePolynomial& H, double t, double h, const ActionBox& box, double band_lo,
                     double band_hi, int angle_n, int action_n, const SpectralOptions& o) {
  WeylCount w;
  w.volume = band_volume(H, t, box, band_lo, band_hi, angle_n, action_n);
  w.predicted = w.volume / std::pow(2.0 * kPi * h, H.dim());
  const SpectralProblem sp = build_matrix(H, t, h, IntVec(H.dim(), 0), box, band_lo, band_hi, o);
  if (sp.basis.empty()) return w;
  w.actual = count_in_band(sp);
  return w;
}

void write_jsonl(std::ostream& out, const SpectralProblem& sp, const EigenBand& band, double drop_below) {
  using nlohmann::json;
  json header = {{"record", "eigen_band"},    {"dim", sp.dim},         {"hbar", sp.hbar},
                 {"t", sp.t},                 {"maslov", sp.maslov},   {"band", {sp.band_lo, sp.band_hi}},
                 {"basis", sp.basis.size()},  {"pairs", band.pairs.size()}, {"residual", band.residual},
                 {"drop_below", drop_below}};
  out << header.dump() << '\n';
  out << json{{"record", "basis"}, {"m", sp.basis}}.dump() << '\n';
  for (const auto& p : band.pairs) {
    std::vector<double> re, im;
    std::vector<long> idx;
    for (long i = 0; i < p.u.size(); ++i) {
      if (drop_below > 0.0 && std::abs(p.u(i)) <= drop_below) continue;
      idx.push_back(i);
      re.push_back(p.u(i).real());
      im.push_back(p.u(i).imag());
    }
    json rec = {{"record", "pair"}, {"E", p.E}, {"re", re}, {"im", im}};
    if (drop_below > 0.0) rec["i"] = idx;
    out << rec.dump() << '\n';
  }
  out << json{{"record", "end"}}.dump() << '\n';
}

StoredBand read_eigen_band(std::istream& in) {
  using nlohmann::json;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("eigen band file is empty");
  json header = json::parse(line);
  if (header.value("record", "") != "eigen_band") throw ConfigError("missing eigen_band header");
  StoredBand sb;
  sb.dim = header.at("dim").get<int>();
  sb.hbar = header.at("hbar").get<double>();
  sb.t = header.at("t").get<double>();
  sb.band.residual = header.at("residual").get<double>();
  if (!std::getline(in, line)) throw ConfigError("eigen band file truncated");
  sb.basis = json::parse(line).at("m").get<std::vector<IntVec>>();
  while (std::getline(in, line)) {
    json rec = json::parse(line);
    const std::string kind = rec.value("record", "");
    if (kind == "end") return sb;
    if (kind != "pair") throw ConfigError("unexpected record in eigen band file: " + kind);
    const auto re = rec.at("re").get<std::vector<double>>();
    const auto im = rec.at("im").get<std::vector<double>>();
    std::vector<long> idx;
    if (rec.contains("i")) {
      idx = rec.at("i").get<std::vector<long>>();
    } else {
      if (re.size() != sb.basis.size()) throw ConfigError("eigenvector length differs from the basis size");
      for (std::size_t i = 0; i < re.size(); ++i) idx.push_back(static_cast<long>(i));
    }
    if (re.size() != idx.size() || im.size() != idx.size()) throw ConfigError("eigenvector record is ragged");
    EigenPair p;
    p.E = rec.at("E").get<double>();
    p.u = Eigen::VectorXcd::Zero(static_cast<long>(sb.basis.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] < 0 || idx[k] >= p.u.size()) throw ConfigError("eigenvector index outside the basis");
      p.u(idx[k]) = Complex(re[k], im[k]);
    }
    sb.band.pairs.push_back(std::move(p));
  }
  throw ConfigError("eigen band file has no end record");
}

}  // namespace kamscar
