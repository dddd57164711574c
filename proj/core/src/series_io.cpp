#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "kamscar/errors.hpp"
#include "kamscar/series.hpp"

namespace kamscar {

using nlohmann::json;

void write_jsonl(std::ostream& out, const Series& s) {
  json header = {{"record", "fourier_taylor"},
                 {"dim", s.dim()},
                 {"base_point", s.base_point()},
                 {"k_angle", s.k_angle()},
                 {"k_action", s.k_action()},
                 {"radius", s.radius()}};
  out << header.dump() << '\n';
  const MultiIndexSet& A = s.actions();
  for (std::size_t m = 0; m < s.mode_count(); ++m)
    for (std::size_t a = 0; a < A.size(); ++a) {
      const Complex c = s.at(m, a);
      if (c == Complex(0.0, 0.0)) continue;
      json line = {{"g", s.mode(m)}, {"a", A[a]}, {"re", c.real()}, {"im", c.imag()}};
      out << line.dump() << '\n';
    }
  out << json{{"record", "end"}}.dump() << '\n';
}

Series read_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("series file is empty");
  json header = json::parse(line);
  if (header.value("record", "") != "fourier_taylor") throw ConfigError("series file: missing header record");
  SeriesLayout l;
  l.dim = header.at("dim").get<int>();
  l.base_point = header.at("base_point").get<RealVec>();
  l.k_angle = header.at("k_angle").get<int>();
  l.k_action = header.at("k_action").get<int>();
  l.radius = header.at("radius").get<RealVec>();
  Series s(l);
  const std::size_t na = s.action_count();
  bool ended = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    if (rec.contains("record")) {
      if (rec["record"] == "end") {
        ended = true;
        break;
      }
      throw ConfigError("series file: unexpected record " + rec["record"].dump());
    }
    const long m = s.mode_index(rec.at("g").get<IntVec>());
    const int a = s.actions().find(rec.at("a").get<IntVec>());
    if (m < 0 || a < 0) throw ConfigError("series file: coefficient outside declared truncation");
    s.mutable_data()[static_cast<std::size_t>(m) * na + a] =
        Complex(rec.at("re").get<double>(), rec.at("im").get<double>());
  }
  if (!ended) throw ConfigError("series file: truncated (no end record)");
  if (!s.is_real_symmetric()) throw ConfigError("series file: coefficients violate the reality condition");
  return s;
}

}  // namespace kamscar
