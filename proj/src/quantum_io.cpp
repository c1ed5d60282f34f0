#include "coexist/quantum_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace coexist::quantum {
namespace {

constexpr std::array<const char*, 4> kBasisLabels{"HH", "HV", "VH", "VV"};

char port_code(Port p) { return p == Port::Transmit ? 'T' : 'R'; }

Port parse_port(const std::string& s, const std::string& where) {
  if (s == "T") return Port::Transmit;
  if (s == "R") return Port::Reflect;
  throw FormatError(where + ": port must be T or R, got '" + s + "'");
}

double parse_number(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw FormatError(where + ": bad number '" + s + "'");
  }
  if (used != s.size()) throw FormatError(where + ": bad number '" + s + "'");
  return v;
}

}  // namespace

nlohmann::json to_json(const TwoQubitState<double>& rho) {
  nlohmann::json j;
  j["basis"] = kBasisLabels;
  auto re = nlohmann::json::array();
  auto im = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    auto rr = nlohmann::json::array();
    auto ii = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) {
      rr.push_back(rho(r, c).real());
      ii.push_back(rho(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  j["real"] = re;
  j["imag"] = im;
  return j;
}

TwoQubitState<double> state_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("real") || !j.contains("imag")) {
    throw FormatError("density matrix JSON needs 'real' and 'imag' arrays");
  }
  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    if (!b.is_array() || b.size() != 4) throw FormatError("'basis' must list 4 labels");
    for (std::size_t i = 0; i < 4; ++i) {
      if (b[i] != kBasisLabels[i]) throw FormatError("basis order must be HH, HV, VH, VV");
    }
  }
  Matrix4c<double> m;
  for (const char* part : {"real", "imag"}) {
    const auto& a = j.at(part);
    if (!a.is_array() || a.size() != 4) throw FormatError(std::string("'") + part + "' must be 4x4");
    for (std::size_t r = 0; r < 4; ++r) {
      if (!a[r].is_array() || a[r].size() != 4) {
        throw FormatError(std::string("'") + part + "' must be 4x4");
      }
    }
  }
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      m(r, c) = {j["real"][r][c].get<double>(), j["imag"][r][c].get<double>()};
    }
  }
  return TwoQubitState<double>(m);
}

void write_count_records_csv(std::ostream& out, const std::vector<CountRecord>& records) {
  out << "local_qwp_deg,local_hwp_deg,local_port,remote_qwp_deg,remote_hwp_deg,remote_port,"
         "counts,seconds\n";
  const auto old = out.precision(12);
  for (const auto& r : records) {
    const auto& l = r.setting.local;
    const auto& m = r.setting.remote;
    out << l.qwp_deg << ',' << l.hwp_deg << ',' << port_code(l.port) << ',' << m.qwp_deg << ','
        << m.hwp_deg << ',' << port_code(m.port) << ',' << r.counts << ',' << r.seconds << '\n';
  }
  out.precision(old);
}

std::vector<CountRecord> read_count_records_csv(std::istream& in, std::string_view source_name) {
  std::vector<CountRecord> out;
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = std::string(source_name) + ":" + std::to_string(line_no);
    if (!header) {
      if (line.rfind("local_qwp_deg", 0) != 0) throw FormatError(where + ": missing header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw FormatError(where + ": expected 8 fields");
    CountRecord rec;
    rec.setting.local = AnalyzerSetting(parse_number(f[0], where), parse_number(f[1], where),
                                        parse_port(f[2], where));
    rec.setting.remote = AnalyzerSetting(parse_number(f[3], where), parse_number(f[4], where),
                                         parse_port(f[5], where));
    const double counts = parse_number(f[6], where);
    if (counts < 0.0 || counts != std::floor(counts)) {
      throw FormatError(where + ": counts must be a non-negative integer");
    }
    rec.counts = static_cast<std::uint64_t>(counts);
    rec.seconds = parse_number(f[7], where);
    if (!(rec.seconds > 0.0)) throw FormatError(where + ": seconds must be > 0");
    out.push_back(rec);
  }
  return out;
}

}  // namespace coexist::quantum
