#include "coexist/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "coexist/diagnostics.hpp"
#include "coexist/error.hpp"

namespace coexist::spectra {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& text, std::string_view where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw FormatError(std::string(where) + ": cannot parse number '" + text + "'");
  }
  if (used != text.size()) {
    throw FormatError(std::string(where) + ": trailing characters in number '" + text + "'");
  }
  return v;
}

std::string fmt_nm(double nm) {
  std::ostringstream os;
  os << nm << " nm";
  return os.str();
}

}  // namespace

std::string_view to_string(SpectrumUnit unit) {
  switch (unit) {
    case SpectrumUnit::LossDb: return "dB";
    case SpectrumUnit::LossDbPerKm: return "dB/km";
    case SpectrumUnit::CountsPerSecond: return "cps";
    case SpectrumUnit::NormalizedRate: return "cps/mW/GHz";
  }
  return "?";
}

SpectrumUnit parse_unit(std::string_view token) {
  if (token == "dB") return SpectrumUnit::LossDb;
  if (token == "dB/km") return SpectrumUnit::LossDbPerKm;
  if (token == "cps") return SpectrumUnit::CountsPerSecond;
  if (token == "cps/mW/GHz") return SpectrumUnit::NormalizedRate;
  throw FormatError("unknown spectrum unit '" + std::string(token) +
                    "' (expected dB, dB/km, cps or cps/mW/GHz)");
}

bool is_loss(SpectrumUnit unit) {
  return unit == SpectrumUnit::LossDb || unit == SpectrumUnit::LossDbPerKm;
}

Spectrum::Spectrum(std::vector<SpectrumPoint> points, SpectrumUnit unit)
    : points_(std::move(points)), unit_(unit) {
  if (points_.size() < 2) {
    throw ParameterError("spectrum needs at least 2 samples, got " +
                         std::to_string(points_.size()));
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (!std::isfinite(p.wavelength_nm) || !std::isfinite(p.value)) {
      throw ParameterError("spectrum sample " + std::to_string(i) + " is not finite");
    }
    if (p.value < 0.0) {
      throw ParameterError("spectrum sample at " + fmt_nm(p.wavelength_nm) +
                           " is negative; loss and rate values must be >= 0");
    }
    if (i > 0 && !(p.wavelength_nm > points_[i - 1].wavelength_nm)) {
      throw ParameterError("spectrum wavelengths must be strictly increasing (sample " +
                           std::to_string(i) + " at " + fmt_nm(p.wavelength_nm) + ")");
    }
  }
}

bool Spectrum::contains(double wavelength_nm) const noexcept {
  return wavelength_nm >= min_wavelength() && wavelength_nm <= max_wavelength();
}

double Spectrum::at(double wavelength_nm) const {
  if (!contains(wavelength_nm)) {
    std::ostringstream os;
    os << "wavelength " << wavelength_nm << " nm outside the sampled span ["
       << min_wavelength() << ", " << max_wavelength() << "] nm";
    throw RangeError(os.str());
  }
  const auto upper = std::lower_bound(
      points_.begin(), points_.end(), wavelength_nm,
      [](const SpectrumPoint& p, double w) { return p.wavelength_nm < w; });
  if (upper->wavelength_nm == wavelength_nm) return upper->value;
  const auto lower = std::prev(upper);
  const double t = (wavelength_nm - lower->wavelength_nm) /
                   (upper->wavelength_nm - lower->wavelength_nm);
  return lower->value + t * (upper->value - lower->value);
}

Spectrum Spectrum::to_total_loss(double length_km) const {
  if (unit_ == SpectrumUnit::LossDb) return *this;
  if (unit_ != SpectrumUnit::LossDbPerKm) {
    throw ParameterError("cannot convert a " + std::string(to_string(unit_)) +
                         " spectrum to total loss");
  }
  if (!(length_km > 0.0) || !std::isfinite(length_km)) {
    throw ParameterError("fiber length must be > 0 km to normalize a dB/km curve");
  }
  return scaled(length_km, SpectrumUnit::LossDb);
}

Spectrum Spectrum::scaled(double factor, SpectrumUnit unit) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw ParameterError("spectrum scale factor must be finite and > 0");
  }
  std::vector<SpectrumPoint> pts = points_;
  for (auto& p : pts) p.value *= factor;
  return Spectrum(std::move(pts), unit);
}

double interpolate(const Spectrum& s, double wavelength_nm) { return s.at(wavelength_nm); }

Spectrum read_spectrum_csv(std::istream& in, std::string_view source_name) {
  std::vector<SpectrumPoint> points;
  std::optional<SpectrumUnit> unit;
  bool header_seen = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const std::string where = std::string(source_name) + ":" + std::to_string(line_no);
    auto fields = split_csv(line);
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "wavelength_nm" || fields[1] != "value" ||
          fields[2] != "unit") {
        throw FormatError(where + ": expected header 'wavelength_nm,value,unit'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) {
      throw FormatError(where + ": expected 3 fields, got " + std::to_string(fields.size()));
    }
    const SpectrumUnit row_unit = parse_unit(fields[2]);
    if (unit && *unit != row_unit) {
      throw FormatError(where + ": unit '" + fields[2] + "' differs from earlier rows");
    }
    unit = row_unit;
    points.push_back({parse_double(fields[0], where), parse_double(fields[1], where)});
  }
  if (!header_seen || !unit) {
    throw FormatError(std::string(source_name) + ": no spectrum samples");
  }
  try {
    return Spectrum(std::move(points), *unit);
  } catch (const ParameterError& e) {
    throw FormatError(std::string(source_name) + ": " + e.what());
  }
}

Spectrum load_spectrum_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spectrum file " + path.string());
  return read_spectrum_csv(in, path.string());
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  out << "wavelength_nm,value,unit\n";
  const auto old_precision = out.precision(17);
  for (const auto& p : s.points()) {
    out << p.wavelength_nm << ',' << p.value << ',' << to_string(s.unit()) << '\n';
  }
  out.precision(old_precision);
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double mw_to_dbm(double mw) {
  if (!(mw > 0.0)) throw ParameterError("power in mW must be > 0 to express in dBm");
  return 10.0 * std::log10(mw);
}

double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }

void ClassicalPlan::validate() const {
  if (!std::isfinite(aggregate_launch_dbm)) {
    throw ParameterError("classical aggregate launch power must be finite");
  }
  if (!std::isfinite(band_span_nm.first) || !std::isfinite(band_span_nm.second) ||
      !(band_span_nm.first < band_span_nm.second)) {
    throw ParameterError("classical band span must be an ordered pair of wavelengths");
  }
  for (const auto& c : extra_channels) {
    if (!std::isfinite(c.wavelength_nm) || !(c.wavelength_nm > 0.0) ||
        !std::isfinite(c.power_dbm)) {
      throw ParameterError("classical extra channel has a non-finite wavelength or power");
    }
  }
}

double relative_transmission(const Spectrum& loss, double wavelength_nm, double reference_nm) {
  if (loss.unit() != SpectrumUnit::LossDb) {
    throw ParameterError("relative transmission needs a total-loss (dB) curve, got " +
                         std::string(to_string(loss.unit())));
  }
  return db_to_ratio(loss.at(reference_nm) - loss.at(wavelength_nm));
}

double scale_sprs(const Spectrum& s, double wavelength_nm, const ClassicalPlan& plan,
                  double ref_power_dbm, double filter_bw_ghz, double ref_bw_ghz) {
  if (is_loss(s.unit())) {
    throw ParameterError("SpRS scaling needs a rate spectrum, got a loss curve");
  }
  if (!(filter_bw_ghz > 0.0) || !(ref_bw_ghz > 0.0)) {
    throw ParameterError("filter and reference bandwidths must be > 0 GHz");
  }
  const double power_ratio = plan.aggregate_launch_mw() / dbm_to_mw(ref_power_dbm);
  return s.at(wavelength_nm) * power_ratio * (filter_bw_ghz / ref_bw_ghz);
}

double per_pulse_noise(double rate_cps, double window_ps) {
  if (!(rate_cps >= 0.0) || !std::isfinite(rate_cps)) {
    throw ParameterError("noise rate must be finite and >= 0");
  }
  if (!(window_ps > 0.0)) throw ParameterError("coincidence window must be > 0 ps");
  const double p = rate_cps * window_ps * 1e-12;
  if (p > 0.1) {
    std::ostringstream os;
    os << "per-window noise probability " << p
       << " exceeds 0.1; the rare-event accidental model is unreliable here";
    warn(os.str());
  }
  return p;
}

}  // namespace coexist::spectra
