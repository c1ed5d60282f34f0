#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace coexist::spectra {

enum class SpectrumUnit {
  LossDb,          ///< total loss over the link, dB
  LossDbPerKm,     ///< attenuation coefficient, dB/km
  CountsPerSecond, ///< detected rate at some reference power and bandwidth
  NormalizedRate,  ///< counts/s per mW of launch power per GHz of filter bandwidth
};

std::string_view to_string(SpectrumUnit unit);
/// Parses the unit token used in spectrum CSV files (`dB`, `dB/km`, `cps`,
/// `cps/mW/GHz`).
SpectrumUnit parse_unit(std::string_view token);

bool is_loss(SpectrumUnit unit);

struct SpectrumPoint {
  double wavelength_nm;
  double value;
};

/// Sampled wavelength-indexed curve, evaluated by piecewise-linear
/// interpolation. Wavelengths are strictly increasing, at least two samples,
/// all values finite and non-negative.
class Spectrum {
public:
  Spectrum(std::vector<SpectrumPoint> points, SpectrumUnit unit);

  SpectrumUnit unit() const noexcept { return unit_; }
  const std::vector<SpectrumPoint>& points() const noexcept { return points_; }
  double min_wavelength() const noexcept { return points_.front().wavelength_nm; }
  double max_wavelength() const noexcept { return points_.back().wavelength_nm; }
  bool contains(double wavelength_nm) const noexcept;

  /// Throws RangeError outside [min_wavelength, max_wavelength].
  double at(double wavelength_nm) const;

  /// A dB/km curve multiplied out to total dB over `length_km`. Total-loss
  /// curves are returned unchanged; rate curves are rejected.
  Spectrum to_total_loss(double length_km) const;

  /// Same samples with every value multiplied by `factor` (> 0).
  Spectrum scaled(double factor, SpectrumUnit unit) const;

private:
  std::vector<SpectrumPoint> points_;
  SpectrumUnit unit_;
};

double interpolate(const Spectrum& s, double wavelength_nm);

/// Reads the `wavelength_nm,value,unit` CSV format. `#` starts a comment.
/// Every row must carry the same unit.
Spectrum read_spectrum_csv(std::istream& in, std::string_view source_name = "<stream>");
Spectrum load_spectrum_csv(const std::filesystem::path& path);
void write_spectrum_csv(std::ostream& out, const Spectrum& s);

// Power conversions.
double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);
double db_to_ratio(double db);

struct ClassicalCarrier {
  double wavelength_nm;
  double power_dbm;
};

/// Classical line-system loading of the fiber. Only the aggregate in-band
/// launch power drives SpRS scaling; out-of-band carriers (supervisory
/// channel, sync clock) are kept for guard-band checks.
struct ClassicalPlan {
  double aggregate_launch_dbm = 0.0;
  std::pair<double, double> band_span_nm{0.0, 0.0};
  std::vector<ClassicalCarrier> extra_channels;

  double aggregate_launch_mw() const { return dbm_to_mw(aggregate_launch_dbm); }
  void validate() const;
};

/// X(lambda) = 10^((L(ref) - L(lambda))/10) on a total-loss curve.
double relative_transmission(const Spectrum& loss, double wavelength_nm, double reference_nm);

/// SpRS rate at `wavelength_nm`, scaled linearly from the curve's reference
/// launch power and filter bandwidth to the plan's power and `filter_bw_ghz`.
double scale_sprs(const Spectrum& s, double wavelength_nm, const ClassicalPlan& plan,
                  double ref_power_dbm, double filter_bw_ghz, double ref_bw_ghz);

/// Probability that a Poisson background of `rate_cps` lands inside a
/// coincidence window of `window_ps`. Warns above 0.1.
double per_pulse_noise(double rate_cps, double window_ps);

/// Everything needed to turn a SpRS spectrum into detected counts at an
/// arbitrary quantum-channel wavelength.
struct SprsScaling {
  Spectrum spectrum;
  ClassicalPlan plan;
  double ref_power_dbm = 0.0;
  double ref_bw_ghz = 1.0;
  double filter_bw_ghz = 1.0;

  /// Detected SpRS rate (counts/s) ahead of the polarization analyzer.
  double rate_cps(double wavelength_nm) const {
    return scale_sprs(spectrum, wavelength_nm, plan, ref_power_dbm, filter_bw_ghz, ref_bw_ghz);
  }
};

}  // namespace coexist::spectra
