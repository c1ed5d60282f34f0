#include "coexist/link_model.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "coexist/diagnostics.hpp"
#include "coexist/error.hpp"

namespace coexist::link_model {
namespace {

void require_probability(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream os;
    os << name << " = " << v << " is not a probability in [0, 1]";
    throw ParameterError(os.str());
  }
}

const char* arm_name(Arm arm) { return arm == Arm::Signal ? "signal" : "idler"; }

}  // namespace

void LinkParams::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ParameterError("mu must be finite and > 0");
  require_probability(eta_idler_ref, "eta_idler_ref");
  require_probability(eta_signal_ref, "eta_signal_ref");
  require_probability(dark_idler, "dark_idler");
  require_probability(dark_signal, "dark_signal");
  require_probability(sprs_idler, "sprs_idler");
  require_probability(sprs_signal_ref, "sprs_signal_ref");
  if (mu * eta_idler_ref > 1.0 || mu * eta_signal_ref > 1.0) {
    throw ParameterError("mu * eta must not exceed 1 on either arm");
  }
  if (!(window_ps > 0.0)) throw ParameterError("window_ps must be > 0");
  if (!(rep_rate_hz > 0.0)) throw ParameterError("rep_rate_hz must be > 0");
  if (!(reference_nm > 0.0)) throw ParameterError("reference_nm must be > 0");
}

double arm_efficiency(const LinkParams& p, Arm arm, double transmission) {
  return arm == Arm::Signal ? p.eta_signal_ref * transmission : p.eta_idler_ref;
}

double singles(const LinkParams& p, Arm arm, double transmission, double sprs_per_pulse) {
  const double dark = arm == Arm::Signal ? p.dark_signal : p.dark_idler;
  const double s = p.mu * arm_efficiency(p, arm, transmission) + dark + sprs_per_pulse;
  if (!(s <= 1.0)) {
    std::ostringstream os;
    os << arm_name(arm) << " singles probability " << s << " exceeds 1 per pulse";
    throw ModelValidityError(os.str());
  }
  if (s > 0.1) {
    std::ostringstream os;
    os << arm_name(arm) << " singles probability " << s
       << " per pulse is above 0.1; the accidental model C_min = S_i*S_s assumes rare events";
    warn(os.str());
  }
  return s;
}

double singles(const LinkParams& p, Arm arm, double wavelength_nm,
               const spectra::Spectrum& loss, double sprs_per_pulse) {
  const double x = spectra::relative_transmission(loss, wavelength_nm, p.reference_nm);
  return singles(p, arm, x, sprs_per_pulse);
}

CoincidenceExtrema coincidence_extrema(double mu, double eta_idler, double eta_signal,
                                       double singles_idler, double singles_signal) {
  const double accidental = singles_idler * singles_signal;
  return {mu * eta_idler * eta_signal + accidental, accidental};
}

double visibility(double c_max, double c_min) {
  if (c_max < 0.0 || c_min < 0.0) {
    throw ParameterError("coincidence probabilities must be >= 0");
  }
  const double total = c_max + c_min;
  if (total == 0.0) {
    throw UndefinedVisibilityError("visibility undefined: both coincidence extrema are zero");
  }
  return (c_max - c_min) / total;
}

SnrValue snr(double anchor, double transmission, double noise_ref, double noise_at) {
  if (noise_at == 0.0) {
    return {std::numeric_limits<double>::infinity(), true};
  }
  return {anchor * transmission * (noise_ref / noise_at), false};
}

double signal_sprs_per_pulse(const SweepInputs& in, double wavelength_nm) {
  if (!in.sprs) return in.params.sprs_signal_ref;
  const double rate = in.sprs->rate_cps(wavelength_nm) * in.analyzer_noise_fraction;
  return spectra::per_pulse_noise(rate, in.params.window_ps);
}

RatePrediction predict(const SweepInputs& in, double wavelength_nm) {
  const LinkParams& p = in.params;
  RatePrediction r;
  r.wavelength_nm = wavelength_nm;
  const double x = spectra::relative_transmission(in.loss, wavelength_nm, p.reference_nm);
  const double sprs_s = signal_sprs_per_pulse(in, wavelength_nm);
  r.singles_idler = singles(p, Arm::Idler, x, p.sprs_idler);
  r.singles_signal = singles(p, Arm::Signal, x, sprs_s);
  const auto ext = coincidence_extrema(p.mu, arm_efficiency(p, Arm::Idler, x),
                                       arm_efficiency(p, Arm::Signal, x), r.singles_idler,
                                       r.singles_signal);
  r.c_max = ext.c_max;
  r.c_min = ext.c_min;
  r.visibility = visibility(ext.c_max, ext.c_min);
  const double noise_ref = p.dark_signal + signal_sprs_per_pulse(in, p.reference_nm);
  const auto s = snr(in.snr_anchor, x, noise_ref, p.dark_signal + sprs_s);
  r.snr = s.value;
  r.snr_saturated = s.saturated;
  return r;
}

std::vector<RatePrediction> sweep(const SweepInputs& in, const std::vector<double>& grid_nm) {
  in.params.validate();
  std::vector<RatePrediction> out;
  out.reserve(grid_nm.size());
  for (double w : grid_nm) {
    try {
      out.push_back(predict(in, w));
    } catch (const RangeError& e) {
      std::ostringstream os;
      os << "sweep point " << w << " nm: " << e.what();
      throw RangeError(os.str());
    }
  }
  return out;
}

std::vector<double> wavelength_grid(double start_nm, double stop_nm, double step_nm) {
  if (!(step_nm > 0.0)) throw ParameterError("grid step must be > 0 nm");
  if (!(stop_nm >= start_nm)) throw ParameterError("grid stop must be >= start");
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((stop_nm - start_nm) / step_nm + 1e-9));
  grid.reserve(static_cast<std::size_t>(n + 1));
  for (long k = 0; k <= n; ++k) grid.push_back(start_nm + static_cast<double>(k) * step_nm);
  return grid;
}

void write_sweep_csv(std::ostream& out, const std::vector<RatePrediction>& rows) {
  out << "lambda_nm,S_i,S_s,C_max,C_min,V,SNR\n";
  const auto old_precision = out.precision(12);
  for (const auto& r : rows) {
    out << r.wavelength_nm << ',' << r.singles_idler << ',' << r.singles_signal << ','
        << r.c_max << ',' << r.c_min << ',' << r.visibility << ',';
    if (r.snr_saturated) {
      out << "inf";
    } else {
      out << r.snr;
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace coexist::link_model
