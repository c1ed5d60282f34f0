#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "coexist/spectra.hpp"

namespace coexist::link_model {

enum class Arm { Signal, Idler };

/// Inputs of the singles/coincidence model. Probabilities are per pulse and
/// already include the temporal filtering of the coincidence window and any
/// analyzer losses on the noise (they are post-analyzer values).
struct LinkParams {
  double mu = 0.0;                  ///< mean pair number per pulse
  double eta_idler_ref = 0.0;       ///< idler end-to-end efficiency
  double eta_signal_ref = 0.0;      ///< signal end-to-end efficiency at the reference wavelength
  double dark_idler = 0.0;          ///< per-pulse dark probability, idler detector
  double dark_signal = 0.0;         ///< per-pulse dark probability, signal detector
  double sprs_idler = 0.0;          ///< idler-path SpRS, 0 when only the signal shares the fiber
  double sprs_signal_ref = 0.0;     ///< signal-path SpRS at the reference wavelength
  double window_ps = 300.0;
  double rep_rate_hz = 500e6;
  double reference_nm = 1290.0;

  void validate() const;
};

struct RatePrediction {
  double wavelength_nm = 0.0;
  double singles_idler = 0.0;
  double singles_signal = 0.0;
  double c_max = 0.0;
  double c_min = 0.0;
  double visibility = 0.0;
  double snr = 0.0;
  bool snr_saturated = false;
};

/// eta_arm(lambda). The signal arm follows the fiber loss curve relative to
/// the reference wavelength; the idler stays on a short local path whose loss
/// does not depend on wavelength.
double arm_efficiency(const LinkParams& p, Arm arm, double transmission);

/// S = mu * eta + N_dark + N_sprs. Throws ModelValidityError above 1, warns
/// above 0.1.
double singles(const LinkParams& p, Arm arm, double transmission, double sprs_per_pulse);
double singles(const LinkParams& p, Arm arm, double wavelength_nm,
               const spectra::Spectrum& loss, double sprs_per_pulse);

struct CoincidenceExtrema {
  double c_max;
  double c_min;
};

CoincidenceExtrema coincidence_extrema(double mu, double eta_idler, double eta_signal,
                                       double singles_idler, double singles_signal);

/// (c_max - c_min) / (c_max + c_min). Swapped arguments give the negated
/// value. Throws UndefinedVisibilityError when both are zero.
double visibility(double c_max, double c_min);

struct SnrValue {
  double value;
  bool saturated;  ///< noise at the evaluated wavelength is zero
};

/// SNR(lambda) = anchor * [eta_s(lambda)/eta_s(ref)] * [N(ref)/N(lambda)]
/// with N the signal-arm noise probability (dark + SpRS).
SnrValue snr(double anchor, double transmission, double noise_ref, double noise_at);

/// Noise-side inputs for a wavelength sweep. Without SpRS scaling the fiber is
/// dark and `LinkParams::sprs_signal_ref` is used as a wavelength-flat term.
struct SweepInputs {
  LinkParams params;
  spectra::Spectrum loss;                     ///< total dB over the link
  std::optional<spectra::SprsScaling> sprs;   ///< absent for dark fiber
  double analyzer_noise_fraction = 0.5;       ///< share of unpolarized SpRS passing the analyzer
  double snr_anchor = 1.0;
};

/// Per-pulse post-analyzer SpRS probability on the signal arm at `wavelength_nm`.
double signal_sprs_per_pulse(const SweepInputs& in, double wavelength_nm);

/// Single-wavelength evaluation chaining loss, SpRS, singles, coincidences,
/// visibility and SNR.
RatePrediction predict(const SweepInputs& in, double wavelength_nm);

std::vector<RatePrediction> sweep(const SweepInputs& in, const std::vector<double>& grid_nm);

/// Inclusive grid `start, start+step, ...` up to `stop` (with a 1e-9 slack).
std::vector<double> wavelength_grid(double start_nm, double stop_nm, double step_nm);

void write_sweep_csv(std::ostream& out, const std::vector<RatePrediction>& rows);

}  // namespace coexist::link_model
