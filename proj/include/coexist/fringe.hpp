#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "coexist/quantum_state.hpp"

namespace coexist::quantum {

/// Expected two-photon interference curve: local HWP swept over `hwp_grid_deg`
/// (QWP at 0), remote analyzer fixed to `remote_basis`. Each point carries
/// rate_scale * P(coincidence) + noise_floor, rounded to whole counts.
std::vector<CountRecord> fringe(const TwoQubitState<double>& rho, Basis remote_basis,
                                const std::vector<double>& hwp_grid_deg, double rate_scale,
                                double noise_floor, double seconds = 1.0);

/// Unrounded expected counts for the same sweep.
std::vector<double> fringe_expected(const TwoQubitState<double>& rho, Basis remote_basis,
                                    const std::vector<double>& hwp_grid_deg, double rate_scale,
                                    double noise_floor);

struct FringeFit {
  double offset = 0.0;      ///< mean level of the fitted sinusoid
  double amplitude = 0.0;   ///< half peak-to-peak
  double phase_deg = 0.0;   ///< HWP angle of the maximum
  double period_deg = 90.0;
  double c_max = 0.0;
  double c_min = 0.0;       ///< clipped at 0
  double visibility = 0.0;
  double residual = 0.0;    ///< weighted sum of squared residuals
};

/// Least-squares fit of counts(theta) = a + b cos(2 pi theta / P) + c sin(...)
/// to (HWP angle, counts/second) points. With `poisson_weights` each point is
/// weighted by 1/max(counts, 1). Needs at least 3 points.
FringeFit fit_fringe(const std::vector<double>& hwp_deg, const std::vector<double>& rates,
                     double period_deg = 90.0, bool poisson_weights = true);

/// Fit over the local HWP angles and rates (counts / seconds) of a record list.
FringeFit fit_fringe(const std::vector<CountRecord>& records, double period_deg = 90.0);

double fringe_visibility(const std::vector<CountRecord>& records);

struct McEstimate {
  double point = 0.0;   ///< quantity evaluated on the observed records
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t replicas = 0;
};

using DerivedQuantity = std::function<double(const std::vector<CountRecord>&)>;

/// Poisson bootstrap: every replica redraws each count as Poisson(observed),
/// re-evaluates `derived`, and the sample mean and standard deviation are
/// reported. Replica k draws from its own stream seeded by (seed, k).
McEstimate monte_carlo_errors(const std::vector<CountRecord>& records, std::size_t n_replicas,
                              std::uint64_t seed, const DerivedQuantity& derived);

/// Poisson-distributed counts around each expected value.
std::vector<CountRecord> poisson_sample(const std::vector<SettingPair>& settings,
                                        const std::vector<double>& expected, double seconds,
                                        std::uint64_t seed);

}  // namespace coexist::quantum
