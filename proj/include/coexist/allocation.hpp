#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "coexist/link_model.hpp"

namespace coexist::allocation {

enum class Objective { Visibility, Snr };

std::string_view to_string(Objective o);
Objective parse_objective(std::string_view token);

struct AllocationRequest {
  double band_lo_nm = 1260.0;
  double band_hi_nm = 1360.0;
  double step_nm = 2.0;
  Objective objective = Objective::Visibility;
  std::vector<std::pair<double, double>> exclusions;   ///< closed intervals, nm
  double min_guard_ghz = 0.0;   ///< distance from any classical carrier or band edge

  void validate() const;
};

struct Candidate {
  double wavelength_nm = 0.0;
  double visibility = 0.0;
  double snr = 0.0;
  bool snr_saturated = false;
  double loss_db = 0.0;
  double sprs_cps = 0.0;   ///< detected SpRS ahead of the analyzer, 0 for dark fiber
};

struct AllocationReport {
  Objective objective = Objective::Visibility;
  std::vector<Candidate> ranked;   ///< best first
  double chosen_nm = 0.0;
};

/// Optical frequency in GHz.
double frequency_ghz(double wavelength_nm);

/// Candidate grid with exclusions and carrier guard bands removed, in
/// ascending wavelength. Throws InfeasibleError naming every constraint that
/// removed candidates when nothing survives.
std::vector<double> feasible_grid(const AllocationRequest& req,
                                  const link_model::SweepInputs& inputs);

/// Evaluates the link model on the feasible grid and ranks by the objective.
/// Ties go to the lower SpRS rate, then the shorter wavelength.
AllocationReport allocate(const AllocationRequest& req, const link_model::SweepInputs& inputs);

struct PairOptions {
  /// When false the idler stays at the source node and only the signal
  /// wavelength sees the fiber; the joint objective then reduces to the
  /// signal arm's value.
  bool idler_in_fiber = false;
};

struct PairChoice {
  double signal_nm = 0.0;
  double idler_nm = 0.0;
  double objective_value = 0.0;
  double mismatch_ghz = 0.0;   ///< |nu_s + nu_i - 2 nu_p|
};

struct PairReport {
  Objective objective = Objective::Visibility;
  double pump_nm = 0.0;
  std::vector<PairChoice> ranked;
  PairChoice chosen;
};

/// Energy-conserving pair around `pump_nm` (1/l_s + 1/l_i = 2/l_p within one
/// grid step in frequency) maximizing min of arm visibilities or the product
/// of arm SNRs.
PairReport pair_allocate(const AllocationRequest& req, const link_model::SweepInputs& inputs,
                         double pump_nm, const PairOptions& opt = {});

std::string report_json(const AllocationReport& r);
std::string report_json(const PairReport& r);
void write_report_table(std::ostream& out, const AllocationReport& r);
void write_report_table(std::ostream& out, const PairReport& r);

}  // namespace coexist::allocation
