#include "coexist/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "coexist/error.hpp"

namespace coexist::allocation {
namespace {

constexpr double kSpeedOfLightNmGhz = 299792458.0;   // nu[GHz] = c / lambda[nm]

double objective_value(Objective o, const Candidate& c) {
  return o == Objective::Visibility ? c.visibility : c.snr;
}

// a ranks strictly above b
bool better(double va, double vb, double sprs_a, double sprs_b, double nm_a, double nm_b) {
  const double scale = std::max({std::abs(va), std::abs(vb), 1e-300});
  if (std::isfinite(va) && std::isfinite(vb) && std::abs(va - vb) > 1e-12 * scale) return va > vb;
  if (va != vb && !(std::isfinite(va) && std::isfinite(vb))) return va > vb;
  if (sprs_a != sprs_b) return sprs_a < sprs_b;
  return nm_a < nm_b;
}

Candidate evaluate(const link_model::SweepInputs& in, double nm) {
  const auto p = link_model::predict(in, nm);
  Candidate c;
  c.wavelength_nm = nm;
  c.visibility = p.visibility;
  c.snr = p.snr;
  c.snr_saturated = p.snr_saturated;
  c.loss_db = in.loss.at(nm);
  c.sprs_cps = in.sprs ? in.sprs->rate_cps(nm) : 0.0;
  return c;
}

std::string fmt_interval(double a, double b) {
  std::ostringstream os;
  os << '[' << a << ", " << b << "] nm";
  return os.str();
}

nlohmann::json candidate_json(const Candidate& c) {
  nlohmann::json j{{"wavelength_nm", c.wavelength_nm}, {"visibility", c.visibility},
                   {"loss_db", c.loss_db}, {"sprs_cps", c.sprs_cps}};
  if (c.snr_saturated) {
    j["snr"] = "inf";
  } else {
    j["snr"] = c.snr;
  }
  return j;
}

}  // namespace

std::string_view to_string(Objective o) {
  return o == Objective::Visibility ? "visibility" : "snr";
}

Objective parse_objective(std::string_view token) {
  if (token == "visibility") return Objective::Visibility;
  if (token == "snr") return Objective::Snr;
  throw ParameterError("unknown objective '" + std::string(token) + "' (visibility|snr)");
}

void AllocationRequest::validate() const {
  if (!(band_hi_nm >= band_lo_nm)) throw ParameterError("allocation band is not ordered");
  if (!(step_nm > 0.0)) throw ParameterError("allocation step must be > 0 nm");
  if (!(band_lo_nm > 0.0)) throw ParameterError("allocation band must be positive");
  if (!(min_guard_ghz >= 0.0)) throw ParameterError("guard band must be >= 0 GHz");
  for (const auto& [a, b] : exclusions) {
    if (!(b >= a)) throw ParameterError("exclusion " + fmt_interval(a, b) + " is not ordered");
    if (!(a >= 800.0 && b <= 1800.0)) {
      throw ParameterError("exclusion " + fmt_interval(a, b) + " lies outside the 800-1800 nm fiber window");
    }
  }
}

double frequency_ghz(double wavelength_nm) { return kSpeedOfLightNmGhz / wavelength_nm; }

std::vector<double> feasible_grid(const AllocationRequest& req,
                                  const link_model::SweepInputs& inputs) {
  req.validate();
  const auto grid = link_model::wavelength_grid(req.band_lo_nm, req.band_hi_nm, req.step_nm);

  std::vector<std::size_t> removed_by_exclusion(req.exclusions.size(), 0);
  std::size_t removed_by_band = 0;
  std::size_t removed_by_guard = 0;
  std::vector<double> out;
  for (double nm : grid) {
    bool drop = false;
    for (std::size_t k = 0; k < req.exclusions.size(); ++k) {
      if (nm >= req.exclusions[k].first && nm <= req.exclusions[k].second) {
        ++removed_by_exclusion[k];
        drop = true;
      }
    }
    if (inputs.sprs) {
      const auto& plan = inputs.sprs->plan;
      const auto [span_lo, span_hi] = plan.band_span_nm;
      const double nu = frequency_ghz(nm);
      if (span_hi > span_lo) {
        if (nm >= span_lo && nm <= span_hi) {
          ++removed_by_band;
          drop = true;
        } else {
          const double edge = nm < span_lo ? span_lo : span_hi;
          if (std::abs(nu - frequency_ghz(edge)) < req.min_guard_ghz) {
            ++removed_by_guard;
            drop = true;
          }
        }
      }
      for (const auto& carrier : plan.extra_channels) {
        if (std::abs(nu - frequency_ghz(carrier.wavelength_nm)) < req.min_guard_ghz ||
            nm == carrier.wavelength_nm) {
          ++removed_by_guard;
          drop = true;
        }
      }
    }
    if (!drop) out.push_back(nm);
  }
  if (out.empty()) {
    std::ostringstream os;
    os << "no feasible quantum channel: band " << fmt_interval(req.band_lo_nm, req.band_hi_nm)
       << " step " << req.step_nm << " nm gives " << grid.size() << " candidates";
    for (std::size_t k = 0; k < req.exclusions.size(); ++k) {
      if (removed_by_exclusion[k] > 0) {
        os << "; exclusion " << fmt_interval(req.exclusions[k].first, req.exclusions[k].second)
           << " removes " << removed_by_exclusion[k];
      }
    }
    if (removed_by_band > 0) os << "; classical band span removes " << removed_by_band;
    if (removed_by_guard > 0) {
      os << "; " << req.min_guard_ghz << " GHz carrier guard removes " << removed_by_guard;
    }
    throw InfeasibleError(os.str());
  }
  return out;
}

AllocationReport allocate(const AllocationRequest& req, const link_model::SweepInputs& inputs) {
  inputs.params.validate();
  const auto grid = feasible_grid(req, inputs);
  AllocationReport r;
  r.objective = req.objective;
  r.ranked.reserve(grid.size());
  for (double nm : grid) r.ranked.push_back(evaluate(inputs, nm));
  std::stable_sort(r.ranked.begin(), r.ranked.end(), [&](const Candidate& a, const Candidate& b) {
    return better(objective_value(req.objective, a), objective_value(req.objective, b),
                  a.sprs_cps, b.sprs_cps, a.wavelength_nm, b.wavelength_nm);
  });
  r.chosen_nm = r.ranked.front().wavelength_nm;
  return r;
}

PairReport pair_allocate(const AllocationRequest& req, const link_model::SweepInputs& inputs,
                         double pump_nm, const PairOptions& opt) {
  if (!(pump_nm > 0.0)) throw ParameterError("pump wavelength must be > 0 nm");
  inputs.params.validate();
  const auto grid = feasible_grid(req, inputs);
  std::vector<Candidate> evaluated;
  evaluated.reserve(grid.size());
  for (double nm : grid) evaluated.push_back(evaluate(inputs, nm));

  const double nu_pump = frequency_ghz(pump_nm);
  PairReport r;
  r.objective = req.objective;
  r.pump_nm = pump_nm;
  std::vector<double> sprs_of_signal;
  for (const auto& s : evaluated) {
    const double detune = frequency_ghz(s.wavelength_nm) - nu_pump;
    if (detune == 0.0) continue;   // degenerate pair: signal and idler not separable
    const double nu_conj = nu_pump - detune;
    if (!(nu_conj > 0.0)) continue;
    const double conj_nm = kSpeedOfLightNmGhz / nu_conj;
    const double tol = kSpeedOfLightNmGhz * req.step_nm / (conj_nm * conj_nm) * (1.0 + 1e-9);
    const Candidate* best = nullptr;
    double best_dist = tol;
    for (const auto& i : evaluated) {
      // The partner sits on the other side of the pump.
      if ((frequency_ghz(i.wavelength_nm) - nu_pump) * detune >= 0.0) continue;
      const double dist = std::abs(frequency_ghz(i.wavelength_nm) - nu_conj);
      if (dist <= best_dist) {
        if (best == nullptr || dist < best_dist) best = &i;
        best_dist = dist;
      }
    }
    if (best == nullptr) continue;
    PairChoice c;
    c.signal_nm = s.wavelength_nm;
    c.idler_nm = best->wavelength_nm;
    c.mismatch_ghz = best_dist;
    if (req.objective == Objective::Visibility) {
      c.objective_value = opt.idler_in_fiber ? std::min(s.visibility, best->visibility)
                                             : s.visibility;
    } else {
      c.objective_value = opt.idler_in_fiber ? s.snr * best->snr : s.snr;
    }
    r.ranked.push_back(c);
    sprs_of_signal.push_back(s.sprs_cps);
  }
  if (r.ranked.empty()) {
    std::ostringstream os;
    os << "no energy-conserving pair around the " << pump_nm << " nm pump among "
       << grid.size() << " feasible candidates in "
       << fmt_interval(req.band_lo_nm, req.band_hi_nm);
    throw InfeasibleError(os.str());
  }
  std::vector<std::size_t> order(r.ranked.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return better(r.ranked[a].objective_value, r.ranked[b].objective_value, sprs_of_signal[a],
                  sprs_of_signal[b], r.ranked[a].signal_nm, r.ranked[b].signal_nm);
  });
  std::vector<PairChoice> sorted;
  sorted.reserve(order.size());
  for (auto k : order) sorted.push_back(r.ranked[k]);
  r.ranked = std::move(sorted);
  r.chosen = r.ranked.front();
  return r;
}

std::string report_json(const AllocationReport& r) {
  nlohmann::json j;
  j["objective"] = std::string(to_string(r.objective));
  j["chosen_nm"] = r.chosen_nm;
  j["ranked"] = nlohmann::json::array();
  for (const auto& c : r.ranked) j["ranked"].push_back(candidate_json(c));
  return j.dump(2);
}

std::string report_json(const PairReport& r) {
  auto pair = [](const PairChoice& c) {
    return nlohmann::json{{"signal_nm", c.signal_nm}, {"idler_nm", c.idler_nm},
                          {"objective_value", c.objective_value},
                          {"mismatch_ghz", c.mismatch_ghz}};
  };
  nlohmann::json j;
  j["objective"] = std::string(to_string(r.objective));
  j["pump_nm"] = r.pump_nm;
  j["chosen"] = pair(r.chosen);
  j["ranked"] = nlohmann::json::array();
  for (const auto& c : r.ranked) j["ranked"].push_back(pair(c));
  return j.dump(2);
}

void write_report_table(std::ostream& out, const AllocationReport& r) {
  out << "objective: " << to_string(r.objective) << "   chosen: " << r.chosen_nm << " nm\n";
  out << std::setw(5) << "rank" << std::setw(10) << "nm" << std::setw(12) << "V"
      << std::setw(12) << "SNR" << std::setw(10) << "loss_dB" << std::setw(12) << "SpRS_cps"
      << '\n';
  std::size_t rank = 1;
  for (const auto& c : r.ranked) {
    out << std::setw(5) << rank++ << std::setw(10) << std::fixed << std::setprecision(1)
        << c.wavelength_nm << std::setw(12) << std::setprecision(5) << c.visibility
        << std::setw(12);
    if (c.snr_saturated) {
      out << "inf";
    } else {
      out << std::setprecision(3) << c.snr;
    }
    out << std::setw(10) << std::setprecision(2) << c.loss_db << std::setw(12)
        << std::setprecision(1) << c.sprs_cps << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

void write_report_table(std::ostream& out, const PairReport& r) {
  out << "objective: " << to_string(r.objective) << "   pump: " << r.pump_nm
      << " nm   chosen: (" << r.chosen.signal_nm << ", " << r.chosen.idler_nm << ") nm\n";
  out << std::setw(5) << "rank" << std::setw(10) << "signal" << std::setw(10) << "idler"
      << std::setw(12) << "objective" << std::setw(14) << "mismatch_GHz" << '\n';
  std::size_t rank = 1;
  for (const auto& c : r.ranked) {
    out << std::setw(5) << rank++ << std::setw(10) << std::fixed << std::setprecision(1)
        << c.signal_nm << std::setw(10) << c.idler_nm << std::setw(12) << std::setprecision(5)
        << c.objective_value << std::setw(14) << std::setprecision(2) << c.mismatch_ghz << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

}  // namespace coexist::allocation
