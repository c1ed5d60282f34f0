#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

#include "coexist/quantum_state.hpp"
#include "json.hpp"

namespace coexist::quantum {

/// {"basis": ["HH","HV","VH","VV"], "real": [[...]x4], "imag": [[...]x4]}
nlohmann::json to_json(const TwoQubitState<double>& rho);
/// Validates shape, basis labels and the density-matrix invariants.
TwoQubitState<double> state_from_json(const nlohmann::json& j);

/// CSV columns: local_qwp_deg,local_hwp_deg,local_port,remote_qwp_deg,
/// remote_hwp_deg,remote_port,counts,seconds. Ports are `T` or `R`.
void write_count_records_csv(std::ostream& out, const std::vector<CountRecord>& records);
std::vector<CountRecord> read_count_records_csv(std::istream& in,
                                                std::string_view source_name = "<stream>");

}  // namespace coexist::quantum
