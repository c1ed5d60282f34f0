#include "coexist/fringe.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "coexist/rng.hpp"

namespace coexist::quantum {
namespace {

std::uint64_t draw_poisson(std::mt19937_64& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(rng);
}

}  // namespace

std::vector<double> fringe_expected(const TwoQubitState<double>& rho, Basis remote_basis,
                                    const std::vector<double>& hwp_grid_deg, double rate_scale,
                                    double noise_floor) {
  if (hwp_grid_deg.empty()) throw ParameterError("fringe grid is empty");
  if (!(rate_scale >= 0.0) || !(noise_floor >= 0.0)) {
    throw ParameterError("fringe rate scale and noise floor must be >= 0");
  }
  const AnalyzerSetting remote = analyzer_for(remote_basis);
  std::vector<double> out;
  out.reserve(hwp_grid_deg.size());
  for (double theta : hwp_grid_deg) {
    const AnalyzerSetting local(0.0, theta);
    out.push_back(rate_scale * coincidence_probability(rho, local, remote) + noise_floor);
  }
  return out;
}

std::vector<CountRecord> fringe(const TwoQubitState<double>& rho, Basis remote_basis,
                                const std::vector<double>& hwp_grid_deg, double rate_scale,
                                double noise_floor, double seconds) {
  if (!(seconds > 0.0)) throw ParameterError("fringe accumulation time must be > 0 s");
  const auto expected = fringe_expected(rho, remote_basis, hwp_grid_deg, rate_scale, noise_floor);
  const AnalyzerSetting remote = analyzer_for(remote_basis);
  std::vector<CountRecord> out;
  out.reserve(expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CountRecord rec;
    rec.setting = {AnalyzerSetting(0.0, hwp_grid_deg[i]), remote};
    rec.counts = static_cast<std::uint64_t>(std::llround(expected[i] * seconds));
    rec.seconds = seconds;
    out.push_back(rec);
  }
  return out;
}

namespace {

// Rows are scaled by 1/sigma_i.
FringeFit fit_weighted(const std::vector<double>& hwp_deg, const std::vector<double>& rates,
                       const std::vector<double>& sigma, double period_deg) {
  if (hwp_deg.size() != rates.size()) throw ParameterError("fringe angle/rate size mismatch");
  if (hwp_deg.size() < 3) throw EstimationError("fringe fit needs at least 3 points");
  if (!(period_deg > 0.0)) throw ParameterError("fringe period must be > 0");

  const auto n = static_cast<Eigen::Index>(hwp_deg.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd y(n);
  Eigen::VectorXd w(n);
  const double k = 2.0 * std::numbers::pi / period_deg;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double th = hwp_deg[static_cast<std::size_t>(i)];
    const double r = rates[static_cast<std::size_t>(i)];
    w(i) = 1.0 / sigma[static_cast<std::size_t>(i)];
    a(i, 0) = w(i);
    a(i, 1) = w(i) * std::cos(k * th);
    a(i, 2) = w(i) * std::sin(k * th);
    y(i) = w(i) * r;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 3) throw EstimationError("fringe angles do not constrain a sinusoid");
  const Eigen::Vector3d c = qr.solve(y);

  FringeFit fit;
  fit.period_deg = period_deg;
  fit.offset = c(0);
  fit.amplitude = std::hypot(c(1), c(2));
  fit.phase_deg = std::atan2(c(2), c(1)) / k;
  fit.c_max = fit.offset + fit.amplitude;
  fit.c_min = std::max(0.0, fit.offset - fit.amplitude);
  fit.residual = (a * c - y).squaredNorm();
  if (!(fit.c_max > 0.0)) throw EstimationError("fringe fit has no positive maximum");
  fit.visibility = (fit.c_max - fit.c_min) / (fit.c_max + fit.c_min);
  return fit;
}

}  // namespace

FringeFit fit_fringe(const std::vector<double>& hwp_deg, const std::vector<double>& rates,
                     double period_deg, bool poisson_weights) {
  std::vector<double> sigma(rates.size(), 1.0);
  if (poisson_weights) {
    for (std::size_t i = 0; i < rates.size(); ++i) sigma[i] = std::sqrt(std::max(rates[i], 1.0));
  }
  return fit_weighted(hwp_deg, rates, sigma, period_deg);
}

FringeFit fit_fringe(const std::vector<CountRecord>& records, double period_deg) {
  std::vector<double> angles;
  std::vector<double> rates;
  std::vector<double> sigma;
  for (const auto& r : records) {
    if (!(r.seconds > 0.0)) throw ParameterError("count record with non-positive time");
    angles.push_back(r.setting.local.hwp_deg);
    rates.push_back(static_cast<double>(r.counts) / r.seconds);
    // Poisson error of the rate, floored at one count.
    sigma.push_back(std::sqrt(std::max(static_cast<double>(r.counts), 1.0)) / r.seconds);
  }
  return fit_weighted(angles, rates, sigma, period_deg);
}

double fringe_visibility(const std::vector<CountRecord>& records) {
  return fit_fringe(records).visibility;
}

McEstimate monte_carlo_errors(const std::vector<CountRecord>& records, std::size_t n_replicas,
                              std::uint64_t seed, const DerivedQuantity& derived) {
  if (n_replicas < 100) {
    throw ParameterError("Monte Carlo error estimation needs at least 100 replicas, got " +
                         std::to_string(n_replicas));
  }
  McEstimate est;
  est.point = derived(records);
  est.replicas = n_replicas;
  std::vector<double> values(n_replicas);
  std::vector<CountRecord> replica = records;
  for (std::size_t k = 0; k < n_replicas; ++k) {
    auto rng = make_engine(seed, k);
    for (std::size_t i = 0; i < records.size(); ++i) {
      replica[i].counts = draw_poisson(rng, static_cast<double>(records[i].counts));
    }
    values[k] = derived(replica);
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  est.mean = sum / static_cast<double>(n_replicas);
  double ss = 0.0;
  for (double v : values) ss += (v - est.mean) * (v - est.mean);
  est.stddev = std::sqrt(ss / static_cast<double>(n_replicas - 1));
  return est;
}

std::vector<CountRecord> poisson_sample(const std::vector<SettingPair>& settings,
                                        const std::vector<double>& expected, double seconds,
                                        std::uint64_t seed) {
  if (settings.size() != expected.size()) {
    throw ParameterError("settings and expected counts differ in length");
  }
  auto rng = make_engine(seed, ~std::uint64_t{0});
  std::vector<CountRecord> out;
  out.reserve(settings.size());
  for (std::size_t i = 0; i < settings.size(); ++i) {
    out.push_back({settings[i], draw_poisson(rng, expected[i]), seconds});
  }
  return out;
}

}  // namespace coexist::quantum
