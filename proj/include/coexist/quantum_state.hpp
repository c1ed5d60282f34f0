#pragma once

// Two-qubit polarization states and analyzer projections.
//
// Basis order is |HH>, |HV>, |VH>, |VV> with the first qubit the local
// (idler) photon and the second the remote (signal) photon.
//
// Analyzer convention: light crosses the half-wave plate, then the
// quarter-wave plate, then a polarizing beam splitter whose transmit port
// passes H. A retarder with fast axis at angle t and retardance d has Jones
// matrix R(t) diag(1, e^{i d}) R(-t). With the QWP at 0 the analyzer is a pure
// HWP rotation, so HWP angle h selects linear polarization at 2h.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "coexist/error.hpp"

namespace coexist::quantum {

template <typename Scalar>
using Complex = std::complex<Scalar>;
template <typename Scalar>
using Matrix2c = Eigen::Matrix<Complex<Scalar>, 2, 2>;
template <typename Scalar>
using Matrix4c = Eigen::Matrix<Complex<Scalar>, 4, 4>;
template <typename Scalar>
using Vector2c = Eigen::Matrix<Complex<Scalar>, 2, 1>;
template <typename Scalar>
using Vector4c = Eigen::Matrix<Complex<Scalar>, 4, 1>;

template <typename Scalar>
struct Tolerance {
  static constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
  static constexpr Scalar hermitian = std::max(Scalar(1e-12), Scalar(100) * eps);
  static constexpr Scalar trace = std::max(Scalar(1e-12), Scalar(100) * eps);
  static constexpr Scalar psd = std::max(Scalar(1e-10), Scalar(1000) * eps);
};

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 4, 4> kron(const Eigen::MatrixBase<Derived>& a,
                                                   const Eigen::MatrixBase<Derived>& b) {
  Eigen::Matrix<typename Derived::Scalar, 4, 4> out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.template block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

/// Smallest eigenvalue of a Hermitian matrix (only the lower triangle is read).
template <typename Scalar>
Scalar min_eigenvalue(const Matrix4c<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix4c<Scalar>> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// 4x4 density matrix satisfying Hermiticity, unit trace and positive
/// semidefiniteness. The constructor enforces all three.
template <typename Scalar = double>
class TwoQubitState {
public:
  using Matrix = Matrix4c<Scalar>;

  explicit TwoQubitState(const Matrix& rho) : rho_(rho) { check(rho_); }

  const Matrix& matrix() const noexcept { return rho_; }
  Complex<Scalar> operator()(int r, int c) const { return rho_(r, c); }

  Scalar trace() const { return rho_.trace().real(); }
  Scalar purity() const { return (rho_ * rho_).trace().real(); }

  static void check(const Matrix& m) {
    using T = Tolerance<Scalar>;
    if (!m.allFinite()) throw InvariantError("density matrix has non-finite entries");
    const Scalar herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > T::hermitian) {
      std::ostringstream os;
      os << "density matrix is not Hermitian (max |rho - rho^dagger| = " << herm << ")";
      throw InvariantError(os.str());
    }
    const Complex<Scalar> tr = m.trace();
    if (std::abs(tr - Complex<Scalar>(1)) > T::trace) {
      std::ostringstream os;
      os << "density matrix trace is " << tr << ", expected 1";
      throw InvariantError(os.str());
    }
    const Scalar lowest = min_eigenvalue<Scalar>(m);
    if (lowest < -T::psd) {
      std::ostringstream os;
      os << "density matrix is not positive semidefinite (min eigenvalue " << lowest << ")";
      throw InvariantError(os.str());
    }
  }

private:
  Matrix rho_;
};

template <typename Scalar = double>
TwoQubitState<Scalar> pure_state(const Vector4c<Scalar>& psi) {
  const Vector4c<Scalar> n = psi.normalized();
  return TwoQubitState<Scalar>(n * n.adjoint());
}

/// (|HH> + |VV>)/sqrt(2).
template <typename Scalar = double>
Vector4c<Scalar> phi_plus_vector() {
  const Scalar s = Scalar(1) / std::sqrt(Scalar(2));
  Vector4c<Scalar> v;
  v << s, 0, 0, s;
  return v;
}

template <typename Scalar = double>
TwoQubitState<Scalar> bell_phi_plus() {
  return pure_state<Scalar>(phi_plus_vector<Scalar>());
}

template <typename Scalar = double>
TwoQubitState<Scalar> maximally_mixed() {
  return TwoQubitState<Scalar>(Matrix4c<Scalar>::Identity() / Scalar(4));
}

/// p*rho + (1-p)*I/4: isotropic (unpolarized) noise affecting every
/// measurement basis equally.
template <typename Scalar>
TwoQubitState<Scalar> mix_unpolarized_noise(const TwoQubitState<Scalar>& rho, Scalar p) {
  if (!(p >= Scalar(0) && p <= Scalar(1))) {
    std::ostringstream os;
    os << "noise mixing weight p = " << p << " is outside [0, 1]";
    throw ParameterError(os.str());
  }
  return TwoQubitState<Scalar>(p * rho.matrix() +
                               (Scalar(1) - p) * Matrix4c<Scalar>::Identity() / Scalar(4));
}

template <typename Scalar = double>
TwoQubitState<Scalar> werner_phi_plus(Scalar p) {
  return mix_unpolarized_noise(bell_phi_plus<Scalar>(), p);
}

/// U_local (x) U_remote applied to rho.
template <typename Scalar>
TwoQubitState<Scalar> apply_local_unitaries(const TwoQubitState<Scalar>& rho,
                                            const Matrix2c<Scalar>& u_local,
                                            const Matrix2c<Scalar>& u_remote) {
  const Matrix4c<Scalar> u = kron(u_local, u_remote);
  Matrix4c<Scalar> out = u * rho.matrix() * u.adjoint();
  out = (out + out.adjoint()).eval() / Scalar(2);
  return TwoQubitState<Scalar>(out);
}

/// Real rotation of the polarization plane by `angle_deg`.
template <typename Scalar = double>
Matrix2c<Scalar> polarization_rotation(Scalar angle_deg) {
  const Scalar a = angle_deg * std::numbers::pi_v<Scalar> / Scalar(180);
  Matrix2c<Scalar> r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

// ---------------------------------------------------------------------------
// Analyzers

enum class Port : std::uint8_t { Transmit, Reflect };

/// Wave-plate angles in degrees, canonicalized into [0, 180).
struct AnalyzerSetting {
  double qwp_deg = 0.0;
  double hwp_deg = 0.0;
  Port port = Port::Transmit;

  AnalyzerSetting() = default;
  AnalyzerSetting(double qwp, double hwp, Port p = Port::Transmit)
      : qwp_deg(canonical_angle(qwp)), hwp_deg(canonical_angle(hwp)), port(p) {}

  static double canonical_angle(double deg) {
    if (!std::isfinite(deg)) throw ParameterError("wave-plate angle must be finite");
    double a = std::fmod(deg, 180.0);
    if (a < 0.0) a += 180.0;
    if (a >= 180.0) a -= 180.0;
    return a;
  }

  AnalyzerSetting complement() const {
    return {qwp_deg, hwp_deg, port == Port::Transmit ? Port::Reflect : Port::Transmit};
  }

  friend bool operator==(const AnalyzerSetting&, const AnalyzerSetting&) = default;
};

enum class Basis : std::uint8_t { H, V, D, A, R, L };

/// Transmit-port setting that projects onto the given polarization.
inline AnalyzerSetting analyzer_for(Basis b) {
  switch (b) {
    case Basis::H: return {0.0, 0.0};
    case Basis::V: return {0.0, 45.0};
    case Basis::D: return {0.0, 22.5};
    case Basis::A: return {0.0, -22.5};
    case Basis::R: return {-45.0, 0.0};
    case Basis::L: return {45.0, 0.0};
  }
  return {};
}

inline char basis_label(Basis b) {
  constexpr std::array<char, 6> labels{'H', 'V', 'D', 'A', 'R', 'L'};
  return labels[static_cast<std::size_t>(b)];
}

template <typename Scalar = double>
Matrix2c<Scalar> retarder(Scalar axis_deg, Scalar retardance_rad) {
  const Matrix2c<Scalar> r = polarization_rotation<Scalar>(axis_deg);
  Matrix2c<Scalar> d = Matrix2c<Scalar>::Zero();
  d(0, 0) = 1;
  d(1, 1) = std::polar(Scalar(1), retardance_rad);
  return r * d * r.transpose();
}

template <typename Scalar = double>
Matrix2c<Scalar> half_wave_plate(Scalar axis_deg) {
  return retarder<Scalar>(axis_deg, std::numbers::pi_v<Scalar>);
}

template <typename Scalar = double>
Matrix2c<Scalar> quarter_wave_plate(Scalar axis_deg) {
  return retarder<Scalar>(axis_deg, std::numbers::pi_v<Scalar> / Scalar(2));
}

/// Jones matrix of the wave-plate stack in front of the splitter.
template <typename Scalar = double>
Matrix2c<Scalar> analyzer_unitary(const AnalyzerSetting& a) {
  return quarter_wave_plate<Scalar>(static_cast<Scalar>(a.qwp_deg)) *
         half_wave_plate<Scalar>(static_cast<Scalar>(a.hwp_deg));
}

/// Rank-1 projector for detection at the chosen splitter port.
template <typename Scalar = double>
Matrix2c<Scalar> projector(const AnalyzerSetting& a) {
  const Matrix2c<Scalar> u = analyzer_unitary<Scalar>(a);
  const Vector2c<Scalar> state = u.adjoint().col(a.port == Port::Transmit ? 0 : 1);
  return state * state.adjoint();
}

template <typename Scalar>
Scalar coincidence_probability(const TwoQubitState<Scalar>& rho, const AnalyzerSetting& local,
                               const AnalyzerSetting& remote) {
  const Matrix4c<Scalar> m = kron(projector<Scalar>(local), projector<Scalar>(remote));
  const Scalar p = (rho.matrix() * m).trace().real();
  return std::clamp(p, Scalar(0), Scalar(1));
}

/// Probability that the local photon alone exits the selected port.
template <typename Scalar>
Scalar local_marginal(const TwoQubitState<Scalar>& rho, const AnalyzerSetting& local) {
  const Matrix4c<Scalar> m = kron(projector<Scalar>(local), Matrix2c<Scalar>::Identity().eval());
  return std::clamp((rho.matrix() * m).trace().real(), Scalar(0), Scalar(1));
}

template <typename Scalar>
Scalar remote_marginal(const TwoQubitState<Scalar>& rho, const AnalyzerSetting& remote) {
  const Matrix4c<Scalar> m = kron(Matrix2c<Scalar>::Identity().eval(), projector<Scalar>(remote));
  return std::clamp((rho.matrix() * m).trace().real(), Scalar(0), Scalar(1));
}

// ---------------------------------------------------------------------------
// Fidelity

template <typename Scalar>
Matrix4c<Scalar> psd_sqrt(const Matrix4c<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix4c<Scalar>> es(m);
  const Eigen::Matrix<Scalar, 4, 1> roots = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return es.eigenvectors() * roots.template cast<Complex<Scalar>>().asDiagonal() *
         es.eigenvectors().adjoint();
}

/// Uhlmann fidelity [tr sqrt(sqrt(rho) sigma sqrt(rho))]^2.
template <typename Scalar>
Scalar fidelity(const TwoQubitState<Scalar>& rho, const TwoQubitState<Scalar>& sigma) {
  const Matrix4c<Scalar> root = psd_sqrt<Scalar>(rho.matrix());
  Matrix4c<Scalar> inner = root * sigma.matrix() * root;
  inner = (inner + inner.adjoint()).eval() / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix4c<Scalar>> es(inner, Eigen::EigenvaluesOnly);
  const Scalar f = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt().sum();
  return std::clamp(f * f, Scalar(0), Scalar(1));
}

/// <psi|sigma|psi> for a normalized pure state.
template <typename Scalar>
Scalar fidelity_to_pure(const Vector4c<Scalar>& psi, const TwoQubitState<Scalar>& sigma) {
  const Vector4c<Scalar> n = psi.normalized();
  return std::clamp((n.adjoint() * sigma.matrix() * n)(0, 0).real(), Scalar(0), Scalar(1));
}

// ---------------------------------------------------------------------------
// Tomography

struct SettingPair {
  AnalyzerSetting local;
  AnalyzerSetting remote;
  friend bool operator==(const SettingPair&, const SettingPair&) = default;
};

/// Coincidence counts accumulated over `seconds` at one analyzer pair.
struct CountRecord {
  SettingPair setting;
  std::uint64_t counts = 0;
  double seconds = 1.0;
};

/// The 16 transmit-port setting pairs of the standard H/V/D/R x H/V/D/R
/// over-the-minimum construction: HH, HV, VV, VH, RH, RV, DV, DH, DR, DD,
/// RD, HD, VD, VL, HL, RL.
inline std::vector<SettingPair> canonical_tomography_settings() {
  using B = Basis;
  constexpr std::array<std::array<B, 2>, 16> order{{{B::H, B::H}, {B::H, B::V}, {B::V, B::V},
                                                    {B::V, B::H}, {B::R, B::H}, {B::R, B::V},
                                                    {B::D, B::V}, {B::D, B::H}, {B::D, B::R},
                                                    {B::D, B::D}, {B::R, B::D}, {B::H, B::D},
                                                    {B::V, B::D}, {B::V, B::L}, {B::H, B::L},
                                                    {B::R, B::L}}};
  std::vector<SettingPair> out;
  out.reserve(order.size());
  for (const auto& [l, r] : order) out.push_back({analyzer_for(l), analyzer_for(r)});
  return out;
}

/// Pauli products sigma_a (x) sigma_b, a, b in {I, X, Y, Z}, index 4a + b.
template <typename Scalar = double>
std::array<Matrix4c<Scalar>, 16> pauli_products() {
  using C = Complex<Scalar>;
  std::array<Matrix2c<Scalar>, 4> s;
  s[0] << C(1), C(0), C(0), C(1);
  s[1] << C(0), C(1), C(1), C(0);
  s[2] << C(0), C(0, -1), C(0, 1), C(0);
  s[3] << C(1), C(0), C(0), C(-1);
  std::array<Matrix4c<Scalar>, 16> out;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) out[4 * a + b] = kron(s[a], s[b]);
  return out;
}

/// Eigenvalue truncation to the PSD cone followed by trace renormalization.
template <typename Scalar>
TwoQubitState<Scalar> project_to_state(const Matrix4c<Scalar>& m) {
  Matrix4c<Scalar> h = (m + m.adjoint()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix4c<Scalar>> es(h);
  Eigen::Matrix<Scalar, 4, 1> ev = es.eigenvalues().cwiseMax(Scalar(0));
  const Scalar total = ev.sum();
  if (!(total > Scalar(0))) {
    throw DegenerateDataError("reconstructed matrix has no positive spectral weight");
  }
  ev /= total;
  Matrix4c<Scalar> rho =
      es.eigenvectors() * ev.template cast<Complex<Scalar>>().asDiagonal() *
      es.eigenvectors().adjoint();
  rho = (rho + rho.adjoint()).eval() / Scalar(2);
  return TwoQubitState<Scalar>(rho);
}

/// Linear inversion of coincidence rates over at least 16 informationally
/// complete setting pairs, then projection onto the nearest physical state.
template <typename Scalar = double>
TwoQubitState<Scalar> tomography_reconstruct(const std::vector<CountRecord>& records) {
  if (records.size() < 16) {
    throw ConfigError("tomography needs at least 16 setting pairs, got " +
                      std::to_string(records.size()));
  }
  using DynMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using DynVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto basis = pauli_products<Scalar>();
  const auto n = static_cast<Eigen::Index>(records.size());
  DynMat design(n, 16);
  DynVec rates(n);
  std::uint64_t total = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& rec = records[static_cast<std::size_t>(k)];
    if (!(rec.seconds > 0.0)) {
      throw ConfigError("tomography record " + std::to_string(k) +
                        " has non-positive accumulation time");
    }
    const Matrix4c<Scalar> m =
        kron(projector<Scalar>(rec.setting.local), projector<Scalar>(rec.setting.remote));
    for (int j = 0; j < 16; ++j) design(k, j) = (m * basis[j]).trace().real() / Scalar(4);
    rates(k) = static_cast<Scalar>(rec.counts) / static_cast<Scalar>(rec.seconds);
    total += rec.counts;
  }
  if (total == 0) throw DegenerateDataError("tomography counts are all zero");

  Eigen::JacobiSVD<DynMat> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= Scalar(1e-9) * sv(0)) {
    throw ConfigError("tomography settings are not informationally complete (singular design)");
  }
  const DynVec coeff = svd.solve(rates);
  Matrix4c<Scalar> x = Matrix4c<Scalar>::Zero();
  for (int j = 0; j < 16; ++j) x += coeff(j) * basis[j] / Scalar(4);
  const Scalar tr = x.trace().real();
  if (!(tr > Scalar(0))) throw DegenerateDataError("reconstructed count matrix has no weight");
  return project_to_state<Scalar>(x / tr);
}

/// Expected counts for each setting pair: `scale * seconds * P(setting)`.
template <typename Scalar>
std::vector<double> expected_counts(const TwoQubitState<Scalar>& rho,
                                    const std::vector<SettingPair>& settings, double scale,
                                    double seconds) {
  std::vector<double> out;
  out.reserve(settings.size());
  for (const auto& s : settings) {
    out.push_back(scale * seconds *
                  static_cast<double>(coincidence_probability(rho, s.local, s.remote)));
  }
  return out;
}

}  // namespace coexist::quantum
