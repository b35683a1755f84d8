// Copyright 2026 The vchsh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

#include <Eigen/Dense>

namespace vchsh {

using cd = std::complex<double>;
using Bloch = Eigen::Vector3d;
using QubitKet = Eigen::Vector2cd;
using TwoQubitKet = Eigen::Vector4cd;
using SiteMatrix = Eigen::Matrix3cd;
using PairMatrix = Eigen::Matrix<cd, 9, 9>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kTsirelson = 2.0 * std::numbers::sqrt2;

/// Local basis indices on one site.
inline constexpr int kVacant = 0;
inline constexpr int kZero = 1;
inline constexpr int kOne = 2;

/// Index into the two-site space, Alice major.
constexpr int pair_index(int alice, int bob) { return 3 * alice + bob; }

inline double wrap_angle(double x) {
    double w = std::fmod(x, kTwoPi);
    if (w < 0) {
        w += kTwoPi;
    }
    // fmod can round a tiny negative up to exactly 2pi
    return w >= kTwoPi ? 0.0 : w;
}

/// Mixture parameters of the two-site state.
///
/// `p` weights the both-vacant sector, `q` the one-particle sectors given at
/// least one particle, and `r` splits the one-particle weight between Bob
/// alone ((1+r)/2) and Alice alone ((1-r)/2). `tau` is the angle of the
/// product input fed to the entangling circuit; pi/4 gives |+>|+>.
struct StateParams {
    double p = 0.0;
    double q = 0.0;
    double r = 0.0;
    double tau = kPi / 4;

    /// Sector weights in the order (both vacant, Bob only, Alice only, both occupied).
    std::array<double, 4> sector_weights() const {
        return {p, (1 - p) * q * (1 + r) / 2, (1 - p) * q * (1 - r) / 2, (1 - p) * (1 - q)};
    }

    /// Probability of the non-entangled part of the mixture.
    double separable_fraction() const { return p + (1 - p) * q; }

    void validate() const {
        auto in = [](double x, double lo, double hi) { return std::isfinite(x) && x >= lo && x <= hi; };
        if (!in(p, 0, 1)) {
            throw std::invalid_argument("StateParams: p must lie in [0, 1], got " + std::to_string(p));
        }
        if (!in(q, 0, 1)) {
            throw std::invalid_argument("StateParams: q must lie in [0, 1], got " + std::to_string(q));
        }
        if (!in(r, -1, 1)) {
            throw std::invalid_argument("StateParams: r must lie in [-1, 1], got " + std::to_string(r));
        }
        if (!std::isfinite(tau)) {
            throw std::invalid_argument("StateParams: tau must be finite");
        }
    }
};

/// Direction in the X-Z plane, measured from +Z toward +X.
struct InPlane {
    double chi = 0.0;
};

/// Polar coordinates on the Bloch sphere.
struct Polar {
    double theta = 0.0;
    double phi = 0.0;
};

/// +Z rotated by `alpha` (right-handed) about the axis at (axis_theta, axis_phi).
struct AxisAngle {
    double alpha = 0.0;
    double axis_theta = 0.0;
    double axis_phi = 0.0;
};

using MeasurementSetting = std::variant<InPlane, Polar, AxisAngle>;

struct SettingsQuad {
    MeasurementSetting a;
    MeasurementSetting a_prime;
    MeasurementSetting b;
    MeasurementSetting b_prime;
};

/// One-sided detector errors. `eta` is P(+1 | |0>), `epsilon` is P(+1 | |1> or |v>).
struct ErrorParams {
    double eta = 1.0;
    double epsilon = 0.0;

    bool ideal() const { return eta == 1.0 && epsilon == 0.0; }

    void validate() const {
        if (!(std::isfinite(eta) && eta >= 0 && eta <= 1)) {
            throw std::invalid_argument("ErrorParams: eta must lie in [0, 1], got " + std::to_string(eta));
        }
        if (!(std::isfinite(epsilon) && epsilon >= 0 && epsilon <= 1)) {
            throw std::invalid_argument("ErrorParams: epsilon must lie in [0, 1], got " + std::to_string(epsilon));
        }
    }
};

/// Equal and independent per-site vacancy probability.
struct VacancyModel {
    double vacancy = 0.0;
};

inline Bloch polar_to_bloch(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

inline Bloch resolve_direction(const MeasurementSetting &s) {
    return std::visit(
        [](const auto &v) -> Bloch {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, InPlane>) {
                return {std::sin(v.chi), 0.0, std::cos(v.chi)};
            } else if constexpr (std::is_same_v<T, Polar>) {
                return polar_to_bloch(v.theta, v.phi);
            } else {
                // Rodrigues formula applied to +Z.
                const Bloch n = polar_to_bloch(v.axis_theta, v.axis_phi);
                const Bloch z = Bloch::UnitZ();
                const double c = std::cos(v.alpha);
                const double s = std::sin(v.alpha);
                return c * z + s * n.cross(z) + (1 - c) * n.z() * n;
            }
        },
        s);
}

inline StateParams vacancy_model_map(const VacancyModel &m) {
    const double pv = m.vacancy;
    if (!(std::isfinite(pv) && pv >= 0 && pv < 1)) {
        throw std::invalid_argument("VacancyModel: vacancy probability must lie in [0, 1), got " + std::to_string(pv));
    }
    return StateParams{pv * pv, 2 * pv / (1 + pv), 0.0, kPi / 4};
}

namespace gates {

inline Eigen::Matrix2cd hadamard() {
    Eigen::Matrix2cd h;
    h << 1, 1, 1, -1;
    return h / kSqrt2;
}

inline Eigen::Matrix2cd pauli_x() {
    Eigen::Matrix2cd x;
    x << 0, 1, 1, 0;
    return x;
}

inline Eigen::Matrix4cd controlled_z() {
    Eigen::Matrix4cd cz = Eigen::Matrix4cd::Identity();
    cz(3, 3) = -1;
    return cz;
}

/// Local gate applied to Alice's qubit of the entangling circuit.
inline Eigen::Matrix2cd alice_local() { return hadamard() * pauli_x(); }

/// Local gate applied to Bob's qubit of the entangling circuit.
inline Eigen::Matrix2cd bob_local() { return pauli_x(); }

inline Eigen::Matrix4cd kron(const Eigen::Matrix2cd &a, const Eigen::Matrix2cd &b) {
    Eigen::Matrix4cd k;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
        }
    }
    return k;
}

}  // namespace gates

inline QubitKet input_qubit(double tau) { return {cd(std::cos(tau)), cd(std::sin(tau))}; }

inline Bloch bloch_of(const QubitKet &psi) {
    const cd c01 = std::conj(psi(0)) * psi(1);
    const double n = std::norm(psi(0)) + std::norm(psi(1));
    return Bloch{2 * c01.real(), 2 * c01.imag(), std::norm(psi(0)) - std::norm(psi(1))} / n;
}

/// Output of the entangling circuit (H X (x) X) CZ on |psi_tau>|psi_tau>,
/// ordered |00>, |01>, |10>, |11> with Alice as the high bit.
inline TwoQubitKet circuit_output(double tau) {
    const QubitKet in = input_qubit(tau);
    TwoQubitKet product;
    product << in(0) * in(0), in(0) * in(1), in(1) * in(0), in(1) * in(1);
    const Eigen::Matrix4cd u = gates::kron(gates::alice_local(), gates::bob_local()) * gates::controlled_z();
    TwoQubitKet out = u * product;
    return out / out.norm();
}

/// Bloch vectors of the lone particle when the partner site is vacant:
/// the two-qubit gate drops out and only the local gates act.
inline std::pair<Bloch, Bloch> lone_particle_states(double tau) {
    const QubitKet in = input_qubit(tau);
    return {bloch_of(gates::alice_local() * in), bloch_of(gates::bob_local() * in)};
}

/// Two-site density operator on {v,0,1} (x) {v,0,1}.
class DensityMatrix {
  public:
    DensityMatrix() : m_(PairMatrix::Zero()) {}
    explicit DensityMatrix(const PairMatrix &m) : m_(m) {}

    const PairMatrix &matrix() const { return m_; }
    cd operator()(int row, int col) const { return m_(row, col); }

    double trace() const { return m_.trace().real(); }

    /// Traces of the (both vacant, Bob only, Alice only, both occupied) blocks.
    std::array<double, 4> sector_traces() const {
        std::array<double, 4> t{};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                const int i = pair_index(a, b);
                t[sector_of(a, b)] += m_(i, i).real();
            }
        }
        return t;
    }

    /// Throws if the matrix is not a valid block-diagonal state.
    void validate(double tol = 1e-12, double psd_tol = 1e-10) const {
        if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > tol) {
            throw std::invalid_argument("DensityMatrix: not Hermitian");
        }
        if (std::abs(m_.trace() - cd(1.0)) > tol) {
            throw std::invalid_argument("DensityMatrix: trace differs from 1");
        }
        for (int i = 0; i < 9; ++i) {
            for (int j = 0; j < 9; ++j) {
                if (sector_of(i / 3, i % 3) != sector_of(j / 3, j % 3) && m_(i, j) != cd(0.0)) {
                    throw std::invalid_argument("DensityMatrix: coherence between particle-number sectors");
                }
            }
        }
        Eigen::SelfAdjointEigenSolver<PairMatrix> es(m_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -psd_tol) {
            throw std::invalid_argument("DensityMatrix: not positive semidefinite");
        }
    }

    /// Sector of a basis pair: 0 both vacant, 1 Bob only, 2 Alice only, 3 both occupied.
    static constexpr int sector_of(int alice, int bob) {
        const bool a = alice != kVacant;
        const bool b = bob != kVacant;
        return a ? (b ? 3 : 2) : (b ? 1 : 0);
    }

  private:
    PairMatrix m_;
};

inline DensityMatrix build_density(const StateParams &s) {
    s.validate();
    const auto w = s.sector_weights();
    PairMatrix rho = PairMatrix::Zero();

    rho(pair_index(kVacant, kVacant), pair_index(kVacant, kVacant)) = w[0];

    const QubitKet in = input_qubit(s.tau);
    const QubitKet alice = gates::alice_local() * in;
    const QubitKet bob = gates::bob_local() * in;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            rho(pair_index(kVacant, kZero + i), pair_index(kVacant, kZero + j)) += w[1] * bob(i) * std::conj(bob(j));
            rho(pair_index(kZero + i, kVacant), pair_index(kZero + j, kVacant)) += w[2] * alice(i) * std::conj(alice(j));
        }
    }

    const TwoQubitKet psi = circuit_output(s.tau);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            rho(pair_index(kZero + i / 2, kZero + i % 2), pair_index(kZero + j / 2, kZero + j % 2)) +=
                w[3] * psi(i) * std::conj(psi(j));
        }
    }
    return DensityMatrix(rho);
}

}  // namespace vchsh
