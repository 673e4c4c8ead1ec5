#include "eigentask/simulate.hpp"

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace eigentask {

namespace {

using Complex = std::complex<double>;

// +1 for bit value 0, -1 for bit value 1 (sigma-z eigenvalue).
inline double zsign(Eigen::Index k, int qubits, int qubit) {
  return 1.0 - 2.0 * bit_of(k, qubits, qubit);
}

inline bool power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

void require_input_domain(double u) {
  if (!(u >= -1.0 && u <= 1.0))
    throw std::invalid_argument("input u must lie in [-1, 1]");
}

}  // namespace

void apply_rx(Eigen::VectorXcd& psi, int qubits, int qubit, double angle) {
  const Eigen::Index stride = Eigen::Index(1) << (qubits - 1 - qubit);
  const double c = std::cos(0.5 * angle);
  const Complex ms(0.0, -std::sin(0.5 * angle));
  for (Eigen::Index base = 0; base < psi.size(); base += 2 * stride) {
    for (Eigen::Index i = base; i < base + stride; ++i) {
      const Complex a0 = psi[i];
      const Complex a1 = psi[i + stride];
      psi[i] = c * a0 + ms * a1;
      psi[i + stride] = ms * a0 + c * a1;
    }
  }
}

void apply_rz(Eigen::VectorXcd& psi, int qubits, int qubit, double angle) {
  const Complex lower = std::polar(1.0, -0.5 * angle);
  const Complex upper = std::polar(1.0, 0.5 * angle);
  for (Eigen::Index k = 0; k < psi.size(); ++k)
    psi[k] *= bit_of(k, qubits, qubit) ? upper : lower;
}

void apply_zz(Eigen::VectorXcd& psi, int qubits, int qubit_a, int qubit_b, double angle) {
  const Complex aligned = std::polar(1.0, -0.5 * angle);
  const Complex opposed = std::polar(1.0, 0.5 * angle);
  for (Eigen::Index k = 0; k < psi.size(); ++k) {
    const bool same = bit_of(k, qubits, qubit_a) == bit_of(k, qubits, qubit_b);
    psi[k] *= same ? aligned : opposed;
  }
}

Eigen::VectorXcd evolve_circuit(const EncodingSpec& spec, double u) {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(spec.feature_count());
  psi[0] = 1.0;
  for (int rep = 0; rep < spec.tau; ++rep) {
    for (int l = 0; l < spec.qubits; ++l) apply_rx(psi, spec.qubits, l, 0.5 * spec.theta_x[l]);
    for (int l = 0; l < spec.qubits; ++l)
      apply_rz(psi, spec.qubits, l, spec.theta_z[l] + spec.theta_I[l] * u);
    for (const auto& [a, b] : spec.connectivity) apply_zz(psi, spec.qubits, a, b, spec.J);
    for (int l = 0; l < spec.qubits; ++l) apply_rx(psi, spec.qubits, l, 0.5 * spec.theta_x[l]);
  }
  return psi;
}

Eigen::MatrixXd hamiltonian_matrix(const EncodingSpec& spec, double u) {
  const Eigen::Index n = spec.feature_count();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double diag = 0.0;
    for (std::size_t e = 0; e < spec.connectivity.size(); ++e) {
      const auto& [a, b] = spec.connectivity[e];
      diag += spec.J_couplings[Eigen::Index(e)] * zsign(k, spec.qubits, a) * zsign(k, spec.qubits, b);
    }
    for (int l = 0; l < spec.qubits; ++l)
      diag += (spec.hz[l] + u * spec.hI[l]) * zsign(k, spec.qubits, l);
    h(k, k) = diag;
  }
  for (int l = 0; l < spec.qubits; ++l) {
    const Eigen::Index mask = Eigen::Index(1) << (spec.qubits - 1 - l);
    for (Eigen::Index k = 0; k < n; ++k) h(k ^ mask, k) += spec.hx[l];
  }
  return h;
}

Eigen::VectorXd probabilities_circuit(const EncodingSpec& spec, double u) {
  if (spec.ansatz != Ansatz::Circuit)
    throw std::invalid_argument("probabilities_circuit: spec is not a circuit ansatz");
  spec.validate();
  require_input_domain(u);
  return evolve_circuit(spec, u).cwiseAbs2();
}

Eigen::VectorXd probabilities_hamiltonian(const EncodingSpec& spec, double u) {
  if (spec.ansatz != Ansatz::Hamiltonian)
    throw std::invalid_argument("probabilities_hamiltonian: spec is not a hamiltonian ansatz");
  spec.validate();
  require_input_domain(u);

  const Eigen::MatrixXd h = hamiltonian_matrix(spec, u);
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::runtime_error("probabilities_hamiltonian: assembled H is not Hermitian");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  const Eigen::VectorXd energies = solver.eigenvalues();
  const Eigen::MatrixXd modes = solver.eigenvectors();

  // psi = Q exp(-i E t) Q^T e_0
  Eigen::VectorXcd coeff(energies.size());
  for (Eigen::Index j = 0; j < energies.size(); ++j)
    coeff[j] = std::polar(modes(0, j), -energies[j] * spec.t);
  const Eigen::VectorXcd psi = modes.cast<Complex>() * coeff;
  return psi.cwiseAbs2();
}

Eigen::VectorXd probabilities(const EncodingSpec& spec, double u) {
  return spec.ansatz == Ansatz::Circuit ? probabilities_circuit(spec, u)
                                        : probabilities_hamiltonian(spec, u);
}

Eigen::VectorXd probability_to_moments(const Eigen::VectorXd& x) {
  if (!power_of_two(x.size()))
    throw std::invalid_argument("probability_to_moments: length must be a power of two");
  Eigen::VectorXd y = x;
  for (Eigen::Index h = 1; h < y.size(); h <<= 1) {
    for (Eigen::Index i = 0; i < y.size(); i += 2 * h) {
      for (Eigen::Index j = i; j < i + h; ++j) {
        const double a = y[j];
        const double b = y[j + h];
        y[j] = a + b;
        y[j + h] = a - b;
      }
    }
  }
  return y;
}

Eigen::VectorXd moments_to_probability(const Eigen::VectorXd& m) {
  Eigen::VectorXd x = probability_to_moments(m);
  x /= static_cast<double>(m.size());
  return x;
}

void validate_probabilities(const Eigen::VectorXd& x) {
  if (x.size() == 0) throw std::invalid_argument("probability vector is empty");
  if (x.minCoeff() < -1e-12)
    throw std::invalid_argument("probability vector has a negative entry");
  if (std::abs(x.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("probability vector does not sum to 1");
}

}  // namespace eigentask
