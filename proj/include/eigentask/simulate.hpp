#pragma once

#include <Eigen/Core>

#include "eigentask/encoding.hpp"

namespace eigentask {

// Value of qubit `qubit` in outcome index k (qubit 0 = most significant bit).
inline int bit_of(Eigen::Index k, int qubits, int qubit) {
  return static_cast<int>((k >> (qubits - 1 - qubit)) & 1);
}

// In-place single-qubit rotations and the diagonal ZZ coupling layer on a
// length-2^L statevector.
void apply_rx(Eigen::VectorXcd& psi, int qubits, int qubit, double angle);
void apply_rz(Eigen::VectorXcd& psi, int qubits, int qubit, double angle);
void apply_zz(Eigen::VectorXcd& psi, int qubits, int qubit_a, int qubit_b, double angle);

// Statevector after the full circuit-ansatz unitary acting on |0..0>.
Eigen::VectorXcd evolve_circuit(const EncodingSpec& spec, double u);

// Dense H(u) = H0 + u*H1; real symmetric in the computational basis.
Eigen::MatrixXd hamiltonian_matrix(const EncodingSpec& spec, double u);

// Exact outcome probabilities x_k(u) = |<b_k|U(u)|0..0>|^2 for u in [-1, 1].
// The hamiltonian route diagonalizes H(u) exactly (dense eigendecomposition).
Eigen::VectorXd probabilities_circuit(const EncodingSpec& spec, double u);
Eigen::VectorXd probabilities_hamiltonian(const EncodingSpec& spec, double u);
Eigen::VectorXd probabilities(const EncodingSpec& spec, double u);

// Walsh parity transform between the probability and moment representations:
// m_B = sum_k (-1)^popcount(k & B) x_k, so m_B is the Pauli-z product
// expectation over the qubits selected by mask B, and m_0 = 1.
Eigen::VectorXd probability_to_moments(const Eigen::VectorXd& x);
Eigen::VectorXd moments_to_probability(const Eigen::VectorXd& m);

// Throws std::invalid_argument unless x is entrywise >= -1e-12 and sums to 1
// within 1e-12.
void validate_probabilities(const Eigen::VectorXd& x);

}  // namespace eigentask
