#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

namespace eigentask {

enum class Ansatz { Circuit, Hamiltonian };

// Full description of one input-parameterized feature generator. Exactly one
// of the two parameter groups below is active, selected by `ansatz`.
//
// Outcome indices follow the convention that qubit 0 is the MOST significant
// bit of the index: for L = 2, index 1 is the bitstring 01 (qubit 1 excited).
struct EncodingSpec {
  Ansatz ansatz = Ansatz::Circuit;
  int qubits = 1;
  std::uint64_t seed = 0;

  // Circuit ansatz: tau repetitions of Rx(theta_x/2) W(J) Rz(theta_z + theta_I u) Rx(theta_x/2).
  int tau = 1;
  double J = 0.0;  // ZZ coupling angle, radians
  Eigen::VectorXd theta_x;
  Eigen::VectorXd theta_z;
  Eigen::VectorXd theta_I;

  // Hamiltonian ansatz: evolve |0..0> under H(u) = H0 + u*H1 for time t,
  // H0 = sum_edges J_e Z Z + sum_l hx_l X + sum_l hz_l Z, H1 = sum_l hI_l Z.
  double t = 0.0;
  Eigen::VectorXd J_couplings;  // one entry per connectivity edge
  Eigen::VectorXd hx;
  Eigen::VectorXd hz;
  Eigen::VectorXd hI;

  std::vector<std::pair<int, int>> connectivity;

  Eigen::Index feature_count() const { return Eigen::Index(1) << qubits; }

  // Throws std::invalid_argument on inconsistent sizes, bad pairs, tau < 1 or t < 0.
  void validate() const;
};

std::vector<std::pair<int, int>> line_connectivity(int qubits);
std::vector<std::pair<int, int>> ring_connectivity(int qubits);

// Hyperparameters for drawing a random encoding. Per-qubit angles/fields are
// drawn from the seed; everything here is held fixed.
struct RandomEncodingOptions {
  // circuit ansatz
  int tau = 3;
  // coupling strength: rotation angle (circuit) or uniform ZZ strength (hamiltonian)
  double J = 1.5707963267948966;
  // hamiltonian ansatz
  double t = 5.0;
  double mean_hx = 0.0, mean_hz = 0.0, mean_hI = 0.0;
  double rms_hx = 20.0, rms_hz = 5.0, rms_hI = 5.0;
  // empty -> line for circuit, ring for hamiltonian
  std::vector<std::pair<int, int>> connectivity;
};

// Deterministic function of (seed, qubits, ansatz, options).
// Circuit draws theta_x, theta_z ~ Unif[0, 2pi) and theta_I ~ Unif[0, 10pi);
// hamiltonian draws each field as mean + rms * N(0, 1).
EncodingSpec random_encoding(Ansatz ansatz, int qubits, const RandomEncodingOptions& options,
                             std::uint64_t seed);

}  // namespace eigentask
