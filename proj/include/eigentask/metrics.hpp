#pragma once

#include <Eigen/Core>

#include "eigentask/encoding.hpp"
#include "eigentask/spectral.hpp"

namespace eigentask {

// Classical total correlation (bits) of the outcome distribution over 2^L
// bitstrings: sum of per-qubit marginal entropies minus the joint entropy.
// Zero exactly for product distributions; at most L - 1.
double total_correlation(const Eigen::VectorXd& x);

struct CorrelationReport {
  double etc = 0.0;              // input-averaged total correlation, bits
  Eigen::VectorXd per_input;     // T(u) on the grid
  int qubits = 0;
};

CorrelationReport expected_total_correlation(const EncodingSpec& spec,
                                             const Eigen::VectorXd& inputs);

// Number of eigentasks with beta2 < shots (the constant k = 0 task counts).
// beta2 must be ascending.
Eigen::Index kc_cutoff(const Eigen::VectorXd& beta2, double shots);

// Analytic 2-design solution: flat NSR spectrum (0, K, ..., K) and
// C_T = K (S + 1) / (S + K).
struct TwoDesignReference {
  Eigen::VectorXd beta2;
  double capacity = 0.0;
};

TwoDesignReference two_design_reference(Eigen::Index feature_count, double shots);

// The 2-design moment matrices themselves: G_kk = 2/(K(K+1)),
// G_{kk'} = 1/(K(K+1)) off-diagonal, D = I/K.
MomentMatrices two_design_moments(Eigen::Index feature_count);

}  // namespace eigentask
