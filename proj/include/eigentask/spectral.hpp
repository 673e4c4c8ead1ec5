#pragma once

#include <Eigen/Core>
#include <vector>

#include "eigentask/sampling.hpp"

namespace eigentask {

// Input-averaged second-moment structure of a feature matrix:
// G = E_u[x x^T] (or its finite-N/finite-S estimate), D the diagonal
// second-moment matrix (stored as its diagonal), V = D - G the expected
// per-shot covariance.
struct MomentMatrices {
  Eigen::MatrixXd G;
  Eigen::VectorXd D;
  Eigen::MatrixXd V;
  Eigen::Index n_inputs = 0;
  double shots = kExpectedShots;
};

MomentMatrices estimate_moments(const FeatureMatrix& f);

// Noise-to-signal eigensystem of (G, V). beta2 ascending; column k of r is
// the combination vector of the k-th eigentask, normalized to r^T G r = 1,
// with zero rows at pruned feature indices. alpha holds the matching
// eigenvalues of D^{-1} G (beta2 = 1/alpha - 1).
struct SpectralResult {
  Eigen::VectorXd beta2;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd r;                       // K x n_kept
  std::vector<Eigen::Index> pruned;        // feature columns dropped before inversion
  bool corrected = false;                  // finite-shot correction applied
  std::vector<Eigen::Index> uncorrectable; // beta2 indices with btilde >= S - 1
};

// Solves V r = beta^2 G r through the symmetric form D^{-1/2} G D^{-1/2}.
// Feature columns whose D entry falls below the never-observed threshold are
// pruned first and reported in `pruned`.
SpectralResult solve_nsr(const MomentMatrices& m);

// Same spectrum and vectors as solve_nsr(estimate_moments(f)) without ever
// forming G, via the SVD of (1/sqrt(N)) D^{-1/2} F^T.
SpectralResult solve_nsr_gram_free(const FeatureMatrix& f);

// Finite-shot renormalization beta2 <- S*btilde / ((S-1) - btilde) for
// btilde < S - 1; other indices are flagged uncorrectable and left as-is.
// Never throws; eigenvectors are unchanged.
SpectralResult correct_finite_shots(SpectralResult result, double shots);

// C_T = sum_k 1/(1 + beta2_k / shots). The SpectralResult overload skips
// uncorrectable indices (they contribute 0).
double expressive_capacity(const Eigen::VectorXd& beta2, double shots);
double expressive_capacity(const SpectralResult& result, double shots);

// Eigentask values on the feature grid: Y = F r.
Eigen::MatrixXd eigentasks(const SpectralResult& result, const FeatureMatrix& f);

struct FunctionFit {
  double capacity = 0.0;      // clamped to [0, 1]
  double raw_capacity = 0.0;  // before clamping
  Eigen::VectorXd weights;
};

// Normalized mean-squared accuracy of the best linear readout of the target
// from S-shot features, with the closed-form optimal weights
// w = (G + V/S)^+ (1/N) F^T f (pseudoinverse cutoff 1e-10 * sigma_max).
FunctionFit function_capacity(const FeatureMatrix& f, const Eigen::VectorXd& target,
                              double shots);

// Minimum-norm least-squares solve via SVD with relative cutoff.
Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           double rel_cutoff = 1e-10);

}  // namespace eigentask
