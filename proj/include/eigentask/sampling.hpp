#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "eigentask/encoding.hpp"

namespace eigentask {

constexpr double kExpectedShots = std::numeric_limits<double>::infinity();

inline bool is_expected(double shots) { return !(shots < kExpectedShots); }

// Outcome counts of one S-shot run at a single input.
struct ShotRecord {
  double u = 0.0;
  long shots = 0;
  std::map<Eigen::Index, long> counts;  // outcome index -> count; values sum to shots
};

// N x K feature matrix over an input grid. Rows are exact probabilities
// (shots == inf) or empirical frequencies of one multinomial draw, in which
// case every entry is an integer multiple of 1/shots and each row sums to 1
// exactly.
struct FeatureMatrix {
  Eigen::VectorXd inputs;
  Eigen::MatrixXd values;
  double shots = kExpectedShots;

  bool expected() const { return is_expected(shots); }
};

// One multinomial draw of `shots` outcomes from x, by sequential binomial
// conditioning (exact; expected cost O(K + shots)).
ShotRecord sample_shots(const Eigen::VectorXd& x, long shots, std::uint64_t seed);

// Frequencies counts/shots as a dense vector.
Eigen::VectorXd frequencies(const ShotRecord& record, Eigen::Index feature_count);

// Per-shot covariance Sigma = diag(x) - x x^T.
Eigen::MatrixXd covariance(const Eigen::VectorXd& x);

// Row n holds x(u_n) (shots == inf) or one draw at `shots` using substream
// fork_seed(seed, n), so rows are independent and order-stable.
FeatureMatrix feature_matrix(const EncodingSpec& spec, const Eigen::VectorXd& inputs,
                             double shots, std::uint64_t seed);

// Raw outcome counts behind the sampled path of feature_matrix; row n of the
// sampled matrix equals frequencies(records[n]) for the same (seed, n).
std::vector<ShotRecord> sample_records(const EncodingSpec& spec, const Eigen::VectorXd& inputs,
                                       long shots, std::uint64_t seed);

// Input grids over [-1, 1]: N midpoint-equispaced points, or N i.i.d. uniforms.
Eigen::VectorXd grid_inputs(Eigen::Index n);
Eigen::VectorXd iid_inputs(Eigen::Index n, std::uint64_t seed);

}  // namespace eigentask
