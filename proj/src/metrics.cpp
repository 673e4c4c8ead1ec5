#include "eigentask/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "eigentask/simulate.hpp"

namespace eigentask {

namespace {

// Shannon entropy in bits with the 0 log 0 := 0 convention.
double entropy_bits(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log2(p[i]);
  return h;
}

}  // namespace

double total_correlation(const Eigen::VectorXd& x) {
  validate_probabilities(x);
  Eigen::Index k = x.size();
  int qubits = 0;
  while (k > 1) {
    if (k & 1) throw std::invalid_argument("total_correlation: length must be a power of two");
    k >>= 1;
    ++qubits;
  }

  double marginal_sum = 0.0;
  for (int l = 0; l < qubits; ++l) {
    double p1 = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (bit_of(i, qubits, l)) p1 += x[i];
    Eigen::Vector2d marginal(1.0 - p1, p1);
    marginal_sum += entropy_bits(marginal);
  }
  return marginal_sum - entropy_bits(x);
}

CorrelationReport expected_total_correlation(const EncodingSpec& spec,
                                             const Eigen::VectorXd& inputs) {
  if (inputs.size() == 0)
    throw std::invalid_argument("expected_total_correlation: inputs must be nonempty");
  CorrelationReport report;
  report.qubits = spec.qubits;
  report.per_input.resize(inputs.size());
  for (Eigen::Index n = 0; n < inputs.size(); ++n)
    report.per_input[n] = total_correlation(probabilities(spec, inputs[n]));
  report.etc = report.per_input.mean();
  return report;
}

Eigen::Index kc_cutoff(const Eigen::VectorXd& beta2, double shots) {
  Eigen::Index count = 0;
  while (count < beta2.size() && beta2[count] < shots) ++count;
  return count;
}

TwoDesignReference two_design_reference(Eigen::Index feature_count, double shots) {
  if (feature_count < 2) throw std::invalid_argument("two_design_reference: need K >= 2");
  TwoDesignReference ref;
  ref.beta2 = Eigen::VectorXd::Constant(feature_count, static_cast<double>(feature_count));
  ref.beta2[0] = 0.0;
  const double k = static_cast<double>(feature_count);
  ref.capacity = is_expected(shots) ? k : k * (shots + 1.0) / (shots + k);
  return ref;
}

MomentMatrices two_design_moments(Eigen::Index feature_count) {
  if (feature_count < 2) throw std::invalid_argument("two_design_moments: need K >= 2");
  const double k = static_cast<double>(feature_count);
  MomentMatrices m;
  m.G = Eigen::MatrixXd::Constant(feature_count, feature_count, 1.0 / (k * (k + 1.0)));
  m.G.diagonal().array() += 1.0 / (k * (k + 1.0));
  m.D = Eigen::VectorXd::Constant(feature_count, 1.0 / k);
  m.V = -m.G;
  m.V.diagonal() += m.D;
  m.n_inputs = feature_count;  // nominal; the matrices are analytic
  m.shots = kExpectedShots;
  return m;
}

}  // namespace eigentask
