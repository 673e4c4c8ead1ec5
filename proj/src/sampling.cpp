#include "eigentask/sampling.hpp"

#include <cmath>
#include <stdexcept>

#include "eigentask/rng.hpp"
#include "eigentask/simulate.hpp"

namespace eigentask {

namespace {

// Binomial(n, p) by waiting times between successes: expected cost
// O(np + 1) draws, exact for all n, p.
long draw_binomial(long n, double p, CounterRng& rng) {
  if (p <= 0.0 || n <= 0) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - draw_binomial(n, 1.0 - p, rng);
  const double log_q = std::log1p(-p);
  long successes = 0;
  long trials = 0;
  while (true) {
    const double skip = std::floor(std::log(rng.next_unit_open()) / log_q);
    if (skip >= static_cast<double>(n)) break;  // no further success fits
    trials += static_cast<long>(skip) + 1;
    if (trials > n) break;
    ++successes;
  }
  return successes;
}

}  // namespace

ShotRecord sample_shots(const Eigen::VectorXd& x, long shots, std::uint64_t seed) {
  validate_probabilities(x);
  if (shots < 1) throw std::invalid_argument("sample_shots: shots must be >= 1");

  // Suffix mass for the conditional success probability of each outcome.
  const Eigen::Index n = x.size();
  Eigen::VectorXd suffix(n);
  double acc = 0.0;
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    acc += std::max(0.0, x[k]);
    suffix[k] = acc;
  }

  CounterRng rng(seed);
  ShotRecord record;
  record.shots = shots;
  long remaining = shots;
  Eigen::Index last_nonzero = -1;
  for (Eigen::Index k = 0; k < n && remaining > 0; ++k) {
    const double mass = std::max(0.0, x[k]);
    if (mass <= 0.0) continue;
    last_nonzero = k;
    const double q = suffix[k] > 0.0 ? std::min(1.0, mass / suffix[k]) : 1.0;
    const long c = (k == n - 1 || q >= 1.0) ? remaining : draw_binomial(remaining, q, rng);
    if (c > 0) record.counts[k] = c;
    remaining -= c;
  }
  // Rounding in the suffix mass can strand a few shots; give them to the last
  // outcome with nonzero probability.
  if (remaining > 0 && last_nonzero >= 0) record.counts[last_nonzero] += remaining;
  return record;
}

Eigen::VectorXd frequencies(const ShotRecord& record, Eigen::Index feature_count) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(feature_count);
  for (const auto& [k, c] : record.counts) {
    if (k < 0 || k >= feature_count)
      throw std::invalid_argument("frequencies: outcome index out of range");
    f[k] = static_cast<double>(c) / static_cast<double>(record.shots);
  }
  return f;
}

Eigen::MatrixXd covariance(const Eigen::VectorXd& x) {
  validate_probabilities(x);
  Eigen::MatrixXd sigma = -x * x.transpose();
  sigma.diagonal() += x;
  return sigma;
}

FeatureMatrix feature_matrix(const EncodingSpec& spec, const Eigen::VectorXd& inputs,
                             double shots, std::uint64_t seed) {
  if (inputs.size() == 0) throw std::invalid_argument("feature_matrix: inputs must be nonempty");

  FeatureMatrix f;
  f.inputs = inputs;
  f.shots = shots;
  f.values.resize(inputs.size(), spec.feature_count());
  if (is_expected(shots)) {
    for (Eigen::Index n = 0; n < inputs.size(); ++n)
      f.values.row(n) = probabilities(spec, inputs[n]);
    return f;
  }
  const long s = static_cast<long>(shots);
  if (s < 1 || static_cast<double>(s) != shots)
    throw std::invalid_argument("feature_matrix: shots must be a positive integer or inf");
  const auto records = sample_records(spec, inputs, s, seed);
  for (Eigen::Index n = 0; n < inputs.size(); ++n)
    f.values.row(n) = frequencies(records[std::size_t(n)], spec.feature_count());
  return f;
}

std::vector<ShotRecord> sample_records(const EncodingSpec& spec, const Eigen::VectorXd& inputs,
                                       long shots, std::uint64_t seed) {
  if (inputs.size() == 0) throw std::invalid_argument("sample_records: inputs must be nonempty");
  std::vector<ShotRecord> records;
  records.reserve(std::size_t(inputs.size()));
  for (Eigen::Index n = 0; n < inputs.size(); ++n) {
    ShotRecord record = sample_shots(probabilities(spec, inputs[n]), shots,
                                     fork_seed(seed, std::uint64_t(n)));
    record.u = inputs[n];
    records.push_back(std::move(record));
  }
  return records;
}

Eigen::VectorXd grid_inputs(Eigen::Index n) {
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i)
    u[i] = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return u;
}

Eigen::VectorXd iid_inputs(Eigen::Index n, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) u[i] = rng.next_uniform(-1.0, 1.0);
  return u;
}

}  // namespace eigentask
