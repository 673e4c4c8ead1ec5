#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "eigentask/rng.hpp"
#include "eigentask/sampling.hpp"
#include "eigentask/simulate.hpp"

using namespace eigentask;

TEST_CASE("a deterministic distribution puts every shot on one outcome") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(8);
  x[3] = 1.0;
  const auto record = sample_shots(x, 100, 7);
  CHECK(record.counts.size() == 1);
  CHECK(record.counts.at(3) == 100);
}

TEST_CASE("counts always sum to S and frequencies sit on the 1/S lattice") {
  CounterRng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd x(8);
    for (Eigen::Index i = 0; i < 8; ++i) x[i] = rng.next_unit() + 1e-9;
    x /= x.sum();
    const long shots = 1 + long(rng.next_u64() % 500);
    const auto record = sample_shots(x, shots, rng.next_u64());
    long total = 0;
    for (const auto& [k, c] : record.counts) {
      CHECK(k >= 0);
      CHECK(k < 8);
      CHECK(c >= 0);
      total += c;
    }
    CHECK(total == shots);
    const auto f = frequencies(record, 8);
    CHECK(f.sum() == doctest::Approx(1.0).epsilon(1e-15));
    for (Eigen::Index i = 0; i < 8; ++i) {
      const double scaled = f[i] * double(shots);
      CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
    }
  }
}

TEST_CASE("fair-coin frequency concentrates at 1/2 for large S") {
  Eigen::Vector2d x(0.5, 0.5);
  const auto record = sample_shots(x, 1000000, 12345);
  const auto f = frequencies(record, 2);
  // Binomial tail: P(|f - 1/2| >= 5e-3) < 1e-3 at S = 1e6.
  CHECK(std::abs(f[0] - 0.5) < 5e-3);
}

TEST_CASE("empirical covariance of frequencies matches Sigma / S") {
  Eigen::VectorXd x(4);
  x << 0.4, 0.3, 0.2, 0.1;
  const long shots = 100;
  const int repeats = 10000;

  Eigen::MatrixXd draws(repeats, 4);
  for (int r = 0; r < repeats; ++r)
    draws.row(r) = frequencies(sample_shots(x, shots, fork_seed(99, std::uint64_t(r))), 4);

  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::MatrixXd centered = draws.rowwise() - mean;
  const Eigen::MatrixXd empirical = centered.transpose() * centered / double(repeats - 1);

  const Eigen::MatrixXd expected = covariance(x) / double(shots);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      // Standard error of a sample covariance entry.
      const double se = std::sqrt((expected(i, i) * expected(j, j) + expected(i, j) * expected(i, j)) /
                                  double(repeats));
      CHECK(std::abs(empirical(i, j) - expected(i, j)) < 5.0 * se);
    }
  }
}

TEST_CASE("covariance closed form") {
  Eigen::Vector2d pure(1.0, 0.0);
  CHECK(covariance(pure).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  Eigen::Vector2d half(0.5, 0.5);
  const auto sigma = covariance(half);
  CHECK(sigma(0, 0) == doctest::Approx(0.25));
  CHECK(sigma(0, 1) == doctest::Approx(-0.25));
  CHECK(sigma(1, 1) == doctest::Approx(0.25));

  CounterRng rng(3);
  Eigen::VectorXd x(8);
  for (Eigen::Index i = 0; i < 8; ++i) x[i] = rng.next_unit();
  x /= x.sum();
  const auto s = covariance(x);
  CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((s * Eigen::VectorXd::Ones(8)).cwiseAbs().maxCoeff() < 1e-15);  // rows sum to zero
}

TEST_CASE("expected feature matrix rows equal the exact probabilities") {
  RandomEncodingOptions options;
  const auto spec = random_encoding(Ansatz::Circuit, 2, options, 5);
  const auto inputs = grid_inputs(17);
  const auto f = feature_matrix(spec, inputs, kExpectedShots, 0);
  CHECK(f.expected());
  for (Eigen::Index n = 0; n < inputs.size(); ++n) {
    const auto x = probabilities(spec, inputs[n]);
    CHECK((f.values.row(n).transpose() - x).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("sampled features converge to the expected ones as S grows") {
  RandomEncodingOptions options;
  const auto spec = random_encoding(Ansatz::Circuit, 2, options, 6);
  const auto inputs = grid_inputs(5);
  const auto expected = feature_matrix(spec, inputs, kExpectedShots, 0);
  const auto sampled = feature_matrix(spec, inputs, 1e7, 17);
  CHECK((sampled.values - expected.values).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("feature matrices are bit-identical across reruns") {
  RandomEncodingOptions options;
  const auto spec = random_encoding(Ansatz::Circuit, 3, options, 8);
  const auto inputs = grid_inputs(20);
  const auto a = feature_matrix(spec, inputs, 256, 9);
  const auto b = feature_matrix(spec, inputs, 256, 9);
  CHECK(a.values == b.values);

  const auto c = feature_matrix(spec, inputs, 256, 10);
  CHECK(a.values != c.values);
}

TEST_CASE("sampled rows realize the zero-noise direction") {
  RandomEncodingOptions options;
  const auto spec = random_encoding(Ansatz::Hamiltonian, 3, options, 2);

  // The exactness lives in the integer counts; frequencies reproduce it
  // bit-exactly whenever S is a power of two and to rounding otherwise.
  const auto records = sample_records(spec, grid_inputs(50), 37, 4);
  for (const auto& record : records) {
    long total = 0;
    for (const auto& [k, c] : record.counts) total += c;
    CHECK(total == 37);
  }
  const auto f37 = feature_matrix(spec, grid_inputs(50), 37, 4);
  for (Eigen::Index n = 0; n < f37.values.rows(); ++n)
    CHECK(std::abs(f37.values.row(n).sum() - 1.0) < 1e-14);

  const auto f64 = feature_matrix(spec, grid_inputs(50), 64, 4);
  for (Eigen::Index n = 0; n < f64.values.rows(); ++n)
    CHECK(f64.values.row(n).sum() == 1.0);
}

TEST_CASE("sampled features are unbiased estimators of the expected ones") {
  RandomEncodingOptions options;
  const auto spec = random_encoding(Ansatz::Circuit, 2, options, 14);
  Eigen::VectorXd input(1);
  input << 0.4;
  const Eigen::VectorXd x = probabilities(spec, input[0]);

  const int repeats = 1000;
  const long shots = 64;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  for (int r = 0; r < repeats; ++r)
    mean += feature_matrix(spec, input, double(shots), std::uint64_t(r)).values.row(0);
  mean /= double(repeats);
  // Error is O(1/sqrt(repeats * shots)); allow six standard deviations.
  const double bound = 6.0 * std::sqrt(0.25 / double(repeats * shots));
  CHECK((mean - x).cwiseAbs().maxCoeff() < bound);
}

TEST_CASE("input grids") {
  const auto grid = grid_inputs(4);
  CHECK(grid[0] == doctest::Approx(-0.75));
  CHECK(grid[3] == doctest::Approx(0.75));
  const auto iid_a = iid_inputs(100, 5);
  const auto iid_b = iid_inputs(100, 5);
  CHECK(iid_a == iid_b);
  CHECK(iid_a.minCoeff() >= -1.0);
  CHECK(iid_a.maxCoeff() <= 1.0);
}

TEST_CASE("invalid inputs are rejected") {
  Eigen::Vector2d x(0.7, 0.3);
  CHECK_THROWS_AS(sample_shots(x, 0, 1), std::invalid_argument);
  Eigen::Vector2d bad(0.7, 0.7);
  CHECK_THROWS_AS(sample_shots(bad, 10, 1), std::invalid_argument);
}
