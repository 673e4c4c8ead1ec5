#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "eigentask/encoding.hpp"
#include "eigentask/sampling.hpp"

namespace eigentask {

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double stddev = 1.0;
};

// Mixture of Gaussians truncated to [-1, 1]; each component is renormalized
// over the domain, weights sum to 1.
struct GaussianMixture {
  std::vector<GaussianComponent> components;
};

double mixture_density(const GaussianMixture& mixture, double u);
double sample_mixture(const GaussianMixture& mixture, class CounterRng& rng);

// The two demo class densities shipped with the CLI (configuration defaults,
// chosen to overlap and not be linearly separable).
GaussianMixture demo_density_class0();
GaussianMixture demo_density_class1();

// Labeled 1-D inputs drawn from two class densities, balanced per split
// within +-1.
struct ClassificationTask {
  std::vector<double> train_u;
  std::vector<int> train_label;
  std::vector<double> test_u;
  std::vector<int> test_label;
  GaussianMixture p0;
  GaussianMixture p1;
  std::uint64_t seed = 0;
};

ClassificationTask make_task(const GaussianMixture& p0, const GaussianMixture& p1,
                             int n_train, int n_test, std::uint64_t seed);

// Theoretical maximal accuracy of any classifier on (p0, p1) with equal
// priors: integral of max(p0, p1)/2 by adaptive quadrature to 1e-6.
double bayes_rate(const GaussianMixture& p0, const GaussianMixture& p1);

struct LogisticFit {
  Eigen::VectorXd weights;
  bool converged = false;
  double grad_norm = 0.0;
  int iterations = 0;
};

// Full-batch ridge logistic regression by damped Newton iteration, run to
// gradient norm < 1e-8 or 500 iterations. The feature matrix is expected to
// carry the constant eigentask as its first column, which doubles as the
// bias term. Non-convergence is flagged, never thrown.
LogisticFit logistic_train(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                           double ridge = 1e-6);

struct FitReport {
  int k_used = 0;
  int permutation = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double relative_mse = 0.0;
  Eigen::VectorXd weights;
  std::vector<Eigen::Index> selected;  // feature columns used, when a subset was chosen
  bool converged = true;
};

// Least-squares fit of the target on the first k_used (lowest-noise)
// eigentask columns; relative_mse = |f - Y w|^2 / |f|^2 on the given grid.
FitReport pca_fit(const Eigen::VectorXd& target, const Eigen::MatrixXd& tasks, int k_used);

// Baseline truncation for comparison: fit on all raw feature columns, keep
// the k_used columns with the largest w_k^2 E[x_k^2], and refit on those.
FitReport fit_topweight_features(const Eigen::VectorXd& target, const FeatureMatrix& f,
                                 int k_used);

struct ClassifyOutcome {
  std::vector<FitReport> reports;          // one per (permutation, k_used)
  std::vector<FitReport> kc_reports;       // the K_c-truncated run, one per permutation
  std::vector<Eigen::Index> kc;            // corrected-spectrum cutoff per permutation
  bool all_converged = true;
};

// Full eigentask-truncation classification pipeline: per permutation,
// reshuffle the train/test split, sample features at `shots`, build the
// eigentask basis from the training set only, and fit a logistic readout
// truncated at each entry of k_list (plus at K_c(shots) when fit_at_kc).
ClassifyOutcome classify_pipeline(const EncodingSpec& spec, const ClassificationTask& task,
                                  double shots, const std::vector<int>& k_list,
                                  int n_permutations, std::uint64_t seed,
                                  bool fit_at_kc = false);

}  // namespace eigentask
