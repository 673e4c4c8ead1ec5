#include "eigentask/learning.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "eigentask/metrics.hpp"
#include "eigentask/rng.hpp"
#include "eigentask/spectral.hpp"

namespace eigentask {

namespace {

double normal_cdf(double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); }

// Mass of a component inside [-1, 1]; used to renormalize after truncation.
double component_mass(const GaussianComponent& c) {
  return normal_cdf((1.0 - c.mean) / c.stddev) - normal_cdf((-1.0 - c.mean) / c.stddev);
}

double component_density(const GaussianComponent& c, double u) {
  if (u < -1.0 || u > 1.0) return 0.0;
  const double z = (u - c.mean) / c.stddev;
  const double phi = std::exp(-0.5 * z * z) / (c.stddev * std::sqrt(2.0 * 3.14159265358979323846));
  return phi / component_mass(c);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) < 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

double stable_log1p_exp(double z) {
  // log(1 + exp(z)) without overflow
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double classification_accuracy(const Eigen::MatrixXd& features, const Eigen::VectorXd& w,
                               const std::vector<int>& labels) {
  const Eigen::VectorXd z = features * w;
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if ((z[i] > 0.0) == (labels[static_cast<std::size_t>(i)] == 1)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(z.size());
}

// Fisher-Yates with the counter generator.
void shuffle_indices(std::vector<std::size_t>& idx, CounterRng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

double mixture_density(const GaussianMixture& mixture, double u) {
  double density = 0.0;
  for (const auto& c : mixture.components) density += c.weight * component_density(c, u);
  return density;
}

double sample_mixture(const GaussianMixture& mixture, CounterRng& rng) {
  if (mixture.components.empty())
    throw std::invalid_argument("sample_mixture: mixture has no components");
  double total_weight = 0.0;
  for (const auto& c : mixture.components) total_weight += c.weight;
  const double pick = rng.next_unit() * total_weight;
  double acc = 0.0;
  const GaussianComponent* chosen = &mixture.components.back();
  for (const auto& c : mixture.components) {
    acc += c.weight;
    if (pick < acc) {
      chosen = &c;
      break;
    }
  }
  // Rejection from the untruncated component; [-1, 1] always has mass here.
  for (;;) {
    const double u = chosen->mean + chosen->stddev * rng.next_normal();
    if (u >= -1.0 && u <= 1.0) return u;
  }
}

GaussianMixture demo_density_class0() {
  return {{{0.5, -0.55, 0.13}, {0.5, 0.20, 0.13}}};
}

GaussianMixture demo_density_class1() {
  return {{{0.4, -0.15, 0.13}, {0.6, 0.65, 0.13}}};
}

ClassificationTask make_task(const GaussianMixture& p0, const GaussianMixture& p1,
                             int n_train, int n_test, std::uint64_t seed) {
  if (n_train < 2 || n_test < 1) throw std::invalid_argument("make_task: splits too small");
  ClassificationTask task;
  task.p0 = p0;
  task.p1 = p1;
  task.seed = seed;

  auto draw = [&](const GaussianMixture& density, int count, std::uint64_t stream,
                  int label, std::vector<double>& us, std::vector<int>& labels) {
    CounterRng rng(stream);
    for (int i = 0; i < count; ++i) {
      us.push_back(sample_mixture(density, rng));
      labels.push_back(label);
    }
  };
  const int train0 = (n_train + 1) / 2;
  const int test0 = (n_test + 1) / 2;
  draw(p0, train0, fork_seed(seed, 0), 0, task.train_u, task.train_label);
  draw(p1, n_train - train0, fork_seed(seed, 1), 1, task.train_u, task.train_label);
  draw(p0, test0, fork_seed(seed, 2), 0, task.test_u, task.test_label);
  draw(p1, n_test - test0, fork_seed(seed, 3), 1, task.test_u, task.test_label);
  return task;
}

double bayes_rate(const GaussianMixture& p0, const GaussianMixture& p1) {
  const auto integrand = [&](double u) {
    return 0.5 * std::max(mixture_density(p0, u), mixture_density(p1, u));
  };
  return integrate(integrand, -1.0, 1.0, 1e-6);
}

LogisticFit logistic_train(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                           double ridge) {
  const Eigen::Index n = features.rows();
  const Eigen::Index k = features.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw std::invalid_argument("logistic_train: label count does not match rows");

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;

  const auto loss_of = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd z = features * w;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) loss += stable_log1p_exp(z[i]) - y[i] * z[i];
    return loss / static_cast<double>(n) + ridge * w.squaredNorm();
  };

  LogisticFit fit;
  fit.weights = Eigen::VectorXd::Zero(k);
  double loss = loss_of(fit.weights);

  for (int iter = 0; iter < 500; ++iter) {
    fit.iterations = iter + 1;
    const Eigen::VectorXd z = features * fit.weights;
    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) p[i] = 1.0 / (1.0 + std::exp(-z[i]));

    const Eigen::VectorXd grad =
        features.transpose() * (p - y) / static_cast<double>(n) + 2.0 * ridge * fit.weights;
    fit.grad_norm = grad.norm();
    if (fit.grad_norm < 1e-8) {
      fit.converged = true;
      return fit;
    }

    const Eigen::VectorXd curvature = p.array() * (1.0 - p.array());
    Eigen::MatrixXd hessian =
        features.transpose() * curvature.asDiagonal() * features / static_cast<double>(n);
    hessian.diagonal().array() += 2.0 * ridge;
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);

    // Halve the Newton step until the penalized loss decreases.
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 50; ++half) {
      const Eigen::VectorXd trial = fit.weights - scale * step;
      const double trial_loss = loss_of(trial);
      if (trial_loss <= loss) {
        fit.weights = trial;
        loss = trial_loss;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;  // stalled; report the final gradient norm
  }
  fit.converged = fit.grad_norm < 1e-8;
  return fit;
}

FitReport pca_fit(const Eigen::VectorXd& target, const Eigen::MatrixXd& tasks, int k_used) {
  if (target.squaredNorm() <= 0.0) throw std::invalid_argument("pca_fit: target is zero");
  if (k_used < 1 || k_used > tasks.cols())
    throw std::invalid_argument("pca_fit: k_used out of range");
  const auto block = tasks.leftCols(k_used);
  FitReport report;
  report.k_used = k_used;
  report.weights = block.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(target);
  report.relative_mse = (target - block * report.weights).squaredNorm() / target.squaredNorm();
  return report;
}

FitReport fit_topweight_features(const Eigen::VectorXd& target, const FeatureMatrix& f,
                                 int k_used) {
  if (target.squaredNorm() <= 0.0)
    throw std::invalid_argument("fit_topweight_features: target is zero");
  if (k_used < 1 || k_used > f.values.cols())
    throw std::invalid_argument("fit_topweight_features: k_used out of range");

  const Eigen::VectorXd w_full =
      f.values.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(target);
  const Eigen::VectorXd power = f.values.cwiseAbs2().colwise().mean();
  const Eigen::VectorXd score = w_full.cwiseAbs2().cwiseProduct(power);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(score.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return score[a] > score[b]; });

  Eigen::MatrixXd selected(f.values.rows(), k_used);
  for (int j = 0; j < k_used; ++j) selected.col(j) = f.values.col(order[static_cast<std::size_t>(j)]);

  FitReport report;
  report.k_used = k_used;
  report.selected.assign(order.begin(), order.begin() + k_used);
  report.weights = selected.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(target);
  report.relative_mse =
      (target - selected * report.weights).squaredNorm() / target.squaredNorm();
  return report;
}

namespace {

struct Split {
  std::vector<double> train_u, test_u;
  std::vector<int> train_label, test_label;
};

// Reshuffle the combined pool into a fresh split with the original per-class
// counts, so every permutation stays balanced.
Split permute_split(const ClassificationTask& task, std::uint64_t seed) {
  Split split;
  CounterRng rng(seed);
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<double> pool;
    std::size_t train_count = 0;
    for (std::size_t i = 0; i < task.train_u.size(); ++i)
      if (task.train_label[i] == cls) {
        pool.push_back(task.train_u[i]);
        ++train_count;
      }
    for (std::size_t i = 0; i < task.test_u.size(); ++i)
      if (task.test_label[i] == cls) pool.push_back(task.test_u[i]);

    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    shuffle_indices(idx, rng);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i < train_count) {
        split.train_u.push_back(pool[idx[i]]);
        split.train_label.push_back(cls);
      } else {
        split.test_u.push_back(pool[idx[i]]);
        split.test_label.push_back(cls);
      }
    }
  }
  return split;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ClassifyOutcome classify_pipeline(const EncodingSpec& spec, const ClassificationTask& task,
                                  double shots, const std::vector<int>& k_list,
                                  int n_permutations, std::uint64_t seed, bool fit_at_kc) {
  if (n_permutations < 1) throw std::invalid_argument("classify_pipeline: need >= 1 permutation");
  if (k_list.empty() && !fit_at_kc)
    throw std::invalid_argument("classify_pipeline: k_list is empty");

  ClassifyOutcome outcome;
  for (int perm = 0; perm < n_permutations; ++perm) {
    const std::uint64_t base = fork_seed(seed, static_cast<std::uint64_t>(perm));
    const Split split = permute_split(task, fork_seed(base, 0));

    const FeatureMatrix f_train =
        feature_matrix(spec, to_vector(split.train_u), shots, fork_seed(base, 1));
    const FeatureMatrix f_test =
        feature_matrix(spec, to_vector(split.test_u), shots, fork_seed(base, 2));

    const SpectralResult analysis = solve_nsr(estimate_moments(f_train));
    const SpectralResult corrected =
        f_train.expected() ? analysis : correct_finite_shots(analysis, shots);
    const Eigen::Index kc = kc_cutoff(corrected.beta2, shots);
    outcome.kc.push_back(kc);

    const Eigen::MatrixXd tasks_train = eigentasks(analysis, f_train);
    const Eigen::MatrixXd tasks_test = eigentasks(analysis, f_test);

    const auto fit_truncated = [&](int k_requested) {
      const int k = std::clamp<int>(k_requested, 1, static_cast<int>(tasks_train.cols()));
      const LogisticFit fit = logistic_train(tasks_train.leftCols(k), split.train_label);
      FitReport report;
      report.k_used = k;
      report.permutation = perm;
      report.weights = fit.weights;
      report.converged = fit.converged;
      report.train_accuracy =
          classification_accuracy(tasks_train.leftCols(k), fit.weights, split.train_label);
      report.test_accuracy =
          classification_accuracy(tasks_test.leftCols(k), fit.weights, split.test_label);
      outcome.all_converged = outcome.all_converged && fit.converged;
      return report;
    };

    for (int k_requested : k_list) outcome.reports.push_back(fit_truncated(k_requested));
    if (fit_at_kc) outcome.kc_reports.push_back(fit_truncated(static_cast<int>(kc)));
  }
  return outcome;
}

}  // namespace eigentask
