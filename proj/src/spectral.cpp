#include "eigentask/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eigentask {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Below this second moment a feature column is treated as never observed.
// Sampled data cannot produce a nonzero mean under 1/(N*S); expected data
// uses a small absolute floor for exact structural zeros.
double prune_threshold(Eigen::Index n_inputs, double shots) {
  if (is_expected(shots)) return 1e-13;
  return 0.5 / (static_cast<double>(n_inputs) * shots);
}

struct Mode {
  double alpha = 0.0;
  double beta2 = 0.0;
  Eigen::VectorXd r;  // full K rows
};

// Shared post-processing: normalization, sign convention, ordering, and
// embedding of kept-space vectors into full feature space.
SpectralResult finalize_modes(const Eigen::VectorXd& alphas, const Eigen::MatrixXd& tvecs,
                              const Eigen::VectorXd& d_kept,
                              const std::vector<Eigen::Index>& kept, Eigen::Index n_features,
                              std::vector<Eigen::Index> pruned) {
  const Eigen::Index n_kept = d_kept.size();
  const Eigen::VectorXd inv_sqrt_d = d_kept.cwiseSqrt().cwiseInverse();

  // Signal directions at the numerical-rank floor are zero-signal: their
  // beta2 is infinite rather than an arbitrary huge number, which keeps the
  // explicit and Gram-free routes consistent.
  const double alpha_floor = 1e-12 * std::max(alphas.maxCoeff(), 0.0);

  std::vector<Mode> modes(static_cast<std::size_t>(n_kept));
  for (Eigen::Index i = 0; i < n_kept; ++i) {
    Mode& mode = modes[static_cast<std::size_t>(i)];
    mode.alpha = alphas[i] > alpha_floor ? alphas[i] : 0.0;
    mode.beta2 = mode.alpha > 0.0 ? std::max(0.0, 1.0 / mode.alpha - 1.0) : kInf;

    Eigen::VectorXd r_kept = inv_sqrt_d.cwiseProduct(tvecs.col(i));
    if (mode.alpha > 0.0) r_kept /= std::sqrt(mode.alpha);  // r^T G r = 1

    // Sign convention: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    r_kept.cwiseAbs().maxCoeff(&arg);
    if (r_kept[arg] < 0.0) r_kept = -r_kept;

    mode.r = Eigen::VectorXd::Zero(n_features);
    for (Eigen::Index j = 0; j < n_kept; ++j) mode.r[kept[static_cast<std::size_t>(j)]] = r_kept[j];
  }

  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& a, const Mode& b) { return a.beta2 < b.beta2; });

  // Deterministic order inside (near-)degenerate groups: lexicographic on
  // eigenvector entries rounded at 1e-9.
  auto lex_less = [](const Mode& a, const Mode& b) {
    for (Eigen::Index j = 0; j < a.r.size(); ++j) {
      const double x = std::round(a.r[j] * 1e9);
      const double y = std::round(b.r[j] * 1e9);
      if (x != y) return x < y;
    }
    return false;
  };
  std::size_t lo = 0;
  while (lo < modes.size()) {
    std::size_t hi = lo + 1;
    auto same = [&](double a, double b) {
      if (std::isinf(a) && std::isinf(b)) return true;
      return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
    };
    while (hi < modes.size() && same(modes[hi].beta2, modes[lo].beta2)) ++hi;
    std::sort(modes.begin() + lo, modes.begin() + hi, lex_less);
    lo = hi;
  }

  SpectralResult result;
  result.beta2.resize(n_kept);
  result.alpha.resize(n_kept);
  result.r.resize(n_features, n_kept);
  for (Eigen::Index i = 0; i < n_kept; ++i) {
    const Mode& mode = modes[static_cast<std::size_t>(i)];
    result.beta2[i] = mode.beta2;
    result.alpha[i] = mode.alpha;
    result.r.col(i) = mode.r;
  }
  result.pruned = std::move(pruned);
  return result;
}

std::vector<Eigen::Index> kept_indices(const Eigen::VectorXd& d, double threshold,
                                       std::vector<Eigen::Index>& pruned) {
  std::vector<Eigen::Index> kept;
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (d[k] > threshold)
      kept.push_back(k);
    else
      pruned.push_back(k);
  }
  if (kept.empty()) throw std::runtime_error("solve_nsr: all feature columns pruned");
  return kept;
}

}  // namespace

MomentMatrices estimate_moments(const FeatureMatrix& f) {
  if (f.values.rows() < 2) throw std::invalid_argument("estimate_moments: need N >= 2 inputs");
  MomentMatrices m;
  m.n_inputs = f.values.rows();
  m.shots = f.shots;
  const double n = static_cast<double>(m.n_inputs);
  m.G = f.values.transpose() * f.values / n;
  m.D = f.values.colwise().mean();
  m.V = -m.G;
  m.V.diagonal() += m.D;
  return m;
}

SpectralResult solve_nsr(const MomentMatrices& m) {
  std::vector<Eigen::Index> pruned;
  const auto kept = kept_indices(m.D, prune_threshold(m.n_inputs, m.shots), pruned);
  const Eigen::Index n_kept = static_cast<Eigen::Index>(kept.size());

  Eigen::VectorXd d_kept(n_kept);
  Eigen::MatrixXd g_kept(n_kept, n_kept);
  for (Eigen::Index i = 0; i < n_kept; ++i) {
    d_kept[i] = m.D[kept[static_cast<std::size_t>(i)]];
    for (Eigen::Index j = 0; j < n_kept; ++j)
      g_kept(i, j) = m.G(kept[static_cast<std::size_t>(i)], kept[static_cast<std::size_t>(j)]);
  }

  const Eigen::VectorXd inv_sqrt_d = d_kept.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd sym = inv_sqrt_d.asDiagonal() * g_kept * inv_sqrt_d.asDiagonal();
  sym = ((sym + sym.transpose()) * 0.5).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("solve_nsr: eigensolver failed to converge");

  return finalize_modes(solver.eigenvalues(), solver.eigenvectors(), d_kept, kept,
                        m.D.size(), std::move(pruned));
}

SpectralResult solve_nsr_gram_free(const FeatureMatrix& f) {
  if (f.values.rows() < 2) throw std::invalid_argument("solve_nsr_gram_free: need N >= 2 inputs");
  const Eigen::VectorXd d = f.values.colwise().mean();

  std::vector<Eigen::Index> pruned;
  const auto kept = kept_indices(d, prune_threshold(f.values.rows(), f.shots), pruned);
  const Eigen::Index n_kept = static_cast<Eigen::Index>(kept.size());

  Eigen::VectorXd d_kept(n_kept);
  Eigen::MatrixXd scaled(n_kept, f.values.rows());  // (1/sqrt(N)) D^{-1/2} F^T
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(f.values.rows()));
  for (Eigen::Index i = 0; i < n_kept; ++i) {
    const Eigen::Index k = kept[static_cast<std::size_t>(i)];
    d_kept[i] = d[k];
    scaled.row(i) = f.values.col(k).transpose() * (inv_sqrt_n / std::sqrt(d[k]));
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeFullU);
  Eigen::VectorXd alphas = Eigen::VectorXd::Zero(n_kept);
  const Eigen::Index n_sv = svd.singularValues().size();
  for (Eigen::Index i = 0; i < std::min(n_sv, n_kept); ++i) {
    const double sv = svd.singularValues()[i];
    alphas[i] = sv * sv;
  }
  return finalize_modes(alphas, svd.matrixU(), d_kept, kept, d.size(), std::move(pruned));
}

SpectralResult correct_finite_shots(SpectralResult result, double shots) {
  result.corrected = true;
  result.uncorrectable.clear();
  if (is_expected(shots)) return result;
  for (Eigen::Index i = 0; i < result.beta2.size(); ++i) {
    const double bt = result.beta2[i];
    if (bt < shots - 1.0) {
      result.beta2[i] = shots * bt / ((shots - 1.0) - bt);
    } else {
      result.uncorrectable.push_back(i);
    }
  }
  return result;
}

double expressive_capacity(const Eigen::VectorXd& beta2, double shots) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < beta2.size(); ++i) {
    if (!std::isfinite(beta2[i])) continue;
    total += is_expected(shots) ? 1.0 : 1.0 / (1.0 + beta2[i] / shots);
  }
  return total;
}

double expressive_capacity(const SpectralResult& result, double shots) {
  double total = 0.0;
  std::size_t next_skip = 0;
  for (Eigen::Index i = 0; i < result.beta2.size(); ++i) {
    if (next_skip < result.uncorrectable.size() && result.uncorrectable[next_skip] == i) {
      ++next_skip;
      continue;
    }
    if (!std::isfinite(result.beta2[i])) continue;
    total += is_expected(shots) ? 1.0 : 1.0 / (1.0 + result.beta2[i] / shots);
  }
  return total;
}

Eigen::MatrixXd eigentasks(const SpectralResult& result, const FeatureMatrix& f) {
  if (f.values.cols() != result.r.rows())
    throw std::invalid_argument("eigentasks: feature count does not match r dimension");
  return f.values * result.r;
}

Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           double rel_cutoff) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? rel_cutoff * sv[0] : 0.0;
  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) inv_sv[i] = 1.0 / sv[i];
  return svd.matrixV() * inv_sv.asDiagonal() * (svd.matrixU().transpose() * b);
}

FunctionFit function_capacity(const FeatureMatrix& f, const Eigen::VectorXd& target,
                              double shots) {
  if (target.size() != f.values.rows())
    throw std::invalid_argument("function_capacity: target length does not match inputs");
  const double n = static_cast<double>(f.values.rows());
  const double target_power = target.squaredNorm() / n;
  if (target_power <= 0.0)
    throw std::invalid_argument("function_capacity: target is identically zero");

  const MomentMatrices m = estimate_moments(f);

  // Sampled features already carry the shot noise in their Gram matrix;
  // expected features get the analytic V/S noise floor added explicitly.
  const bool analytic_noise = f.expected() && !is_expected(shots);
  Eigen::MatrixXd design = m.G;
  if (analytic_noise) design += m.V / shots;

  const Eigen::VectorXd b = f.values.transpose() * target / n;
  const Eigen::VectorXd w = pinv_solve(design, b);

  double mse = (target - f.values * w).squaredNorm() / n;
  if (analytic_noise) mse += w.dot(m.V * w) / shots;

  FunctionFit fit;
  fit.weights = w;
  fit.raw_capacity = 1.0 - mse / target_power;
  fit.capacity = std::clamp(fit.raw_capacity, 0.0, 1.0);
  return fit;
}

}  // namespace eigentask
