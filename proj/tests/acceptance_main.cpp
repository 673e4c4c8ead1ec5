// Acceptance suite: one check per release criterion, each printing a single
// PASS/FAIL line. Exit code is the number of failed criteria.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "eigentask/learning.hpp"
#include "eigentask/metrics.hpp"
#include "eigentask/rng.hpp"
#include "eigentask/simulate.hpp"
#include "eigentask/spectral.hpp"

using namespace eigentask;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      detail << (detail.str().empty() ? "" : "; ") << what;
    }
  }
};

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

// --- 1. analytic 2-design spectrum and capacity ---------------------------
void criterion_two_design(Check& c) {
  for (Eigen::Index k : {4, 16, 64}) {
    const auto result = solve_nsr(two_design_moments(k));
    Eigen::VectorXd want = Eigen::VectorXd::Constant(k, double(k));
    want[0] = 0.0;
    const double err = max_abs(result.beta2 - want);
    c.require(err < 1e-9, "beta2 error " + std::to_string(err) + " at K=" + std::to_string(k));
    for (double s : {1.0, 100.0, 16384.0}) {
      const double got = expressive_capacity(result.beta2, s);
      const double want_ct = double(k) * (s + 1.0) / (s + double(k));
      c.require(std::abs(got - want_ct) / want_ct < 1e-9,
                "C_T mismatch at K=" + std::to_string(k) + ", S=" + std::to_string(long(s)));
    }
  }
  c.detail << (c.detail.str().empty() ? "spectra and capacities exact for K in {4,16,64}" : "");
}

// --- 2. noiseless capacity equals the feature count -----------------------
void criterion_noiseless_bound(Check& c) {
  RandomEncodingOptions options;
  options.J = kPi / 2.0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto spec = random_encoding(Ansatz::Circuit, 5, options, 100 + seed);
    const auto f = feature_matrix(spec, grid_inputs(4000), kExpectedShots, 0);
    const auto result = solve_nsr(estimate_moments(f));
    const double ec = expressive_capacity(result, kExpectedShots);
    worst = std::max(worst, std::abs(ec - 32.0));
  }
  c.require(worst < 1e-3, "worst |C_T - 32| = " + std::to_string(worst));
  c.detail << "8 encodings, worst |C_T(inf) - 32| = " << worst;
}

// --- 3. finite-shot correction tracks the true spectrum -------------------
void criterion_correction_fidelity(Check& c) {
  RandomEncodingOptions options;
  options.J = 1.0;
  const auto spec = random_encoding(Ansatz::Hamiltonian, 5, options, 7);
  const auto inputs = grid_inputs(10000);
  const double shots = 100.0;

  const auto truth = solve_nsr(estimate_moments(feature_matrix(spec, inputs, kExpectedShots, 0)));
  const auto raw = solve_nsr(estimate_moments(feature_matrix(spec, inputs, shots, 20250101)));
  const auto corrected = correct_finite_shots(raw, shots);

  // Uncorrectable tags are exactly the raw values at or above S - 1.
  std::size_t next_unc = 0;
  for (Eigen::Index i = 0; i < raw.beta2.size(); ++i) {
    const bool tagged = next_unc < corrected.uncorrectable.size() &&
                        corrected.uncorrectable[next_unc] == i;
    if (tagged) ++next_unc;
    c.require(tagged == (raw.beta2[i] >= shots - 1.0), "uncorrectable tag mismatch");
  }

  int compared = 0;
  double worst_rel = 0.0;
  double worst_stable = 0.0;  // indices whose raw value sits clear of the S-1 boundary
  next_unc = 0;
  for (Eigen::Index i = 0; i < corrected.beta2.size(); ++i) {
    if (next_unc < corrected.uncorrectable.size() && corrected.uncorrectable[next_unc] == i) {
      ++next_unc;
      continue;
    }
    if (i >= truth.beta2.size()) break;
    const double want = truth.beta2[i];
    if (want > 0.5) {
      const double rel = std::abs(corrected.beta2[i] - want) / want;
      worst_rel = std::max(worst_rel, rel);
      if (raw.beta2[i] < 0.8 * (shots - 1.0)) worst_stable = std::max(worst_stable, rel);
      c.require(raw.beta2[i] < want, "raw btilde fails to underestimate at k=" + std::to_string(i));
      ++compared;
    }
  }
  c.require(compared > 5, "too few correctable indices to compare");
  c.require(worst_rel < 0.25, "worst corrected/true deviation " + std::to_string(worst_rel) +
                                  " over all correctable indices");
  c.detail << compared << " correctable indices, worst relative error " << worst_rel
           << " (boundary-distant indices only: " << worst_stable << "), uncorrectable "
           << corrected.uncorrectable.size();
}

// --- 4. eigentask orthogonality, clean and noisy --------------------------
void criterion_eigentask_orthogonality(Check& c) {
  RandomEncodingOptions options;
  options.J = kPi / 2.0;
  const auto spec = random_encoding(Ansatz::Circuit, 6, options, 11);
  const auto inputs = grid_inputs(5000);
  const auto exact = feature_matrix(spec, inputs, kExpectedShots, 0);
  const auto truth = solve_nsr(estimate_moments(exact));

  const Eigen::MatrixXd clean = eigentasks(truth, exact);
  const Eigen::MatrixXd gram =
      clean.transpose() * clean / double(inputs.size()) -
      Eigen::MatrixXd::Identity(clean.cols(), clean.cols());
  c.require(gram.cwiseAbs().maxCoeff() < 2e-2,
            "clean Gram deviation " + std::to_string(gram.cwiseAbs().maxCoeff()));

  const double shots = 1024.0;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(truth.beta2.size());
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto noisy = feature_matrix(spec, inputs, shots, 40000 + std::uint64_t(s));
    diag += (eigentasks(truth, noisy).transpose() * eigentasks(truth, noisy) /
             double(inputs.size()))
                .diagonal();
  }
  diag /= double(seeds);
  double worst = 0.0;
  int checked = 0;
  for (Eigen::Index k = 0; k < truth.beta2.size(); ++k) {
    if (!(truth.beta2[k] < shots / 10.0)) continue;
    const double want = 1.0 + truth.beta2[k] / shots;
    worst = std::max(worst, std::abs(diag[k] - want) / want);
    ++checked;
  }
  c.require(checked > 0, "no eigenvalues below S/10");
  c.require(worst < 0.10, "noisy Gram diagonal off by " + std::to_string(worst));
  c.detail << "clean max dev " << gram.cwiseAbs().maxCoeff() << ", noisy diag worst rel " << worst
           << " over " << checked << " tasks";
}

// --- 5. coupling raises capacity and correlation --------------------------
void criterion_cs_vs_ps(Check& c) {
  const double shots = 16384.0;
  const auto inputs = grid_inputs(300);
  int positive = 0;
  double mean_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    RandomEncodingOptions coupled_options;
    coupled_options.J = kPi / 2.0;
    RandomEncodingOptions product_options;
    product_options.J = 0.0;
    const auto coupled = random_encoding(Ansatz::Circuit, 6, coupled_options, seed);
    const auto product = random_encoding(Ansatz::Circuit, 6, product_options, seed);

    const auto ec_of = [&](const EncodingSpec& spec) {
      const auto f = feature_matrix(spec, inputs, kExpectedShots, 0);
      return expressive_capacity(solve_nsr(estimate_moments(f)), shots);
    };
    const double gap = ec_of(coupled) - ec_of(product);
    mean_gap += gap;
    if (gap > 0.0) ++positive;

    const double etc_coupled = expected_total_correlation(coupled, inputs).etc;
    const double etc_product = expected_total_correlation(product, inputs).etc;
    c.require(etc_coupled > etc_product, "ETC ordering failed at seed " + std::to_string(seed));
    c.require(etc_product < 1e-9, "product-system ETC not zero");
  }
  mean_gap /= 8.0;
  c.require(mean_gap > 0.0, "mean capacity gap not positive");
  c.require(positive >= 7, "capacity gap positive for only " + std::to_string(positive) + "/8");
  c.detail << "mean C_T gap " << mean_gap << ", positive for " << positive << "/8 encodings";
}

// --- 6. spectrum invariance under outcome relabeling ----------------------
void criterion_relabeling(Check& c) {
  CounterRng rng(909);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    RandomEncodingOptions options;
    options.J = kPi / 2.0;
    const bool heavy = trial >= 8;  // two L = 6 sampled cases, eight small exact ones
    const int qubits = heavy ? 6 : 3 + trial % 3;
    const auto spec = random_encoding(Ansatz::Circuit, qubits, options, rng.next_u64());
    const auto f = heavy ? feature_matrix(spec, grid_inputs(300), 16384.0, rng.next_u64())
                         : feature_matrix(spec, grid_inputs(500), kExpectedShots, 0);
    const auto base = solve_nsr(estimate_moments(f));

    const Eigen::Index n = f.values.cols();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n), 0);
    if (trial % 2 == 0) {
      // CNOT layer with control qubit 0, target qubit 1.
      const Eigen::Index control = Eigen::Index(1) << (qubits - 1);
      const Eigen::Index target = Eigen::Index(1) << (qubits - 2);
      for (Eigen::Index k = 0; k < n; ++k)
        perm[std::size_t(k)] = (k & control) ? (k ^ target) : k;
    } else {
      for (Eigen::Index k = 0; k < n; ++k) perm[std::size_t(k)] = k;
      for (std::size_t i = std::size_t(n); i > 1; --i)
        std::swap(perm[i - 1], perm[std::size_t(rng.next_u64() % i)]);
    }
    FeatureMatrix shuffled = f;
    for (Eigen::Index k = 0; k < n; ++k) shuffled.values.col(perm[std::size_t(k)]) = f.values.col(k);

    const auto relabeled = solve_nsr(estimate_moments(shuffled));
    for (Eigen::Index i = 0; i < base.beta2.size(); ++i) {
      if (!std::isfinite(base.beta2[i]) || !std::isfinite(relabeled.beta2[i])) {
        c.require(std::isfinite(base.beta2[i]) == std::isfinite(relabeled.beta2[i]),
                  "rank mismatch after relabeling");
        continue;
      }
      worst = std::max(worst, std::abs(relabeled.beta2[i] - base.beta2[i]) /
                                  std::max(1.0, base.beta2[i]));
    }
  }
  c.require(worst < 1e-10, "worst relative spectrum shift " + std::to_string(worst));
  c.detail << "10 cases (CNOT layer and random relabelings), worst shift " << worst;
}

// --- 7. the zero-noise eigentask is constant ------------------------------
void criterion_zero_noise_task(Check& c) {
  CounterRng rng(4242);
  RandomEncodingOptions options;
  int analyzed = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const bool circuit = trial % 2 == 0;
    const int qubits = 2 + trial % 4;
    const auto spec = random_encoding(circuit ? Ansatz::Circuit : Ansatz::Hamiltonian, qubits,
                                      options, rng.next_u64());
    const double shots = trial % 3 == 0 ? kExpectedShots : 512.0;
    const auto f = feature_matrix(spec, grid_inputs(400), shots, rng.next_u64());
    const auto result = solve_nsr(estimate_moments(f));
    const Eigen::MatrixXd tasks = eigentasks(result, f);
    c.require(result.beta2[0] < 1e-9, "min beta2 = " + std::to_string(result.beta2[0]));
    const double dev = (tasks.col(0).array() - tasks.col(0).mean()).abs().maxCoeff();
    c.require(dev < 1e-9, "constant task deviation " + std::to_string(dev));
    ++analyzed;
  }
  c.detail << analyzed << " feature matrices (both ansaetze, exact and sampled)";
}

// --- 8. multinomial covariance law -----------------------------------------
void criterion_covariance_law(Check& c) {
  CounterRng rng(808);
  RandomEncodingOptions options;
  const long shots = 100;
  const int repeats = 10000;
  for (int trial = 0; trial < 5; ++trial) {
    const bool circuit = trial % 2 == 0;
    const int qubits = 2 + trial % 2;
    const auto spec = random_encoding(circuit ? Ansatz::Circuit : Ansatz::Hamiltonian, qubits,
                                      options, rng.next_u64());
    const double u = rng.next_uniform(-1.0, 1.0);
    const Eigen::VectorXd x = probabilities(spec, u);
    const Eigen::Index n = x.size();

    Eigen::MatrixXd draws(repeats, n);
    const std::uint64_t stream = rng.next_u64();
    for (int r = 0; r < repeats; ++r)
      draws.row(r) = frequencies(sample_shots(x, shots, fork_seed(stream, std::uint64_t(r))), n);
    const Eigen::RowVectorXd mean = draws.colwise().mean();
    const Eigen::MatrixXd centered = draws.rowwise() - mean;
    const Eigen::MatrixXd empirical = centered.transpose() * centered / double(repeats - 1);
    const Eigen::MatrixXd expected = covariance(x) / double(shots);

    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double se = std::sqrt((expected(i, i) * expected(j, j) +
                                     expected(i, j) * expected(i, j)) /
                                    double(repeats)) +
                          1e-15;
        c.require(std::abs(empirical(i, j) - expected(i, j)) < 5.0 * se,
                  "covariance entry outside 5 SE in trial " + std::to_string(trial));
      }
    }
  }
  c.detail << "5 random (spec, u) cases, all entries within 5 standard errors";
}

// --- 9. classification shape ------------------------------------------------
void criterion_classification(Check& c) {
  // Product-system encoding: its NSR cutoff at S = 2^14 sits inside the range
  // the 150-point training set can exploit, so the cutoff is what binds.
  RandomEncodingOptions options;
  options.J = 0.0;
  const auto spec = random_encoding(Ansatz::Circuit, 6, options, 606);
  const double shots = 16384.0;
  const auto task = make_task(demo_density_class0(), demo_density_class1(), 150, 150, 31);

  std::vector<int> k_list;
  for (int k = 1; k <= 64; ++k) k_list.push_back(k);
  const auto outcome = classify_pipeline(spec, task, shots, k_list, 10, 99);

  std::map<int, std::pair<double, double>> sums;
  std::map<int, int> counts;
  for (const auto& r : outcome.reports) {
    sums[r.k_used].first += r.train_accuracy;
    sums[r.k_used].second += r.test_accuracy;
    counts[r.k_used] += 1;
  }
  int k_max = 0;
  for (const auto& [k, n] : counts) k_max = std::max(k_max, k);

  const double train_full = sums[k_max].first / counts[k_max];
  const double test_full = sums[k_max].second / counts[k_max];
  c.require(train_full - test_full > 0.02,
            "overfitting gap " + std::to_string(train_full - test_full));

  // Ground-truth cutoff from the expected spectrum on the standard grid.
  const auto truth =
      solve_nsr(estimate_moments(feature_matrix(spec, grid_inputs(300), kExpectedShots, 0)));
  const auto kc = kc_cutoff(truth.beta2, shots);

  int argmax_k = 0;
  double best_test = -1.0;
  for (const auto& [k, s] : sums) {
    const double mean_test = s.second / counts[k];
    if (mean_test > best_test) {
      best_test = mean_test;
      argmax_k = k;
    }
  }
  c.require(std::abs(argmax_k - int(kc)) <= 5,
            "argmax K_L = " + std::to_string(argmax_k) + " vs K_c = " + std::to_string(kc));

  const double bayes = bayes_rate(task.p0, task.p1);
  const double bound = bayes + 3.0 * std::sqrt(bayes * (1.0 - bayes) / 150.0);
  c.require(best_test <= bound, "test accuracy " + std::to_string(best_test) +
                                    " above Bayes bound " + std::to_string(bound));
  c.detail << "gap " << train_full - test_full << " at K_L=" << k_max << ", argmax "
           << argmax_k << " vs K_c " << kc << ", best test " << best_test << " <= bound "
           << bound;
}

// --- 10. eigentask truncation beats top-weight raw features ----------------
void criterion_pca_ordering(Check& c) {
  RandomEncodingOptions options;
  options.J = 0.5;
  const double shots = 5000.0;
  const auto inputs = grid_inputs(2000);
  const Eigen::VectorXd target = inputs;  // f(u) = u
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto spec = random_encoding(Ansatz::Hamiltonian, 6, options, 900 + seed);
    // Fit both truncations on one S-shot draw, evaluate on an independent
    // draw: the held-out error estimates the population objective rather
    // than rewarding whichever basis overfits its own noise more.
    const auto fit_draw = feature_matrix(spec, inputs, shots, 7000 + seed);
    const auto eval_draw = feature_matrix(spec, inputs, shots, 8000 + seed);
    const auto analysis = solve_nsr(estimate_moments(fit_draw));
    const auto corrected = correct_finite_shots(analysis, shots);
    const int kc = int(kc_cutoff(corrected.beta2, shots));

    const auto task_fit = pca_fit(target, eigentasks(analysis, fit_draw), kc);
    const double task_mse =
        (target - eigentasks(analysis, eval_draw).leftCols(kc) * task_fit.weights)
            .squaredNorm() /
        target.squaredNorm();

    const auto raw_fit = fit_topweight_features(target, fit_draw, kc);
    Eigen::MatrixXd selected_eval(inputs.size(), kc);
    for (int j = 0; j < kc; ++j)
      selected_eval.col(j) = eval_draw.values.col(raw_fit.selected[std::size_t(j)]);
    const double raw_mse =
        (target - selected_eval * raw_fit.weights).squaredNorm() / target.squaredNorm();

    if (task_mse < raw_mse) ++wins;
    c.detail << (seed ? ", " : "") << "seed " << 900 + seed << ": " << task_mse << " vs "
             << raw_mse << " (K_c=" << kc << ")";
  }
  c.require(wins >= 4, "eigentask basis won only " + std::to_string(wins) + "/5");
}

// --- 11. product-system moment NSR scaling ---------------------------------
void criterion_moment_nsr(Check& c) {
  RandomEncodingOptions options;
  options.J = 0.0;  // product system
  options.t = 1.0;
  options.mean_hx = 8.0;
  options.rms_hx = 2.0;
  options.mean_hz = 3.0;
  options.rms_hz = 2.0;
  options.mean_hI = 5.0;
  options.rms_hI = 2.0;
  const int qubits = 6;
  const auto spec = random_encoding(Ansatz::Hamiltonian, qubits, options, 1111);
  const double u = 0.5;
  const Eigen::VectorXd x = probabilities(spec, u);
  const Eigen::VectorXd true_moments = probability_to_moments(x);
  const Eigen::Index n = x.size();
  const int repeats = 200;

  const auto medians_at = [&](long shots, std::uint64_t stream) {
    Eigen::MatrixXd drawn(repeats, n);
    for (int r = 0; r < repeats; ++r)
      drawn.row(r) = probability_to_moments(
          frequencies(sample_shots(x, shots, fork_seed(stream, std::uint64_t(r))), n));
    const Eigen::RowVectorXd mean = drawn.colwise().mean();
    std::vector<double> medians;
    for (int m = 1; m <= qubits - 1; ++m) {
      std::vector<double> values;
      for (Eigen::Index mask = 1; mask < n; ++mask) {
        int bits = 0;
        for (Eigen::Index b = mask; b; b &= b - 1) ++bits;
        if (bits != m) continue;
        const double sd = std::sqrt(
            (drawn.col(mask).array() - mean[mask]).square().sum() / double(repeats - 1));
        values.push_back(sd / std::abs(true_moments[mask]));
      }
      std::sort(values.begin(), values.end());
      medians.push_back(values.size() % 2 ? values[values.size() / 2]
                                          : 0.5 * (values[values.size() / 2 - 1] +
                                                   values[values.size() / 2]));
    }
    return medians;
  };

  const auto base = medians_at(1000, 11);
  const auto quad = medians_at(4000, 22);
  for (std::size_t m = 1; m < base.size(); ++m)
    c.require(base[m] > base[m - 1],
              "median NSR not increasing from m=" + std::to_string(m) + " to " +
                  std::to_string(m + 1));
  for (std::size_t m = 0; m < base.size(); ++m) {
    const double ratio = quad[m] / base[m];
    c.require(std::abs(ratio - 0.5) <= 0.125,
              "4x shots ratio " + std::to_string(ratio) + " at m=" + std::to_string(m + 1));
  }
  c.detail << "medians at S=1000:";
  for (double v : base) c.detail << " " << v;
}

struct Criterion {
  int id;
  std::string name;
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "2-design exactness", criterion_two_design},
      {2, "noiseless capacity bound", criterion_noiseless_bound},
      {3, "finite-S correction fidelity", criterion_correction_fidelity},
      {4, "eigentask orthogonality", criterion_eigentask_orthogonality},
      {5, "CS > PS capacity and correlation ordering", criterion_cs_vs_ps},
      {6, "spectrum relabeling invariance", criterion_relabeling},
      {7, "zero-noise eigentask", criterion_zero_noise_task},
      {8, "covariance law", criterion_covariance_law},
      {9, "classification shape", criterion_classification},
      {10, "PCA ordering", criterion_pca_ordering},
      {11, "moment-NSR scaling", criterion_moment_nsr},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail << "exception: " << e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %2d (%6.1fs): %s%s%s\n", check.ok ? "PASS" : "FAIL",
                criterion.id, seconds, criterion.name.c_str(),
                check.detail.str().empty() ? "" : " -- ", check.detail.str().c_str());
    std::fflush(stdout);
    if (!check.ok) ++failures;
  }
  if (failures) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures;
}
