// Command-line experiment runner: every subcommand is a pure function from
// (config, seeds) to a set of CSV tables plus one JSON manifest, so reruns
// from the same config are byte-identical.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <array>
#include <bit>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>

#include "eigentask/io.hpp"
#include "eigentask/metrics.hpp"
#include "eigentask/rng.hpp"
#include "eigentask/simulate.hpp"

namespace et = eigentask;
using nlohmann::json;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> shots;
  std::optional<int> repeats;
};

// Any operation that ends in a flagged (non-throwing) numerical failure makes
// the process exit with code 3.
bool g_numerical_flag = false;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw et::io::ConfigError("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw et::io::ConfigError("config parse error in " + path + ": " + e.what());
  }
}

et::io::ExperimentConfig resolve_config(const Overrides& o) {
  json j = load_json(o.config_path);
  if (o.out) j["output_dir"] = *o.out;
  if (o.seed) j["seed"] = *o.seed;
  if (o.repeats) j["repeats"] = *o.repeats;
  if (o.shots) {
    if (*o.shots == "inf" || *o.shots == "expected")
      j["shots"] = *o.shots;
    else
      j["shots"] = std::stol(*o.shots);
  }
  return et::io::parse_config(j);
}

// Creates the run directory, writes the manifest, and returns the provenance
// stamp (run hash plus encoding hash) embedded in every output file.
std::string prepare_run(const et::io::ExperimentConfig& config) {
  std::filesystem::create_directories(config.output_dir);
  et::io::write_manifest(config.output_dir + "/manifest.json", config.raw);
  return "manifest=" + et::io::run_hash(config.raw) +
         " encoding=" + et::io::spec_hash(config.encoding);
}

std::string out_path(const et::io::ExperimentConfig& config, const std::string& name) {
  return config.output_dir + "/" + name;
}

int run_features(const Overrides& o) {
  auto config = resolve_config(o);
  const std::string hash = prepare_run(config);
  const Eigen::VectorXd inputs = config.inputs.materialize(config.seed);
  const std::uint64_t sample_seed = et::fork_seed(config.seed, 1);

  if (et::is_expected(config.shots)) {
    const auto f = et::feature_matrix(config.encoding, inputs, config.shots, sample_seed);
    et::io::write_features_csv(out_path(config, "features.csv"), f, hash);
  } else {
    const auto records =
        et::sample_records(config.encoding, inputs, long(config.shots), sample_seed);
    et::FeatureMatrix f;
    f.inputs = inputs;
    f.shots = config.shots;
    f.values.resize(inputs.size(), config.encoding.feature_count());
    for (Eigen::Index n = 0; n < inputs.size(); ++n)
      f.values.row(n) = et::frequencies(records[std::size_t(n)], config.encoding.feature_count());
    et::io::write_features_csv(out_path(config, "features.csv"), f, hash);
    et::io::write_shot_records(out_path(config, "shots.jsonl"), records, hash);
  }
  std::cout << "features written to " << config.output_dir << "\n";
  return 0;
}

// Writes raw and corrected spectra, combination vectors, eigentask values on
// the grid, and the EC(S) table for the configured shot list.
int run_spectrum(const Overrides& o) {
  auto config = resolve_config(o);
  const std::string hash = prepare_run(config);
  const json block = config.raw.value("spectrum", json::object());

  et::SpectralResult raw;
  et::SpectralResult corrected;
  std::optional<et::FeatureMatrix> features;

  if (block.contains("two_design_K")) {
    const auto m = et::two_design_moments(block.at("two_design_K").get<Eigen::Index>());
    raw = et::solve_nsr(m);
    corrected = raw;
  } else {
    if (block.contains("features_file")) {
      features = et::io::read_features_csv(block.at("features_file").get<std::string>());
    } else if (block.contains("counts_file")) {
      features = et::io::ingest_counts(block.at("counts_file").get<std::string>(),
                                       config.encoding.feature_count())
                     .features;
    } else {
      features = et::feature_matrix(config.encoding, config.inputs.materialize(config.seed),
                                    config.shots, et::fork_seed(config.seed, 1));
    }
    raw = et::solve_nsr(et::estimate_moments(*features));
    corrected = features->expected() ? raw : et::correct_finite_shots(raw, features->shots);
  }

  et::io::write_spectrum_csv(out_path(config, "spectrum_raw.csv"), raw, hash);
  et::io::write_spectrum_csv(out_path(config, "spectrum.csv"), corrected, hash);
  et::io::write_matrix_csv(out_path(config, "rvectors.csv"), corrected.r, "r", hash);
  if (features) {
    et::io::write_eigentasks_csv(out_path(config, "eigentasks.csv"), features->inputs,
                                 et::eigentasks(corrected, *features), hash);
  }

  std::vector<double> s_list;
  if (block.contains("s_list"))
    for (const auto& s : block.at("s_list")) s_list.push_back(et::io::parse_shots(s));
  else
    for (int p = 0; p <= 20; p += 2) s_list.push_back(double(1L << p));
  {
    std::ofstream out(out_path(config, "ec_vs_s.csv"));
    out << "# " << hash << "\nS,C_T\n";
    for (double s : s_list)
      out << et::io::format_double(s) << ","
          << et::io::format_double(et::expressive_capacity(corrected, s)) << "\n";
  }
  const double ec = et::expressive_capacity(
      corrected, et::is_expected(config.shots) ? et::kExpectedShots : config.shots);
  std::cout << "C_T(S=" << et::io::format_double(config.shots) << ") = " << ec << ", K_c = "
            << et::kc_cutoff(corrected.beta2, config.shots) << "\n";
  return 0;
}

int run_sweep(const Overrides& o) {
  auto config = resolve_config(o);
  const std::string hash = prepare_run(config);
  if (!config.raw.contains("sweep")) throw et::io::ConfigError("sweep: missing 'sweep' block");
  const json block = config.raw.at("sweep");
  const std::string parameter = block.value("parameter", "J");
  if (parameter != "J" && parameter != "L")
    throw et::io::ConfigError("sweep: parameter must be \"J\" or \"L\"");
  if (!block.contains("values")) throw et::io::ConfigError("sweep: missing 'values'");
  const auto values = block.at("values").get<std::vector<double>>();
  const int n_encodings = block.value("encodings", config.repeats);
  const bool sampled = block.value("features", std::string("expected")) == "sampled";

  const json random_block = config.raw.at("encoding").contains("random")
                                ? config.raw.at("encoding").at("random")
                                : json::object();
  const std::string ansatz_name =
      config.encoding.ansatz == et::Ansatz::Circuit ? "circuit" : "hamiltonian";

  std::ofstream rows(out_path(config, "sweep.csv"));
  rows << "# " << hash << "\n" << parameter << ",encoding,C_T,etc\n";
  std::ofstream means(out_path(config, "sweep_mean.csv"));
  means << "# " << hash << "\n" << parameter << ",C_T,etc\n";

  for (double value : values) {
    double sum_ec = 0.0;
    double sum_etc = 0.0;
    for (int e = 0; e < n_encodings; ++e) {
      json enc = random_block;
      enc["ansatz"] = ansatz_name;
      if (!enc.contains("L")) enc["L"] = config.encoding.qubits;
      if (parameter == "J")
        enc["J"] = value;
      else
        enc["L"] = int(value);
      enc["seed"] = et::fork_seed(config.seed, std::uint64_t(e));
      json doc = config.raw;
      doc["encoding"] = {{"random", enc}};
      const auto spec = et::io::parse_config(doc).encoding;

      const Eigen::VectorXd inputs = config.inputs.materialize(config.seed);
      const auto f = et::feature_matrix(spec, inputs, sampled ? config.shots : et::kExpectedShots,
                                        et::fork_seed(config.seed, 1000 + std::uint64_t(e)));
      auto result = et::solve_nsr(et::estimate_moments(f));
      if (!f.expected()) result = et::correct_finite_shots(result, f.shots);
      const double ec = et::expressive_capacity(result, config.shots);
      const double etc = et::expected_total_correlation(spec, inputs).etc;
      sum_ec += ec;
      sum_etc += etc;
      rows << et::io::format_double(value) << "," << e << "," << et::io::format_double(ec) << ","
           << et::io::format_double(etc) << "\n";
    }
    means << et::io::format_double(value) << "," << et::io::format_double(sum_ec / n_encodings)
          << "," << et::io::format_double(sum_etc / n_encodings) << "\n";
  }
  std::cout << "sweep written to " << config.output_dir << "\n";
  return 0;
}

et::GaussianMixture mixture_from_json(const json& j, const char* field) {
  if (!j.is_array() || j.empty())
    throw et::io::ConfigError(std::string("classify: '") + field +
                              "' must be a nonempty component array");
  et::GaussianMixture mixture;
  for (const auto& c : j) {
    et::GaussianComponent component;
    component.weight = c.at("weight").get<double>();
    component.mean = c.at("mean").get<double>();
    component.stddev = c.at("std").get<double>();
    if (component.stddev <= 0.0)
      throw et::io::ConfigError("classify: component std must be positive");
    mixture.components.push_back(component);
  }
  return mixture;
}

int run_classify(const Overrides& o) {
  auto config = resolve_config(o);
  const std::string hash = prepare_run(config);
  const json block = config.raw.value("classify", json::object());

  const et::GaussianMixture p0 = block.contains("p0")
                                     ? mixture_from_json(block.at("p0"), "p0")
                                     : et::demo_density_class0();
  const et::GaussianMixture p1 = block.contains("p1")
                                     ? mixture_from_json(block.at("p1"), "p1")
                                     : et::demo_density_class1();
  const int n_train = block.value("n_train", 150);
  const int n_test = block.value("n_test", 150);
  const int permutations = block.value("permutations", 10);

  std::vector<int> k_list;
  if (block.contains("k_list"))
    k_list = block.at("k_list").get<std::vector<int>>();
  else
    for (int k = 1; k <= config.encoding.feature_count(); ++k) k_list.push_back(k);

  const auto task =
      et::make_task(p0, p1, n_train, n_test, et::fork_seed(config.seed, 2));
  const auto outcome = et::classify_pipeline(config.encoding, task, config.shots, k_list,
                                             permutations, et::fork_seed(config.seed, 3), true);
  g_numerical_flag = g_numerical_flag || !outcome.all_converged;

  std::ofstream reports(out_path(config, "reports.csv"));
  reports << "# " << hash << "\nK_L,permutation,train_acc,test_acc\n";
  for (const auto& r : outcome.reports)
    reports << r.k_used << "," << r.permutation << "," << et::io::format_double(r.train_accuracy)
            << "," << et::io::format_double(r.test_accuracy) << "\n";

  std::ofstream kc_run(out_path(config, "kc_run.csv"));
  kc_run << "# " << hash << "\nK_c,permutation,train_acc,test_acc\n";
  for (const auto& r : outcome.kc_reports)
    kc_run << r.k_used << "," << r.permutation << "," << et::io::format_double(r.train_accuracy)
           << "," << et::io::format_double(r.test_accuracy) << "\n";

  {
    std::map<int, std::array<double, 3>> by_k;  // k_used -> (sum train, sum test, count)
    for (const auto& r : outcome.reports) {
      auto& acc = by_k[r.k_used];
      acc[0] += r.train_accuracy;
      acc[1] += r.test_accuracy;
      acc[2] += 1.0;
    }
    std::ofstream summary(out_path(config, "summary.csv"));
    summary << "# " << hash << "\nK_L,mean_train_acc,mean_test_acc\n";
    for (const auto& [k, acc] : by_k)
      summary << k << "," << et::io::format_double(acc[0] / acc[2]) << ","
              << et::io::format_double(acc[1] / acc[2]) << "\n";
  }
  std::cout << "bayes_rate = " << et::io::format_double(et::bayes_rate(p0, p1)) << "\n";

  // Optional Fig.-3(b)-style J sweep at the K_c truncation.
  if (block.contains("j_sweep")) {
    const auto j_values = block.at("j_sweep").get<std::vector<double>>();
    const json random_block = config.raw.at("encoding").contains("random")
                                  ? config.raw.at("encoding").at("random")
                                  : json::object();
    std::ofstream jcsv(out_path(config, "jsweep.csv"));
    jcsv << "# " << hash << "\nJ,mean_test_acc_at_kc,mean_kc\n";
    for (double jv : j_values) {
      json enc = random_block;
      enc["ansatz"] = "circuit";
      if (!enc.contains("L")) enc["L"] = config.encoding.qubits;
      enc["J"] = jv;
      json doc = config.raw;
      doc["encoding"] = {{"random", enc}};
      const auto spec = et::io::parse_config(doc).encoding;
      const auto sweep_outcome = et::classify_pipeline(
          spec, task, config.shots, {}, permutations, et::fork_seed(config.seed, 3), true);
      g_numerical_flag = g_numerical_flag || !sweep_outcome.all_converged;
      double test = 0.0, kc = 0.0;
      for (const auto& r : sweep_outcome.kc_reports) test += r.test_accuracy;
      for (const auto k : sweep_outcome.kc) kc += double(k);
      jcsv << et::io::format_double(jv) << ","
           << et::io::format_double(test / double(permutations)) << ","
           << et::io::format_double(kc / double(permutations)) << "\n";
    }
  }
  std::cout << "classification reports written to " << config.output_dir << "\n";
  return 0;
}

// Per-moment-order noise-to-signal table at one input, for the configured
// encoding and its zero-coupling counterpart.
int run_moment_nsr(const Overrides& o) {
  auto config = resolve_config(o);
  const std::string hash = prepare_run(config);
  const json block = config.raw.value("moment_nsr", json::object());
  const double u = block.value("u", 0.5);
  const int repeats = std::max(2, block.value("repeats", 30));
  const auto factors = block.value("shot_factors", std::vector<long>{1, 4});
  if (et::is_expected(config.shots))
    throw et::io::ConfigError("moment-nsr: needs finite shots");

  et::EncodingSpec coupled = config.encoding;
  et::EncodingSpec product = coupled;
  if (product.ansatz == et::Ansatz::Circuit)
    product.J = 0.0;
  else
    product.J_couplings.setZero();

  const int qubits = coupled.qubits;
  const Eigen::Index n_features = coupled.feature_count();

  std::ofstream masks_csv(out_path(config, "moment_nsr_masks.csv"));
  masks_csv << "# " << hash << "\nS,mask,m,nsr_coupled,nsr_product\n";
  std::ofstream table(out_path(config, "moment_nsr.csv"));
  table << "# " << hash << "\nS,m,nsr_coupled_median,nsr_product_median\n";

  for (long factor : factors) {
    const long shots = long(config.shots) * factor;
    // Empirical moment NSR over `repeats` independent S-shot runs.
    const auto nsr_of = [&](const et::EncodingSpec& spec, std::uint64_t stream) {
      const Eigen::VectorXd x = et::probabilities(spec, u);
      const Eigen::VectorXd true_moments = et::probability_to_moments(x);
      Eigen::MatrixXd drawn(repeats, n_features);
      for (int r = 0; r < repeats; ++r) {
        const auto record =
            et::sample_shots(x, shots, et::fork_seed(stream, std::uint64_t(r)));
        drawn.row(r) = et::probability_to_moments(et::frequencies(record, n_features));
      }
      const Eigen::RowVectorXd mean = drawn.colwise().mean();
      Eigen::VectorXd nsr(n_features);
      for (Eigen::Index k = 0; k < n_features; ++k) {
        const double var =
            (drawn.col(k).array() - mean[k]).square().sum() / double(repeats - 1);
        nsr[k] = std::sqrt(var) / std::abs(true_moments[k]);
      }
      return nsr;
    };
    const std::uint64_t base = et::fork_seed(config.seed, std::uint64_t(factor));
    const Eigen::VectorXd nsr_coupled = nsr_of(coupled, et::fork_seed(base, 0));
    const Eigen::VectorXd nsr_product = nsr_of(product, et::fork_seed(base, 1));

    for (int m = 1; m <= qubits; ++m) {
      std::vector<double> coupled_vals, product_vals;
      for (Eigen::Index mask = 1; mask < n_features; ++mask) {
        if (std::popcount(std::uint64_t(mask)) != m) continue;
        masks_csv << shots << "," << mask << "," << m << ","
                  << et::io::format_double(nsr_coupled[mask]) << ","
                  << et::io::format_double(nsr_product[mask]) << "\n";
        coupled_vals.push_back(nsr_coupled[mask]);
        product_vals.push_back(nsr_product[mask]);
      }
      auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
      };
      table << shots << "," << m << "," << et::io::format_double(median(coupled_vals)) << ","
            << et::io::format_double(median(product_vals)) << "\n";
    }
  }
  std::cout << "moment NSR tables written to " << config.output_dir << "\n";
  return 0;
}

int run_ingest(const std::string& counts_path, const Overrides& o, std::optional<int> qubits) {
  std::optional<Eigen::Index> feature_count;
  if (qubits) feature_count = Eigen::Index(1) << *qubits;
  const auto ingested = et::io::ingest_counts(counts_path, feature_count);

  json doc = {{"ingested_from", counts_path},
              {"records", ingested.records.size()},
              {"shots", ingested.features.shots},
              {"features", ingested.features.values.cols()}};
  const std::string dir = o.out.value_or(".");
  std::filesystem::create_directories(dir);
  const std::string hash = "manifest=" + et::io::canonical_hash(doc);
  et::io::write_manifest(dir + "/manifest.json", doc);
  et::io::write_features_csv(dir + "/features.csv", ingested.features, hash);
  std::cout << "ingested " << ingested.records.size() << " records ("
            << ingested.features.values.cols() << " features, S="
            << long(ingested.features.shots) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling-noise spectral analysis for quantum feature maps"};
  app.require_subcommand(1);

  Overrides o;
  std::string counts_path;
  std::optional<int> ingest_qubits;

  auto add_common = [&](CLI::App* cmd, bool need_config = true) {
    auto* opt = cmd->add_option("--config", o.config_path, "experiment config (JSON)");
    if (need_config) opt->required();
    cmd->add_option("--out", [&](const CLI::results_t& r) { o.out = r[0]; return true; },
                    "output directory override");
    cmd->add_option("--seed", [&](const CLI::results_t& r) { o.seed = std::stoull(r[0]); return true; },
                    "seed override");
    cmd->add_option("--shots", [&](const CLI::results_t& r) { o.shots = r[0]; return true; },
                    "shots override (integer or 'inf')");
    cmd->add_option("--repeats", [&](const CLI::results_t& r) { o.repeats = std::stoi(r[0]); return true; },
                    "repeats override");
  };

  auto* features = app.add_subcommand("features", "emit a feature matrix for one encoding");
  add_common(features);
  auto* spectrum = app.add_subcommand("spectrum", "NSR spectrum, eigentasks and EC table");
  add_common(spectrum);
  auto* sweep = app.add_subcommand("sweep", "EC and ETC over a J or L sweep");
  add_common(sweep);
  auto* classify = app.add_subcommand("classify", "eigentask-truncated classification");
  add_common(classify);
  auto* moment_nsr = app.add_subcommand("moment-nsr", "per-moment-order sampling NSR");
  add_common(moment_nsr);
  auto* ingest = app.add_subcommand("ingest", "validate and convert an external counts file");
  ingest->add_option("counts", counts_path, "line-delimited counts file")->required();
  ingest->add_option("--qubits", [&](const CLI::results_t& r) { ingest_qubits = std::stoi(r[0]); return true; },
                     "qubit count (pins the feature dimension)");
  ingest->add_option("--out", [&](const CLI::results_t& r) { o.out = r[0]; return true; },
                     "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    int rc = 0;
    if (features->parsed()) rc = run_features(o);
    if (spectrum->parsed()) rc = run_spectrum(o);
    if (sweep->parsed()) rc = run_sweep(o);
    if (classify->parsed()) rc = run_classify(o);
    if (moment_nsr->parsed()) rc = run_moment_nsr(o);
    if (ingest->parsed()) rc = run_ingest(counts_path, o, ingest_qubits);
    if (rc == 0 && g_numerical_flag) {
      std::cerr << "warning: a numerical-failure flag was raised during the run\n";
      return 3;
    }
    return rc;
  } catch (const et::io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
