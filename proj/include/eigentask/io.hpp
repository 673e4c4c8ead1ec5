#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "eigentask/encoding.hpp"
#include "eigentask/learning.hpp"
#include "eigentask/sampling.hpp"
#include "eigentask/spectral.hpp"

namespace eigentask::io {

// Raised on malformed configs, schema violations and inconsistent data
// files; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json spec_to_json(const EncodingSpec& spec);
EncodingSpec spec_from_json(const nlohmann::json& j);

// FNV-1a over the canonical (sorted-key) serialization; embedded in every
// output file for provenance.
std::string canonical_hash(const nlohmann::json& j);
std::string spec_hash(const EncodingSpec& spec);

// Hash of a resolved run config, ignoring where the outputs land
// (output_dir) and any embedded hash field, so a rerun from the manifest
// reproduces byte-identical files in any directory.
std::string run_hash(const nlohmann::json& resolved_config);

// Input grid directive: exactly one of grid/iid/list.
struct InputsConfig {
  Eigen::Index grid = 0;
  Eigen::Index iid = 0;
  std::vector<double> list;

  Eigen::VectorXd materialize(std::uint64_t seed) const;
};

// Fully resolved experiment configuration (encoding may be a random-draw
// directive, resolved before any command runs).
struct ExperimentConfig {
  EncodingSpec encoding;
  InputsConfig inputs;
  double shots = kExpectedShots;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  nlohmann::json raw;  // the resolved document, echoed into the manifest
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const nlohmann::json& j);

double parse_shots(const nlohmann::json& value);

// Number formatting used by every CSV writer: shortest representation that
// round-trips a double, so reruns are byte-identical.
std::string format_double(double v);

void write_manifest(const std::string& path, const nlohmann::json& resolved_config);

void write_features_csv(const std::string& path, const FeatureMatrix& f,
                        const std::string& provenance);
FeatureMatrix read_features_csv(const std::string& path);

void write_spectrum_csv(const std::string& path, const SpectralResult& result,
                        const std::string& provenance);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::string& column_prefix, const std::string& provenance);
void write_eigentasks_csv(const std::string& path, const Eigen::VectorXd& inputs,
                          const Eigen::MatrixXd& tasks, const std::string& provenance);

// Line-delimited shot records: one JSON object {"u":..,"S":..,"counts":{"k":c}}
// per line. Also the ingestion format for externally measured data.
void write_shot_records(const std::string& path, const std::vector<ShotRecord>& records,
                        const std::string& provenance);

struct IngestResult {
  FeatureMatrix features;
  std::vector<ShotRecord> records;
};

// Validates every line (counts sum to S, uniform S across lines, indices
// inside the feature space); errors name the offending line.
IngestResult ingest_counts(const std::string& path,
                           std::optional<Eigen::Index> feature_count = std::nullopt);

}  // namespace eigentask::io
