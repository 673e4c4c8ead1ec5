#include "eigentask/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "eigentask/rng.hpp"

namespace eigentask::io {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& a, const char* field) {
  if (!a.is_array()) throw ConfigError(std::string("field '") + field + "' must be an array");
  Eigen::VectorXd v(a.size());
  Eigen::Index i = 0;
  for (const auto& x : a) {
    if (!x.is_number()) throw ConfigError(std::string("field '") + field + "' must be numeric");
    v[i++] = x.get<double>();
  }
  return v;
}

std::vector<std::pair<int, int>> pairs_from_json(const json& a) {
  std::vector<std::pair<int, int>> pairs;
  if (!a.is_array()) throw ConfigError("field 'connectivity' must be an array of pairs");
  for (const auto& p : a) {
    if (!p.is_array() || p.size() != 2)
      throw ConfigError("field 'connectivity' entries must be index pairs");
    pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
  }
  return pairs;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

json spec_to_json(const EncodingSpec& spec) {
  json j;
  j["ansatz"] = spec.ansatz == Ansatz::Circuit ? "circuit" : "hamiltonian";
  j["L"] = spec.qubits;
  j["seed"] = spec.seed;
  json conn = json::array();
  for (const auto& [a, b] : spec.connectivity) conn.push_back({a, b});
  j["connectivity"] = conn;
  if (spec.ansatz == Ansatz::Circuit) {
    j["tau"] = spec.tau;
    j["J"] = spec.J;
    j["theta_x"] = vector_to_json(spec.theta_x);
    j["theta_z"] = vector_to_json(spec.theta_z);
    j["theta_I"] = vector_to_json(spec.theta_I);
  } else {
    j["t"] = spec.t;
    j["J_couplings"] = vector_to_json(spec.J_couplings);
    j["hx"] = vector_to_json(spec.hx);
    j["hz"] = vector_to_json(spec.hz);
    j["hI"] = vector_to_json(spec.hI);
  }
  return j;
}

EncodingSpec spec_from_json(const json& j) {
  EncodingSpec spec;
  const std::string ansatz = j.value("ansatz", "");
  if (ansatz == "circuit")
    spec.ansatz = Ansatz::Circuit;
  else if (ansatz == "hamiltonian")
    spec.ansatz = Ansatz::Hamiltonian;
  else
    throw ConfigError("field 'ansatz' must be \"circuit\" or \"hamiltonian\"");

  if (!j.contains("L")) throw ConfigError("encoding is missing field 'L'");
  spec.qubits = j.at("L").get<int>();
  spec.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("connectivity")) spec.connectivity = pairs_from_json(j.at("connectivity"));

  try {
    if (spec.ansatz == Ansatz::Circuit) {
      spec.tau = j.value("tau", 1);
      spec.J = j.value("J", 0.0);
      spec.theta_x = vector_from_json(j.at("theta_x"), "theta_x");
      spec.theta_z = vector_from_json(j.at("theta_z"), "theta_z");
      spec.theta_I = vector_from_json(j.at("theta_I"), "theta_I");
    } else {
      spec.t = j.value("t", 0.0);
      spec.J_couplings = j.contains("J_couplings")
                             ? vector_from_json(j.at("J_couplings"), "J_couplings")
                             : Eigen::VectorXd::Zero(Eigen::Index(spec.connectivity.size())).eval();
      spec.hx = vector_from_json(j.at("hx"), "hx");
      spec.hz = vector_from_json(j.at("hz"), "hz");
      spec.hI = vector_from_json(j.at("hI"), "hI");
    }
    spec.validate();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("encoding: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("encoding: ") + e.what());
  }
  return spec;
}

std::string canonical_hash(const json& j) {
  const std::string dump = j.dump();
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string spec_hash(const EncodingSpec& spec) { return canonical_hash(spec_to_json(spec)); }

std::string run_hash(const json& resolved_config) {
  json stripped = resolved_config;
  stripped.erase("output_dir");
  stripped.erase("manifest_hash");
  return canonical_hash(stripped);
}

Eigen::VectorXd InputsConfig::materialize(std::uint64_t seed) const {
  if (grid > 0) return grid_inputs(grid);
  if (iid > 0) return iid_inputs(iid, fork_seed(seed, 0x1D));
  if (!list.empty())
    return Eigen::Map<const Eigen::VectorXd>(list.data(), Eigen::Index(list.size()));
  throw ConfigError("field 'inputs' must define one of grid/iid/list");
}

double parse_shots(const json& value) {
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    if (s == "expected" || s == "inf") return kExpectedShots;
    throw ConfigError("field 'shots' must be a positive integer, \"expected\" or \"inf\"");
  }
  if (value.is_number_integer() && value.get<long>() >= 1)
    return static_cast<double>(value.get<long>());
  throw ConfigError("field 'shots' must be a positive integer, \"expected\" or \"inf\"");
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig config;
  if (!j.is_object()) throw ConfigError("config root must be an object");
  config.seed = j.value("seed", std::uint64_t{0});
  config.repeats = j.value("repeats", 1);
  if (config.repeats < 1) throw ConfigError("field 'repeats' must be >= 1");
  config.output_dir = j.value("output_dir", ".");
  if (j.contains("shots")) config.shots = parse_shots(j.at("shots"));

  if (!j.contains("encoding")) throw ConfigError("config is missing field 'encoding'");
  const json& enc = j.at("encoding");
  if (enc.contains("random")) {
    const json& r = enc.at("random");
    const std::string ansatz = r.value("ansatz", "circuit");
    if (ansatz != "circuit" && ansatz != "hamiltonian")
      throw ConfigError("field 'encoding.random.ansatz' must be \"circuit\" or \"hamiltonian\"");
    if (!r.contains("L")) throw ConfigError("field 'encoding.random' is missing 'L'");
    RandomEncodingOptions options;
    options.tau = r.value("tau", 3);
    options.J = r.value("J", 1.5707963267948966);
    options.t = r.value("t", 5.0);
    if (r.contains("field_mean")) {
      const auto m = vector_from_json(r.at("field_mean"), "field_mean");
      if (m.size() != 3) throw ConfigError("field 'field_mean' must have 3 entries (x, z, I)");
      options.mean_hx = m[0];
      options.mean_hz = m[1];
      options.mean_hI = m[2];
    }
    if (r.contains("field_rms")) {
      const auto m = vector_from_json(r.at("field_rms"), "field_rms");
      if (m.size() != 3) throw ConfigError("field 'field_rms' must have 3 entries (x, z, I)");
      options.rms_hx = m[0];
      options.rms_hz = m[1];
      options.rms_hI = m[2];
    }
    if (r.contains("connectivity")) {
      const json& c = r.at("connectivity");
      if (c.is_string()) {
        const std::string kind = c.get<std::string>();
        if (kind == "line")
          options.connectivity = line_connectivity(r.at("L").get<int>());
        else if (kind == "ring")
          options.connectivity = ring_connectivity(r.at("L").get<int>());
        else
          throw ConfigError("field 'connectivity' must be \"line\", \"ring\" or a pair list");
      } else {
        options.connectivity = pairs_from_json(c);
      }
    }
    const std::uint64_t draw_seed = r.value("seed", config.seed);
    config.encoding = random_encoding(
        ansatz == "circuit" ? Ansatz::Circuit : Ansatz::Hamiltonian, r.at("L").get<int>(),
        options, draw_seed);
  } else {
    config.encoding = spec_from_json(enc);
  }

  if (!j.contains("inputs")) throw ConfigError("config is missing field 'inputs'");
  const json& in = j.at("inputs");
  if (in.contains("grid"))
    config.inputs.grid = in.at("grid").get<Eigen::Index>();
  else if (in.contains("iid"))
    config.inputs.iid = in.at("iid").get<Eigen::Index>();
  else if (in.contains("list"))
    config.inputs.list = in.at("list").get<std::vector<double>>();
  else
    throw ConfigError("field 'inputs' must define one of grid/iid/list");

  // Echo the fully-resolved document: random draws replaced by the drawn spec.
  config.raw = j;
  config.raw["encoding"] = spec_to_json(config.encoding);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error in ") + path + ": " + e.what());
  }
  return parse_config(j);
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_manifest(const std::string& path, const json& resolved_config) {
  json manifest = resolved_config;
  manifest["manifest_hash"] = run_hash(resolved_config);
  auto out = open_out(path);
  out << manifest.dump(2) << "\n";
}

void write_features_csv(const std::string& path, const FeatureMatrix& f,
                        const std::string& provenance) {
  auto out = open_out(path);
  out << "# " << provenance << " shots=" << format_double(f.shots) << "\n";
  out << "u";
  for (Eigen::Index k = 0; k < f.values.cols(); ++k) out << ",X" << k;
  out << "\n";
  for (Eigen::Index n = 0; n < f.values.rows(); ++n) {
    out << format_double(f.inputs[n]);
    for (Eigen::Index k = 0; k < f.values.cols(); ++k)
      out << "," << format_double(f.values(n, k));
    out << "\n";
  }
}

FeatureMatrix read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open features file: " + path);
  FeatureMatrix f;
  std::string line;
  std::vector<std::vector<double>> rows;
  long line_no = 0;
  Eigen::Index n_cols = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("shots=");
      if (pos != std::string::npos) {
        const std::string s = line.substr(pos + 6);
        f.shots = s.rfind("inf", 0) == 0 ? kExpectedShots : std::stod(s);
      }
      continue;
    }
    if (line.rfind("u,", 0) == 0) continue;  // header
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("features file " + path + " line " + std::to_string(line_no) +
                          ": bad number '" + cell + "'");
      }
    }
    if (n_cols < 0) n_cols = Eigen::Index(row.size());
    if (Eigen::Index(row.size()) != n_cols)
      throw ConfigError("features file " + path + " line " + std::to_string(line_no) +
                        ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || n_cols < 2) throw ConfigError("features file " + path + " has no data rows");
  f.inputs.resize(Eigen::Index(rows.size()));
  f.values.resize(Eigen::Index(rows.size()), n_cols - 1);
  for (Eigen::Index n = 0; n < f.inputs.size(); ++n) {
    f.inputs[n] = rows[std::size_t(n)][0];
    for (Eigen::Index k = 0; k + 1 < n_cols; ++k)
      f.values(n, k) = rows[std::size_t(n)][std::size_t(k) + 1];
  }
  return f;
}

void write_spectrum_csv(const std::string& path, const SpectralResult& result,
                        const std::string& provenance) {
  auto out = open_out(path);
  out << "# " << provenance << "\n";
  out << "k,beta2,alpha,corrected,uncorrectable\n";
  std::size_t next_unc = 0;
  for (Eigen::Index k = 0; k < result.beta2.size(); ++k) {
    bool unc = false;
    if (next_unc < result.uncorrectable.size() && result.uncorrectable[next_unc] == k) {
      unc = true;
      ++next_unc;
    }
    out << k << "," << format_double(result.beta2[k]) << "," << format_double(result.alpha[k])
        << "," << (result.corrected ? 1 : 0) << "," << (unc ? 1 : 0) << "\n";
  }
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::string& column_prefix, const std::string& provenance) {
  auto out = open_out(path);
  out << "# " << provenance << "\n";
  for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << column_prefix << c;
  out << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out << (c ? "," : "") << format_double(m(r, c));
    out << "\n";
  }
}

void write_eigentasks_csv(const std::string& path, const Eigen::VectorXd& inputs,
                          const Eigen::MatrixXd& tasks, const std::string& provenance) {
  auto out = open_out(path);
  out << "# " << provenance << "\n";
  out << "u";
  for (Eigen::Index c = 0; c < tasks.cols(); ++c) out << ",y" << c;
  out << "\n";
  for (Eigen::Index n = 0; n < tasks.rows(); ++n) {
    out << format_double(inputs[n]);
    for (Eigen::Index c = 0; c < tasks.cols(); ++c) out << "," << format_double(tasks(n, c));
    out << "\n";
  }
}

void write_shot_records(const std::string& path, const std::vector<ShotRecord>& records,
                        const std::string& provenance) {
  auto out = open_out(path);
  out << "# " << provenance << "\n";
  for (const auto& record : records) {
    json counts = json::object();
    for (const auto& [k, c] : record.counts) counts[std::to_string(k)] = c;
    json line = {{"u", record.u}, {"S", record.shots}, {"counts", counts}};
    out << line.dump() << "\n";
  }
}

IngestResult ingest_counts(const std::string& path, std::optional<Eigen::Index> feature_count) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open counts file: " + path);

  IngestResult result;
  std::string line;
  long line_no = 0;
  long shared_shots = -1;
  Eigen::Index max_index = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("counts file " + path + " line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    if (!j.contains("u") || !j.contains("S") || !j.contains("counts"))
      throw ConfigError("counts file " + path + " line " + std::to_string(line_no) +
                        ": record needs fields u, S, counts");
    ShotRecord record;
    record.u = j.at("u").get<double>();
    record.shots = j.at("S").get<long>();
    if (record.shots < 1)
      throw ConfigError("counts file " + path + " line " + std::to_string(line_no) +
                        ": S must be >= 1");
    if (shared_shots < 0) shared_shots = record.shots;
    if (record.shots != shared_shots)
      throw ConfigError("counts file " + path + " line " + std::to_string(line_no) +
                        ": mixed shot counts (" + std::to_string(record.shots) + " vs " +
                        std::to_string(shared_shots) + ")");
    long total = 0;
    for (const auto& [key, value] : j.at("counts").items()) {
      Eigen::Index k = 0;
      const auto res = std::from_chars(key.data(), key.data() + key.size(), k);
      if (res.ec != std::errc() || res.ptr != key.data() + key.size() || k < 0)
        throw ConfigError("counts file " + path + " line " + std::to_string(line_no) +
                          ": bad outcome index '" + key + "'");
      const long c = value.get<long>();
      if (c < 0)
        throw ConfigError("counts file " + path + " line " + std::to_string(line_no) +
                          ": negative count");
      if (feature_count && k >= *feature_count)
        throw ConfigError("counts file " + path + " line " + std::to_string(line_no) +
                          ": outcome index " + std::to_string(k) + " >= K");
      max_index = std::max(max_index, k);
      record.counts[k] = c;
      total += c;
    }
    if (total != record.shots)
      throw ConfigError("counts file " + path + " line " + std::to_string(line_no) +
                        ": counts sum to " + std::to_string(total) + ", expected S=" +
                        std::to_string(record.shots));
    result.records.push_back(std::move(record));
  }
  if (result.records.empty()) throw ConfigError("counts file " + path + " has no records");

  Eigen::Index n_features;
  if (feature_count) {
    n_features = *feature_count;
  } else {
    n_features = 1;
    while (n_features <= max_index) n_features <<= 1;
  }
  result.features.shots = static_cast<double>(shared_shots);
  result.features.inputs.resize(Eigen::Index(result.records.size()));
  result.features.values.resize(Eigen::Index(result.records.size()), n_features);
  for (Eigen::Index n = 0; n < result.features.inputs.size(); ++n) {
    const auto& record = result.records[std::size_t(n)];
    result.features.inputs[n] = record.u;
    result.features.values.row(n) = frequencies(record, n_features);
  }
  return result;
}

}  // namespace eigentask::io
