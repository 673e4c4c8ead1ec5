#include "eigentask/encoding.hpp"

#include <stdexcept>
#include <string>

#include "eigentask/rng.hpp"

namespace eigentask {

namespace {
constexpr double kPi = 3.14159265358979323846;

void check(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("EncodingSpec: " + what);
}
}  // namespace

void EncodingSpec::validate() const {
  check(qubits >= 1, "qubit count must be >= 1");
  for (const auto& [a, b] : connectivity) {
    check(a >= 0 && b >= 0 && a < qubits && b < qubits, "connectivity index out of range");
    check(a != b, "connectivity pair must join distinct qubits");
  }
  if (ansatz == Ansatz::Circuit) {
    check(tau >= 1, "tau must be >= 1");
    check(theta_x.size() == qubits && theta_z.size() == qubits && theta_I.size() == qubits,
          "circuit angle vectors must have length L");
  } else {
    check(t >= 0.0, "evolution time must be >= 0");
    check(hx.size() == qubits && hz.size() == qubits && hI.size() == qubits,
          "field vectors must have length L");
    check(J_couplings.size() == Eigen::Index(connectivity.size()),
          "J_couplings must have one entry per connectivity edge");
  }
}

std::vector<std::pair<int, int>> line_connectivity(int qubits) {
  std::vector<std::pair<int, int>> edges;
  for (int l = 0; l + 1 < qubits; ++l) edges.emplace_back(l, l + 1);
  return edges;
}

std::vector<std::pair<int, int>> ring_connectivity(int qubits) {
  auto edges = line_connectivity(qubits);
  if (qubits > 2) edges.emplace_back(qubits - 1, 0);
  return edges;
}

EncodingSpec random_encoding(Ansatz ansatz, int qubits, const RandomEncodingOptions& options,
                             std::uint64_t seed) {
  if (qubits < 1) throw std::invalid_argument("random_encoding: qubit count must be >= 1");

  EncodingSpec spec;
  spec.ansatz = ansatz;
  spec.qubits = qubits;
  spec.seed = seed;
  spec.connectivity = options.connectivity;

  CounterRng rng(seed);
  if (ansatz == Ansatz::Circuit) {
    if (spec.connectivity.empty()) spec.connectivity = line_connectivity(qubits);
    spec.tau = options.tau;
    spec.J = options.J;
    spec.theta_x.resize(qubits);
    spec.theta_z.resize(qubits);
    spec.theta_I.resize(qubits);
    for (int l = 0; l < qubits; ++l) spec.theta_x[l] = rng.next_uniform(0.0, 2.0 * kPi);
    for (int l = 0; l < qubits; ++l) spec.theta_z[l] = rng.next_uniform(0.0, 2.0 * kPi);
    for (int l = 0; l < qubits; ++l) spec.theta_I[l] = rng.next_uniform(0.0, 10.0 * kPi);
  } else {
    if (spec.connectivity.empty()) spec.connectivity = ring_connectivity(qubits);
    spec.t = options.t;
    spec.J_couplings = Eigen::VectorXd::Constant(Eigen::Index(spec.connectivity.size()), options.J);
    spec.hx.resize(qubits);
    spec.hz.resize(qubits);
    spec.hI.resize(qubits);
    for (int l = 0; l < qubits; ++l) spec.hx[l] = options.mean_hx + options.rms_hx * rng.next_normal();
    for (int l = 0; l < qubits; ++l) spec.hz[l] = options.mean_hz + options.rms_hz * rng.next_normal();
    for (int l = 0; l < qubits; ++l) spec.hI[l] = options.mean_hI + options.rms_hI * rng.next_normal();
  }
  spec.validate();
  return spec;
}

}  // namespace eigentask
