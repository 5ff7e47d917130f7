#include "qpgp/models.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

#include "qpgp/rng.hpp"

namespace qpgp {

namespace {

constexpr std::array<std::string_view, 7> kLayerNames = {"RX", "RY", "RZ", "RZZ", "RXX", "RZX", "CZ"};
constexpr std::uint64_t kInitTag = 0x1A17ULL;

GateKind gate_for(LayerKind kind) {
  switch (kind) {
    case LayerKind::RX: return GateKind::RX;
    case LayerKind::RY: return GateKind::RY;
    case LayerKind::RZ: return GateKind::RZ;
    case LayerKind::RZZ: return GateKind::RZZ;
    case LayerKind::RXX: return GateKind::RXX;
    case LayerKind::RZX: return GateKind::RZX;
    case LayerKind::CZ: return GateKind::CZ;
  }
  throw std::logic_error("unreachable");
}

}  // namespace

std::string_view layer_name(LayerKind kind) { return kLayerNames[static_cast<std::size_t>(kind)]; }

LayerKind parse_layer(std::string_view name) {
  for (std::size_t i = 0; i < kLayerNames.size(); ++i)
    if (kLayerNames[i] == name) return static_cast<LayerKind>(i);
  throw std::invalid_argument("unknown layer kind '" + std::string(name) + "'");
}

std::size_t ModelSpec::num_features() const {
  std::size_t f = 0;
  for (const EncoderGroup& g : encoder) f += g.count;
  return f;
}

ModelSpec model_spec_for(TaskName task, std::optional<std::size_t> repetitions,
                         std::optional<double> encoder_scale) {
  ModelSpec s;
  s.task = task;
  const std::vector<EncoderGroup> image_encoder = {
      {GateKind::RY, 4}, {GateKind::RZ, 4}, {GateKind::RX, 4}, {GateKind::RY, 4}};
  switch (task) {
    case TaskName::Mnist2:
    case TaskName::Fashion2:
      s.encoder = image_encoder;
      s.block = {LayerKind::RZZ, LayerKind::RY};
      s.repetitions = 1;
      s.head = HeadKind::SumPairs2Class;
      s.encoder_scale = std::numbers::pi;
      break;
    case TaskName::Mnist4:
      s.encoder = image_encoder;
      s.block = {LayerKind::RX, LayerKind::RY, LayerKind::RZ, LayerKind::CZ};
      s.repetitions = 3;
      s.head = HeadKind::Identity4Class;
      s.encoder_scale = std::numbers::pi;
      break;
    case TaskName::Fashion4:
      s.encoder = image_encoder;
      s.block = {LayerKind::RZZ, LayerKind::RY};
      s.repetitions = 3;
      s.head = HeadKind::Identity4Class;
      s.encoder_scale = std::numbers::pi;
      break;
    case TaskName::Vowel4:
      s.encoder = {{GateKind::RY, 4}, {GateKind::RZ, 4}, {GateKind::RX, 2}};
      s.block = {LayerKind::RZZ, LayerKind::RXX};
      s.repetitions = 2;
      s.head = HeadKind::Identity4Class;
      s.encoder_scale = 1.0;
      break;
  }
  if (repetitions) s.repetitions = *repetitions;
  if (encoder_scale) s.encoder_scale = *encoder_scale;
  return s;
}

Circuit build_circuit(const ModelSpec& spec) {
  Circuit c;
  c.num_qubits = spec.num_qubits;
  c.num_features = spec.num_features();
  std::size_t feature = 0;
  for (const EncoderGroup& group : spec.encoder) {
    if (group.count > spec.num_qubits || is_two_qubit(group.kind))
      throw std::invalid_argument("encoder groups are single-qubit rotations on at most one gate per wire");
    for (std::size_t w = 0; w < group.count; ++w)
      c.gates.push_back(Gate::single(group.kind, w, Feature{feature++}));
  }
  std::size_t param = 0;
  const std::size_t n = spec.num_qubits;
  for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
    for (LayerKind layer : spec.block) {
      const GateKind kind = gate_for(layer);
      if (kind == GateKind::CZ) {
        for (std::size_t w = 0; w + 1 < n; ++w) c.gates.push_back(Gate::cz(w, w + 1));
      } else if (is_two_qubit(kind)) {
        for (std::size_t w = 0; w < n; ++w) c.gates.push_back(Gate::pair(kind, w, (w + 1) % n, Param{param++}));
      } else {
        for (std::size_t w = 0; w < n; ++w) c.gates.push_back(Gate::single(kind, w, Param{param++}));
      }
    }
  }
  c.num_params = param;
  c.validate();
  return c;
}

Matrix head_matrix(HeadKind head, std::size_t num_qubits) {
  if (num_qubits != 4) throw std::invalid_argument("heads are defined for 4 qubits");
  if (head == HeadKind::Identity4Class) return Matrix::identity(4);
  Matrix m(2, 4);
  m(0, 0) = m(0, 1) = 1.0;
  m(1, 2) = m(1, 3) = 1.0;
  return m;
}

std::vector<double> apply_head(std::span<const double> expectations, HeadKind head) {
  if (expectations.size() != 4) throw std::invalid_argument("heads expect 4 expectation values");
  return head_matrix(head).multiply(expectations);
}

std::vector<double> init_params(std::size_t n, std::uint64_t seed) {
  Rng rng(stream_key(seed, {kInitTag}));
  std::vector<double> p(n);
  for (double& v : p) v = std::numbers::pi * (2.0 * rng.uniform() - 1.0);
  return p;
}

Model::Model(ModelSpec s) : spec(std::move(s)), circuit(build_circuit(spec)), head(head_matrix(spec.head, spec.num_qubits)) {}

std::vector<double> Model::encode(std::span<const double> features) const {
  if (features.size() != circuit.num_features)
    throw std::invalid_argument("feature count " + std::to_string(features.size()) + " does not match encoder width " +
                                std::to_string(circuit.num_features));
  std::vector<double> out(features.begin(), features.end());
  for (double& v : out) v *= spec.encoder_scale;
  return out;
}

}  // namespace qpgp
