#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "qpgp/data.hpp"
#include "qpgp/grad.hpp"
#include "qpgp/sim.hpp"

namespace qpgp {

enum class LayerKind { RX, RY, RZ, RZZ, RXX, RZX, CZ };

std::string_view layer_name(LayerKind kind);
LayerKind parse_layer(std::string_view name);

enum class HeadKind { SumPairs2Class, Identity4Class };

/// A group of `count` encoder rotations of one kind on wires 0..count-1.
struct EncoderGroup {
  GateKind kind = GateKind::RY;
  std::size_t count = 4;
};

struct ModelSpec {
  TaskName task = TaskName::Mnist2;
  std::size_t num_qubits = 4;
  std::vector<EncoderGroup> encoder;
  std::vector<LayerKind> block;  ///< one repetition of the trainable layer pattern
  std::size_t repetitions = 1;
  HeadKind head = HeadKind::SumPairs2Class;
  double encoder_scale = 1.0;  ///< rotation angle = encoder_scale * feature

  std::size_t num_features() const;
};

/// Architecture presets. `repetitions` and `encoder_scale` override the defaults.
ModelSpec model_spec_for(TaskName task, std::optional<std::size_t> repetitions = std::nullopt,
                         std::optional<double> encoder_scale = std::nullopt);

/// Encoder gates bound to Feature(0..F-1) group by group, wire 0 first; then
/// the trainable layers, each parametric gate with a fresh parameter index.
/// Ring layers cover (0,1),(1,2),...,(n-1,0); CZ layers only the open chain.
Circuit build_circuit(const ModelSpec& spec);

/// Linear map from per-qubit expectations to class logits.
Matrix head_matrix(HeadKind head, std::size_t num_qubits = 4);
std::vector<double> apply_head(std::span<const double> expectations, HeadKind head);

/// Independent uniform draws on [-pi, pi].
std::vector<double> init_params(std::size_t n, std::uint64_t seed);

struct Model {
  ModelSpec spec;
  Circuit circuit;
  Matrix head;

  explicit Model(ModelSpec s);
  /// Rotation angles for a raw feature vector.
  std::vector<double> encode(std::span<const double> features) const;
};

}  // namespace qpgp
