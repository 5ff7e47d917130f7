#include "qpgp/circuit_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace qpgp {

namespace {

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw std::runtime_error("circuit text line " + std::to_string(line) + ": " + what);
}

std::size_t read_count(std::istringstream& ss, std::size_t line) {
  long long v = -1;
  if (!(ss >> v) || v < 0) fail(line, "expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

void write_circuit(std::ostream& out, const Circuit& circuit) {
  out << "qpgp-circuit 1\n"
      << "qubits " << circuit.num_qubits << '\n'
      << "params " << circuit.num_params << '\n'
      << "features " << circuit.num_features << '\n';
  for (const Gate& g : circuit.gates) {
    out << gate_name(g.kind);
    for (std::size_t w : g.used_wires()) out << ' ' << w;
    std::visit(
        [&](const auto& b) {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, Constant>)
            out << " const " << hex_double(b.angle);
          else if constexpr (std::is_same_v<B, Feature>)
            out << " feature " << b.index;
          else
            out << " param " << b.index;
        },
        g.binding);
    out << '\n';
  }
}

std::string circuit_to_text(const Circuit& circuit) {
  std::ostringstream ss;
  write_circuit(ss, circuit);
  return ss.str();
}

Circuit read_circuit(std::istream& in) {
  Circuit c;
  std::string text;
  std::size_t line_no = 0;
  bool header = false;
  int counts_seen = 0;
  std::vector<std::size_t> gate_lines;
  while (std::getline(in, text)) {
    ++line_no;
    const std::size_t first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos || text[first] == '#') continue;
    std::istringstream ss(text);
    std::string head;
    ss >> head;
    if (!header) {
      int version = 0;
      if (head != "qpgp-circuit" || !(ss >> version) || version != 1)
        fail(line_no, "expected header 'qpgp-circuit 1'");
      header = true;
      continue;
    }
    if (head == "qubits") {
      c.num_qubits = read_count(ss, line_no);
      ++counts_seen;
    } else if (head == "params") {
      c.num_params = read_count(ss, line_no);
      ++counts_seen;
    } else if (head == "features") {
      c.num_features = read_count(ss, line_no);
      ++counts_seen;
    } else {
      GateKind kind;
      try {
        kind = parse_gate_kind(head);
      } catch (const std::invalid_argument& e) {
        fail(line_no, e.what());
      }
      std::array<std::size_t, 2> wires{};
      wires[0] = read_count(ss, line_no);
      wires[1] = is_two_qubit(kind) ? read_count(ss, line_no) : wires[0];
      std::string tag, value;
      if (!(ss >> tag >> value)) fail(line_no, "missing binding");
      Binding binding;
      if (tag == "const") {
        char* end = nullptr;
        const double angle = std::strtod(value.c_str(), &end);
        if (end == value.c_str() || *end != '\0') fail(line_no, "bad angle '" + value + "'");
        binding = Constant{angle};
      } else if (tag == "feature" || tag == "param") {
        char* end = nullptr;
        const unsigned long long idx = std::strtoull(value.c_str(), &end, 10);
        if (end == value.c_str() || *end != '\0' || value[0] == '-')
          fail(line_no, "bad index '" + value + "'");
        binding = tag == "feature" ? Binding{Feature{idx}} : Binding{Param{idx}};
      } else {
        fail(line_no, "unknown binding '" + tag + "'");
      }
      std::string extra;
      if (ss >> extra) fail(line_no, "trailing token '" + extra + "'");
      try {
        c.gates.push_back(is_two_qubit(kind) ? Gate::pair(kind, wires[0], wires[1], binding)
                                             : Gate::single(kind, wires[0], binding));
        gate_lines.push_back(line_no);
      } catch (const std::invalid_argument& e) {
        fail(line_no, e.what());
      }
    }
  }
  if (!header) throw std::runtime_error("circuit text: missing header");
  if (counts_seen != 3) throw std::runtime_error("circuit text: missing qubits/params/features");
  for (std::size_t i = 0; i < c.gates.size(); ++i) {
    const Gate& g = c.gates[i];
    for (std::size_t w : g.used_wires())
      if (w >= c.num_qubits) fail(gate_lines[i], "wire " + std::to_string(w) + " out of range");
    if (const auto* p = std::get_if<Param>(&g.binding); p && p->index >= c.num_params)
      fail(gate_lines[i], "param " + std::to_string(p->index) + " out of range");
    if (const auto* f = std::get_if<Feature>(&g.binding); f && f->index >= c.num_features)
      fail(gate_lines[i], "feature " + std::to_string(f->index) + " out of range");
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("circuit text: ") + e.what());
  }
  return c;
}

Circuit circuit_from_text(const std::string& text) {
  std::istringstream ss(text);
  return read_circuit(ss);
}

}  // namespace qpgp
