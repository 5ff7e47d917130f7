#pragma once

#include <iosfwd>
#include <string>

#include "qpgp/sim.hpp"

namespace qpgp {

// Line-oriented circuit text:
//
//   qpgp-circuit 1
//   qubits 4
//   params 8
//   features 16
//   RY 0 feature 0
//   RZZ 0 1 param 3
//   CZ 2 3 const 0x0p+0
//
// Constant angles are written as hexadecimal floats so the round trip is exact.
// Blank lines and lines starting with '#' are ignored.

void write_circuit(std::ostream& out, const Circuit& circuit);
std::string circuit_to_text(const Circuit& circuit);

/// Throws std::runtime_error with the offending line number on malformed input.
Circuit read_circuit(std::istream& in);
Circuit circuit_from_text(const std::string& text);

}  // namespace qpgp
