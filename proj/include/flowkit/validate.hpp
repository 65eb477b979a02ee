#pragma once

#include <vector>

#include "flowkit/diag.hpp"
#include "flowkit/model.hpp"

namespace flowkit {

/// Static well-formedness rules. Violations come back as data; an empty
/// error set means the model is simulatable.
///
///   W1 intra-arcs only from the canonical set
///   W2 inter-flowsystem arcs only Transfer -> Transfer
///   W3 state-kind flowsystems restricted to {Create, Process}
///   W4 inject triggers target Create with a matching kind (and known attrs)
///   W5 guard/template names exist in the source kind schema or environment
///   W6 gate bindings reference state-kind flowsystems
///   W7 name/path uniqueness
///   W8 every timer referenced by a trigger is declared
///   W9 (warning) Arrive with no outgoing arc: tokens retire on arrival
///
/// Deterministic: diagnostics are sorted by span, then rule code.
std::vector<Diagnostic> validate(const Model& model);

}  // namespace flowkit
