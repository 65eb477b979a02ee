#pragma once

#include <string>
#include <vector>

#include "flowkit/diag.hpp"
#include "flowkit/model.hpp"

namespace flowkit {

struct ParseResult {
    Model model;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return !has_errors(diagnostics); }
};

/// Parses `.fm` text into an unvalidated Model. Errors are reported as
/// P-code diagnostics; recovery skips to the next top-level declaration.
/// References are resolved after the whole unit is read, so declaration
/// order never matters for resolution. `receive` expands to Arrive/Accept,
/// and an omitted `arcs:` clause derives the standard chain.
ParseResult parse(const SourceUnit& source);

/// Deterministic canonical syntax: kinds, spheres, gates, timers and
/// scenarios sorted by name/path; flows, intra-arcs, triggers and
/// injections in declaration order (their order is semantics); 2-space
/// indentation; `receive` never re-sugared.
std::string print_canonical(const Model& model);

}  // namespace flowkit
