#pragma once

#include <string>
#include <vector>

namespace flowkit {

/// A half-open region of source text. Positions are 1-based.
struct Span {
    std::string file;
    int line = 1;
    int column = 1;
    int length = 1;

    friend bool operator==(const Span&, const Span&) = default;
};

struct SourceUnit {
    std::string file;
    std::string content;  // UTF-8
};

enum class Severity { error, warning };

/// One parse or well-formedness finding. Codes: P1..P4 from the parser,
/// W1..W9 from the validator.
struct Diagnostic {
    Severity severity = Severity::error;
    std::string code;
    std::string message;
    Span span;
};

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags)
        if (d.severity == Severity::error) return true;
    return false;
}

std::string format_diagnostic(const Diagnostic& d);

/// Sorts by span (file, line, column), then rule code.
void sort_diagnostics(std::vector<Diagnostic>& diags);

}  // namespace flowkit
