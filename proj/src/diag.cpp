#include "flowkit/diag.hpp"

#include <algorithm>
#include <sstream>

namespace flowkit {

std::string format_diagnostic(const Diagnostic& d) {
    std::ostringstream out;
    out << d.span.file << ':' << d.span.line << ':' << d.span.column << ": "
        << (d.severity == Severity::error ? "error" : "warning") << '[' << d.code
        << "]: " << d.message;
    return out.str();
}

void sort_diagnostics(std::vector<Diagnostic>& diags) {
    std::stable_sort(diags.begin(), diags.end(), [](const Diagnostic& a, const Diagnostic& b) {
        if (a.span.file != b.span.file) return a.span.file < b.span.file;
        if (a.span.line != b.span.line) return a.span.line < b.span.line;
        if (a.span.column != b.span.column) return a.span.column < b.span.column;
        return a.code < b.code;
    });
}

}  // namespace flowkit
