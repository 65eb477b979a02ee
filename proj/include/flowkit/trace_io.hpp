#pragma once

#include <string>

#include "flowkit/engine.hpp"

namespace flowkit {

/// JSON Lines, LF endings, keys in the order time, seq, kind, subject,
/// place, detail. First line is a header ({"scenario": ...} plus "seed"
/// when the loss model is active), last line the outcome. Byte-stable for
/// golden-file comparison.
std::string serialize_trace(const Trace& trace);

struct TraceParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inverse of serialize_trace. Throws TraceParseError on malformed input.
Trace parse_trace(const std::string& text);

}  // namespace flowkit
