#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

namespace flowkit {

/// Attribute values are integers or interned symbols. Symbols compare by
/// name identity; there is no ordering between symbols or across types.
using Value = std::variant<std::int64_t, std::string>;

using AttrMap = std::map<std::string, Value>;

inline bool is_int(const Value& v) { return std::holds_alternative<std::int64_t>(v); }
inline bool is_symbol(const Value& v) { return std::holds_alternative<std::string>(v); }

std::string value_to_string(const Value& v);

}  // namespace flowkit
