#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

namespace replyset::jsonl {

using nlohmann::json;

/// Calls fn(object, line_number) for each non-blank line. Header lines
/// ({"header": ...}) are skipped. Throws DataError naming the 1-based line
/// on malformed JSON or a non-object line.
void for_each_object(std::istream& in, const std::function<void(const json&, std::size_t)>& fn);

/// Writes {"header": <header_json>} followed by a newline; no-op when empty.
void write_header(std::ostream& out, std::string_view header_json);

const json& field(const json& obj, const char* name, std::size_t line);
std::string string_field(const json& obj, const char* name, std::size_t line);
std::uint64_t uint_field(const json& obj, const char* name, std::size_t line);
double number_field(const json& obj, const char* name, std::size_t line);

}  // namespace replyset::jsonl
