#include "jsonl.hpp"

#include <istream>
#include <ostream>

#include "replyset/error.hpp"

namespace replyset::jsonl {

namespace {
std::string where(std::size_t line) { return "line " + std::to_string(line); }
}  // namespace

void for_each_object(std::istream& in, const std::function<void(const json&, std::size_t)>& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where(number) + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw DataError(where(number) + ": expected a JSON object");
    if (obj.contains("header")) continue;
    fn(obj, number);
  }
}

void write_header(std::ostream& out, std::string_view header_json) {
  if (header_json.empty()) return;
  out << "{\"header\":" << header_json << "}\n";
}

const json& field(const json& obj, const char* name, std::size_t line) {
  const auto it = obj.find(name);
  if (it == obj.end()) {
    throw DataError(where(line) + ": missing required field '" + name + "'");
  }
  return *it;
}

std::string string_field(const json& obj, const char* name, std::size_t line) {
  const auto& v = field(obj, name, line);
  if (!v.is_string()) throw DataError(where(line) + ": field '" + name + "' must be a string");
  return v.get<std::string>();
}

std::uint64_t uint_field(const json& obj, const char* name, std::size_t line) {
  const auto& v = field(obj, name, line);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw DataError(where(line) + ": field '" + name + "' must be an unsigned integer");
  }
  return v.get<std::uint64_t>();
}

double number_field(const json& obj, const char* name, std::size_t line) {
  const auto& v = field(obj, name, line);
  if (!v.is_number()) throw DataError(where(line) + ": field '" + name + "' must be a number");
  return v.get<double>();
}

}  // namespace replyset::jsonl
