#include "replyset/config.hpp"

#include <bit>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "jsonl.hpp"
#include "replyset/error.hpp"
#include "replyset/hash.hpp"

namespace replyset {

namespace {

// Shortest representation that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || *end != '\0' || errno == ERANGE) {
    throw UsageError("config key '" + key + "': expected a number, got '" + value + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || value[0] == '-' || *end != '\0' || errno == ERANGE) {
    throw UsageError("config key '" + key + "': expected an unsigned integer, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw UsageError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

}  // namespace

void RunConfig::validate() const {
  planner.validate();
  if (dim < 64 || !std::has_single_bit(dim)) {
    throw UsageError("dim must be a power of two >= 64, got " + std::to_string(dim));
  }
  if (strategy != "matching" && strategy != "mmr" && strategy != "topic" &&
      strategy != "planner-online" && strategy != "planner-offline") {
    throw UsageError("unknown strategy '" + strategy + "'");
  }
  if (!(theta >= 0.0 && theta <= 1.0)) throw UsageError("theta must lie in [0, 1]");
  if (n_topics < 2) throw UsageError("n_topics must be >= 2");
  if (threads == 0) throw UsageError("threads must be >= 1");
  if (batch_size == 0) throw UsageError("batch_size must be >= 1");
  if (mode != "offline" && mode != "online") throw UsageError("mode must be offline or online");
}

std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg,
                                                               bool include_runtime) {
  std::vector<std::pair<std::string, std::string>> kv = {
      {"n", std::to_string(cfg.planner.n_candidates)},
      {"m", std::to_string(cfg.planner.n_simulations)},
      {"k", std::to_string(cfg.planner.set_size)},
      {"alpha", format_double(cfg.planner.alpha)},
      {"lambda", format_double(cfg.planner.lambda)},
      {"beta", format_double(cfg.planner.beta)},
      {"seed", std::to_string(cfg.planner.seed)},
      {"mode", cfg.mode},
      {"dim", std::to_string(cfg.dim)},
      {"persona", cfg.persona ? "true" : "false"},
      {"strategy", cfg.strategy},
      {"theta", format_double(cfg.theta)},
      {"n_topics", std::to_string(cfg.n_topics)},
      {"batch_size", std::to_string(cfg.batch_size)},
      {"bench_messages", std::to_string(cfg.bench_messages)},
      {"corpus", cfg.corpus},
      {"test_corpus", cfg.test_corpus},
      {"pool", cfg.pool},
      {"pool_matrix", cfg.pool_matrix},
      {"encoder", cfg.encoder},
      {"message_matrix", cfg.message_matrix},
      {"reply_matrix", cfg.reply_matrix},
      {"predictions", cfg.predictions},
      {"output", cfg.output},
      {"out_dir", cfg.out_dir},
  };
  if (include_runtime) kv.emplace_back("threads", std::to_string(cfg.threads));
  return kv;
}

void apply_key_values(RunConfig& cfg, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    if (key == "n") cfg.planner.n_candidates = parse_uint(key, value);
    else if (key == "m") cfg.planner.n_simulations = parse_uint(key, value);
    else if (key == "k") cfg.planner.set_size = parse_uint(key, value);
    else if (key == "alpha") cfg.planner.alpha = parse_double(key, value);
    else if (key == "lambda") cfg.planner.lambda = parse_double(key, value);
    else if (key == "beta") cfg.planner.beta = parse_double(key, value);
    else if (key == "seed") cfg.planner.seed = parse_uint(key, value);
    else if (key == "mode") cfg.mode = value;
    else if (key == "dim") cfg.dim = parse_uint(key, value);
    else if (key == "persona") cfg.persona = parse_bool(key, value);
    else if (key == "strategy") cfg.strategy = value;
    else if (key == "theta") cfg.theta = parse_double(key, value);
    else if (key == "n_topics") cfg.n_topics = parse_uint(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_uint(key, value);
    else if (key == "bench_messages") cfg.bench_messages = parse_uint(key, value);
    else if (key == "threads") cfg.threads = parse_uint(key, value);
    else if (key == "corpus") cfg.corpus = value;
    else if (key == "test_corpus") cfg.test_corpus = value;
    else if (key == "pool") cfg.pool = value;
    else if (key == "pool_matrix") cfg.pool_matrix = value;
    else if (key == "encoder") cfg.encoder = value;
    else if (key == "message_matrix") cfg.message_matrix = value;
    else if (key == "reply_matrix") cfg.reply_matrix = value;
    else if (key == "predictions") cfg.predictions = value;
    else if (key == "output") cfg.output = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else throw UsageError("unknown config key '" + key + "'");
  }
}

std::string write_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : to_key_values(cfg)) out += key + " = " + value + "\n";
  return out;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> values;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw UsageError("config line " + std::to_string(number) + ": empty key");
    values[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return values;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_key_values(base, parse_config_text(buf.str()));
  return base;
}

std::string config_echo_json(const RunConfig& cfg, std::uint64_t input_hash) {
  jsonl::json doc = jsonl::json::object();
  for (const auto& [key, value] : to_key_values(cfg, false)) doc[key] = value;
  // Paths are echoed by file name only so that the same run in another
  // directory writes the same bytes; the input hash pins the contents.
  // The output directory is left out for the same reason.
  for (const char* key : {"corpus", "test_corpus", "pool", "pool_matrix", "encoder",
                          "message_matrix", "reply_matrix", "predictions", "output"}) {
    doc[key] = std::filesystem::path(doc[key].get<std::string>()).filename().string();
  }
  doc.erase("out_dir");
  doc["input_hash"] = hex64(input_hash);
  return doc.dump();
}

std::uint64_t hash_inputs(std::span<const std::string> paths) {
  std::uint64_t state = fnv1a64("");
  for (const auto& p : paths) {
    if (p.empty() || !std::filesystem::exists(p)) continue;
    state = fnv1a64(hex64(hash_file(p)), state);
  }
  return state;
}

}  // namespace replyset
