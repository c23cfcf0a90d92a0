#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "replyset/planner.hpp"

namespace replyset {

/// Every knob of a pipeline run. Values come from defaults, then an
/// optional `key = value` config file, then command-line flags.
struct RunConfig {
  PlannerConfig planner;

  // paths
  std::string corpus;
  std::string test_corpus;
  std::string pool;
  std::string pool_matrix;
  std::string encoder;
  std::string message_matrix;
  std::string reply_matrix;
  std::string predictions;
  std::string output;
  std::string out_dir;

  // encoder
  std::size_t dim = 256;
  bool persona = false;

  // baselines
  std::string strategy = "matching";
  double theta = 0.5;
  std::size_t n_topics = 50;

  // runtime
  std::size_t threads = 1;
  std::size_t batch_size = 32;
  std::size_t bench_messages = 512;
  std::string mode = "offline";

  /// Throws UsageError on an invalid combination.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Ordered key/value view. `include_runtime` adds the fields that only
/// affect scheduling (threads), which output headers leave out so that the
/// bytes of every artifact are independent of them.
std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg,
                                                               bool include_runtime = true);

/// Applies `key = value` pairs onto `cfg`. Unknown keys and unparsable
/// values throw UsageError naming the key.
void apply_key_values(RunConfig& cfg, const std::map<std::string, std::string>& values);

/// Flat config text: `key = value` per line; '#' starts a comment.
std::string write_config(const RunConfig& cfg);
std::map<std::string, std::string> parse_config_text(std::string_view text);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// JSON object of to_key_values(cfg, false), with paths reduced to file
/// names and the output directory dropped, plus "input_hash".
std::string config_echo_json(const RunConfig& cfg, std::uint64_t input_hash);

/// Combined FNV-1a of the given files in order; missing paths are skipped.
std::uint64_t hash_inputs(std::span<const std::string> paths);

}  // namespace replyset
