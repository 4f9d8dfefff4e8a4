// Run persistence for the command-line driver: timestamped run directories,
// manifests that can replay a run, and locale-independent number formatting
// shared by every artifact writer. Kept free of command logic so tests can
// exercise the persistence contract on its own.
#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nekholab {

inline constexpr const char *kLibraryVersion = "0.3.0";

// 17 significant digits in the classic locale: enough to round-trip any
// double, so a replayed run parses back the same values and rewrites
// identical bytes.
std::string format_double17(double x);

// "1e-2,1e-3,1e-4" -> doubles. Empty tokens, trailing junk, or an empty
// string throw std::invalid_argument naming the offender.
std::vector<double> parse_double_list(const std::string &text);

// Whole-file text IO; both throw std::runtime_error with the path on failure.
std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &content);

// Effective configuration of one run, enough to replay the command. Flags
// hold (name, rendered value) pairs in definition order; commands record
// every parameter, defaults included, so a replay does not depend on the
// defaults staying put.
struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> flags;
  std::uint64_t seed = 0;
  std::string version = kLibraryVersion;
  std::string created_utc; // informational, not part of replay equality

  void add(const std::string &name, std::string value);
  void add(const std::string &name, const char *value);
  void add(const std::string &name, double value);
  void add(const std::string &name, int value);
  void add(const std::string &name, long value);
  void add(const std::string &name, std::uint64_t value);

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json &j);

  // Command followed by "--name value" per flag, ready for a fresh parse.
  std::vector<std::string> replay_args() const;
};

// A freshly created run directory <root>/<stamp>-<command>. Root is the
// first nonempty of the explicit argument, $NEKHOLAB_RUNS, or "runs";
// collisions within one second get a -2, -3, ... suffix.
struct RunDir {
  std::string path;
  std::string name; // final path component

  // Writes <path>/<filename>; same failure contract as write_text_file.
  void write(const std::string &filename, const std::string &content) const;
};

RunDir make_run_dir(const std::string &command, const std::string &root = "");

// UTC wall clock as "20260818-103059".
std::string utc_timestamp();

} // namespace nekholab
