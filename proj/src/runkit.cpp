#include "nekholab/runkit.hpp"

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <sstream>
#include <stdexcept>

namespace nekholab {

std::string format_double17(double x) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::setprecision(17) << x;
  return out.str();
}

std::vector<double> parse_double_list(const std::string &text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string token = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    // Trim surrounding spaces so "1e-2, 1e-3" parses.
    std::size_t lo = token.find_first_not_of(" \t");
    std::size_t hi = token.find_last_not_of(" \t");
    if (lo == std::string::npos)
      throw std::invalid_argument("parse_double_list: empty entry in '" + text + "'");
    token = token.substr(lo, hi - lo + 1);
    std::size_t used = 0;
    double value = 0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception &) {
      throw std::invalid_argument("parse_double_list: bad number '" + token + "'");
    }
    if (used != token.size())
      throw std::invalid_argument("parse_double_list: bad number '" + token + "'");
    out.push_back(value);
    if (comma == std::string::npos)
      break;
    start = comma + 1;
  }
  if (out.empty())
    throw std::invalid_argument("parse_double_list: empty list");
  return out;
}

std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad())
    throw std::runtime_error("read failed on " + path);
  return out.str();
}

void write_text_file(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + path);
  out << content;
  out.flush();
  if (!out)
    throw std::runtime_error("write failed on " + path);
}

void Manifest::add(const std::string &name, std::string value) {
  flags.emplace_back(name, std::move(value));
}

void Manifest::add(const std::string &name, const char *value) {
  flags.emplace_back(name, std::string(value));
}

void Manifest::add(const std::string &name, double value) {
  flags.emplace_back(name, format_double17(value));
}

void Manifest::add(const std::string &name, int value) {
  flags.emplace_back(name, std::to_string(value));
}

void Manifest::add(const std::string &name, long value) {
  flags.emplace_back(name, std::to_string(value));
}

void Manifest::add(const std::string &name, std::uint64_t value) {
  flags.emplace_back(name, std::to_string(value));
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = version;
  j["seed"] = seed;
  j["created_utc"] = created_utc;
  // An array of [name, value] pairs keeps order and permits repeats, which
  // a plain object would not.
  j["flags"] = nlohmann::json::array();
  for (const auto &[name, value] : flags)
    j["flags"].push_back({name, value});
  return j;
}

Manifest Manifest::from_json(const nlohmann::json &j) {
  Manifest m;
  m.command = j.at("command").get<std::string>();
  m.version = j.value("version", std::string());
  m.seed = j.value("seed", std::uint64_t{0});
  m.created_utc = j.value("created_utc", std::string());
  for (const auto &pair : j.at("flags")) {
    if (!pair.is_array() || pair.size() != 2)
      throw std::invalid_argument("manifest flags must be [name, value] pairs");
    m.flags.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
  }
  return m;
}

std::vector<std::string> Manifest::replay_args() const {
  std::vector<std::string> args;
  args.push_back(command);
  for (const auto &[name, value] : flags) {
    args.push_back("--" + name);
    args.push_back(value);
  }
  return args;
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm parts{};
  gmtime_r(&now, &parts);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &parts);
  return buf;
}

void RunDir::write(const std::string &filename, const std::string &content) const {
  write_text_file(path + "/" + filename, content);
}

RunDir make_run_dir(const std::string &command, const std::string &root) {
  std::string base = root;
  if (base.empty()) {
    const char *env = std::getenv("NEKHOLAB_RUNS");
    base = env && *env ? env : "runs";
  }
  std::filesystem::create_directories(base);
  const std::string stem = utc_timestamp() + "-" + command;
  for (int attempt = 1; attempt < 10000; ++attempt) {
    std::string name = attempt == 1 ? stem : stem + "-" + std::to_string(attempt);
    std::filesystem::path candidate = std::filesystem::path(base) / name;
    std::error_code ec;
    if (std::filesystem::create_directory(candidate, ec) && !ec)
      return RunDir{candidate.string(), name};
    if (ec && !std::filesystem::exists(candidate))
      throw std::runtime_error("cannot create run directory " + candidate.string());
  }
  throw std::runtime_error("run directory collision limit under " + base);
}

} // namespace nekholab
