#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "star/baselines.hpp"

namespace star {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  EngineConfig engine;
  std::string trace_path;
  std::string out_path;
  int64_t crash_at = -1;      // crash after this many events; -1 disables
  uint64_t crash_random = 0;  // number of random crash points
};

inline uint64_t parse_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("bad value for " + key + ": '" + v + "'");
  return std::stoull(v);
}

// One key=value assignment, shared by config files and CLI overrides.
inline void apply_kv(SimConfig& c, const std::string& key,
                     const std::string& value) {
  if (key == "mem_bytes") {
    c.engine.mem_bytes = parse_u64(key, value);
  } else if (key == "seed") {
    c.engine.seed = parse_u64(key, value);
  } else if (key == "scheme") {
    auto s = parse_scheme(value);
    if (!s) throw ConfigError("unknown scheme '" + value + "'");
    c.engine.scheme = *s;
  } else if (key == "aw_mode") {
    auto m = parse_aw_mode(value);
    if (!m) throw ConfigError("unknown aw_mode '" + value + "'");
    c.engine.aw = *m;
  } else if (key == "cc_bytes") {
    c.engine.cc_bytes = parse_u64(key, value);
  } else if (key == "sit_bytes") {
    c.engine.sit_bytes = parse_u64(key, value);
  } else if (key == "ways") {
    c.engine.ways = parse_u64(key, value);
  } else if (key == "adr_lines") {
    c.engine.adr_lines = parse_u64(key, value);
  } else if (key == "adr_l2_lines") {
    c.engine.adr_l2_lines = parse_u64(key, value);
  } else if (key == "trace") {
    c.trace_path = value;
  } else if (key == "out") {
    c.out_path = value;
  } else if (key == "crash_at") {
    c.crash_at = static_cast<int64_t>(parse_u64(key, value));
  } else if (key == "crash_random") {
    c.crash_random = parse_u64(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

// Flat key=value file; blank lines and #-comments are skipped.
inline void load_config_file(SimConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string line;
  size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(ln) +
                        ": expected key=value");
    std::string key = line.substr(first, eq - first);
    std::string val = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
      key.pop_back();
    size_t vs = val.find_first_not_of(" \t");
    val = vs == std::string::npos ? "" : val.substr(vs);
    while (!val.empty() && (val.back() == ' ' || val.back() == '\t'))
      val.pop_back();
    try {
      apply_kv(c, key, val);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(ln) + ": " + e.what());
    }
  }
}

}  // namespace star
