#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace star {

struct TraceEvent {
  bool is_write = false;
  uint64_t addr = 0;
};

struct Trace {
  uint64_t mem_bytes = 0;
  std::vector<TraceEvent> events;
};

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(size_t line, const std::string& what)
      : std::runtime_error("trace line " + std::to_string(line) + ": " + what),
        line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// Format:
//   #star-trace v1 mem=<bytes>
//   W 0x<hex>
//   R 0x<hex>
// Blank lines are permitted; addresses must fall inside [0, mem).
inline Trace parse_trace(std::istream& in) {
  Trace t;
  std::string line;
  size_t ln = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      const std::string prefix = "#star-trace v1 mem=";
      if (line.rfind(prefix, 0) != 0)
        throw TraceParseError(ln, "expected header '#star-trace v1 mem=<bytes>'");
      std::string num = line.substr(prefix.size());
      if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos)
        throw TraceParseError(ln, "bad mem size '" + num + "'");
      t.mem_bytes = std::stoull(num);
      if (t.mem_bytes == 0) throw TraceParseError(ln, "mem size must be nonzero");
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    if (line.size() < 4 || (line[0] != 'W' && line[0] != 'R') || line[1] != ' ' ||
        line[2] != '0' || line[3] != 'x')
      throw TraceParseError(ln, "expected 'W 0x<hex>' or 'R 0x<hex>'");
    std::string hex = line.substr(4);
    if (hex.empty() ||
        hex.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
      throw TraceParseError(ln, "bad hex address '" + hex + "'");
    uint64_t addr = std::stoull(hex, nullptr, 16);
    if (addr >= t.mem_bytes)
      throw TraceParseError(ln, "address 0x" + hex + " outside memory");
    t.events.push_back({line[0] == 'W', addr});
  }
  if (!have_header) throw TraceParseError(ln ? ln : 1, "empty trace file");
  return t;
}

inline void write_trace(std::ostream& out, const Trace& t) {
  out << "#star-trace v1 mem=" << t.mem_bytes << "\n";
  char buf[32];
  for (const TraceEvent& e : t.events) {
    std::snprintf(buf, sizeof buf, "%c 0x%llx", e.is_write ? 'W' : 'R',
                  static_cast<unsigned long long>(e.addr));
    out << buf << "\n";
  }
}

}  // namespace star
