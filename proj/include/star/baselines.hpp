#pragma once

#include <optional>
#include <string>

#include "star/recovery.hpp"
#include "star/sit.hpp"

namespace star {

// All four persistence schemes run on the same engine; they differ only in
// which machinery is switched on:
//   wb      lazy write-back, no crash support (the overhead baseline)
//   strict  every data write flushes its whole branch
//   anubis  wb plus one shadow-table write mirroring every NVM write
//   star    lazy write-back plus ahead writes, dirty-line tracking, and the
//           on-chip cache tree for verified recovery

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Star: return "star";
    case Scheme::WriteBack: return "wb";
    case Scheme::Strict: return "strict";
    case Scheme::Anubis: return "anubis";
  }
  return "?";
}

inline std::optional<Scheme> parse_scheme(const std::string& s) {
  if (s == "star") return Scheme::Star;
  if (s == "wb") return Scheme::WriteBack;
  if (s == "strict") return Scheme::Strict;
  if (s == "anubis") return Scheme::Anubis;
  return std::nullopt;
}

inline const char* aw_mode_name(AwMode m) {
  switch (m) {
    case AwMode::Low: return "aw-l";
    case AwMode::Mid: return "aw-m";
    case AwMode::High: return "aw-h";
  }
  return "?";
}

inline std::optional<AwMode> parse_aw_mode(const std::string& s) {
  if (s == "aw-l") return AwMode::Low;
  if (s == "aw-m") return AwMode::Mid;
  if (s == "aw-h") return AwMode::High;
  return std::nullopt;
}

// Recovery for the mirrored-write baseline is independent of the dirty set;
// dispatch on scheme so callers need not special-case it. Plain write-back
// keeps no recovery metadata at all, so its report is an unverified zero.
inline RecoveryReport recover_scheme(CrashSnapshot& s, size_t cc_lines,
                                     size_t sit_lines) {
  if (s.scheme == Scheme::Anubis) return recover_anubis(cc_lines, sit_lines);
  if (s.scheme == Scheme::WriteBack) return RecoveryReport{};
  return recover(s);
}

}  // namespace star
