#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "star/geometry.hpp"
#include "star/trace.hpp"

namespace star {

enum class WorkloadKind {
  Uniform,     // independent uniform lines over the region
  Zipf,        // zipf-ranked lines, rank k maps to line k-1
  Hotspot,     // hot_frac of accesses hit the first hot_lines lines
  Sequential,  // ascending line sweep, wrapping
  Stride,      // fixed line stride, wrapping
  PageBurst,   // bursts of consecutive lines within one random page
};

struct WorkloadSpec {
  std::string name;
  WorkloadKind kind = WorkloadKind::Uniform;
  uint64_t events = 100000;
  uint64_t region_lines = 4096;
  double write_frac = 1.0;
  double zipf_s = 1.2;       // Zipf exponent
  double hot_frac = 0.9;     // Hotspot: share of accesses into the hot set
  uint64_t hot_lines = 64;   // Hotspot: size of the hot set
  uint64_t stride = 64;      // Stride: lines per step
  uint64_t burst = 16;       // PageBurst: consecutive lines per burst
};

// Draws ranks 1..n with probability proportional to rank^-s via an inverted
// CDF table.  Rank k maps to line k-1, so popular lines cluster at the
// bottom of the region and share counter blocks.
class ZipfSampler {
 public:
  ZipfSampler(uint64_t n, double s) : cdf_(n) {
    double acc = 0;
    for (uint64_t k = 1; k <= n; ++k) {
      acc += std::pow(double(k), -s);
      cdf_[k - 1] = acc;
    }
    for (double& v : cdf_) v /= acc;
  }

  uint64_t draw(std::mt19937_64& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    size_t lo = 0, hi = cdf_.size() - 1;
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (cdf_[mid] < u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

 private:
  std::vector<double> cdf_;
};

inline Trace generate_trace(const WorkloadSpec& w, uint64_t mem_bytes,
                            uint64_t seed) {
  Trace t;
  t.mem_bytes = mem_bytes;
  t.events.reserve(w.events);
  uint64_t region = std::min<uint64_t>(w.region_lines, mem_bytes / kLineBytes);
  std::mt19937_64 rng(seed);
  auto is_write = [&](uint64_t i) {
    if (w.write_frac >= 1.0) return true;
    (void)i;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < w.write_frac;
  };

  switch (w.kind) {
    case WorkloadKind::Uniform: {
      for (uint64_t i = 0; i < w.events; ++i) {
        uint64_t line = rng() % region;
        t.events.push_back({is_write(i), line * kLineBytes});
      }
      break;
    }
    case WorkloadKind::Zipf: {
      ZipfSampler z(region, w.zipf_s);
      for (uint64_t i = 0; i < w.events; ++i)
        t.events.push_back({is_write(i), z.draw(rng) * kLineBytes});
      break;
    }
    case WorkloadKind::Hotspot: {
      uint64_t hot = std::min(w.hot_lines, region);
      for (uint64_t i = 0; i < w.events; ++i) {
        bool in_hot =
            std::uniform_real_distribution<double>(0.0, 1.0)(rng) < w.hot_frac;
        uint64_t line = in_hot ? rng() % hot : rng() % region;
        t.events.push_back({is_write(i), line * kLineBytes});
      }
      break;
    }
    case WorkloadKind::Sequential: {
      for (uint64_t i = 0; i < w.events; ++i)
        t.events.push_back({is_write(i), (i % region) * kLineBytes});
      break;
    }
    case WorkloadKind::Stride: {
      uint64_t line = 0;
      for (uint64_t i = 0; i < w.events; ++i) {
        t.events.push_back({is_write(i), line * kLineBytes});
        line = (line + w.stride) % region;
      }
      break;
    }
    case WorkloadKind::PageBurst: {
      uint64_t pages = std::max<uint64_t>(1, region / kCountersPerBlock);
      uint64_t i = 0;
      while (i < w.events) {
        uint64_t page = rng() % pages;
        uint64_t start = rng() % kCountersPerBlock;
        for (uint64_t b = 0; b < w.burst && i < w.events; ++b, ++i) {
          uint64_t line = page * kCountersPerBlock + (start + b) % kCountersPerBlock;
          t.events.push_back({is_write(i), line * kLineBytes});
        }
      }
      break;
    }
  }
  return t;
}

// The evaluation suite: a spread of localities from page-local bursts to
// uniform churn over a footprint several times the counter cache.
inline std::vector<WorkloadSpec> default_suite(uint64_t events = 100000) {
  std::vector<WorkloadSpec> v;
  auto add = [&](WorkloadSpec w) {
    w.events = events;
    v.push_back(std::move(w));
  };
  add({.name = "seq", .kind = WorkloadKind::Sequential, .region_lines = 65536});
  add({.name = "stride8", .kind = WorkloadKind::Stride, .region_lines = 65536,
       .stride = 8});
  add({.name = "burst", .kind = WorkloadKind::PageBurst, .region_lines = 65536,
       .burst = 16});
  add({.name = "zipf12", .kind = WorkloadKind::Zipf, .region_lines = 65536,
       .zipf_s = 1.2});
  add({.name = "hotspot", .kind = WorkloadKind::Hotspot, .region_lines = 65536,
       .hot_frac = 0.9, .hot_lines = 2048});
  add({.name = "uniform96k", .kind = WorkloadKind::Uniform,
       .region_lines = 98304});
  add({.name = "mixed", .kind = WorkloadKind::Zipf, .region_lines = 49152,
       .write_frac = 0.7, .zipf_s = 1.1});
  return v;
}

inline const WorkloadSpec* find_workload(const std::vector<WorkloadSpec>& suite,
                                         const std::string& name) {
  for (const auto& w : suite)
    if (w.name == name) return &w;
  return nullptr;
}

}  // namespace star
