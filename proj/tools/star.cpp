#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "star/star.hpp"

namespace {

using namespace star;

std::optional<WorkloadKind> parse_kind(const std::string& s) {
  if (s == "uniform") return WorkloadKind::Uniform;
  if (s == "zipf") return WorkloadKind::Zipf;
  if (s == "hotspot") return WorkloadKind::Hotspot;
  if (s == "sequential") return WorkloadKind::Sequential;
  if (s == "stride") return WorkloadKind::Stride;
  if (s == "page-burst") return WorkloadKind::PageBurst;
  return std::nullopt;
}

void write_text(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"secure NVM write-overhead and crash-recovery simulator"};
  app.require_subcommand(1);
  int rc = 0;

  // gen-trace
  auto* gen = app.add_subcommand("gen-trace", "generate a trace file");
  struct {
    std::string workload, kind, out;
    uint64_t events = 100000, mem = 16ull << 20, region = 4096, seed = 1;
    uint64_t hot_lines = 64, stride = 64, burst = 16;
    double write_frac = 1.0, zipf_s = 1.2, hot_frac = 0.9;
    bool list = false;
  } g;
  gen->add_flag("--list-workloads", g.list, "print suite workload names");
  gen->add_option("--workload", g.workload, "named workload from the suite");
  gen->add_option("--kind", g.kind,
                  "uniform|zipf|hotspot|sequential|stride|page-burst");
  gen->add_option("--events", g.events, "number of trace events");
  gen->add_option("--mem-bytes", g.mem, "memory size in bytes");
  gen->add_option("--region-lines", g.region, "footprint in 64B lines");
  gen->add_option("--write-frac", g.write_frac, "fraction of writes");
  gen->add_option("--zipf-s", g.zipf_s, "zipf exponent");
  gen->add_option("--hot-frac", g.hot_frac, "share of accesses in hot set");
  gen->add_option("--hot-lines", g.hot_lines, "hot set size in lines");
  gen->add_option("--stride", g.stride, "stride in lines");
  gen->add_option("--burst", g.burst, "writes per page burst");
  gen->add_option("--seed", g.seed, "rng seed");
  gen->add_option("--out", g.out, "output file (default stdout)");
  gen->callback([&] {
    if (g.list) {
      for (const auto& s : default_suite()) std::cout << s.name << "\n";
      return;
    }
    WorkloadSpec spec;
    if (!g.workload.empty()) {
      auto suite = default_suite(g.events);
      const WorkloadSpec* found = find_workload(suite, g.workload);
      if (!found) throw ConfigError("unknown workload " + g.workload);
      spec = *found;
    } else {
      auto k = parse_kind(g.kind);
      if (!k) throw ConfigError("need --workload or a valid --kind");
      spec.name = g.kind;
      spec.kind = *k;
      spec.events = g.events;
      spec.region_lines = g.region;
      spec.write_frac = g.write_frac;
      spec.zipf_s = g.zipf_s;
      spec.hot_frac = g.hot_frac;
      spec.hot_lines = g.hot_lines;
      spec.stride = g.stride;
      spec.burst = g.burst;
    }
    Trace tr = generate_trace(spec, g.mem, g.seed);
    std::ostringstream body;
    write_trace(body, tr);
    write_text(g.out, body.str());
  });

  // run / crash-test share option plumbing
  struct RunOpts {
    std::string config, trace, out, scheme, aw;
    std::optional<uint64_t> mem, seed, cc, sitc, ways, adr, adr_l2;
    std::optional<int64_t> crash_at;
    std::optional<uint64_t> crash_random;
  };
  auto add_run_opts = [](CLI::App* c, RunOpts& o) {
    c->add_option("--config", o.config, "flat key=value config file");
    c->add_option("--trace", o.trace, "trace file");
    c->add_option("--out", o.out, "stats JSON output (default stdout)");
    c->add_option("--mem-bytes", o.mem, "memory size in bytes");
    c->add_option("--scheme", o.scheme, "star|wb|strict|anubis");
    c->add_option("--aw-mode", o.aw, "aw-l|aw-m|aw-h");
    c->add_option("--seed", o.seed, "rng and key seed");
    c->add_option("--cc-bytes", o.cc, "counter cache size");
    c->add_option("--sit-bytes", o.sitc, "tree cache size");
    c->add_option("--ways", o.ways, "cache associativity");
    c->add_option("--adr-lines", o.adr, "ADR bitmap line budget");
    c->add_option("--adr-l2-lines", o.adr_l2, "ADR lines reserved for L2");
    c->add_option("--crash-at", o.crash_at, "crash after N events");
    c->add_option("--crash-random", o.crash_random, "N random crash points");
  };
  auto build_config = [](const RunOpts& o) {
    SimConfig sc;
    if (!o.config.empty()) load_config_file(sc, o.config);
    if (!o.trace.empty()) sc.trace_path = o.trace;
    if (!o.out.empty()) sc.out_path = o.out;
    if (o.mem) apply_kv(sc, "mem_bytes", std::to_string(*o.mem));
    if (!o.scheme.empty()) apply_kv(sc, "scheme", o.scheme);
    if (!o.aw.empty()) apply_kv(sc, "aw_mode", o.aw);
    if (o.seed) apply_kv(sc, "seed", std::to_string(*o.seed));
    if (o.cc) apply_kv(sc, "cc_bytes", std::to_string(*o.cc));
    if (o.sitc) apply_kv(sc, "sit_bytes", std::to_string(*o.sitc));
    if (o.ways) apply_kv(sc, "ways", std::to_string(*o.ways));
    if (o.adr) apply_kv(sc, "adr_lines", std::to_string(*o.adr));
    if (o.adr_l2) apply_kv(sc, "adr_l2_lines", std::to_string(*o.adr_l2));
    if (o.crash_at) apply_kv(sc, "crash_at", std::to_string(*o.crash_at));
    if (o.crash_random)
      apply_kv(sc, "crash_random", std::to_string(*o.crash_random));
    if (sc.trace_path.empty()) throw ConfigError("no trace file given");
    return sc;
  };
  auto load_trace = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open trace file " + path);
    return parse_trace(in);
  };

  auto* run = app.add_subcommand("run", "simulate a trace, emit stats JSON");
  RunOpts ro;
  add_run_opts(run, ro);
  run->callback([&] {
    SimConfig sc = build_config(ro);
    SimRunner sim(sc, load_trace(sc.trace_path));
    sim.run();
    write_text(sc.out_path, sim.result_json().dump(2) + "\n");
    if (!sim.all_recoveries_verified()) {
      std::cerr << "recovery verification failed\n";
      rc = 4;
    }
  });

  auto* ct = app.add_subcommand(
      "crash-test", "crash at random points, recover, verify the image");
  RunOpts co;
  add_run_opts(ct, co);
  ct->callback([&] {
    SimConfig sc = build_config(co);
    if (sc.crash_at < 0 && sc.crash_random == 0) sc.crash_random = 50;
    SimRunner sim(sc, load_trace(sc.trace_path));
    sim.set_deep_verify(true);
    sim.run();
    const auto& reps = sim.recoveries();
    const auto& pts = sim.crash_points();
    for (size_t i = 0; i < reps.size(); ++i)
      std::cout << "crash@" << pts[i] << ": "
                << (reps[i].verified ? "verified" : "FAILED")
                << " reads=" << reps[i].charged_reads
                << " time=" << reps[i].seconds() << "s\n";
    if (!sc.out_path.empty())
      write_text(sc.out_path, sim.result_json().dump(2) + "\n");
    if (!sim.all_recoveries_verified()) {
      std::cerr << "recovery verification failed\n";
      rc = 4;
    } else {
      std::cout << reps.size() << " crash points verified\n";
    }
  });

  // report
  auto* rep = app.add_subcommand("report", "summarize stats JSON files as CSV");
  std::vector<std::string> rep_files;
  std::string rep_out;
  rep->add_option("files", rep_files, "stats JSON files")->required();
  rep->add_option("--out", rep_out, "CSV output (default stdout)");
  rep->callback([&] {
    std::vector<Json> runs;
    for (const auto& f : rep_files) {
      std::ifstream in(f, std::ios::binary);
      if (!in) throw ConfigError("cannot open stats file " + f);
      runs.push_back(Json::parse(in));
    }
    write_text(rep_out, report_csv(runs));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity violation: " << e.what() << "\n";
    return 3;
  } catch (const TraceParseError& e) {
    std::cerr << "trace parse error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Json::parse_error& e) {
    std::cerr << "json parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
