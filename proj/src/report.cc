// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "c5/bench.h"

namespace c5 {

Quartiles quartiles(std::vector<double> values) {
  Quartiles q;
  q.count = values.size();
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  q.min = values.front();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.max = values.back();
  return q;
}

void emit_csv(const RunReport& report, std::ostream& out) {
  const std::string& u = report.time_unit;
  out << "txn_index,f_p_" << u << ",f_b_" << u << ",lag_" << u << "\n";
  for (const LagSample& s : report.samples) {
    out << s.index << ',' << s.f_p << ',';
    if (s.f_b >= 0) {
      out << s.f_b << ',' << s.lag();
    } else {
      out << ',';
    }
    out << '\n';
  }
}

void emit_csv(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  emit_csv(report, out);
  if (!out) throw Error("failed writing " + path.string());
}

void emit_summary(const RunReport& report, std::ostream& out) {
  const std::string& u = report.time_unit;
  const char* rate = report.time_unit == "ns" ? "txn/s" : "txn/unit";
  out << std::fixed << std::setprecision(3);
  out << "protocol:            " << report.protocol << "\n";
  out << "workload:            " << report.workload << " (" << report.mode << ")\n";
  out << "transactions:        " << report.txns << " (" << report.writes << " writes)\n";
  out << "window:              [" << report.window_begin << ", " << report.window_end << "] " << u << "\n";
  out << "primary throughput:  " << report.primary_throughput << ' ' << rate << "\n";
  out << "backup throughput:   " << report.backup_throughput << ' ' << rate << "\n";
  out << "relative throughput: " << report.relative_throughput << "\n";
  const Quartiles& q = report.lag;
  out << "lag (" << u << "):  n=" << q.count << " min=" << q.min << " q1=" << q.q1 << " median=" << q.median
      << " q3=" << q.q3 << " max=" << q.max << "\n";
  if (!report.ticks.empty()) {
    out << "snapshot ticks:      " << report.window_ticks_advanced << "/" << report.window_ticks
        << " advanced in window\n";
  }
  out << "backup stats:        installs=" << report.backup_stats.installs
      << " deferrals=" << report.backup_stats.deferrals << " rechecks=" << report.backup_stats.rechecks << "\n";
  out << "read observations:   " << report.mpc.observations << "\n";
  out << "mpc:                 " << (report.mpc.pass() ? "PASS" : "FAIL")
      << " (state=" << report.mpc.state_violations << " monotonic=" << report.mpc.monotonic_violations << ")\n";
  for (const std::string& line : report.mpc.lines) out << "  " << line << "\n";
  out << "final state:         " << (report.final_diff_rows == 0 ? "converged" : "DIVERGED")
      << " (" << report.final_diff_rows << " rows differ)\n";
  out << "primary vs log:      " << (report.primary_matches_log ? "match" : "MISMATCH") << "\n";
  if (!report.converged) out << "backup did not drain: " << report.diagnostics << "\n";
  out << "verdict:             " << (report.safe() ? "safe" : "UNSAFE") << "\n";
}

std::map<std::string, std::string> load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config", path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    std::replace(key.begin(), key.end(), '-', '_');
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace c5
