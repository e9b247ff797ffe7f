#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mada/config.hpp"
#include "mada/poly_opt.hpp"
#include "mada/vec.hpp"

namespace mada {

inline constexpr int kRecordSchemaVersion = 1;
inline constexpr const char* kCsvHeader =
    "step,loss,lr,grad_norm,beta1,beta2,beta3,rho,c,gamma,beta1_lion,beta2_lion,"
    "eff_lr_min,eff_lr_max";

struct RunRow {
  long step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
  CoefficientVector q;
  double eff_lr_min = 0.0;
  double eff_lr_max = 0.0;

  bool operator==(const RunRow&) const = default;
};

struct RunSummary {
  int schema_version = kRecordSchemaVersion;
  long steps = 0;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  CoefficientVector final_q;
  Vec final_x;  // stored only for dim <= 32
  double wall_seconds = 0.0;
  std::string config_hash;
  Config config;  // the config that produced the run, embedded for replay
};

struct RunRecord {
  std::vector<RunRow> rows;
  RunSummary summary;
};

inline bool records_equal_ignoring_wallclock(const RunRecord& a, const RunRecord& b) {
  if (a.rows != b.rows) return false;
  const RunSummary &sa = a.summary, &sb = b.summary;
  return sa.schema_version == sb.schema_version && sa.steps == sb.steps &&
         sa.seed == sb.seed && sa.final_loss == sb.final_loss &&
         sa.final_q == sb.final_q && sa.final_x == sb.final_x &&
         sa.config_hash == sb.config_hash &&
         sa.config.canonical_text() == sb.config.canonical_text();
}

namespace detail {

inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    double x = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::runtime_error(std::string("record: bad numeric field in ") + what + ": '" + s + "'");
  }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline std::string summary_path_for(const std::string& record_path) {
  return record_path + ".summary";
}

/// CSV rows (fixed column order) plus a flat-text summary sidecar.
inline void write_record(const RunRecord& rec, const std::string& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_record: cannot open '" + path + "'");
    out << kCsvHeader << '\n';
    for (const RunRow& r : rec.rows) {
      out << r.step << ',' << detail::fmt_double(r.loss) << ','
          << detail::fmt_double(r.lr) << ',' << detail::fmt_double(r.grad_norm) << ','
          << detail::fmt_double(r.q.beta1) << ',' << detail::fmt_double(r.q.beta2) << ','
          << detail::fmt_double(r.q.beta3) << ',' << detail::fmt_double(r.q.rho) << ','
          << detail::fmt_double(r.q.c) << ',' << detail::fmt_double(r.q.gamma) << ','
          << detail::fmt_double(r.q.lion_beta1) << ',' << detail::fmt_double(r.q.lion_beta2) << ','
          << detail::fmt_double(r.eff_lr_min) << ',' << detail::fmt_double(r.eff_lr_max) << '\n';
    }
    if (!out) throw std::runtime_error("write_record: write failed for '" + path + "'");
  }
  {
    const RunSummary& s = rec.summary;
    std::ofstream out(summary_path_for(path), std::ios::binary);
    if (!out) throw std::runtime_error("write_record: cannot open '" + summary_path_for(path) + "'");
    out << "schema_version = " << s.schema_version << '\n';
    out << "steps = " << s.steps << '\n';
    out << "seed = " << s.seed << '\n';
    out << "final_loss = " << detail::fmt_double(s.final_loss) << '\n';
    out << "final_beta1 = " << detail::fmt_double(s.final_q.beta1) << '\n';
    out << "final_beta2 = " << detail::fmt_double(s.final_q.beta2) << '\n';
    out << "final_beta3 = " << detail::fmt_double(s.final_q.beta3) << '\n';
    out << "final_rho = " << detail::fmt_double(s.final_q.rho) << '\n';
    out << "final_c = " << detail::fmt_double(s.final_q.c) << '\n';
    out << "final_gamma = " << detail::fmt_double(s.final_q.gamma) << '\n';
    out << "final_beta1_lion = " << detail::fmt_double(s.final_q.lion_beta1) << '\n';
    out << "final_beta2_lion = " << detail::fmt_double(s.final_q.lion_beta2) << '\n';
    if (!s.final_x.empty() && s.final_x.size() <= 32) {
      out << "final_x =";
      for (double xi : s.final_x) out << ' ' << detail::fmt_double(xi);
      out << '\n';
    }
    out << "wall_seconds = " << detail::fmt_double(s.wall_seconds) << '\n';
    out << "config_hash = " << s.config_hash << '\n';
    for (const auto& [k, v] : s.config.values()) {
      out << "config." << k << " = " << v << '\n';
    }
    if (!out) throw std::runtime_error("write_record: write failed for summary sidecar");
  }
}

inline RunRecord read_record(const std::string& path) {
  RunRecord rec;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_record: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_record: empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
      throw std::runtime_error("read_record: unexpected CSV header in '" + path + "'");
    }
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto f = detail::split(line, ',');
      if (f.size() != 14) throw std::runtime_error("read_record: malformed row in '" + path + "'");
      RunRow r;
      r.step = std::stol(f[0]);
      r.loss = detail::parse_double(f[1], "loss");
      r.lr = detail::parse_double(f[2], "lr");
      r.grad_norm = detail::parse_double(f[3], "grad_norm");
      r.q.beta1 = detail::parse_double(f[4], "beta1");
      r.q.beta2 = detail::parse_double(f[5], "beta2");
      r.q.beta3 = detail::parse_double(f[6], "beta3");
      r.q.rho = detail::parse_double(f[7], "rho");
      r.q.c = detail::parse_double(f[8], "c");
      r.q.gamma = detail::parse_double(f[9], "gamma");
      r.q.lion_beta1 = detail::parse_double(f[10], "beta1_lion");
      r.q.lion_beta2 = detail::parse_double(f[11], "beta2_lion");
      r.eff_lr_min = detail::parse_double(f[12], "eff_lr_min");
      r.eff_lr_max = detail::parse_double(f[13], "eff_lr_max");
      rec.rows.push_back(r);
    }
  }
  {
    std::ifstream in(summary_path_for(path), std::ios::binary);
    if (!in) throw std::runtime_error("read_record: cannot open '" + summary_path_for(path) + "'");
    std::string line;
    RunSummary& s = rec.summary;
    bool have_version = false;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (Config::trim(line).empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) throw std::runtime_error("read_record: malformed summary line");
      std::string key = Config::trim(line.substr(0, eq));
      std::string val = Config::trim(line.substr(eq + 1));
      if (key == "schema_version") {
        int v = int(std::stol(val));
        if (v != kRecordSchemaVersion) {
          throw std::runtime_error("read_record: schema version " + val + " != expected " +
                                   std::to_string(kRecordSchemaVersion));
        }
        s.schema_version = v;
        have_version = true;
      } else if (key == "steps") {
        s.steps = std::stol(val);
      } else if (key == "seed") {
        s.seed = std::stoull(val);
      } else if (key == "final_loss") {
        s.final_loss = detail::parse_double(val, "final_loss");
      } else if (key == "final_beta1") {
        s.final_q.beta1 = detail::parse_double(val, "final_beta1");
      } else if (key == "final_beta2") {
        s.final_q.beta2 = detail::parse_double(val, "final_beta2");
      } else if (key == "final_beta3") {
        s.final_q.beta3 = detail::parse_double(val, "final_beta3");
      } else if (key == "final_rho") {
        s.final_q.rho = detail::parse_double(val, "final_rho");
      } else if (key == "final_c") {
        s.final_q.c = detail::parse_double(val, "final_c");
      } else if (key == "final_gamma") {
        s.final_q.gamma = detail::parse_double(val, "final_gamma");
      } else if (key == "final_beta1_lion") {
        s.final_q.lion_beta1 = detail::parse_double(val, "final_beta1_lion");
      } else if (key == "final_beta2_lion") {
        s.final_q.lion_beta2 = detail::parse_double(val, "final_beta2_lion");
      } else if (key == "final_x") {
        s.final_x.clear();
        std::istringstream xs(val);
        std::string tok;
        while (xs >> tok) s.final_x.push_back(detail::parse_double(tok, "final_x"));
      } else if (key == "wall_seconds") {
        s.wall_seconds = detail::parse_double(val, "wall_seconds");
      } else if (key == "config_hash") {
        s.config_hash = val;
      } else if (key.rfind("config.", 0) == 0) {
        s.config.set(key.substr(7), val);
      } else {
        throw std::runtime_error("read_record: unknown summary key '" + key + "'");
      }
    }
    if (!have_version) {
      throw std::runtime_error("read_record: summary is missing schema_version");
    }
  }
  return rec;
}

/// Final coefficient snapshot of a record (MADA-FS extraction).
inline CoefficientVector extract_fs(const RunRecord& rec) {
  if (rec.rows.empty()) throw std::invalid_argument("extract_fs: record has no rows");
  return rec.rows.back().q;
}

}  // namespace mada
