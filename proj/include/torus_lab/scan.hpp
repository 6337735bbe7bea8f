#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "torus_lab/errors.hpp"
#include "torus_lab/version.hpp"

namespace torus {

struct Column {
  std::string name;
  bool integer = false;
};

/// Table of numeric rows plus the manifest describing how it was produced.
struct ScanResult {
  std::string experiment;
  int schema_version = 1;
  std::vector<Column> columns;
  std::vector<std::vector<double>> rows;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::vector<std::string> notes;  // one-screen summary lines

  void add_row(std::vector<double> r) {
    if (r.size() != columns.size()) throw InternalError("row width does not match the " + experiment + " schema");
    rows.push_back(std::move(r));
  }

  /// Lexicographic numeric order; NaN sorts last.
  void sort_rows() {
    auto less = [](double a, double b) {
      if (std::isnan(a)) return false;
      if (std::isnan(b)) return true;
      return a < b;
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const auto& x, const auto& y) {
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (less(x[k], y[k])) return true;
        if (less(y[k], x[k])) return false;
      }
      return false;
    });
  }

  std::string schema() const {
    std::string s = experiment + "/" + std::to_string(schema_version) + ":";
    for (std::size_t k = 0; k < columns.size(); ++k) s += (k ? "," : "") + columns[k].name;
    return s;
  }
};

inline std::string format_cell(double v, bool integer) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  if (integer)
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(std::llround(v)));
  else
    std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const ScanResult& r) {
  std::ostringstream os;
  for (std::size_t k = 0; k < r.columns.size(); ++k) os << (k ? "," : "") << r.columns[k].name;
  os << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_cell(row[k], r.columns[k].integer);
    os << '\n';
  }
  return os.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct WrittenScan {
  std::filesystem::path csv;
  std::filesystem::path manifest;
  std::string hash;
};

/// Writes <experiment>-<hash>.csv and <experiment>-<hash>.manifest.json.
/// The hash covers the manifest without its wall_time_s field; the manifest
/// in turn records the CSV checksum, so the file name addresses both.
inline WrittenScan write_scan(const ScanResult& r, const nlohmann::ordered_json& config,
                              const std::filesystem::path& dir, double wall_time_s) {
  const std::string csv = to_csv(r);
  nlohmann::ordered_json m;
  m["experiment"] = r.experiment;
  m["schema"] = r.schema();
  m["version"] = version;
  m["compiler"] = build_compiler();
  m["config"] = config;
  m["rows"] = r.rows.size();
  m["csv_fnv1a"] = hex64(fnv1a(csv));
  m["summary"] = r.summary;
  const std::string hash = hex64(fnv1a(m.dump()));
  m["hash"] = hash;
  m["wall_time_s"] = wall_time_s;

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir.string() + ": " + ec.message());
  WrittenScan w;
  w.hash = hash;
  w.csv = dir / (r.experiment + "-" + hash + ".csv");
  w.manifest = dir / (r.experiment + "-" + hash + ".manifest.json");
  std::ofstream(w.csv, std::ios::binary) << csv;
  std::ofstream(w.manifest, std::ios::binary) << m.dump(2) << '\n';
  if (!std::filesystem::exists(w.csv) || !std::filesystem::exists(w.manifest))
    throw ValidationError("cannot write to " + dir.string());
  return w;
}

}  // namespace torus
