#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "fraclab/dirichlet.hpp"
#include "fraclab/errors.hpp"
#include "fraclab/greenball.hpp"

namespace fraclab {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// Shortest text that round-trips the double.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

class CsvTable {
 public:
  using Cell = std::variant<double, long long, std::string>;

  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<Cell> row) {
    if (row.size() != header_.size()) throw ConfigurationError("csv row width does not match header");
    rows_.push_back(std::move(row));
  }

  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    append_line(out, header_);
    for (const auto& row : rows_) {
      std::vector<std::string> cells;
      for (const auto& c : row) {
        if (const auto* d = std::get_if<double>(&c)) cells.push_back(format_double(*d));
        else if (const auto* i = std::get_if<long long>(&c)) cells.push_back(std::to_string(*i));
        else cells.push_back(std::get<std::string>(c));
      }
      append_line(out, cells);
    }
    return out;
  }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

inline json to_json(const ProblemGeometry& g) { return {{"n", g.n}, {"s", g.s}, {"rho", g.rho}}; }

inline json to_json(const QuadratureSpec& q) {
  return {{"abs_tol", q.abs_tol},
          {"rel_tol", q.rel_tol},
          {"max_subdivisions", q.max_subdivisions},
          {"sphere_degree", q.sphere_degree}};
}

inline json to_json(const Vec3& v, int n) {
  json a = json::array();
  for (int i = 0; i < n; ++i) a.push_back(v[static_cast<std::size_t>(i)]);
  return a;
}

/// CSV body `r,theta_index,value`; the sphere nodes go into the sidecar.
inline std::string sampled_field_csv(const SampledField& f) {
  CsvTable t({"r", "theta_index", "value"});
  for (std::size_t i = 0; i < f.radii.size(); ++i)
    for (std::size_t k = 0; k < f.sphere.size(); ++k)
      t.add({f.radii[i], static_cast<long long>(k), f.values[i][k]});
  return t.str();
}

inline json sampled_field_sidecar(const SampledField& f, const std::string& csv_name) {
  json nodes = json::array();
  for (const auto& node : f.sphere) nodes.push_back({{"point", to_json(node.point, f.geometry.n)}, {"weight", node.weight}});
  return {{"schema_version", kSchemaVersion},
          {"data", csv_name},
          {"geometry", to_json(f.geometry)},
          {"provenance", f.provenance},
          {"radii_count", f.radii.size()},
          {"sphere_nodes", nodes},
          {"exterior", "identically zero outside the ball"},
          {"max_anisotropy", f.max_anisotropy()}};
}

/// Output files collected in memory and written only once the run has succeeded.
class OutputSet {
 public:
  void add(const std::string& name, std::string content) { files_[name] = std::move(content); }
  void add_json(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }

  void add_field(const std::string& stem, const SampledField& f) {
    add(stem + ".csv", sampled_field_csv(f));
    add_json(stem + ".json", sampled_field_sidecar(f, stem + ".csv"));
  }

  /// Prefixes every file with `dir/`.
  void merge(const std::string& dir, const OutputSet& other) {
    for (const auto& [name, content] : other.files_) files_[dir + "/" + name] = content;
  }

  const std::map<std::string, std::string>& files() const { return files_; }

  void write(const std::filesystem::path& root) const {
    for (const auto& [name, content] : files_) {
      const auto path = root / name;
      std::filesystem::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary);
      if (!out) throw ConfigurationError("cannot open " + path.string() + " for writing");
      out << content;
      if (!out) throw ConfigurationError("failed writing " + path.string());
    }
  }

 private:
  std::map<std::string, std::string> files_;
};

}  // namespace fraclab
