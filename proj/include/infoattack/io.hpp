#pragma once

// CSV and JSON serialization for systems, datasets, attack specs and reports.

#include <infoattack/attack.hpp>
#include <infoattack/min_norm.hpp>

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace infoattack {

namespace fs = std::filesystem;
using Json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kToolVersion = "1.0.0";

// --- CSV ---------------------------------------------------------------------

/// Headerless comma-separated matrix; every entry must parse and be finite.
/// An empty file is a matrix with `rows_hint` rows and no columns.
inline Matrix read_csv(const fs::path& path, Index rows_hint = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw IoError(path.string() + ": unparsable entry '" + cell + "'");
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos) {
        throw IoError(path.string() + ": unparsable entry '" + cell + "'");
      }
      if (!std::isfinite(v)) throw IoError(path.string() + ": non-finite entry");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw IoError(path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(rows_hint, 0);
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return M;
}

inline void write_csv(const fs::path& path, const Matrix& M) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j > 0) out << ',';
      out << M(i, j);
    }
    out << '\n';
  }
}

// --- JSON helpers --------------------------------------------------------------

inline Json to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Matrix matrix_from_json(const Json& j, Index rows, Index cols, const std::string& name) {
  if (!j.is_array()) throw IoError(name + ": expected an array of rows");
  if (static_cast<Index>(j.size()) != rows) {
    // Empty matrices may be given as [] regardless of the row count.
    if (j.empty() && (rows == 0 || cols == 0)) return Matrix::Zero(rows, cols);
    throw IoError(name + ": expected " + std::to_string(rows) + " rows");
  }
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw IoError(name + ": row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
    }
    for (Index k = 0; k < cols; ++k) {
      const Json& e = row[static_cast<std::size_t>(k)];
      if (!e.is_number()) throw IoError(name + ": non-numeric entry");
      M(i, k) = e.get<double>();
      if (!std::isfinite(M(i, k))) throw IoError(name + ": non-finite entry");
    }
  }
  return M;
}

inline Vector vector_from_json(const Json& j, const std::string& name) {
  if (!j.is_array()) throw IoError(name + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw IoError(name + ": non-numeric entry");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// --- system ------------------------------------------------------------------

inline Json system_to_json(const SystemModel& sys) {
  Json j{{"n", sys.n}, {"m", sys.m}, {"p", sys.p}, {"l", sys.l},
         {"B", to_json(sys.B)}, {"C", to_json(sys.C)}, {"D", to_json(sys.D)},
         {"E", to_json(sys.E)}, {"F", to_json(sys.F)}};
  if (sys.A_true) j["A"] = to_json(*sys.A_true);
  return j;
}

inline SystemModel system_from_json(const Json& j) {
  SystemModel sys;
  try {
    for (const char* key : {"n", "m", "p"}) {
      if (!j.contains(key) || !j[key].is_number_integer()) throw IoError(std::string("system: missing integer '") + key + "'");
    }
    sys.n = j["n"].get<Index>();
    sys.m = j["m"].get<Index>();
    sys.p = j["p"].get<Index>();
    sys.l = j.value("l", Index{0});
    if (sys.n <= 0 || sys.p <= 0 || sys.m < 0 || sys.l < 0) throw IoError("system: invalid dimensions");
    auto block = [&](const char* key, Index r, Index c) {
      if (!j.contains(key)) {
        if (r == 0 || c == 0) return Matrix(Matrix::Zero(r, c));
        if (std::string(key) == "D" || std::string(key) == "E" || std::string(key) == "F") return Matrix(Matrix::Zero(r, c));
        throw IoError(std::string("system: missing matrix '") + key + "'");
      }
      return matrix_from_json(j[key], r, c, std::string("system.") + key);
    };
    if (j.contains("A")) sys.A_true = block("A", sys.n, sys.n);
    sys.B = block("B", sys.n, sys.m);
    sys.C = block("C", sys.p, sys.n);
    sys.D = block("D", sys.p, sys.m);
    sys.E = block("E", sys.n, sys.l);
    sys.F = block("F", sys.p, sys.l);
  } catch (const Json::exception& e) {
    throw IoError(std::string("system: ") + e.what());
  }
  sys.validate();
  return sys;
}

// --- dataset directory -----------------------------------------------------------

inline constexpr const char* kDatasetFiles[4] = {"X_minus.csv", "X_plus.csv", "U_minus.csv", "Y_minus.csv"};

inline void save_dataset(const fs::path& dir, const Dataset& d) {
  fs::create_directories(dir);
  write_csv(dir / kDatasetFiles[0], d.X_minus);
  write_csv(dir / kDatasetFiles[1], d.X_plus);
  write_csv(dir / kDatasetFiles[2], d.U_minus);
  write_csv(dir / kDatasetFiles[3], d.Y_minus);
}

inline Dataset load_dataset(const fs::path& dir, const SystemModel& sys) {
  Dataset d{read_csv(dir / kDatasetFiles[0], sys.n), read_csv(dir / kDatasetFiles[1], sys.n),
            read_csv(dir / kDatasetFiles[2], sys.m), read_csv(dir / kDatasetFiles[3], sys.p)};
  if (sys.m == 0) d.U_minus = Matrix::Zero(0, d.X_minus.cols());
  try {
    d.validate(sys);
  } catch (const DimensionError& e) {
    throw IoError(dir.string() + ": " + e.what());
  }
  return d;
}

// --- attack spec -------------------------------------------------------------------

inline AttackSpec attack_spec_from_json(const Json& j) {
  for (const char* key : {"lambda", "x0", "u0"}) {
    if (!j.contains(key)) throw IoError(std::string("attack spec: missing '") + key + "'");
  }
  if (!j["lambda"].is_number()) throw IoError("attack spec: lambda must be a real number");
  return {j["lambda"].get<double>(), vector_from_json(j["x0"], "attack spec x0"),
          vector_from_json(j["u0"], "attack spec u0")};
}

inline Json attack_spec_to_json(const AttackSpec& s) {
  return {{"lambda", s.lambda}, {"x0", to_json(s.x0)}, {"u0", to_json(s.u0)}};
}

// --- reports -----------------------------------------------------------------------

inline Json informativity_to_json(const InformativityReport& r) {
  Json j{{"informative", r.informative},
         {"cond_image", r.cond_image},
         {"cond_kernel", r.cond_kernel},
         {"dim_j_star", r.j_star.dim()},
         {"dim_v_star_data", r.v_star_data.dim()},
         {"witness", nullptr}};
  if (r.witness) {
    j["witness"] = to_json(*r.witness);
    j["witness_gain"] = r.witness_gain;
  }
  return j;
}

inline Json theorem1_to_json(const Theorem1Report& r) {
  Json j{{"dim_j", r.dim_j},
         {"dim_j_attacked", r.dim_j_attacked},
         {"v_alignment", r.v_alignment},
         {"part_i", r.part_i},
         {"sigma_nonempty", r.sigma_nonempty},
         {"eigen_residual", r.eigen_residual},
         {"sigma_residual", r.sigma_residual},
         {"part_ii", r.part_ii},
         {"part_iii", r.part_iii},
         {"all_passed", r.all_passed()}};
  j["witness"] = r.witness ? to_json(*r.witness) : Json(nullptr);
  return j;
}

inline Json min_norm_to_json(const MinNormSolution& s, const std::optional<Theorem2Check>& bound) {
  Json j{{"lambda_star", s.lambda_star},
         {"v_star", to_json(s.v_star)},
         {"frob_norm", s.frob_norm},
         {"relative_error", s.relative_error},
         {"objective_value", s.objective_value},
         {"rho", to_json(s.rho)},
         {"iterations", s.iterations},
         {"starts", s.starts},
         {"converged", s.converged}};
  if (bound) {
    j["bound"] = {{"lhs", bound->lhs},
                  {"rhs", bound->rhs},
                  {"d_unobs", bound->d_unobs},
                  {"sigma_min_x", bound->sigma_min_x},
                  {"sampled", bound->sampled},
                  {"holds", bound->holds}};
  }
  return j;
}

// --- manifest ----------------------------------------------------------------------

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline Json make_manifest(const std::string& command, const Json& config, std::uint64_t seed,
                          const std::string& started) {
  return {{"command", command},
          {"config", config},
          {"config_hash", fnv1a_hex(config.dump())},
          {"seed", seed},
          {"tool_version", kToolVersion},
          {"timestamps", {{"started", started}, {"finished", utc_timestamp()}}}};
}

}  // namespace infoattack
