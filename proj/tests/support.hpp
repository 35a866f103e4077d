#pragma once

// Independent reference computations and helpers shared by the unit tests
// and the acceptance runner. Nothing here calls into the routines it checks
// unless noted.

#include <infoattack/datagen.hpp>
#include <infoattack/io.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using namespace infoattack;

/// Orthonormal basis of ker M via full-pivot LU (not SVD).
inline Matrix lu_kernel(const Matrix& M, double threshold = 1e-10) {
  if (M.rows() == 0) return Matrix::Identity(M.cols(), M.cols());
  Eigen::FullPivLU<Matrix> lu(M);
  lu.setThreshold(threshold);
  Matrix K = lu.kernel();
  if (lu.rank() == M.cols()) return Matrix(M.cols(), 0);
  Eigen::HouseholderQR<Matrix> qr(K);
  return (qr.householderQ() * Matrix::Identity(K.rows(), K.cols())).eval();
}

/// Orthonormal basis of the column span via full-pivot LU.
inline Matrix lu_image(const Matrix& M, double threshold = 1e-10) {
  Eigen::FullPivLU<Matrix> lu(M);
  lu.setThreshold(threshold);
  const Matrix I = lu.image(M);
  if (lu.rank() == 0) return Matrix(M.rows(), 0);
  Eigen::HouseholderQR<Matrix> qr(I);
  return (qr.householderQ() * Matrix::Identity(I.rows(), I.cols())).eval();
}

/// Unobservable subspace of (A, C): kernel of [C; CA; ...; CA^{n-1}].
inline Matrix observability_kernel(const Matrix& A, const Matrix& C, double threshold = 1e-10) {
  const Index n = A.rows();
  Matrix O(C.rows() * n, n);
  Matrix blk = C;
  for (Index k = 0; k < n; ++k) {
    O.middleRows(k * C.rows(), C.rows()) = blk;
    blk = blk * A;
  }
  return lu_kernel(O, threshold);
}

/// Largest residual of the columns of `inner` after projection onto span(outer),
/// with `outer` orthonormal.
inline double containment_residual(const Matrix& outer, const Matrix& inner) {
  if (inner.cols() == 0) return 0.0;
  if (outer.cols() == 0) return inner.colwise().norm().maxCoeff();
  const Matrix res = inner - outer * (outer.transpose() * inner);
  return res.colwise().norm().maxCoeff();
}

/// min ||X_+^T xi||^2 over the affine set {xi : xi^T X_+ v = 1, xi^T X_+ w = 0 for w in W},
/// by parameterizing the set with an LU particular solution and null space,
/// then solving the reduced least-squares problem with QR.
inline double zeta_affine_optimum(const Matrix& X_plus, const Vector& v, const Matrix& W, Vector* best_xi = nullptr) {
  const Index n = X_plus.rows();
  Matrix cons(1 + W.cols(), n);
  cons.row(0) = (X_plus * v).transpose();
  for (Index j = 0; j < W.cols(); ++j) cons.row(1 + j) = (X_plus * W.col(j)).transpose();
  Vector rhs = Vector::Zero(cons.rows());
  rhs(0) = 1.0;
  Eigen::FullPivLU<Matrix> lu(cons);
  lu.setThreshold(1e-10);
  const Vector particular = lu.solve(rhs);
  if ((cons * particular - rhs).norm() > 1e-8) return std::numeric_limits<double>::infinity();
  const Matrix N = lu_kernel(cons);
  Vector xi = particular;
  if (N.cols() > 0) {
    const Matrix G = X_plus.transpose() * N;
    const Vector c = G.colPivHouseholderQr().solve(-(X_plus.transpose() * particular));
    xi += N * c;
  }
  if (best_xi) *best_xi = xi;
  return (X_plus.transpose() * xi).squaredNorm();
}

// --- min-norm brute-force oracle -------------------------------------------

struct GridOracleProblem {
  Matrix X_minus, X_plus, BU;
  Matrix K;        // orthonormal basis of the feasible directions
  Matrix S_plus;   // orthonormal basis of S_+
};

/// K = J*^perp ∩ ker(C X_-) and S_+ = J*^perp ∩ im X_+^T, built with LU from a
/// given J* basis.
inline GridOracleProblem grid_oracle_problem(const Dataset& d, const SystemModel& sys, const Matrix& j_basis) {
  GridOracleProblem g{d.X_minus, d.X_plus, sys.B * d.U_minus, {}, {}};
  const Index T = d.T();
  Matrix kc(j_basis.cols() + sys.p, T);
  kc << j_basis.transpose(), sys.C * d.X_minus;
  g.K = lu_kernel(kc, 1e-9);
  // S_+ : vectors orthogonal to J* inside the row space of X_+.
  const Matrix rowspace = lu_image(d.X_plus.transpose(), 1e-9);
  const Matrix coords = lu_kernel(j_basis.transpose() * rowspace, 1e-9);
  g.S_plus = rowspace * coords;
  return g;
}

inline double grid_objective(const GridOracleProblem& g, double lambda, const Vector& v) {
  const double den = (g.S_plus.transpose() * v).squaredNorm();
  if (den <= 1e-14 * v.squaredNorm()) return std::numeric_limits<double>::infinity();
  return (lambda * (g.X_minus * v) - g.X_plus * v + g.BU * v).squaredNorm() / den;
}

/// Points on the unit sphere of R^k (k <= 3), identifying v with -v.
inline std::vector<Vector> sphere_grid(Index k, int resolution) {
  std::vector<Vector> pts;
  const double pi = std::acos(-1.0);
  if (k == 1) {
    pts.push_back(Vector::Ones(1));
  } else if (k == 2) {
    for (int i = 0; i < resolution; ++i) {
      const double t = pi * i / resolution;
      Vector v(2);
      v << std::cos(t), std::sin(t);
      pts.push_back(v);
    }
  } else if (k == 3) {
    for (int i = 0; i <= resolution / 2; ++i) {
      const double th = pi / 2 * i / (resolution / 2);  // upper hemisphere
      const int ring = std::max(1, static_cast<int>(std::round(resolution * std::sin(th))));
      for (int j = 0; j < ring; ++j) {
        const double ph = 2 * pi * j / ring;
        Vector v(3);
        v << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
        pts.push_back(v);
      }
    }
  }
  return pts;
}

struct GridOptimum {
  double value = std::numeric_limits<double>::infinity();
  double lambda = 0.0;
  Vector coords;
};

/// Exhaustive lambda-grid x sphere-grid search, then a pattern search that
/// polishes the best grid point in (lambda, sphere coordinates).
inline GridOptimum grid_oracle(const GridOracleProblem& g, double lambda_lo, double lambda_hi, int lambda_points,
                               int sphere_resolution) {
  const Index k = g.K.cols();
  GridOptimum best;
  const auto pts = sphere_grid(k, sphere_resolution);
  for (const Vector& c : pts) {
    const Vector v = g.K * c;
    for (int i = 0; i < lambda_points; ++i) {
      const double lam = lambda_lo + (lambda_hi - lambda_lo) * i / (lambda_points - 1);
      const double f = grid_objective(g, lam, v);
      if (f < best.value) best = {f, lam, c};
    }
  }
  double step_l = (lambda_hi - lambda_lo) / (lambda_points - 1);
  double step_c = 4.0 / sphere_resolution;
  while (step_l > 1e-13 || step_c > 1e-13) {
    bool moved = false;
    for (int dir = -1; dir <= 1; dir += 2) {
      const double lam = best.lambda + dir * step_l;
      const double f = grid_objective(g, lam, g.K * best.coords);
      if (f < best.value) {
        best.value = f;
        best.lambda = lam;
        moved = true;
      }
      for (Index j = 0; j < k; ++j) {
        Vector c = best.coords;
        c(j) += dir * step_c;
        c.normalize();
        const double fc = grid_objective(g, best.lambda, g.K * c);
        if (fc < best.value) {
          best.value = fc;
          best.coords = c;
          moved = true;
        }
      }
    }
    if (!moved) {
      step_l *= 0.5;
      step_c *= 0.5;
    }
  }
  return best;
}

// --- JSON schema subset -------------------------------------------------------

/// Validates type, required, properties, items, enum and minimum. Returns an
/// empty string on success, else the first violation.
inline std::string validate_schema(const Json& value, const Json& schema, const std::string& path = "$") {
  auto type_ok = [&](const std::string& t) {
    if (t == "object") return value.is_object();
    if (t == "array") return value.is_array();
    if (t == "string") return value.is_string();
    if (t == "boolean") return value.is_boolean();
    if (t == "integer") return value.is_number_integer();
    if (t == "number") return value.is_number();
    if (t == "null") return value.is_null();
    return false;
  };
  if (schema.contains("type")) {
    const Json& t = schema["type"];
    bool ok = false;
    if (t.is_string()) ok = type_ok(t.get<std::string>());
    else for (const auto& alt : t) ok = ok || type_ok(alt.get<std::string>());
    if (!ok) return path + ": wrong type";
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == value;
    if (!found) return path + ": value not in enum";
  }
  if (schema.contains("minimum") && value.is_number() && value.get<double>() < schema["minimum"].get<double>()) {
    return path + ": below minimum";
  }
  if (value.is_object()) {
    if (schema.contains("required")) {
      for (const auto& key : schema["required"]) {
        if (!value.contains(key.get<std::string>())) return path + ": missing '" + key.get<std::string>() + "'";
      }
    }
    if (schema.contains("properties")) {
      for (const auto& [key, sub] : schema["properties"].items()) {
        if (!value.contains(key)) continue;
        const std::string err = validate_schema(value[key], sub, path + "." + key);
        if (!err.empty()) return err;
      }
    }
  }
  if (value.is_array() && schema.contains("items")) {
    for (std::size_t i = 0; i < value.size(); ++i) {
      const std::string err = validate_schema(value[i], schema["items"], path + "[" + std::to_string(i) + "]");
      if (!err.empty()) return err;
    }
  }
  return {};
}

inline std::string validate_file(const fs::path& file, const std::string& schema_name) {
  const Json schema = read_json(fs::path(INFOATTACK_SCHEMAS) / schema_name);
  return validate_schema(read_json(file), schema);
}

// --- CLI runner ------------------------------------------------------------------

inline int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + INFOATTACK_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

inline fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("infoattack_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Malicious state used for the line network: nodes 3-5, zero on measured nodes.
inline Vector line_network_target() {
  Vector x0(5);
  x0 << 0.0, 0.0, -0.0194, 0.0776, 0.0004;
  return x0.normalized();
}

/// Random data with a single inconsistent rank-one component: consistent with
/// (A, B) except along e g^T.
inline Dataset rank_one_inconsistent(const SystemModel& sys, Index T, Rng& rng, double size = 0.3) {
  Dataset d = random_columns_dataset(sys, T, rng);
  d.X_plus += size * random_matrix(sys.n, 1, rng) * random_matrix(1, T, rng);
  return d;
}

}  // namespace testing_support
