#pragma once

// Model files (JSON, "schema_version": 1) and result serialization.
// The schema is documented in schema/model_file.schema.json.

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <variant>

#include "perov/asset_pricing.hpp"
#include "perov/markov_dp.hpp"
#include "perov/mc_oracle.hpp"
#include "perov/perov_core.hpp"
#include "perov/savings.hpp"

namespace perov::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class ModelKind { dp, asset, savings, affine };
const char* to_string(ModelKind k);

struct Metadata {
  std::string name;
  std::string description;
};

/// Savings model together with the generator parameters it was built from,
/// so the file can be written back unchanged.
struct SavingsFile {
  SavingsModel model;
  double gamma = 1.0;
  double grid_min = 0.0;
  double grid_max = 0.0;
  int grid_points = 0;
  std::string spacing;  // "geometric" | "linear"
};

/// T(v) = A v + b on R^I with a declared coefficient matrix (default |A|).
struct AffineModel {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  NonnegativeMatrix coefficient;
};

struct ModelFile {
  ModelKind kind = ModelKind::dp;
  Metadata metadata;
  std::variant<DPModel, AssetModel, SavingsFile, AffineModel> payload;
};

/// Parses and validates a model document; InvalidInput on any schema error.
ModelFile parse_model(const json& doc);
ModelFile load_model(const std::string& path);
json serialize_model(const ModelFile& model);

/// Square matrix from a row-major array of arrays.
Eigen::MatrixXd parse_matrix(const json& j, const char* what = "matrix");
json matrix_json(const Eigen::MatrixXd& m);
json vector_json(const Eigen::VectorXd& v);
json load_json(const std::string& path);

/// Two-space indented dump with a trailing newline; doubles in shortest
/// round-trip form.
std::string dump(const json& j);

json certificate_json(const SpectralCertificate& c);
json convergence_json(const ConvergenceReport& r);
json estimate_json(const Estimate& e);

/// %.17g
std::string number(double v);

}  // namespace perov::io
