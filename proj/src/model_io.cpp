#include "perov/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace perov::io {

namespace {

[[noreturn]] void fail(const std::string& what) { throw InvalidInput(what); }

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where + " must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where + " is missing \"" + key + "\"");
  return *it;
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where + " must be a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where + " must be an integer");
  return j.get<int>();
}

std::vector<double> as_vector(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(as_number(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

const json& as_array(const json& j, std::size_t n, const std::string& where) {
  if (!j.is_array() || j.size() != n) fail(where + " must be an array of length " + std::to_string(n));
  return j;
}

// [i][j][k] table, flattened as (i * I + j) * K + k.
std::vector<double> as_table(const json& j, int states, int shocks, const std::string& where) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(states) * states * shocks);
  as_array(j, states, where);
  for (int i = 0; i < states; ++i) {
    as_array(j[i], states, where + "[" + std::to_string(i) + "]");
    for (int jj = 0; jj < states; ++jj) {
      const std::string w = where + "[" + std::to_string(i) + "][" + std::to_string(jj) + "]";
      const auto row = as_vector(as_array(j[i][jj], shocks, w), w);
      out.insert(out.end(), row.begin(), row.end());
    }
  }
  return out;
}

json table_json(const std::vector<double>& t, int states, int shocks) {
  json out = json::array();
  for (int i = 0; i < states; ++i) {
    json row = json::array();
    for (int j = 0; j < states; ++j) {
      json cell = json::array();
      for (int k = 0; k < shocks; ++k) cell.push_back(t[(static_cast<std::size_t>(i) * states + j) * shocks + k]);
      row.push_back(std::move(cell));
    }
    out.push_back(std::move(row));
  }
  return out;
}

json std_vector_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

DPModel parse_dp(const json& p) {
  const Eigen::MatrixXd pm = parse_matrix(field(p, "P", "payload"), "payload.P");
  const Eigen::MatrixXd beta = parse_matrix(field(p, "beta", "payload"), "payload.beta");
  const auto x_grid = as_vector(field(p, "x_grid", "payload"), "payload.x_grid");
  const auto y_grid = as_vector(field(p, "y_grid", "payload"), "payload.y_grid");
  const int ni = static_cast<int>(pm.rows());
  const int nx = static_cast<int>(x_grid.size());
  const int ny = static_cast<int>(y_grid.size());

  std::vector<std::vector<std::vector<int>>> feasible(ni, std::vector<std::vector<int>>(nx));
  const json& fj = as_array(field(p, "feasible", "payload"), ni, "payload.feasible");
  for (int i = 0; i < ni; ++i) {
    const std::string wi = "payload.feasible[" + std::to_string(i) + "]";
    as_array(fj[i], nx, wi);
    for (int x = 0; x < nx; ++x) {
      const std::string w = wi + "[" + std::to_string(x) + "]";
      if (!fj[i][x].is_array()) fail(w + " must be an array");
      for (const auto& y : fj[i][x]) feasible[i][x].push_back(as_int(y, w));
    }
  }

  std::vector<Eigen::MatrixXd> utility(ni, Eigen::MatrixXd(nx, ny));
  const json& uj = as_array(field(p, "utility", "payload"), ni, "payload.utility");
  for (int i = 0; i < ni; ++i) {
    as_array(uj[i], nx, "payload.utility[" + std::to_string(i) + "]");
    for (int x = 0; x < nx; ++x) {
      const std::string w = "payload.utility[" + std::to_string(i) + "][" + std::to_string(x) + "]";
      as_array(uj[i][x], ny, w);
      for (int y = 0; y < ny; ++y) {
        const json& v = uj[i][x][y];
        utility[i](x, y) = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : as_number(v, w);
      }
    }
  }

  std::vector<int> motion;
  motion.reserve(static_cast<std::size_t>(ni) * ni * nx * ny);
  const json& mj = as_array(field(p, "motion", "payload"), ni, "payload.motion");
  for (int i = 0; i < ni; ++i) {
    as_array(mj[i], ni, "payload.motion[i]");
    for (int j = 0; j < ni; ++j) {
      as_array(mj[i][j], nx, "payload.motion[i][j]");
      for (int x = 0; x < nx; ++x) {
        as_array(mj[i][j][x], ny, "payload.motion[i][j][x]");
        for (int y = 0; y < ny; ++y) motion.push_back(as_int(mj[i][j][x][y], "payload.motion entry"));
      }
    }
  }
  std::string projection;
  if (const auto it = p.find("projection"); it != p.end()) {
    if (!it->is_string()) fail("payload.projection must be a string");
    projection = it->get<std::string>();
  }
  return DPModel(StochasticMatrix(pm), NonnegativeMatrix(beta), x_grid, y_grid, std::move(feasible),
                 std::move(utility), std::move(motion), std::move(projection));
}

json serialize_dp(const DPModel& m) {
  const int ni = m.states();
  const int nx = m.grid_size();
  const int ny = m.control_size();
  json p;
  p["P"] = matrix_json(m.transition().matrix());
  p["beta"] = matrix_json(m.discount_factors().matrix());
  p["x_grid"] = std_vector_json(m.x_grid());
  p["y_grid"] = std_vector_json(m.y_grid());
  json feas = json::array();
  json util = json::array();
  for (int i = 0; i < ni; ++i) {
    json frow = json::array();
    json urow = json::array();
    for (int x = 0; x < nx; ++x) {
      frow.push_back(m.feasible(i, x));
      json cell = json::array();
      const auto& ys = m.feasible(i, x);
      for (int y = 0; y < ny; ++y) {
        const bool ok = std::binary_search(ys.begin(), ys.end(), y);
        cell.push_back(ok ? json(m.utility(i, x, y)) : json(nullptr));
      }
      urow.push_back(std::move(cell));
    }
    feas.push_back(std::move(frow));
    util.push_back(std::move(urow));
  }
  p["feasible"] = std::move(feas);
  p["utility"] = std::move(util);
  json mot = json::array();
  for (int i = 0; i < ni; ++i) {
    json a = json::array();
    for (int j = 0; j < ni; ++j) {
      json b = json::array();
      for (int x = 0; x < nx; ++x) {
        json c = json::array();
        for (int y = 0; y < ny; ++y) c.push_back(m.next_state(i, j, x, y));
        b.push_back(std::move(c));
      }
      a.push_back(std::move(b));
    }
    mot.push_back(std::move(a));
  }
  p["motion"] = std::move(mot);
  if (!m.projection().empty()) p["projection"] = m.projection();
  return p;
}

AssetModel parse_asset(const json& p) {
  return AssetModel(StochasticMatrix(parse_matrix(field(p, "P", "payload"), "payload.P")),
                    parse_matrix(field(p, "m", "payload"), "payload.m"),
                    parse_matrix(field(p, "G", "payload"), "payload.G"));
}

SavingsFile parse_savings(const json& p) {
  const Eigen::MatrixXd pm = parse_matrix(field(p, "P", "payload"), "payload.P");
  const int ni = static_cast<int>(pm.rows());
  const json& sj = field(p, "shocks", "payload");
  ShockDistribution shocks{as_vector(field(sj, "support", "payload.shocks"), "payload.shocks.support"),
                           as_vector(field(sj, "weights", "payload.shocks"), "payload.shocks.weights")};
  shocks.validate();
  const int nk = static_cast<int>(shocks.size());

  const json& uj = field(p, "utility", "payload");
  const json& kind = field(uj, "kind", "payload.utility");
  if (!kind.is_string() || kind.get<std::string>() != "crra") fail("payload.utility.kind must be \"crra\"");
  const double gamma = as_number(field(uj, "gamma", "payload.utility"), "payload.utility.gamma");

  const json& gj = field(p, "grid", "payload");
  const double gmin = as_number(field(gj, "min", "payload.grid"), "payload.grid.min");
  const double gmax = as_number(field(gj, "max", "payload.grid"), "payload.grid.max");
  const int points = as_int(field(gj, "points", "payload.grid"), "payload.grid.points");
  const json& sp = field(gj, "spacing", "payload.grid");
  if (!sp.is_string()) fail("payload.grid.spacing must be a string");
  const std::string spacing = sp.get<std::string>();
  std::vector<double> grid;
  if (spacing == "geometric") {
    grid = geometric_grid(gmin, gmax, points);
  } else if (spacing == "linear") {
    grid = linear_grid(gmin, gmax, points);
  } else {
    fail("payload.grid.spacing must be \"geometric\" or \"linear\"");
  }

  SavingsModel model(StochasticMatrix(pm), shocks, as_table(field(p, "beta_table", "payload"), ni, nk, "payload.beta_table"),
                     as_table(field(p, "R_table", "payload"), ni, nk, "payload.R_table"),
                     as_table(field(p, "Y_table", "payload"), ni, nk, "payload.Y_table"), UtilitySpec::crra(gamma),
                     std::move(grid));
  return SavingsFile{std::move(model), gamma, gmin, gmax, points, spacing};
}

json serialize_savings(const SavingsFile& s) {
  const auto& m = s.model;
  json p;
  p["P"] = matrix_json(m.transition().matrix());
  p["shocks"] = {{"support", std_vector_json(m.shocks().support)}, {"weights", std_vector_json(m.shocks().weights)}};
  p["beta_table"] = table_json(m.beta_table(), m.states(), m.shock_count());
  p["R_table"] = table_json(m.return_table(), m.states(), m.shock_count());
  p["Y_table"] = table_json(m.income_table(), m.states(), m.shock_count());
  p["utility"] = {{"kind", "crra"}, {"gamma", s.gamma}};
  p["grid"] = {{"min", s.grid_min}, {"max", s.grid_max}, {"points", s.grid_points}, {"spacing", s.spacing}};
  return p;
}

AffineModel parse_affine(const json& p) {
  Eigen::MatrixXd a = parse_matrix(field(p, "A", "payload"), "payload.A");
  const auto bv = as_vector(field(p, "b", "payload"), "payload.b");
  if (static_cast<Eigen::Index>(bv.size()) != a.rows()) fail("payload.b must match the dimension of A");
  Eigen::MatrixXd coef = a.cwiseAbs();
  if (const auto it = p.find("B"); it != p.end()) {
    coef = parse_matrix(*it, "payload.B");
    if (coef.rows() != a.rows()) fail("payload.B must match the dimension of A");
  }
  return AffineModel{std::move(a), Eigen::Map<const Eigen::VectorXd>(bv.data(), static_cast<Eigen::Index>(bv.size())),
                     NonnegativeMatrix(std::move(coef))};
}

}  // namespace

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::dp: return "dp";
    case ModelKind::asset: return "asset";
    case ModelKind::savings: return "savings";
    case ModelKind::affine: return "affine";
  }
  return "unknown";
}

Eigen::MatrixXd parse_matrix(const json& j, const char* what) {
  const std::string w = what;
  if (!j.is_array() || j.empty()) fail(w + " must be a nonempty array of rows");
  const std::size_t n = j.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const std::string wr = w + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != n) fail(wr + " must be a row of length " + std::to_string(n));
    for (std::size_t c = 0; c < n; ++c) m(r, c) = as_number(j[r][c], wr);
  }
  return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(path + ": " + e.what());
  }
}

ModelFile parse_model(const json& doc) {
  try {
    const json& version = field(doc, "schema_version", "model file");
    if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
      fail("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    }
    const json& kind = field(doc, "kind", "model file");
    if (!kind.is_string()) fail("kind must be a string");
    ModelFile mf{ModelKind::dp, {}, AffineModel{Eigen::MatrixXd(), Eigen::VectorXd(), NonnegativeMatrix::zero(1)}};
    if (const auto it = doc.find("metadata"); it != doc.end()) {
      if (!it->is_object()) fail("metadata must be an object");
      mf.metadata.name = it->value("name", "");
      mf.metadata.description = it->value("description", "");
    }
    const json& payload = field(doc, "payload", "model file");
    const std::string k = kind.get<std::string>();
    if (k == "dp") {
      mf.kind = ModelKind::dp;
      mf.payload = parse_dp(payload);
    } else if (k == "asset") {
      mf.kind = ModelKind::asset;
      mf.payload = parse_asset(payload);
    } else if (k == "savings") {
      mf.kind = ModelKind::savings;
      mf.payload = parse_savings(payload);
    } else if (k == "affine") {
      mf.kind = ModelKind::affine;
      mf.payload = parse_affine(payload);
    } else {
      fail("unknown model kind \"" + k + "\"");
    }
    return mf;
  } catch (const json::exception& e) {
    fail(std::string("model file: ") + e.what());
  }
}

ModelFile load_model(const std::string& path) { return parse_model(load_json(path)); }

json serialize_model(const ModelFile& mf) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = to_string(mf.kind);
  doc["metadata"] = {{"name", mf.metadata.name}, {"description", mf.metadata.description}};
  std::visit(
      [&doc](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DPModel>) {
          doc["payload"] = serialize_dp(p);
        } else if constexpr (std::is_same_v<T, AssetModel>) {
          doc["payload"] = {{"P", matrix_json(p.transition().matrix())},
                            {"m", matrix_json(p.discount())},
                            {"G", matrix_json(p.growth())}};
        } else if constexpr (std::is_same_v<T, SavingsFile>) {
          doc["payload"] = serialize_savings(p);
        } else {
          doc["payload"] = {{"A", matrix_json(p.a)}, {"b", vector_json(p.b)}, {"B", matrix_json(p.coefficient.matrix())}};
        }
      },
      mf.payload);
  return doc;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json certificate_json(const SpectralCertificate& c) {
  return {{"rho", c.rho}, {"method", to_string(c.method)}, {"iterations", c.iterations}, {"residual", c.residual}};
}

json convergence_json(const ConvergenceReport& r) {
  return {{"iterations", r.iterations},
          {"terminated", to_string(r.terminated)},
          {"rho", r.rho},
          {"inverse_norm", r.inverse_norm},
          {"error_bound", r.error_bound},
          {"fitted_rate", r.fitted_rate},
          {"fitted_constant", r.fitted_constant},
          {"rate_certified", r.rate_certified}};
}

json estimate_json(const Estimate& e) {
  json tb = std::isfinite(e.truncation_bound) ? json(e.truncation_bound) : json("inf");
  return {{"mean", e.mean},           {"std_error", e.std_error},         {"n", e.n},
          {"horizon", e.horizon},     {"truncation_bound", std::move(tb)}, {"excluded_paths", e.excluded_paths}};
}

}  // namespace perov::io
