// Scenario file format (JSON):
//   {"name": str (optional), "dim_c": int, "dim_r": int, "hbar": number (optional, 1),
//    "hamiltonians": [{"t_start": t, "t_end": t, "matrix": [[[re, im], ...], ...]}],
//    "initial_state": [[re, im], ...], "experience_basis": [[[re, im], ...], ...],
//    "initial_branch": int | "born", "t_max": number, "labels": [str, ...] (optional)}
// Matrices are row-major over the full dim_c * dim_r space.

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "branchflow/errors.hpp"
#include "branchflow/model.hpp"

namespace branchflow {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ParseError("scenario field '" + path + "': " + what);
}

const json& field(const json& obj, const char* key, const std::string& path = "") {
  const std::string here = path.empty() ? key : path + "." + key;
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(here, "missing");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::size_t positive_int(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 1) fail(path, "expected a positive integer");
  return j.get<std::size_t>();
}

Complex complex_value(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) fail(path, "expected a [re, im] pair");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

CVector complex_vector(const json& j, std::size_t dim, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of [re, im] pairs");
  if (j.size() != dim) fail(path, "expected " + std::to_string(dim) + " entries, got " + std::to_string(j.size()));
  CVector v(static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k)
    v(static_cast<Eigen::Index>(k)) = complex_value(j[k], path + "[" + std::to_string(k) + "]");
  return v;
}

CMatrix complex_matrix(const json& j, std::size_t dim, const std::string& path) {
  if (!j.is_array() || j.size() != dim) fail(path, "expected " + std::to_string(dim) + " rows");
  CMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < dim; ++r)
    m.row(static_cast<Eigen::Index>(r)) = complex_vector(j[r], dim, path + "[" + std::to_string(r) + "]").transpose();
  return m;
}

json to_json(Complex z) { return json::array({z.real(), z.imag()}); }

json to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(to_json(v(k)));
  return out;
}

json to_json(const CMatrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(CVector(m.row(r).transpose())));
  return out;
}

// Wraps construction-time validation errors with the field they came from.
template <typename F>
auto with_context(const std::string& path, F&& make) {
  try {
    return make();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(path + ": " + e.what());
  }
}

}  // namespace

Model load_model(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("<root>", "expected an object");

  const std::size_t dim_c = positive_int(field(root, "dim_c"), "dim_c");
  const std::size_t dim_r = positive_int(field(root, "dim_r"), "dim_r");
  const CompositeSpace space(dim_c, dim_r);
  const std::size_t dim = space.dim();

  double hbar = 1.0;
  if (auto it = root.find("hbar"); it != root.end()) hbar = number(*it, "hbar");

  const json& hams = field(root, "hamiltonians");
  if (!hams.is_array() || hams.empty()) fail("hamiltonians", "expected a non-empty array");
  std::vector<HamiltonianSegment> schedule;
  for (std::size_t s = 0; s < hams.size(); ++s) {
    const std::string path = "hamiltonians[" + std::to_string(s) + "]";
    const double t0 = number(field(hams[s], "t_start", path), path + ".t_start");
    const double t1 = number(field(hams[s], "t_end", path), path + ".t_end");
    CMatrix h = complex_matrix(field(hams[s], "matrix", path), dim, path + ".matrix");
    schedule.push_back({t0, t1, with_context(path, [&] { return HermitianOperator(std::move(h)); })});
  }

  StateVector initial(complex_vector(field(root, "initial_state"), dim, "initial_state"));

  const json& basis_json = field(root, "experience_basis");
  if (!basis_json.is_array()) fail("experience_basis", "expected an array of vectors");
  std::vector<StateVector> basis_vectors;
  for (std::size_t n = 0; n < basis_json.size(); ++n)
    basis_vectors.emplace_back(
        complex_vector(basis_json[n], dim_c, "experience_basis[" + std::to_string(n) + "]"));
  ExperienceBasis basis =
      with_context("experience_basis", [&] { return ExperienceBasis(space, std::move(basis_vectors)); });

  std::optional<std::size_t> initial_branch;
  const json& ib = field(root, "initial_branch");
  if (ib.is_string()) {
    if (ib.get<std::string>() != "born") fail("initial_branch", "expected an index or \"born\"");
  } else if (ib.is_number_integer() && ib.get<long long>() >= 0) {
    initial_branch = ib.get<std::size_t>();
  } else {
    fail("initial_branch", "expected an index or \"born\"");
  }

  std::vector<std::string> labels;
  if (auto it = root.find("labels"); it != root.end()) {
    if (!it->is_array()) fail("labels", "expected an array of strings");
    for (std::size_t k = 0; k < it->size(); ++k) {
      if (!(*it)[k].is_string()) fail("labels[" + std::to_string(k) + "]", "expected a string");
      labels.push_back((*it)[k].get<std::string>());
    }
  }

  std::string name = "scenario";
  if (auto it = root.find("name"); it != root.end() && it->is_string()) name = it->get<std::string>();

  Model model{
      .name = std::move(name),
      .space = space,
      .schedule = std::move(schedule),
      .initial_state = std::move(initial),
      .basis = std::move(basis),
      .initial_branch = initial_branch,
      .t_max = number(field(root, "t_max"), "t_max"),
      .hbar = hbar,
      .labels = std::move(labels),
  };
  validate(model);
  return model;
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

std::string serialize_model(const Model& model) {
  json root;
  root["name"] = model.name;
  root["dim_c"] = model.space.dim_c();
  root["dim_r"] = model.space.dim_r();
  root["hbar"] = model.hbar;
  json hams = json::array();
  for (const auto& seg : model.schedule)
    hams.push_back({{"t_start", seg.t_start}, {"t_end", seg.t_end}, {"matrix", to_json(seg.hamiltonian.matrix())}});
  root["hamiltonians"] = std::move(hams);
  root["initial_state"] = to_json(model.initial_state.amplitudes());
  json basis = json::array();
  for (const auto& phi : model.basis.vectors()) basis.push_back(to_json(phi.amplitudes()));
  root["experience_basis"] = std::move(basis);
  if (model.initial_branch)
    root["initial_branch"] = *model.initial_branch;
  else
    root["initial_branch"] = "born";
  root["t_max"] = model.t_max;
  root["labels"] = model.labels;
  return root.dump(2) + "\n";
}

}  // namespace branchflow
