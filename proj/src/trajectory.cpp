#include "rci/trajectory.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rci {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, long line) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw ParseError("invalid number '" + field + "'", line);
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void LpvPlant::validate() const {
  if (A.empty()) throw DimensionError("LpvPlant: needs at least one A matrix");
  const Index dim = B.rows();
  if (dim < 1 || B.cols() < 1) throw DimensionError("LpvPlant: B must be n×m with n,m ≥ 1");
  for (const auto& a : A)
    if (a.rows() != dim || a.cols() != dim)
      throw DimensionError("LpvPlant: all A matrices must be n×n with n = rows(B)");
}

Matrix LpvPlant::dynamics(const Vector& p) const {
  if (p.size() != s()) throw DimensionError("LpvPlant::dynamics: scheduling size != s");
  Matrix out = Matrix::Zero(n(), n());
  for (Index j = 0; j < s(); ++j) out += p(j) * A[static_cast<size_t>(j)];
  return out;
}

Matrix LpvPlant::stacked() const {
  Matrix out(n(), n() * s() + m());
  for (Index j = 0; j < s(); ++j) out.middleCols(j * n(), n()) = A[static_cast<size_t>(j)];
  out.rightCols(m()) = B;
  return out;
}

void ConstraintSets::validate() const {
  if (Hx.rows() == 0 || Hu.rows() == 0 || Hw.rows() == 0)
    throw DimensionError("ConstraintSets: H matrices must be nonempty");
  if (Hw.cols() != Hx.cols())
    throw DimensionError("ConstraintSets: H_w and H_x disagree on the state dimension");
  if (scheduling_vertices.empty())
    throw DimensionError("ConstraintSets: scheduling vertex list is empty");
  const Index sv = scheduling_vertices.front().size();
  for (const auto& p : scheduling_vertices)
    if (p.size() != sv) throw DimensionError("ConstraintSets: scheduling vertices differ in size");
  if (numeric_rank(Hw) < Hw.cols())
    throw Error("ConstraintSets: H_w must have full column rank (bounded disturbance set)");
}

void Trajectory::validate() const {
  if (states.size() != inputs.size() + 1)
    throw DimensionError("Trajectory: need exactly one more state than inputs");
  if (scheduling.size() != inputs.size())
    throw DimensionError("Trajectory: scheduling and input lengths differ");
  if (!disturbances.empty() && disturbances.size() != inputs.size())
    throw DimensionError("Trajectory: disturbance and input lengths differ");
  if (inputs.empty()) throw Error("empty trajectory");
  for (const auto& x : states)
    if (x.size() != n()) throw DimensionError("Trajectory: inconsistent state dimension");
  for (const auto& u : inputs)
    if (u.size() != m()) throw DimensionError("Trajectory: inconsistent input dimension");
  for (const auto& p : scheduling)
    if (p.size() != s()) throw DimensionError("Trajectory: inconsistent scheduling dimension");
  for (const auto& w : disturbances)
    if (w.size() != n()) throw DimensionError("Trajectory: inconsistent disturbance dimension");
}

Trajectory Trajectory::prefix(Index T) const {
  if (T < 1 || T > this->T()) throw Error("Trajectory::prefix: T out of range");
  Trajectory out;
  out.states.assign(states.begin(), states.begin() + T + 1);
  out.inputs.assign(inputs.begin(), inputs.begin() + T);
  out.scheduling.assign(scheduling.begin(), scheduling.begin() + T);
  if (!disturbances.empty()) out.disturbances.assign(disturbances.begin(), disturbances.begin() + T);
  return out;
}

Trajectory simulate(const LpvPlant& plant, const Vector& x0, const std::vector<Vector>& inputs,
                    const std::vector<Vector>& scheduling, const std::vector<Vector>& disturbances,
                    const std::vector<Vector>& scheduling_vertices, double tol) {
  plant.validate();
  if (x0.size() != plant.n()) throw DimensionError("simulate: x0 dimension mismatch");
  if (inputs.size() != scheduling.size() || inputs.size() != disturbances.size())
    throw DimensionError("simulate: inputs, scheduling and disturbances must share length");
  if (inputs.empty()) throw Error("empty trajectory");

  for (size_t k = 0; k < scheduling.size(); ++k) {
    if (scheduling[k].size() != plant.s())
      throw DimensionError("simulate: scheduling dimension mismatch at step " + std::to_string(k));
    if (!in_convex_hull(scheduling[k], scheduling_vertices, tol))
      throw Error("simulate: scheduling sample outside polytope at step " + std::to_string(k));
  }

  Trajectory traj;
  traj.states.reserve(inputs.size() + 1);
  traj.states.push_back(x0);
  traj.inputs = inputs;
  traj.scheduling = scheduling;
  traj.disturbances = disturbances;
  for (size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].size() != plant.m())
      throw DimensionError("simulate: input dimension mismatch at step " + std::to_string(k));
    if (disturbances[k].size() != plant.n())
      throw DimensionError("simulate: disturbance dimension mismatch at step " + std::to_string(k));
    const Vector& x = traj.states.back();
    traj.states.push_back(plant.dynamics(scheduling[k]) * x + plant.B * inputs[k] +
                          disturbances[k]);
  }
  return traj;
}

DisturbanceSampler::DisturbanceSampler(const Matrix& Hw) {
  const Index n = Hw.cols();
  set_ = PolytopeH::general((Matrix(2 * Hw.rows(), n) << Hw, -Hw).finished(),
                            Vector::Ones(2 * Hw.rows()));
  direct_ = Hw.rows() == Hw.cols();
  if (direct_) {
    const double a = Hw(0, 0);
    direct_ = a > 0 && (Hw - a * Matrix::Identity(n, n)).lpNorm<Eigen::Infinity>() == 0.0;
    if (direct_) {
      lo_ = Vector::Constant(n, -1.0 / a);
      hi_ = Vector::Constant(n, 1.0 / a);
    }
  }
  if (!direct_) {
    auto wverts = enumerate_vertices(set_);
    std::tie(lo_, hi_) = bounding_box(wverts.vertices);
  }
}

Vector DisturbanceSampler::sample(Rng& rng) const {
  Vector w(lo_.size());
  while (true) {
    for (Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(lo_(i), hi_(i));
    if (direct_ || set_.contains(w, 0.0)) return w;
  }
}

ExcitationSignals generate_excitation(Index T, const Matrix& input_box,
                                      const std::vector<Vector>& scheduling_vertices,
                                      const Matrix& Hw, std::uint64_t seed) {
  if (T < 1) throw Error("generate_excitation: T must be >= 1");
  if (input_box.cols() != 2) throw DimensionError("generate_excitation: input_box must be m×2");
  if ((input_box.col(0).array() > input_box.col(1).array()).any())
    throw Error("generate_excitation: input_box lower bound exceeds upper bound");
  if (scheduling_vertices.empty()) throw Error("generate_excitation: empty scheduling polytope");

  const Index m = input_box.rows();
  Rng rng(seed);
  DisturbanceSampler wsampler(Hw);

  ExcitationSignals sig;
  sig.inputs.reserve(static_cast<size_t>(T));
  sig.scheduling.reserve(static_cast<size_t>(T));
  sig.disturbances.reserve(static_cast<size_t>(T));
  for (Index k = 0; k < T; ++k) {
    Vector u(m);
    for (Index i = 0; i < m; ++i) u(i) = rng.uniform(input_box(i, 0), input_box(i, 1));
    sig.inputs.push_back(u);

    Vector weights = rng.dirichlet(static_cast<Index>(scheduling_vertices.size()));
    Vector p = Vector::Zero(scheduling_vertices.front().size());
    for (size_t j = 0; j < scheduling_vertices.size(); ++j)
      p += weights(static_cast<Index>(j)) * scheduling_vertices[j];
    sig.scheduling.push_back(p);

    sig.disturbances.push_back(wsampler.sample(rng));
  }
  return sig;
}

void save_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  traj.validate();
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");

  const Index n = traj.n(), m = traj.m(), s = traj.s();
  const bool has_w = traj.has_disturbances();
  std::vector<std::string> header;
  for (Index i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
  for (Index i = 1; i <= m; ++i) header.push_back("u" + std::to_string(i));
  for (Index i = 1; i <= s; ++i) header.push_back("p" + std::to_string(i));
  if (has_w)
    for (Index i = 1; i <= n; ++i) header.push_back("w" + std::to_string(i));
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";

  const Index T = traj.T();
  for (Index k = 0; k <= T; ++k) {
    std::vector<std::string> row;
    for (Index i = 0; i < n; ++i) row.push_back(fmt(traj.states[static_cast<size_t>(k)](i)));
    const bool terminal = (k == T);
    for (Index i = 0; i < m; ++i)
      row.push_back(terminal ? "" : fmt(traj.inputs[static_cast<size_t>(k)](i)));
    for (Index i = 0; i < s; ++i)
      row.push_back(terminal ? "" : fmt(traj.scheduling[static_cast<size_t>(k)](i)));
    if (has_w)
      for (Index i = 0; i < n; ++i)
        row.push_back(terminal ? "" : fmt(traj.disturbances[static_cast<size_t>(k)](i)));
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

Trajectory load_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());

  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("missing header row", 1);
  ++lineno;
  const auto header = split_csv(line);

  Index n = 0, m = 0, s = 0, nw = 0;
  // Header must be x1..xn,u1..um,p1..ps[,w1..wn] in order.
  size_t pos = 0;
  auto count_prefix = [&](const std::string& prefix) {
    Index count = 0;
    while (pos < header.size() && header[pos] == prefix + std::to_string(count + 1)) {
      ++count;
      ++pos;
    }
    return count;
  };
  n = count_prefix("x");
  m = count_prefix("u");
  s = count_prefix("p");
  nw = count_prefix("w");
  if (pos != header.size() || n == 0 || m == 0 || s == 0 || (nw != 0 && nw != n))
    throw ParseError("malformed header; expected x1..xn,u1..um,p1..ps[,w1..wn]", 1);

  const size_t ncols = header.size();
  Trajectory traj;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && in.eof()) break;
    auto fields = split_csv(line);
    if (fields.size() != ncols)
      throw ParseError("expected " + std::to_string(ncols) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno);
    rows.push_back(std::move(fields));
  }
  if (rows.size() < 2) throw ParseError("empty trajectory", lineno);

  const long first_data_line = 2;
  for (size_t r = 0; r < rows.size(); ++r) {
    const long ln = first_data_line + static_cast<long>(r);
    const auto& f = rows[r];
    const bool terminal = (r + 1 == rows.size());
    Vector x(n);
    for (Index i = 0; i < n; ++i) x(i) = parse_double(f[static_cast<size_t>(i)], ln);
    traj.states.push_back(x);
    if (terminal) {
      for (size_t i = static_cast<size_t>(n); i < ncols; ++i)
        if (!f[i].empty())
          throw ParseError("terminal row must leave input/scheduling fields empty", ln);
      break;
    }
    Vector u(m), p(s);
    for (Index i = 0; i < m; ++i) u(i) = parse_double(f[static_cast<size_t>(n + i)], ln);
    for (Index i = 0; i < s; ++i) p(i) = parse_double(f[static_cast<size_t>(n + m + i)], ln);
    traj.inputs.push_back(u);
    traj.scheduling.push_back(p);
    if (nw > 0) {
      Vector w(nw);
      for (Index i = 0; i < nw; ++i) w(i) = parse_double(f[static_cast<size_t>(n + m + s + i)], ln);
      traj.disturbances.push_back(w);
    }
  }
  traj.validate();
  return traj;
}

namespace {

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + ": expected a nonempty array of rows");
  const size_t cols = j.front().size();
  Matrix out(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ParseError(what + ": ragged rows in matrix");
    for (size_t c = 0; c < cols; ++c) out(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
  }
  return out;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

SystemConfig load_system_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }

  SystemConfig cfg;
  const auto& jp = j.at("plant");
  const Index n = jp.at("n").get<Index>();
  const Index m = jp.at("m").get<Index>();
  const Index s = jp.at("s").get<Index>();
  for (const auto& ja : jp.at("A")) cfg.plant.A.push_back(matrix_from_json(ja, "plant.A"));
  cfg.plant.B = matrix_from_json(jp.at("B"), "plant.B");
  cfg.plant.validate();
  if (cfg.plant.n() != n || cfg.plant.m() != m || cfg.plant.s() != s)
    throw ParseError("plant: declared n/m/s do not match matrix shapes");

  const auto& jc = j.at("constraints");
  cfg.constraints.Hx = matrix_from_json(jc.at("H_x"), "constraints.H_x");
  cfg.constraints.Hu = matrix_from_json(jc.at("H_u"), "constraints.H_u");
  cfg.constraints.Hw = matrix_from_json(jc.at("H_w"), "constraints.H_w");
  for (const auto& jv : jc.at("scheduling_vertices")) {
    Vector v(static_cast<Index>(jv.size()));
    for (size_t i = 0; i < jv.size(); ++i) v(static_cast<Index>(i)) = jv[i].get<double>();
    cfg.constraints.scheduling_vertices.push_back(v);
  }
  cfg.constraints.validate();
  if (cfg.constraints.nx() != jc.at("n_x").get<Index>() ||
      cfg.constraints.nu() != jc.at("n_u").get<Index>() ||
      cfg.constraints.nw() != jc.at("n_w").get<Index>())
    throw ParseError("constraints: declared n_x/n_u/n_w do not match matrix shapes");
  if (cfg.constraints.n() != n) throw ParseError("constraints: state dimension != plant n");
  if (cfg.constraints.s() != s) throw ParseError("constraints: scheduling dimension != plant s");
  if (cfg.constraints.Hu.cols() != m) throw ParseError("constraints: H_u columns != plant m");
  return cfg;
}

void save_system_json(const SystemConfig& cfg, const std::filesystem::path& path) {
  json j;
  j["plant"]["n"] = cfg.plant.n();
  j["plant"]["m"] = cfg.plant.m();
  j["plant"]["s"] = cfg.plant.s();
  j["plant"]["A"] = json::array();
  for (const auto& a : cfg.plant.A) j["plant"]["A"].push_back(matrix_to_json(a));
  j["plant"]["B"] = matrix_to_json(cfg.plant.B);
  j["constraints"]["n_x"] = cfg.constraints.nx();
  j["constraints"]["n_u"] = cfg.constraints.nu();
  j["constraints"]["n_w"] = cfg.constraints.nw();
  j["constraints"]["H_x"] = matrix_to_json(cfg.constraints.Hx);
  j["constraints"]["H_u"] = matrix_to_json(cfg.constraints.Hu);
  j["constraints"]["H_w"] = matrix_to_json(cfg.constraints.Hw);
  j["constraints"]["scheduling_vertices"] = json::array();
  for (const auto& v : cfg.constraints.scheduling_vertices) {
    json jv = json::array();
    for (Index i = 0; i < v.size(); ++i) jv.push_back(v(i));
    j["constraints"]["scheduling_vertices"].push_back(jv);
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
}

std::string plant_hash(const LpvPlant& plant) {
  std::ostringstream text;
  text << plant.n() << "," << plant.m() << "," << plant.s() << ";";
  for (const auto& a : plant.A)
    for (Index r = 0; r < a.rows(); ++r)
      for (Index c = 0; c < a.cols(); ++c) text << fmt(a(r, c)) << ",";
  for (Index r = 0; r < plant.B.rows(); ++r)
    for (Index c = 0; c < plant.B.cols(); ++c) text << fmt(plant.B(r, c)) << ",";

  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (char c : text.str()) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash);
  return buf;
}

}  // namespace rci
