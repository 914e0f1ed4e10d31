#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rci/solver.hpp"

namespace rci {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_sdpa(const LmiProgram& program, std::ostream& out, const std::string& name) {
  // Dual standard form: min c'x s.t. X_b = Σ_k x_k F_k,b − F_0,b ⪰ 0 per block.
  const Index m = program.num_scalars();
  const auto& psd = program.psd_blocks();
  const auto& linear = program.linear_constraints();
  const Index nblocks = static_cast<Index>(psd.size()) + (linear.empty() ? 0 : 1);

  out << "*RCI-LMI export \"" << name << "\"\n";
  out << "*objective: minimize c'x with c = -(linear objective";
  if (program.logdet_variable())
    out << " + trace(" << program.variable(*program.logdet_variable()).name
        << ") as the log-det surrogate";
  out << ")\n";
  out << m << "\n";
  out << nblocks << "\n";
  for (size_t b = 0; b < psd.size(); ++b) out << (b ? " " : "") << psd[b].side;
  if (!linear.empty()) out << (psd.empty() ? "" : " ") << "-" << linear.size();
  out << "\n";

  Vector c = Vector::Zero(m);
  for (const auto& [idx, coeff] : program.linear_objective().terms) c(idx) -= coeff;
  if (program.logdet_variable()) {
    const Index v = *program.logdet_variable();
    for (Index i = 0; i < program.variable(v).rows; ++i) c(program.scalar_index(v, i, i)) -= 1.0;
  }
  for (Index k = 0; k < m; ++k) out << (k ? " " : "") << fmt(c(k));
  out << "\n";

  for (size_t b = 0; b < psd.size(); ++b) {
    const Index blkno = static_cast<Index>(b) + 1;
    for (const auto& e : psd[b].upper) {
      if (e.expr.constant != 0.0)
        out << "0 " << blkno << " " << e.row + 1 << " " << e.col + 1 << " "
            << fmt(-e.expr.constant) << "\n";
      for (const auto& [idx, coeff] : e.expr.terms)
        out << idx + 1 << " " << blkno << " " << e.row + 1 << " " << e.col + 1 << " " << fmt(coeff)
            << "\n";
    }
  }
  if (!linear.empty()) {
    const Index blkno = static_cast<Index>(psd.size()) + 1;
    for (size_t i = 0; i < linear.size(); ++i) {
      const auto& e = linear[i].expr;
      const Index di = static_cast<Index>(i) + 1;
      if (e.constant != 0.0)
        out << "0 " << blkno << " " << di << " " << di << " " << fmt(-e.constant) << "\n";
      for (const auto& [idx, coeff] : e.terms)
        out << idx + 1 << " " << blkno << " " << di << " " << di << " " << fmt(coeff) << "\n";
    }
  }
}

void write_sdpa_file(const LmiProgram& program, const std::string& path, const std::string& name) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_sdpa(program, out, name);
}

Vector read_sdpa_solution(std::istream& in, Index expected) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();

  std::vector<double> values;
  auto parse_list = [&](const std::string& chunk) {
    std::string cleaned;
    cleaned.reserve(chunk.size());
    for (char ch : chunk) cleaned.push_back((ch == ',' || ch == '{' || ch == '}') ? ' ' : ch);
    std::istringstream is(cleaned);
    double v;
    while (is >> v) values.push_back(v);
  };

  const auto xvec = text.find("xVec");
  if (xvec != std::string::npos) {
    const auto open = text.find('{', xvec);
    const auto close = text.find('}', open);
    if (open == std::string::npos || close == std::string::npos)
      throw ParseError("sdpa solution: malformed xVec section");
    parse_list(text.substr(open, close - open + 1));
  } else {
    parse_list(text);
  }

  if (static_cast<Index>(values.size()) != expected)
    throw ParseError("sdpa solution: expected " + std::to_string(expected) + " values, found " +
                     std::to_string(values.size()));
  return Eigen::Map<const Vector>(values.data(), expected);
}

Vector read_sdpa_solution_file(const std::string& path, Index expected) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_sdpa_solution(in, expected);
}

}  // namespace rci
