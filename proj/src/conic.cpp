#include "gasnet/conic.hpp"

#include <cstdlib>

#include "gasnet/errors.hpp"

namespace gasnet {

const char* to_string(ConeType type) {
  switch (type) {
    case ConeType::free: return "free";
    case ConeType::nonnegative: return "nonnegative";
    case ConeType::second_order: return "second_order";
  }
  return "free";
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::primal_infeasible: return "primal_infeasible";
    case SolveStatus::dual_infeasible: return "dual_infeasible";
    case SolveStatus::iteration_limit: return "iteration_limit";
  }
  return "iteration_limit";
}

void ConicProgram::check() const {
  const int n = num_variables();
  int total = 0;
  for (std::size_t i = 0; i < cones.size(); ++i) {
    if (cones[i].dim <= 0) throw DimensionError("cone " + std::to_string(i) + " is empty");
    total += cones[i].dim;
  }
  if (total != n)
    throw DimensionError("cone dimensions sum to " + std::to_string(total) + ", expected " +
                         std::to_string(n));
  if (A.cols() != n)
    throw DimensionError("A has " + std::to_string(A.cols()) + " columns, expected " +
                         std::to_string(n));
  if (A.rows() != b.size())
    throw DimensionError("A has " + std::to_string(A.rows()) + " rows but b has " +
                         std::to_string(b.size()) + " entries");
  if (!c.allFinite() || !b.allFinite()) throw DimensionError("non-finite program data");
}

std::unique_ptr<ConicSolver> make_solver(const std::string& name) {
  std::string which = name;
  if (which.empty()) {
    const char* env = std::getenv("GASNET_SOLVER");
    if (env) which = env;
  }
  if (which.empty() || which == "ipm" || which == "builtin")
    return std::make_unique<InteriorPointSolver>();
  throw ConfigError("unknown solver backend '" + which + "'");
}

LinExpr& LinExpr::add(const LinExpr& other, double scale) {
  for (const auto& [v, a] : other.terms) add(v, a * scale);
  constant += scale * other.constant;
  return *this;
}

int ProgramBuilder::add_variables(int count, ConeType type) {
  if (count <= 0) throw DimensionError("add_variables: count must be positive");
  const int first = static_cast<int>(cones_var_count_);
  if (type == ConeType::second_order) {
    cones_.push_back({type, count});
  } else if (!cones_.empty() && cones_.back().type == type) {
    cones_.back().dim += count;
  } else {
    cones_.push_back({type, count});
  }
  cones_var_count_ += count;
  return first;
}

void ProgramBuilder::add_equality(const LinExpr& expr, double rhs) {
  const int row = static_cast<int>(rhs_.size());
  for (const auto& [v, a] : expr.terms) triplets_.emplace_back(row, v, a);
  rhs_.push_back(rhs - expr.constant);
}

int ProgramBuilder::add_nonnegative(const LinExpr& expr) {
  const int s = add_variables(1, ConeType::nonnegative);
  LinExpr e = expr;
  e.add(s, -1.0);
  add_equality(e, 0.0);
  return s;
}

int ProgramBuilder::add_second_order(const LinExpr& head, const std::vector<LinExpr>& rest) {
  if (rest.empty()) return add_nonnegative(head);
  const int dim = 1 + static_cast<int>(rest.size());
  const int first = add_variables(dim, ConeType::second_order);
  LinExpr e = head;
  e.add(first, -1.0);
  add_equality(e, 0.0);
  for (std::size_t i = 0; i < rest.size(); ++i) {
    LinExpr r = rest[i];
    r.add(first + 1 + static_cast<int>(i), -1.0);
    add_equality(r, 0.0);
  }
  return first;
}

int ProgramBuilder::add_square_epigraph(const std::vector<LinExpr>& v) {
  const int u = add_variables(1, ConeType::free);
  LinExpr head;
  head.add(u, 1.0);
  head += 1.0;
  std::vector<LinExpr> rest;
  rest.reserve(v.size() + 1);
  LinExpr tail;
  tail.add(u, 1.0);
  tail += -1.0;
  rest.push_back(tail);
  for (const auto& e : v) {
    LinExpr twice;
    twice.add(e, 2.0);
    rest.push_back(twice);
  }
  add_second_order(head, rest);
  return u;
}

void ProgramBuilder::add_objective(const LinExpr& expr, double scale) {
  for (const auto& [v, a] : expr.terms) objective_.emplace_back(v, a * scale);
  offset_ += scale * expr.constant;
}

ConicProgram ProgramBuilder::build() const {
  ConicProgram p;
  const int n = num_variables();
  const int m = num_equalities();
  p.c = Eigen::VectorXd::Zero(n);
  for (const auto& [v, a] : objective_) p.c[v] += a;
  p.A.resize(m, n);
  p.A.setFromTriplets(triplets_.begin(), triplets_.end());
  p.A.prune(0.0);
  p.A.makeCompressed();
  p.b = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), m);
  p.cones = cones_;
  p.offset = offset_;
  return p;
}

}  // namespace gasnet
