#include "gasnet/ldr_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gasnet/applications.hpp"
#include "gasnet/errors.hpp"

namespace gasnet {

const char* to_string(PolicyMatrix m) {
  switch (m) {
    case PolicyMatrix::injection: return "injection";
    case PolicyMatrix::regulation: return "regulation";
    case PolicyMatrix::pressure: return "pressure";
    case PolicyMatrix::linepack: return "linepack";
    case PolicyMatrix::flow: return "flow";
    case PolicyMatrix::flow_plus: return "flow_plus";
    case PolicyMatrix::flow_minus: return "flow_minus";
  }
  return "injection";
}

PolicyMatrix policy_matrix_from_string(const std::string& s) {
  for (auto m : kPolicyMatrices)
    if (s == to_string(m)) return m;
  throw ParseError("unknown policy matrix '" + s + "'");
}

std::vector<Eigen::MatrixXd>& PolicySet::operator[](PolicyMatrix m) {
  switch (m) {
    case PolicyMatrix::injection: return injection;
    case PolicyMatrix::regulation: return regulation;
    case PolicyMatrix::pressure: return pressure;
    case PolicyMatrix::linepack: return linepack;
    case PolicyMatrix::flow: return flow;
    case PolicyMatrix::flow_plus: return flow_plus;
    case PolicyMatrix::flow_minus: return flow_minus;
  }
  return injection;
}

const std::vector<Eigen::MatrixXd>& PolicySet::operator[](PolicyMatrix m) const {
  return const_cast<PolicySet&>(*this)[m];
}

namespace {
bool node_matrix(PolicyMatrix m) {
  return m == PolicyMatrix::injection || m == PolicyMatrix::pressure;
}
}  // namespace

PolicySet PolicySet::zeros(int num_nodes, int num_edges, const std::vector<int>& columns) {
  PolicySet p;
  for (auto m : kPolicyMatrices) {
    const int rows = node_matrix(m) ? num_nodes : num_edges;
    for (int c : columns) p[m].push_back(Eigen::MatrixXd::Zero(rows, c));
  }
  return p;
}

PolicySet PolicySet::resized(const std::vector<int>& columns) const {
  if (static_cast<int>(columns.size()) != horizon())
    throw DimensionError("resized: expected " + std::to_string(horizon()) + " stages");
  PolicySet p;
  for (auto m : kPolicyMatrices) {
    for (int t = 0; t < horizon(); ++t) {
      const auto& src = (*this)[m][t];
      Eigen::MatrixXd dst = Eigen::MatrixXd::Zero(src.rows(), columns[t]);
      const int c = std::min<int>(columns[t], src.cols());
      dst.leftCols(c) = src.leftCols(c);
      p[m].push_back(std::move(dst));
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// ProgramIndex

void ProgramIndex::add_block(const std::string& name, int stage, int rows, int cols, int offset) {
  if (!blocks_.empty() && offset < blocks_.back().offset + blocks_.back().rows * blocks_.back().cols)
    throw DimensionError("program index: block " + name + " overlaps its predecessor");
  lookup_[{name, stage}] = static_cast<int>(blocks_.size());
  blocks_.push_back({name, stage, rows, cols, offset});
}

bool ProgramIndex::has(const std::string& name, int stage) const {
  return lookup_.count({name, stage}) > 0;
}

const ProgramIndex::Block& ProgramIndex::block(const std::string& name, int stage) const {
  auto it = lookup_.find({name, stage});
  if (it == lookup_.end())
    throw DimensionError("program index: no block " + name + " at stage " + std::to_string(stage));
  return blocks_[it->second];
}

int ProgramIndex::var(const std::string& name, int stage, int row, int col) const {
  const Block& b = block(name, stage);
  if (row < 0 || row >= b.rows || col < 0 || col >= b.cols)
    throw DimensionError("program index: entry (" + std::to_string(row) + "," +
                         std::to_string(col) + ") outside " + name + " at stage " +
                         std::to_string(stage));
  return b.offset + row * b.cols + col;
}

std::optional<ProgramIndex::Entry> ProgramIndex::locate(int variable) const {
  auto it = std::upper_bound(blocks_.begin(), blocks_.end(), variable,
                             [](int v, const Block& b) { return v < b.offset; });
  if (it == blocks_.begin()) return std::nullopt;
  const Block& b = *(it - 1);
  const int local = variable - b.offset;
  if (local >= b.rows * b.cols) return std::nullopt;
  return Entry{b.name, b.stage, local / b.cols, local % b.cols};
}

// ---------------------------------------------------------------------------
// Objective

ObjectiveTerms objective_terms(const GasNetwork& network, const UncertaintyModel& model) {
  ObjectiveTerms o;
  o.c1 = network.cost_linear();
  o.c2 = network.cost_quadratic();
  for (int t = 0; t < model.horizon(); ++t) {
    o.mean.push_back(model.mean_prefix(t));
    o.factor.push_back(model.second_moment_factor(t));
  }
  return o;
}

double ObjectiveTerms::linear_part(const PolicySet& policy) const {
  double v = 0.0;
  for (int t = 0; t < policy.horizon(); ++t) v += c1.dot(policy.injection[t] * mean[t]);
  return v;
}

double ObjectiveTerms::quadratic_part(const PolicySet& policy) const {
  double v = 0.0;
  for (int t = 0; t < policy.horizon(); ++t) {
    const Eigen::MatrixXd TH = policy.injection[t] * factor[t];
    for (int n = 0; n < TH.rows(); ++n) v += c2[n] * TH.row(n).squaredNorm();
  }
  return v;
}

void lower_objective(ProgramBuilder& builder, const ProgramIndex& index,
                     const ObjectiveTerms& terms) {
  const int T = static_cast<int>(terms.mean.size());
  for (int t = 0; t < T; ++t) {
    const auto& mu = terms.mean[t];
    const auto& H = terms.factor[t];
    const int K = static_cast<int>(mu.size());
    for (int n = 0; n < terms.c1.size(); ++n) {
      for (int j = 0; j < K; ++j)
        if (terms.c1[n] != 0.0 && mu[j] != 0.0)
          builder.add_objective(index.var(PolicyMatrix::injection, t, n, j), terms.c1[n] * mu[j]);
      if (terms.c2[n] <= 0.0) continue;
      const double root = std::sqrt(terms.c2[n]);
      std::vector<LinExpr> v(H.cols());
      for (int j = 0; j < H.cols(); ++j)
        for (int i = 0; i < K; ++i)
          if (H(i, j) != 0.0) v[j].add(index.var(PolicyMatrix::injection, t, n, i), root * H(i, j));
      const int u = builder.add_square_epigraph(v);
      builder.add_objective(u, 1.0);
    }
  }
}

// ---------------------------------------------------------------------------
// Equalities

namespace {

void require(bool ok, const std::string& equation, int stage, const std::string& detail) {
  if (!ok)
    throw DimensionError(equation + " at stage " + std::to_string(stage) + ": " + detail);
}

}  // namespace

std::vector<PolicyEquality> equality_blocks(const GasNetwork& network,
                                            const IncidenceSet& incidence,
                                            const Sensitivities& sens,
                                            const UncertaintyModel& model,
                                            const std::vector<double>& reference_pressures,
                                            const ProgramIndex& index) {
  const int N = network.num_nodes();
  const int E = network.num_edges();
  const int T = model.horizon();
  const int r = network.reference();
  if (r < 0) throw TopologyError("network has no reference node");
  require(sens.horizon() == T, "weymouth", 0,
          "sensitivities cover " + std::to_string(sens.horizon()) + " stages, model " +
              std::to_string(T));
  require(static_cast<int>(reference_pressures.size()) == T, "reference", 0,
          "expected one reference pressure per stage");

  const Eigen::VectorXd s = network.linepack_factor();
  const Eigen::VectorXd psi0 = network.initial_linepack();
  std::vector<PolicyEquality> out;
  auto V = [&](PolicyMatrix m, int t, int row, int col) { return index.var(m, t, row, col); };

  for (int t = 0; t < T; ++t) {
    const int K = model.cumulative(t);
    const int Kprev = t > 0 ? model.cumulative(t - 1) : 0;
    const Eigen::MatrixXd& D = model.extraction(t);
    require(D.rows() == N && D.cols() == K, "mass_balance", t,
            "extraction map is " + std::to_string(D.rows()) + "x" + std::to_string(D.cols()) +
                ", expected " + std::to_string(N) + "x" + std::to_string(K));
    require(sens.W1[t].rows() == E && sens.W1[t].cols() == N, "weymouth", t, "W1 must be E x N");
    require(sens.W2[t].rows() == E && sens.W2[t].cols() == E, "weymouth", t, "W2 must be E x E");
    require(sens.w0[t].size() == E, "weymouth", t, "w0 must have E entries");

    for (int j = 0; j < K; ++j) {
      // A+ Phi+ + A- Phi- - Theta + B K = -Delta
      for (int n = 0; n < N; ++n) {
        PolicyEquality eq{"mass_balance", t, n, j, {}, -D(n, j)};
        eq.terms.emplace_back(V(PolicyMatrix::injection, t, n, j), -1.0);
        for (int l = 0; l < E; ++l) {
          if (incidence.A_plus(n, l) != 0.0)
            eq.terms.emplace_back(V(PolicyMatrix::flow_plus, t, l, j), incidence.A_plus(n, l));
          if (incidence.A_minus(n, l) != 0.0)
            eq.terms.emplace_back(V(PolicyMatrix::flow_minus, t, l, j), incidence.A_minus(n, l));
          if (incidence.B(n, l) != 0.0)
            eq.terms.emplace_back(V(PolicyMatrix::regulation, t, l, j), incidence.B(n, l));
        }
        out.push_back(std::move(eq));
      }
      // Phi - W1 P - W2 K = [w0 0]
      for (int l = 0; l < E; ++l) {
        PolicyEquality eq{"weymouth", t, l, j, {}, j == 0 ? sens.w0[t][l] : 0.0};
        eq.terms.emplace_back(V(PolicyMatrix::flow, t, l, j), 1.0);
        for (int n = 0; n < N; ++n)
          if (sens.W1[t](l, n) != 0.0)
            eq.terms.emplace_back(V(PolicyMatrix::pressure, t, n, j), -sens.W1[t](l, n));
        for (int e = 0; e < E; ++e)
          if (sens.W2[t](l, e) != 0.0)
            eq.terms.emplace_back(V(PolicyMatrix::regulation, t, e, j), -sens.W2[t](l, e));
        out.push_back(std::move(eq));
      }
      {
        PolicyEquality eq{"reference", t, r, j, {}, j == 0 ? reference_pressures[t] : 0.0};
        eq.terms.emplace_back(V(PolicyMatrix::pressure, t, r, j), 1.0);
        out.push_back(std::move(eq));
      }
      for (int l = 0; l < E; ++l) {
        PolicyEquality mid{"midway", t, l, j, {}, 0.0};
        mid.terms = {{V(PolicyMatrix::flow, t, l, j), 1.0},
                     {V(PolicyMatrix::flow_plus, t, l, j), -0.5},
                     {V(PolicyMatrix::flow_minus, t, l, j), -0.5}};
        out.push_back(std::move(mid));

        // Psi - s/2 (K + |A|^T P) = 0
        PolicyEquality lp{"linepack", t, l, j, {}, 0.0};
        lp.terms.emplace_back(V(PolicyMatrix::linepack, t, l, j), 1.0);
        if (s[l] != 0.0) {
          lp.terms.emplace_back(V(PolicyMatrix::regulation, t, l, j), -0.5 * s[l]);
          lp.terms.emplace_back(V(PolicyMatrix::pressure, t, network.from_index(l), j), -0.5 * s[l]);
          lp.terms.emplace_back(V(PolicyMatrix::pressure, t, network.to_index(l), j), -0.5 * s[l]);
        }
        out.push_back(std::move(lp));

        // Psi_t - Phi+ + Phi- - pad(Psi_{t-1}) = [psi0 0] at t = 0
        PolicyEquality dyn{"dynamics", t, l, j, {}, (t == 0 && j == 0) ? psi0[l] : 0.0};
        dyn.terms = {{V(PolicyMatrix::linepack, t, l, j), 1.0},
                     {V(PolicyMatrix::flow_plus, t, l, j), -1.0},
                     {V(PolicyMatrix::flow_minus, t, l, j), 1.0}};
        if (t > 0 && j < Kprev) dyn.terms.emplace_back(V(PolicyMatrix::linepack, t - 1, l, j), -1.0);
        out.push_back(std::move(dyn));
      }
      for (int l = 0; l < E; ++l) {
        if (network.edge(l).active()) continue;
        out.push_back({"pin_regulation", t, l, j, {{V(PolicyMatrix::regulation, t, l, j), 1.0}}, 0.0});
      }
      for (int n = 0; n < N; ++n) {
        const auto& node = network.node(n);
        if (node.injection_max - node.injection_min > 1e-12) continue;
        out.push_back({"pin_injection", t, n, j,
                       {{V(PolicyMatrix::injection, t, n, j), 1.0}},
                       j == 0 ? node.injection_max : 0.0});
      }
    }
  }
  return out;
}

double equality_residual(const PolicyEquality& eq, const Eigen::VectorXd& x) {
  double v = -eq.rhs;
  for (const auto& [i, a] : eq.terms) v += a * x[i];
  return v;
}

// ---------------------------------------------------------------------------
// Chance constraints

double chebyshev_coefficient(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("risk level must lie in (0, 1)");
  return std::sqrt((1.0 - eps) / eps);
}

ConstraintRecord chebyshev_single_sided(ProgramBuilder& builder,
                                        const std::vector<LinExpr>& deviation,
                                        const LinExpr& margin, double eps) {
  const double k = chebyshev_coefficient(eps);
  ConstraintRecord rec;
  if (deviation.empty()) {
    rec.first_variable = builder.add_nonnegative(margin);
    rec.cone = ConeType::nonnegative;
    return rec;
  }
  std::vector<LinExpr> rest;
  rest.reserve(deviation.size());
  for (const auto& d : deviation) {
    LinExpr e;
    e.add(d, k);
    rest.push_back(std::move(e));
  }
  rec.first_variable = builder.add_second_order(margin, rest);
  rec.cone = ConeType::second_order;
  return rec;
}

std::pair<int, int> exact_double_sided(ProgramBuilder& builder,
                                       const std::vector<LinExpr>& deviation,
                                       const LinExpr& mean, double lower, double upper,
                                       double eps) {
  if (!(lower < upper))
    throw ConfigError("double-sided constraint needs lower < upper, got [" +
                      std::to_string(lower) + ", " + std::to_string(upper) + "]");
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("risk level must lie in (0, 1]");
  const double c = 0.5 * (upper + lower);
  const double d = 0.5 * (upper - lower);
  const double k = 1.0 / std::sqrt(eps);
  const int x = builder.add_variables(2, ConeType::nonnegative);
  const int y = x + 1;

  LinExpr head(d);
  head.add(x, -1.0);
  std::vector<LinExpr> rest;
  for (const auto& dev : deviation) {
    LinExpr e;
    e.add(dev, k);
    rest.push_back(std::move(e));
  }
  LinExpr ey;
  ey.add(y, k);
  rest.push_back(std::move(ey));
  builder.add_second_order(head, rest);

  // y + x - (mean - c) >= 0 and y + x + (mean - c) >= 0
  LinExpr hi;
  hi.add(y, 1.0).add(x, 1.0).add(mean, -1.0);
  hi += c;
  builder.add_nonnegative(hi);
  LinExpr lo;
  lo.add(y, 1.0).add(x, 1.0).add(mean, 1.0);
  lo += -c;
  builder.add_nonnegative(lo);
  // x <= d
  LinExpr cap(d);
  cap.add(x, -1.0);
  builder.add_nonnegative(cap);
  return {x, y};
}

void split_double_sided(ProgramBuilder& builder, const std::vector<LinExpr>& deviation,
                        const LinExpr& mean, double lower, double upper, double eps) {
  LinExpr above = mean;
  above += -lower;
  chebyshev_single_sided(builder, deviation, above, 0.5 * eps);
  LinExpr below(upper);
  below.add(mean, -1.0);
  chebyshev_single_sided(builder, deviation, below, 0.5 * eps);
}

std::vector<LinExpr> deviation_rows(const UncertaintyModel& model, int stage,
                                    const ProgramIndex& index, PolicyMatrix m, int row) {
  const Eigen::MatrixXd& R = model.stage_factor(stage);
  std::vector<LinExpr> out(R.rows());
  for (int i = 0; i < R.rows(); ++i)
    for (int j = 0; j < R.cols(); ++j)
      if (R(i, j) != 0.0) out[i].add(index.var(m, stage, row, j), R(i, j));
  return out;
}

namespace {

LinExpr mean_expr(const UncertaintyModel& model, int stage, const ProgramIndex& index,
                  PolicyMatrix m, int row) {
  const Eigen::VectorXd mu = model.mean_prefix(stage);
  LinExpr e;
  for (int j = 0; j < mu.size(); ++j)
    if (mu[j] != 0.0) e.add(index.var(m, stage, row, j), mu[j]);
  return e;
}

struct Emitter {
  ProgramBuilder& builder;
  ProgramIndex& index;
  const UncertaintyModel& model;
  DoubleSidedMode mode;
  int chance = 0;

  void single(const std::string& family, int t, int row, PolicyMatrix m, double lower) {
    LinExpr margin = mean_expr(model, t, index, m, row);
    margin += -lower;
    auto rec = chebyshev_single_sided(builder, deviation_rows(model, t, index, m, row), margin,
                                      model.risk(t));
    rec.family = family;
    rec.stage = t;
    rec.index = row;
    index.constraints.push_back(rec);
    ++chance;
  }

  void upper_single(const std::string& family, int t, int row, PolicyMatrix m, double upper) {
    LinExpr margin(upper);
    margin.add(mean_expr(model, t, index, m, row), -1.0);
    auto rec = chebyshev_single_sided(builder, deviation_rows(model, t, index, m, row), margin,
                                      model.risk(t));
    rec.family = family;
    rec.stage = t;
    rec.index = row;
    index.constraints.push_back(rec);
    ++chance;
  }

  void two_sided(const std::string& family, int t, int row, PolicyMatrix m, double lower,
                 double upper) {
    const bool has_lo = std::isfinite(lower);
    const bool has_hi = std::isfinite(upper);
    const auto dev = deviation_rows(model, t, index, m, row);
    if (dev.empty() || !has_lo || !has_hi) {
      if (has_lo) single(family + "_min", t, row, m, lower);
      if (has_hi) upper_single(family + "_max", t, row, m, upper);
      return;
    }
    const LinExpr mean = mean_expr(model, t, index, m, row);
    ++chance;
    if (mode == DoubleSidedMode::exact) {
      auto [x, y] = exact_double_sided(builder, dev, mean, lower, upper, model.risk(t));
      (void)y;
      index.constraints.push_back({family, t, row, x, ConeType::second_order});
    } else {
      split_double_sided(builder, dev, mean, lower, upper, model.risk(t));
      index.constraints.push_back({family, t, row, -1, ConeType::second_order});
    }
  }
};

}  // namespace

AssembledProgram assemble(const GasNetwork& network, const IncidenceSet& incidence,
                          const Sensitivities& sens, const UncertaintyModel& model,
                          const std::vector<double>& reference_pressures,
                          const AssembleOptions& options) {
  options.controls.check();
  const int N = network.num_nodes();
  const int E = network.num_edges();
  const int T = model.horizon();
  for (int t = 0; t < T; ++t)
    if (!(model.risk(t) > 0.0 && model.risk(t) < 1.0))
      throw ConfigError("risk level at stage " + std::to_string(t) + " must lie in (0, 1)");

  AssembledProgram out;
  ProgramBuilder builder;
  ProgramIndex& index = out.index;

  int policy_vars = 0;
  for (int t = 0; t < T; ++t) {
    const int K = model.cumulative(t);
    for (auto m : kPolicyMatrices) {
      const int rows = node_matrix(m) ? N : E;
      const int offset = builder.add_variables(rows * K, ConeType::free);
      index.add_block(to_string(m), t, rows, K, offset);
      policy_vars += rows * K;
    }
  }

  const auto eqs = equality_blocks(network, incidence, sens, model, reference_pressures, index);
  for (const auto& eq : eqs) {
    LinExpr e;
    e.terms = eq.terms;
    builder.add_equality(e, eq.rhs);
  }

  out.objective = objective_terms(network, model);
  lower_objective(builder, index, out.objective);

  std::vector<char> closed(E, 0);
  for (int l : options.closed_edges) closed.at(l) = 1;
  const Eigen::VectorXd s = network.linepack_factor();
  const Eigen::VectorXd psi0 = network.initial_linepack();

  Emitter emit{builder, index, model, options.double_sided};
  for (int t = 0; t < T; ++t) {
    for (int l = 0; l < E; ++l)
      if (network.edge(l).active() && !closed[l]) emit.single("flow_min", t, l, PolicyMatrix::flow, 0.0);
    if (t == T - 1)
      for (int l = 0; l < E; ++l)
        if (s[l] > 0.0 || psi0[l] > 0.0)
          emit.single("terminal_linepack", t, l, PolicyMatrix::linepack, psi0[l]);
    for (int n = 0; n < N; ++n) {
      const auto& node = network.node(n);
      if (node.injection_max - node.injection_min > 1e-12)
        emit.two_sided("injection", t, n, PolicyMatrix::injection, node.injection_min,
                       node.injection_max);
    }
    for (int l = 0; l < E; ++l) {
      const auto& e = network.edge(l);
      if (!e.active()) continue;
      if (e.regulation_max - e.regulation_min > 1e-12) {
        emit.two_sided("regulation", t, l, PolicyMatrix::regulation, e.regulation_min,
                       e.regulation_max);
      } else {
        for (int j = 0; j < model.cumulative(t); ++j) {
          LinExpr pin;
          pin.add(index.var(PolicyMatrix::regulation, t, l, j), 1.0);
          builder.add_equality(pin, j == 0 ? e.regulation_max : 0.0);
        }
      }
    }
    for (int n = 0; n < N; ++n) {
      const auto& node = network.node(n);
      if (node.pressure_max - node.pressure_min > 1e-12) {
        emit.two_sided("pressure", t, n, PolicyMatrix::pressure, node.pressure_min,
                       node.pressure_max);
      } else if (n != network.reference()) {
        for (int j = 0; j < model.cumulative(t); ++j) {
          LinExpr pin;
          pin.add(index.var(PolicyMatrix::pressure, t, n, j), 1.0);
          builder.add_equality(pin, j == 0 ? node.pressure_max : 0.0);
        }
      }
    }
  }

  const auto& ctl = options.controls;
  if (ctl.injection_cap) injection_deviation_cap(builder, index, network, model, *ctl.injection_cap);
  if (ctl.linepack_cap) linepack_cap(builder, index, network, model, *ctl.linepack_cap);
  if (ctl.variability_penalty > 0.0)
    variability_penalty(builder, index, network, model, ctl.variability_penalty);

  if (options.regulation_tiebreak > 0.0) {
    std::vector<LinExpr> v;
    for (int t = 0; t < T; ++t)
      for (int l = 0; l < E; ++l)
        if (network.edge(l).active()) {
          LinExpr e;
          e.add(index.var(PolicyMatrix::regulation, t, l, 0), 1.0);
          v.push_back(std::move(e));
        }
    if (!v.empty()) builder.add_objective(builder.add_square_epigraph(v), options.regulation_tiebreak);
  }

  out.program = builder.build();

  auto& mf = out.manifest;
  mf.policy_variables = policy_vars;
  for (const auto& rec : index.constraints)
    if ((rec.family == "injection" || rec.family == "regulation" || rec.family == "pressure") &&
        rec.first_variable >= 0)
      mf.auxiliary_variables += 2;
  mf.total_variables = out.program.num_variables();
  mf.equalities = out.program.num_equalities();
  mf.policy_equalities = static_cast<int>(eqs.size());
  for (const auto& c : out.program.cones) {
    switch (c.type) {
      case ConeType::free: mf.free_variables += c.dim; break;
      case ConeType::nonnegative:
        mf.nonnegative_cones += c.dim;
        mf.nonnegative_dim += c.dim;
        break;
      case ConeType::second_order:
        ++mf.second_order_cones;
        mf.second_order_dim += c.dim;
        break;
    }
  }
  mf.chance_constraints = emit.chance;
  mf.risk = model.risk();
  mf.double_sided = options.double_sided == DoubleSidedMode::exact ? "exact" : "split";
  mf.controls = options.controls;
  mf.closed_edges = static_cast<int>(options.closed_edges.size());
  return out;
}

PolicySet decode_policy(const ProgramIndex& index, const Eigen::VectorXd& x, int horizon) {
  PolicySet p;
  for (auto m : kPolicyMatrices) {
    for (int t = 0; t < horizon; ++t) {
      const auto& b = index.block(to_string(m), t);
      Eigen::MatrixXd M(b.rows, b.cols);
      for (int i = 0; i < b.rows; ++i)
        for (int j = 0; j < b.cols; ++j) M(i, j) = x[b.offset + i * b.cols + j];
      p[m].push_back(std::move(M));
    }
  }
  return p;
}

AuxiliaryVars decode_auxiliary(const ProgramIndex& index, const Eigen::VectorXd& x,
                               int num_nodes, int num_edges, int horizon) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  AuxiliaryVars a;
  auto init = [&](std::vector<Eigen::VectorXd>& v, int size) {
    v.assign(horizon, Eigen::VectorXd::Constant(size, nan));
  };
  init(a.x_injection, num_nodes);
  init(a.y_injection, num_nodes);
  init(a.x_regulation, num_edges);
  init(a.y_regulation, num_edges);
  init(a.x_pressure, num_nodes);
  init(a.y_pressure, num_nodes);
  for (const auto& rec : index.constraints) {
    if (rec.first_variable < 0) continue;
    std::vector<Eigen::VectorXd>* xs = nullptr;
    std::vector<Eigen::VectorXd>* ys = nullptr;
    if (rec.family == "injection") {
      xs = &a.x_injection;
      ys = &a.y_injection;
    } else if (rec.family == "regulation") {
      xs = &a.x_regulation;
      ys = &a.y_regulation;
    } else if (rec.family == "pressure") {
      xs = &a.x_pressure;
      ys = &a.y_pressure;
    } else {
      continue;
    }
    (*xs)[rec.stage][rec.index] = x[rec.first_variable];
    (*ys)[rec.stage][rec.index] = x[rec.first_variable + 1];
  }
  return a;
}

Eigen::VectorXd encode_policy(const ProgramIndex& index, const PolicySet& policy) {
  int size = 0;
  for (const auto& b : index.blocks()) size = std::max(size, b.offset + b.rows * b.cols);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(size);
  for (auto m : kPolicyMatrices)
    for (int t = 0; t < policy.horizon(); ++t) {
      const auto& b = index.block(to_string(m), t);
      const auto& M = policy[m][t];
      if (M.rows() != b.rows || M.cols() != b.cols)
        throw DimensionError(std::string("encode_policy: ") + to_string(m) + " at stage " +
                             std::to_string(t) + " has the wrong shape");
      for (int i = 0; i < b.rows; ++i)
        for (int j = 0; j < b.cols; ++j) x[b.offset + i * b.cols + j] = M(i, j);
    }
  return x;
}

}  // namespace gasnet
