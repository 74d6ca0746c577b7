#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace gasnet {

enum class ConeType { free, nonnegative, second_order };

const char* to_string(ConeType type);

struct Cone {
  ConeType type = ConeType::free;
  int dim = 0;
};

/// Standard-form cone program
///
///     minimize    c^T x + offset
///     subject to  A x = b,  x in K_1 x K_2 x ... x K_m
///
/// where the cone list partitions x in order. Second-order cones are
/// {(t, u) : ||u|| <= t}.
struct ConicProgram {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<Cone> cones;
  double offset = 0.0;

  int num_variables() const { return static_cast<int>(c.size()); }
  int num_equalities() const { return static_cast<int>(b.size()); }

  /// Throws DimensionError when the invariants do not hold.
  void check() const;
};

/// Text dump of a program: a header with counts, the objective as index/value
/// pairs, A as COO triplets, b, then one `type dim` line per cone. Values are
/// written with 17 significant digits so a load reproduces the program bit
/// for bit.
void write_program(std::ostream& out, const ConicProgram& program);
ConicProgram read_program(std::istream& in);

enum class SolveStatus { optimal, primal_infeasible, dual_infeasible, iteration_limit };

const char* to_string(SolveStatus status);

struct IterationLog {
  int iteration = 0;
  double primal_cost = 0.0;
  double dual_cost = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double tau = 0.0;
  double kappa = 0.0;
  double step = 0.0;
  double sigma = 0.0;
};

/// Solver output in the original (unscaled) data. For optimal solves x, y, s
/// are the primal point, equality multipliers and dual cone slack with
/// c - A^T y = s. For primal_infeasible, (y, s) is a ray with b^T y = 1,
/// A^T y + s ~ 0, s in K*. For dual_infeasible, x is a ray with
/// c^T x = -1, A x ~ 0, x in K.
struct Solution {
  SolveStatus status = SolveStatus::iteration_limit;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd s;
  double objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;  // ||A x - b||
  double dual_residual = 0.0;    // ||c - A^T y - s||
  double gap = 0.0;              // x^T s
  double relative_gap = 0.0;
  int iterations = 0;
  double seconds = 0.0;
  std::vector<IterationLog> trace;

  bool optimal() const { return status == SolveStatus::optimal; }
};

struct SolverSettings {
  int max_iterations = 200;
  double feasibility_tolerance = 1e-9;
  double gap_tolerance = 1e-9;
  /// Accepted as optimal when the solver stalls before the tight targets.
  double reduced_tolerance = 1e-7;
  double infeasibility_tolerance = 1e-8;
  double static_regularization = 1e-8;
  int refinement_steps = 12;
  int equilibration_passes = 15;
  double step_fraction = 0.99;
  bool verbose = false;
};

/// Boundary between program assembly and the numerical backend.
class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  virtual std::string name() const = 0;
  virtual Solution solve(const ConicProgram& program, const SolverSettings& settings) const = 0;
};

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling and
/// Mehrotra predictor-corrector steps. Each Newton system is reduced to the
/// quasi-definite form [H + dI, A^T; A, -dI] and factored with a sparse LDL^T,
/// followed by iterative refinement against the unregularized matrix.
class InteriorPointSolver final : public ConicSolver {
 public:
  std::string name() const override { return "ipm"; }
  Solution solve(const ConicProgram& program, const SolverSettings& settings) const override;
};

/// Backend by name; an empty name reads GASNET_SOLVER and falls back to the
/// built-in interior-point method. Throws ConfigError for unknown names.
std::unique_ptr<ConicSolver> make_solver(const std::string& name = "");

/// Sparse affine expression sum_i coef_i x_{var_i} + constant.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}

  LinExpr& add(int var, double coef) {
    if (coef != 0.0) terms.emplace_back(var, coef);
    return *this;
  }
  LinExpr& add(const LinExpr& other, double scale = 1.0);
  LinExpr& operator+=(double c) {
    constant += c;
    return *this;
  }
  bool is_constant() const { return terms.empty(); }
};

/// Incremental modeling layer that lowers affine cone constraints to the
/// standard form: every constrained expression gets its own block of cone
/// variables tied to it by equalities.
class ProgramBuilder {
 public:
  /// Appends `count` variables in a fresh cone (one block of dimension count
  /// for second-order cones). Returns the first index.
  int add_variables(int count, ConeType type);

  int num_variables() const { return static_cast<int>(cones_var_count_); }
  int num_equalities() const { return static_cast<int>(rhs_.size()); }

  /// expr == rhs
  void add_equality(const LinExpr& expr, double rhs = 0.0);

  /// expr >= 0; returns the slack index.
  int add_nonnegative(const LinExpr& expr);

  /// ||rest|| <= head; returns the first index of the cone block. With an
  /// empty `rest` this is a nonnegativity constraint on `head`.
  int add_second_order(const LinExpr& head, const std::vector<LinExpr>& rest);

  /// Epigraph u >= ||v||^2 lowered through ||(2v, u - 1)|| <= u + 1.
  /// Returns the index of the free variable u.
  int add_square_epigraph(const std::vector<LinExpr>& v);

  void add_objective(int var, double coef) { objective_.emplace_back(var, coef); }
  void add_objective(const LinExpr& expr, double scale = 1.0);
  void add_objective_constant(double c) { offset_ += c; }

  ConicProgram build() const;

 private:
  std::vector<Cone> cones_;
  std::size_t cones_var_count_ = 0;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> rhs_;
  std::vector<std::pair<int, double>> objective_;
  double offset_ = 0.0;
};

}  // namespace gasnet
