#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gasnet/conic.hpp"
#include "gasnet/controls.hpp"
#include "gasnet/network.hpp"
#include "gasnet/steady_state.hpp"
#include "gasnet/uncertainty.hpp"

namespace gasnet {

enum class PolicyMatrix { injection, regulation, pressure, linepack, flow, flow_plus, flow_minus };

inline constexpr PolicyMatrix kPolicyMatrices[] = {
    PolicyMatrix::injection, PolicyMatrix::regulation, PolicyMatrix::pressure,
    PolicyMatrix::linepack,  PolicyMatrix::flow,       PolicyMatrix::flow_plus,
    PolicyMatrix::flow_minus};

const char* to_string(PolicyMatrix m);
PolicyMatrix policy_matrix_from_string(const std::string& s);

/// Linear decision rules: at stage t each quantity is its coefficient
/// matrix (k^t columns) times the revealed prefix of zeta. Column 0 is the
/// nominal trajectory.
struct PolicySet {
  std::vector<Eigen::MatrixXd> injection;   // N x k^t
  std::vector<Eigen::MatrixXd> regulation;  // E x k^t
  std::vector<Eigen::MatrixXd> pressure;    // N x k^t
  std::vector<Eigen::MatrixXd> linepack;    // E x k^t
  std::vector<Eigen::MatrixXd> flow;        // E x k^t
  std::vector<Eigen::MatrixXd> flow_plus;   // E x k^t
  std::vector<Eigen::MatrixXd> flow_minus;  // E x k^t

  int horizon() const { return static_cast<int>(injection.size()); }
  std::vector<Eigen::MatrixXd>& operator[](PolicyMatrix m);
  const std::vector<Eigen::MatrixXd>& operator[](PolicyMatrix m) const;

  static PolicySet zeros(int num_nodes, int num_edges, const std::vector<int>& columns);

  /// Copy with every matrix zero-padded (or truncated) to `columns[t]`.
  PolicySet resized(const std::vector<int>& columns) const;
};

/// Auxiliaries of the exact double-sided constraints; NaN where a row has
/// no auxiliary pair (deterministic rows, pinned rows, split mode).
struct AuxiliaryVars {
  std::vector<Eigen::VectorXd> x_injection, y_injection;
  std::vector<Eigen::VectorXd> x_regulation, y_regulation;
  std::vector<Eigen::VectorXd> x_pressure, y_pressure;
};

struct ConstraintRecord {
  std::string family;  // e.g. "flow_min", "injection", "pressure"
  int stage = 0;
  int index = 0;       // node or edge
  int first_variable = -1;
  ConeType cone = ConeType::nonnegative;
};

/// Map between (matrix, stage, row, column) and flat variable indices.
class ProgramIndex {
 public:
  struct Block {
    std::string name;
    int stage = 0;
    int rows = 0;
    int cols = 0;
    int offset = 0;
  };
  struct Entry {
    std::string name;
    int stage = 0;
    int row = 0;
    int col = 0;
  };

  void add_block(const std::string& name, int stage, int rows, int cols, int offset);
  bool has(const std::string& name, int stage) const;
  const Block& block(const std::string& name, int stage) const;
  int var(const std::string& name, int stage, int row, int col) const;
  int var(PolicyMatrix m, int stage, int row, int col) const {
    return var(to_string(m), stage, row, col);
  }
  /// Inverse of var; nullopt for variables outside every block.
  std::optional<Entry> locate(int variable) const;
  const std::vector<Block>& blocks() const { return blocks_; }

  std::vector<ConstraintRecord> constraints;

 private:
  std::vector<Block> blocks_;
  std::map<std::pair<std::string, int>, int> lookup_;
};

/// Expected cost: sum_t c1^T Theta_t mu^t + ||dg(c2)^{1/2} Theta_t H_t||_F^2
/// with H_t H_t^T = E[zeta^t zeta^t^T].
struct ObjectiveTerms {
  Eigen::VectorXd c1;
  Eigen::VectorXd c2;
  std::vector<Eigen::VectorXd> mean;    // mu^t
  std::vector<Eigen::MatrixXd> factor;  // H_t

  double linear_part(const PolicySet& policy) const;
  double quadratic_part(const PolicySet& policy) const;
  double value(const PolicySet& policy) const { return linear_part(policy) + quadratic_part(policy); }
};

ObjectiveTerms objective_terms(const GasNetwork& network, const UncertaintyModel& model);

/// Adds the epigraph of the cost to the builder objective.
void lower_objective(ProgramBuilder& builder, const ProgramIndex& index, const ObjectiveTerms& terms);

/// One coefficient-wise equality sum a_i x_i = rhs over flat variables.
struct PolicyEquality {
  std::string equation;  // mass_balance, weymouth, reference, midway, linepack, dynamics, pin
  int stage = 0;
  int row = 0;
  int column = 0;
  std::vector<std::pair<int, double>> terms;
  double rhs = 0.0;
};

/// Every stochastic equality written per column of the stage's coefficient
/// matrices, plus rows pinning passive regulation and fixed injections.
/// Throws DimensionError naming the equation and stage on shape mismatch.
std::vector<PolicyEquality> equality_blocks(const GasNetwork& network,
                                            const IncidenceSet& incidence,
                                            const Sensitivities& sens,
                                            const UncertaintyModel& model,
                                            const std::vector<double>& reference_pressures,
                                            const ProgramIndex& index);

/// Residual of an equality evaluated on a flat variable vector.
double equality_residual(const PolicyEquality& eq, const Eigen::VectorXd& x);

/// sqrt((1 - eps) / eps)
double chebyshev_coefficient(double eps);

/// sqrt((1 - eps)/eps) ||deviation|| <= margin, where deviation is the
/// factor applied to the row and margin its expected slack. With no
/// deviation rows this is margin >= 0.
ConstraintRecord chebyshev_single_sided(ProgramBuilder& builder,
                                        const std::vector<LinExpr>& deviation,
                                        const LinExpr& margin, double eps);

/// Exact two-sided reformulation of P(lower <= v.zeta <= upper) >= 1 - eps
/// over all distributions with the given moments:
///   eps^{-1/2} ||(deviation, y)|| <= d - x,  |mean - c| <= y + x,
///   0 <= x <= d,  y >= 0,
/// with c = (upper + lower)/2 and d = (upper - lower)/2. Returns the (x, y)
/// indices. Throws ConfigError when lower >= upper.
std::pair<int, int> exact_double_sided(ProgramBuilder& builder,
                                       const std::vector<LinExpr>& deviation,
                                       const LinExpr& mean, double lower, double upper,
                                       double eps);

/// Two one-sided constraints at eps/2 each.
void split_double_sided(ProgramBuilder& builder, const std::vector<LinExpr>& deviation,
                        const LinExpr& mean, double lower, double upper, double eps);

enum class DoubleSidedMode { exact, split };

struct AssembleOptions {
  DoubleSidedMode double_sided = DoubleSidedMode::exact;
  ControlOptions controls;
  std::vector<int> closed_edges;
  /// Weight on the squared nominal regulation of active edges.
  double regulation_tiebreak = 0.0;
};

struct BuildManifest {
  int policy_variables = 0;
  int auxiliary_variables = 0;
  int total_variables = 0;
  int equalities = 0;
  int policy_equalities = 0;
  int free_variables = 0;
  int nonnegative_cones = 0;
  int nonnegative_dim = 0;
  int second_order_cones = 0;
  int second_order_dim = 0;
  int chance_constraints = 0;
  std::vector<double> risk;
  std::string double_sided;
  ControlOptions controls;
  int closed_edges = 0;
};

struct AssembledProgram {
  ConicProgram program;
  ProgramIndex index;
  ObjectiveTerms objective;
  BuildManifest manifest;
};

AssembledProgram assemble(const GasNetwork& network, const IncidenceSet& incidence,
                          const Sensitivities& sens, const UncertaintyModel& model,
                          const std::vector<double>& reference_pressures,
                          const AssembleOptions& options = {});

/// Deviation expressions R_t v for a coefficient row of stage t.
std::vector<LinExpr> deviation_rows(const UncertaintyModel& model, int stage,
                                    const ProgramIndex& index, PolicyMatrix m, int row);

PolicySet decode_policy(const ProgramIndex& index, const Eigen::VectorXd& x, int horizon);
AuxiliaryVars decode_auxiliary(const ProgramIndex& index, const Eigen::VectorXd& x,
                               int num_nodes, int num_edges, int horizon);

/// Flat variable vector holding `policy` at the index positions (other
/// entries zero).
Eigen::VectorXd encode_policy(const ProgramIndex& index, const PolicySet& policy);

}  // namespace gasnet
