#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace gasnet {

/// Factor F with F F^T = S for a symmetric positive semidefinite S.
///
/// Tries, in order: a Cholesky that drops exactly-zero pivots (keeps F lower
/// triangular, so the leading block of F factors the leading block of S);
/// plain Cholesky of S + jitter*I with jitter 1e-12, 1e-10, 1e-8; eigenvalue
/// clipping at zero. Throws DecompositionError if S has a clearly negative
/// eigenvalue or non-finite entries.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& S);

enum class Distribution { gaussian, uniform, student_t };

Distribution distribution_from_string(const std::string& s);

/// Random process zeta = (zeta_1, ..., zeta_T) over a T-stage horizon with
/// zeta_1 = 1 deterministically, known first two moments, and the linear maps
/// from revealed uncertainty to nodal gas extraction.
///
/// Stages are 0-based in the API: stage s reveals stage_dims[s] coordinates
/// and cumulative(s) coordinates are known at stage s.
class UncertaintyModel {
 public:
  UncertaintyModel() = default;

  /// Validates dimensions and moments and computes the factors. Throws
  /// DimensionError or DecompositionError.
  UncertaintyModel(std::vector<int> stage_dims, Eigen::VectorXd mean,
                   Eigen::MatrixXd covariance, std::vector<Eigen::MatrixXd> extraction,
                   std::vector<double> risk);

  /// Single-coordinate model with zeta = 1: every stage reveals nothing new.
  static UncertaintyModel deterministic(const std::vector<Eigen::VectorXd>& mean_extraction,
                                        double risk = 0.5);

  int horizon() const { return static_cast<int>(stage_dims_.size()); }
  int dim() const { return static_cast<int>(mean_.size()); }
  int stage_dim(int s) const { return stage_dims_[s]; }
  int cumulative(int s) const { return cumulative_[s]; }
  const std::vector<int>& stage_dims() const { return stage_dims_; }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  /// F with F F^T = covariance.
  const Eigen::MatrixXd& factor() const { return factor_; }
  /// R with R^T R equal to the leading cumulative(s) block of the
  /// covariance and no identically zero rows: ||stage_factor(s) v|| is the
  /// standard deviation of v^T zeta^s. Shape r x cumulative(s); r may be 0.
  const Eigen::MatrixXd& stage_factor(int s) const { return stage_factors_[s]; }
  /// Lower-triangular H with H H^T = leading block of covariance + mean mean^T.
  const Eigen::MatrixXd& second_moment_factor(int s) const { return moment_factors_[s]; }

  const Eigen::MatrixXd& extraction(int s) const { return extraction_[s]; }
  const std::vector<Eigen::MatrixXd>& extraction() const { return extraction_; }
  double risk(int s) const { return risk_[s]; }
  const std::vector<double>& risk() const { return risk_; }

  /// Mean extraction at stage s: Delta_s * mean^s.
  Eigen::VectorXd mean_extraction(int s) const;
  Eigen::VectorXd mean_prefix(int s) const { return mean_.head(cumulative_[s]); }

  /// Same model with every covariance entry multiplied by `factor`.
  UncertaintyModel with_scaled_covariance(double factor) const;
  UncertaintyModel with_risk(double risk) const;

  std::vector<Eigen::MatrixXd> renewable;  // optional Omega_t, R x k^t

 private:
  std::vector<int> stage_dims_;
  std::vector<int> cumulative_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd factor_;
  std::vector<Eigen::MatrixXd> stage_factors_;
  std::vector<Eigen::MatrixXd> moment_factors_;
  std::vector<Eigen::MatrixXd> extraction_;
  std::vector<double> risk_;
};

/// Selector S_s = [I_{k^s} | 0] of shape cumulative(s) x dim(). Throws
/// DimensionError when s is outside [0, horizon).
Eigen::MatrixXd truncation(const UncertaintyModel& model, int s);

/// Delta_t = Lambda^T G_t for a power-to-gas matrix Lambda (M x N) and
/// generator responses G_t (M x k^t).
std::vector<Eigen::MatrixXd> build_extraction_map(const Eigen::MatrixXd& lambda,
                                                  const std::vector<Eigen::MatrixXd>& responses);

/// count x dim matrix of draws with first coordinate exactly equal to the
/// mean's. Gaussian draws use the covariance factor; the other tags use
/// zero-mean unit-variance uniform or Student-t (5 dof) innovations.
Eigen::MatrixXd sample(const UncertaintyModel& model, int count, std::uint64_t seed,
                       Distribution dist = Distribution::gaussian);

/// Bonferroni split of a joint per-stage risk over the individual constraints
/// of one stage: eps / (E + |E_a| + N + 2E).
double bonferroni_individual_risk(double joint_risk, int num_nodes, int num_edges,
                                  int num_active_edges);

/// Zonal wind-balancing stand-in for the power-side dispatch. Wind in zone z
/// at stage t (1-based) is mean[z][t] + step[z] * sum_{tau=2..t}(zeta_{tau,z} - 1),
/// and generator m balances it with share participation(m, z). Gas-fired
/// units sit at `unit_nodes` and convert power to gas with `heat_rate`.
struct ZonalStub {
  int stages = 5;
  int zones = 3;
  std::vector<std::vector<double>> wind_mean;   // [zone][stage]
  std::vector<double> wind_step;                // [zone]
  std::vector<std::vector<double>> unit_load;   // [unit][stage], power before wind
  Eigen::MatrixXd participation;                // units x zones
  std::vector<int> unit_nodes;                  // gas node index per unit
  std::vector<double> heat_rate;                // per unit
};

struct ZonalStubOutput {
  std::vector<int> stage_dims;
  Eigen::MatrixXd lambda;                       // units x N
  std::vector<Eigen::MatrixXd> responses;       // G_t
  std::vector<Eigen::MatrixXd> renewable;       // Omega_t
};

ZonalStubOutput zonal_balancing_stub(const ZonalStub& stub, int num_nodes);

}  // namespace gasnet
