#include "gasnet/uncertainty.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "gasnet/errors.hpp"

namespace gasnet {

namespace {

bool factor_matches(const Eigen::MatrixXd& F, const Eigen::MatrixXd& S) {
  const double scale = std::max(1e-300, S.norm());
  return (F * F.transpose() - S).norm() <= 1e-10 * scale + 1e-300;
}

// Cholesky that tolerates exactly singular directions by zeroing the column
// of a vanishing pivot. Fails (returns false) on negative pivots.
bool semidefinite_cholesky(const Eigen::MatrixXd& S, Eigen::MatrixXd& L) {
  const int n = static_cast<int>(S.rows());
  L = Eigen::MatrixXd::Zero(n, n);
  const double tol = 1e-14 * std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
  for (int j = 0; j < n; ++j) {
    double d = S(j, j) - L.row(j).head(j).squaredNorm();
    if (d > tol) {
      const double ljj = std::sqrt(d);
      L(j, j) = ljj;
      for (int i = j + 1; i < n; ++i)
        L(i, j) = (S(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / ljj;
    } else if (d >= -tol) {
      for (int i = j + 1; i < n; ++i) {
        const double r = S(i, j) - L.row(i).head(j).dot(L.row(j).head(j));
        if (std::abs(r) > std::sqrt(tol) * 1e-3) return false;
      }
    } else {
      return false;
    }
  }
  return true;
}

Eigen::MatrixXd drop_zero_rows(const Eigen::MatrixXd& R) {
  std::vector<int> keep;
  for (int i = 0; i < R.rows(); ++i)
    if (R.row(i).cwiseAbs().maxCoeff() > 0.0) keep.push_back(i);
  Eigen::MatrixXd out(keep.size(), R.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) out.row(i) = R.row(keep[i]);
  return out;
}

}  // namespace

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw DimensionError("covariance must be square");
  if (!S.allFinite()) throw DecompositionError("covariance has non-finite entries");
  const int n = static_cast<int>(S.rows());
  if (n == 0) return Eigen::MatrixXd(0, 0);
  if ((S - S.transpose()).norm() > 1e-12 * std::max(1.0, S.norm()))
    throw DecompositionError("covariance is not symmetric");

  Eigen::MatrixXd L;
  if (semidefinite_cholesky(S, L) && factor_matches(L, S)) return L;

  for (double jitter : {1e-12, 1e-10, 1e-8}) {
    Eigen::LLT<Eigen::MatrixXd> llt(S + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd F = llt.matrixL();
      if (factor_matches(F, S)) return F;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) throw DecompositionError("eigendecomposition failed");
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-8 * scale)
    throw DecompositionError("covariance is not positive semidefinite (eigenvalue " +
                             std::to_string(eig.eigenvalues().minCoeff()) + ")");
  Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

Distribution distribution_from_string(const std::string& s) {
  if (s == "gaussian") return Distribution::gaussian;
  if (s == "uniform") return Distribution::uniform;
  if (s == "student_t") return Distribution::student_t;
  throw ConfigError("unknown distribution '" + s + "'");
}

UncertaintyModel::UncertaintyModel(std::vector<int> stage_dims, Eigen::VectorXd mean,
                                   Eigen::MatrixXd covariance,
                                   std::vector<Eigen::MatrixXd> extraction,
                                   std::vector<double> risk)
    : stage_dims_(std::move(stage_dims)),
      mean_(std::move(mean)),
      covariance_(std::move(covariance)),
      extraction_(std::move(extraction)),
      risk_(std::move(risk)) {
  const int T = horizon();
  if (T == 0) throw DimensionError("uncertainty horizon must be at least one stage");
  if (stage_dims_[0] != 1) throw DimensionError("first stage must reveal exactly one coordinate");
  int acc = 0;
  for (int s = 0; s < T; ++s) {
    if (stage_dims_[s] < 0) throw DimensionError("negative stage dimension");
    acc += stage_dims_[s];
    cumulative_.push_back(acc);
  }
  if (mean_.size() != acc)
    throw DimensionError("mean has " + std::to_string(mean_.size()) + " entries, expected " +
                         std::to_string(acc));
  if (covariance_.rows() != acc || covariance_.cols() != acc)
    throw DimensionError("covariance must be " + std::to_string(acc) + "x" + std::to_string(acc));
  if (mean_[0] != 1.0) throw DimensionError("first mean coordinate must equal 1");
  if (covariance_.row(0).cwiseAbs().maxCoeff() != 0.0 ||
      covariance_.col(0).cwiseAbs().maxCoeff() != 0.0)
    throw DimensionError("first row and column of the covariance must be zero");
  if (static_cast<int>(extraction_.size()) != T)
    throw DimensionError("expected one extraction map per stage");
  for (int s = 0; s < T; ++s) {
    if (extraction_[s].cols() != cumulative_[s])
      throw DimensionError("extraction map of stage " + std::to_string(s + 1) + " has " +
                           std::to_string(extraction_[s].cols()) + " columns, expected " +
                           std::to_string(cumulative_[s]));
    if (s > 0 && extraction_[s].rows() != extraction_[0].rows())
      throw DimensionError("extraction maps disagree on the node count");
  }
  if (risk_.size() == 1 && T > 1) risk_.assign(T, risk_[0]);
  if (static_cast<int>(risk_.size()) != T) throw DimensionError("expected one risk level per stage");
  for (double r : risk_)
    if (!(r > 0.0 && r < 1.0)) throw DimensionError("risk levels must lie in (0, 1)");

  factor_ = psd_factor(covariance_);
  for (int s = 0; s < T; ++s) {
    const int k = cumulative_[s];
    Eigen::MatrixXd block = covariance_.topLeftCorner(k, k);
    stage_factors_.push_back(drop_zero_rows(psd_factor(block).transpose()));
    Eigen::MatrixXd second = block + mean_.head(k) * mean_.head(k).transpose();
    moment_factors_.push_back(psd_factor(second));
  }
}

UncertaintyModel UncertaintyModel::deterministic(
    const std::vector<Eigen::VectorXd>& mean_extraction, double risk) {
  const int T = static_cast<int>(mean_extraction.size());
  std::vector<int> dims(T, 0);
  if (T > 0) dims[0] = 1;
  std::vector<Eigen::MatrixXd> delta;
  for (const auto& d : mean_extraction) delta.emplace_back(d);
  return UncertaintyModel(dims, Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 1), delta,
                          std::vector<double>(T, risk));
}

Eigen::VectorXd UncertaintyModel::mean_extraction(int s) const {
  return extraction_[s] * mean_.head(cumulative_[s]);
}

UncertaintyModel UncertaintyModel::with_scaled_covariance(double factor) const {
  UncertaintyModel out(stage_dims_, mean_, covariance_ * factor, extraction_, risk_);
  out.renewable = renewable;
  return out;
}

UncertaintyModel UncertaintyModel::with_risk(double risk) const {
  UncertaintyModel out(stage_dims_, mean_, covariance_, extraction_,
                       std::vector<double>(horizon(), risk));
  out.renewable = renewable;
  return out;
}

Eigen::MatrixXd truncation(const UncertaintyModel& model, int s) {
  if (s < 0 || s >= model.horizon())
    throw DimensionError("stage " + std::to_string(s + 1) + " outside horizon of " +
                         std::to_string(model.horizon()));
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(model.cumulative(s), model.dim());
  S.leftCols(model.cumulative(s)).setIdentity();
  return S;
}

std::vector<Eigen::MatrixXd> build_extraction_map(const Eigen::MatrixXd& lambda,
                                                  const std::vector<Eigen::MatrixXd>& responses) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(responses.size());
  for (std::size_t t = 0; t < responses.size(); ++t) {
    if (responses[t].rows() != lambda.rows())
      throw DimensionError("stage " + std::to_string(t + 1) + ": generator response has " +
                           std::to_string(responses[t].rows()) + " rows but the conversion matrix has " +
                           std::to_string(lambda.rows()));
    if (t > 0 && responses[t].cols() < responses[t - 1].cols())
      throw DimensionError("stage " + std::to_string(t + 1) +
                           ": generator response has fewer columns than the previous stage");
    out.push_back(lambda.transpose() * responses[t]);
  }
  return out;
}

Eigen::MatrixXd sample(const UncertaintyModel& model, int count, std::uint64_t seed,
                       Distribution dist) {
  if (count < 0) throw ConfigError("sample count must be nonnegative");
  const int k = model.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-std::sqrt(3.0), std::sqrt(3.0));
  std::student_t_distribution<double> student(5.0);
  const double t_scale = std::sqrt(3.0 / 5.0);

  Eigen::MatrixXd out(count, k);
  Eigen::VectorXd z(k);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < k; ++j) {
      switch (dist) {
        case Distribution::gaussian: z[j] = normal(rng); break;
        case Distribution::uniform: z[j] = uniform(rng); break;
        case Distribution::student_t: z[j] = t_scale * student(rng); break;
      }
    }
    out.row(i) = (model.mean() + model.factor() * z).transpose();
    out(i, 0) = model.mean()[0];
  }
  return out;
}

double bonferroni_individual_risk(double joint_risk, int num_nodes, int num_edges,
                                  int num_active_edges) {
  const int count = num_edges + num_active_edges + num_nodes + 2 * num_edges;
  if (count <= 0) return joint_risk;
  return joint_risk / count;
}

ZonalStubOutput zonal_balancing_stub(const ZonalStub& stub, int num_nodes) {
  const int T = stub.stages;
  const int Z = stub.zones;
  const int M = static_cast<int>(stub.unit_nodes.size());
  if (static_cast<int>(stub.wind_mean.size()) != Z || static_cast<int>(stub.wind_step.size()) != Z)
    throw DimensionError("wind data must have one entry per zone");
  if (stub.participation.rows() != M || stub.participation.cols() != Z)
    throw DimensionError("participation must be units x zones");
  if (static_cast<int>(stub.heat_rate.size()) != M || static_cast<int>(stub.unit_load.size()) != M)
    throw DimensionError("heat rates and loads must have one entry per unit");

  ZonalStubOutput out;
  out.stage_dims.assign(T, Z);
  out.stage_dims[0] = 1;
  // zeta index of the coordinate revealed at 1-based stage tau for zone z
  auto coord = [Z](int tau, int z) { return 1 + (tau - 2) * Z + z; };

  out.lambda = Eigen::MatrixXd::Zero(M, num_nodes);
  for (int m = 0; m < M; ++m) out.lambda(m, stub.unit_nodes[m]) = stub.heat_rate[m];

  for (int t = 1; t <= T; ++t) {
    const int kt = 1 + (t - 1) * Z;
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(Z, kt);
    for (int z = 0; z < Z; ++z) {
      omega(z, 0) = stub.wind_mean[z][t - 1] - stub.wind_step[z] * (t - 1);
      for (int tau = 2; tau <= t; ++tau) omega(z, coord(tau, z)) = stub.wind_step[z];
    }
    Eigen::MatrixXd G = -stub.participation * omega;
    for (int m = 0; m < M; ++m) G(m, 0) += stub.unit_load[m][t - 1];
    out.responses.push_back(G);
    out.renewable.push_back(omega);
  }
  return out;
}

}  // namespace gasnet
