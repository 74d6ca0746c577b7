#include "gasnet/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gasnet/applications.hpp"
#include "gasnet/errors.hpp"

namespace gasnet {

Trajectory realize(const PolicySet& policy, const Eigen::VectorXd& zeta) {
  Trajectory tr;
  auto apply = [&](const std::vector<Eigen::MatrixXd>& Ms, std::vector<Eigen::VectorXd>& out) {
    out.clear();
    for (const auto& M : Ms) {
      if (M.cols() > zeta.size())
        throw DimensionError("realize: policy needs " + std::to_string(M.cols()) +
                             " coordinates, zeta has " + std::to_string(zeta.size()));
      out.push_back(M * zeta.head(M.cols()));
    }
  };
  apply(policy.injection, tr.injection);
  apply(policy.regulation, tr.regulation);
  apply(policy.pressure, tr.pressure);
  apply(policy.linepack, tr.linepack);
  apply(policy.flow, tr.flow);
  apply(policy.flow_plus, tr.flow_plus);
  apply(policy.flow_minus, tr.flow_minus);
  return tr;
}

double EqualityResiduals::max() const {
  return std::max({mass_balance, weymouth, reference, midway, linepack, dynamics});
}

namespace {

Eigen::VectorXd mass_residual(const Trajectory& tr, int t, const Eigen::VectorXd& zeta,
                              const IncidenceSet& inc, const UncertaintyModel& model) {
  const Eigen::MatrixXd& D = model.extraction(t);
  const Eigen::VectorXd delta = D * zeta.head(D.cols());
  return inc.A_plus * tr.flow_plus[t] + inc.A_minus * tr.flow_minus[t] - tr.injection[t] +
         inc.B * tr.regulation[t] + delta;
}

}  // namespace

EqualityResiduals equality_residuals(const Trajectory& tr, const Eigen::VectorXd& zeta,
                                     const GasNetwork& network, const IncidenceSet& inc,
                                     const Sensitivities& sens, const UncertaintyModel& model,
                                     const std::vector<double>& reference_pressures,
                                     bool skip_reference_balance) {
  EqualityResiduals r;
  const int r_node = network.reference();
  const Eigen::VectorXd s = network.linepack_factor();
  const Eigen::VectorXd psi0 = network.initial_linepack();
  for (int t = 0; t < static_cast<int>(tr.flow.size()); ++t) {
    Eigen::VectorXd mb = mass_residual(tr, t, zeta, inc, model);
    if (skip_reference_balance) mb[r_node] = 0.0;
    r.mass_balance = std::max(r.mass_balance, mb.lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd wy =
        tr.flow[t] - sens.w0[t] - sens.W1[t] * tr.pressure[t] - sens.W2[t] * tr.regulation[t];
    r.weymouth = std::max(r.weymouth, wy.lpNorm<Eigen::Infinity>());
    r.reference = std::max(r.reference, std::abs(tr.pressure[t][r_node] - reference_pressures[t]));
    r.midway = std::max(
        r.midway, (tr.flow[t] - 0.5 * (tr.flow_plus[t] + tr.flow_minus[t])).lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd lp =
        tr.linepack[t] -
        0.5 * s.cwiseProduct(tr.regulation[t] + inc.A_abs.transpose() * tr.pressure[t]);
    r.linepack = std::max(r.linepack, lp.lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd& prev = t == 0 ? psi0 : tr.linepack[t - 1];
    r.dynamics = std::max(
        r.dynamics,
        (tr.linepack[t] - prev - tr.flow_plus[t] + tr.flow_minus[t]).lpNorm<Eigen::Infinity>());
  }
  return r;
}

PolicySet deterministic_response(const PolicySet& plan, const GasNetwork& network,
                                 const IncidenceSet& inc, const Sensitivities& sens,
                                 const UncertaintyModel& model,
                                 const std::vector<int>& closed_edges) {
  (void)closed_edges;
  const int N = network.num_nodes();
  const int E = network.num_edges();
  const int T = model.horizon();
  const int r = network.reference();
  if (plan.horizon() != T) throw DimensionError("deterministic_response: horizon mismatch");
  std::vector<int> cols;
  for (int t = 0; t < T; ++t) cols.push_back(model.cumulative(t));
  PolicySet full = PolicySet::zeros(N, E, cols);

  std::vector<int> pvar(N, -1);
  for (int n = 0, k = 0; n < N; ++n)
    if (n != r) pvar[n] = 4 * E + k++;
  const int size = 4 * E + N - 1;
  const Eigen::VectorXd s = network.linepack_factor();

  for (int t = 0; t < T; ++t) {
    const int K = cols[t];
    const int Kprev = t > 0 ? cols[t - 1] : 0;
    for (auto m : kPolicyMatrices) full[m][t].col(0) = plan[m][t].col(0);
    if (K == 1) continue;

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(size, size);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(size, K - 1);
    int row = 0;
    for (int n = 0; n < N; ++n) {
      if (n == r) continue;
      for (int l = 0; l < E; ++l) {
        M(row, E + l) = inc.A_plus(n, l);
        M(row, 2 * E + l) = inc.A_minus(n, l);
      }
      for (int j = 1; j < K; ++j) rhs(row, j - 1) = -model.extraction(t)(n, j);
      ++row;
    }
    for (int l = 0; l < E; ++l, ++row) {
      M(row, l) = 1.0;
      for (int n = 0; n < N; ++n)
        if (n != r) M(row, pvar[n]) = -sens.W1[t](l, n);
    }
    for (int l = 0; l < E; ++l, ++row) {
      M(row, l) = 1.0;
      M(row, E + l) = -0.5;
      M(row, 2 * E + l) = -0.5;
    }
    for (int l = 0; l < E; ++l, ++row) {
      M(row, 3 * E + l) = 1.0;
      const int n = network.from_index(l);
      const int m = network.to_index(l);
      if (n != r) M(row, pvar[n]) -= 0.5 * s[l];
      if (m != r) M(row, pvar[m]) -= 0.5 * s[l];
    }
    for (int l = 0; l < E; ++l, ++row) {
      M(row, 3 * E + l) = 1.0;
      M(row, E + l) = -1.0;
      M(row, 2 * E + l) = 1.0;
      for (int j = 1; j < Kprev; ++j) rhs(row, j - 1) = full.linepack[t - 1](l, j);
    }
    const Eigen::MatrixXd Z = M.fullPivLu().solve(rhs);

    const Eigen::VectorXd mu = model.mean_prefix(t);
    for (int j = 1; j < K; ++j) {
      const auto z = Z.col(j - 1);
      full.flow[t].col(j) = z.segment(0, E);
      full.flow_plus[t].col(j) = z.segment(E, E);
      full.flow_minus[t].col(j) = z.segment(2 * E, E);
      full.linepack[t].col(j) = z.segment(3 * E, E);
      for (int n = 0; n < N; ++n)
        if (n != r) full.pressure[t](n, j) = z[pvar[n]];
    }
    for (auto m : {PolicyMatrix::flow, PolicyMatrix::flow_plus, PolicyMatrix::flow_minus,
                   PolicyMatrix::linepack, PolicyMatrix::pressure}) {
      auto& X = full[m][t];
      for (int j = 1; j < K; ++j) X.col(0) -= mu[j] * X.col(j);
    }
  }
  return full;
}

namespace {

bool below(double v, double bound) { return v < bound - 1e-6 * std::max(1.0, std::abs(bound)); }
bool above(double v, double bound) { return v > bound + 1e-6 * std::max(1.0, std::abs(bound)); }

// Violation counters keyed in a fixed order: flow_min, terminal, injection,
// regulation, pressure.
struct Counters {
  std::vector<FrequencyEntry> entries;
  std::vector<long> counts;

  Counters(const GasNetwork& net, int T, const std::vector<char>& closed) {
    for (int t = 0; t < T; ++t) {
      for (int l = 0; l < net.num_edges(); ++l)
        if (net.edge(l).active() && !closed[l]) entries.push_back({"flow_min", l, t, 0.0});
      if (t == T - 1)
        for (int l = 0; l < net.num_edges(); ++l) entries.push_back({"terminal_linepack", l, t, 0.0});
      for (int n = 0; n < net.num_nodes(); ++n) entries.push_back({"injection", n, t, 0.0});
      for (int l = 0; l < net.num_edges(); ++l)
        if (net.edge(l).active()) entries.push_back({"regulation", l, t, 0.0});
      for (int n = 0; n < net.num_nodes(); ++n) entries.push_back({"pressure", n, t, 0.0});
    }
    counts.assign(entries.size(), 0);
  }

  void add(const Trajectory& tr, const GasNetwork& net) {
    const Eigen::VectorXd psi0 = net.initial_linepack();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const int t = e.stage;
      bool v = false;
      if (e.family == "flow_min") {
        v = below(tr.flow[t][e.index], 0.0);
      } else if (e.family == "terminal_linepack") {
        v = below(tr.linepack[t][e.index], psi0[e.index]);
      } else if (e.family == "injection") {
        const auto& n = net.node(e.index);
        v = below(tr.injection[t][e.index], n.injection_min) ||
            above(tr.injection[t][e.index], n.injection_max);
      } else if (e.family == "regulation") {
        const auto& ed = net.edge(e.index);
        v = below(tr.regulation[t][e.index], ed.regulation_min) ||
            above(tr.regulation[t][e.index], ed.regulation_max);
      } else {
        const auto& n = net.node(e.index);
        v = below(tr.pressure[t][e.index], n.pressure_min) ||
            above(tr.pressure[t][e.index], n.pressure_max);
      }
      counts[i] += v ? 1 : 0;
    }
  }

  std::vector<FrequencyEntry> finish(long samples) const {
    std::vector<FrequencyEntry> out = entries;
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i].frequency = static_cast<double>(counts[i]) / static_cast<double>(samples);
    return out;
  }
};

}  // namespace

std::vector<FrequencyEntry> empirical_risk(const PolicySet& policy, const GasNetwork& network,
                                           const Eigen::MatrixXd& samples,
                                           const std::vector<int>& closed_edges) {
  if (samples.rows() == 0) throw ConfigError("empirical_risk: empty sample set");
  std::vector<char> closed(network.num_edges(), 0);
  for (int l : closed_edges) closed.at(l) = 1;
  Counters c(network, policy.horizon(), closed);
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    c.add(realize(policy, samples.row(i).transpose()), network);
  return c.finish(samples.rows());
}

double tail_mean(std::vector<double> values, double fraction) {
  if (values.empty()) return 0.0;
  const std::size_t k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(values.size()))));
  std::partial_sort(values.begin(), values.begin() + k, values.end(), std::greater<double>());
  return std::accumulate(values.begin(), values.begin() + k, 0.0) / static_cast<double>(k);
}

ValidationReport evaluate(const PolicySet& policy, const GasNetwork& network,
                          const IncidenceSet& incidence, const Sensitivities& sens,
                          const UncertaintyModel& model,
                          const std::vector<double>& reference_pressures,
                          const Eigen::MatrixXd& samples, bool deterministic,
                          const std::vector<int>& closed_edges) {
  if (samples.rows() == 0) throw ConfigError("evaluate: empty sample set");
  const PolicySet full = deterministic
                             ? deterministic_response(policy, network, incidence, sens, model, closed_edges)
                             : policy;
  const int T = full.horizon();
  const int N = network.num_nodes();
  const long S = samples.rows();
  std::vector<char> closed(network.num_edges(), 0);
  for (int l : closed_edges) closed.at(l) = 1;

  const Eigen::VectorXd c1 = network.cost_linear();
  const Eigen::VectorXd c2 = network.cost_quadratic();
  const auto comps = network.compressor_edges();
  const auto valves = network.valve_edges();

  ValidationReport rep;
  rep.samples = static_cast<int>(S);
  std::vector<double> pviol(S), mviol(S);
  Counters counters(network, T, closed);
  std::vector<Eigen::MatrixXd> inj(T, Eigen::MatrixXd(S, N));

  for (long i = 0; i < S; ++i) {
    const Eigen::VectorXd zeta = samples.row(i).transpose();
    const Trajectory tr = realize(full, zeta);
    double cost = 0.0, pv = 0.0, mv = 0.0;
    for (int t = 0; t < T; ++t) {
      const auto& th = tr.injection[t];
      cost += c1.dot(th) + th.dot(c2.cwiseProduct(th));
      for (int n = 0; n < N; ++n) {
        const auto& node = network.node(n);
        const double p = tr.pressure[t][n];
        pv += std::max(0.0, p - node.pressure_max) + std::max(0.0, node.pressure_min - p);
      }
      mv += mass_residual(tr, t, zeta, incidence, model).norm();
      for (int l : comps) {
        rep.compressor_deployment += tr.regulation[t][l];
        rep.compressor_deployment_abs += std::abs(tr.regulation[t][l]);
      }
      for (int l : valves) {
        rep.valve_deployment += tr.regulation[t][l];
        rep.valve_deployment_abs += std::abs(tr.regulation[t][l]);
      }
      inj[t].row(i) = th.transpose();
    }
    rep.first_stage_injection += tr.injection[0].sum();
    rep.expected_cost += cost;
    pviol[i] = pv;
    mviol[i] = mv;
    counters.add(tr, network);
    const auto res = equality_residuals(tr, zeta, network, incidence, sens, model,
                                        reference_pressures, deterministic);
    rep.max_equality_residual = std::max(rep.max_equality_residual, res.max());
  }

  const double inv = 1.0 / static_cast<double>(S);
  rep.expected_cost *= inv;
  rep.first_stage_injection *= inv;
  rep.compressor_deployment *= 1000.0 * inv;
  rep.valve_deployment *= 1000.0 * inv;
  rep.compressor_deployment_abs *= 1000.0 * inv;
  rep.valve_deployment_abs *= 1000.0 * inv;
  rep.pressure_violation_expected = std::accumulate(pviol.begin(), pviol.end(), 0.0) * inv;
  rep.mass_violation_expected = std::accumulate(mviol.begin(), mviol.end(), 0.0) * inv;
  rep.pressure_violation_worst = tail_mean(pviol);
  rep.mass_violation_worst = tail_mean(mviol);
  rep.frequencies = counters.finish(S);
  for (const auto& f : rep.frequencies)
    rep.max_violation_frequency = std::max(rep.max_violation_frequency, f.frequency);
  rep.variability = variability_value(full, model);

  for (int t = 0; t < T; ++t)
    for (int n = 0; n < N; ++n) {
      const auto col = inj[t].col(n);
      const double mean = col.mean();
      if (std::abs(mean) <= 1e-9) continue;
      const double var = (col.array() - mean).square().sum() / std::max<double>(1.0, S - 1.0);
      rep.max_injection_std_ratio = std::max(rep.max_injection_std_ratio, std::sqrt(var) / std::abs(mean));
    }
  return rep;
}

std::vector<ScenarioRow> scenario_rows(const PolicySet& policy, const UncertaintyModel& model,
                                       const Eigen::MatrixXd& samples) {
  std::vector<ScenarioRow> rows;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const Eigen::VectorXd zeta = samples.row(i).transpose();
    const Trajectory tr = realize(policy, zeta);
    for (int t = 0; t < policy.horizon(); ++t) {
      ScenarioRow r;
      r.stage = t + 1;
      r.sample = static_cast<int>(i);
      if (t < static_cast<int>(model.renewable.size())) {
        const auto& W = model.renewable[t];
        r.renewable = (W * zeta.head(W.cols())).sum();
      } else {
        r.renewable = std::numeric_limits<double>::quiet_NaN();
      }
      const auto& D = model.extraction(t);
      r.extraction = (D * zeta.head(D.cols())).sum();
      r.pressure = tr.pressure[t].sum();
      r.regulation_abs = tr.regulation[t].cwiseAbs().sum();
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace gasnet
