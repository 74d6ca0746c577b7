#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "gasnet/conic.hpp"
#include "gasnet/errors.hpp"

namespace gasnet {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Block {
  ConeType type;
  int start;
  int dim;
};

struct Layout {
  std::vector<Block> blocks;
  int n = 0;
  int degree = 0;

  explicit Layout(const std::vector<Cone>& cones) {
    for (const auto& c : cones) {
      blocks.push_back({c.type, n, c.dim});
      n += c.dim;
      if (c.type == ConeType::nonnegative) degree += c.dim;
      if (c.type == ConeType::second_order) degree += 1;
    }
  }
};

// Nesterov-Todd scaling W with W^2 x = s, W x = W^{-1} s = lambda.
struct Scaling {
  std::vector<double> w;      // per coordinate, nonnegative blocks: sqrt(s/x)
  std::vector<double> eta;    // per block (second-order only)
  std::vector<double> a;
  std::vector<VectorXd> q;
  std::vector<MatrixXd> W2;   // dense W^2 per second-order block
};

double soc_residual(const double* v, int dim) {
  double t = 0.0;
  for (int i = 1; i < dim; ++i) t += v[i] * v[i];
  t = std::sqrt(t);
  return (v[0] - t) * (v[0] + t);
}

bool interior(const Layout& L, const VectorXd& x, const VectorXd& s) {
  for (const auto& B : L.blocks) {
    if (B.type == ConeType::nonnegative) {
      for (int i = B.start; i < B.start + B.dim; ++i)
        if (!(x[i] > 0.0) || !(s[i] > 0.0)) return false;
    } else if (B.type == ConeType::second_order) {
      if (!(x[B.start] > 0.0) || !(s[B.start] > 0.0) ||
          !(soc_residual(x.data() + B.start, B.dim) > 0.0) ||
          !(soc_residual(s.data() + B.start, B.dim) > 0.0))
        return false;
    }
  }
  return true;
}

// Returns false when x or s leaves the interior.
bool compute_scaling(const Layout& L, const VectorXd& x, const VectorXd& s, Scaling& sc) {
  sc.w.assign(L.n, 0.0);
  sc.eta.assign(L.blocks.size(), 0.0);
  sc.a.assign(L.blocks.size(), 0.0);
  sc.q.resize(L.blocks.size());
  sc.W2.resize(L.blocks.size());
  for (std::size_t b = 0; b < L.blocks.size(); ++b) {
    const auto& B = L.blocks[b];
    if (B.type == ConeType::nonnegative) {
      for (int i = B.start; i < B.start + B.dim; ++i) {
        if (!(x[i] > 0.0) || !(s[i] > 0.0)) return false;
        sc.w[i] = std::sqrt(s[i] / x[i]);
      }
    } else if (B.type == ConeType::second_order) {
      const int d = B.dim;
      const double xres = soc_residual(x.data() + B.start, d);
      const double sres = soc_residual(s.data() + B.start, d);
      if (!(xres > 0.0) || !(sres > 0.0) || !(x[B.start] > 0.0) || !(s[B.start] > 0.0))
        return false;
      const double xr = std::sqrt(xres);
      const double sr = std::sqrt(sres);
      VectorXd xb = x.segment(B.start, d) / xr;
      VectorXd sb = s.segment(B.start, d) / sr;
      const double gamma = std::sqrt(0.5 * (1.0 + xb.dot(sb)));
      if (!(gamma > 0.0) || !std::isfinite(gamma)) return false;
      const double eta = std::sqrt(sr / xr);
      const double a = (sb[0] + xb[0]) / (2.0 * gamma);
      VectorXd q = (sb.tail(d - 1) - xb.tail(d - 1)) / (2.0 * gamma);
      sc.eta[b] = eta;
      sc.a[b] = a;
      sc.q[b] = q;
      MatrixXd W(d, d);
      W(0, 0) = a;
      W.block(0, 1, 1, d - 1) = q.transpose();
      W.block(1, 0, d - 1, 1) = q;
      W.block(1, 1, d - 1, d - 1) =
          MatrixXd::Identity(d - 1, d - 1) + q * q.transpose() / (1.0 + a);
      W *= eta;
      sc.W2[b] = W * W;
      if (!sc.W2[b].allFinite()) return false;
    }
  }
  return true;
}

void apply_W(const Layout& L, const Scaling& sc, const VectorXd& v, VectorXd& out, bool inverse) {
  out.setZero(L.n);
  for (std::size_t b = 0; b < L.blocks.size(); ++b) {
    const auto& B = L.blocks[b];
    if (B.type == ConeType::nonnegative) {
      for (int i = B.start; i < B.start + B.dim; ++i)
        out[i] = inverse ? v[i] / sc.w[i] : v[i] * sc.w[i];
    } else if (B.type == ConeType::second_order) {
      const int d = B.dim;
      const double a = sc.a[b];
      const double eta = sc.eta[b];
      const VectorXd& q = sc.q[b];
      const double v0 = v[B.start];
      auto v1 = v.segment(B.start + 1, d - 1);
      const double qv = q.dot(v1);
      const double sgn = inverse ? -1.0 : 1.0;
      const double scale = inverse ? 1.0 / eta : eta;
      out[B.start] = scale * (a * v0 + sgn * qv);
      out.segment(B.start + 1, d - 1) = scale * (sgn * v0 * q + v1 + (qv / (1.0 + a)) * q);
    }
  }
}

void apply_H(const Layout& L, const Scaling& sc, const VectorXd& v, VectorXd& out) {
  out.setZero(L.n);
  for (std::size_t b = 0; b < L.blocks.size(); ++b) {
    const auto& B = L.blocks[b];
    if (B.type == ConeType::nonnegative) {
      for (int i = B.start; i < B.start + B.dim; ++i) out[i] = sc.w[i] * sc.w[i] * v[i];
    } else if (B.type == ConeType::second_order) {
      out.segment(B.start, B.dim) = sc.W2[b] * v.segment(B.start, B.dim);
    }
  }
}

// u o v (Jordan product), zero on free coordinates.
VectorXd cone_product(const Layout& L, const VectorXd& u, const VectorXd& v) {
  VectorXd out = VectorXd::Zero(L.n);
  for (const auto& B : L.blocks) {
    if (B.type == ConeType::nonnegative) {
      out.segment(B.start, B.dim) = u.segment(B.start, B.dim).cwiseProduct(v.segment(B.start, B.dim));
    } else if (B.type == ConeType::second_order) {
      const int d = B.dim;
      out[B.start] = u.segment(B.start, d).dot(v.segment(B.start, d));
      out.segment(B.start + 1, d - 1) =
          u[B.start] * v.segment(B.start + 1, d - 1) + v[B.start] * u.segment(B.start + 1, d - 1);
    }
  }
  return out;
}

// v with lambda o v = w.
VectorXd cone_division(const Layout& L, const VectorXd& lambda, const VectorXd& w) {
  VectorXd out = VectorXd::Zero(L.n);
  for (const auto& B : L.blocks) {
    if (B.type == ConeType::nonnegative) {
      out.segment(B.start, B.dim) = w.segment(B.start, B.dim).cwiseQuotient(lambda.segment(B.start, B.dim));
    } else if (B.type == ConeType::second_order) {
      const int d = B.dim;
      const double l0 = lambda[B.start];
      auto l1 = lambda.segment(B.start + 1, d - 1);
      const double rho = soc_residual(lambda.data() + B.start, d);
      const double nu = l1.dot(w.segment(B.start + 1, d - 1));
      const double v0 = (l0 * w[B.start] - nu) / rho;
      out[B.start] = v0;
      out.segment(B.start + 1, d - 1) = (w.segment(B.start + 1, d - 1) - v0 * l1) / l0;
    }
  }
  return out;
}

VectorXd identity_element(const Layout& L) {
  VectorXd e = VectorXd::Zero(L.n);
  for (const auto& B : L.blocks) {
    if (B.type == ConeType::nonnegative) e.segment(B.start, B.dim).setOnes();
    if (B.type == ConeType::second_order) e[B.start] = 1.0;
  }
  return e;
}

double smallest_positive_root(double A, double B, double C) {
  // f(t) = A t^2 + 2 B t + C with C > 0.
  if (A == 0.0) return B < 0.0 ? -C / (2.0 * B) : kInf;
  const double disc = B * B - A * C;
  if (disc < 0.0) return kInf;
  const double sq = std::sqrt(disc);
  const double qq = -(B + (B >= 0.0 ? sq : -sq));
  double best = kInf;
  if (qq != 0.0) {
    const double r1 = qq / A;
    const double r2 = C / qq;
    if (r1 > 0.0) best = std::min(best, r1);
    if (r2 > 0.0) best = std::min(best, r2);
  }
  return best;
}

// Largest t with lambda + t d in the cone.
double max_step(const Layout& L, const VectorXd& lambda, const VectorXd& d) {
  double alpha = kInf;
  for (const auto& B : L.blocks) {
    if (B.type == ConeType::nonnegative) {
      for (int i = B.start; i < B.start + B.dim; ++i)
        if (d[i] < 0.0) alpha = std::min(alpha, -lambda[i] / d[i]);
    } else if (B.type == ConeType::second_order) {
      const int dim = B.dim;
      auto l = lambda.segment(B.start, dim);
      auto v = d.segment(B.start, dim);
      const double A = v[0] * v[0] - v.tail(dim - 1).squaredNorm();
      const double Bc = l[0] * v[0] - l.tail(dim - 1).dot(v.tail(dim - 1));
      const double C = soc_residual(lambda.data() + B.start, dim);
      alpha = std::min(alpha, smallest_positive_root(A, Bc, C));
      if (v[0] < 0.0) alpha = std::min(alpha, -l[0] / v[0]);
    }
  }
  return alpha;
}

// Shift v into the interior: v + (1 + alpha) e when the least margin -alpha
// is below 1.
void bring_to_cone(const Layout& L, VectorXd& v) {
  double margin = kInf;
  for (const auto& B : L.blocks) {
    if (B.type == ConeType::nonnegative) {
      for (int i = B.start; i < B.start + B.dim; ++i) margin = std::min(margin, v[i]);
    } else if (B.type == ConeType::second_order) {
      margin = std::min(margin, v[B.start] - v.segment(B.start + 1, B.dim - 1).norm());
    }
  }
  if (margin == kInf) return;
  if (margin < 1.0) {
    const double shift = 1.0 - margin;
    for (const auto& B : L.blocks) {
      if (B.type == ConeType::nonnegative) v.segment(B.start, B.dim).array() += shift;
      if (B.type == ConeType::second_order) v[B.start] += shift;
    }
  }
}

// Reduced KKT matrix [H + dI, A^T; A, -dI] in lower-triangular CSC storage
// with cached value positions, factored by a sparse LDL^T.
class Kkt {
 public:
  Kkt(const Layout& L, const SpMat& A, double delta) : L_(L), A_(A), delta_(delta) {
    const int n = L.n;
    const int m = static_cast<int>(A.rows());
    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& B : L.blocks) {
      if (B.type == ConeType::second_order) {
        for (int j = 0; j < B.dim; ++j)
          for (int i = j; i < B.dim; ++i) trips.emplace_back(B.start + i, B.start + j, 1.0);
      } else {
        for (int i = B.start; i < B.start + B.dim; ++i) trips.emplace_back(i, i, 1.0);
      }
    }
    for (int j = 0; j < A.outerSize(); ++j)
      for (SpMat::InnerIterator it(A, j); it; ++it) trips.emplace_back(n + it.row(), j, 1.0);
    for (int r = 0; r < m; ++r) trips.emplace_back(n + r, n + r, 1.0);
    K_.resize(n + m, n + m);
    K_.setFromTriplets(trips.begin(), trips.end());
    K_.makeCompressed();

    auto pos = [&](int i, int j) {
      const int* inner = K_.innerIndexPtr();
      const int lo = K_.outerIndexPtr()[j];
      const int hi = K_.outerIndexPtr()[j + 1];
      return static_cast<int>(std::lower_bound(inner + lo, inner + hi, i) - inner);
    };
    double* val = K_.valuePtr();
    for (const auto& B : L.blocks) {
      if (B.type == ConeType::second_order) {
        for (int j = 0; j < B.dim; ++j)
          for (int i = j; i < B.dim; ++i) h_pos_.push_back(pos(B.start + i, B.start + j));
      } else {
        for (int i = B.start; i < B.start + B.dim; ++i) h_pos_.push_back(pos(i, i));
      }
    }
    for (int j = 0; j < A.outerSize(); ++j)
      for (SpMat::InnerIterator it(A, j); it; ++it) val[pos(n + it.row(), j)] = it.value();
    for (int r = 0; r < m; ++r) val[pos(n + r, n + r)] = -delta_;
    ldlt_.analyzePattern(K_);
  }

  // Loads H = W^2 (identity when sc is null) and factors.
  bool factor(const Scaling* sc) {
    sc_ = sc;
    double* val = K_.valuePtr();
    std::size_t k = 0;
    for (std::size_t b = 0; b < L_.blocks.size(); ++b) {
      const auto& B = L_.blocks[b];
      if (B.type == ConeType::second_order) {
        for (int j = 0; j < B.dim; ++j)
          for (int i = j; i < B.dim; ++i) {
            double h = sc ? sc->W2[b](i, j) : (i == j ? 1.0 : 0.0);
            val[h_pos_[k++]] = h + (i == j ? delta_ : 0.0);
          }
      } else {
        for (int i = B.start; i < B.start + B.dim; ++i) {
          double h = 0.0;
          if (B.type == ConeType::nonnegative) h = sc ? sc->w[i] * sc->w[i] : 1.0;
          val[h_pos_[k++]] = h + delta_;
        }
      }
    }
    ldlt_.factorize(K_);
    return ldlt_.info() == Eigen::Success;
  }

  // Solves [H A^T; A 0] [u; v] = [top; bottom] by refinement on the
  // regularized factor.
  void solve(const VectorXd& top, const VectorXd& bottom, VectorXd& u, VectorXd& v,
             int refine) const {
    const int n = L_.n;
    const int m = static_cast<int>(A_.rows());
    VectorXd rhs(n + m);
    rhs << top, bottom;
    VectorXd sol = ldlt_.solve(rhs);
    const double target = 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    double last = kInf;
    VectorXd res(n + m), Hu(n);
    for (int it = 0; it <= refine; ++it) {
      residual(rhs, sol, res, Hu);
      const double r = res.lpNorm<Eigen::Infinity>();
      if (r <= target || it == refine) break;
      if (r > 0.5 * last) break;
      last = r;
      sol += ldlt_.solve(res);
    }
    u = sol.head(n);
    v = sol.tail(m);
  }

 private:
  void residual(const VectorXd& rhs, const VectorXd& sol, VectorXd& res, VectorXd& Hu) const {
    const int n = L_.n;
    const int m = static_cast<int>(A_.rows());
    const auto u = sol.head(n);
    const auto v = sol.tail(m);
    if (sc_) {
      apply_H(L_, *sc_, u, Hu);
    } else {
      Hu.setZero(n);
      for (const auto& B : L_.blocks)
        if (B.type != ConeType::free) Hu.segment(B.start, B.dim) = u.segment(B.start, B.dim);
    }
    res.head(n) = rhs.head(n) - Hu - A_.transpose() * v;
    res.tail(m) = rhs.tail(m) - A_ * u;
  }

  const Layout& L_;
  const SpMat& A_;
  double delta_;
  SpMat K_;
  std::vector<int> h_pos_;
  const Scaling* sc_ = nullptr;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

// Ruiz equilibration with one column scale per second-order block.
void equilibrate(const Layout& L, SpMat& A, int passes, VectorXd& Dr, VectorXd& Dc) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  Dr = VectorXd::Ones(m);
  Dc = VectorXd::Ones(n);
  auto clamp = [](double v) { return v == 0.0 ? 1.0 : std::clamp(v, 1e-4, 1e4); };
  for (int p = 0; p < passes; ++p) {
    VectorXd rmax = VectorXd::Zero(m);
    VectorXd cmax = VectorXd::Zero(n);
    for (int j = 0; j < A.outerSize(); ++j)
      for (SpMat::InnerIterator it(A, j); it; ++it) {
        const double v = std::abs(it.value());
        rmax[it.row()] = std::max(rmax[it.row()], v);
        cmax[j] = std::max(cmax[j], v);
      }
    for (const auto& B : L.blocks) {
      if (B.type != ConeType::second_order) continue;
      const double mx = cmax.segment(B.start, B.dim).maxCoeff();
      cmax.segment(B.start, B.dim).setConstant(mx);
    }
    double spread = 0.0;
    VectorXd r(m), c(n);
    for (int i = 0; i < m; ++i) {
      r[i] = 1.0 / std::sqrt(clamp(rmax[i]));
      if (rmax[i] > 0.0) spread = std::max(spread, std::abs(1.0 - rmax[i]));
    }
    for (int j = 0; j < n; ++j) {
      c[j] = 1.0 / std::sqrt(clamp(cmax[j]));
      if (cmax[j] > 0.0) spread = std::max(spread, std::abs(1.0 - cmax[j]));
    }
    if (spread < 1e-3) break;
    A = r.asDiagonal() * A * c.asDiagonal();
    Dr = Dr.cwiseProduct(r);
    Dc = Dc.cwiseProduct(c);
  }
}

struct Metrics {
  double pres, dres, pcost, dcost, gap, relgap, score;
};

}  // namespace

Solution InteriorPointSolver::solve(const ConicProgram& program, const SolverSettings& st) const {
  program.check();
  const auto t_start = std::chrono::steady_clock::now();
  const Layout L(program.cones);
  const int n = L.n;
  const int m = program.num_equalities();

  SpMat A = program.A;
  VectorXd Dr, Dc;
  equilibrate(L, A, st.equilibration_passes, Dr, Dc);
  SpMat At = A.transpose();
  const VectorXd b = Dr.cwiseProduct(program.b);
  const VectorXd c = Dc.cwiseProduct(program.c);
  const double bnorm = program.b.norm();
  const double cnorm = program.c.norm();
  const VectorXd e = identity_element(L);

  std::vector<char> is_free(n, 0);
  for (const auto& B : L.blocks)
    if (B.type == ConeType::free) std::fill(is_free.begin() + B.start, is_free.begin() + B.start + B.dim, 1);
  auto zero_free = [&](VectorXd& v) {
    for (int i = 0; i < n; ++i)
      if (is_free[i]) v[i] = 0.0;
  };

  Solution sol;
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  auto metrics = [&](const VectorXd& x, const VectorXd& y, const VectorXd& s, double tau) {
    Metrics M;
    const VectorXd xo = Dc.cwiseProduct(x) / tau;
    const VectorXd yo = Dr.cwiseProduct(y) / tau;
    const VectorXd so = s.cwiseQuotient(Dc) / tau;
    M.pres = (program.A * xo - program.b).norm();
    M.dres = (program.c - program.A.transpose() * yo - so).norm();
    M.pcost = program.c.dot(xo) + program.offset;
    M.dcost = program.b.dot(yo) + program.offset;
    M.gap = std::max(0.0, xo.dot(so));
    const double scale = std::max(1.0, std::min(std::abs(M.pcost), std::abs(M.dcost)));
    M.relgap = std::max(M.gap, std::abs(M.pcost - M.dcost)) / scale;
    M.score = std::max({M.pres / (1.0 + bnorm), M.dres / (1.0 + cnorm), M.relgap});
    return M;
  };

  auto finish_optimal = [&](const VectorXd& x, const VectorXd& y, const VectorXd& s, double tau,
                            const Metrics& M, int iters) {
    sol.status = SolveStatus::optimal;
    sol.x = Dc.cwiseProduct(x) / tau;
    sol.y = Dr.cwiseProduct(y) / tau;
    sol.s = s.cwiseQuotient(Dc) / tau;
    sol.objective = M.pcost;
    sol.dual_objective = M.dcost;
    sol.primal_residual = M.pres;
    sol.dual_residual = M.dres;
    sol.gap = M.gap;
    sol.relative_gap = M.relgap;
    sol.iterations = iters;
    sol.seconds = elapsed();
    return sol;
  };

  // Empty cone part: pure linear system.
  Kkt kkt(L, A, st.static_regularization);
  if (!kkt.factor(nullptr)) throw NumericalError("KKT factorization failed at initialization");

  VectorXd x, y, s, u, v;
  kkt.solve(VectorXd::Zero(n), b, u, v, st.refinement_steps);
  x = u;
  {
    VectorXd xc = x;
    bring_to_cone(L, xc);
    for (int i = 0; i < n; ++i)
      if (!is_free[i]) x[i] = xc[i];
  }
  kkt.solve(c, VectorXd::Zero(m), u, v, st.refinement_steps);
  y = v;
  s = u;
  zero_free(s);
  bring_to_cone(L, s);
  zero_free(s);
  double tau = 1.0, kappa = 1.0;

  struct Iterate {
    VectorXd x, y, s;
    double tau = 1.0, kappa = 1.0;
    Metrics M{kInf, kInf, 0, 0, kInf, kInf, kInf};
    int iter = 0;
  } best;

  Scaling sc;
  VectorXd Wdx, Winv_ds, lambda;
  const double nu = static_cast<double>(L.degree);
  int iter = 0;
  double sigma = 0.0, step = 0.0;

  for (;; ++iter) {
    const Metrics M = metrics(x, y, s, tau);
    if (st.verbose)
      std::fprintf(stderr, "%3d  pcost % .9e  dcost % .9e  pres %.2e  dres %.2e  gap %.2e  tau %.2e  kap %.2e\n",
                   iter, M.pcost, M.dcost, M.pres, M.dres, M.gap, tau, kappa);
    sol.trace.push_back({iter, M.pcost, M.dcost, M.pres, M.dres, M.gap, tau, kappa, step, sigma});
    if (std::isfinite(M.score) && M.score < best.M.score) {
      best.x = x;
      best.y = y;
      best.s = s;
      best.tau = tau;
      best.kappa = kappa;
      best.M = M;
      best.iter = iter;
    }

    if (M.pres <= st.feasibility_tolerance * (1.0 + bnorm) &&
        M.dres <= st.feasibility_tolerance * (1.0 + cnorm) && M.relgap <= st.gap_tolerance)
      return finish_optimal(x, y, s, tau, M, iter);

    // Infeasibility certificates in original units.
    const double bty = b.dot(y);
    if (bty > 0.0 && kappa > 1e-3 * tau) {
      const VectorXd yc = Dr.cwiseProduct(y) / bty;
      const VectorXd scert = s.cwiseQuotient(Dc) / bty;
      const double res = (program.A.transpose() * yc + scert).norm();
      if (res <= st.infeasibility_tolerance * std::max(1.0, yc.norm() + scert.norm()) &&
          tau < kappa) {
        sol.status = SolveStatus::primal_infeasible;
        sol.y = yc;
        sol.s = scert;
        sol.x = VectorXd::Zero(program.num_variables());
        sol.primal_residual = res;
        sol.objective = kInf;
        sol.dual_objective = kInf;
        sol.iterations = iter;
        sol.seconds = elapsed();
        return sol;
      }
    }
    const double ctx = c.dot(x);
    if (ctx < 0.0 && kappa > 1e-3 * tau) {
      const VectorXd xc = Dc.cwiseProduct(x) / (-ctx);
      const double res = (program.A * xc).norm();
      if (res <= st.infeasibility_tolerance * std::max(1.0, xc.norm()) && tau < kappa) {
        sol.status = SolveStatus::dual_infeasible;
        sol.x = xc;
        sol.y = VectorXd::Zero(m);
        sol.s = VectorXd::Zero(program.num_variables());
        sol.dual_residual = res;
        sol.objective = -kInf;
        sol.dual_objective = -kInf;
        sol.iterations = iter;
        sol.seconds = elapsed();
        return sol;
      }
    }

    if (iter >= st.max_iterations) break;

    if (!compute_scaling(L, x, s, sc)) {
      if (best.M.score <= st.reduced_tolerance)
        return finish_optimal(best.x, best.y, best.s, best.tau, best.M, iter);
      throw NumericalError("non-positive Nesterov-Todd scaling at iteration " +
                           std::to_string(iter));
    }
    if (!kkt.factor(&sc)) {
      if (best.M.score <= st.reduced_tolerance)
        return finish_optimal(best.x, best.y, best.s, best.tau, best.M, iter);
      throw NumericalError("KKT factorization failed at iteration " + std::to_string(iter));
    }
    apply_W(L, sc, x, lambda, false);
    const double mu = (s.dot(x) + tau * kappa) / (nu + 1.0);

    const VectorXd rp = tau * b - A * x;
    VectorXd rd = tau * c - At * y - s;
    const double rg = kappa + c.dot(x) - b.dot(y);

    VectorXd x1, v1;
    kkt.solve(-c, b, x1, v1, st.refinement_steps);
    const VectorXd y1 = -v1;
    const double denom_base = c.dot(x1) - b.dot(y1) - kappa / tau;

    // One Newton direction for given eta, q (= lambda \ r_c) and r_tau.
    struct Dir {
      VectorXd dx, dy, Wdx, Winv_ds;
      double dtau, dkappa;
    };
    auto direction = [&](double eta, const VectorXd& q, double rtau) {
      Dir d;
      VectorXd Wq;
      apply_W(L, sc, q, Wq, false);
      VectorXd x2, v2;
      kkt.solve(-eta * rd + Wq, eta * rp, x2, v2, st.refinement_steps);
      const VectorXd y2 = -v2;
      d.dtau = (-eta * rg - rtau / tau - c.dot(x2) + b.dot(y2)) / denom_base;
      d.dx = x2 + d.dtau * x1;
      d.dy = y2 + d.dtau * y1;
      d.dkappa = (rtau - kappa * d.dtau) / tau;
      apply_W(L, sc, d.dx, d.Wdx, false);
      d.Winv_ds = q - d.Wdx;
      return d;
    };
    auto step_length = [&](const Dir& d) {
      double a = std::min(max_step(L, lambda, d.Wdx), max_step(L, lambda, d.Winv_ds));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    // Predictor.
    const VectorXd neg_lambda = -lambda;
    const Dir aff = direction(1.0, neg_lambda, -tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(aff));
    sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

    // Corrector.
    VectorXd rc = -cone_product(L, lambda, lambda) - cone_product(L, aff.Wdx, aff.Winv_ds) + sigma * mu * e;
    const VectorXd q = cone_division(L, lambda, rc);
    const double rtau = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
    const Dir d = direction(1.0 - sigma, q, rtau);
    step = std::min(1.0, st.step_fraction * step_length(d));
    if (!std::isfinite(step) || !(step > 1e-12)) break;

    VectorXd ds;
    apply_W(L, sc, d.Winv_ds, ds, false);
    // same direction with the dual equation imposed exactly; W-products lose
    // digits near the optimum
    VectorXd ds_exact = (1.0 - sigma) * rd + d.dtau * c - At * d.dy;
    zero_free(ds_exact);
    VectorXd xn, sn;
    for (int tries = 0;; ++tries) {
      xn = x + step * d.dx;
      sn = s + step * ds_exact;
      if (interior(L, xn, sn)) break;
      sn = s + step * ds;
      zero_free(sn);
      if (interior(L, xn, sn) || tries == 40) break;
      step *= 0.7;
    }
    x = std::move(xn);
    s = std::move(sn);
    y += step * d.dy;
    tau += step * d.dtau;
    kappa += step * d.dkappa;
    if (!x.allFinite() || !y.allFinite() || !s.allFinite() || !std::isfinite(tau) ||
        !std::isfinite(kappa))
      break;
  }

  if (best.M.score <= st.reduced_tolerance)
    return finish_optimal(best.x, best.y, best.s, best.tau, best.M, iter);
  sol.status = SolveStatus::iteration_limit;
  if (best.x.size() == n) {
    finish_optimal(best.x, best.y, best.s, best.tau, best.M, iter);
    sol.status = SolveStatus::iteration_limit;
  }
  sol.iterations = iter;
  sol.seconds = elapsed();
  return sol;
}

}  // namespace gasnet
