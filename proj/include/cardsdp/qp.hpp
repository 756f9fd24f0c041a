#pragma once

// Convex QP on a fixed support S:
//
//   min xᵀQx  s.t.  μᵀx >= ρ,  eᵀx <= 1,  0 <= x_i <= u_i (i in S),  x_i = 0 (i not in S).
//
// Solved by a dense Mehrotra primal-dual interior-point method on the |S|
// free variables, after an exact greedy pre-check of return attainability.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cardsdp/errors.hpp"
#include "cardsdp/instance.hpp"
#include "cardsdp/linalg.hpp"
#include "cardsdp/sdp.hpp"

namespace cardsdp::qp {

using linalg::Matrix;
using linalg::Vector;

struct QpProblem {
  const Instance* inst = nullptr;
  std::vector<int> support;  ///< free variables; everything else is fixed at 0

  /// Complement of the support.
  std::vector<int> forced_zero() const {
    std::vector<char> in(static_cast<std::size_t>(inst->n()), 0);
    for (int i : support) in[i] = 1;
    std::vector<int> out;
    for (int i = 0; i < inst->n(); ++i) {
      if (!in[i]) out.push_back(i);
    }
    return out;
  }
};

enum class QpStatus { Optimal, Infeasible };

struct QpResult {
  Vector x;  ///< length n, exactly zero off the support
  double objective = 0.0;
  QpStatus status = QpStatus::Infeasible;
  double kkt_residual = 0.0;
  int iterations = 0;
  std::string certificate;  ///< why the support is infeasible
};

/// Largest μᵀx over {0 <= x <= u on S, eᵀx <= 1}: a fractional knapsack
/// with unit weights, filled greedily by descending μ.
inline double max_return(const Instance& inst, std::span<const int> support) {
  std::vector<int> order(support.begin(), support.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return inst.mu()(a) > inst.mu()(b); });
  double budget = 1.0;
  double ret = 0.0;
  for (int i : order) {
    if (inst.mu()(i) <= 0.0 || budget <= 0.0) break;
    const double t = std::min(inst.u()(i), budget);
    ret += inst.mu()(i) * t;
    budget -= t;
  }
  return ret;
}

struct QpOptions {
  int max_iter = 100;
  double tol = 1e-11;  ///< relative residual and gap target
};

namespace detail {

inline std::vector<int> normalized(std::span<const int> support, int n) {
  std::vector<int> s(support.begin(), support.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  for (int i : s) {
    if (i < 0 || i >= n) throw DimensionMismatch("support index out of range");
  }
  return s;
}

}  // namespace detail

inline QpResult solve_qp(const Instance& inst, std::span<const int> support_in,
                         const QpOptions& opt = {}) {
  const int n = inst.n();
  const std::vector<int> support = detail::normalized(support_in, n);
  const int k = static_cast<int>(support.size());
  QpResult res;
  res.x = Vector::Zero(n);

  const double attainable = max_return(inst, support);
  if (attainable < inst.rho() - 1e-12 * (1.0 + std::abs(inst.rho()))) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "max attainable return " << attainable << " < rho " << inst.rho();
    res.status = QpStatus::Infeasible;
    res.certificate = msg.str();
    return res;
  }
  if (k == 0) {
    // rho <= 0 here, so the empty portfolio is optimal.
    res.status = QpStatus::Optimal;
    return res;
  }

  // Reduced data. Inequalities G x <= h with rows
  //   0: -μᵀx <= -ρ,  1: eᵀx <= 1,  2..k+1: -x <= 0,  k+2..2k+1: x <= u.
  Matrix P(k, k);
  Vector mu(k), u(k);
  for (int a = 0; a < k; ++a) {
    mu(a) = inst.mu()(support[a]);
    u(a) = inst.u()(support[a]);
    for (int b = 0; b < k; ++b) P(a, b) = 2.0 * inst.Q()(support[a], support[b]);
  }
  const int p = 2 * k + 2;
  Matrix G = Matrix::Zero(p, k);
  Vector h = Vector::Zero(p);
  G.row(0) = -mu.transpose();
  h(0) = -inst.rho();
  G.row(1).setOnes();
  h(1) = 1.0;
  for (int a = 0; a < k; ++a) {
    G(2 + a, a) = -1.0;
    G(2 + k + a, a) = 1.0;
    h(2 + k + a) = u(a);
  }

  Vector x = Vector::Zero(k);
  Vector s = (h - G * x).cwiseMax(1.0);
  Vector z = Vector::Ones(p);
  const double h_scale = 1.0 + h.cwiseAbs().maxCoeff();
  const double p_scale = 1.0 + P.cwiseAbs().maxCoeff();

  auto residuals = [&](Vector& rd, Vector& rp) {
    rd = P * x + G.transpose() * z;
    rp = G * x + s - h;
  };

  // Looser bar for a stalled solve: near-degenerate supports can leave
  // the dual residual just above tol once the normal equations degrade.
  auto usable = [&](const Vector& rd, const Vector& rp) {
    return rp.cwiseAbs().maxCoeff() <= 1e-8 * h_scale &&
           rd.cwiseAbs().maxCoeff() <= 1e-8 * p_scale && s.dot(z) <= 1e-8;
  };
  Vector rd, rp;
  Vector best_x, best_z;
  bool converged = false;
  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    residuals(rd, rp);
    const double mu_c = s.dot(z) / p;
    const double fval = 0.5 * x.dot(P * x);
    if (rp.cwiseAbs().maxCoeff() <= opt.tol * h_scale &&
        rd.cwiseAbs().maxCoeff() <= opt.tol * p_scale &&
        s.dot(z) <= opt.tol * (1.0 + std::abs(fval))) {
      converged = true;
      break;
    }
    if (usable(rd, rp)) {
      best_x = x;
      best_z = z;
    }
    const Vector d = z.cwiseQuotient(s);
    Matrix K = P + G.transpose() * d.asDiagonal() * G;
    Eigen::LLT<Matrix> chol(K);
    if (chol.info() != Eigen::Success) {
      const double scale = std::max(1.0, K.diagonal().maxCoeff());
      chol.compute(K + 1e-12 * scale * Matrix::Identity(k, k));
      if (chol.info() != Eigen::Success) {
        chol.compute(K + 1e-9 * scale * Matrix::Identity(k, k));
        if (chol.info() != Eigen::Success) {
          throw NumericalFailure("QP normal equations lost positive definiteness");
        }
      }
    }
    // Newton step for complementarity target rc: s∘z -> s∘z - rc.
    auto step = [&](const Vector& rc, Vector& dx, Vector& ds, Vector& dz) {
      const Vector t = (-rc + z.cwiseProduct(rp)).cwiseQuotient(s);
      dx = chol.solve(-rd - G.transpose() * t);
      ds = -rp - G * dx;
      dz = (-rc - z.cwiseProduct(ds)).cwiseQuotient(s);
    };
    auto max_step = [](const Vector& v, const Vector& dv) {
      double a = 1.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
      }
      return a;
    };

    Vector dx, ds, dz;
    step(s.cwiseProduct(z), dx, ds, dz);
    const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / p;
    const double sigma = std::pow(std::clamp(mu_aff / mu_c, 0.0, 1.0), 3.0);
    const Vector rc = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Vector::Constant(p, sigma * mu_c);
    step(rc, dx, ds, dz);
    double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
    // The second-order term can stall complementarity in a short cycle;
    // fall back to a plain centered Newton step when it does not help.
    const double mu_new = (s + alpha * ds).dot(z + alpha * dz) / p;
    if (mu_new > (1.0 - 0.1 * alpha) * mu_c) {
      step(s.cwiseProduct(z) - Vector::Constant(p, std::max(sigma, 0.1) * mu_c), dx, ds, dz);
      alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
    }
    if (alpha < 1e-10) break;  // no progress left to make
    x += alpha * dx;
    s += alpha * ds;
    z += alpha * dz;
  }
  res.iterations = iter;
  residuals(rd, rp);
  if (!converged && !usable(rd, rp)) {
    if (best_x.size() == 0) throw NumericalFailure("QP interior-point method did not converge");
    x = best_x;
    z = best_z;
  }

  // Interior iterates never touch the box, but clamp against round-off.
  x = x.cwiseMax(0.0).cwiseMin(u);
  for (int a = 0; a < k; ++a) res.x(support[a]) = x(a);
  res.objective = inst.risk(res.x);
  res.status = QpStatus::Optimal;

  const Vector viol = (G * x - h).cwiseMax(0.0);
  const Vector stat = P * x + G.transpose() * z;
  const Vector compl_ = (h - G * x).cwiseProduct(z);
  res.kkt_residual = std::max({stat.cwiseAbs().maxCoeff(), viol.maxCoeff(),
                               compl_.cwiseAbs().maxCoeff()});
  return res;
}

inline QpResult solve_qp(const QpProblem& p, const QpOptions& opt = {}) {
  return solve_qp(*p.inst, p.support, opt);
}

/// The same QP as a conic problem for the SDP solver (independent second
/// route). With Q_S = L Lᵀ the PSD block is
///
///   [ t   wᵀ ]
///   [ w   I  ]   with w = Lᵀ x,
///
/// so M ⪰ 0 iff t >= xᵀQ_S x and the objective is t = M_00. The slack block
/// holds x (k entries), then the return, budget and k upper-bound slacks.
inline sdp::ConicProblem build_epigraph_problem(const Instance& inst,
                                                std::span<const int> support_in) {
  const std::vector<int> support = detail::normalized(support_in, inst.n());
  const int k = static_cast<int>(support.size());
  Matrix qs(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) qs(a, b) = inst.Q()(support[a], support[b]);
  }
  const auto eig = linalg::sym_eig(qs);
  const Matrix L = eig.vectors * eig.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();

  sdp::ConicProblem p;
  p.psd_dim = k + 1;
  p.slack_dim = 2 * k + 2;
  Matrix c = Matrix::Zero(k + 1, k + 1);
  c(0, 0) = 1.0;
  p.objective = linalg::SymMatrix(c);
  p.slack_objective = Vector::Zero(p.slack_dim);
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      sdp::Constraint con;
      con.psd.add(1 + i, 1 + j, i == j ? 1.0 : 0.5);
      con.rhs = i == j ? 1.0 : 0.0;
      con.label = "identity";
      p.constraints.push_back(std::move(con));
    }
  }
  for (int j = 0; j < k; ++j) {
    sdp::Constraint con;
    con.psd.add(0, 1 + j, 0.5);
    for (int a = 0; a < k; ++a) {
      if (L(a, j) != 0.0) con.slack.push_back({a, -L(a, j)});
    }
    con.label = "w = Lᵀx";
    p.constraints.push_back(std::move(con));
  }
  {
    sdp::Constraint con;
    for (int a = 0; a < k; ++a) con.slack.push_back({a, inst.mu()(support[a])});
    con.slack.push_back({k, -1.0});
    con.rhs = inst.rho();
    con.label = "return";
    p.constraints.push_back(std::move(con));
  }
  {
    sdp::Constraint con;
    for (int a = 0; a < k; ++a) con.slack.push_back({a, 1.0});
    con.slack.push_back({k + 1, 1.0});
    con.rhs = 1.0;
    con.label = "budget";
    p.constraints.push_back(std::move(con));
  }
  for (int a = 0; a < k; ++a) {
    sdp::Constraint con;
    con.slack.push_back({a, 1.0});
    con.slack.push_back({k + 2 + a, 1.0});
    con.rhs = inst.u()(support[a]);
    con.label = "upper";
    p.constraints.push_back(std::move(con));
  }
  return p;
}

}  // namespace cardsdp::qp
