#pragma once

// Dense infeasible-start primal-dual interior-point method for
//
//   (P)  min <C, M> + c_sᵀ s   s.t.  A(M, s) = b,  M ⪰ 0,  s >= 0
//   (D)  max bᵀy               s.t.  C - A*_M(y) = S ⪰ 0,  c_s - A*_s(y) = z >= 0
//
// Search directions use Nesterov–Todd scaling on both cones and a Mehrotra
// predictor-corrector. The normal equations (Schur complement)
//
//   H_kl = <A_k, W A_l W> + a_kᵀ D a_l,     W S W = M,  D = diag(s / z)
//
// are formed densely and factored by Cholesky.

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "cardsdp/linalg.hpp"
#include "cardsdp/sdp.hpp"

namespace cardsdp::ipm {

using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

struct SolverConfig {
  double gap_tol = 1e-8;        ///< relative duality gap
  double feas_tol = 1e-8;       ///< relative primal and dual residuals
  int max_iter = 100;
  double step_fraction = 0.98;  ///< fraction-to-boundary
  bool verbose = false;         ///< per-iteration log on stderr

  void validate() const {
    if (!(gap_tol > 0.0) || !(feas_tol > 0.0)) {
      throw ValidationError("solver_config", "tolerances must be positive");
    }
    if (max_iter < 1) throw ValidationError("solver_config", "max_iter must be >= 1");
    if (!(step_fraction > 0.0 && step_fraction < 1.0)) {
      throw ValidationError("solver_config", "step_fraction must lie in (0, 1)");
    }
  }
};

enum class Status {
  Optimal,
  MaxIter,
  PrimalInfeasibleSuspected,
  DualInfeasibleSuspected,
  NumericalFailure,
};

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::MaxIter: return "MaxIter";
    case Status::PrimalInfeasibleSuspected: return "PrimalInfeasibleSuspected";
    case Status::DualInfeasibleSuspected: return "DualInfeasibleSuspected";
    case Status::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

struct IterationLog {
  int iter;
  double primal_obj;
  double dual_obj;
  double rel_gap;
  double primal_res;
  double dual_res;
  double step_primal;  ///< step taken to reach the next iterate
  double step_dual;
  double mu;
};

struct SdpSolution {
  SymMatrix M;
  Vector slacks;
  Vector dual_y;
  SymMatrix dual_S;
  Vector dual_z;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double rel_gap = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  int iterations = 0;
  Status status = Status::NumericalFailure;
  double wall_time = 0.0;
  std::vector<IterationLog> history;
};

namespace detail {

struct FullEntry {
  int row;
  int col;
  double value;
};

// Both triangles of each constraint's PSD coefficient matrix.
inline std::vector<std::vector<FullEntry>> expand(const sdp::ConicProblem& p) {
  std::vector<std::vector<FullEntry>> out(p.constraints.size());
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    for (const auto& e : p.constraints[k].psd.entries) {
      out[k].push_back({e.row, e.col, e.value});
      if (e.row != e.col) out[k].push_back({e.col, e.row, e.value});
    }
  }
  return out;
}

struct SlackUse {
  int constraint;
  double value;
};

inline std::vector<std::vector<SlackUse>> slack_columns(const sdp::ConicProblem& p) {
  std::vector<std::vector<SlackUse>> cols(static_cast<std::size_t>(p.slack_dim));
  for (int k = 0; k < p.num_constraints(); ++k) {
    for (const auto& t : p.constraints[k].slack) cols[t.index].push_back({k, t.value});
  }
  return cols;
}

// Nesterov–Todd scaling of the PSD pair (M, S): W = R Rᵀ with
// R⁻¹ M R⁻ᵀ = Rᵀ S R = diag(lambda).
struct PsdScaling {
  Matrix R;
  Matrix Rinv;
  Matrix W;
  Vector lambda;
};

inline bool nt_scaling(const Matrix& m, const Matrix& s, PsdScaling& out) {
  Eigen::LLT<Matrix> lm(m);
  Eigen::LLT<Matrix> ls(s);
  if (lm.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
  const Matrix Lm = lm.matrixL();
  const Matrix Ls = ls.matrixL();
  Eigen::BDCSVD<Matrix> svd(Ls.transpose() * Lm, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.lambda = svd.singularValues();
  if (!(out.lambda.minCoeff() > 0.0) || !out.lambda.allFinite()) return false;
  const Vector inv_sqrt = out.lambda.cwiseSqrt().cwiseInverse();
  out.R = Lm * svd.matrixV() * inv_sqrt.asDiagonal();
  out.Rinv = inv_sqrt.asDiagonal() * svd.matrixU().transpose() * Ls.transpose();
  out.W = out.R * out.R.transpose();
  out.W = linalg::symmetrize(out.W);
  return true;
}

// Largest alpha with diag(lambda) + alpha * D ⪰ 0 (D in scaled coordinates).
inline double psd_step_limit(const Vector& lambda, const Matrix& d) {
  const Vector is = lambda.cwiseSqrt().cwiseInverse();
  const Matrix b = linalg::symmetrize(is.asDiagonal() * d * is.asDiagonal());
  const double lmin = linalg::lambda_min(b);
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

inline double lp_step_limit(const Vector& v, const Vector& dv) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  }
  return a;
}

}  // namespace detail

/// Solves the conic problem. Never throws on numerical trouble: the status
/// carries MaxIter, NumericalFailure or a heuristic infeasibility flag, and
/// the last iterate is returned. dual_obj is the lower bound reported to
/// callers.
inline SdpSolution solve(const sdp::ConicProblem& prob, const SolverConfig& cfg = {}) {
  cfg.validate();
  prob.check_well_formed();
  const auto t0 = std::chrono::steady_clock::now();

  const int N = prob.psd_dim;
  const int ns = prob.slack_dim;
  const int m = prob.num_constraints();
  const double nu = static_cast<double>(N + ns);
  const Matrix& C = prob.objective.dense();
  const Vector& cs = prob.slack_objective;
  const Vector b = prob.rhs();
  const auto full = detail::expand(prob);
  const auto slack_cols = detail::slack_columns(prob);

  const double b_norm = b.norm();
  const double c_norm = std::sqrt(C.squaredNorm() + cs.squaredNorm());
  const double tau = 1.0 + std::max(b.size() ? b.cwiseAbs().maxCoeff() : 0.0, c_norm);

  Matrix M = tau * Matrix::Identity(N, N);
  Matrix S = tau * Matrix::Identity(N, N);
  Vector s = Vector::Constant(ns, tau);
  Vector z = Vector::Constant(ns, tau);
  Vector y = Vector::Zero(m);

  SdpSolution sol;
  sol.status = Status::MaxIter;

  auto finish = [&](Status st, int iters) {
    sol.status = st;
    sol.iterations = iters;
    sol.M = SymMatrix(M);
    sol.dual_S = SymMatrix(S);
    sol.slacks = s;
    sol.dual_z = z;
    sol.dual_y = y;
    sol.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
  };

  if (cfg.verbose) {
    std::fprintf(stderr, "ipm: psd_dim=%d slack_dim=%d m=%d\n", N, ns, m);
    std::fprintf(stderr, "%4s %14s %14s %9s %9s %9s %7s %7s\n", "iter", "pobj", "dobj",
                 "gap", "pres", "dres", "ap", "ad");
  }

  Matrix H(m, m);
  for (int iter = 0;; ++iter) {
    // Residuals and objectives at the current iterate.
    const Vector rp = b - prob.apply(M, s);
    auto [aty_m, aty_s] = prob.adjoint(y);
    const Matrix Rd = C - S - aty_m;
    const Vector rdl = cs - z - aty_s;

    const double pobj = prob.objective_value(M, s);
    const double dobj = b.dot(y);
    const double compl_gap = linalg::inner(M, S) + s.dot(z);
    const double mu = compl_gap / nu;
    const double gap = std::max(std::abs(pobj - dobj), compl_gap) / (1.0 + std::abs(pobj));
    const double pres = rp.norm() / (1.0 + b_norm);
    const double dres = std::sqrt(Rd.squaredNorm() + rdl.squaredNorm()) / (1.0 + c_norm);

    sol.primal_obj = pobj;
    sol.dual_obj = dobj;
    sol.rel_gap = gap;
    sol.primal_res = pres;
    sol.dual_res = dres;
    sol.history.push_back({iter, pobj, dobj, gap, pres, dres, 0.0, 0.0, mu});

    if (gap <= cfg.gap_tol && pres <= cfg.feas_tol && dres <= cfg.feas_tol) {
      return finish(Status::Optimal, iter);
    }
    if (iter >= cfg.max_iter) return finish(Status::MaxIter, iter);

    // Farkas rays: y / b'y nearly certifies primal infeasibility once the
    // dual objective dwarfs the data; likewise (M, s) / -<C, M> for the dual.
    const double dres_abs = dres * (1.0 + c_norm);
    const double pres_abs = pres * (1.0 + b_norm);
    if (pres > cfg.feas_tol && dobj > 0.0 && (dres_abs + c_norm) <= 1e-8 * dobj) {
      return finish(Status::PrimalInfeasibleSuspected, iter);
    }
    if (dres > cfg.feas_tol && pobj < 0.0 && (pres_abs + b_norm) <= 1e-8 * -pobj) {
      return finish(Status::DualInfeasibleSuspected, iter);
    }
    // Slower divergence: residual stalls while the opposite objective runs
    // away over a 10-iteration window.
    if (iter >= 10) {
      const auto& old = sol.history[static_cast<std::size_t>(iter - 10)];
      if (pres > 0.5 * old.primal_res && pres > cfg.feas_tol &&
          dobj - old.dual_obj > 10.0 * (1.0 + std::abs(old.dual_obj)) && dres <= 1e-3) {
        return finish(Status::PrimalInfeasibleSuspected, iter);
      }
      if (dres > 0.5 * old.dual_res && dres > cfg.feas_tol &&
          old.primal_obj - pobj > 10.0 * (1.0 + std::abs(old.primal_obj)) && pres <= 1e-3) {
        return finish(Status::DualInfeasibleSuspected, iter);
      }
    }

    detail::PsdScaling sc;
    if (!detail::nt_scaling(M, S, sc)) return finish(Status::NumericalFailure, iter);
    const Vector w2 = s.cwiseQuotient(z);
    const Vector w = w2.cwiseSqrt();
    const Vector lam_lp = s.cwiseProduct(z).cwiseSqrt();
    const Matrix& W = sc.W;

    // Schur complement, upper triangle then mirrored.
    for (int k = 0; k < m; ++k) {
      for (int l = k; l < m; ++l) {
        double h = 0.0;
        for (const auto& a : full[k]) {
          for (const auto& e : full[l]) h += a.value * e.value * W(a.row, e.row) * W(e.col, a.col);
        }
        H(k, l) = h;
      }
    }
    for (int j = 0; j < ns; ++j) {
      for (const auto& a : slack_cols[j]) {
        for (const auto& e : slack_cols[j]) {
          if (a.constraint <= e.constraint) H(a.constraint, e.constraint) += a.value * w2(j) * e.value;
        }
      }
    }
    for (int k = 0; k < m; ++k) {
      for (int l = 0; l < k; ++l) H(k, l) = H(l, k);
    }

    // Factor the Jacobi-equilibrated matrix D^-1/2 H D^-1/2: near the optimum
    // the diagonal of H spans many orders of magnitude. Static
    // regularization, if needed, is applied to the unit-diagonal matrix.
    const Vector hd = H.diagonal();
    if (!(hd.minCoeff() > 0.0) || !hd.allFinite()) return finish(Status::NumericalFailure, iter);
    const Vector eq = hd.cwiseSqrt().cwiseInverse();
    const Matrix Hs = eq.asDiagonal() * H * eq.asDiagonal();
    Eigen::LLT<Matrix> chol(Hs);
    if (chol.info() != Eigen::Success) {
      bool ok = false;
      for (double reg : {1e-12, 1e-9}) {
        chol.compute(Hs + reg * Matrix::Identity(m, m));
        if (chol.info() == Eigen::Success) {
          ok = true;
          break;
        }
      }
      if (!ok) return finish(Status::NumericalFailure, iter);
    }
    auto schur_solve = [&](const Vector& r) -> Vector {
      return eq.cwiseProduct(chol.solve(eq.cwiseProduct(r)));
    };

    const Matrix WRdW = W * Rd * W;

    struct Direction {
      Matrix dM, dS;
      Matrix dMt, dSt;  // scaled: R⁻¹ dM R⁻ᵀ and Rᵀ dS R
      Vector ds, dz, dy;
    };
    // Solves the Newton system whose scaled complementarity rows are
    // lambda ∘ (dM~ + dS~) = t_psd and lambda_lp (ds~ + dz~) = t_lp.
    auto direction = [&](const Matrix& t_psd, const Vector& t_lp) {
      Matrix U(N, N);
      for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) U(i, j) = 2.0 * t_psd(i, j) / (sc.lambda(i) + sc.lambda(j));
      }
      const Matrix K = sc.R * U * sc.R.transpose();
      const Vector k_lp = w.cwiseProduct(t_lp).cwiseQuotient(lam_lp);
      const Matrix G = K - WRdW;
      const Vector g_lp = k_lp - w2.cwiseProduct(rdl);
      Vector rhs(m);
      for (int k = 0; k < m; ++k) {
        double v = rp(k) - prob.constraints[k].psd.dot(G);
        for (const auto& t : prob.constraints[k].slack) v -= t.value * g_lp(t.index);
        rhs(k) = v;
      }
      Direction d;
      d.dy = schur_solve(rhs);
      // dM = K - W dS W, formed in scaled coordinates where both terms are
      // O(lambda) instead of O(|W|²).
      auto recover = [&] {
        auto [a_m, a_s] = prob.adjoint(d.dy);
        d.dS = Rd - a_m;
        d.dz = rdl - a_s;
        d.dSt = linalg::symmetrize(sc.R.transpose() * d.dS * sc.R);
        d.dMt = linalg::symmetrize(U - d.dSt);
        d.dM = linalg::symmetrize(sc.R * d.dMt * sc.R.transpose());
        d.ds = k_lp - w2.cwiseProduct(d.dz);
      };
      recover();
      // Iterative refinement on the primal equations A(dM) + B(ds) = rp;
      // the Schur matrix is ill-conditioned close to the optimum.
      Vector r = rp - prob.apply(d.dM, d.ds);
      for (int pass = 0; pass < 5 && r.norm() > 1e-15 * (1.0 + b_norm); ++pass) {
        const Direction prev = d;
        d.dy += schur_solve(r);
        recover();
        const Vector r_new = rp - prob.apply(d.dM, d.ds);
        if (!(r_new.norm() < 0.5 * r.norm())) {
          d = prev;
          break;
        }
        r = r_new;
      }
      return d;
    };

    auto step_limits = [&](const Direction& d) {
      const double ap = std::min(detail::psd_step_limit(sc.lambda, d.dMt),
                                 detail::lp_step_limit(s, d.ds));
      const double ad = std::min(detail::psd_step_limit(sc.lambda, d.dSt),
                                 detail::lp_step_limit(z, d.dz));
      return std::pair{ap, ad};
    };

    // Predictor (affine scaling).
    const Vector lam2 = sc.lambda.cwiseProduct(sc.lambda);
    const Matrix t_aff = -Matrix(lam2.asDiagonal());
    const Vector t_aff_lp = -lam_lp.cwiseProduct(lam_lp);
    const Direction aff = direction(t_aff, t_aff_lp);
    auto [ap_aff, ad_aff] = step_limits(aff);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);
    const double mu_aff =
        (linalg::inner(M + ap_aff * aff.dM, S + ad_aff * aff.dS) +
         (s + ap_aff * aff.ds).dot(z + ad_aff * aff.dz)) / nu;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    // Corrector with the second-order Mehrotra term.
    Matrix t_cor = sigma * mu * Matrix::Identity(N, N) - Matrix(lam2.asDiagonal()) -
                   linalg::symmetrize(aff.dMt * aff.dSt);
    const Vector ds_aff_t = aff.ds.cwiseQuotient(w);
    const Vector dz_aff_t = aff.dz.cwiseProduct(w);
    const Vector t_cor_lp = Vector::Constant(ns, sigma * mu) - lam_lp.cwiseProduct(lam_lp) -
                            ds_aff_t.cwiseProduct(dz_aff_t);
    const Direction dir = direction(t_cor, t_cor_lp);
    auto [ap_max, ad_max] = step_limits(dir);
    const double ap = std::min(1.0, cfg.step_fraction * ap_max);
    const double ad = std::min(1.0, cfg.step_fraction * ad_max);

    if (cfg.verbose) {
      std::fprintf(stderr, "%4d %14.7e %14.7e %9.2e %9.2e %9.2e %7.4f %7.4f\n", iter, pobj,
                   dobj, gap, pres, dres, ap, ad);
    }
    sol.history.back().step_primal = ap;
    sol.history.back().step_dual = ad;

    M = linalg::symmetrize(M + ap * dir.dM);
    s += ap * dir.ds;
    y += ad * dir.dy;
    S = linalg::symmetrize(S + ad * dir.dS);
    z += ad * dir.dz;
  }
}

}  // namespace cardsdp::ipm
