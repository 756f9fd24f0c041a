#pragma once

// End-to-end pipeline: build the lifted relaxation, solve it, read off the
// rank, round to a feasible portfolio and report lb / ub / gap.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cardsdp/instance.hpp"
#include "cardsdp/ipm.hpp"
#include "cardsdp/portfolio.hpp"
#include "cardsdp/qp.hpp"
#include "cardsdp/sdp.hpp"

namespace cardsdp::cardopt {

struct LowerBound {
  double lb = -std::numeric_limits<double>::infinity();
  /// Optimal, or stopped with a dual iterate feasible to feas_tol.
  bool safe = false;
  std::optional<sdp::LiftedPoint> lifted;  ///< absent if the corner drifted from 1
  ipm::SdpSolution stats;
};

inline LowerBound lower_bound(const Instance& inst, const ipm::SolverConfig& cfg = {}) {
  LowerBound out;
  out.stats = ipm::solve(sdp::build_sdp(inst), cfg);
  out.lb = out.stats.dual_obj;
  out.safe = out.stats.status == ipm::Status::Optimal ||
             (out.stats.status == ipm::Status::MaxIter && out.stats.dual_res <= cfg.feas_tol);
  try {
    sdp::LiftedPoint lp = sdp::split_lifted(out.stats.M, inst.n());
    lp.objective = linalg::inner(inst.Q().dense(), lp.X.dense());
    out.lifted = std::move(lp);
  } catch (const CornerNotUnit&) {
    // Infeasible or unconverged solves; nothing to round.
  }
  return out;
}

namespace detail {

/// Indices of the k largest scores; ties go to the lowest index.
inline std::vector<int> top_k(const linalg::Vector& score, int k) {
  std::vector<int> idx(static_cast<std::size_t>(score.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return score(a) > score(b); });
  idx.resize(static_cast<std::size_t>(std::min<Eigen::Index>(k, score.size())));
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Grows a support one stock at a time, each time adding the stock that
/// raises the attainable return the most (ties: lowest index).
inline std::vector<int> greedy_return_support(const Instance& inst, int k) {
  std::vector<int> support;
  std::vector<char> used(static_cast<std::size_t>(inst.n()), 0);
  for (int step = 0; step < k; ++step) {
    int best = -1;
    double best_ret = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < inst.n(); ++i) {
      if (used[i]) continue;
      std::vector<int> trial = support;
      trial.push_back(i);
      const double r = qp::max_return(inst, trial);
      if (r > best_ret) {
        best_ret = r;
        best = i;
      }
    }
    if (best < 0) break;
    used[best] = 1;
    support.push_back(best);
  }
  std::sort(support.begin(), support.end());
  return support;
}

}  // namespace detail

/// Candidate supports in priority order: top-aleph by lifted x, top-aleph by
/// x_i·μ_i, then the greedy return-maximizing support. Each is re-optimized
/// by the QP; the best feasible result wins (earlier candidates win ties).
/// Returns std::nullopt when every candidate is infeasible.
inline std::optional<Portfolio> round_solution(const Instance& inst, const sdp::LiftedPoint& lifted) {
  const int k = std::min(inst.aleph(), inst.n());
  std::vector<std::vector<int>> candidates;
  candidates.push_back(detail::top_k(lifted.x, k));
  candidates.push_back(detail::top_k(lifted.x.cwiseProduct(inst.mu()), k));
  candidates.push_back(detail::greedy_return_support(inst, k));

  std::optional<Portfolio> best;
  std::vector<std::vector<int>> seen;
  for (const auto& support : candidates) {
    if (std::find(seen.begin(), seen.end(), support) != seen.end()) continue;
    seen.push_back(support);
    qp::QpResult q;
    try {
      q = qp::solve_qp(inst, support);
    } catch (const NumericalFailure&) {
      continue;
    }
    if (q.status != qp::QpStatus::Optimal) continue;
    Portfolio p = make_portfolio(inst, q.x, support);
    if (!p.feasible()) continue;
    if (!best || p.objective < best->objective) best = std::move(p);
  }
  return best;
}

struct RunReport {
  double lb_sdp = -std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
  std::optional<double> gap;  ///< (ub - lb_sdp) / ub; nullopt when undefined
  int rank = 0;
  double sdp_time = 0.0;
  double round_time = 0.0;
  ipm::Status sdp_status = ipm::Status::NumericalFailure;
  bool lb_safe = false;
  bool portfolio_found = false;
  int sdp_iterations = 0;
  double sdp_rel_gap = 0.0;
  std::optional<Portfolio> portfolio;
  std::optional<sdp::LiftedPoint> lifted;
};

/// Never throws on solver trouble; stage outcomes land in the status fields.
inline RunReport run(const Instance& inst, const ipm::SolverConfig& cfg = {}) {
  RunReport rep;
  const LowerBound lb = lower_bound(inst, cfg);
  rep.lb_sdp = lb.lb;
  rep.lb_safe = lb.safe;
  rep.sdp_status = lb.stats.status;
  rep.sdp_time = lb.stats.wall_time;
  rep.sdp_iterations = lb.stats.iterations;
  rep.sdp_rel_gap = lb.stats.rel_gap;
  rep.lifted = lb.lifted;
  if (lb.lifted) rep.rank = lb.lifted->numerical_rank;

  const bool roundable = lb.lifted && (rep.sdp_status == ipm::Status::Optimal ||
                                       rep.sdp_status == ipm::Status::MaxIter);
  if (roundable) {
    const auto t0 = std::chrono::steady_clock::now();
    rep.portfolio = round_solution(inst, *lb.lifted);
    rep.round_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  if (rep.portfolio) {
    rep.portfolio_found = true;
    rep.ub = rep.portfolio->objective;
  }
  rep.gap = relative_gap(rep.ub, rep.lb_sdp);
  return rep;
}

}  // namespace cardsdp::cardopt
