#pragma once

// Ground truth for the cardinality-constrained problem: exhaustive support
// enumeration for small instances, and best-first branch-and-bound on the
// decision "x_i free" vs "x_i = 0".

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "cardsdp/errors.hpp"
#include "cardsdp/instance.hpp"
#include "cardsdp/portfolio.hpp"
#include "cardsdp/qp.hpp"

namespace cardsdp::exact {

enum class ExactStatus { Proven, TimeLimit, Infeasible };

inline const char* to_string(ExactStatus s) {
  switch (s) {
    case ExactStatus::Proven: return "Proven";
    case ExactStatus::TimeLimit: return "TimeLimit";
    case ExactStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

struct ExactResult {
  std::optional<Portfolio> best_x;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::quiet_NaN();  ///< NaN when undefined
  long nodes = 0;
  ExactStatus status = ExactStatus::Infeasible;
  double wall_time = 0.0;
};

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return std::round(c);
}

inline constexpr double kEnumerationGuard = 1e6;

/// Minimizes over every support of size min(aleph, n). Supersets never do
/// worse than their subsets, so smaller supports need not be visited.
inline ExactResult enumerate_supports(const Instance& inst, double guard = kEnumerationGuard) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = inst.n();
  const int k = std::min(inst.aleph(), n);
  const double count = binomial(n, k);
  if (count > guard) throw TooLarge(count);

  ExactResult r;
  std::vector<int> combo(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) combo[i] = i;
  while (true) {
    ++r.nodes;
    const qp::QpResult q = qp::solve_qp(inst, combo);
    if (q.status == qp::QpStatus::Optimal && q.objective < r.ub) {
      r.ub = q.objective;
      r.best_x = make_portfolio(inst, q.x, combo);
    }
    // Next combination in lexicographic order.
    int i = k - 1;
    while (i >= 0 && combo[i] == n - k + i) --i;
    if (i < 0) break;
    ++combo[i];
    for (int j = i + 1; j < k; ++j) combo[j] = combo[j - 1] + 1;
  }
  if (r.best_x) {
    r.status = ExactStatus::Proven;
    r.lb = r.ub;
    r.gap = relative_gap(r.ub, r.lb).value_or(std::numeric_limits<double>::quiet_NaN());
  } else {
    r.status = ExactStatus::Infeasible;
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

struct BranchAndBoundOptions {
  double time_limit = std::numeric_limits<double>::infinity();  ///< seconds
  std::optional<Portfolio> incumbent;  ///< warm upper bound, e.g. from SDP rounding
};

namespace detail {

enum : char { kFree = 0, kZero = 1, kCommitted = 2 };

struct Node {
  std::vector<char> state;
  double bound;
  linalg::Vector x;  ///< relaxation solution
  long seq;          ///< creation order, for deterministic tie-breaking
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.seq < b.seq;  // newer first among equal bounds
  }
};

}  // namespace detail

/// Best-first branch-and-bound. Node relaxations drop the cardinality cap
/// and solve the QP on the variables not fixed at zero.
inline ExactResult branch_and_bound(const Instance& inst, const BranchAndBoundOptions& opt = {}) {
  using detail::Node;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const int n = inst.n();
  const int aleph = inst.aleph();

  ExactResult r;
  if (opt.incumbent && opt.incumbent->feasible() && opt.incumbent->x.size() == n) {
    r.best_x = opt.incumbent;
    r.ub = opt.incumbent->objective;
  }
  auto offer = [&](const qp::QpResult& q, std::vector<int> support) {
    if (q.status != qp::QpStatus::Optimal || q.objective >= r.ub) return;
    Portfolio cand = make_portfolio(inst, q.x, std::move(support));
    if (!cand.feasible()) return;
    r.ub = cand.objective;
    r.best_x = std::move(cand);
  };
  auto prunable = [&](double bound) { return bound >= r.ub * (1.0 - 1e-9); };
  auto free_vars = [&](const std::vector<char>& st) {
    std::vector<int> f;
    for (int i = 0; i < n; ++i) {
      if (st[i] != detail::kZero) f.push_back(i);
    }
    return f;
  };

  std::priority_queue<Node, std::vector<Node>, detail::NodeOrder> open;
  long seq = 0;
  {
    std::vector<char> st(static_cast<std::size_t>(n), detail::kFree);
    const qp::QpResult root = qp::solve_qp(inst, free_vars(st));
    ++r.nodes;
    if (root.status == qp::QpStatus::Optimal && !prunable(root.objective)) {
      open.push(Node{std::move(st), root.objective, root.x, seq++});
    }
  }

  bool timed_out = false;
  double open_bound = std::numeric_limits<double>::infinity();
  while (!open.empty()) {
    if (elapsed() > opt.time_limit) {
      timed_out = true;
      open_bound = open.top().bound;
      break;
    }
    Node node = open.top();
    open.pop();
    if (prunable(node.bound)) continue;

    const std::vector<int> free = free_vars(node.state);
    std::vector<int> committed;
    for (int i = 0; i < n; ++i) {
      if (node.state[i] == detail::kCommitted) committed.push_back(i);
    }
    // Cardinality cannot bind: the relaxation is exact.
    if (static_cast<int>(free.size()) <= aleph) {
      qp::QpResult q;
      q.x = node.x;
      q.objective = inst.risk(node.x);
      q.status = qp::QpStatus::Optimal;
      offer(q, free);
      continue;
    }
    if (static_cast<int>(committed.size()) == aleph) {
      ++r.nodes;
      offer(qp::solve_qp(inst, committed), committed);
      continue;
    }
    // Relaxation already sparse enough: close with one reduced QP.
    const double xmax = node.x.maxCoeff();
    const double nz_tol = 1e-7 * std::max(xmax, 0.0) + 1e-12;
    std::vector<char> keep(static_cast<std::size_t>(n), 0);
    for (int i : committed) keep[i] = 1;
    for (int i : free) {
      if (node.x(i) > nz_tol) keep[i] = 1;
    }
    std::vector<int> candidate;
    for (int i = 0; i < n; ++i) {
      if (keep[i]) candidate.push_back(i);
    }
    if (static_cast<int>(candidate.size()) <= aleph) {
      ++r.nodes;
      const qp::QpResult q = qp::solve_qp(inst, candidate);
      offer(q, candidate);
      if (q.status == qp::QpStatus::Optimal &&
          q.objective <= node.bound + 1e-9 * (1.0 + std::abs(node.bound))) {
        continue;
      }
    }
    // Branch on the free, uncommitted variable with the largest weight.
    int branch = -1;
    for (int i : free) {
      if (node.state[i] == detail::kCommitted) continue;
      if (branch < 0 || node.x(i) > node.x(branch)) branch = i;
    }
    if (branch < 0) continue;

    {
      // x_branch = 0: new relaxation.
      std::vector<char> st = node.state;
      st[branch] = detail::kZero;
      ++r.nodes;
      const qp::QpResult q = qp::solve_qp(inst, free_vars(st));
      if (q.status == qp::QpStatus::Optimal && !prunable(q.objective)) {
        open.push(Node{std::move(st), std::max(q.objective, node.bound), q.x, seq++});
      }
    }
    {
      // x_branch counts against the cap: same relaxation as the parent.
      std::vector<char> st = node.state;
      st[branch] = detail::kCommitted;
      open.push(Node{std::move(st), node.bound, node.x, seq++});
    }
  }

  if (timed_out) {
    r.status = ExactStatus::TimeLimit;
    r.lb = std::min(open_bound, r.ub);
  } else if (r.best_x) {
    r.status = ExactStatus::Proven;
    r.lb = r.ub;
  } else {
    r.status = ExactStatus::Infeasible;
  }
  r.gap = relative_gap(r.ub, r.lb).value_or(std::numeric_limits<double>::quiet_NaN());
  r.wall_time = elapsed();
  return r;
}

}  // namespace cardsdp::exact
