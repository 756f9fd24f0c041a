#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "cardsdp/instance.hpp"
#include "cardsdp/linalg.hpp"

namespace cardsdp {

/// Nonnegative violation of each constraint of the cardinality problem.
struct FeasibilityResiduals {
  double return_shortfall = 0.0;  ///< max(0, ρ - μᵀx)
  double budget_excess = 0.0;     ///< max(0, eᵀx - 1)
  double lower_bound = 0.0;       ///< max(0, -min x)
  double upper_bound = 0.0;       ///< max(0, max(x - u))
  double cardinality = 0.0;       ///< max(0, |support| - aleph)

  double max() const {
    return std::max({return_shortfall, budget_excess, lower_bound, upper_bound, cardinality});
  }
};

/// A candidate solution of the cardinality-constrained problem.
struct Portfolio {
  linalg::Vector x;
  std::vector<int> support;  ///< ascending; x is exactly zero elsewhere
  double objective = 0.0;    ///< xᵀQx
  FeasibilityResiduals residuals;

  bool feasible(double tol = 1e-8) const { return residuals.max() <= tol; }
};

inline FeasibilityResiduals residuals_of(const Instance& inst, const linalg::Vector& x,
                                         std::size_t support_size) {
  FeasibilityResiduals r;
  r.return_shortfall = std::max(0.0, inst.rho() - inst.mu().dot(x));
  r.budget_excess = std::max(0.0, x.sum() - 1.0);
  r.lower_bound = std::max(0.0, -x.minCoeff());
  r.upper_bound = std::max(0.0, (x - inst.u()).maxCoeff());
  r.cardinality = std::max(0.0, double(support_size) - double(inst.aleph()));
  return r;
}

/// Builds a Portfolio from x restricted to `support`; entries off the support
/// are zeroed.
inline Portfolio make_portfolio(const Instance& inst, linalg::Vector x, std::vector<int> support) {
  std::sort(support.begin(), support.end());
  linalg::Vector clean = linalg::Vector::Zero(inst.n());
  for (int i : support) clean(i) = x(i);
  Portfolio p;
  p.x = std::move(clean);
  p.support = std::move(support);
  p.objective = inst.risk(p.x);
  p.residuals = residuals_of(inst, p.x, p.support.size());
  return p;
}

/// Relative optimality gap (ub - lb) / ub. Returns 0 when ub is numerically
/// zero and lb agrees with it; std::nullopt when the gap is undefined
/// (ub ~ 0 with lb disagreeing, or ub infinite / NaN).
inline std::optional<double> relative_gap(double ub, double lb) {
  if (!std::isfinite(ub) || !std::isfinite(lb)) return std::nullopt;
  if (ub > 1e-12) return (ub - lb) / ub;
  if (std::abs(ub - lb) <= 1e-12) return 0.0;
  return std::nullopt;
}

}  // namespace cardsdp
