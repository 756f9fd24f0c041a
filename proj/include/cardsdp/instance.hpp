#pragma once

// Problem data for cardinality-constrained mean-variance selection:
//
//   min xᵀQx  s.t.  μᵀx >= ρ,  eᵀx <= 1,  0 <= x <= u,  card(x) <= aleph.
//
// Instances are immutable once constructed and validated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardsdp/errors.hpp"
#include "cardsdp/linalg.hpp"

namespace cardsdp {

class Instance {
 public:
  /// Validates every invariant; throws ValidationError naming the first
  /// violated one ("dimension", "finite", "symmetry", "psd", "upper_bound",
  /// "aleph").
  Instance(linalg::Matrix q, linalg::Vector mu, double rho, linalg::Vector u, int aleph)
      : n_(static_cast<int>(q.rows())), mu_(std::move(mu)), rho_(rho), u_(std::move(u)),
        aleph_(aleph) {
    validate(q);
    q_ = linalg::SymMatrix(q);
  }

  int n() const noexcept { return n_; }
  const linalg::SymMatrix& Q() const noexcept { return q_; }
  const linalg::Vector& mu() const noexcept { return mu_; }
  double rho() const noexcept { return rho_; }
  const linalg::Vector& u() const noexcept { return u_; }
  int aleph() const noexcept { return aleph_; }

  /// Same data under a different cardinality cap.
  Instance with_aleph(int aleph) const {
    return Instance(q_.dense(), mu_, rho_, u_, aleph);
  }

  Instance with_rho(double rho) const {
    return Instance(q_.dense(), mu_, rho, u_, aleph_);
  }

  /// Same problem with Q scaled by c > 0.
  Instance with_scaled_risk(double c) const {
    return Instance(c * q_.dense(), mu_, rho_, u_, aleph_);
  }

  double risk(const linalg::Vector& x) const { return x.dot(q_.dense() * x); }

  friend bool operator==(const Instance& a, const Instance& b) {
    return a.n_ == b.n_ && a.q_ == b.q_ && a.mu_ == b.mu_ && a.rho_ == b.rho_ &&
           a.u_ == b.u_ && a.aleph_ == b.aleph_;
  }

 private:
  void validate(const linalg::Matrix& q) const {
    if (n_ <= 0) throw ValidationError("dimension", "n must be positive");
    if (q.cols() != n_) throw ValidationError("dimension", "Q must be square");
    if (mu_.size() != n_) throw ValidationError("dimension", "mu must have length n");
    if (u_.size() != n_) throw ValidationError("dimension", "u must have length n");
    if (!q.allFinite() || !mu_.allFinite() || !u_.allFinite() || !std::isfinite(rho_)) {
      throw ValidationError("finite", "NaN or Inf in instance data");
    }
    const double scale = q.cwiseAbs().maxCoeff();
    const double asym = (q - q.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * (1.0 + scale)) {
      std::ostringstream msg;
      msg << "Q is not symmetric (max |Q_ij - Q_ji| = " << asym << ")";
      throw ValidationError("symmetry", msg.str());
    }
    for (int i = 0; i < n_; ++i) {
      if (u_(i) < 0.0) {
        throw ValidationError("upper_bound", "u[" + std::to_string(i) + "] is negative");
      }
    }
    if (aleph_ < 0 || aleph_ > n_) {
      throw ValidationError("aleph", "aleph=" + std::to_string(aleph_) +
                                         " outside [0, " + std::to_string(n_) + "]");
    }
    const linalg::Vector eig = linalg::sym_eigenvalues(linalg::symmetrize(q));
    const double lmin = eig(0);
    const double lmax = eig(eig.size() - 1);
    if (lmin < -1e-8 * (1.0 + lmax)) {
      std::ostringstream msg;
      msg << "Q is not positive semidefinite (lambda_min = " << lmin << ")";
      throw ValidationError("psd", msg.str());
    }
  }

  int n_;
  linalg::SymMatrix q_;
  linalg::Vector mu_;
  double rho_;
  linalg::Vector u_;
  int aleph_;
};

// ---------------------------------------------------------------------------
// Canonical JSON:
//   {"n": int, "aleph": int, "rho": float, "mu": [n], "u": [n], "Q": [[n]xn]}
// Q is stored full and row-major.

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing key \"") + key + "\"");
  return *it;
}

inline double number(const nlohmann::json& j, const std::string& what) {
  if (!j.is_number()) throw ParseError(what + " must be a number");
  return j.get<double>();
}

inline int integer(const nlohmann::json& j, const std::string& what) {
  if (!j.is_number_integer()) throw ParseError(what + " must be an integer");
  return j.get<int>();
}

inline linalg::Vector vector_of(const nlohmann::json& j, int n, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array");
  if (static_cast<int>(j.size()) != n) {
    throw ValidationError("dimension", what + " must have " + std::to_string(n) + " entries");
  }
  linalg::Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = number(j[i], what + "[" + std::to_string(i) + "]");
  return v;
}

}  // namespace detail

inline Instance instance_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("instance must be a JSON object");
  const int n = detail::integer(detail::require(j, "n"), "n");
  if (n <= 0) throw ValidationError("dimension", "n must be positive");
  const int aleph = detail::integer(detail::require(j, "aleph"), "aleph");
  const double rho = detail::number(detail::require(j, "rho"), "rho");
  linalg::Vector mu = detail::vector_of(detail::require(j, "mu"), n, "mu");
  linalg::Vector u = detail::vector_of(detail::require(j, "u"), n, "u");
  const auto& jq = detail::require(j, "Q");
  if (!jq.is_array() || static_cast<int>(jq.size()) != n) {
    throw ValidationError("dimension", "Q must have " + std::to_string(n) + " rows");
  }
  linalg::Matrix q(n, n);
  for (int i = 0; i < n; ++i) {
    q.row(i) = detail::vector_of(jq[i], n, "Q[" + std::to_string(i) + "]").transpose();
  }
  return Instance(std::move(q), std::move(mu), rho, std::move(u), aleph);
}

inline nlohmann::ordered_json instance_to_json(const Instance& inst) {
  const int n = inst.n();
  nlohmann::ordered_json q = nlohmann::ordered_json::array();
  for (int i = 0; i < n; ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int k = 0; k < n; ++k) row.push_back(inst.Q()(i, k));
    q.push_back(std::move(row));
  }
  auto vec = [](const linalg::Vector& v) {
    return nlohmann::ordered_json(std::vector<double>(v.data(), v.data() + v.size()));
  };
  return nlohmann::ordered_json{{"n", n},
                        {"aleph", inst.aleph()},
                        {"rho", inst.rho()},
                        {"mu", vec(inst.mu())},
                        {"u", vec(inst.u())},
                        {"Q", std::move(q)}};
}

/// Parses text. ParseError on malformed JSON, ValidationError on bad data.
inline Instance parse_instance(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  return instance_from_json(j);
}

inline Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("file not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_instance(buf.str());
}

inline std::string dump_instance(const Instance& inst) {
  return instance_to_json(inst).dump() + "\n";
}

inline void save_instance(const Instance& inst, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << dump_instance(inst);
}

// ---------------------------------------------------------------------------
// Synthetic instances from a factor model Q = F Fᵀ + D.

struct GenSpec {
  int n = 10;
  std::uint64_t seed = 1;
  int factor_count = 3;
  /// ρ is this quantile of the single-stock attainable returns μ_i·min(u_i, 1),
  /// so at least one stock reaches ρ alone and every aleph >= 1 is feasible.
  double target_rho_quantile = 0.5;
  int aleph = 3;  ///< clipped to n
  /// Common-factor volatility in percent. Small values give the diagonally
  /// dominant covariances typical of perspective-cut benchmark sets.
  double factor_vol = 1.0;
};

namespace detail {

// Portable draws straight from the engine bits; the <random> distributions
// are implementation-defined and would break cross-platform determinism.
class Draws {
 public:
  explicit Draws(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace detail

inline void validate_gen_spec(const GenSpec& spec) {
  if (spec.n <= 0) throw ValidationError("n", "n must be positive");
  if (spec.factor_count <= 0) throw ValidationError("factor_count", "must be positive");
  if (!(spec.target_rho_quantile > 0.0 && spec.target_rho_quantile < 1.0)) {
    throw ValidationError("target_rho_quantile", "must lie in (0, 1)");
  }
  if (spec.aleph < 0) throw ValidationError("aleph", "must be nonnegative");
  if (!(spec.factor_vol >= 0.0) || !std::isfinite(spec.factor_vol)) {
    throw ValidationError("factor_vol", "must be finite and nonnegative");
  }
}

inline Instance generate_instance(const GenSpec& spec) {
  validate_gen_spec(spec);
  const int n = spec.n;
  const int k = spec.factor_count;
  detail::Draws draw(spec.seed);

  // Percent units per month (idiosyncratic vol 2-5%), so risks and returns
  // are O(1) numbers.
  linalg::Matrix f(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) f(i, j) = spec.factor_vol * draw.normal() / std::sqrt(double(k));
  }
  linalg::Vector d(n);
  for (int i = 0; i < n; ++i) {
    const double vol = draw.uniform(2.0, 5.0);
    d(i) = vol * vol;
  }
  linalg::Matrix q = f * f.transpose();
  q.diagonal() += d;
  q = linalg::symmetrize(q);

  linalg::Vector mu(n);
  linalg::Vector u(n);
  for (int i = 0; i < n; ++i) {
    // Riskier stocks pay a premium on average.
    mu(i) = 0.2 + 0.0025 * q(i, i) + draw.uniform(0.0, 0.6);
    u(i) = draw.uniform(0.3, 1.0);
  }

  std::vector<double> single(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) single[i] = mu(i) * std::min(u(i), 1.0);
  std::sort(single.begin(), single.end());
  const auto pos = static_cast<std::size_t>(std::floor(spec.target_rho_quantile * (n - 1)));
  const double rho = single[pos];

  return Instance(std::move(q), std::move(mu), rho, std::move(u), std::min(spec.aleph, n));
}

}  // namespace cardsdp
