#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ganlab {

constexpr double kProbSumTol = 1e-12;
constexpr double kTieTol = 1e-12;
constexpr double kValueIdentityTol = 1e-10;

// Probability mass function over a finite labeled point set. Densities that
// interact (discriminator, best response, value) must share one point set;
// membership in the support is strict positivity.
struct DiscreteDensity {
  std::vector<std::string> labels;
  std::vector<double> probs;

  DiscreteDensity() = default;
  DiscreteDensity(std::vector<std::string> l, std::vector<double> p)
      : labels(std::move(l)), probs(std::move(p)) {
    validate();
  }

  static DiscreteDensity uniform(std::vector<std::string> l) {
    const std::size_t n = l.size();
    return DiscreteDensity(std::move(l),
                           std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  // Point masses by index over an anonymous point set "0", "1", ...
  static DiscreteDensity from_probs(std::vector<double> p) {
    std::vector<std::string> l(p.size());
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = std::to_string(i);
    return DiscreteDensity(std::move(l), std::move(p));
  }

  std::size_t size() const { return probs.size(); }

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0.0) s.push_back(i);
    }
    return s;
  }

  void validate() const {
    if (labels.size() != probs.size()) {
      throw std::invalid_argument("DiscreteDensity: labels/probs length mismatch");
    }
    if (probs.empty()) {
      throw std::invalid_argument("DiscreteDensity: empty point set");
    }
    double sum = 0.0;
    for (const double p : probs) {
      if (!(p >= 0.0)) {
        throw std::invalid_argument("DiscreteDensity: negative or NaN mass");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbSumTol) {
      throw std::invalid_argument("DiscreteDensity: mass sums to " +
                                  std::to_string(sum) + ", not 1");
    }
  }
};

namespace detail {

inline void check_same_points(const DiscreteDensity& a,
                              const DiscreteDensity& b, const char* op) {
  if (a.labels != b.labels) {
    throw std::invalid_argument(std::string(op) +
                                ": densities use different point sets");
  }
}

}  // namespace detail

// Values attached to a subset of the shared point set.
struct PointValues {
  std::vector<std::size_t> indices;
  std::vector<double> values;

  double min() const {
    return *std::min_element(values.begin(), values.end());
  }
  double max() const {
    return *std::max_element(values.begin(), values.end());
  }
};

// D*(x) = p_r(x) / (p_r(x) + p_g(x)) on the union support; points carrying
// no mass under either density are excluded rather than given a value.
inline PointValues optimal_discriminator(const DiscreteDensity& p_r,
                                         const DiscreteDensity& p_g) {
  detail::check_same_points(p_r, p_g, "optimal_discriminator");
  PointValues out;
  for (std::size_t i = 0; i < p_r.size(); ++i) {
    const double r = p_r.probs[i], g = p_g.probs[i];
    if (r > 0.0 || g > 0.0) {
      out.indices.push_back(i);
      out.values.push_back(r / (r + g));
    }
  }
  return out;
}

// alpha(x) = p_g(x) / p_r(x) on Supp(p_r). Cross-checks D* = 1/(alpha + 1)
// pointwise, which ties the two representations together.
inline PointValues alpha_ratio(const DiscreteDensity& p_r,
                               const DiscreteDensity& p_g) {
  detail::check_same_points(p_r, p_g, "alpha_ratio");
  PointValues out;
  for (std::size_t i = 0; i < p_r.size(); ++i) {
    const double r = p_r.probs[i];
    if (r <= 0.0) continue;
    const double alpha = p_g.probs[i] / r;
    const double d_star = r / (r + p_g.probs[i]);
    if (std::abs(d_star - 1.0 / (alpha + 1.0)) > 1e-12) {
      throw std::runtime_error("alpha_ratio: D* and 1/(alpha+1) disagree");
    }
    out.indices.push_back(i);
    out.values.push_back(alpha);
  }
  return out;
}

// Best response to the discriminator induced by (p_r, p_g0): minimize
// E_{p_g} log(alpha0 / (alpha0 + 1)) over densities on Supp(p_r). The
// objective is linear in p_g, so mass concentrates on the argmin of alpha0,
// spread uniformly over ties. A constant alpha0 makes every feasible density
// optimal; the current one is returned unchanged.
inline DiscreteDensity generator_best_response(const DiscreteDensity& p_r,
                                               const DiscreteDensity& p_g0) {
  detail::check_same_points(p_r, p_g0, "generator_best_response");
  const PointValues alpha = alpha_ratio(p_r, p_g0);
  const double lo = alpha.min(), hi = alpha.max();
  if (hi - lo <= kTieTol) {
    return p_g0;
  }
  std::vector<std::size_t> ties;
  for (std::size_t k = 0; k < alpha.values.size(); ++k) {
    if (alpha.values[k] - lo <= kTieTol) ties.push_back(alpha.indices[k]);
  }
  std::vector<double> probs(p_r.size(), 0.0);
  const double w = 1.0 / static_cast<double>(ties.size());
  for (const std::size_t i : ties) probs[i] = w;
  return DiscreteDensity(p_r.labels, std::move(probs));
}

struct GanValue {
  double direct = 0.0;   // E_r log D* + E_g log(1 - D*)
  double kl_form = 0.0;  // -log4 + KL(p_r || m) + KL(p_g || m), m the midpoint
};

// Value of the inner maximization C(G) at the optimal discriminator. Both
// closed forms are computed and must agree; 0 log 0 terms are dropped.
inline GanValue gan_value(const DiscreteDensity& p_r,
                          const DiscreteDensity& p_g) {
  detail::check_same_points(p_r, p_g, "gan_value");
  GanValue out;
  double kl_r = 0.0, kl_g = 0.0;
  for (std::size_t i = 0; i < p_r.size(); ++i) {
    const double r = p_r.probs[i], g = p_g.probs[i];
    const double m = 0.5 * (r + g);
    if (r > 0.0) {
      out.direct += r * std::log(r / (r + g));
      kl_r += r * std::log(r / m);
    }
    if (g > 0.0) {
      out.direct += g * std::log(g / (r + g));
      kl_g += g * std::log(g / m);
    }
  }
  out.kl_form = -std::log(4.0) + kl_r + kl_g;
  if (std::abs(out.direct - out.kl_form) > kValueIdentityTol) {
    throw std::runtime_error("gan_value: direct and KL forms disagree by " +
                             std::to_string(out.direct - out.kl_form));
  }
  return out;
}

// Mode-collapse indicator: coefficient of variation of alpha under p_r.
// Zero iff alpha is constant on Supp(p_r), i.e. no point of the real support
// is preferentially starved.
inline double collapse_metric(const DiscreteDensity& p_r,
                              const DiscreteDensity& p_g) {
  const PointValues alpha = alpha_ratio(p_r, p_g);
  double mean = 0.0, wsum = 0.0;
  for (std::size_t k = 0; k < alpha.values.size(); ++k) {
    wsum += p_r.probs[alpha.indices[k]];
    mean += p_r.probs[alpha.indices[k]] * alpha.values[k];
  }
  // normalize by the realized weight sum so an exactly constant ratio yields
  // an exactly zero metric even when the masses only sum to 1 up to rounding
  mean /= wsum;
  double var = 0.0;
  for (std::size_t k = 0; k < alpha.values.size(); ++k) {
    const double d = alpha.values[k] - mean;
    var += p_r.probs[alpha.indices[k]] * d * d;
  }
  var /= wsum;
  const double sd = std::sqrt(std::max(var, 0.0));
  if (sd == 0.0) return 0.0;
  return sd / mean;
}

struct DynamicsStep {
  std::size_t step = 0;
  std::vector<double> p_g;
  PointValues alpha;   // over Supp(p_r)
  PointValues d_star;  // over the union support
  double value = 0.0;
  double kl_form = 0.0;
  double collapse = 0.0;
};

struct DynamicsTrajectory {
  std::vector<std::string> labels;
  std::vector<double> p_r;
  std::vector<DynamicsStep> steps;

  void to_jsonl(std::ostream& os) const {
    nlohmann::json header;
    header["labels"] = labels;
    header["p_r"] = p_r;
    os << header.dump() << "\n";
    for (const auto& s : steps) {
      nlohmann::json j;
      j["step"] = s.step;
      j["p_g"] = s.p_g;
      j["alpha_indices"] = s.alpha.indices;
      j["alpha"] = s.alpha.values;
      j["d_star_indices"] = s.d_star.indices;
      j["d_star"] = s.d_star.values;
      j["value"] = s.value;
      j["kl_form"] = s.kl_form;
      j["collapse"] = s.collapse;
      os << j.dump() << "\n";
    }
  }
};

namespace detail {

inline DynamicsStep make_step(std::size_t step, const DiscreteDensity& p_r,
                              const DiscreteDensity& p_g) {
  DynamicsStep s;
  s.step = step;
  s.p_g = p_g.probs;
  s.alpha = alpha_ratio(p_r, p_g);
  s.d_star = optimal_discriminator(p_r, p_g);
  const GanValue v = gan_value(p_r, p_g);
  s.value = v.direct;
  s.kl_form = v.kl_form;
  s.collapse = collapse_metric(p_r, p_g);
  return s;
}

}  // namespace detail

// Alternating exact best responses: each round the discriminator is replaced
// by D* for the current pair and the generator re-solves against it. Step 0
// records the initial generator; step k the density after round k.
inline DynamicsTrajectory run_dynamics(const DiscreteDensity& p_r,
                                       const DiscreteDensity& p_g0,
                                       std::size_t rounds) {
  detail::check_same_points(p_r, p_g0, "run_dynamics");
  DynamicsTrajectory traj;
  traj.labels = p_r.labels;
  traj.p_r = p_r.probs;
  traj.steps.push_back(detail::make_step(0, p_r, p_g0));
  DiscreteDensity p_g = p_g0;
  for (std::size_t k = 1; k <= rounds; ++k) {
    p_g = generator_best_response(p_r, p_g);
    traj.steps.push_back(detail::make_step(k, p_r, p_g));
  }
  return traj;
}

}  // namespace ganlab
