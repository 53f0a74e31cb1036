#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qcdir/error.hpp"

namespace qcdir {

/// Outcome of a truncated improper integral.
enum class Growth { divergent, convergent, inconclusive };

inline const char* name(Growth g) {
  switch (g) {
    case Growth::divergent: return "DIVERGENT";
    case Growth::convergent: return "CONVERGENT";
    default: return "INCONCLUSIVE";
  }
}

/// Thresholds and ladder sizes shared by every truncated-integral test.
struct LadderOptions {
  int levels = 600;         // eps_k = eps0 2^-k, k = 1..levels
  int tail_levels = 24;     // extra levels below eps_k for integrals over B(z0, eps_k)
  int angular_nodes = 256;  // trapezoid nodes on each circle
  int fit_points = 4;
  double slope_threshold = 0.1;
  double tail_threshold = 1e-6;
};

struct GrowthFit {
  Growth growth = Growth::inconclusive;
  double slope = 0.0;
  double tail = std::numeric_limits<double>::infinity();
};

namespace detail {

inline double last_slope(const std::vector<double>& x, const std::vector<double>& y, int m) {
  const std::size_t n = x.size();
  const std::size_t k0 = n > static_cast<std::size_t>(m) ? n - m : 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double c = static_cast<double>(n - k0);
  for (std::size_t k = k0; k < n; ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double den = c * sxx - sx * sx;
  return den != 0.0 ? (c * sxy - sx * sy) / den : 0.0;
}

/// Partial integrals p_k against the scale x_k (a log-log variable).
/// Slope >= threshold over the last points: divergent. Otherwise the
/// geometric tail estimate d q/(1 - q) of the last increments decides.
inline GrowthFit classify_divergence(const std::vector<double>& x, const std::vector<double>& p,
                                     const LadderOptions& opt) {
  GrowthFit fit;
  const std::size_t n = p.size();
  if (n > 0 && !std::isfinite(p.back())) {
    fit.growth = Growth::divergent;
    fit.slope = std::numeric_limits<double>::infinity();
    return fit;
  }
  if (n < static_cast<std::size_t>(std::max(3, opt.fit_points))) return fit;
  fit.slope = last_slope(x, p, opt.fit_points);
  if (fit.slope >= opt.slope_threshold) {
    fit.growth = Growth::divergent;
    return fit;
  }
  const double d1 = std::abs(p[n - 1] - p[n - 2]);
  const double d0 = std::abs(p[n - 2] - p[n - 3]);
  if (d1 == 0.0) {
    fit.tail = 0.0;
  } else if (d0 > 0.0 && d1 < d0) {
    const double q = d1 / d0;
    fit.tail = d1 * q / (1.0 - q);
  }
  if (fit.tail <= opt.tail_threshold * std::max(1.0, std::abs(p.back()))) fit.growth = Growth::convergent;
  return fit;
}

inline double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 8, 1e-11);
}

}  // namespace detail

/// Convex non-decreasing Phi on [0, inf], stored through H = log Phi so that
/// exponential growth never overflows.
struct OrliczFunction {
  std::string name;
  double param = 0.0;
  std::function<double(double)> log_eval;        // H(t); -inf where Phi = 0
  std::function<double(double)> log_derivative;  // H'(t); finite differences when empty
  std::optional<bool> log_tail_diverges;         // closed-form answer for int log Phi dt/t^2

  double eval(double t) const { return std::exp(log_eval(t)); }

  double derivative_of_log(double t) const {
    if (log_derivative) return log_derivative(t);
    const double h = 1e-6 * std::max(1.0, t);
    const double a = std::max(0.0, t - h);
    return (log_eval(t + h) - log_eval(a)) / (t + h - a);
  }

  /// inf { t : H(t) >= eta }, infinity when the set is empty.
  double log_inverse(double eta) const {
    if (log_eval(0.0) >= eta) return 0.0;
    double hi = 1.0;
    while (log_eval(hi) < eta) {
      hi *= 2.0;
      if (hi > 1e300) return std::numeric_limits<double>::infinity();
    }
    double lo = hi > 1.0 ? 0.5 * hi : 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (log_eval(mid) >= eta ? hi : lo) = mid;
    }
    return hi;
  }

  /// Generalized inverse inf { t : Phi(t) >= tau }.
  double inverse(double tau) const {
    if (tau <= 0.0) return 0.0;
    return log_inverse(std::log(tau));
  }
};

/// Phi(t) = exp(alpha t).
inline OrliczFunction orlicz_exp(double alpha) {
  if (!(alpha > 0.0)) throw InvalidInput("exp Phi needs alpha > 0");
  OrliczFunction f;
  f.name = "exp";
  f.param = alpha;
  f.log_eval = [alpha](double t) { return alpha * t; };
  f.log_derivative = [alpha](double) { return alpha; };
  f.log_tail_diverges = true;
  return f;
}

/// Phi(t) = t^p, p >= 1.
inline OrliczFunction orlicz_power(double p) {
  if (!(p >= 1.0)) throw InvalidInput("power Phi needs p >= 1 for convexity");
  OrliczFunction f;
  f.name = "power";
  f.param = p;
  f.log_eval = [p](double t) { return t > 0.0 ? p * std::log(t) : -std::numeric_limits<double>::infinity(); };
  f.log_derivative = [p](double t) { return t > 0.0 ? p / t : 0.0; };
  f.log_tail_diverges = false;
  return f;
}

/// Phi(t) = exp(sqrt t) for t >= 1, continued below 1 by its tangent line
/// e + (e/2)(t - 1) (exp(sqrt t) itself is concave near 0).
inline OrliczFunction orlicz_exp_sqrt() {
  OrliczFunction f;
  f.name = "exp-sqrt";
  const double e = std::exp(1.0);
  f.log_eval = [e](double t) { return t >= 1.0 ? std::sqrt(t) : std::log(e + 0.5 * e * (t - 1.0)); };
  f.log_derivative = [](double t) { return t >= 1.0 ? 0.5 / std::sqrt(t) : 0.5 / (1.0 + 0.5 * (t - 1.0)); };
  f.log_tail_diverges = false;
  return f;
}

/// Phi(t) = exp(t / log(e + t)).
inline OrliczFunction orlicz_exp_over_log() {
  OrliczFunction f;
  f.name = "exp-over-log";
  const double e = std::exp(1.0);
  f.log_eval = [e](double t) { return t / std::log(e + t); };
  f.log_derivative = [e](double t) {
    const double l = std::log(e + t);
    return 1.0 / l - t / ((e + t) * l * l);
  };
  f.log_tail_diverges = true;
  return f;
}

inline OrliczFunction orlicz_preset(const std::string& name, double param = 0.0) {
  if (name == "exp") return orlicz_exp(param > 0.0 ? param : 1.0);
  if (name == "power") return orlicz_power(param > 0.0 ? param : 2.0);
  if (name == "exp-sqrt") return orlicz_exp_sqrt();
  if (name == "exp-over-log") return orlicz_exp_over_log();
  throw InvalidInput("unknown Phi preset '" + name + "'");
}

struct OrliczCheck {
  bool monotone = true;
  bool convex = true;
  bool inverse_ok = true;
};

/// Monotonicity, midpoint convexity and Phi^-1(Phi(t)) <= t on t_k = k t_max/samples.
inline OrliczCheck check_orlicz(const OrliczFunction& phi, double t_max = 40.0, int samples = 400) {
  OrliczCheck c;
  const double dt = t_max / samples;
  for (int k = 0; k < samples; ++k) {
    const double a = k * dt, b = (k + 1) * dt;
    const double fa = phi.eval(a), fb = phi.eval(b);
    if (fb < fa) c.monotone = false;
    if (k + 2 <= samples) {
      const double fc = phi.eval(a + 2 * dt);
      if (fb > 0.5 * (fa + fc) * (1.0 + 1e-12)) c.convex = false;
    }
    if (fa > 0.0 && phi.inverse(fa) > a * (1.0 + 1e-9) + 1e-12) c.inverse_ok = false;
  }
  return c;
}

/// One truncated integral condition on H = log Phi.
struct ConditionResult {
  std::string label;
  GrowthFit fit;
  std::vector<double> limits;    // truncation points
  std::vector<double> partials;  // integral up to each truncation point
};

struct EquivalenceReport {
  std::vector<ConditionResult> conditions;
  OrliczCheck check;
  bool asserted = false;  // Phi convex and non-decreasing on the sample lattice
  bool uniform = false;   // every condition reached the same decisive verdict
};

namespace detail {

// int_a^inf f on the ladder a + w (2^k - 1), w = max(|a|, 1).
inline ConditionResult upward_condition(std::string label, double a, const std::function<double(double)>& f,
                                        const LadderOptions& opt) {
  ConditionResult r;
  r.label = std::move(label);
  const double w = std::max(std::abs(a), 1.0);
  std::vector<double> x;
  double sum = 0.0, lo = a;
  for (int k = 1; k <= opt.levels; ++k) {
    const double hi = a + w * (std::ldexp(1.0, k) - 1.0);
    sum += integrate(f, lo, hi);
    lo = hi;
    r.limits.push_back(hi);
    r.partials.push_back(sum);
    x.push_back(std::log(k * std::log(2.0)));
    if (!std::isfinite(sum)) break;
  }
  r.fit = classify_divergence(x, r.partials, opt);
  return r;
}

// int_0^b f on the ladder b 2^-k.
inline ConditionResult downward_condition(std::string label, double b, const std::function<double(double)>& f,
                                          const LadderOptions& opt) {
  ConditionResult r;
  r.label = std::move(label);
  std::vector<double> x;
  double sum = 0.0, hi = b;
  for (int k = 1; k <= opt.levels; ++k) {
    const double lo = std::ldexp(b, -k);
    sum += integrate(f, lo, hi);
    hi = lo;
    r.limits.push_back(lo);
    r.partials.push_back(sum);
    x.push_back(std::log(k * std::log(2.0)));
    if (!std::isfinite(sum)) break;
  }
  r.fit = classify_divergence(x, r.partials, opt);
  return r;
}

}  // namespace detail

/// int_Delta^inf log Phi(t) dt/t^2 by truncation.
inline ConditionResult log_tail_condition(const OrliczFunction& phi, double Delta, const LadderOptions& opt = {}) {
  if (!(Delta > 0.0)) throw InvalidInput("Delta must be positive");
  return detail::upward_condition(
      "int H(t) dt/t^2", Delta, [&](double t) { return phi.log_eval(t) / t / t; }, opt);
}

/// The five integral conditions on H = log Phi, each truncated on a dyadic
/// ladder and classified. For convex non-decreasing Phi they must agree.
inline EquivalenceReport condition_equivalence_suite(const OrliczFunction& phi, double Delta,
                                                     const LadderOptions& opt = {}) {
  if (!(Delta > 0.0)) throw InvalidInput("Delta must be positive");
  EquivalenceReport rep;
  rep.check = check_orlicz(phi);
  rep.asserted = rep.check.monotone && rep.check.convex;
  const double H0 = phi.log_eval(0.0);
  const double Hd = phi.log_eval(Delta);
  if (!(Hd > H0) || !std::isfinite(Hd))
    throw InvalidInput("need H(Delta) finite and above H(+0); increase Delta");

  rep.conditions.push_back(detail::upward_condition(
      "int H'(t) dt/t", Delta, [&](double t) { return phi.derivative_of_log(t) / t; }, opt));
  rep.conditions.push_back(log_tail_condition(phi, Delta, opt));
  rep.conditions.push_back(detail::downward_condition(
      "int_0 H(1/t) dt", 1.0 / Delta, [&](double t) { return phi.log_eval(1.0 / t); }, opt));
  rep.conditions.push_back(detail::upward_condition(
      "int d eta/H^-1(eta)", Hd, [&](double eta) { return 1.0 / phi.log_inverse(eta); }, opt));
  // tau = e^s: d tau/(tau Phi^-1(tau)) = ds / Phi^-1(e^s); the inverse goes
  // through the log domain once e^s overflows.
  rep.conditions.push_back(detail::upward_condition(
      "int d tau/(tau Phi^-1(tau))", Hd,
      [&](double s) { return 1.0 / (s < 700.0 ? phi.inverse(std::exp(s)) : phi.log_inverse(s)); }, opt));

  const Growth g0 = rep.conditions.front().fit.growth;
  rep.uniform = g0 != Growth::inconclusive;
  for (const auto& c : rep.conditions)
    if (c.fit.growth != g0) rep.uniform = false;
  return rep;
}

}  // namespace qcdir
