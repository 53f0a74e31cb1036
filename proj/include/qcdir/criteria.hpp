#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "qcdir/domain.hpp"
#include "qcdir/error.hpp"
#include "qcdir/grid.hpp"
#include "qcdir/orlicz.hpp"

namespace qcdir {

// Solvability criteria at a boundary point z0. Integrands are functions of
// the offset d = z - z0, so shells far below any grid spacing stay exact.
// Improper integrals are truncated on the dyadic ladder eps_k = eps0 2^-k
// and classified from the growth of the truncations; the verdicts are
// heuristic and always carry their trace.

using OffsetFunction = std::function<double(cplx)>;

/// Re-bases a function of z at z0.
inline OffsetFunction about(std::function<double(cplx)> f, cplx z0) {
  return [f = std::move(f), z0](cplx d) { return f(z0 + d); };
}

/// K^T_mu(z, z0) = |1 - mu conj(d)/d|^2 / (1 - |mu|^2) with d = z - z0.
inline double tangent_dilatation(cplx mu, cplx d) {
  const double m2 = std::norm(mu);
  if (!(m2 < 1.0)) return std::numeric_limits<double>::infinity();
  const cplx u = d / std::abs(d);
  return std::norm(1.0 - mu * std::conj(u) * std::conj(u)) / (1.0 - m2);
}

inline OffsetFunction tangent_dilatation(std::function<cplx(cplx)> mu, cplx z0) {
  return [mu = std::move(mu), z0](cplx d) { return tangent_dilatation(mu(z0 + d), d); };
}

/// Same, for a coefficient evaluated as mu(z0, d) so deep shells keep d exact.
inline OffsetFunction tangent_dilatation_offset(std::function<cplx(cplx, cplx)> mu, cplx z0) {
  return [mu = std::move(mu), z0](cplx d) { return tangent_dilatation(mu(z0, d), d); };
}

/// Radial profiles Q(z) = q(|z - z0|): `const` c, `log` log(1/r),
/// `pow-log` log^lambda(1/r), `inv-r` 1/r, `inv-r2` 1/r^2, `log-e` log(e/r),
/// `exp-int` 2 + log(1/r) (exp(Q) = e^2/r is integrable).
inline OffsetFunction q_preset(const std::string& name, double param = 0.0) {
  if (name == "const") {
    const double c = param > 0.0 ? param : 1.0;
    return [c](cplx) { return c; };
  }
  if (name == "log") return [](cplx d) { return std::log(1.0 / std::abs(d)); };
  if (name == "pow-log") {
    if (!(param > 0.0)) throw InvalidInput("pow-log needs lambda > 0");
    return [param](cplx d) { return std::pow(std::log(1.0 / std::abs(d)), param); };
  }
  if (name == "inv-r") return [](cplx d) { return 1.0 / std::abs(d); };
  if (name == "inv-r2") return [](cplx d) { return 1.0 / std::norm(d); };
  if (name == "log-e") return [](cplx d) { return 1.0 + std::log(1.0 / std::abs(d)); };
  if (name == "exp-int") return [](cplx d) { return 2.0 + std::log(1.0 / std::abs(d)); };
  throw InvalidInput("unknown Q preset '" + name + "'");
}

enum class Criterion { fmo, bmo_dominant, mean, cz, lehto, orlicz, exp, psi };
enum class Verdict { satisfied, violated, inconclusive };

inline const char* name(Criterion c) {
  switch (c) {
    case Criterion::fmo: return "FMO";
    case Criterion::bmo_dominant: return "BMO-dominant";
    case Criterion::mean: return "MEAN";
    case Criterion::cz: return "CZ";
    case Criterion::lehto: return "LEHTO";
    case Criterion::orlicz: return "ORLICZ";
    case Criterion::exp: return "EXP";
    default: return "PSI";
  }
}

inline const char* name(Verdict v) {
  switch (v) {
    case Verdict::satisfied: return "SATISFIED";
    case Verdict::violated: return "VIOLATED";
    default: return "INCONCLUSIVE";
  }
}

struct TracePoint {
  double eps;
  double value;
};

struct CriterionVerdict {
  Criterion criterion{};
  Verdict verdict = Verdict::inconclusive;
  std::vector<TracePoint> trace;  // eps strictly decreasing
  double exponent = 0.0;          // fitted slope over the last ladder points
  std::map<std::string, double> params;
  std::string note;
};

/// 0.5 min(e^-e, distance from z0 to the farthest boundary sample).
inline double default_eps0(cplx z0, const DomainSpec& domain) {
  double far = 0.0;
  for (const cplx& b : domain.boundary()) far = std::max(far, std::abs(b - z0));
  return 0.5 * std::min(std::exp(-std::exp(1.0)), far);
}

/// (1/2pi) int K(z0 + r e^{i theta}) d theta, trapezoid rule.
inline double circle_mean(const OffsetFunction& K, double r, int nodes = 256) {
  if (!(r > 0.0)) throw InvalidInput("circle_mean: radius must be positive");
  if (nodes < 256) throw InvalidInput("circle_mean: needs at least 256 angular nodes");
  double s = 0.0;
  for (int k = 0; k < nodes; ++k) s += K(std::polar(r, 2.0 * kPi * k / nodes));
  return s / nodes;
}

/// Grid-backed version; radii below two spacings are rejected.
inline double circle_mean(const RealField& K, cplx z0, double r, int nodes = 256) {
  if (r < 2.0 * K.grid.spacing())
    throw InvalidInput("circle_mean: radius below the grid resolution floor (2h); use a callable");
  return circle_mean([&](cplx d) { return interpolate_value(K, z0 + d); }, r, nodes);
}

namespace detail {

inline void check_eps0(double eps0) {
  if (!(eps0 > 0.0 && eps0 < 1.0)) throw InvalidInput("eps0 must lie in (0, 1)");
}

inline double eps_at(double eps0, int k) { return std::ldexp(eps0, -k); }

inline double angular_sum(const OffsetFunction& G, double r, int nodes) {
  double s = 0.0;
  for (int k = 0; k < nodes; ++k) s += G(std::polar(r, 2.0 * kPi * k / nodes));
  return s * (2.0 * kPi / nodes);
}

// int_{log a}^{log b} ds int_0^{2 pi} G(e^{s + i theta}) d theta; callers fold
// the area element r^2 into G (scaled) so that nothing underflows.
inline double shell(const OffsetFunction& G, double a, double b, int nodes) {
  return integrate([&](double s) { return angular_sum(G, std::exp(s), nodes); }, std::log(a), std::log(b));
}

// Log of int_{a<|d|<b} exp(L(d)) dm with a fixed Gauss rule in s.
inline double log_shell(const OffsetFunction& L, double a, double b, int nodes) {
  constexpr int m = 10;
  static const double x[m] = {-0.9739065285171717, -0.8650633666889845, -0.6794095682990244, -0.4333953941292472,
                              -0.1488743389816312, 0.1488743389816312,  0.4333953941292472,  0.6794095682990244,
                              0.8650633666889845,  0.9739065285171717};
  static const double w[m] = {0.0666713443086881, 0.1494513491505806, 0.2190863625159820, 0.2692667193099963,
                              0.2955242247147529, 0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                              0.1494513491505806, 0.0666713443086881};
  const double sa = std::log(a), sb = std::log(b);
  const double mid = 0.5 * (sa + sb), half = 0.5 * (sb - sa);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(m) * nodes);
  double top = -std::numeric_limits<double>::infinity();
  for (int q = 0; q < m; ++q) {
    const double s = mid + half * x[q];
    const double r = std::exp(s);
    const double base = std::log(half * w[q] * 2.0 * kPi / nodes) + 2.0 * s;
    for (int k = 0; k < nodes; ++k) {
      const double t = base + L(std::polar(r, 2.0 * kPi * k / nodes));
      if (std::isnan(t)) throw InvalidInput("integrand is not finite");
      terms.push_back(t);
      top = std::max(top, t);
    }
  }
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  return top + std::log(acc);
}

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline void require_finite_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(what) + " is zero or not finite");
}

// Samples of Q on every shell eps_j < |d| < 2 eps_j, j = 1..levels + tail_levels,
// at two 10-point Gauss panels in s = log r times the angular nodes. The
// weights (area element scaled by eps_j^2) are the same for every shell.
struct ShellSamples {
  int shells = 0, radial = 0, angular = 0;
  std::vector<double> weight;  // per radial node
  std::vector<double> q;       // [shell][radial][angular]

  const double* at(int j, int p) const {
    return q.data() + (static_cast<std::size_t>(j - 1) * radial + p) * angular;
  }
};

inline ShellSamples sample_shells(const OffsetFunction& Q, double eps0, const LadderOptions& opt) {
  static const double x[10] = {-0.9739065285171717, -0.8650633666889845, -0.6794095682990244, -0.4333953941292472,
                               -0.1488743389816312, 0.1488743389816312,  0.4333953941292472,  0.6794095682990244,
                               0.8650633666889845,  0.9739065285171717};
  static const double w[10] = {0.0666713443086881, 0.1494513491505806, 0.2190863625159820, 0.2692667193099963,
                               0.2955242247147529, 0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                               0.1494513491505806, 0.0666713443086881};
  ShellSamples S;
  S.shells = opt.levels + opt.tail_levels;
  S.radial = 20;
  S.angular = opt.angular_nodes;
  const double half = 0.25 * std::log(2.0);
  std::vector<double> sigma;  // s - log eps_j
  for (int panel = 0; panel < 2; ++panel)
    for (int q = 0; q < 10; ++q) {
      const double t = (2 * panel + 1) * half + half * x[q];
      sigma.push_back(t);
      S.weight.push_back(half * w[q] * std::exp(2.0 * t) * 2.0 * kPi / S.angular);
    }
  S.q.resize(static_cast<std::size_t>(S.shells) * S.radial * S.angular);
  std::size_t idx = 0;
  for (int j = 1; j <= S.shells; ++j) {
    const double ej = eps_at(eps0, j);
    for (int p = 0; p < S.radial; ++p) {
      const double r = ej * std::exp(sigma[p]);
      for (int k = 0; k < S.angular; ++k) {
        const double v = Q(std::polar(r, 2.0 * kPi * k / S.angular));
        if (!std::isfinite(v)) throw InvalidInput("Q is not finite on the sampled shells");
        S.q[idx++] = v;
      }
    }
  }
  return S;
}

// Means over B(z0, eps_k), k = 1..levels, from the shell samples.
inline std::vector<double> disk_means(const ShellSamples& S, int levels) {
  std::vector<double> sigma(S.shells + 2, 0.0);
  for (int j = 1; j <= S.shells; ++j)
    for (int p = 0; p < S.radial; ++p) {
      const double* v = S.at(j, p);
      double acc = 0.0;
      for (int k = 0; k < S.angular; ++k) acc += v[k];
      sigma[j] += S.weight[p] * acc;
    }
  // B_k = sum_{j > k} sigma_j 4^{-(j - k)}, mean = B_k / pi.
  std::vector<double> mean(levels + 1, 0.0);
  double B = 0.0;
  for (int k = S.shells - 1; k >= 1; --k) {
    B = 0.25 * (sigma[k + 1] + B);
    if (k <= levels) mean[k] = B / kPi;
  }
  return mean;
}

inline std::vector<double> loglog_scale(double eps0, int levels) {
  std::vector<double> x;
  for (int k = 1; k <= levels; ++k) x.push_back(std::log(std::log(1.0 / eps_at(eps0, k))));
  return x;
}

struct Bounded {
  bool bounded = true;
  double slope = 0.0;
};

// Unbounded when log(value) grows with slope >= threshold against x.
inline Bounded classify_bounded(const std::vector<double>& x, const std::vector<double>& v, const LadderOptions& opt) {
  Bounded b;
  const std::size_t n = v.size();
  double top = 0.0;
  for (std::size_t k = n > static_cast<std::size_t>(opt.fit_points) ? n - opt.fit_points : 0; k < n; ++k)
    top = std::max(top, std::abs(v[k]));
  if (!std::isfinite(top)) {
    b.bounded = false;
    b.slope = std::numeric_limits<double>::infinity();
    return b;
  }
  if (top <= 1e-12) return b;
  std::vector<double> lv;
  for (double y : v) lv.push_back(std::log(std::max(std::abs(y), 1e-300)));
  b.slope = last_slope(x, lv, opt.fit_points);
  b.bounded = b.slope < opt.slope_threshold;
  return b;
}

// Vanishing when the ratio is below tail_threshold or log(ratio) decays with
// slope <= -threshold against x.
inline Bounded classify_vanishing(const std::vector<double>& x, const std::vector<double>& v,
                                  const LadderOptions& opt) {
  Bounded b;
  if (v.empty() || !std::isfinite(v.back())) {
    b.bounded = false;
    b.slope = std::numeric_limits<double>::infinity();
    return b;
  }
  if (std::abs(v.back()) < opt.tail_threshold) return b;
  std::vector<double> lv;
  for (double y : v) lv.push_back(std::log(std::max(std::abs(y), 1e-300)));
  b.slope = last_slope(x, lv, opt.fit_points);
  b.bounded = b.slope <= -opt.slope_threshold;
  return b;
}

inline Verdict from_growth(Growth g, bool divergent_is_good) {
  if (g == Growth::inconclusive) return Verdict::inconclusive;
  return (g == Growth::divergent) == divergent_is_good ? Verdict::satisfied : Verdict::violated;
}

}  // namespace detail

/// T(eps) = int_eps^eps0 dr/(r k(r)) for a circle-mean profile k; SATISFIED
/// when T diverges.
inline CriterionVerdict lehto_test(const std::function<double(double)>& kmean, double eps0,
                                   const LadderOptions& opt = {}) {
  detail::check_eps0(eps0);
  CriterionVerdict v;
  v.criterion = Criterion::lehto;
  v.params["eps0"] = eps0;
  std::vector<double> partial;
  double T = 0.0;
  for (int k = 1; k <= opt.levels; ++k) {
    const double lo = detail::eps_at(eps0, k);
    T += detail::integrate(
        [&](double s) {
          const double m = kmean(std::exp(s));
          detail::require_finite_positive(m, "circle mean of K^T");
          return 1.0 / m;
        },
        std::log(lo), std::log(2.0 * lo));
    v.trace.push_back({lo, T});
    partial.push_back(T);
  }
  const GrowthFit fit = detail::classify_divergence(detail::loglog_scale(eps0, opt.levels), partial, opt);
  v.verdict = detail::from_growth(fit.growth, true);
  v.exponent = fit.slope;
  v.params["tail"] = fit.tail;
  v.note = std::string("truncations ") + name(fit.growth) + " (heuristic growth fit)";
  return v;
}

inline CriterionVerdict lehto_test(const OffsetFunction& KT, double eps0, const LadderOptions& opt = {}) {
  return lehto_test([&](double r) { return circle_mean(KT, r, opt.angular_nodes); }, eps0, opt);
}

/// A(eps) = int_{eps<|z-z0|<eps0} K^T dm/|z-z0|^2; SATISFIED when A/log^2(1/eps) -> 0.
inline CriterionVerdict cz_test(const OffsetFunction& KT, double eps0, const LadderOptions& opt = {}) {
  detail::check_eps0(eps0);
  CriterionVerdict v;
  v.criterion = Criterion::cz;
  v.params["eps0"] = eps0;
  std::vector<double> ratio;
  double A = 0.0;
  for (int k = 1; k <= opt.levels; ++k) {
    const double lo = detail::eps_at(eps0, k);
    A += detail::shell(KT, lo, 2.0 * lo, opt.angular_nodes);
    const double l = std::log(1.0 / lo);
    ratio.push_back(A / (l * l));
    v.trace.push_back({lo, ratio.back()});
  }
  const auto b = detail::classify_vanishing(detail::loglog_scale(eps0, opt.levels), ratio, opt);
  v.verdict = b.bounded ? Verdict::satisfied : Verdict::violated;
  v.exponent = b.slope;
  v.params["A"] = A;
  return v;
}

/// Mean of K^T over B(z0, eps); SATISFIED when it stays bounded.
inline CriterionVerdict mean_test(const OffsetFunction& KT, double eps0, const LadderOptions& opt = {}) {
  detail::check_eps0(eps0);
  CriterionVerdict v;
  v.criterion = Criterion::mean;
  v.params["eps0"] = eps0;
  const auto mean = detail::disk_means(detail::sample_shells(KT, eps0, opt), opt.levels);
  std::vector<double> vals(mean.begin() + 1, mean.end());
  for (int k = 1; k <= opt.levels; ++k) v.trace.push_back({detail::eps_at(eps0, k), mean[k]});
  const auto b = detail::classify_bounded(detail::loglog_scale(eps0, opt.levels), vals, opt);
  v.verdict = b.bounded ? Verdict::satisfied : Verdict::violated;
  v.exponent = b.slope;
  return v;
}

/// Dispersion d(eps) = mean over B(z0, eps) of |Q - Q_eps|; SATISFIED when
/// it stays bounded. `limsup` is the largest of the three smallest-eps values.
inline CriterionVerdict fmo_test(const OffsetFunction& Q, double eps0, const LadderOptions& opt = {}) {
  detail::check_eps0(eps0);
  CriterionVerdict v;
  v.criterion = Criterion::fmo;
  v.params["eps0"] = eps0;
  const auto S = detail::sample_shells(Q, eps0, opt);
  const auto mean = detail::disk_means(S, opt.levels);
  std::vector<double> disp;
  for (int k = 1; k <= opt.levels; ++k) {
    const double ek = detail::eps_at(eps0, k);
    const double qk = mean[k];
    if (!std::isfinite(qk)) throw InvalidInput("Q is not integrable on B(z0, eps)");
    double acc = 0.0, scale = 1.0;
    for (int j = k + 1; j <= k + opt.tail_levels; ++j) {
      scale *= 0.25;
      double sj = 0.0;
      for (int p = 0; p < S.radial; ++p) {
        const double* v = S.at(j, p);
        double a = 0.0;
        for (int t = 0; t < S.angular; ++t) a += std::abs(v[t] - qk);
        sj += S.weight[p] * a;
      }
      acc += scale * sj;
    }
    disp.push_back(acc / kPi);
    v.trace.push_back({ek, disp.back()});
  }
  const auto b = detail::classify_bounded(detail::loglog_scale(eps0, opt.levels), disp, opt);
  v.verdict = b.bounded ? Verdict::satisfied : Verdict::violated;
  v.exponent = b.slope;
  double top = 0.0;
  for (std::size_t k = disp.size() >= 3 ? disp.size() - 3 : 0; k < disp.size(); ++k) top = std::max(top, disp[k]);
  v.params["limsup"] = top;
  return v;
}

/// Sup of mean |Q - Q_B| over discs B inside `region`: centres on a coarse
/// lattice, radii half_width 2^-m down to 4 spacings. A lower bound for the
/// BMO seminorm.
inline double bmo_norm(const RealField& Q, const DomainSpec& region) {
  const Grid& g = Q.grid;
  const double h = g.spacing();
  const int stride = std::max(1, g.n() / 32);
  double best = 0.0;
  bool any = false;
  for (int cj = 0; cj < g.n(); cj += stride)
    for (int ci = 0; ci < g.n(); ci += stride) {
      const cplx c = g.node(ci, cj);
      if (!region.contains(c)) continue;
      const double room = region.distance_to_boundary(c);
      for (double rho = g.half_width(); rho >= 4.0 * h; rho *= 0.5) {
        if (rho > room) continue;
        const int span = static_cast<int>(std::ceil(rho / h));
        double sum = 0.0;
        std::size_t cnt = 0;
        for (int j = std::max(0, cj - span); j <= std::min(g.n() - 1, cj + span); ++j)
          for (int i = std::max(0, ci - span); i <= std::min(g.n() - 1, ci + span); ++i)
            if (Q.active(i, j) && std::abs(g.node(i, j) - c) < rho) {
              sum += Q(i, j);
              ++cnt;
            }
        if (cnt == 0) continue;
        const double avg = sum / cnt;
        double osc = 0.0;
        for (int j = std::max(0, cj - span); j <= std::min(g.n() - 1, cj + span); ++j)
          for (int i = std::max(0, ci - span); i <= std::min(g.n() - 1, ci + span); ++i)
            if (Q.active(i, j) && std::abs(g.node(i, j) - c) < rho) osc += std::abs(Q(i, j) - avg);
        best = std::max(best, osc / cnt);
        any = true;
      }
    }
  if (!any) throw InvalidInput("bmo_norm: region too small for any disc");
  return best;
}

/// (a) int_{B(z0, eps0)} Phi(K^T) dm finite and (b) int_Delta^inf log Phi dt/t^2
/// infinite. (a) is accumulated in the log domain; (b) uses the closed form
/// for presets and a truncated integral otherwise.
inline CriterionVerdict orlicz_test(const OffsetFunction& KT, double eps0, const OrliczFunction& phi, double Delta,
                                    const LadderOptions& opt = {}) {
  detail::check_eps0(eps0);
  CriterionVerdict v;
  v.criterion = Criterion::orlicz;
  v.params["eps0"] = eps0;
  v.params["Delta"] = Delta;
  if (phi.param != 0.0) v.params["param"] = phi.param;
  std::vector<double> partial;
  double logF = -std::numeric_limits<double>::infinity();
  bool overflow = false;
  for (int k = 1; k <= opt.levels && !overflow; ++k) {
    const double lo = detail::eps_at(eps0, k);
    logF = detail::log_add(logF, detail::log_shell([&](cplx d) { return phi.log_eval(KT(d)); }, lo, 2.0 * lo,
                                                   opt.angular_nodes));
    overflow = logF > 700.0;
    partial.push_back(overflow ? std::numeric_limits<double>::infinity() : std::exp(logF));
    v.trace.push_back({lo, partial.back()});
  }
  const GrowthFit a = detail::classify_divergence(detail::loglog_scale(eps0, static_cast<int>(partial.size())),
                                                  partial, opt);
  Growth b;
  std::string how;
  if (phi.log_tail_diverges) {
    b = *phi.log_tail_diverges ? Growth::divergent : Growth::convergent;
    how = "closed form";
  } else {
    b = log_tail_condition(phi, Delta, opt).fit.growth;
    how = "truncated";
  }
  if (a.growth == Growth::convergent && b == Growth::divergent)
    v.verdict = Verdict::satisfied;
  else if (a.growth == Growth::divergent || b == Growth::convergent)
    v.verdict = Verdict::violated;
  v.exponent = a.slope;
  v.note = std::string("(a) ") + name(a.growth) + ", (b) " + name(b) + " (" + how + ")";
  return v;
}

/// Exponential class: Phi(t) = exp(alpha t).
inline CriterionVerdict exp_test(const OffsetFunction& KT, double eps0, double alpha, const LadderOptions& opt = {}) {
  CriterionVerdict v = orlicz_test(KT, eps0, orlicz_exp(alpha), 1.0, opt);
  v.criterion = Criterion::exp;
  v.params["alpha"] = alpha;
  return v;
}

/// psi_{z0,eps}(t) = psi(t) on (eps, eps0) and I(eps) = int_eps^eps0 psi dt.
struct PsiFamily {
  std::string name;
  std::function<double(double)> psi;
  std::function<double(double, double)> closed_I;  // optional closed form of I(eps, eps0)

  double I(double eps, double eps0) const {
    if (closed_I) return closed_I(eps, eps0);
    double acc = 0.0;
    for (double hi = eps0; hi > eps; hi *= 0.5) {
      const double lo = std::max(eps, 0.5 * hi);
      acc += detail::integrate([&](double s) { const double t = std::exp(s); return psi(t) * t; }, std::log(lo),
                               std::log(hi));
    }
    return acc;
  }
};

/// psi(t) = 1/t, I = log(eps0/eps).
inline PsiFamily psi_inverse() {
  return {"1/t", [](double t) { return 1.0 / t; }, [](double e, double e0) { return std::log(e0 / e); }};
}

/// psi(t) = 1/(t log(e/t)), I = log log(e/eps) - log log(e/eps0).
inline PsiFamily psi_inverse_log() {
  return {"1/(t log(e/t))", [](double t) { return 1.0 / (t * (1.0 + std::log(1.0 / t))); },
          [](double e, double e0) { return std::log(1.0 + std::log(1.0 / e)) - std::log(1.0 + std::log(1.0 / e0)); }};
}

/// int_{eps<|z-z0|<eps0} K^T psi^2 dm / I(eps)^2; SATISFIED when it tends to 0.
inline CriterionVerdict psi_condition_test(const OffsetFunction& KT, const PsiFamily& family, double eps0,
                                           const LadderOptions& opt = {}) {
  detail::check_eps0(eps0);
  CriterionVerdict v;
  v.criterion = Criterion::psi;
  v.params["eps0"] = eps0;
  v.note = "psi = " + family.name;
  std::vector<double> ratio, x;
  double N = 0.0;
  for (int k = 1; k <= opt.levels; ++k) {
    const double lo = detail::eps_at(eps0, k);
    N += detail::shell(
        [&](cplx d) {
          const double r = std::abs(d);
          const double rp = r * family.psi(r);
          return KT(d) * rp * rp;
        },
        lo, 2.0 * lo, opt.angular_nodes);
    const double I = family.I(lo, eps0);
    detail::require_finite_positive(I, "I(eps)");
    ratio.push_back(N / (I * I));
    x.push_back(std::log(I));
    v.trace.push_back({lo, ratio.back()});
  }
  const auto b = detail::classify_vanishing(x, ratio, opt);
  v.verdict = b.bounded ? Verdict::satisfied : Verdict::violated;
  v.exponent = b.slope;
  return v;
}

struct GrowthCheck {
  std::vector<double> eps;
  std::vector<double> I;
  double slope = 0.0;        // least-squares slope of I against log log(1/eps)
  double early_slope = 0.0;  // same over the first fit points
  double late_slope = 0.0;   // and over the last ones
  bool pass = false;         // late slope does not exceed the early one by more than 10%
};

/// I(eps) = int_{eps<|z-z0|<eps0} phi dm/(|z-z0| log(1/|z-z0|))^2 on
/// eps_k = eps0 2^-k, k = 1..levels, fitted against log log(1/eps).
inline GrowthCheck fmo_growth_check(const OffsetFunction& phi, double eps0, int levels,
                                    const LadderOptions& opt = {}) {
  if (!(eps0 > 0.0 && eps0 < std::exp(-std::exp(1.0))))
    throw InvalidInput("eps0 must lie in (0, e^-e)");
  if (levels < 2 * opt.fit_points) throw InvalidInput("fmo_growth_check: too few levels");
  GrowthCheck g;
  std::vector<double> x;
  double acc = 0.0;
  for (int k = 1; k <= levels; ++k) {
    const double lo = detail::eps_at(eps0, k);
    acc += detail::shell(
        [&](cplx d) {
          const double l = std::log(1.0 / std::abs(d));
          return phi(d) / (l * l);
        },
        lo, 2.0 * lo, opt.angular_nodes);
    g.eps.push_back(lo);
    g.I.push_back(acc);
    x.push_back(std::log(std::log(1.0 / lo)));
  }
  g.slope = detail::last_slope(x, g.I, levels);
  g.late_slope = detail::last_slope(x, g.I, opt.fit_points);
  std::vector<double> xe(x.begin(), x.begin() + opt.fit_points), ie(g.I.begin(), g.I.begin() + opt.fit_points);
  g.early_slope = detail::last_slope(xe, ie, opt.fit_points);
  g.pass = std::isfinite(g.slope) && g.late_slope <= 1.1 * std::max(g.early_slope, 0.0) + 1e-9;
  return g;
}

}  // namespace qcdir
