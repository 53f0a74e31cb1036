#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "qcdir/error.hpp"
#include "qcdir/grid.hpp"

namespace qcdir {

/// Bounded simply connected Jordan domain described by an ordered, positively
/// oriented sample of its boundary curve (the curve closes from the last
/// sample back to the first).
class DomainSpec {
 public:
  DomainSpec() = default;

  /// Validates the sample. Clockwise input is reversed. Throws on fewer than 64
  /// samples, non-finite points or a self-intersecting polygon.
  explicit DomainSpec(std::vector<cplx> boundary, bool check_simple = true)
      : boundary_(std::move(boundary)) {
    if (boundary_.size() < 64)
      throw InvalidInput("domain boundary needs at least 64 samples, got " +
                         std::to_string(boundary_.size()));
    for (const cplx& z : boundary_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw InvalidInput("domain boundary has a non-finite sample");
    if (signed_area() < 0.0) std::reverse(boundary_.begin(), boundary_.end());
    if (signed_area() <= 0.0) throw InvalidInput("domain boundary encloses no area");
    if (check_simple && self_intersects())
      throw InvalidInput("domain boundary is not a Jordan curve (self-intersection)");
  }

  const std::vector<cplx>& boundary() const { return boundary_; }
  std::size_t size() const { return boundary_.size(); }
  const cplx& operator[](std::size_t k) const { return boundary_[k]; }

  double signed_area() const {
    double a = 0.0;
    const std::size_t m = boundary_.size();
    for (std::size_t k = 0; k < m; ++k) {
      const cplx& p = boundary_[k];
      const cplx& q = boundary_[(k + 1) % m];
      a += p.real() * q.imag() - q.real() * p.imag();
    }
    return 0.5 * a;
  }

  cplx centroid() const {
    double cx = 0.0, cy = 0.0;
    const std::size_t m = boundary_.size();
    for (std::size_t k = 0; k < m; ++k) {
      const cplx& p = boundary_[k];
      const cplx& q = boundary_[(k + 1) % m];
      const double c = p.real() * q.imag() - q.real() * p.imag();
      cx += (p.real() + q.real()) * c;
      cy += (p.imag() + q.imag()) * c;
    }
    const double a6 = 6.0 * signed_area();
    return {cx / a6, cy / a6};
  }

  double diameter() const {
    double d = 0.0;
    for (std::size_t a = 0; a < boundary_.size(); ++a)
      for (std::size_t b = a + 1; b < boundary_.size(); ++b)
        d = std::max(d, std::abs(boundary_[a] - boundary_[b]));
    return d;
  }

  /// Cumulative arclength at each sample (first entry 0) and total length.
  std::vector<double> arclength(double* total = nullptr) const {
    const std::size_t m = boundary_.size();
    std::vector<double> s(m, 0.0);
    for (std::size_t k = 1; k < m; ++k) s[k] = s[k - 1] + std::abs(boundary_[k] - boundary_[k - 1]);
    if (total) *total = s[m - 1] + std::abs(boundary_[0] - boundary_[m - 1]);
    return s;
  }

  double mean_spacing() const {
    double total = 0.0;
    arclength(&total);
    return total / static_cast<double>(boundary_.size());
  }

  /// Winding number of the closed polygon about z (Sunday's crossing rule).
  int winding_number(cplx z) const {
    int wn = 0;
    const std::size_t m = boundary_.size();
    for (std::size_t k = 0; k < m; ++k) {
      const cplx& p = boundary_[k];
      const cplx& q = boundary_[(k + 1) % m];
      const double side = (q.real() - p.real()) * (z.imag() - p.imag()) -
                          (z.real() - p.real()) * (q.imag() - p.imag());
      if (p.imag() <= z.imag()) {
        if (q.imag() > z.imag() && side > 0) ++wn;
      } else if (q.imag() <= z.imag() && side < 0) {
        --wn;
      }
    }
    return wn;
  }

  bool contains(cplx z) const { return winding_number(z) == 1; }

  double distance_to_boundary(cplx z) const {
    double d = 1e300;
    const std::size_t m = boundary_.size();
    for (std::size_t k = 0; k < m; ++k) d = std::min(d, segment_distance(z, k));
    return d;
  }

  /// Inside flags for every node of `g`, computed row by row from edge crossings.
  std::vector<std::uint8_t> mask(const Grid& g) const {
    std::vector<std::uint8_t> out(g.size(), 0);
    const std::size_t m = boundary_.size();
    std::vector<double> xs;
    for (int j = 0; j < g.n(); ++j) {
      const double y = g.y(j);
      xs.clear();
      for (std::size_t k = 0; k < m; ++k) {
        const cplx& p = boundary_[k];
        const cplx& q = boundary_[(k + 1) % m];
        if ((p.imag() <= y) != (q.imag() <= y)) {
          const double t = (y - p.imag()) / (q.imag() - p.imag());
          xs.push_back(p.real() + t * (q.real() - p.real()));
        }
      }
      std::sort(xs.begin(), xs.end());
      for (std::size_t c = 0; c + 1 < xs.size(); c += 2) {
        const double lo = xs[c], hi = xs[c + 1];
        const int i_lo = std::max(0, static_cast<int>(std::ceil(g.fi({lo, y}))));
        const int i_hi = std::min(g.n() - 1, static_cast<int>(std::floor(g.fi({hi, y}))));
        for (int i = i_lo; i <= i_hi; ++i) {
          const double x = g.x(i);
          if (x > lo && x < hi) out[g.index(i, j)] = 1;
        }
      }
    }
    return out;
  }

  /// Per-node distance to the boundary polygon (brute force, only evaluated
  /// where `where` is set when provided).
  std::vector<double> distance_field(const Grid& g, const std::vector<std::uint8_t>* where = nullptr) const {
    std::vector<double> d(g.size(), 1e300);
    for (int j = 0; j < g.n(); ++j)
      for (int i = 0; i < g.n(); ++i) {
        const std::size_t k = g.index(i, j);
        if (where && !(*where)[k]) continue;
        d[k] = distance_to_boundary(g.node(i, j));
      }
    return d;
  }

 private:
  double segment_distance(cplx z, std::size_t k) const {
    const cplx& p = boundary_[k];
    const cplx& q = boundary_[(k + 1) % boundary_.size()];
    const cplx e = q - p;
    const double len2 = std::norm(e);
    double t = len2 > 0 ? ((z - p) * std::conj(e)).real() / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(z - (p + t * e));
  }

  bool self_intersects() const {
    const std::size_t m = boundary_.size();
    auto orient = [](cplx a, cplx b, cplx c) {
      const double v = (b.real() - a.real()) * (c.imag() - a.imag()) -
                       (b.imag() - a.imag()) * (c.real() - a.real());
      return (v > 0) - (v < 0);
    };
    // Bounding-box prefilter keeps the O(m^2) scan cheap for a few thousand samples.
    for (std::size_t a = 0; a < m; ++a) {
      const cplx p1 = boundary_[a], p2 = boundary_[(a + 1) % m];
      const double ax0 = std::min(p1.real(), p2.real()), ax1 = std::max(p1.real(), p2.real());
      const double ay0 = std::min(p1.imag(), p2.imag()), ay1 = std::max(p1.imag(), p2.imag());
      for (std::size_t b = a + 2; b < m; ++b) {
        if (a == 0 && b == m - 1) continue;  // adjacent through the seam
        const cplx q1 = boundary_[b], q2 = boundary_[(b + 1) % m];
        if (std::max(q1.real(), q2.real()) < ax0 || std::min(q1.real(), q2.real()) > ax1 ||
            std::max(q1.imag(), q2.imag()) < ay0 || std::min(q1.imag(), q2.imag()) > ay1)
          continue;
        const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
        const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
        if (o1 != o2 && o3 != o4) return true;
      }
    }
    return false;
  }

  std::vector<cplx> boundary_;
};

inline DomainSpec disk_domain(cplx center, double radius, std::size_t m = 512) {
  if (!(radius > 0)) throw InvalidInput("disk radius must be positive");
  std::vector<cplx> b(m);
  for (std::size_t k = 0; k < m; ++k)
    b[k] = center + radius * std::polar(1.0, 2.0 * kPi * static_cast<double>(k) / static_cast<double>(m));
  return DomainSpec(std::move(b), false);
}

inline DomainSpec ellipse_domain(cplx center, double a, double b, std::size_t m = 512) {
  if (!(a > 0 && b > 0)) throw InvalidInput("ellipse semi-axes must be positive");
  std::vector<cplx> pts(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double t = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(m);
    pts[k] = center + cplx(a * std::cos(t), b * std::sin(t));
  }
  return DomainSpec(std::move(pts), false);
}

/// Polygon with vertices `corners`, resampled to m points uniform in arclength.
inline DomainSpec polygon_domain(const std::vector<cplx>& corners, std::size_t m = 512) {
  if (corners.size() < 3) throw InvalidInput("polygon needs at least 3 vertices");
  const std::size_t c = corners.size();
  std::vector<double> cum(c + 1, 0.0);
  for (std::size_t k = 0; k < c; ++k) cum[k + 1] = cum[k] + std::abs(corners[(k + 1) % c] - corners[k]);
  const double total = cum[c];
  std::vector<cplx> pts(m);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(m);
    while (seg + 1 < c && cum[seg + 1] <= s) ++seg;
    const double t = (s - cum[seg]) / (cum[seg + 1] - cum[seg]);
    pts[k] = corners[seg] + t * (corners[(seg + 1) % c] - corners[seg]);
  }
  return DomainSpec(std::move(pts), true);
}

/// Continuous boundary data: one real value per boundary sample, interpolated
/// piecewise linearly in arclength (periodic across the seam).
struct BoundaryData {
  std::vector<double> values;

  BoundaryData() = default;
  explicit BoundaryData(std::vector<double> v) : values(std::move(v)) {
    for (double x : values)
      if (!std::isfinite(x)) throw InvalidInput("boundary data contains a non-finite value");
  }

  double operator[](std::size_t k) const { return values[k]; }
  std::size_t size() const { return values.size(); }

  /// Value at arclength position s along `domain` (wraps periodically).
  double at_arclength(const DomainSpec& domain, double s) const {
    double total = 0.0;
    const std::vector<double> cum = domain.arclength(&total);
    s = std::fmod(s, total);
    if (s < 0) s += total;
    const std::size_t m = values.size();
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const std::size_t k = static_cast<std::size_t>(std::distance(cum.begin(), it)) - 1;
    const double s0 = cum[k];
    const double s1 = (k + 1 < m) ? cum[k + 1] : total;
    const double t = s1 > s0 ? (s - s0) / (s1 - s0) : 0.0;
    return (1 - t) * values[k] + t * values[(k + 1) % m];
  }

  double min() const { return *std::min_element(values.begin(), values.end()); }
  double max() const { return *std::max_element(values.begin(), values.end()); }
};

template <class Fn>
BoundaryData boundary_data_from(const DomainSpec& d, Fn&& phi) {
  std::vector<double> v(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) v[k] = phi(d[k]);
  return BoundaryData(std::move(v));
}

}  // namespace qcdir
