#include "tadlab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tadlab/error.hpp"

namespace tadlab {

const char* to_string(Side s) { return s == Side::left ? "left" : "right"; }

const char* to_string(CriticalKind k) {
  return k == CriticalKind::minimum ? "min" : "max";
}

namespace {

double horner(std::span<const double> c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

std::vector<double> derivative(std::span<const double> c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

Potential1D::Potential1D(std::vector<double> coeffs, double cos_amplitude,
                         double cos_frequency, Interval domain, std::string name)
    : coeffs_(std::move(coeffs)),
      cos_amp_(cos_amplitude),
      cos_freq_(cos_frequency),
      domain_(domain),
      name_(std::move(name)) {
  if (coeffs_.empty()) coeffs_.push_back(0.0);
  if (!(domain_.hi > domain_.lo)) throw ConfigError("potential domain must satisfy lo < hi");
  dcoeffs_ = derivative(coeffs_);
  ddcoeffs_ = derivative(dcoeffs_);
}

double Potential1D::eval(double x) const {
  double v = horner(coeffs_, x);
  if (cos_amp_ != 0.0) v += cos_amp_ * std::cos(cos_freq_ * x);
  return v;
}

double Potential1D::grad(double x) const {
  double g = horner(dcoeffs_, x);
  if (cos_amp_ != 0.0) g -= cos_amp_ * cos_freq_ * std::sin(cos_freq_ * x);
  return g;
}

double Potential1D::hess(double x) const {
  double h = horner(ddcoeffs_, x);
  if (cos_amp_ != 0.0) h -= cos_amp_ * cos_freq_ * cos_freq_ * std::cos(cos_freq_ * x);
  return h;
}

Potential1D quartic_well() {
  // -x^2 (x-2)^2 = -4x^2 + 4x^3 - x^4
  return Potential1D({0.0, 0.0, -4.0, 4.0, -1.0}, 0.0, 0.0, {-0.5, 2.5}, "quartic_well");
}

Potential1D tilted_quartic(double tilt) {
  return Potential1D({0.0, tilt, -4.0, 4.0, -1.0}, 0.0, 0.0, {-0.5, 2.5}, "tilted_quartic");
}

Potential1D periodic_wells(int wells, double barrier) {
  if (wells < 1) throw ConfigError("periodic potential needs at least one well");
  if (!(barrier > 0.0)) throw ConfigError("periodic potential needs a positive barrier");
  return Potential1D({0.0}, 0.5 * barrier, std::numbers::pi, {-0.5, 2.0 * wells + 0.5},
                     "periodic");
}

Potential1D polynomial(std::vector<double> coeffs, Interval domain) {
  return Potential1D(std::move(coeffs), 0.0, 0.0, domain, "polynomial");
}

namespace {

double refine_root(const Potential1D& pot, double a, double b) {
  double ga = pot.grad(a);
  double gb = pot.grad(b);
  for (int it = 0; it < 200; ++it) {
    const double m = a + 0.5 * (b - a);
    if (m <= a || m >= b) break;
    const double gm = pot.grad(m);
    if (gm == 0.0) return m;
    if (sgn(gm) == sgn(ga)) {
      a = m;
      ga = gm;
    } else {
      b = m;
      gb = gm;
    }
  }
  double x = std::abs(ga) < std::abs(gb) ? a : b;
  // Newton polish, kept only while it improves |V'|.
  for (int it = 0; it < 5 && std::abs(pot.grad(x)) >= kCriticalGradTol; ++it) {
    const double h = pot.hess(x);
    if (h == 0.0) break;
    const double next = x - pot.grad(x) / h;
    if (!(std::abs(pot.grad(next)) < std::abs(pot.grad(x)))) break;
    x = next;
  }
  return x;
}

// Minimises |V'| on [a, b] by golden section; used for touching roots.
double argmin_abs_grad(const Potential1D& pot, double a, double b) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    if (std::abs(pot.grad(c)) < std::abs(pot.grad(d))) {
      b = d;
    } else {
      a = c;
    }
    c = b - r * (b - a);
    d = a + r * (b - a);
  }
  return 0.5 * (a + b);
}

CriticalPoint classify(const Potential1D& pot, double x) {
  const double g = pot.grad(x);
  const double h = pot.hess(x);
  if (std::abs(h) <= kMorseTol) throw NonMorseError(x, h);
  if (!(std::abs(g) < kCriticalGradTol)) {
    std::ostringstream os;
    os.precision(12);
    os << "critical point refinement stalled at x = " << x << " (|V'| = " << std::abs(g) << ")";
    throw SolverError(os.str());
  }
  return {x, h > 0.0 ? CriticalKind::minimum : CriticalKind::maximum, pot.eval(x), h};
}

}  // namespace

std::vector<CriticalPoint> find_critical_points(const Potential1D& pot, std::size_t scan_n) {
  if (scan_n < 2) throw ConfigError("find_critical_points: scan_n must be >= 2");
  const Interval dom = pot.domain();
  const double step = dom.width() / static_cast<double>(scan_n - 1);
  std::vector<double> xs(scan_n), gs(scan_n);
  for (std::size_t i = 0; i < scan_n; ++i) {
    xs[i] = i + 1 == scan_n ? dom.hi : dom.lo + static_cast<double>(i) * step;
    gs[i] = pot.grad(xs[i]);
  }

  std::vector<CriticalPoint> out;
  for (std::size_t i = 0; i < scan_n; ++i) {
    if (gs[i] == 0.0) {
      out.push_back(classify(pot, xs[i]));
      continue;
    }
    if (i + 1 < scan_n && gs[i + 1] != 0.0 && sgn(gs[i]) != sgn(gs[i + 1])) {
      out.push_back(classify(pot, refine_root(pot, xs[i], xs[i + 1])));
      continue;
    }
    // Local minimum of |V'| without a sign change: a touching root is
    // necessarily degenerate.
    if (i > 0 && i + 1 < scan_n && sgn(gs[i - 1]) == sgn(gs[i]) && sgn(gs[i + 1]) == sgn(gs[i]) &&
        std::abs(gs[i]) <= std::abs(gs[i - 1]) && std::abs(gs[i]) <= std::abs(gs[i + 1])) {
      const double x = argmin_abs_grad(pot, xs[i - 1], xs[i + 1]);
      if (std::abs(pot.grad(x)) < kCriticalGradTol) throw NonMorseError(x, pot.hess(x));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return a.x < b.x; });
  return out;
}

double Basin::min_barrier() const { return std::min(V_left, V_right) - V0; }

BasinTopology::BasinTopology(std::vector<Basin> basins) : basins_(std::move(basins)) {
  if (basins_.empty()) throw TopologyError("topology has no basins");
}

const Basin& BasinTopology::basin(int label) const {
  if (label < 0 || static_cast<std::size_t>(label) >= basins_.size())
    throw TopologyError("basin label out of range: " + std::to_string(label));
  return basins_[static_cast<std::size_t>(label)];
}

std::optional<int> BasinTopology::neighbor(int label, Side s) const {
  const int next = s == Side::left ? label - 1 : label + 1;
  if (next < 0 || static_cast<std::size_t>(next) >= basins_.size()) return std::nullopt;
  return next;
}

Interval BasinTopology::span() const { return {basins_.front().bounds.lo, basins_.back().bounds.hi}; }

BasinTopology build_topology(const Potential1D& pot, std::span<const CriticalPoint> cps) {
  if (cps.empty()) throw TopologyError("no critical points: potential has no basin");
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const CriticalKind expect = i % 2 == 0 ? CriticalKind::maximum : CriticalKind::minimum;
    if (cps[i].kind != expect) {
      if (i == 0 || i + 1 == cps.size())
        throw TopologyError(
            "outermost critical points must be maxima: each basin needs a saddle on both sides");
      throw TopologyError("critical points do not alternate max/min");
    }
  }
  if (cps.back().kind != CriticalKind::maximum || cps.size() < 3)
    throw TopologyError(
        "outermost critical points must be maxima: each basin needs a saddle on both sides");

  std::vector<Basin> basins;
  for (std::size_t i = 1; i + 1 < cps.size(); i += 2) {
    const auto& l = cps[i - 1];
    const auto& m = cps[i];
    const auto& r = cps[i + 1];
    Basin b;
    b.label = static_cast<int>(basins.size());
    b.bounds = {l.x, r.x};
    b.x0 = m.x;
    b.V0 = m.V;
    b.V_left = l.V;
    b.V_right = r.V;
    b.Vpp0 = m.Vpp;
    b.Vpp_left = l.Vpp;
    b.Vpp_right = r.Vpp;
    if (!(b.barrier(Side::left) > 0.0 && b.barrier(Side::right) > 0.0))
      throw TopologyError("non-positive barrier in basin " + std::to_string(b.label));
    basins.push_back(b);
  }
  (void)pot;
  return BasinTopology(std::move(basins));
}

BasinTopology analyze(const Potential1D& pot, std::size_t scan_n) {
  const auto cps = find_critical_points(pot, scan_n);
  return build_topology(pot, cps);
}

int assign_basin(const BasinTopology& top, double x) {
  constexpr double tol = 1e-12;
  const auto basins = top.basins();
  for (const auto& b : basins) {
    if (std::abs(x - b.bounds.lo) <= tol || std::abs(x - b.bounds.hi) <= tol) {
      std::ostringstream os;
      os.precision(15);
      os << "x = " << x << " lies on a basin boundary (maximum)";
      throw AmbiguousPointError(os.str());
    }
  }
  const auto span = top.span();
  if (!(x > span.lo && x < span.hi)) {
    std::ostringstream os;
    os << "x = " << x << " is outside every basin";
    throw TopologyError(os.str());
  }
  auto it = std::upper_bound(basins.begin(), basins.end(), x,
                             [](double v, const Basin& b) { return v < b.bounds.hi; });
  return it->label;
}

}  // namespace tadlab
