#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tadlab {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains_open(double x) const { return x > lo && x < hi; }
};

enum class Side { left, right };

const char* to_string(Side s);

/// Smooth 1D potential V(x) = sum_k c_k x^k + A cos(omega x) on a closed
/// simulation box.  The cosine term is how the periodic multi-well family
/// is expressed; user polynomials leave it at zero.
class Potential1D {
 public:
  Potential1D(std::vector<double> coeffs, double cos_amplitude,
              double cos_frequency, Interval domain, std::string name);

  double eval(double x) const;
  double grad(double x) const;
  double hess(double x) const;

  const Interval& domain() const { return domain_; }
  const std::string& name() const { return name_; }
  std::span<const double> coeffs() const { return coeffs_; }
  double cos_amplitude() const { return cos_amp_; }
  double cos_frequency() const { return cos_freq_; }

  /// Coefficients of V' in ascending order, used by the walker kernels.
  std::span<const double> grad_coeffs() const { return dcoeffs_; }

 private:
  std::vector<double> coeffs_;
  std::vector<double> dcoeffs_;
  std::vector<double> ddcoeffs_;
  double cos_amp_;
  double cos_freq_;
  Interval domain_;
  std::string name_;
};

/// V(x) = -x^2 (x-2)^2 on [-0.5, 2.5]: basin (0, 2), minimum 1, barrier 1.
Potential1D quartic_well();
/// Canonical well plus a linear tilt, V(x) = -x^2 (x-2)^2 + tilt x.
Potential1D tilted_quartic(double tilt = 0.1);
/// V(x) = (barrier / 2) cos(pi x) on [-0.5, 2 wells + 0.5]; maxima at even
/// integers, minima at odd integers.
Potential1D periodic_wells(int wells = 2, double barrier = 1.0);
Potential1D polynomial(std::vector<double> coeffs, Interval domain);

enum class CriticalKind { minimum, maximum };

const char* to_string(CriticalKind k);

struct CriticalPoint {
  double x = 0.0;
  CriticalKind kind = CriticalKind::minimum;
  double V = 0.0;
  double Vpp = 0.0;
};

inline constexpr double kCriticalGradTol = 1e-10;
inline constexpr double kMorseTol = 1e-8;

/// Scans V' on scan_n uniform nodes, refines every sign change to
/// |V'| < 1e-10 and classifies by sign(V'').  Throws NonMorseError on a
/// degenerate critical point, including touching roots of V' that do not
/// change sign.
std::vector<CriticalPoint> find_critical_points(const Potential1D& pot,
                                                std::size_t scan_n = 20000);

struct Basin {
  int label = 0;
  Interval bounds;  // (left saddle, right saddle)
  double x0 = 0.0;  // minimum
  double V0 = 0.0;
  double V_left = 0.0;
  double V_right = 0.0;
  double Vpp0 = 0.0;
  double Vpp_left = 0.0;
  double Vpp_right = 0.0;

  double barrier(Side s) const { return (s == Side::left ? V_left : V_right) - V0; }
  double min_barrier() const;
  double saddle(Side s) const { return s == Side::left ? bounds.lo : bounds.hi; }
};

class BasinTopology {
 public:
  explicit BasinTopology(std::vector<Basin> basins);

  std::span<const Basin> basins() const { return basins_; }
  const Basin& basin(int label) const;
  std::size_t size() const { return basins_.size(); }

  /// Neighbouring basin through the given saddle; nullopt at an outer wall.
  std::optional<int> neighbor(int label, Side s) const;

  /// [first maximum, last maximum].
  Interval span() const;

 private:
  std::vector<Basin> basins_;
};

BasinTopology build_topology(const Potential1D& pot,
                             std::span<const CriticalPoint> cps);

/// Convenience: find_critical_points followed by build_topology.
BasinTopology analyze(const Potential1D& pot, std::size_t scan_n = 20000);

/// Label of the basin whose open interval contains x.  Throws
/// AmbiguousPointError within 1e-12 of a maximum and TopologyError outside
/// the union of basins.
int assign_basin(const BasinTopology& top, double x);

}  // namespace tadlab
