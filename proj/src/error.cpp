#include "tadlab/error.hpp"

#include <sstream>

namespace tadlab {

namespace {
std::string fmt_non_morse(double x, double vpp) {
  std::ostringstream os;
  os.precision(12);
  os << "non-Morse critical point at x = " << x << " (V'' = " << vpp << ")";
  return os.str();
}

std::string fmt_escape(double x, double lo, double hi) {
  std::ostringstream os;
  os.precision(12);
  os << "position " << x << " escaped the domain [" << lo << ", " << hi << "]";
  return os.str();
}
}  // namespace

NonMorseError::NonMorseError(double x_, double vpp_)
    : Error(fmt_non_morse(x_, vpp_)), x(x_), vpp(vpp_) {}

DomainEscapeError::DomainEscapeError(double x_, double lo, double hi)
    : Error(fmt_escape(x_, lo, hi)), x(x_) {}

TimeoutError::TimeoutError(const std::string& what, double elapsed_)
    : Error(what), elapsed(elapsed_) {}

GridTooCoarseError::GridTooCoarseError(const std::string& what, double defect_)
    : SolverError(what), defect(defect_) {}

}  // namespace tadlab
