#pragma once

#include <cstdint>

#include "tadlab/tad.hpp"

namespace tadlab::detail {

/// Whole steps of clock that fit below t_stop; INT64_MAX when infinite.
std::int64_t stop_steps(double t_stop, double dt);
double extrapolate(Variant v, const TadModel& m, const BasinModel& bm, Side side, double t_hi);
double stop_rule(Variant v, const TadModel& m, const BasinModel& bm, double t_min_lo);

}  // namespace tadlab::detail
