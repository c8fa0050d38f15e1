#pragma once

#include <array>

#include "kleaf/manifold.hpp"

namespace kleaf::detail {

/// Inverse of a metric jet, entries truncated to `order`.
std::array<Jet, 16> invert_metric_jet(const MetricJet& g, int order);

/// Gamma^k_ij as jets of the given order, indexed [(k*4+i)*4+j].
std::array<Jet, 64> christoffel_jets(const MetricModel& metric, const SVec& x, int order);

}  // namespace kleaf::detail
