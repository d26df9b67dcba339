#pragma once

#include "blockmf/measure.hpp"

namespace blockmf {

/// Wasserstein-1 distance for the ground metric |z - z'| on ordered colors.
double w1_discrete(const Measure& mu, const Measure& nu);

/// Bounded-Lipschitz distance: sup of sum g (mu - nu) over g with |g| <= 1
/// and |g(z) - g(z')| <= |z - z'|.
double d_bl(const Measure& mu, const Measure& nu);

/// Half the L1 distance.
double total_variation(const Measure& mu, const Measure& nu);

/// sum p log(p / q) with 0 log 0 = 0; +infinity when p charges a zero of q.
double relative_entropy(const Measure& p, const Measure& q);

}  // namespace blockmf
