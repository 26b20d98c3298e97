#pragma once

#include <cstdint>
#include <vector>

#include "homoenergetic/geometry.hpp"

namespace homoenergetic {

struct EntropyEstimate
{
    double value = 0.0;    //!< differential entropy -int f ln f
    double std_err = 0.0;  //!< bootstrap over the per-point log distances
};

//! (3/2)(1 + ln 2 pi), the differential entropy of the standard Maxwellian.
double maxwellian_entropy();

/*!
 * Kozachenko-Leonenko k-nearest-neighbour estimate
 * psi(N) - psi(k) + ln(4 pi / 3) + (3/N) sum ln eps_i,
 * with eps_i the distance from point i to its k-th neighbour.
 */
EntropyEstimate kl_entropy(const std::vector<Vec3>& points, int k = 4, int bootstrap = 200,
                           std::uint64_t seed = 7);

}  // namespace homoenergetic
