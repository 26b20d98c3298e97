#pragma once

#include <cstdint>
#include <random>

namespace homoenergetic {

//! Random engine used everywhere. Its output sequence is fixed by the C++ standard.
using Engine = std::mt19937_64;

//! Derive an independent seed for sub-stream `index` of a base seed (splitmix64 mix).
std::uint64_t substream_seed(std::uint64_t base, std::uint64_t index);

//! Engine seeded from a base seed and a sub-stream index.
Engine make_engine(std::uint64_t base, std::uint64_t index = 0);

//! Uniform double in [0, 1) built from the top 53 bits of one engine draw.
inline double uniform01(Engine& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

//! Uniform double in (0, 1]; safe as a logarithm argument.
inline double uniform01_open_low(Engine& rng)
{
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

//! Standard normal deviate (ziggurat, platform independent).
double standard_normal(Engine& rng);

//! Poisson deviate with the given mean (platform independent).
std::uint64_t poisson(Engine& rng, double mean);

//! Uniform integer in [0, n).
std::uint64_t uniform_index(Engine& rng, std::uint64_t n);

//! A fresh nondeterministic seed, for runs whose config omits one.
std::uint64_t draw_seed();

}  // namespace homoenergetic
