#include "homoenergetic/rng.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace homoenergetic {

std::uint64_t substream_seed(std::uint64_t base, std::uint64_t index)
{
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Engine make_engine(std::uint64_t base, std::uint64_t index)
{
    return Engine(substream_seed(base, index));
}

double standard_normal(Engine& rng)
{
    boost::random::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

std::uint64_t poisson(Engine& rng, double mean)
{
    if (!(mean > 0.0))
        return 0;
    boost::random::poisson_distribution<std::uint64_t, double> dist(mean);
    return dist(rng);
}

std::uint64_t uniform_index(Engine& rng, std::uint64_t n)
{
    boost::random::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
    return dist(rng);
}

std::uint64_t draw_seed()
{
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace homoenergetic
