#include "homoenergetic/entropy.hpp"

#include <cmath>
#include <iterator>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include "homoenergetic/errors.hpp"
#include "homoenergetic/rng.hpp"

namespace homoenergetic {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

double maxwellian_entropy()
{
    return 1.5 * (1.0 + std::log(2.0 * M_PI));
}

EntropyEstimate kl_entropy(const std::vector<Vec3>& points, int k, int bootstrap, std::uint64_t seed)
{
    using Point = bg::model::point<double, 3, bg::cs::cartesian>;
    using Value = std::pair<Point, std::size_t>;
    const std::size_t N = points.size();
    if (k < 1 || N < static_cast<std::size_t>(k) + 1)
        throw PreconditionError("entropy estimate needs more than k points");

    std::vector<Value> values;
    values.reserve(N);
    for (std::size_t i = 0; i < N; ++i)
        values.emplace_back(Point(points[i].x(), points[i].y(), points[i].z()), i);
    // Packing construction: deterministic and balanced.
    const bgi::rtree<Value, bgi::rstar<16>> tree(values.begin(), values.end());

    std::vector<double> log_eps(N);
    std::vector<Value> found;
    for (std::size_t i = 0; i < N; ++i)
    {
        found.clear();
        tree.query(bgi::nearest(values[i].first, static_cast<unsigned>(k + 1)), std::back_inserter(found));
        double far = 0.0;
        for (const auto& f : found)
            if (f.second != i)
                far = std::max(far, bg::distance(f.first, values[i].first));
        if (!(far > 0.0))
            throw DomainError("entropy estimate needs distinct points");
        log_eps[i] = std::log(far);
    }

    const double constant = boost::math::digamma(static_cast<double>(N)) - boost::math::digamma(double(k)) +
                            std::log(4.0 * M_PI / 3.0);
    double mean = 0.0;
    for (double l : log_eps)
        mean += l;
    mean /= N;

    EntropyEstimate est;
    est.value = constant + 3.0 * mean;
    if (bootstrap > 1)
    {
        Engine rng = make_engine(seed);
        double s = 0.0, ss = 0.0;
        for (int b = 0; b < bootstrap; ++b)
        {
            double m = 0.0;
            for (std::size_t i = 0; i < N; ++i)
                m += log_eps[uniform_index(rng, N)];
            m = constant + 3.0 * m / N;
            s += m;
            ss += m * m;
        }
        const double mb = s / bootstrap;
        est.std_err = std::sqrt(std::max(0.0, (ss / bootstrap - mb * mb) * bootstrap / (bootstrap - 1.0)));
    }
    return est;
}

}  // namespace homoenergetic
