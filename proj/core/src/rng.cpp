#include "ldp/rng.hpp"

#include <cmath>
#include <numbers>

namespace ldp {

double CounterRng::normal() noexcept {
    // The cosine branch only; discarding the sine keeps each variate a pure
    // function of two consecutive counters.
    const double u1 = open_uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double CounterRng::exponential(double rate) noexcept {
    return -std::log(open_uniform()) / rate;
}

}  // namespace ldp
