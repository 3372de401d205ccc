#include "vecmath.hpp"

#include <cmath>

namespace reachguide::detail {

void sin_cos(const double* a, double* s, double* c, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = std::sin(a[i]);
        c[i] = std::cos(a[i]);
    }
}

} // namespace reachguide::detail
