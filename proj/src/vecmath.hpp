#pragma once

#include <cstddef>

namespace reachguide::detail {

// s[i] = sin(a[i]), c[i] = cos(a[i]). Built with vector math enabled; see CMakeLists.txt.
void sin_cos(const double* a, double* s, double* c, std::size_t n);

} // namespace reachguide::detail
