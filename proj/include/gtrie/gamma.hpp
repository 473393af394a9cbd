#pragma once

#include <complex>

namespace gtrie {

// Complex gamma function via the Lanczos approximation (g = 7, 9 terms) with
// Euler reflection for Re z < 0.5.  Relative accuracy is around 1e-13 on the
// strip Re z in [-1, 3] away from the poles at 0, -1, -2, ...
std::complex<double> complex_gamma(std::complex<double> z);

}  // namespace gtrie
