#pragma once

#include <complex>
#include <vector>

namespace rts {

using Complex = std::complex<double>;
using Signal = std::vector<double>;
using ComplexSignal = std::vector<Complex>;

}  // namespace rts
