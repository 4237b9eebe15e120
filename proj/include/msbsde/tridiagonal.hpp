#pragma once

#include <vector>

namespace msbsde {

/// Row i reads sub[i] * u[i-1] + main[i] * u[i] + super[i] * u[i+1] = rhs[i];
/// sub[0] and super[n-1] are ignored.
struct TridiagonalSystem {
    std::vector<double> sub;
    std::vector<double> main;
    std::vector<double> super;
    std::vector<double> rhs;
};

/// Direct elimination (Thomas algorithm) without pivoting. Throws a
/// singular-system error on a zero pivot.
std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys);

}  // namespace msbsde
