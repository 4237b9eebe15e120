#include "msbsde/interpolant.hpp"

#include "msbsde/error.hpp"

namespace msbsde {

Interpolant build_interpolant(std::span<const double> samples, const SpaceGrid& grid) {
    Interpolant s;
    s.d = grid.dim();
    if (s.d == 1) {
        s.cubic = build_cubic_spline(samples, grid);
    } else if (s.d == 2) {
        s.bicubic = build_bicubic(samples, grid);
    } else {
        raise(ErrorKind::InvalidArgument, "interpolation is implemented for d = 1 and d = 2");
    }
    return s;
}

double evaluate(const Interpolant& s, const double* X) noexcept {
    return s.d == 1 ? eval_cubic_spline(s.cubic, X[0]) : eval_bicubic(s.bicubic, X[0], X[1]);
}

}  // namespace msbsde
