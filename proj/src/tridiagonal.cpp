#include "msbsde/tridiagonal.hpp"

#include <cmath>
#include <string>

#include "msbsde/error.hpp"

namespace msbsde {

std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys) {
    const std::size_t n = sys.main.size();
    if (sys.sub.size() != n || sys.super.size() != n || sys.rhs.size() != n) {
        raise(ErrorKind::InvalidArgument, "tridiagonal system has inconsistent diagonal lengths");
    }
    if (n == 0) return {};

    std::vector<double> c(n);
    std::vector<double> u(n);
    double pivot = sys.main[0];
    if (pivot == 0.0 || !std::isfinite(pivot)) raise(ErrorKind::SingularSystem, "zero pivot in row 0");
    c[0] = sys.super[0] / pivot;
    u[0] = sys.rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = sys.main[i] - sys.sub[i] * c[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot)) {
            raise(ErrorKind::SingularSystem, "zero pivot in row " + std::to_string(i));
        }
        c[i] = sys.super[i] / pivot;
        u[i] = (sys.rhs[i] - sys.sub[i] * u[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) u[i] -= c[i] * u[i + 1];
    return u;
}

}  // namespace msbsde
