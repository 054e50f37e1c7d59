#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace frontstab::detail {

[[nodiscard]] bool arpack_available();

struct ArpackOutcome {
    std::vector<std::complex<double>> ritz;  // eigenvalues of the operator
    int converged = 0;
    int applications = 0;
};

/// Largest-magnitude eigenvalues of a real operator y = op(x) of size n by the
/// implicitly restarted Arnoldi method (ARPACK dnaupd/dneupd, regular mode).
/// `start` seeds the Krylov space. Throws std::runtime_error on ARPACK errors.
ArpackOutcome arpack_largest(int n, int nev, int ncv, double tol, int max_restarts,
                             const std::function<void(const double* x, double* y)>& op, std::vector<double> start);

}  // namespace frontstab::detail
