#pragma once

#include <memory>

#include <Eigen/Sparse>

namespace frontstab::detail {

/// The OpenBLAS build behind the system UMFPACK and ARPACK crashes in its
/// Cooper Lake kernels on some virtual CPUs. Pins a compatible kernel family
/// (unless the caller chose one) before either library is loaded.
void pin_openblas_kernel();

/// Direct sparse LU for the large real systems of the front solvers and the
/// shift-invert eigensolver. UMFPACK is loaded at run time when present;
/// otherwise Eigen's supernodal SparseLU is used.
class SparseLu {
public:
    SparseLu();
    ~SparseLu();
    SparseLu(const SparseLu&) = delete;
    SparseLu& operator=(const SparseLu&) = delete;

    /// Factorizes a square matrix; returns false when it is numerically singular.
    bool factor(const Eigen::SparseMatrix<double>& a);
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    [[nodiscard]] const char* backend() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace frontstab::detail
