#pragma once

// Dense complex linear algebra and the adaptive Dormand-Prince integrator
// shared by every other module.

#include <complex>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace frontstab::numkit {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by qr_decompose when a column is (numerically) in the span of the previous ones.
class RankError : public NumericError {
public:
    RankError(const std::string& what, int column) : NumericError(what), column_(column) {}
    [[nodiscard]] int column() const noexcept { return column_; }

private:
    int column_;
};

/// An eigenvalue sits too close to the splitting line; usually means lambda
/// lies on or near the essential spectrum.
class SpectralGapError : public NumericError {
public:
    SpectralGapError(const std::string& what, Complex eigenvalue)
        : NumericError(what), eigenvalue_(eigenvalue) {}
    [[nodiscard]] Complex eigenvalue() const noexcept { return eigenvalue_; }

private:
    Complex eigenvalue_;
};

/// Step size underflow inside integrate_adaptive.
class BlowUpError : public NumericError {
public:
    BlowUpError(const std::string& what, double x) : NumericError(what), x_(x) {}
    [[nodiscard]] double x() const noexcept { return x_; }

private:
    double x_;
};

struct ToleranceSpec {
    double abs_tol = 1e-8;
    double rel_tol = 1e-6;

    void validate() const;
};

/// Builds a rows x cols matrix from row-major entries; rejects size mismatch and NaN/Inf.
ComplexMatrix make_matrix(int rows, int cols, std::span<const Complex> row_major);

[[nodiscard]] bool all_finite(const ComplexMatrix& m);
void require_finite(const ComplexMatrix& m, const char* context);

struct QR {
    ComplexMatrix q;  // n x m, orthonormal columns
    ComplexMatrix r;  // m x m, upper triangular, real non-negative diagonal
};

/// Thin QR by twice-iterated classical Gram-Schmidt.
QR qr_decompose(const ComplexMatrix& m);

double smallest_singular_value(const ComplexMatrix& m);

/// Determinant kept as log-magnitude and phase so that products of many
/// small factors do not underflow.
struct LogDet {
    double log_abs = 0.0;  // -inf for a singular matrix
    double arg = 0.0;      // not reduced modulo 2*pi

    [[nodiscard]] Complex value() const;
    [[nodiscard]] bool is_zero() const { return log_abs == -std::numeric_limits<double>::infinity(); }

    LogDet& operator*=(const LogDet& other) {
        log_abs += other.log_abs;
        arg += other.arg;
        return *this;
    }
    friend LogDet operator*(LogDet a, const LogDet& b) { return a *= b; }
};

/// Principal argument of value() in (-pi, pi].
double principal_arg(const LogDet& d);

LogDet det_via_lu(const ComplexMatrix& m);

struct EigSplit {
    ComplexMatrix unstable;  // columns: eigenvectors with the larger real parts
    ComplexMatrix stable;
    ComplexVector unstable_values;
    ComplexVector stable_values;
};

/// Splits the spectrum of m by the sign of the real part. Eigenvectors have
/// unit 2-norm and their first significant entry real and positive.
/// Throws SpectralGapError when an eigenvalue satisfies |Re| < gap_tol.
EigSplit eig_split(const ComplexMatrix& m, double gap_tol = 1e-10);

/// Splits into the n_unstable eigenvalues of largest real part and the rest.
/// This is the analytic continuation of eig_split across the imaginary axis;
/// throws SpectralGapError when the two groups are not separated by gap_tol.
EigSplit eig_split_by_count(const ComplexMatrix& m, int n_unstable, double gap_tol = 1e-10);

/// Rescales v in place to unit norm with its first significant entry real positive.
void normalize_phase(Eigen::Ref<ComplexVector> v);

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

using Rhs = std::function<void(double x, const ComplexMatrix& y, ComplexMatrix& dydx)>;

/// Verdict of the per-step hook: keep going, keep going after the hook edited
/// the state in place (the stage derivative is re-evaluated), or stop here.
enum class StepAction { Continue, Modified, Stop };

struct IntegratorOptions {
    ToleranceSpec tol{};
    double initial_step = 0.0;  // 0 selects automatically
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 1'000'000;
    bool record_mesh = false;
    /// Called after every accepted step; may rescale or re-chart y in place.
    std::function<StepAction(double x, ComplexMatrix& y)> on_step;
};

struct IntegrationResult {
    ComplexMatrix y;
    double x = 0.0;
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
    bool stopped = false;       // on_step requested a stop before x1
    double last_step = 0.0;     // size of the last accepted step (unsigned)
    std::vector<double> mesh;   // accepted step end points including x0 (when recorded)
};

/// Integrates y' = f(x, y) from x0 to x1 (x1 < x0 allowed) with the embedded
/// 5(4) pair and PI step-size control. Throws BlowUpError on step underflow.
IntegrationResult integrate_adaptive(const Rhs& rhs, double x0, double x1, ComplexMatrix y0,
                                     const IntegratorOptions& options = {});

/// Replays Dormand-Prince fifth-order steps on a prescribed mesh, no error control.
ComplexMatrix integrate_on_mesh(const Rhs& rhs, std::span<const double> mesh, ComplexMatrix y0);

}  // namespace frontstab::numkit
