#pragma once

// Longitudinal propagation of solution subspaces of Y' = A(x) Y: Riccati flows
// in coordinate charts of the Grassmannian with patch swapping, and the
// Drury-Oja flow of an orthonormal frame with its log-determinant.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "frontstab/numkit.hpp"
#include "frontstab/projection.hpp"

namespace frontstab {

using numkit::LogDet;

/// Coefficient matrix of a linear flow. When `a3` is set the matrix has the
/// projected structure [[0, I], [A3(x), diag(a4)]] and the default patches use
/// a fast path; `full` must always be provided.
struct FlowMatrix {
    int n = 0;
    std::function<void(double x, Eigen::MatrixXcd& a)> full;
    std::function<void(double x, Eigen::MatrixXcd& a3)> a3;
    Eigen::VectorXcd a4;
};

/// A(x; lambda) of a projected system as a flow.
FlowMatrix flow_matrix(const ProjectedSystem& sys, Complex lambda);

/// Sorted 0-based row selection of size m out of n.
struct CoordinatePatch {
    std::vector<int> rows;
    int n = 0;

    [[nodiscard]] int size() const { return static_cast<int>(rows.size()); }
    [[nodiscard]] std::vector<int> complement() const;
    void validate() const;

    static CoordinatePatch leading(int n, int m);   // rows 0..m-1
    static CoordinatePatch trailing(int n, int m);  // rows n-m..n-1

    friend bool operator==(const CoordinatePatch&, const CoordinatePatch&) = default;
};

/// Full n x m frame whose patch rows hold the identity and whose complement holds y_hat.
Eigen::MatrixXcd frame_from_chart(const CoordinatePatch& patch, const Eigen::MatrixXcd& y_hat);

/// Chart of a frame in a patch: y_hat = Y_{i°} Y_i^{-1}. Throws numkit::NumericError
/// when the patch block is singular.
Eigen::MatrixXcd chart_from_frame(const CoordinatePatch& patch, const Eigen::MatrixXcd& frame);

/// The patch selected by greedy row pivoting: each column takes the remaining
/// row of largest modulus after elimination, maximising the patch minor.
CoordinatePatch pivot_patch(const Eigen::MatrixXcd& frame);

/// c + d y - y a - y b y.
Eigen::MatrixXcd riccati_rhs(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& c,
                             const Eigen::MatrixXcd& d, const Eigen::MatrixXcd& y_hat);

/// Right-hand side of the Riccati flow of `flow` in a fixed patch, for replay
/// with numkit::integrate_on_mesh. The flow must outlive the returned callable.
numkit::Rhs riccati_flow_rhs(const FlowMatrix& flow, const CoordinatePatch& patch);

struct RiccatiState {
    CoordinatePatch patch;
    Eigen::MatrixXcd y_hat;  // (n - m) x m
    LogDet swap_log_det;     // product of the swap transformation determinants
    double x = 0.0;
    int swaps = 0;
    long steps = 0;
    std::vector<double> mesh;  // accepted mesh when recorded and no swap occurred
};

struct RiccatiOptions {
    numkit::ToleranceSpec tol{1e-8, 1e-6};
    double swap_threshold = 1e3;  // on the max row sum of |y_hat|
    int max_swaps = 50;
    bool record_mesh = false;
};

class SwapError : public numkit::NumericError {
public:
    using numkit::NumericError::NumericError;
};

/// Integrates the Riccati flow induced by A from x_from to x_to starting in patch0.
/// A swap at x_s re-charts the frame F as F T^{-1} with T = F(x_s) restricted to
/// the new patch, and swap_log_det accumulates det T. The chart frame itself is
/// not a linear solution, so the product relates the charts at the swap points
/// only; without swaps the chart determinant is the modified (chart-normalised)
/// quantity and its zeros are those of the linear-frame determinant.
RiccatiState integrate_riccati(const FlowMatrix& flow, const CoordinatePatch& patch0, const Eigen::MatrixXcd& y_hat0,
                               double x_from, double x_to, const RiccatiOptions& options = {});

enum class Side { Left, Right };

/// Projected system overload; the side only names the flow in error messages.
RiccatiState integrate_riccati(const ProjectedSystem& sys, Complex lambda, Side side, const CoordinatePatch& patch0,
                               const Eigen::MatrixXcd& y_hat0, double x_from, double x_to,
                               const RiccatiOptions& options = {});

struct OrthoState {
    Eigen::MatrixXcd q;  // n x m orthonormal
    LogDet log_det_r;    // continuously accumulated, phase unwrapped
    double x = 0.0;
    long steps = 0;
    long reorthonormalizations = 0;
    double max_orthonormality_defect = 0.0;  // max ||Q^H Q - I||_F over accepted steps
    std::vector<double> mesh;
};

struct DruryOjaOptions {
    numkit::ToleranceSpec tol{1e-8, 1e-6};
    double reorthonormalize_above = 1e-10;
    bool record_mesh = false;
};

/// Symmetric (Lowdin) orthonormalisation Y = Q S with S = (Y^H Y)^{1/2} Hermitian
/// positive definite. Returns Q and writes log det S.
Eigen::MatrixXcd polar_orthonormalize(const Eigen::MatrixXcd& y, LogDet& log_det_s);

/// Q' = (I - Q Q^H) A Q,  (log det R)' = tr(Q^H A Q). q0 must be orthonormal.
/// Drift is removed by polar re-orthonormalisation whose determinant is folded into log_det_r.
OrthoState integrate_drury_oja(const FlowMatrix& flow, const Eigen::MatrixXcd& q0, LogDet log_det_r0, double x_from,
                               double x_to, const DruryOjaOptions& options = {});

OrthoState integrate_drury_oja(const ProjectedSystem& sys, Complex lambda, Side side, const Eigen::MatrixXcd& q0,
                               double x_from, double x_to, const DruryOjaOptions& options = {});

/// arcsin of the smallest singular value of (I - Qm Qm^H) Qp, in [0, pi/2].
double subspace_angle(const Eigen::MatrixXcd& qm, const Eigen::MatrixXcd& qp);

}  // namespace frontstab
