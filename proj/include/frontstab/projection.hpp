#pragma once

// Transverse Fourier projection of the linearised eigenvalue problem about a
// front. Mode k of the y-expansion carries wavenumber kappa_k = 2 pi k / L.
// The projected first-order system is ordered mode-major: U = (U_{-K}, ..., U_K)
// with the N fields of each mode contiguous, followed by P = U_x in the same
// order, so n = 2N(2K+1) and m = N(2K+1).

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frontstab/front1d.hpp"
#include "frontstab/front2d.hpp"
#include "frontstab/model.hpp"
#include "frontstab/numkit.hpp"
#include "frontstab/spline.hpp"

namespace frontstab {

using numkit::Complex;

struct ProjectedSystem {
    int K = 0;
    double period = 0.0;
    int n_fields = 0;
    Eigen::VectorXd diffusion;
    double speed = 0.0;
    double delta = 1.0;
    std::string model_name;
    /// Wavenumber of each retained mode, index k + K.
    std::vector<double> kappa;
    /// Largest |q| stored in `modes`; 2K for a two-dimensional front, 0 for a planar one.
    int mode_reach = 0;
    /// Channel ((q + mode_reach) * N + r) * N + s holds entry (r, s) of D_q(x).
    UniformSplineBundle<Complex> modes;
    Eigen::MatrixXd far_left;
    Eigen::MatrixXd far_right;

    [[nodiscard]] int modes_count() const { return 2 * K + 1; }
    [[nodiscard]] int half_dim() const { return n_fields * modes_count(); }
    [[nodiscard]] int dim() const { return 2 * half_dim(); }
    [[nodiscard]] double x_min() const { return modes.x_min(); }
    [[nodiscard]] double x_max() const { return modes.x_max(); }

    /// Fourier coefficient D_q at x; zero for |q| > mode_reach. Outside the
    /// spline range the far-field Jacobians are returned.
    [[nodiscard]] Eigen::MatrixXcd jacobian_mode(int q, double x) const;

    /// All stored coefficients at x, laid out as the spline channels.
    void jacobian_modes(double x, std::vector<Complex>& out) const;

    void validate() const;
};

/// Projects the linearisation about a two-dimensional front onto modes |k| <= K.
/// Requires ny >= 4K + 2 so the coefficients up to 2K are free of aliasing.
ProjectedSystem build_projected_system(const ModelSpec& model, const FrontProfile2D& front, int K);

/// Planar front with transverse period L: only D_0 is non-zero.
ProjectedSystem build_projected_system(const ModelSpec& model, const FrontProfile1D& front, int K,
                                       double period);

/// The 2N x 2N system of one mode of a planar projection, or of a single
/// wavenumber kappa (the dispersion problem).
ProjectedSystem single_mode_system(const ProjectedSystem& planar, int k);
ProjectedSystem single_mode_system(const ProjectedSystem& planar, double kappa);

/// y-Fourier coefficients D_q, |q| <= reach, of DF(U(x_i, .)) computed from the
/// pointwise Jacobians (index (q + reach) as the outer vector).
std::vector<Eigen::MatrixXcd> jacobian_fourier_modes(const ModelSpec& model, const FrontProfile2D& front,
                                                     int i, int reach);

/// Same coefficients for the cubic autocatalysis Jacobian by convolving the
/// Fourier series of u and v. Used to cross-check jacobian_fourier_modes.
std::vector<Eigen::MatrixXcd> autocatalysis_modes_by_convolution(const FrontProfile2D& front, int i,
                                                                 int reach);

/// A(x; lambda) = [[0, I], [A3, A4]]. Throws std::out_of_range outside the spline range.
Eigen::MatrixXcd assemble_A(const ProjectedSystem& sys, double x, Complex lambda);

/// A3(x; lambda): diagonal blocks lambda B^-1 + kappa_k^2 minus the block-Toeplitz
/// matrix B^-1 D_{k-nu}(x). Writes into an m x m matrix.
void assemble_A3(const ProjectedSystem& sys, double x, Complex lambda, Eigen::MatrixXcd& a3);

/// Far-field system matrix at -inf (side < 0) or +inf (side > 0).
Eigen::MatrixXcd far_field_A(const ProjectedSystem& sys, int side, Complex lambda);

struct BoundarySubspaces {
    Eigen::MatrixXcd minus;  // n x m, unstable at -inf
    Eigen::MatrixXcd plus;   // n x (n - m), stable at +inf
    Complex lambda;
};

/// Per-mode eigen splitting of the far-field matrices (the N spatial
/// eigenvalues of largest real part at -inf, the N smallest at +inf).
/// Spectral-gap failures are re-thrown naming the offending mode.
BoundarySubspaces boundary_subspaces(const ProjectedSystem& sys, Complex lambda);

/// Closed-form boundary eigenvectors for the cubic autocatalysis model
/// (B = diag(delta, 1), states (0,1) and (1,0)). The eigenvector of the
/// reactant branch at -inf is scaled as (nu, 1, mu nu, mu) so it stays
/// regular where nu vanishes.
BoundarySubspaces autocatalysis_boundary_subspaces(const ProjectedSystem& sys, Complex lambda);

/// Largest principal angle between the column spaces of a and b (same shape).
double principal_angle(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

}  // namespace frontstab
