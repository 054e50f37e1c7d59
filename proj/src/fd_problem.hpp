#pragma once

// Finite-difference travelling-wave machinery shared by the planar and the
// two-dimensional front solvers: the bordered stationary system and the IMEX
// freezing stepper.

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "frontstab/grid.hpp"
#include "frontstab/model.hpp"

namespace frontstab::detail {

/// Centred x-difference weights at node i for offsets -2..2 (index o + 2).
/// Fourth-order where the grid asks for it and the stencil fits, second order
/// next to the Dirichlet columns.
struct XStencil {
    int reach = 1;
    double d1[5] = {};
    double d2[5] = {};
};
XStencil x_stencil(const FieldGrid& g, int i);

/// Centred x-derivative on interior nodes; zero on the boundary columns.
Eigen::VectorXd dx_centered(const FieldGrid& g, int n_fields, const Eigen::VectorXd& v);
Eigen::VectorXd dy_centered(const FieldGrid& g, int n_fields, const Eigen::VectorXd& v);

/// Max over interior nodes of |B Lap v + theta v_x + F(v)|.
double stationary_residual_inf(const ModelSpec& model, const FieldGrid& g, const Eigen::VectorXd& v,
                               double theta);

/// Discrete phase functional  sum (d_x vhat) . (vhat - v) hx hy  over interior nodes.
double phase_functional(const FieldGrid& g, const Eigen::VectorXd& template_dx,
                        const Eigen::VectorXd& template_values, const Eigen::VectorXd& v);

/// Max over x of the sup-norm deviation of U(x, .) from its transverse mean.
double transverse_variation(const FieldGrid& g, int n_fields, const Eigen::VectorXd& v);

/// B Lap + c d_x + DF(v) on interior nodes (Dirichlet in x, periodic in y),
/// unknowns ordered (field, x, y) with y fastest.
Eigen::SparseMatrix<double> linearized_operator(const ModelSpec& model, const FieldGrid& g, const Eigen::VectorXd& v,
                                                double c);

/// Stationary problem  0 = B Lap v + theta v_x [+ theta_y v_y] + F(v)  with the
/// phase condition against a template, and optionally a transverse phase
/// condition that removes the y-translation null direction of a wrinkled
/// front. Unknowns z = (interior values, theta [, theta_y]).
class StationaryProblem {
public:
    StationaryProblem(const ModelSpec& model, const FieldGrid& grid, Eigen::VectorXd template_values,
                      bool pin_y);

    [[nodiscard]] int unknowns() const { return n_interior_ + 1 + (pin_y_ ? 1 : 0); }
    [[nodiscard]] int interior_unknowns() const { return n_interior_; }
    [[nodiscard]] bool pins_y() const { return pin_y_; }

    /// Packs a full-grid field vector and speeds into z.
    [[nodiscard]] Eigen::VectorXd pack(const Eigen::VectorXd& full, double theta, double theta_y) const;
    /// Full-grid field vector from z, with boundary values copied from `boundary_source`.
    [[nodiscard]] Eigen::VectorXd unpack(const Eigen::VectorXd& z, const Eigen::VectorXd& boundary_source) const;

    [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& z, const Eigen::VectorXd& boundary_source) const;
    [[nodiscard]] Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& z,
                                                       const Eigen::VectorXd& boundary_source) const;

    [[nodiscard]] const FieldGrid& grid() const { return grid_; }
    [[nodiscard]] const Eigen::VectorXd& template_values() const { return template_; }
    [[nodiscard]] const Eigen::VectorXd& template_dx() const { return template_dx_; }

private:
    [[nodiscard]] int interior_index(int f, int i, int j) const {
        return (f * (grid_.nx - 2) + (i - 1)) * grid_.ny + j;
    }

    const ModelSpec& model_;
    FieldGrid grid_;
    Eigen::VectorXd template_;
    Eigen::VectorXd template_dx_;
    Eigen::VectorXd template_dy_;
    bool pin_y_;
    int n_interior_;
};

struct NewtonOutcome {
    Eigen::VectorXd values;   // full grid
    double theta = 0.0;
    double theta_y = 0.0;
    std::vector<double> residual_history;
    int iterations = 0;
    int factorizations = 0;
    bool converged = false;
};

/// Newton (chord variant) with a direct sparse factorization reused while it contracts.
NewtonOutcome newton_stationary(const StationaryProblem& problem, const Eigen::VectorXd& v0,
                                double theta0, double tol, int max_iterations);

/// IMEX freezing stepper: implicit diffusion (diagonalised by FFT in y and
/// solved by tridiagonal sweeps in x), explicit reaction and advection. The
/// frame speed is chosen each step so that the phase functional of the new
/// state vanishes exactly.
class ImexFreezer {
public:
    ImexFreezer(const ModelSpec& model, const FieldGrid& grid, Eigen::VectorXd template_values, double dt);

    /// Advances v by one step in place; returns the frame speed used.
    double step(Eigen::VectorXd& v);

    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] const Eigen::VectorXd& template_values() const { return template_; }
    [[nodiscard]] const Eigen::VectorXd& template_dx() const { return template_dx_; }

private:
    // Solves (I - dt b_f Lap) w = rhs on interior nodes of one field; rhs holds
    // interior values on entry (layout [i-1][j]) and the solution on exit.
    // Boundary columns enter through `left`/`right` (ny values each) when non-null.
    void implicit_solve(int f, std::vector<double>& rhs, const double* left, const double* right);

    const ModelSpec& model_;
    FieldGrid grid_;
    Eigen::VectorXd template_;
    Eigen::VectorXd template_dx_;
    double dt_;
    std::vector<double> sigma_;                // periodic second-difference symbols
    std::vector<std::vector<double>> cprime_;  // [f*ny + l][i]
    std::vector<std::vector<double>> denom_;
    std::vector<std::complex<double>> spectral_;
};

}  // namespace frontstab::detail
