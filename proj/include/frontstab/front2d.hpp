#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frontstab/front1d.hpp"
#include "frontstab/grid.hpp"
#include "frontstab/model.hpp"

namespace frontstab {

/// Travelling front on the tensor grid; values are indexed by FieldGrid::index.
struct FrontProfile2D {
    FieldGrid grid;
    int n_fields = 0;
    Eigen::VectorXd values;
    double speed = 0.0;
    double delta = 1.0;
    std::string model_name;
    std::string provenance;  // "frozen", "newton", "continued-from <delta>", "planar"

    [[nodiscard]] double at(int f, int i, int j) const { return values(grid.index(f, i, j)); }

    /// Checks sizes, finiteness, boundary y-independence and (when residual_tol > 0)
    /// the stationary residual. Throws std::invalid_argument naming the failed invariant.
    void validate(const ModelSpec& model, double residual_tol = 1e-6) const;
};

/// Max over interior nodes of |B Lap U + c U_x + F(U)|.
double stationary_residual(const ModelSpec& model, const FrontProfile2D& front);

/// Max over x of the deviation of U(x, .) from its transverse mean.
double transverse_variation(const FrontProfile2D& front);

/// Sweeps a planar front uniformly in y, optionally displacing the front
/// position by amplitude * cos(2 pi mode y / L). Off-grid samples use a
/// cubic spline of the planar profile; boundary columns are clamped to the
/// far-field states.
FrontProfile2D sweep_planar(const ModelSpec& model, const FrontProfile1D& planar, const FieldGrid& grid,
                            double amplitude = 0.0, int mode = 0);

struct FreezeOptions {
    double t_end = 1000.0;
    double dt = 1.0;
    int record_every = 10;        // history sample stride in steps
    double c_planar = 0.0;        // runaway guard |zeta| > 10 c_planar when positive
    double steady_tol = 0.0;      // stop early once max |dV/dt| falls below this (0 disables)
};

struct FreezeSample {
    double t = 0.0;
    double zeta = 0.0;
    double transverse_variation = 0.0;
    double rate = 0.0;  // max |V^{n+1} - V^n| / dt
};

/// Freezing-frame state: fields V, frame speed zeta, template and time.
struct FreezeState {
    FrontProfile2D current;
    Eigen::VectorXd template_values;
    double zeta = 0.0;
    double t = 0.0;
    std::vector<FreezeSample> history;
};

class RunawayError : public std::runtime_error {
public:
    RunawayError(const std::string& what, double t) : std::runtime_error(what), t_(t) {}
    [[nodiscard]] double time() const noexcept { return t_; }

private:
    double t_;
};

/// IMEX time stepping of the freezing system with the initial state as template.
/// The stepping uses second-order x-differences whatever the grid's x_order;
/// it is a relaxation device and newton_refine reaches the grid's discretisation.
FreezeState freeze_evolve(const ModelSpec& model, const FrontProfile2D& initial, const FreezeOptions& options);

struct NewtonOptions {
    double tol = 1e-10;
    int max_iterations = 25;
    /// Adds a transverse phase condition when the guess varies in y by more than this.
    double pin_y_threshold = 1e-8;
};

/// Newton on the bordered stationary system with the guess as phase template.
/// Throws NewtonError with the residual history on failure.
FrontProfile2D newton_refine(const ModelSpec& model, const FrontProfile2D& guess,
                             const NewtonOptions& options = {});

class ContinuationStallError : public std::runtime_error {
public:
    ContinuationStallError(const std::string& what, double delta) : std::runtime_error(what), delta_(delta) {}
    [[nodiscard]] double last_delta() const noexcept { return delta_; }

private:
    double delta_;
};

/// Natural continuation in delta with step halving on Newton failure.
FrontProfile2D continue_in_delta(const FrontProfile2D& start, double target_delta, int steps,
                                 const NewtonOptions& options = {});

struct WrinkledFrontOptions {
    FieldGrid grid{-150.0, 150.0, 301, 120.0, 240, 4};
    double center = 50.0;     // planar front position; keeps the front clear of the left boundary
    double amplitude = 5.0;   // seed displacement amplitude
    int mode = 1;             // seed transverse mode
    FreezeOptions freeze{2000.0, 1.0, 500, 0.0, 0.0};
    NewtonOptions newton{};
};

/// Planar front, perturbed sweep, freezing-frame relaxation and Newton refinement.
FrontProfile2D wrinkled_front(const ModelSpec& model, const WrinkledFrontOptions& options = {});

}  // namespace frontstab
