#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frontstab/model.hpp"

namespace frontstab {

/// Planar travelling front sampled on a uniform grid. fields(i, f) is field f
/// at x(i); boundary rows hold the far-field states exactly.
struct FrontProfile1D {
    double x_min = -150.0;
    double x_max = 150.0;
    int n_x = 0;
    Eigen::MatrixXd fields;  // n_x x N
    double speed = 0.0;
    double delta = 1.0;
    std::string model_name;
    int x_order = 2;  // accuracy of the differences the profile solves

    [[nodiscard]] double h() const { return (x_max - x_min) / (n_x - 1); }
    [[nodiscard]] double x(int i) const { return x_min + i * h(); }
    [[nodiscard]] int n_fields() const { return static_cast<int>(fields.cols()); }

    /// Throws std::invalid_argument if boundary values or (when residual_tol > 0)
    /// the discrete travelling-wave residual violate the profile invariants.
    void validate(const ModelSpec& model, double residual_tol = 1e-6) const;
};

/// Max over interior nodes of |B u_xx + c u_x + F(u)| with centred differences.
double planar_residual_inf(const ModelSpec& model, const FrontProfile1D& front);

class NewtonError : public std::runtime_error {
public:
    NewtonError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}
    [[nodiscard]] const std::vector<double>& residual_history() const noexcept { return history_; }
    [[nodiscard]] double last_residual() const { return history_.empty() ? 0.0 : history_.back(); }

private:
    std::vector<double> history_;
};

class DomainTooShortError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct PlanarFrontOptions {
    double x_min = -150.0;
    double x_max = 150.0;
    int n_x = 3001;
    int x_order = 2;
    double center = 0.0;        // front position of the initial guess and template
    double relax_time = 200.0;  // freezing-frame pre-evolution before Newton
    double dt = 0.5;
    double newton_tol = 1e-10;
    int max_newton = 40;
};

/// Minimal-speed front: a sigmoid guess relaxed by the freezing dynamics,
/// then Newton on the bordered system (profile, c) with the guess as phase
/// template.
FrontProfile1D solve_planar_front(const ModelSpec& model, const PlanarFrontOptions& options = {});

struct SpectrumCurve {
    std::vector<std::complex<double>> points;  // one per mu sample
    int multiplicity = 1;
    int side = 0;  // -1 behind the front, +1 ahead, 0 when both far fields contribute
};

struct MuRange {
    double mu_min = -10.0;
    double mu_max = 10.0;
    int samples = 401;
};

/// Curves lambda(mu) = eig(-B(mu^2 + kappa^2) + i c mu + DF(U_pm)) with
/// kappa = 2 pi k / L. Coincident curves are merged into one with multiplicity.
std::vector<SpectrumCurve> continuous_spectrum_curves(const ModelSpec& model, double c, int k, double period,
                                                      const MuRange& range = {});

/// True when lambda lies to the right of the continuous spectrum of every
/// mode |k| <= K, judged by the Morse index of the far-field spatial matrices.
bool right_of_continuous_spectrum(const ModelSpec& model, double c, double period, int K,
                                  std::complex<double> lambda);

}  // namespace frontstab
