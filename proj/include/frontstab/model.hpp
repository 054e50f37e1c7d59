#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace frontstab {

/// Reaction-diffusion model  U_t = B Lap U + c U_x + F(U)  with diagonal B and
/// homogeneous far-field states. Reaction and Jacobian are pointwise callbacks
/// writing into caller-owned storage (Jacobian row-major N x N).
struct ModelSpec {
    std::string name;
    int n_fields = 0;
    Eigen::VectorXd diffusion;        // diagonal of B
    Eigen::VectorXd left_state;       // U(-inf)
    Eigen::VectorXd right_state;      // U(+inf)
    double delta = 1.0;               // parameter record, used for metadata
    std::function<void(const double* u, double* f)> reaction;
    std::function<void(const double* u, double* jac)> jacobian;

    void validate() const;

    [[nodiscard]] Eigen::VectorXd eval_reaction(const Eigen::VectorXd& u) const;
    [[nodiscard]] Eigen::MatrixXd eval_jacobian(const Eigen::VectorXd& u) const;
};

/// u_t = delta Lap u + c u_x - u v^2,  v_t = Lap v + c v_x + u v^2,
/// with (u, v) -> (0, 1) behind the front and (1, 0) ahead of it. delta is the
/// reactant-to-autocatalyst diffusivity ratio; the cellular instability sets
/// in for delta above about 2.3.
ModelSpec cubic_autocatalysis(double delta);

/// Rebuilds a model by name from its parameter record; used when loading archives.
ModelSpec model_from_record(const std::string& name, double delta);

}  // namespace frontstab
