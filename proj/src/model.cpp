#include "frontstab/model.hpp"

#include <cmath>
#include <stdexcept>

namespace frontstab {

void ModelSpec::validate() const {
    if (n_fields <= 0) throw std::invalid_argument("ModelSpec: n_fields must be positive");
    if (diffusion.size() != n_fields || left_state.size() != n_fields ||
        right_state.size() != n_fields) {
        throw std::invalid_argument("ModelSpec: vector sizes do not match n_fields");
    }
    if ((diffusion.array() <= 0.0).any()) {
        throw std::invalid_argument("ModelSpec: diffusion coefficients must be strictly positive");
    }
    if (!reaction || !jacobian) throw std::invalid_argument("ModelSpec: reaction/jacobian missing");
    for (const Eigen::VectorXd* s : {&left_state, &right_state}) {
        if (eval_reaction(*s).cwiseAbs().maxCoeff() > 1e-12) {
            throw std::invalid_argument("ModelSpec: far-field state is not an equilibrium");
        }
    }
}

Eigen::VectorXd ModelSpec::eval_reaction(const Eigen::VectorXd& u) const {
    Eigen::VectorXd f(n_fields);
    reaction(u.data(), f.data());
    return f;
}

Eigen::MatrixXd ModelSpec::eval_jacobian(const Eigen::VectorXd& u) const {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> j(n_fields, n_fields);
    jacobian(u.data(), j.data());
    return j;
}

ModelSpec cubic_autocatalysis(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw std::invalid_argument("cubic_autocatalysis: delta must be positive");
    }
    ModelSpec m;
    m.name = "cubic_autocatalysis";
    m.n_fields = 2;
    m.diffusion = Eigen::Vector2d(delta, 1.0);
    m.left_state = Eigen::Vector2d(0.0, 1.0);
    m.right_state = Eigen::Vector2d(1.0, 0.0);
    m.delta = delta;
    m.reaction = [](const double* u, double* f) {
        const double r = u[0] * u[1] * u[1];
        f[0] = -r;
        f[1] = r;
    };
    m.jacobian = [](const double* u, double* j) {
        const double vv = u[1] * u[1];
        const double uv2 = 2.0 * u[0] * u[1];
        j[0] = -vv;
        j[1] = -uv2;
        j[2] = vv;
        j[3] = uv2;
    };
    m.validate();
    return m;
}

ModelSpec model_from_record(const std::string& name, double delta) {
    if (name == "cubic_autocatalysis") return cubic_autocatalysis(delta);
    throw std::invalid_argument("unknown model '" + name + "'");
}

}  // namespace frontstab
