#include "frontstab/front1d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>

#include "fd_problem.hpp"
#include "frontstab/grid.hpp"

namespace frontstab {

namespace {

FieldGrid planar_grid(double x_min, double x_max, int n_x, int x_order) {
    FieldGrid g;
    g.x_order = x_order;
    g.x_min = x_min;
    g.x_max = x_max;
    g.nx = n_x;
    g.period = 1.0;
    g.ny = 1;
    return g;
}

Eigen::VectorXd to_grid_vector(const Eigen::MatrixXd& fields) {
    const int n_x = static_cast<int>(fields.rows());
    Eigen::VectorXd v(fields.size());
    for (int f = 0; f < fields.cols(); ++f) v.segment(static_cast<Eigen::Index>(f) * n_x, n_x) = fields.col(f);
    return v;
}

Eigen::MatrixXd from_grid_vector(const Eigen::VectorXd& v, int n_x, int n_fields) {
    Eigen::MatrixXd m(n_x, n_fields);
    for (int f = 0; f < n_fields; ++f) m.col(f) = v.segment(static_cast<Eigen::Index>(f) * n_x, n_x);
    return m;
}

}  // namespace

void FrontProfile1D::validate(const ModelSpec& model, double residual_tol) const {
    if (n_x < 4 || fields.rows() != n_x || fields.cols() != model.n_fields) {
        throw std::invalid_argument("FrontProfile1D: field array does not match grid and model");
    }
    if (!fields.allFinite()) throw std::invalid_argument("FrontProfile1D: non-finite field values");
    const double left = (fields.row(0).transpose() - model.left_state).cwiseAbs().maxCoeff();
    const double right = (fields.row(n_x - 1).transpose() - model.right_state).cwiseAbs().maxCoeff();
    if (left > 1e-6 || right > 1e-6) {
        throw std::invalid_argument("FrontProfile1D: boundary values differ from the far-field states");
    }
    if (residual_tol <= 0.0) return;
    const double res = planar_residual_inf(model, *this);
    if (!(res < residual_tol)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "FrontProfile1D: travelling-wave residual %.3e exceeds tolerance %.3e", res,
                      residual_tol);
        throw std::invalid_argument(buf);
    }
}

double planar_residual_inf(const ModelSpec& model, const FrontProfile1D& front) {
    const FieldGrid g = planar_grid(front.x_min, front.x_max, front.n_x, front.x_order);
    return detail::stationary_residual_inf(model, g, to_grid_vector(front.fields), front.speed);
}

FrontProfile1D solve_planar_front(const ModelSpec& model, const PlanarFrontOptions& options) {
    model.validate();
    const FieldGrid g = planar_grid(options.x_min, options.x_max, options.n_x, options.x_order);
    g.validate();
    const int n = model.n_fields;

    // Sigmoid blend between the far-field states; width grows with the
    // largest diffusion coefficient.
    const double width = std::sqrt(2.0) * model.diffusion.maxCoeff();
    Eigen::MatrixXd guess(g.nx, n);
    for (int i = 0; i < g.nx; ++i) {
        const double s = 1.0 / (1.0 + std::exp((g.x(i) - options.center) / width));
        guess.row(i) = (s * model.left_state + (1.0 - s) * model.right_state).transpose();
    }
    const double edge = std::max((guess.row(0).transpose() - model.left_state).cwiseAbs().maxCoeff(),
                                 (guess.row(g.nx - 1).transpose() - model.right_state).cwiseAbs().maxCoeff());
    if (edge > 1e-2) {
        throw DomainTooShortError("solve_planar_front: domain too short for the front width");
    }
    guess.row(0) = model.left_state.transpose();
    guess.row(g.nx - 1) = model.right_state.transpose();

    const Eigen::VectorXd templ = to_grid_vector(guess);
    Eigen::VectorXd v = templ;
    double zeta = 0.0;
    if (options.relax_time > 0.0) {
        detail::ImexFreezer freezer(model, g, templ, options.dt);
        const int steps = static_cast<int>(std::ceil(options.relax_time / options.dt));
        for (int s = 0; s < steps; ++s) zeta = freezer.step(v);
    }

    const detail::StationaryProblem problem(model, g, templ, false);
    const detail::NewtonOutcome out =
        detail::newton_stationary(problem, v, zeta, options.newton_tol, options.max_newton);
    if (!out.converged) {
        throw NewtonError("solve_planar_front: Newton did not converge, last residual " +
                              std::to_string(out.residual_history.back()),
                          out.residual_history);
    }

    FrontProfile1D front;
    front.x_min = g.x_min;
    front.x_max = g.x_max;
    front.n_x = g.nx;
    front.fields = from_grid_vector(out.values, g.nx, n);
    front.speed = out.theta;
    front.delta = model.delta;
    front.model_name = model.name;
    front.x_order = g.x_order;
    return front;
}

// ---------------------------------------------------------------------------

std::vector<SpectrumCurve> continuous_spectrum_curves(const ModelSpec& model, double c, int k, double period,
                                                      const MuRange& range) {
    if (range.samples < 1) throw std::invalid_argument("continuous_spectrum_curves: no samples");
    const int n = model.n_fields;
    const double kappa = 2.0 * std::numbers::pi * k / period;
    const Eigen::MatrixXd jm = model.eval_jacobian(model.left_state);
    const Eigen::MatrixXd jp = model.eval_jacobian(model.right_state);

    struct Branch {
        std::vector<std::complex<double>> pts;
        int side;
    };
    std::vector<Branch> branches;
    for (int side : {-1, 1}) {
        const Eigen::MatrixXd& df = side < 0 ? jm : jp;
        std::vector<Branch> local(static_cast<std::size_t>(n), Branch{{}, side});
        Eigen::MatrixXcd prev_vec(n, n);
        for (int s = 0; s < range.samples; ++s) {
            const double mu = range.samples == 1
                                  ? range.mu_min
                                  : range.mu_min + (range.mu_max - range.mu_min) * s / (range.samples - 1);
            Eigen::MatrixXcd m = df.cast<std::complex<double>>();
            for (int f = 0; f < n; ++f) {
                m(f, f) += -model.diffusion(f) * (mu * mu + kappa * kappa) + std::complex<double>(0.0, c * mu);
            }
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, true);
            const Eigen::VectorXcd& ev = es.eigenvalues();
            const Eigen::MatrixXcd& vecs = es.eigenvectors();
            if (s == 0) {
                std::vector<int> order(static_cast<std::size_t>(n));
                std::iota(order.begin(), order.end(), 0);
                std::sort(order.begin(), order.end(), [&](int a, int b) {
                    return ev(a).real() != ev(b).real() ? ev(a).real() > ev(b).real() : ev(a).imag() > ev(b).imag();
                });
                for (int b = 0; b < n; ++b) {
                    local[static_cast<std::size_t>(b)].pts.push_back(ev(order[static_cast<std::size_t>(b)]));
                    prev_vec.col(b) = vecs.col(order[static_cast<std::size_t>(b)]).normalized();
                }
                continue;
            }
            // Branches follow eigenvector continuity; eigenvalues of different
            // branches can pass within one mu step of each other.
            std::vector<bool> used(static_cast<std::size_t>(n), false);
            for (int b = 0; b < n; ++b) {
                int best = -1;
                double best_overlap = -1.0;
                for (int e = 0; e < n; ++e) {
                    if (used[static_cast<std::size_t>(e)]) continue;
                    const double o = std::abs(prev_vec.col(b).dot(vecs.col(e).normalized()));
                    if (o > best_overlap) {
                        best_overlap = o;
                        best = e;
                    }
                }
                used[static_cast<std::size_t>(best)] = true;
                local[static_cast<std::size_t>(b)].pts.push_back(ev(best));
                prev_vec.col(b) = vecs.col(best).normalized();
            }
        }
        for (auto& b : local) branches.push_back(std::move(b));
    }

    std::vector<SpectrumCurve> curves;
    std::vector<bool> merged(branches.size(), false);
    for (std::size_t a = 0; a < branches.size(); ++a) {
        if (merged[a]) continue;
        SpectrumCurve curve{branches[a].pts, 1, branches[a].side};
        for (std::size_t b = a + 1; b < branches.size(); ++b) {
            if (merged[b]) continue;
            double diff = 0.0;
            for (std::size_t s = 0; s < branches[a].pts.size(); ++s) {
                diff = std::max(diff, std::abs(branches[a].pts[s] - branches[b].pts[s]) /
                                          (1.0 + std::abs(branches[a].pts[s])));
            }
            if (diff < 1e-9) {
                merged[b] = true;
                ++curve.multiplicity;
                if (branches[b].side != curve.side) curve.side = 0;
            }
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

bool right_of_continuous_spectrum(const ModelSpec& model, double c, double period, int K,
                                  std::complex<double> lambda) {
    const int n = model.n_fields;
    const Eigen::VectorXd binv = model.diffusion.cwiseInverse();
    for (const Eigen::VectorXd* state : {&model.left_state, &model.right_state}) {
        const Eigen::MatrixXd df = model.eval_jacobian(*state);
        for (int k = 0; k <= K; ++k) {
            const double kappa = 2.0 * std::numbers::pi * k / period;
            Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
            a.topRightCorner(n, n).setIdentity();
            for (int f = 0; f < n; ++f) {
                for (int g = 0; g < n; ++g) a(n + f, g) = -binv(f) * df(f, g);
                a(n + f, f) += lambda * binv(f) + kappa * kappa;
                a(n + f, n + f) = -c * binv(f);
            }
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(a, false);
            int unstable = 0;
            for (int i = 0; i < 2 * n; ++i) {
                const double re = es.eigenvalues()(i).real();
                if (std::abs(re) < 1e-12) return false;
                if (re > 0.0) ++unstable;
            }
            if (unstable != n) return false;
        }
    }
    return true;
}

}  // namespace frontstab
