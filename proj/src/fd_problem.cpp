#include "fd_problem.hpp"

#include "sparse_lu.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace frontstab::detail {

XStencil x_stencil(const FieldGrid& g, int i) {
    XStencil st{};
    const double h = g.hx();
    if (g.x_order == 4 && i >= 2 && i <= g.nx - 3) {
        st.reach = 2;
        const double d1[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
        const double d2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
        for (int k = 0; k < 5; ++k) {
            st.d1[k] = d1[k] / (12.0 * h);
            st.d2[k] = d2[k] / (12.0 * h * h);
        }
    } else {
        st.reach = 1;
        st.d1[1] = -0.5 / h;
        st.d1[3] = 0.5 / h;
        st.d2[1] = 1.0 / (h * h);
        st.d2[2] = -2.0 / (h * h);
        st.d2[3] = 1.0 / (h * h);
    }
    return st;
}

namespace {

// First and second x-derivatives of field f at interior node (i, j).
inline void x_derivatives(const FieldGrid& g, const XStencil& st, const Eigen::VectorXd& v, int f, int i, int j,
                          double& d1, double& d2) {
    d1 = 0.0;
    d2 = 0.0;
    for (int o = -st.reach; o <= st.reach; ++o) {
        const double w = v(g.index(f, i + o, j));
        d1 += st.d1[o + 2] * w;
        d2 += st.d2[o + 2] * w;
    }
}

}  // namespace

Eigen::VectorXd dx_centered(const FieldGrid& g, int n_fields, const Eigen::VectorXd& v) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(v.size());
    for (int i = 1; i < g.nx - 1; ++i) {
        const XStencil st = x_stencil(g, i);
        for (int f = 0; f < n_fields; ++f) {
            for (int j = 0; j < g.ny; ++j) {
                double d1 = 0.0, d2 = 0.0;
                x_derivatives(g, st, v, f, i, j, d1, d2);
                d(g.index(f, i, j)) = d1;
            }
        }
    }
    return d;
}

Eigen::VectorXd dy_centered(const FieldGrid& g, int n_fields, const Eigen::VectorXd& v) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(v.size());
    if (g.ny < 3) return d;
    const double s = 0.5 / g.hy();
    for (int f = 0; f < n_fields; ++f) {
        for (int i = 1; i < g.nx - 1; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                d(g.index(f, i, j)) =
                    s * (v(g.index(f, i, g.wrap_y(j + 1))) - v(g.index(f, i, g.wrap_y(j - 1))));
            }
        }
    }
    return d;
}

double stationary_residual_inf(const ModelSpec& model, const FieldGrid& g, const Eigen::VectorXd& v,
                               double theta) {
    const int n = model.n_fields;
    const double ihy2 = 1.0 / (g.hy() * g.hy());
    std::vector<double> u(static_cast<std::size_t>(n)), fr(static_cast<std::size_t>(n));
    double worst = 0.0;
    for (int i = 1; i < g.nx - 1; ++i) {
        const XStencil st = x_stencil(g, i);
        for (int j = 0; j < g.ny; ++j) {
            for (int f = 0; f < n; ++f) u[static_cast<std::size_t>(f)] = v(g.index(f, i, j));
            model.reaction(u.data(), fr.data());
            for (int f = 0; f < n; ++f) {
                double d1 = 0.0, d2 = 0.0;
                x_derivatives(g, st, v, f, i, j, d1, d2);
                double lap = d2;
                if (g.ny > 1) {
                    lap += ihy2 * (v(g.index(f, i, g.wrap_y(j + 1))) - 2.0 * u[static_cast<std::size_t>(f)] +
                                   v(g.index(f, i, g.wrap_y(j - 1))));
                }
                const double r = model.diffusion(f) * lap + theta * d1 + fr[static_cast<std::size_t>(f)];
                worst = std::max(worst, std::abs(r));
            }
        }
    }
    return worst;
}

double phase_functional(const FieldGrid& g, const Eigen::VectorXd& template_dx,
                        const Eigen::VectorXd& template_values, const Eigen::VectorXd& v) {
    return template_dx.dot(template_values - v) * g.hx() * g.hy();
}

double transverse_variation(const FieldGrid& g, int n_fields, const Eigen::VectorXd& v) {
    double worst = 0.0;
    for (int f = 0; f < n_fields; ++f) {
        for (int i = 0; i < g.nx; ++i) {
            double mean = 0.0;
            for (int j = 0; j < g.ny; ++j) mean += v(g.index(f, i, j));
            mean /= g.ny;
            for (int j = 0; j < g.ny; ++j) worst = std::max(worst, std::abs(v(g.index(f, i, j)) - mean));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------

StationaryProblem::StationaryProblem(const ModelSpec& model, const FieldGrid& grid,
                                     Eigen::VectorXd template_values, bool pin_y)
    : model_(model), grid_(grid), template_(std::move(template_values)), pin_y_(pin_y) {
    grid_.validate();
    if (template_.size() != static_cast<Eigen::Index>(grid_.nodes()) * model_.n_fields) {
        throw std::invalid_argument("StationaryProblem: template size does not match the grid");
    }
    n_interior_ = model_.n_fields * (grid_.nx - 2) * grid_.ny;
    template_dx_ = dx_centered(grid_, model_.n_fields, template_);
    template_dy_ = dy_centered(grid_, model_.n_fields, template_);
    if (pin_y_ && template_dy_.cwiseAbs().maxCoeff() < 1e-12) {
        throw std::invalid_argument("StationaryProblem: transverse pinning needs a y-dependent template");
    }
}

Eigen::VectorXd StationaryProblem::pack(const Eigen::VectorXd& full, double theta, double theta_y) const {
    Eigen::VectorXd z(unknowns());
    for (int f = 0; f < model_.n_fields; ++f)
        for (int i = 1; i < grid_.nx - 1; ++i)
            for (int j = 0; j < grid_.ny; ++j) z(interior_index(f, i, j)) = full(grid_.index(f, i, j));
    z(n_interior_) = theta;
    if (pin_y_) z(n_interior_ + 1) = theta_y;
    return z;
}

Eigen::VectorXd StationaryProblem::unpack(const Eigen::VectorXd& z,
                                          const Eigen::VectorXd& boundary_source) const {
    Eigen::VectorXd full = boundary_source;
    for (int f = 0; f < model_.n_fields; ++f)
        for (int i = 1; i < grid_.nx - 1; ++i)
            for (int j = 0; j < grid_.ny; ++j) full(grid_.index(f, i, j)) = z(interior_index(f, i, j));
    return full;
}

Eigen::VectorXd StationaryProblem::residual(const Eigen::VectorXd& z,
                                            const Eigen::VectorXd& boundary_source) const {
    const FieldGrid& g = grid_;
    const int n = model_.n_fields;
    const Eigen::VectorXd v = unpack(z, boundary_source);
    const double theta = z(n_interior_);
    const double theta_y = pin_y_ ? z(n_interior_ + 1) : 0.0;
    const double ihy2 = 1.0 / (g.hy() * g.hy());
    const double sy = 0.5 / g.hy();

    Eigen::VectorXd r(unknowns());
    std::vector<double> u(static_cast<std::size_t>(n)), fr(static_cast<std::size_t>(n));
    for (int i = 1; i < g.nx - 1; ++i) {
        const XStencil st = x_stencil(g, i);
        for (int j = 0; j < g.ny; ++j) {
            for (int f = 0; f < n; ++f) u[static_cast<std::size_t>(f)] = v(g.index(f, i, j));
            model_.reaction(u.data(), fr.data());
            const int jp = g.wrap_y(j + 1), jm = g.wrap_y(j - 1);
            for (int f = 0; f < n; ++f) {
                double d1 = 0.0, d2 = 0.0;
                x_derivatives(g, st, v, f, i, j, d1, d2);
                double lap = d2;
                if (g.ny > 1) {
                    lap += ihy2 * (v(g.index(f, i, jp)) - 2.0 * u[static_cast<std::size_t>(f)] + v(g.index(f, i, jm)));
                }
                double val = model_.diffusion(f) * lap + theta * d1 + fr[static_cast<std::size_t>(f)];
                if (pin_y_) val += theta_y * sy * (v(g.index(f, i, jp)) - v(g.index(f, i, jm)));
                r(interior_index(f, i, j)) = val;
            }
        }
    }
    r(n_interior_) = phase_functional(g, template_dx_, template_, v);
    if (pin_y_) r(n_interior_ + 1) = phase_functional(g, template_dy_, template_, v);
    return r;
}

namespace {

int interior_row(const FieldGrid& g, int f, int i, int j) { return (f * (g.nx - 2) + (i - 1)) * g.ny + j; }

// Triplets of  B Lap + theta d_x + theta_y d_y + DF(v)  on interior nodes,
// Dirichlet columns eliminated.
void append_operator_triplets(const ModelSpec& model, const FieldGrid& g, const Eigen::VectorXd& v, double theta,
                              double theta_y, std::vector<Eigen::Triplet<double>>& t) {
    const int n = model.n_fields;
    const double ihy2 = 1.0 / (g.hy() * g.hy());
    const double sy = 0.5 / g.hy();
    std::vector<double> u(static_cast<std::size_t>(n)), jac(static_cast<std::size_t>(n * n));
    for (int i = 1; i < g.nx - 1; ++i) {
        const XStencil st = x_stencil(g, i);
        for (int j = 0; j < g.ny; ++j) {
            for (int f = 0; f < n; ++f) u[static_cast<std::size_t>(f)] = v(g.index(f, i, j));
            model.jacobian(u.data(), jac.data());
            const int jp = g.wrap_y(j + 1), jm = g.wrap_y(j - 1);
            for (int f = 0; f < n; ++f) {
                const int row = interior_row(g, f, i, j);
                const double b = model.diffusion(f);
                double diag = 0.0;
                for (int o = -st.reach; o <= st.reach; ++o) {
                    const double w = b * st.d2[o + 2] + theta * st.d1[o + 2];
                    if (o == 0) {
                        diag += w;
                    } else if (i + o >= 1 && i + o <= g.nx - 2) {
                        t.emplace_back(row, interior_row(g, f, i + o, j), w);
                    }
                }
                if (g.ny > 1) {
                    diag -= 2.0 * b * ihy2;
                    t.emplace_back(row, interior_row(g, f, i, jp), b * ihy2 + theta_y * sy);
                    t.emplace_back(row, interior_row(g, f, i, jm), b * ihy2 - theta_y * sy);
                }
                for (int gf = 0; gf < n; ++gf) {
                    double val = jac[static_cast<std::size_t>(f * n + gf)];
                    if (gf == f) val += diag;
                    t.emplace_back(row, interior_row(g, gf, i, j), val);
                }
            }
        }
    }
}

}  // namespace

Eigen::SparseMatrix<double> linearized_operator(const ModelSpec& model, const FieldGrid& g, const Eigen::VectorXd& v,
                                                double c) {
    const int size = model.n_fields * (g.nx - 2) * g.ny;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(size) * (9 + model.n_fields));
    append_operator_triplets(model, g, v, c, 0.0, t);
    Eigen::SparseMatrix<double> op(size, size);
    op.setFromTriplets(t.begin(), t.end());
    op.makeCompressed();
    return op;
}

Eigen::SparseMatrix<double> StationaryProblem::jacobian(const Eigen::VectorXd& z,
                                                        const Eigen::VectorXd& boundary_source) const {
    const FieldGrid& g = grid_;
    const int n = model_.n_fields;
    const Eigen::VectorXd v = unpack(z, boundary_source);
    const double theta = z(n_interior_);
    const double theta_y = pin_y_ ? z(n_interior_ + 1) : 0.0;
    const double sy = 0.5 / g.hy();
    const int col_theta = n_interior_;
    const int col_theta_y = n_interior_ + 1;
    const double cell = g.hx() * g.hy();

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(n_interior_) * (9 + n + 4));
    append_operator_triplets(model_, g, v, theta, theta_y, t);
    for (int i = 1; i < g.nx - 1; ++i) {
        const XStencil st = x_stencil(g, i);
        for (int j = 0; j < g.ny; ++j) {
            const int jp = g.wrap_y(j + 1), jm = g.wrap_y(j - 1);
            for (int f = 0; f < n; ++f) {
                const int row = interior_index(f, i, j);
                double d1 = 0.0, d2 = 0.0;
                x_derivatives(g, st, v, f, i, j, d1, d2);
                t.emplace_back(row, col_theta, d1);
                if (pin_y_) t.emplace_back(row, col_theta_y, sy * (v(g.index(f, i, jp)) - v(g.index(f, i, jm))));
                t.emplace_back(n_interior_, row, -template_dx_(g.index(f, i, j)) * cell);
                if (pin_y_) t.emplace_back(n_interior_ + 1, row, -template_dy_(g.index(f, i, j)) * cell);
            }
        }
    }
    Eigen::SparseMatrix<double> jm(unknowns(), unknowns());
    jm.setFromTriplets(t.begin(), t.end());
    jm.makeCompressed();
    return jm;
}

NewtonOutcome newton_stationary(const StationaryProblem& problem, const Eigen::VectorXd& v0,
                                double theta0, double tol, int max_iterations) {
    NewtonOutcome out;
    Eigen::VectorXd z = problem.pack(v0, theta0, 0.0);
    Eigen::VectorXd r = problem.residual(z, v0);
    double rn = r.cwiseAbs().maxCoeff();
    out.residual_history.push_back(rn);

    // Chord iteration: the factorization is kept while the residual contracts
    // by at least a factor 4 per step, and rebuilt otherwise.
    SparseLu lu;
    bool fresh = false;
    bool have_lu = false;
    while (rn >= tol && out.iterations < max_iterations && std::isfinite(rn)) {
        if (!have_lu) {
            if (!lu.factor(problem.jacobian(z, v0))) break;
            have_lu = true;
            fresh = true;
            ++out.factorizations;
        }
        const Eigen::VectorXd dz = lu.solve(r);
        if (!dz.allFinite()) break;
        double step = 1.0;
        Eigen::VectorXd z_try, r_try;
        double rn_try = 0.0;
        for (int k = 0; k < (fresh ? 6 : 1); ++k) {
            z_try = z - step * dz;
            r_try = problem.residual(z_try, v0);
            rn_try = r_try.cwiseAbs().maxCoeff();
            if (std::isfinite(rn_try) && rn_try < 2.0 * rn) break;
            step *= 0.5;
        }
        if (!fresh && !(rn_try < 0.25 * rn)) {
            // Stale Jacobian: discard the step and refactor at the current point.
            have_lu = false;
            continue;
        }
        z = std::move(z_try);
        r = std::move(r_try);
        rn = rn_try;
        fresh = false;
        ++out.iterations;
        out.residual_history.push_back(rn);
    }
    out.converged = rn < tol;
    out.values = problem.unpack(z, v0);
    out.theta = z(problem.interior_unknowns());
    out.theta_y = problem.pins_y() ? z(problem.interior_unknowns() + 1) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------

ImexFreezer::ImexFreezer(const ModelSpec& model, const FieldGrid& grid, Eigen::VectorXd template_values,
                         double dt)
    : model_(model), grid_(grid), template_(std::move(template_values)), dt_(dt) {
    grid_.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("ImexFreezer: dt must be positive");
    template_dx_ = dx_centered(grid_, model_.n_fields, template_);
    const int ny = grid_.ny;
    const int ni = grid_.nx - 2;
    sigma_.resize(static_cast<std::size_t>(ny));
    for (int l = 0; l < ny; ++l) {
        const double s = std::sin(std::numbers::pi * l / ny);
        sigma_[static_cast<std::size_t>(l)] = 4.0 * s * s / (grid_.hy() * grid_.hy());
    }
    const double ihx2 = 1.0 / (grid_.hx() * grid_.hx());
    cprime_.resize(static_cast<std::size_t>(model_.n_fields * ny));
    denom_.resize(cprime_.size());
    for (int f = 0; f < model_.n_fields; ++f) {
        const double b = model_.diffusion(f);
        for (int l = 0; l < ny; ++l) {
            const double diag = 1.0 + dt_ * b * (2.0 * ihx2 + sigma_[static_cast<std::size_t>(l)]);
            const double off = -dt_ * b * ihx2;
            auto& cp = cprime_[static_cast<std::size_t>(f * ny + l)];
            auto& dn = denom_[static_cast<std::size_t>(f * ny + l)];
            cp.resize(static_cast<std::size_t>(ni));
            dn.resize(static_cast<std::size_t>(ni));
            for (int i = 0; i < ni; ++i) {
                const double d = diag - (i > 0 ? off * cp[static_cast<std::size_t>(i - 1)] : 0.0);
                dn[static_cast<std::size_t>(i)] = d;
                cp[static_cast<std::size_t>(i)] = off / d;
            }
        }
    }
    spectral_.resize(static_cast<std::size_t>(ni) * ny);
}

void ImexFreezer::implicit_solve(int f, std::vector<double>& rhs, const double* left, const double* right) {
    const int ny = grid_.ny;
    const int ni = grid_.nx - 2;
    const double coupling = dt_ * model_.diffusion(f) / (grid_.hx() * grid_.hx());
    if (left != nullptr) {
        for (int j = 0; j < ny; ++j) {
            rhs[static_cast<std::size_t>(j)] += coupling * left[j];
            rhs[static_cast<std::size_t>((ni - 1) * ny + j)] += coupling * right[j];
        }
    }
    const double off = -coupling;
    if (ny == 1) {
        const auto& cp = cprime_[static_cast<std::size_t>(f)];
        const auto& dn = denom_[static_cast<std::size_t>(f)];
        for (int i = 0; i < ni; ++i) {
            const double prev = i > 0 ? rhs[static_cast<std::size_t>(i - 1)] : 0.0;
            rhs[static_cast<std::size_t>(i)] = (rhs[static_cast<std::size_t>(i)] - off * prev) / dn[static_cast<std::size_t>(i)];
        }
        for (int i = ni - 2; i >= 0; --i) {
            rhs[static_cast<std::size_t>(i)] -= cp[static_cast<std::size_t>(i)] * rhs[static_cast<std::size_t>(i + 1)];
        }
        return;
    }

    static thread_local Eigen::FFT<double> fft;
    std::vector<double> col(static_cast<std::size_t>(ny));
    std::vector<std::complex<double>> hat(static_cast<std::size_t>(ny));
    for (int i = 0; i < ni; ++i) {
        std::copy_n(rhs.begin() + static_cast<std::ptrdiff_t>(i) * ny, ny, col.begin());
        fft.fwd(hat, col);
        std::copy(hat.begin(), hat.end(), spectral_.begin() + static_cast<std::ptrdiff_t>(i) * ny);
    }
    for (int l = 0; l < ny; ++l) {
        const auto& cp = cprime_[static_cast<std::size_t>(f * ny + l)];
        const auto& dn = denom_[static_cast<std::size_t>(f * ny + l)];
        for (int i = 0; i < ni; ++i) {
            auto& s = spectral_[static_cast<std::size_t>(i) * ny + l];
            const std::complex<double> prev =
                i > 0 ? spectral_[static_cast<std::size_t>(i - 1) * ny + l] : std::complex<double>{};
            s = (s - off * prev) / dn[static_cast<std::size_t>(i)];
        }
        for (int i = ni - 2; i >= 0; --i) {
            spectral_[static_cast<std::size_t>(i) * ny + l] -=
                cp[static_cast<std::size_t>(i)] * spectral_[static_cast<std::size_t>(i + 1) * ny + l];
        }
    }
    for (int i = 0; i < ni; ++i) {
        std::copy_n(spectral_.begin() + static_cast<std::ptrdiff_t>(i) * ny, ny, hat.begin());
        fft.inv(col, hat);
        std::copy(col.begin(), col.end(), rhs.begin() + static_cast<std::ptrdiff_t>(i) * ny);
    }
}

double ImexFreezer::step(Eigen::VectorXd& v) {
    const FieldGrid& g = grid_;
    const int n = model_.n_fields;
    const int ni = g.nx - 2;
    const int ny = g.ny;
    const double sx = 0.5 / g.hx();
    const std::size_t block = static_cast<std::size_t>(ni) * ny;

    std::vector<std::vector<double>> w0(static_cast<std::size_t>(n), std::vector<double>(block));
    std::vector<std::vector<double>> w1(static_cast<std::size_t>(n), std::vector<double>(block));
    std::vector<double> u(static_cast<std::size_t>(n)), fr(static_cast<std::size_t>(n));
    for (int i = 1; i < g.nx - 1; ++i) {
        for (int j = 0; j < ny; ++j) {
            for (int f = 0; f < n; ++f) u[static_cast<std::size_t>(f)] = v(g.index(f, i, j));
            model_.reaction(u.data(), fr.data());
            const std::size_t k = static_cast<std::size_t>(i - 1) * ny + j;
            for (int f = 0; f < n; ++f) {
                w0[static_cast<std::size_t>(f)][k] = u[static_cast<std::size_t>(f)] + dt_ * fr[static_cast<std::size_t>(f)];
                w1[static_cast<std::size_t>(f)][k] =
                    dt_ * sx * (v(g.index(f, i + 1, j)) - v(g.index(f, i - 1, j)));
            }
        }
    }
    double num = 0.0, den = 0.0;
    for (int f = 0; f < n; ++f) {
        implicit_solve(f, w0[static_cast<std::size_t>(f)], &v(g.index(f, 0, 0)), &v(g.index(f, g.nx - 1, 0)));
        implicit_solve(f, w1[static_cast<std::size_t>(f)], nullptr, nullptr);
        for (int i = 1; i < g.nx - 1; ++i) {
            for (int j = 0; j < ny; ++j) {
                const std::size_t k = static_cast<std::size_t>(i - 1) * ny + j;
                const std::size_t idx = g.index(f, i, j);
                num += template_dx_(idx) * (template_(idx) - w0[static_cast<std::size_t>(f)][k]);
                den += template_dx_(idx) * w1[static_cast<std::size_t>(f)][k];
            }
        }
    }
    if (!(std::abs(den) > 0.0)) throw std::runtime_error("ImexFreezer: degenerate phase condition");
    const double zeta = num / den;
    for (int f = 0; f < n; ++f) {
        for (int i = 1; i < g.nx - 1; ++i) {
            for (int j = 0; j < ny; ++j) {
                const std::size_t k = static_cast<std::size_t>(i - 1) * ny + j;
                v(g.index(f, i, j)) = w0[static_cast<std::size_t>(f)][k] + zeta * w1[static_cast<std::size_t>(f)][k];
            }
        }
    }
    return zeta;
}

}  // namespace frontstab::detail
