#include "frontstab/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace frontstab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int channel(int q, int reach, int n, int r, int s) { return ((q + reach) * n + r) * n + s; }

Eigen::MatrixXd jacobian_at(const ModelSpec& model, const FrontProfile2D& front, int i, int j) {
    Eigen::VectorXd u(front.n_fields);
    for (int f = 0; f < front.n_fields; ++f) u(f) = front.at(f, i, j);
    return model.eval_jacobian(u);
}

// Coefficients c_q with f(y_j) = sum_q c_q exp(i kappa_q y_j) and y_0 = -L/2,
// returned for q = 0..ny-1 (negative q at ny + q).
std::vector<Complex> periodic_coefficients(const std::vector<double>& samples) {
    thread_local Eigen::FFT<double> fft;
    const int ny = static_cast<int>(samples.size());
    std::vector<Complex> in(samples.begin(), samples.end());
    std::vector<Complex> out;
    fft.fwd(out, in);
    for (int q = 0; q < ny; ++q) out[static_cast<std::size_t>(q)] /= static_cast<double>(ny);
    return out;
}

// exp(i kappa_q y_0) with y_0 = -L/2 is (-1)^q.
Complex origin_phase(int q) { return (q % 2 == 0) ? 1.0 : -1.0; }

void check_front_for_projection(const FrontProfile2D& front, int K) {
    if (K < 0) throw std::invalid_argument("build_projected_system: K must be non-negative");
    if (!front.values.allFinite()) throw std::invalid_argument("build_projected_system: non-finite front values");
    if (front.grid.ny < 4 * K + 2) {
        throw std::invalid_argument("build_projected_system: ny = " + std::to_string(front.grid.ny) +
                                    " aliases modes up to 2K; need ny >= " + std::to_string(4 * K + 2));
    }
}

std::vector<double> default_kappa(int K, double period) {
    std::vector<double> kappa(static_cast<std::size_t>(2 * K + 1));
    for (int k = -K; k <= K; ++k) kappa[static_cast<std::size_t>(k + K)] = kTwoPi * k / period;
    return kappa;
}

ProjectedSystem single_mode_from(const ProjectedSystem& planar, double kappa) {
    if (planar.mode_reach != 0) {
        throw std::invalid_argument("single_mode_system: the system is not planar");
    }
    ProjectedSystem s = planar;
    s.K = 0;
    s.kappa = {kappa};
    return s;
}

}  // namespace

Eigen::MatrixXcd ProjectedSystem::jacobian_mode(int q, double x) const {
    const int n = n_fields;
    if (std::abs(q) > mode_reach) return Eigen::MatrixXcd::Zero(n, n);
    if (x < x_min() || x > x_max()) {
        if (q != 0) return Eigen::MatrixXcd::Zero(n, n);
        return (x < x_min() ? far_left : far_right).cast<Complex>();
    }
    std::vector<Complex> all;
    jacobian_modes(x, all);
    Eigen::MatrixXcd d(n, n);
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) d(r, s) = all[static_cast<std::size_t>(channel(q, mode_reach, n, r, s))];
    return d;
}

void ProjectedSystem::jacobian_modes(double x, std::vector<Complex>& out) const {
    const int n = n_fields;
    out.resize(static_cast<std::size_t>(modes.channels()));
    if (x >= x_min() && x <= x_max()) {
        modes.eval(x, out.data());
        return;
    }
    std::fill(out.begin(), out.end(), Complex{});
    const Eigen::MatrixXd& d0 = x < x_min() ? far_left : far_right;
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) out[static_cast<std::size_t>(channel(0, mode_reach, n, r, s))] = d0(r, s);
}

void ProjectedSystem::validate() const {
    if (K < 0 || n_fields < 1 || diffusion.size() != n_fields || (diffusion.array() <= 0.0).any()) {
        throw std::invalid_argument("ProjectedSystem: bad sizes or diffusion");
    }
    if (static_cast<int>(kappa.size()) != modes_count()) {
        throw std::invalid_argument("ProjectedSystem: wavenumber list does not match K");
    }
    if (mode_reach < 0 || modes.channels() != (2 * mode_reach + 1) * n_fields * n_fields) {
        throw std::invalid_argument("ProjectedSystem: spline channel count does not match the stored modes");
    }
    if (far_left.rows() != n_fields || far_left.cols() != n_fields || far_right.rows() != n_fields ||
        far_right.cols() != n_fields) {
        throw std::invalid_argument("ProjectedSystem: far-field Jacobians have the wrong size");
    }
    if (!std::isfinite(speed) || !(period > 0.0)) throw std::invalid_argument("ProjectedSystem: bad speed or period");
}

std::vector<Eigen::MatrixXcd> jacobian_fourier_modes(const ModelSpec& model, const FrontProfile2D& front, int i,
                                                     int reach) {
    const int n = front.n_fields;
    const int ny = front.grid.ny;
    if (2 * reach + 1 > ny) throw std::invalid_argument("jacobian_fourier_modes: reach exceeds the grid");
    std::vector<Eigen::MatrixXcd> out(static_cast<std::size_t>(2 * reach + 1), Eigen::MatrixXcd::Zero(n, n));
    std::vector<std::vector<double>> entry(static_cast<std::size_t>(n * n), std::vector<double>(ny));
    for (int j = 0; j < ny; ++j) {
        const Eigen::MatrixXd df = jacobian_at(model, front, i, j);
        for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s) entry[static_cast<std::size_t>(r * n + s)][static_cast<std::size_t>(j)] = df(r, s);
    }
    for (int r = 0; r < n; ++r) {
        for (int s = 0; s < n; ++s) {
            const std::vector<Complex> c = periodic_coefficients(entry[static_cast<std::size_t>(r * n + s)]);
            for (int q = -reach; q <= reach; ++q) {
                out[static_cast<std::size_t>(q + reach)](r, s) =
                    origin_phase(q) * c[static_cast<std::size_t>((q + ny) % ny)];
            }
        }
    }
    return out;
}

std::vector<Eigen::MatrixXcd> autocatalysis_modes_by_convolution(const FrontProfile2D& front, int i, int reach) {
    if (front.n_fields != 2) throw std::invalid_argument("autocatalysis_modes_by_convolution: needs two fields");
    const int ny = front.grid.ny;
    if (2 * reach + 1 > ny) throw std::invalid_argument("autocatalysis_modes_by_convolution: reach exceeds the grid");
    std::vector<double> u(ny), v(ny);
    for (int j = 0; j < ny; ++j) {
        u[static_cast<std::size_t>(j)] = front.at(0, i, j);
        v[static_cast<std::size_t>(j)] = front.at(1, i, j);
    }
    // Raw DFT coefficients convolve cyclically; the origin phase is applied afterwards.
    const std::vector<Complex> uh = periodic_coefficients(u);
    const std::vector<Complex> vh = periodic_coefficients(v);
    auto cyclic = [ny](const std::vector<Complex>& a, const std::vector<Complex>& b, int q) {
        Complex s{};
        for (int l = 0; l < ny; ++l) s += a[static_cast<std::size_t>(l)] * b[static_cast<std::size_t>(((q - l) % ny + ny) % ny)];
        return s;
    };
    std::vector<Eigen::MatrixXcd> out(static_cast<std::size_t>(2 * reach + 1), Eigen::MatrixXcd::Zero(2, 2));
    for (int q = -reach; q <= reach; ++q) {
        const Complex vv = origin_phase(q) * cyclic(vh, vh, q);
        const Complex uv = origin_phase(q) * cyclic(uh, vh, q);
        Eigen::MatrixXcd& d = out[static_cast<std::size_t>(q + reach)];
        d(0, 0) = -vv;
        d(0, 1) = -2.0 * uv;
        d(1, 0) = vv;
        d(1, 1) = 2.0 * uv;
    }
    return out;
}

ProjectedSystem build_projected_system(const ModelSpec& model, const FrontProfile2D& front, int K) {
    model.validate();
    check_front_for_projection(front, K);
    if (front.n_fields != model.n_fields) throw std::invalid_argument("build_projected_system: field count mismatch");
    const int n = model.n_fields;
    const int reach = 2 * K;
    const int nx = front.grid.nx;
    const int channels = (2 * reach + 1) * n * n;
    std::vector<Complex> nodes(static_cast<std::size_t>(nx) * channels);
    for (int i = 0; i < nx; ++i) {
        const std::vector<Eigen::MatrixXcd> d = jacobian_fourier_modes(model, front, i, reach);
        for (int q = -reach; q <= reach; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s)
                    nodes[static_cast<std::size_t>(i) * channels + channel(q, reach, n, r, s)] =
                        d[static_cast<std::size_t>(q + reach)](r, s);
    }
    ProjectedSystem sys;
    sys.K = K;
    sys.period = front.grid.period;
    sys.n_fields = n;
    sys.diffusion = model.diffusion;
    sys.speed = front.speed;
    sys.delta = model.delta;
    sys.model_name = model.name;
    sys.kappa = default_kappa(K, sys.period);
    sys.mode_reach = reach;
    sys.modes = UniformSplineBundle<Complex>(front.grid.x_min, front.grid.hx(), nx, channels, std::move(nodes));
    sys.far_left = model.eval_jacobian(model.left_state);
    sys.far_right = model.eval_jacobian(model.right_state);
    return sys;
}

ProjectedSystem build_projected_system(const ModelSpec& model, const FrontProfile1D& front, int K, double period) {
    model.validate();
    if (K < 0 || !(period > 0.0)) throw std::invalid_argument("build_projected_system: bad K or period");
    if (!front.fields.allFinite()) throw std::invalid_argument("build_projected_system: non-finite front values");
    if (front.n_fields() != model.n_fields) throw std::invalid_argument("build_projected_system: field count mismatch");
    const int n = model.n_fields;
    const int channels = n * n;
    std::vector<Complex> nodes(static_cast<std::size_t>(front.n_x) * channels);
    for (int i = 0; i < front.n_x; ++i) {
        const Eigen::MatrixXd df = model.eval_jacobian(front.fields.row(i).transpose());
        for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s) nodes[static_cast<std::size_t>(i) * channels + r * n + s] = df(r, s);
    }
    ProjectedSystem sys;
    sys.K = K;
    sys.period = period;
    sys.n_fields = n;
    sys.diffusion = model.diffusion;
    sys.speed = front.speed;
    sys.delta = model.delta;
    sys.model_name = model.name;
    sys.kappa = default_kappa(K, period);
    sys.mode_reach = 0;
    sys.modes = UniformSplineBundle<Complex>(front.x_min, front.h(), front.n_x, channels, std::move(nodes));
    sys.far_left = model.eval_jacobian(model.left_state);
    sys.far_right = model.eval_jacobian(model.right_state);
    return sys;
}

ProjectedSystem single_mode_system(const ProjectedSystem& planar, int k) {
    if (std::abs(k) > planar.K) throw std::invalid_argument("single_mode_system: mode outside the projection");
    return single_mode_from(planar, planar.kappa[static_cast<std::size_t>(k + planar.K)]);
}

ProjectedSystem single_mode_system(const ProjectedSystem& planar, double kappa) {
    return single_mode_from(planar, kappa);
}

void assemble_A3(const ProjectedSystem& sys, double x, Complex lambda, Eigen::MatrixXcd& a3) {
    const int n = sys.n_fields;
    const int nm = sys.modes_count();
    const int m = sys.half_dim();
    thread_local std::vector<Complex> d;
    sys.jacobian_modes(x, d);
    a3.setZero(m, m);
    const int reach = sys.mode_reach;
    for (int k = 0; k < nm; ++k) {
        for (int nu = 0; nu < nm; ++nu) {
            const int q = k - nu;
            if (std::abs(q) > reach) continue;
            for (int r = 0; r < n; ++r) {
                const double binv = 1.0 / sys.diffusion(r);
                for (int s = 0; s < n; ++s) {
                    a3(k * n + r, nu * n + s) = -binv * d[static_cast<std::size_t>(channel(q, reach, n, r, s))];
                }
            }
        }
        const double kk = sys.kappa[static_cast<std::size_t>(k)] * sys.kappa[static_cast<std::size_t>(k)];
        for (int r = 0; r < n; ++r) a3(k * n + r, k * n + r) += lambda / sys.diffusion(r) + kk;
    }
}

Eigen::MatrixXcd assemble_A(const ProjectedSystem& sys, double x, Complex lambda) {
    const double slack = 1e-9 * (1.0 + std::abs(sys.x_min()) + std::abs(sys.x_max()));
    if (!(x >= sys.x_min() - slack && x <= sys.x_max() + slack)) {
        throw std::out_of_range("assemble_A: x outside the spline range");
    }
    const int m = sys.half_dim();
    const int n = sys.n_fields;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
    Eigen::MatrixXcd a3;
    assemble_A3(sys, std::clamp(x, sys.x_min(), sys.x_max()), lambda, a3);
    a.topRightCorner(m, m).setIdentity();
    a.bottomLeftCorner(m, m) = a3;
    for (int i = 0; i < m; ++i) a(m + i, m + i) = -sys.speed / sys.diffusion(i % n);
    return a;
}

Eigen::MatrixXcd far_field_A(const ProjectedSystem& sys, int side, Complex lambda) {
    const double x = side < 0 ? sys.x_min() - 1.0 : sys.x_max() + 1.0;
    const int m = sys.half_dim();
    const int n = sys.n_fields;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
    Eigen::MatrixXcd a3;
    assemble_A3(sys, x, lambda, a3);
    a.topRightCorner(m, m).setIdentity();
    a.bottomLeftCorner(m, m) = a3;
    for (int i = 0; i < m; ++i) a(m + i, m + i) = -sys.speed / sys.diffusion(i % n);
    return a;
}

namespace {

// 2N x 2N far-field matrix of one mode in (U_k, P_k) coordinates.
Eigen::MatrixXcd mode_block(const ProjectedSystem& sys, const Eigen::MatrixXd& df, int k, Complex lambda) {
    const int n = sys.n_fields;
    const double kk = sys.kappa[static_cast<std::size_t>(k)] * sys.kappa[static_cast<std::size_t>(k)];
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    a.topRightCorner(n, n).setIdentity();
    for (int r = 0; r < n; ++r) {
        const double binv = 1.0 / sys.diffusion(r);
        for (int s = 0; s < n; ++s) a(n + r, s) = -binv * df(r, s);
        a(n + r, r) += lambda * binv + kk;
        a(n + r, n + r) = -sys.speed * binv;
    }
    return a;
}

// Scatters per-mode 2N x N columns into the mode-major n-vector layout.
void embed(const ProjectedSystem& sys, int k, const Eigen::MatrixXcd& cols, Eigen::MatrixXcd& target) {
    const int n = sys.n_fields;
    const int m = sys.half_dim();
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) {
            target(k * n + r, k * n + c) = cols(r, c);
            target(m + k * n + r, k * n + c) = cols(n + r, c);
        }
    }
}

}  // namespace

BoundarySubspaces boundary_subspaces(const ProjectedSystem& sys, Complex lambda) {
    const int n = sys.n_fields;
    const int m = sys.half_dim();
    BoundarySubspaces out;
    out.lambda = lambda;
    out.minus = Eigen::MatrixXcd::Zero(2 * m, m);
    out.plus = Eigen::MatrixXcd::Zero(2 * m, m);
    for (int k = 0; k < sys.modes_count(); ++k) {
        try {
            const numkit::EigSplit left = numkit::eig_split_by_count(mode_block(sys, sys.far_left, k, lambda), n);
            const numkit::EigSplit right = numkit::eig_split_by_count(mode_block(sys, sys.far_right, k, lambda), n);
            embed(sys, k, left.unstable, out.minus);
            embed(sys, k, right.stable, out.plus);
        } catch (const numkit::SpectralGapError& e) {
            throw numkit::SpectralGapError(std::string(e.what()) + " (mode k = " + std::to_string(k - sys.K) + ")",
                                           e.eigenvalue());
        }
    }
    return out;
}

BoundarySubspaces autocatalysis_boundary_subspaces(const ProjectedSystem& sys, Complex lambda) {
    if (sys.n_fields != 2) throw std::invalid_argument("autocatalysis_boundary_subspaces: needs two fields");
    const double delta = sys.diffusion(0);
    const double c = sys.speed;
    BoundarySubspaces out;
    out.lambda = lambda;
    const int m = sys.half_dim();
    out.minus = Eigen::MatrixXcd::Zero(2 * m, m);
    out.plus = Eigen::MatrixXcd::Zero(2 * m, m);
    for (int k = 0; k < sys.modes_count(); ++k) {
        const double kk = sys.kappa[static_cast<std::size_t>(k)] * sys.kappa[static_cast<std::size_t>(k)];
        Eigen::MatrixXcd left(4, 2), right(4, 2);
        // Behind the front, (u, v) = (0, 1).
        const Complex mu1 = -c / (2.0 * delta) + std::sqrt(c * c / (4.0 * delta * delta) + kk + (lambda + 1.0) / delta);
        const Complex nu = kk + lambda - c * mu1 - mu1 * mu1;
        left.col(0) << nu, 1.0, mu1 * nu, mu1;
        const Complex mu2 = -0.5 * c + std::sqrt(0.25 * c * c + kk + lambda);
        left.col(1) << 0.0, 1.0, 0.0, mu2;
        // Ahead of the front, (u, v) = (1, 0).
        const Complex mu3 = -c / (2.0 * delta) - std::sqrt(c * c / (4.0 * delta * delta) + kk + lambda / delta);
        right.col(0) << 1.0, 0.0, mu3, 0.0;
        const Complex mu4 = -0.5 * c - std::sqrt(0.25 * c * c + kk + lambda);
        right.col(1) << 0.0, 1.0, 0.0, mu4;
        embed(sys, k, left, out.minus);
        embed(sys, k, right, out.plus);
    }
    return out;
}

double principal_angle(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("principal_angle: subspaces have different shapes");
    }
    const Eigen::MatrixXcd qa = Eigen::HouseholderQR<Eigen::MatrixXcd>(a).householderQ() *
                                Eigen::MatrixXcd::Identity(a.rows(), a.cols());
    const Eigen::MatrixXcd qb = Eigen::HouseholderQR<Eigen::MatrixXcd>(b).householderQ() *
                                Eigen::MatrixXcd::Identity(b.rows(), b.cols());
    const Eigen::MatrixXcd resid = qb - qa * (qa.adjoint() * qb);
    const double s = Eigen::JacobiSVD<Eigen::MatrixXcd>(resid).singularValues()(0);
    return std::asin(std::min(1.0, s));
}

}  // namespace frontstab
