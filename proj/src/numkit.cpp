#include "frontstab/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace frontstab::numkit {

void ToleranceSpec::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
        throw std::invalid_argument("ToleranceSpec: abs_tol and rel_tol must be strictly positive");
    }
}

ComplexMatrix make_matrix(int rows, int cols, std::span<const Complex> row_major) {
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows) * cols != row_major.size()) {
        throw std::invalid_argument("make_matrix: rows*cols does not match the entry count");
    }
    ComplexMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = row_major[static_cast<std::size_t>(i) * cols + j];
        }
    }
    require_finite(m, "make_matrix");
    return m;
}

bool all_finite(const ComplexMatrix& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        const Complex z = m.data()[k];
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
}

void require_finite(const ComplexMatrix& m, const char* context) {
    if (!all_finite(m)) {
        throw NumericError(std::string(context) + ": matrix has non-finite entries");
    }
}

QR qr_decompose(const ComplexMatrix& m) {
    const Eigen::Index n = m.rows();
    const Eigen::Index cols = m.cols();
    if (cols > n) throw std::invalid_argument("qr_decompose: more columns than rows");
    require_finite(m, "qr_decompose");

    double scale = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) scale = std::max(scale, m.col(j).norm());

    QR out{ComplexMatrix::Zero(n, cols), ComplexMatrix::Zero(cols, cols)};
    for (Eigen::Index j = 0; j < cols; ++j) {
        ComplexVector v = m.col(j);
        // Two passes of classical Gram-Schmidt keep Q orthonormal to rounding.
        for (int pass = 0; pass < 2; ++pass) {
            if (j == 0) break;
            const ComplexVector coeff = out.q.leftCols(j).adjoint() * v;
            v.noalias() -= out.q.leftCols(j) * coeff;
            out.r.col(j).head(j) += coeff;
        }
        const double nv = v.norm();
        if (!(nv > 1e-13 * scale)) {
            throw RankError("qr_decompose: column " + std::to_string(j) + " is linearly dependent",
                            static_cast<int>(j));
        }
        out.r(j, j) = nv;
        out.q.col(j) = v / nv;
    }
    return out;
}

double smallest_singular_value(const ComplexMatrix& m) {
    require_finite(m, "smallest_singular_value");
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<ComplexMatrix> svd(m);
    return svd.singularValues().minCoeff();
}

Complex LogDet::value() const {
    if (is_zero()) return {0.0, 0.0};
    return std::polar(std::exp(log_abs), arg);
}

double principal_arg(const LogDet& d) {
    return std::arg(std::polar(1.0, d.arg));
}

LogDet det_via_lu(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("det_via_lu: matrix must be square");
    require_finite(m, "det_via_lu");
    LogDet out;
    if (m.rows() == 0) return out;
    Eigen::PartialPivLU<ComplexMatrix> lu(m);
    const ComplexMatrix& f = lu.matrixLU();
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const Complex d = f(i, i);
        if (d == Complex{0.0, 0.0}) {
            return {-std::numeric_limits<double>::infinity(), 0.0};
        }
        out.log_abs += std::log(std::abs(d));
        out.arg += std::arg(d);
    }
    if (lu.permutationP().determinant() < 0) out.arg += std::numbers::pi;
    return out;
}

void normalize_phase(Eigen::Ref<ComplexVector> v) {
    const double nv = v.norm();
    if (nv == 0.0) return;
    v /= nv;
    const double threshold = 1e-8 * v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > threshold) {
            v *= std::conj(v(i)) / std::abs(v(i));
            v(i) = std::abs(v(i));
            return;
        }
    }
}

namespace {

struct EigenPairs {
    ComplexVector values;
    ComplexMatrix vectors;
    std::vector<Eigen::Index> order;  // ascending real part, ties by imaginary part
};

EigenPairs sorted_eigenpairs(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("eig_split: matrix must be square");
    require_finite(m, "eig_split");
    Eigen::ComplexEigenSolver<ComplexMatrix> solver(m, true);
    if (solver.info() != Eigen::Success) throw NumericError("eig_split: eigensolver failed");
    EigenPairs out{solver.eigenvalues(), solver.eigenvectors(), {}};
    out.order.resize(static_cast<std::size_t>(m.rows()));
    std::iota(out.order.begin(), out.order.end(), Eigen::Index{0});
    std::sort(out.order.begin(), out.order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const Complex za = out.values(a), zb = out.values(b);
        if (za.real() != zb.real()) return za.real() < zb.real();
        return za.imag() < zb.imag();
    });
    return out;
}

EigSplit assemble_split(const EigenPairs& pairs, Eigen::Index n_stable) {
    const Eigen::Index n = pairs.values.size();
    EigSplit out{ComplexMatrix(n, n - n_stable), ComplexMatrix(n, n_stable),
                 ComplexVector(n - n_stable), ComplexVector(n_stable)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = pairs.order[static_cast<std::size_t>(k)];
        ComplexVector v = pairs.vectors.col(src);
        normalize_phase(v);
        if (k < n_stable) {
            out.stable.col(k) = v;
            out.stable_values(k) = pairs.values(src);
        } else {
            // Unstable columns ordered by decreasing real part.
            const Eigen::Index dst = n - 1 - k;
            out.unstable.col(dst) = v;
            out.unstable_values(dst) = pairs.values(src);
        }
    }
    return out;
}

}  // namespace

EigSplit eig_split(const ComplexMatrix& m, double gap_tol) {
    const EigenPairs pairs = sorted_eigenpairs(m);
    Eigen::Index n_stable = 0;
    for (Eigen::Index k = 0; k < pairs.values.size(); ++k) {
        const Complex mu = pairs.values(k);
        if (std::abs(mu.real()) < gap_tol) {
            std::ostringstream os;
            os << "eig_split: spectral gap violated, eigenvalue " << mu << " within " << gap_tol
               << " of the imaginary axis";
            throw SpectralGapError(os.str(), mu);
        }
        if (mu.real() < 0.0) ++n_stable;
    }
    return assemble_split(pairs, n_stable);
}

EigSplit eig_split_by_count(const ComplexMatrix& m, int n_unstable, double gap_tol) {
    const EigenPairs pairs = sorted_eigenpairs(m);
    const Eigen::Index n = pairs.values.size();
    if (n_unstable < 0 || n_unstable > n) throw std::invalid_argument("eig_split_by_count: bad count");
    const Eigen::Index n_stable = n - n_unstable;
    if (n_stable > 0 && n_unstable > 0) {
        const Complex lo = pairs.values(pairs.order[static_cast<std::size_t>(n_stable - 1)]);
        const Complex hi = pairs.values(pairs.order[static_cast<std::size_t>(n_stable)]);
        if (hi.real() - lo.real() < gap_tol) {
            std::ostringstream os;
            os << "eig_split_by_count: spectral gap violated between " << lo << " and " << hi;
            throw SpectralGapError(os.str(), hi);
        }
    }
    return assemble_split(pairs, n_stable);
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

namespace {

namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp

struct Stepper {
    const Rhs& rhs;
    long evaluations = 0;
    ComplexMatrix k1, k2, k3, k4, k5, k6, k7, tmp;

    explicit Stepper(const Rhs& f) : rhs(f) {}

    void eval(double x, const ComplexMatrix& y, ComplexMatrix& out) {
        rhs(x, y, out);
        ++evaluations;
    }

    // Takes one step of size h from (x, y) with k1 = f(x, y) already stored.
    // Writes the fifth-order solution to y1 and leaves f(x+h, y1) in k7.
    void step(double x, const ComplexMatrix& y, double h, ComplexMatrix& y1) {
        using namespace dp;
        tmp = y + h * (a21 * k1);
        eval(x + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        eval(x + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        eval(x + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        eval(x + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        eval(x + h, tmp, k6);
        y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        eval(x + h, y1, k7);
    }

    double error_norm(const ComplexMatrix& y, const ComplexMatrix& y1, double h,
                      const ToleranceSpec& tol) {
        using namespace dp;
        tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double sum = 0.0;
        const Eigen::Index n = y.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sc = tol.abs_tol + tol.rel_tol * std::max(std::abs(y.data()[i]),
                                                                   std::abs(y1.data()[i]));
            const double r = std::abs(tmp.data()[i]) / sc;
            sum += r * r;
        }
        const double err = std::sqrt(sum / static_cast<double>(std::max<Eigen::Index>(n, 1)));
        return std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
    }
};

double rms_scaled(const ComplexMatrix& v, const ComplexMatrix& y, const ToleranceSpec& tol) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double sc = tol.abs_tol + tol.rel_tol * std::abs(y.data()[i]);
        const double r = std::abs(v.data()[i]) / sc;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(std::max<Eigen::Index>(v.size(), 1)));
}

}  // namespace

IntegrationResult integrate_adaptive(const Rhs& rhs, double x0, double x1, ComplexMatrix y0,
                                     const IntegratorOptions& options) {
    options.tol.validate();
    require_finite(y0, "integrate_adaptive");
    IntegrationResult result;
    result.x = x0;
    if (options.record_mesh) result.mesh.push_back(x0);
    if (x1 == x0) {
        result.y = std::move(y0);
        return result;
    }

    const double span = std::abs(x1 - x0);
    const double dir = x1 > x0 ? 1.0 : -1.0;
    const double h_min = 1e-14 * span;
    const double h_max = std::min(options.max_step, span);

    Stepper st(rhs);
    ComplexMatrix y = std::move(y0);
    ComplexMatrix y1(y.rows(), y.cols());
    st.eval(x0, y, st.k1);

    double h = options.initial_step;
    if (!(h > 0.0)) {
        // Hairer's starting-step heuristic.
        const double d0 = rms_scaled(y, y, options.tol);
        const double d1 = rms_scaled(st.k1, y, options.tol);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, h_max);
        ComplexMatrix ytry = y + dir * h0 * st.k1;
        ComplexMatrix ftry(y.rows(), y.cols());
        st.eval(x0 + dir * h0, ytry, ftry);
        const double d2 = rms_scaled(ftry - st.k1, y, options.tol) / h0;
        const double dd = std::max(d1, d2);
        const double h1 = dd <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dd, 0.2);
        h = std::min({100.0 * h0, h1, h_max});
        if (!std::isfinite(h) || h <= 0.0) h = std::min(1e-3 * span, h_max);
    }
    h = std::min(h, h_max);

    constexpr double beta = 0.04;
    constexpr double expo = 0.2 - 0.75 * beta;
    constexpr double safe = 0.9;
    double err_old = 1e-4;
    bool last_rejected = false;
    double x = x0;

    while (dir * (x1 - x) > 0.0) {
        if (result.accepted + result.rejected >= options.max_steps) {
            throw NumericError("integrate_adaptive: maximum number of steps exceeded");
        }
        if (h < h_min) {
            throw BlowUpError("integrate_adaptive: step size underflow at x = " + std::to_string(x), x);
        }
        bool hit_end = false;
        if (h >= std::abs(x1 - x) * (1.0 - 1e-12)) {
            h = std::abs(x1 - x);
            hit_end = true;
        }
        st.step(x, y, dir * h, y1);
        const double err = st.error_norm(y, y1, dir * h, options.tol);

        if (err <= 1.0) {
            const double fac11 = std::pow(std::max(err, 1e-16), expo);
            double fac = fac11 / std::pow(err_old, beta);
            fac = std::clamp(fac / safe, 0.1, 5.0);
            double h_new = h / fac;
            err_old = std::max(err, 1e-4);
            x = hit_end ? x1 : x + dir * h;
            std::swap(y, y1);
            std::swap(st.k1, st.k7);
            ++result.accepted;
            result.last_step = h;
            if (options.record_mesh) result.mesh.push_back(x);
            if (last_rejected) h_new = std::min(h_new, h);
            last_rejected = false;
            h = std::min(h_new, h_max);
            if (options.on_step) {
                const StepAction action = options.on_step(x, y);
                if (action == StepAction::Stop) {
                    result.stopped = dir * (x1 - x) > 0.0;
                    break;
                }
                if (action == StepAction::Modified) {
                    require_finite(y, "integrate_adaptive: on_step");
                    st.eval(x, y, st.k1);
                }
            }
        } else {
            const double fac11 = std::isfinite(err) ? std::pow(err, expo) : 1e3;
            h /= std::min(5.0, fac11 / safe);
            last_rejected = true;
            ++result.rejected;
        }
    }
    result.x = x;
    result.y = std::move(y);
    result.evaluations = st.evaluations;
    return result;
}

ComplexMatrix integrate_on_mesh(const Rhs& rhs, std::span<const double> mesh, ComplexMatrix y0) {
    require_finite(y0, "integrate_on_mesh");
    if (mesh.size() < 2) return y0;
    Stepper st(rhs);
    ComplexMatrix y = std::move(y0);
    ComplexMatrix y1(y.rows(), y.cols());
    st.eval(mesh[0], y, st.k1);
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i) {
        st.step(mesh[i], y, mesh[i + 1] - mesh[i], y1);
        std::swap(y, y1);
        std::swap(st.k1, st.k7);
    }
    return y;
}

}  // namespace frontstab::numkit
