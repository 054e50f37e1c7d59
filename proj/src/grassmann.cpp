#include "frontstab/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>

namespace frontstab {

using numkit::ComplexMatrix;

FlowMatrix flow_matrix(const ProjectedSystem& sys, Complex lambda) {
    FlowMatrix f;
    f.n = sys.dim();
    const int m = sys.half_dim();
    const ProjectedSystem* s = &sys;
    f.a3 = [s, lambda](double x, Eigen::MatrixXcd& a3) { assemble_A3(*s, x, lambda, a3); };
    f.a4.resize(m);
    for (int i = 0; i < m; ++i) f.a4(i) = -sys.speed / sys.diffusion(i % sys.n_fields);
    auto a4 = f.a4;
    f.full = [s, lambda, m, a4](double x, Eigen::MatrixXcd& a) {
        Eigen::MatrixXcd a3;
        assemble_A3(*s, x, lambda, a3);
        a.setZero(2 * m, 2 * m);
        a.topRightCorner(m, m).setIdentity();
        a.bottomLeftCorner(m, m) = a3;
        a.bottomRightCorner(m, m).diagonal() = a4;
    };
    return f;
}

// ---------------------------------------------------------------------------

std::vector<int> CoordinatePatch::complement() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n - size()));
    std::size_t p = 0;
    for (int r = 0; r < n; ++r) {
        if (p < rows.size() && rows[p] == r) {
            ++p;
        } else {
            out.push_back(r);
        }
    }
    return out;
}

void CoordinatePatch::validate() const {
    if (rows.empty() || size() > n) throw std::invalid_argument("CoordinatePatch: bad size");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= n || (i > 0 && rows[i] <= rows[i - 1])) {
            throw std::invalid_argument("CoordinatePatch: rows must be sorted, distinct and in range");
        }
    }
}

CoordinatePatch CoordinatePatch::leading(int n, int m) {
    CoordinatePatch p;
    p.n = n;
    p.rows.resize(static_cast<std::size_t>(m));
    std::iota(p.rows.begin(), p.rows.end(), 0);
    return p;
}

CoordinatePatch CoordinatePatch::trailing(int n, int m) {
    CoordinatePatch p;
    p.n = n;
    p.rows.resize(static_cast<std::size_t>(m));
    std::iota(p.rows.begin(), p.rows.end(), n - m);
    return p;
}

Eigen::MatrixXcd frame_from_chart(const CoordinatePatch& patch, const Eigen::MatrixXcd& y_hat) {
    const int m = patch.size();
    if (y_hat.rows() != patch.n - m || y_hat.cols() != m) {
        throw std::invalid_argument("frame_from_chart: chart has the wrong shape");
    }
    Eigen::MatrixXcd y(patch.n, m);
    const std::vector<int> comp = patch.complement();
    y(patch.rows, Eigen::all) = Eigen::MatrixXcd::Identity(m, m);
    y(comp, Eigen::all) = y_hat;
    return y;
}

Eigen::MatrixXcd chart_from_frame(const CoordinatePatch& patch, const Eigen::MatrixXcd& frame) {
    const Eigen::MatrixXcd block = frame(patch.rows, Eigen::all);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(block);
    const double scale = block.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !(lu.matrixLU().diagonal().cwiseAbs().minCoeff() > 1e-14 * scale)) {
        throw numkit::NumericError("chart_from_frame: frame is singular in the requested patch");
    }
    const std::vector<int> comp = patch.complement();
    const Eigen::MatrixXcd rest = frame(comp, Eigen::all);
    // y_hat = rest * block^{-1}  <=>  block^T y_hat^T = rest^T
    return Eigen::PartialPivLU<Eigen::MatrixXcd>(block.transpose()).solve(rest.transpose()).transpose();
}

CoordinatePatch pivot_patch(const Eigen::MatrixXcd& frame) {
    Eigen::MatrixXcd w = frame;
    const int n = static_cast<int>(w.rows());
    const int m = static_cast<int>(w.cols());
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    CoordinatePatch p;
    p.n = n;
    for (int c = 0; c < m; ++c) {
        int best = -1;
        double best_abs = -1.0;
        for (int r = 0; r < n; ++r) {
            if (used[static_cast<std::size_t>(r)]) continue;
            const double a = std::abs(w(r, c));
            if (a > best_abs) {
                best_abs = a;
                best = r;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        p.rows.push_back(best);
        if (best_abs > 0.0) {
            for (int r = 0; r < n; ++r) {
                if (used[static_cast<std::size_t>(r)]) continue;
                const Complex f = w(r, c) / w(best, c);
                w.row(r).tail(m - c) -= f * w.row(best).tail(m - c);
            }
        }
    }
    std::sort(p.rows.begin(), p.rows.end());
    return p;
}

Eigen::MatrixXcd riccati_rhs(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& c,
                             const Eigen::MatrixXcd& d, const Eigen::MatrixXcd& y_hat) {
    return c + d * y_hat - y_hat * a - y_hat * (b * y_hat);
}

// ---------------------------------------------------------------------------

namespace {

double row_sum_norm(const Eigen::MatrixXcd& m) {
    return m.rows() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

enum class ChartKind { General, LeadingStructured, TrailingStructured };

struct ChartContext {
    const FlowMatrix* flow = nullptr;
    CoordinatePatch patch;
    std::vector<int> comp;
    ChartKind kind = ChartKind::General;
    Eigen::MatrixXcd a;   // full-matrix buffer
    Eigen::MatrixXcd a3;  // structured buffer

    void set_patch(CoordinatePatch p) {
        patch = std::move(p);
        comp = patch.complement();
        kind = ChartKind::General;
        const int n = flow->n;
        if (flow->a3 && n % 2 == 0 && patch.size() == n / 2) {
            if (patch == CoordinatePatch::leading(n, n / 2)) kind = ChartKind::LeadingStructured;
            if (patch == CoordinatePatch::trailing(n, n / 2)) kind = ChartKind::TrailingStructured;
        }
    }

    void rhs(double x, const ComplexMatrix& y, ComplexMatrix& dy) {
        switch (kind) {
            case ChartKind::LeadingStructured:
                // a = 0, b = I, c = A3, d = diag(a4)
                flow->a3(x, a3);
                dy.noalias() = y * y;
                dy = a3 + flow->a4.asDiagonal() * y - dy;
                return;
            case ChartKind::TrailingStructured: {
                // a = diag(a4), b = A3, c = I, d = 0
                flow->a3(x, a3);
                const Eigen::MatrixXcd t = a3 * y;
                dy.noalias() = -(y * t);
                dy -= y * flow->a4.asDiagonal();
                dy.diagonal().array() += 1.0;
                return;
            }
            case ChartKind::General:
                break;
        }
        flow->full(x, a);
        const Eigen::MatrixXcd ab = a(patch.rows, patch.rows);
        const Eigen::MatrixXcd bb = a(patch.rows, comp);
        const Eigen::MatrixXcd cb = a(comp, patch.rows);
        const Eigen::MatrixXcd db = a(comp, comp);
        dy = riccati_rhs(ab, bb, cb, db, y);
    }
};

// Re-charts y (in ctx.patch) into the pivot patch; returns false if that is the same patch.
bool swap_patch(ChartContext& ctx, ComplexMatrix& y, LogDet& acc) {
    const Eigen::MatrixXcd frame = frame_from_chart(ctx.patch, y);
    CoordinatePatch next = pivot_patch(frame);
    if (next == ctx.patch) return false;
    const Eigen::MatrixXcd t = frame(next.rows, Eigen::all);
    acc *= numkit::det_via_lu(t);
    y = chart_from_frame(next, frame);
    ctx.set_patch(std::move(next));
    return true;
}

}  // namespace

numkit::Rhs riccati_flow_rhs(const FlowMatrix& flow, const CoordinatePatch& patch) {
    patch.validate();
    auto ctx = std::make_shared<ChartContext>();
    ctx->flow = &flow;
    ctx->set_patch(patch);
    return [ctx](double x, const ComplexMatrix& y, ComplexMatrix& dy) { ctx->rhs(x, y, dy); };
}

RiccatiState integrate_riccati(const FlowMatrix& flow, const CoordinatePatch& patch0, const Eigen::MatrixXcd& y_hat0,
                               double x_from, double x_to, const RiccatiOptions& options) {
    patch0.validate();
    if (patch0.n != flow.n) throw std::invalid_argument("integrate_riccati: patch does not match the system size");
    if (y_hat0.rows() != flow.n - patch0.size() || y_hat0.cols() != patch0.size()) {
        throw std::invalid_argument("integrate_riccati: initial chart has the wrong shape");
    }
    auto ctx = std::make_shared<ChartContext>();
    ctx->flow = &flow;
    ctx->set_patch(patch0);

    RiccatiState st;
    st.swap_log_det = LogDet{};
    st.x = x_from;
    ComplexMatrix y = y_hat0;
    double last_x = x_from;
    ComplexMatrix last_y = y;
    double h_hint = 0.0;

    numkit::IntegratorOptions io;
    io.tol = options.tol;
    io.record_mesh = options.record_mesh;
    io.on_step = [&](double x, ComplexMatrix& yy) {
        last_x = x;
        if (row_sum_norm(yy) > options.swap_threshold) {
            if (st.swaps >= options.max_swaps) {
                throw SwapError("integrate_riccati: more than " + std::to_string(options.max_swaps) +
                                " patch swaps");
            }
            if (swap_patch(*ctx, yy, st.swap_log_det)) {
                ++st.swaps;
                last_y = yy;
                return numkit::StepAction::Modified;
            }
        }
        last_y = yy;
        return numkit::StepAction::Continue;
    };
    const numkit::Rhs rhs = [ctx](double x, const ComplexMatrix& yy, ComplexMatrix& dy) { ctx->rhs(x, yy, dy); };

    double x0 = x_from;
    for (;;) {
        try {
            io.initial_step = h_hint;
            numkit::IntegrationResult r = numkit::integrate_adaptive(rhs, x0, x_to, y, io);
            st.steps += r.accepted;
            if (options.record_mesh) {
                if (!st.mesh.empty()) r.mesh.erase(r.mesh.begin());
                st.mesh.insert(st.mesh.end(), r.mesh.begin(), r.mesh.end());
            }
            y = std::move(r.y);
            st.x = r.x;
            break;
        } catch (const numkit::BlowUpError& e) {
            // Restart from the last accepted state in the pivot patch.
            y = last_y;
            if (st.swaps >= options.max_swaps || !swap_patch(*ctx, y, st.swap_log_det)) {
                throw SwapError(std::string("integrate_riccati: unrecoverable blow-up: ") + e.what());
            }
            ++st.swaps;
            if (options.record_mesh && st.mesh.empty()) st.mesh.push_back(x0);
            x0 = last_x;
            h_hint = 0.0;
        }
    }
    st.patch = ctx->patch;
    st.y_hat = std::move(y);
    return st;
}

RiccatiState integrate_riccati(const ProjectedSystem& sys, Complex lambda, Side side, const CoordinatePatch& patch0,
                               const Eigen::MatrixXcd& y_hat0, double x_from, double x_to,
                               const RiccatiOptions& options) {
    const FlowMatrix flow = flow_matrix(sys, lambda);
    try {
        return integrate_riccati(flow, patch0, y_hat0, x_from, x_to, options);
    } catch (const numkit::NumericError& e) {
        char buf[96];
        std::snprintf(buf, sizeof buf, " [%s flow, lambda = %.9g%+.9gi]", side == Side::Left ? "left" : "right",
                      lambda.real(), lambda.imag());
        throw numkit::NumericError(e.what() + std::string(buf));
    }
}

// ---------------------------------------------------------------------------

Eigen::MatrixXcd polar_orthonormalize(const Eigen::MatrixXcd& y, LogDet& log_det_s) {
    const Eigen::MatrixXcd g = y.adjoint() * y;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g);
    const Eigen::VectorXd ev = es.eigenvalues();
    if (!(ev.minCoeff() > 1e-300)) throw numkit::RankError("polar_orthonormalize: frame is rank deficient", 0);
    const Eigen::VectorXd inv_sqrt = ev.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXcd s_inv = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
    log_det_s.log_abs = 0.5 * ev.array().log().sum();
    log_det_s.arg = 0.0;
    return y * s_inv;
}

OrthoState integrate_drury_oja(const FlowMatrix& flow, const Eigen::MatrixXcd& q0, LogDet log_det_r0, double x_from,
                               double x_to, const DruryOjaOptions& options) {
    const int n = flow.n;
    const int p = static_cast<int>(q0.cols());
    if (q0.rows() != n || p < 1 || p >= n) {
        throw std::invalid_argument("integrate_drury_oja: frame must be n x m with 0 < m < n");
    }
    const double defect0 = (q0.adjoint() * q0 - Eigen::MatrixXcd::Identity(p, p)).norm();
    if (defect0 > 1e-8) throw std::invalid_argument("integrate_drury_oja: initial frame is not orthonormal");

    const bool structured = static_cast<bool>(flow.a3) && n % 2 == 0;
    const int m = n / 2;
    struct Buffers {
        Eigen::MatrixXcd a, a3, aq, g;
    };
    auto buf = std::make_shared<Buffers>();
    const FlowMatrix* fl = &flow;
    // State rows 0..n-1 hold Q; entry (n, 0) holds log det R.
    const numkit::Rhs rhs = [buf, fl, n, p, m, structured](double x, const ComplexMatrix& y, ComplexMatrix& dy) {
        const auto q = y.topRows(n);
        Eigen::MatrixXcd& aq = buf->aq;
        if (structured) {
            fl->a3(x, buf->a3);
            aq.resize(n, p);
            aq.topRows(m) = q.bottomRows(m);
            aq.bottomRows(m).noalias() = buf->a3 * q.topRows(m);
            aq.bottomRows(m) += fl->a4.asDiagonal() * q.bottomRows(m);
        } else {
            fl->full(x, buf->a);
            aq.noalias() = buf->a * q;
        }
        buf->g.noalias() = q.adjoint() * aq;
        dy.resize(n + 1, p);
        dy.topRows(n) = aq;
        dy.topRows(n).noalias() -= q * buf->g;
        dy.row(n).setZero();
        dy(n, 0) = buf->g.trace();
    };

    OrthoState st;
    ComplexMatrix y(n + 1, p);
    y.topRows(n) = q0;
    y.row(n).setZero();
    y(n, 0) = Complex(log_det_r0.log_abs, log_det_r0.arg);
    st.max_orthonormality_defect = defect0;

    numkit::IntegratorOptions io;
    io.tol = options.tol;
    io.record_mesh = options.record_mesh;
    io.on_step = [&](double, ComplexMatrix& yy) {
        auto q = yy.topRows(n);
        const double defect = (q.adjoint() * q - Eigen::MatrixXcd::Identity(p, p)).norm();
        st.max_orthonormality_defect = std::max(st.max_orthonormality_defect, defect);
        if (defect <= options.reorthonormalize_above) return numkit::StepAction::Continue;
        LogDet s;
        const Eigen::MatrixXcd qn = polar_orthonormalize(q, s);
        q = qn;
        yy(n, 0) += s.log_abs;
        ++st.reorthonormalizations;
        return numkit::StepAction::Modified;
    };
    numkit::IntegrationResult r = numkit::integrate_adaptive(rhs, x_from, x_to, y, io);
    st.q = r.y.topRows(n);
    st.log_det_r.log_abs = r.y(n, 0).real();
    st.log_det_r.arg = r.y(n, 0).imag();
    st.x = r.x;
    st.steps = r.accepted;
    st.mesh = std::move(r.mesh);
    return st;
}

OrthoState integrate_drury_oja(const ProjectedSystem& sys, Complex lambda, Side side, const Eigen::MatrixXcd& q0,
                               double x_from, double x_to, const DruryOjaOptions& options) {
    const FlowMatrix flow = flow_matrix(sys, lambda);
    const Eigen::MatrixXcd qn = q0;
    try {
        return integrate_drury_oja(flow, qn, LogDet{}, x_from, x_to, options);
    } catch (const numkit::NumericError& e) {
        char buf[96];
        std::snprintf(buf, sizeof buf, " [%s flow, lambda = %.9g%+.9gi]", side == Side::Left ? "left" : "right",
                      lambda.real(), lambda.imag());
        throw numkit::NumericError(e.what() + std::string(buf));
    }
}

double subspace_angle(const Eigen::MatrixXcd& qm, const Eigen::MatrixXcd& qp) {
    if (qm.rows() != qp.rows()) throw std::invalid_argument("subspace_angle: dimension mismatch");
    const Eigen::MatrixXcd r = qp - qm * (qm.adjoint() * qp);
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXcd>(r).singularValues();
    if (s.size() == 0) return 0.0;
    return std::asin(std::clamp(s(s.size() - 1), 0.0, 1.0));
}

}  // namespace frontstab
