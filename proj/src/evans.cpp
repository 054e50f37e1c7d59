#include "frontstab/evans.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "arpack.hpp"
#include "fd_problem.hpp"
#include "frontstab/parallel.hpp"
#include "sparse_lu.hpp"

namespace frontstab {

namespace {

constexpr double kPi = std::numbers::pi;

struct Window {
    double left;
    double right;
};

Window window(const ProjectedSystem& sys, const EvansOptions& o) {
    const Window w{std::isnan(o.x_left) ? sys.x_min() : o.x_left, std::isnan(o.x_right) ? sys.x_max() : o.x_right};
    if (!(w.left < o.x_star && o.x_star < w.right)) {
        throw std::invalid_argument("evans: matching point must lie strictly inside the integration window");
    }
    return w;
}

std::string lambda_tag(Complex lambda) {
    char buf[80];
    std::snprintf(buf, sizeof buf, " at lambda = %.9g%+.9gi", lambda.real(), lambda.imag());
    return buf;
}

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    return a;
}

struct StartChart {
    CoordinatePatch patch;
    Eigen::MatrixXcd y_hat;
};

// The default patch unless its block is singular, as happens past the branch
// point of the continuous spectrum; the pivoted patch is used there.
StartChart start_chart(const Eigen::MatrixXcd& frame, const CoordinatePatch& preferred) {
    try {
        return {preferred, chart_from_frame(preferred, frame)};
    } catch (const numkit::NumericError&) {
        const CoordinatePatch p = pivot_patch(frame);
        return {p, chart_from_frame(p, frame)};
    }
}

Eigen::MatrixXcd hstack(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd m(a.rows(), a.cols() + b.cols());
    m << a, b;
    return m;
}

}  // namespace

const char* backend_name(Backend b) { return b == Backend::Riccati ? "riccati" : "drury-oja"; }

Backend parse_backend(const std::string& s) {
    if (s == "riccati") return Backend::Riccati;
    if (s == "drury-oja" || s == "drury_oja") return Backend::DruryOja;
    throw std::invalid_argument("unknown backend '" + s + "'");
}

InitialCharts initial_charts(const ProjectedSystem& sys, Complex lambda) {
    const BoundarySubspaces b = boundary_subspaces(sys, lambda);
    const int n = sys.dim();
    const int m = sys.half_dim();
    return {chart_from_frame(CoordinatePatch::leading(n, m), b.minus),
            chart_from_frame(CoordinatePatch::trailing(n, m), b.plus)};
}

EvansValue evans_riccati(const ProjectedSystem& sys, Complex lambda, const EvansOptions& options) {
    const Window w = window(sys, options);
    const int n = sys.dim();
    const int m = sys.half_dim();
    const BoundarySubspaces b = boundary_subspaces(sys, lambda);
    const StartChart sl = start_chart(b.minus, CoordinatePatch::leading(n, m));
    const StartChart sr = start_chart(b.plus, CoordinatePatch::trailing(n, m));
    const FlowMatrix flow = flow_matrix(sys, lambda);
    RiccatiOptions ro;
    ro.tol = options.tol;
    ro.swap_threshold = options.swap_threshold;
    RiccatiState left, right;
    try {
        left = integrate_riccati(flow, sl.patch, sl.y_hat, w.left, options.x_star, ro);
    } catch (const numkit::NumericError& e) {
        throw numkit::NumericError(std::string(e.what()) + " [left Riccati flow" + lambda_tag(lambda) + "]");
    }
    try {
        right = integrate_riccati(flow, sr.patch, sr.y_hat, w.right, options.x_star, ro);
    } catch (const numkit::NumericError& e) {
        throw numkit::NumericError(std::string(e.what()) + " [right Riccati flow" + lambda_tag(lambda) + "]");
    }
    const Eigen::MatrixXcd mat =
        hstack(frame_from_chart(left.patch, left.y_hat), frame_from_chart(right.patch, right.y_hat));
    EvansValue v;
    v.lambda = lambda;
    v.value = numkit::det_via_lu(mat) * left.swap_log_det * right.swap_log_det;
    v.backend = Backend::Riccati;
    v.x_star = options.x_star;
    v.K = sys.K;
    return v;
}

namespace {

struct OrthoPair {
    OrthoState left;
    OrthoState right;
};

OrthoPair propagate_orthonormal(const ProjectedSystem& sys, Complex lambda, const EvansOptions& options) {
    const Window w = window(sys, options);
    const int n = sys.dim();
    const int m = sys.half_dim();
    const BoundarySubspaces b = boundary_subspaces(sys, lambda);
    const StartChart sl = start_chart(b.minus, CoordinatePatch::leading(n, m));
    const StartChart sr = start_chart(b.plus, CoordinatePatch::trailing(n, m));
    const FlowMatrix flow = flow_matrix(sys, lambda);
    DruryOjaOptions dopt;
    dopt.tol = options.tol;
    OrthoPair p;
    LogDet s_left, s_right;
    const Eigen::MatrixXcd q_left = polar_orthonormalize(frame_from_chart(sl.patch, sl.y_hat), s_left);
    const Eigen::MatrixXcd q_right = polar_orthonormalize(frame_from_chart(sr.patch, sr.y_hat), s_right);
    try {
        p.left = integrate_drury_oja(flow, q_left, s_left, w.left, options.x_star, dopt);
    } catch (const numkit::NumericError& e) {
        throw numkit::NumericError(std::string(e.what()) + " [left Drury-Oja flow" + lambda_tag(lambda) + "]");
    }
    try {
        p.right = integrate_drury_oja(flow, q_right, s_right, w.right, options.x_star, dopt);
    } catch (const numkit::NumericError& e) {
        throw numkit::NumericError(std::string(e.what()) + " [right Drury-Oja flow" + lambda_tag(lambda) + "]");
    }
    return p;
}

}  // namespace

EvansValue evans_drury_oja(const ProjectedSystem& sys, Complex lambda, const EvansOptions& options) {
    const OrthoPair p = propagate_orthonormal(sys, lambda, options);
    EvansValue v;
    v.lambda = lambda;
    v.value = numkit::det_via_lu(hstack(p.left.q, p.right.q)) * p.left.log_det_r * p.right.log_det_r;
    v.backend = Backend::DruryOja;
    v.x_star = options.x_star;
    v.K = sys.K;
    v.continuous_log = p.left.log_det_r.log_abs + p.right.log_det_r.log_abs;
    v.continuous_arg = p.left.log_det_r.arg + p.right.log_det_r.arg;
    return v;
}

EvansValue evans(const ProjectedSystem& sys, Complex lambda, Backend backend, const EvansOptions& options) {
    return backend == Backend::Riccati ? evans_riccati(sys, lambda, options) : evans_drury_oja(sys, lambda, options);
}

double evans_angle(const ProjectedSystem& sys, Complex lambda, const EvansOptions& options) {
    const OrthoPair p = propagate_orthonormal(sys, lambda, options);
    return subspace_angle(p.left.q, p.right.q);
}

// ---------------------------------------------------------------------------

namespace {

int real_sign(const LogDet& d) { return std::cos(d.arg) >= 0.0 ? 1 : -1; }

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

struct Refiner {
    const RealEvaluator& f;
    const ScanOptions& opt;
    long& evaluations;

    LogDet eval(double x) const {
        ++evaluations;
        return f(x);
    }

    // Root of a sign change on [a, b] with known end values.
    RealZero bisect(double a, double b, const LogDet& fa, const LogDet& fb) const {
        const double ref = std::max(fa.log_abs, fb.log_abs);
        auto g = [&](double x) {
            const LogDet d = eval(x);
            if (d.is_zero()) return 0.0;
            return real_sign(d) * std::exp(d.log_abs - ref);
        };
        const double ga = real_sign(fa) * std::exp(fa.log_abs - ref);
        const double gb = real_sign(fb) * std::exp(fb.log_abs - ref);
        std::uintmax_t iters = 200;
        const auto tol = [this](double lo, double hi) { return std::abs(hi - lo) <= opt.root_tol; };
        const auto r = boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, iters);
        RealZero z;
        z.lambda = 0.5 * (r.first + r.second);
        z.multiplicity = 1;
        z.kind = ZeroKind::SignChange;
        z.log_abs_at_zero = eval(z.lambda).log_abs;
        return z;
    }
};

}  // namespace

ScanResult scan_and_refine(const RealEvaluator& f, double a, double b, int n_samples, const ScanOptions& options) {
    if (!(b > a) || n_samples < 2) throw std::invalid_argument("scan_and_refine: need a < b and two samples");
    ScanResult res;
    res.grid.resize(static_cast<std::size_t>(n_samples));
    res.values.resize(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) res.grid[static_cast<std::size_t>(i)] = a + (b - a) * i / (n_samples - 1);
    parallel_for(n_samples, options.workers, [&](int i) {
        res.values[static_cast<std::size_t>(i)] = f(res.grid[static_cast<std::size_t>(i)]);
    });
    res.evaluations = n_samples;
    const Refiner refine{f, options, res.evaluations};

    std::vector<double> logs;
    for (const LogDet& d : res.values) {
        if (std::isfinite(d.log_abs)) logs.push_back(d.log_abs);
    }
    const double log_median = median(logs);
    const double log_dip = log_median + std::log(options.dip_factor);
    const double log_suspect = log_median + std::log(options.suspect_factor);

    std::vector<int> sign(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        const LogDet& d = res.values[static_cast<std::size_t>(i)];
        sign[static_cast<std::size_t>(i)] = d.is_zero() ? 0 : real_sign(d);
    }
    // A sample landing on a zero: equal signs on both sides mean even multiplicity.
    for (int i = 0; i < n_samples; ++i) {
        if (sign[static_cast<std::size_t>(i)] != 0) continue;
        const int left = i > 0 ? sign[static_cast<std::size_t>(i - 1)] : 0;
        const int right = i + 1 < n_samples ? sign[static_cast<std::size_t>(i + 1)] : 0;
        const bool even = left != 0 && left == right;
        res.zeros.push_back({res.grid[static_cast<std::size_t>(i)], even ? 2 : 1,
                             even ? ZeroKind::DoubleDip : ZeroKind::SignChange,
                             res.values[static_cast<std::size_t>(i)].log_abs});
    }
    for (int i = 0; i + 1 < n_samples; ++i) {
        const int s0 = sign[static_cast<std::size_t>(i)], s1 = sign[static_cast<std::size_t>(i + 1)];
        if (s0 != 0 && s1 != 0 && s0 != s1) {
            res.zeros.push_back(refine.bisect(res.grid[static_cast<std::size_t>(i)],
                                              res.grid[static_cast<std::size_t>(i + 1)],
                                              res.values[static_cast<std::size_t>(i)],
                                              res.values[static_cast<std::size_t>(i + 1)]));
        }
    }
    // Dips: sample minima of |D| with no sign change on either side.
    for (int i = 1; i + 1 < n_samples; ++i) {
        const auto& v = res.values;
        const double l0 = v[static_cast<std::size_t>(i - 1)].log_abs, l1 = v[static_cast<std::size_t>(i)].log_abs,
                     l2 = v[static_cast<std::size_t>(i + 1)].log_abs;
        const int s = sign[static_cast<std::size_t>(i)];
        if (!(l1 < l0 && l1 < l2) || s == 0 || sign[static_cast<std::size_t>(i - 1)] != s ||
            sign[static_cast<std::size_t>(i + 1)] != s) {
            continue;
        }
        const double lo = res.grid[static_cast<std::size_t>(i - 1)], hi = res.grid[static_cast<std::size_t>(i + 1)];
        double flip_x = std::numeric_limits<double>::quiet_NaN();
        LogDet flip_value;
        auto g = [&](double x) {
            const LogDet d = refine.eval(x);
            if (d.is_zero()) return -1e300;
            if (real_sign(d) != s && std::isnan(flip_x)) {
                flip_x = x;
                flip_value = d;
            }
            return d.log_abs;
        };
        std::uintmax_t iters = 100;
        const auto best = boost::math::tools::brent_find_minima(g, lo, hi, 40, iters);
        if (!std::isnan(flip_x)) {
            res.zeros.push_back(refine.bisect(lo, flip_x, v[static_cast<std::size_t>(i - 1)], flip_value));
            res.zeros.push_back(refine.bisect(flip_x, hi, flip_value, v[static_cast<std::size_t>(i + 1)]));
        } else if (best.second < log_dip) {
            res.zeros.push_back({best.first, 2, ZeroKind::DoubleDip, best.second});
        } else if (best.second < log_suspect) {
            res.zeros.push_back({best.first, 2, ZeroKind::UnresolvedDip, best.second});
        }
    }
    std::sort(res.zeros.begin(), res.zeros.end(),
              [](const RealZero& x, const RealZero& y) { return x.lambda < y.lambda; });
    return res;
}

ScanResult scan_and_refine(const ProjectedSystem& sys, double a, double b, int n_samples, Backend backend,
                           const EvansOptions& evans_options, const ScanOptions& options) {
    const RealEvaluator f = [&](double l) { return evans(sys, Complex(l, 0.0), backend, evans_options).value; };
    return scan_and_refine(f, a, b, n_samples, options);
}

// ---------------------------------------------------------------------------

std::vector<DispersionPoint> dispersion_relation(const ModelSpec& model, const FrontProfile1D& planar,
                                                 const std::vector<double>& wavenumbers,
                                                 const DispersionOptions& options) {
    const ProjectedSystem base = build_projected_system(model, planar, 0, 1.0);
    std::vector<DispersionPoint> out;
    out.reserve(wavenumbers.size());
    std::vector<double> history_k, history_l;
    for (double kappa : wavenumbers) {
        const ProjectedSystem sys = single_mode_system(base, kappa);
        const auto f = [&](double l) { return evans_riccati(sys, Complex(l, 0.0), options.evans).value; };
        double seed = 0.0;
        if (history_l.size() >= 2) {
            const std::size_t j = history_l.size() - 1;
            const double slope = (history_l[j] - history_l[j - 1]) / (history_k[j] - history_k[j - 1]);
            seed = history_l[j] + slope * (kappa - history_k[j]);
        } else if (history_l.size() == 1) {
            seed = history_l[0];
        }
        DispersionPoint p;
        p.wavenumber = kappa;
        const LogDet f0 = f(seed);
        long evals = 0;
        ScanOptions so;
        const Refiner refine{f, so, evals};
        for (double w = options.initial_width; w <= options.max_width && !p.found; w *= 2.0) {
            const LogDet fl = f(seed - w), fr = f(seed + w);
            std::vector<RealZero> cands;
            if (real_sign(fl) != real_sign(f0)) cands.push_back(refine.bisect(seed - w, seed, fl, f0));
            if (real_sign(fr) != real_sign(f0)) cands.push_back(refine.bisect(seed, seed + w, f0, fr));
            if (!cands.empty()) {
                const auto best = std::min_element(cands.begin(), cands.end(), [&](const RealZero& a, const RealZero& b) {
                    return std::abs(a.lambda - seed) < std::abs(b.lambda - seed);
                });
                p.growth = best->lambda;
                p.found = true;
            }
        }
        if (p.found) {
            history_k.push_back(kappa);
            history_l.push_back(p.growth);
        }
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------

Complex ContourSegment::at(double t) const {
    if (kind == Kind::Line) return a + t * (b - a);
    const double th = theta0 + t * (theta1 - theta0);
    return center + radius * Complex(std::cos(th), std::sin(th));
}

ContourSegment ContourSegment::line(Complex a, Complex b) {
    ContourSegment s;
    s.kind = Kind::Line;
    s.a = a;
    s.b = b;
    return s;
}

ContourSegment ContourSegment::arc(Complex center, double radius, double theta0, double theta1) {
    ContourSegment s;
    s.kind = Kind::Arc;
    s.center = center;
    s.radius = radius;
    s.theta0 = theta0;
    s.theta1 = theta1;
    return s;
}

ContourSpec sectorial_contour(double re_cap, double sector_cap, double r0) {
    if (!(re_cap > r0) || !(sector_cap > re_cap) || !(r0 > 0.0)) {
        throw std::invalid_argument("sectorial_contour: need 0 < r0 < re_cap < sector_cap");
    }
    ContourSpec c;
    c.mirrored = true;
    c.segments.push_back(ContourSegment::line({re_cap, 0.0}, {re_cap, sector_cap - re_cap}));
    c.segments.push_back(ContourSegment::line({re_cap, sector_cap - re_cap}, {0.0, sector_cap}));
    c.segments.push_back(ContourSegment::line({0.0, sector_cap}, {0.0, r0}));
    c.segments.push_back(ContourSegment::arc({0.0, 0.0}, r0, 0.5 * kPi, 0.0));
    return c;
}

ContourSpec circle_contour(Complex center, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("circle_contour: radius must be positive");
    ContourSpec c;
    c.mirrored = center.imag() == 0.0;
    c.segments.push_back(ContourSegment::arc(center, radius, 0.0, c.mirrored ? kPi : 2.0 * kPi));
    return c;
}

WindingResult winding_number(const ComplexEvaluator& f, const ContourSpec& contour, int workers) {
    if (contour.segments.empty()) throw std::invalid_argument("winding_number: empty contour");
    const int pieces = std::max(1, contour.initial_pieces);
    struct Node {
        Complex lambda;
        PhaseValue value;
    };
    // Initial uniform subdivision of every segment, evaluated concurrently.
    std::vector<std::vector<Node>> coarse(contour.segments.size());
    std::vector<std::pair<int, int>> jobs;
    for (std::size_t s = 0; s < contour.segments.size(); ++s) {
        coarse[s].resize(static_cast<std::size_t>(pieces) + 1);
        for (int p = 0; p <= pieces; ++p) {
            coarse[s][static_cast<std::size_t>(p)].lambda = contour.segments[s].at(static_cast<double>(p) / pieces);
            jobs.emplace_back(static_cast<int>(s), p);
        }
    }
    parallel_for(static_cast<int>(jobs.size()), workers, [&](int j) {
        Node& nd = coarse[static_cast<std::size_t>(jobs[static_cast<std::size_t>(j)].first)]
                         [static_cast<std::size_t>(jobs[static_cast<std::size_t>(j)].second)];
        nd.value = f(nd.lambda);
    });
    WindingResult res;
    res.evaluations = static_cast<long>(jobs.size());
    double total = 0.0;
    auto check = [](const Node& nd) {
        if (nd.value.value.is_zero() || !std::isfinite(nd.value.value.log_abs)) {
            throw UnresolvedWindingError("winding_number: the contour passes through a zero" + lambda_tag(nd.lambda));
        }
    };
    res.trace.push_back({coarse[0][0].lambda, coarse[0][0].value.value.arg});
    double running = coarse[0][0].value.value.arg;
    auto core_step = [](const Node& a, const Node& b) {
        const double lift = b.value.continuous_arg - a.value.continuous_arg;
        return wrap_angle(b.value.value.arg - a.value.value.arg - lift);
    };
    auto modulus_step = [](const Node& a, const Node& b) {
        return std::abs((b.value.value.log_abs - b.value.continuous_log) -
                        (a.value.value.log_abs - a.value.continuous_log));
    };
    auto accept = [&](const Node& a, const Node& b, double core) {
        const double d = core + (b.value.continuous_arg - a.value.continuous_arg);
        total += d;
        running += d;
        res.trace.push_back({b.lambda, running});
    };
    // A piece is accepted once its midpoint confirms it: both halves change the
    // argument by at most max_arg_change and add up to the whole-piece change.
    std::function<void(const ContourSegment&, double, double, const Node&, const Node&, int)> refine =
        [&](const ContourSegment& seg, double t0, double t1, const Node& a, const Node& b, int depth) {
            check(b);
            const double whole = core_step(a, b);
            if (depth >= contour.max_depth) {
                if (std::abs(whole) <= contour.max_arg_change) {
                    accept(a, b, whole);
                    return;
                }
                throw UnresolvedWindingError("winding_number: argument change unresolved after " +
                                             std::to_string(contour.max_depth) + " bisections" + lambda_tag(a.lambda));
            }
            const double tm = 0.5 * (t0 + t1);
            Node mid{seg.at(tm), {}};
            mid.value = f(mid.lambda);
            ++res.evaluations;
            check(mid);
            const double first = core_step(a, mid);
            const double second = core_step(mid, b);
            if (std::abs(whole) <= contour.max_arg_change && std::abs(first) <= contour.max_arg_change &&
                std::abs(second) <= contour.max_arg_change && std::abs(first + second - whole) < kPi &&
                modulus_step(a, mid) <= contour.max_log_change && modulus_step(mid, b) <= contour.max_log_change) {
                accept(a, mid, first);
                accept(mid, b, second);
                return;
            }
            refine(seg, t0, tm, a, mid, depth + 1);
            refine(seg, tm, t1, mid, b, depth + 1);
        };
    check(coarse[0][0]);
    for (std::size_t s = 0; s < contour.segments.size(); ++s) {
        for (int p = 0; p < pieces; ++p) {
            refine(contour.segments[s], static_cast<double>(p) / pieces, static_cast<double>(p + 1) / pieces,
                   coarse[s][static_cast<std::size_t>(p)], coarse[s][static_cast<std::size_t>(p) + 1], 0);
        }
    }
    if (contour.mirrored) total *= 2.0;
    res.raw = total / (2.0 * kPi);
    res.count = static_cast<int>(std::lround(res.raw));
    if (std::abs(res.raw - res.count) > 0.05) {
        throw UnresolvedWindingError("winding_number: non-integer argument change " + std::to_string(res.raw));
    }
    return res;
}

WindingResult winding_number(const ProjectedSystem& sys, const ContourSpec& contour, Backend backend,
                             const EvansOptions& options, int workers) {
    const ComplexEvaluator f = [&](Complex l) {
        const EvansValue v = evans(sys, l, backend, options);
        return PhaseValue(v.value, v.continuous_log, v.continuous_arg);
    };
    return winding_number(f, contour, workers);
}

// ---------------------------------------------------------------------------

namespace {

double spectral_norm(const Eigen::MatrixXd& df) { return Eigen::JacobiSVD<Eigen::MatrixXd>(df).singularValues()(0); }

SectorialBounds bounds_from(double df_norm, double c, const ModelSpec& model) {
    SectorialBounds b;
    b.df_norm = df_norm;
    b.kappa = model.diffusion.minCoeff();
    b.re_cap = df_norm;
    b.sector_cap = c * c / (4.0 * b.kappa) + 2.0 * df_norm;
    return b;
}

}  // namespace

SectorialBounds sectorial_bounds(const ModelSpec& model, const FrontProfile2D& front) {
    const int n = front.n_fields;
    double norm = 0.0;
    Eigen::VectorXd u(n);
    for (int i = 0; i < front.grid.nx; ++i) {
        for (int j = 0; j < front.grid.ny; ++j) {
            for (int f = 0; f < n; ++f) u(f) = front.at(f, i, j);
            norm = std::max(norm, spectral_norm(model.eval_jacobian(u)));
        }
    }
    return bounds_from(norm, front.speed, model);
}

SectorialBounds sectorial_bounds(const ModelSpec& model, const FrontProfile1D& front) {
    double norm = 0.0;
    for (int i = 0; i < front.n_x; ++i) {
        norm = std::max(norm, spectral_norm(model.eval_jacobian(front.fields.row(i).transpose())));
    }
    return bounds_from(norm, front.speed, model);
}

Complex large_lambda_asymptote(double delta, int K, Complex lambda) {
    const Complex base = std::polar(1.0 / std::sqrt(delta), std::arg(lambda));
    return 2.0 * std::pow(base, 2 * K + 1);
}

Complex mode_product_asymptote(const ProjectedSystem& sys, Complex lambda) {
    const double phi = std::arg(lambda);
    Complex per_mode = 1.0;
    for (int f = 0; f < sys.n_fields; ++f) per_mode *= 2.0 * std::polar(1.0 / std::sqrt(sys.diffusion(f)), 0.5 * phi);
    return std::pow(per_mode, sys.modes_count());
}

namespace {

Eigen::MatrixXcd far_mode_block(const ProjectedSystem& sys, int side, Complex lambda) {
    return far_field_A(sys, side, lambda);
}

// Integral from `from` to `to` of the sum of the unstable (or stable) spatial
// eigenvalues of the frozen-coefficient matrix, by composite Simpson. This is
// the exponential growth of the propagated frame to leading WKB order.
Complex accumulated_exponent(const ProjectedSystem& sys, Complex lambda, double from, double to, bool unstable) {
    const int nf = sys.n_fields;
    const int intervals = 2 * std::max(200, static_cast<int>(std::ceil(std::abs(to - from) * 20.0)));
    const double h = (to - from) / intervals;
    Complex sum = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const numkit::EigSplit e = numkit::eig_split_by_count(assemble_A(sys, from + i * h, lambda), nf, 0.0);
        const Complex s = unstable ? e.unstable_values.sum() : e.stable_values.sum();
        const double weight = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        sum += weight * s;
    }
    return sum * h / 3.0;
}

}  // namespace

Complex normalized_mode_product(const ProjectedSystem& planar, Complex lambda, const EvansOptions& options) {
    if (planar.mode_reach != 0) throw std::invalid_argument("normalized_mode_product: the system is not planar");
    const Window w = window(planar, options);
    const int nf = planar.n_fields;
    LogDet total;
    for (int k = -planar.K; k <= planar.K; ++k) {
        const ProjectedSystem sys = single_mode_system(planar, k);
        const numkit::EigSplit left = numkit::eig_split_by_count(far_mode_block(sys, -1, lambda), nf);
        const numkit::EigSplit right = numkit::eig_split_by_count(far_mode_block(sys, 1, lambda), nf);
        const FlowMatrix flow = flow_matrix(sys, lambda);
        DruryOjaOptions dopt;
        dopt.tol = options.tol;
        LogDet s_left, s_right;
        const Eigen::MatrixXcd ql = polar_orthonormalize(left.unstable, s_left);
        const Eigen::MatrixXcd qr = polar_orthonormalize(right.stable, s_right);
        const OrthoState ol = integrate_drury_oja(flow, ql, s_left, w.left, options.x_star, dopt);
        const OrthoState orr = integrate_drury_oja(flow, qr, s_right, w.right, options.x_star, dopt);
        LogDet d = numkit::det_via_lu(hstack(ol.q, orr.q)) * ol.log_det_r * orr.log_det_r;
        const Complex expo = -accumulated_exponent(sys, lambda, w.left, options.x_star, true) -
                             accumulated_exponent(sys, lambda, w.right, options.x_star, false);
        d *= LogDet{expo.real(), expo.imag()};
        const LogDet ul = numkit::det_via_lu(left.unstable.topRows(nf));
        const LogDet ur = numkit::det_via_lu(-right.stable.topRows(nf));
        d *= LogDet{-ul.log_abs, -ul.arg};
        d *= LogDet{-ur.log_abs, -ur.arg};
        d *= LogDet{-0.5 * nf * std::log(std::abs(lambda)), 0.0};
        total *= d;
    }
    return total.value();
}

// ---------------------------------------------------------------------------

FactorizationReport factorization_check(const ProjectedSystem& planar, Complex lambda, const EvansOptions& options) {
    if (planar.mode_reach != 0) throw std::invalid_argument("factorization_check: the system is not planar");
    const Window w = window(planar, options);
    const int n = planar.dim();
    const int m = planar.half_dim();
    const InitialCharts ic = initial_charts(planar, lambda);
    const FlowMatrix flow = flow_matrix(planar, lambda);
    RiccatiOptions ro;
    ro.tol = options.tol;
    ro.swap_threshold = options.swap_threshold;
    ro.record_mesh = true;
    const RiccatiState left =
        integrate_riccati(flow, CoordinatePatch::leading(n, m), ic.y_minus, w.left, options.x_star, ro);
    const RiccatiState right =
        integrate_riccati(flow, CoordinatePatch::trailing(n, m), ic.y_plus, w.right, options.x_star, ro);
    if (left.swaps > 0 || right.swaps > 0) {
        throw numkit::NumericError("factorization_check: patch swaps occurred; the mesh replay needs fixed charts");
    }
    FactorizationReport rep;
    rep.full = numkit::det_via_lu(hstack(frame_from_chart(left.patch, left.y_hat),
                                         frame_from_chart(right.patch, right.y_hat)));
    const int nf = planar.n_fields;
    for (int k = -planar.K; k <= planar.K; ++k) {
        const ProjectedSystem sys = single_mode_system(planar, k);
        const InitialCharts ick = initial_charts(sys, lambda);
        const FlowMatrix fk = flow_matrix(sys, lambda);
        const CoordinatePatch pl = CoordinatePatch::leading(2 * nf, nf);
        const CoordinatePatch pr = CoordinatePatch::trailing(2 * nf, nf);
        const Eigen::MatrixXcd yl = numkit::integrate_on_mesh(riccati_flow_rhs(fk, pl), left.mesh, ick.y_minus);
        const Eigen::MatrixXcd yr = numkit::integrate_on_mesh(riccati_flow_rhs(fk, pr), right.mesh, ick.y_plus);
        rep.product *= numkit::det_via_lu(hstack(frame_from_chart(pl, yl), frame_from_chart(pr, yr)));
    }
    rep.defect = std::abs(Complex(rep.full.log_abs - rep.product.log_abs, wrap_angle(rep.full.arg - rep.product.arg)));
    return rep;
}

// ---------------------------------------------------------------------------

EigsResult direct_projection_eigs(const ModelSpec& model, const FrontProfile2D& front, double sigma, int n_eigs,
                                  const EigsOptions& options) {
    front.validate(model, 0.0);
    if (n_eigs < 1) throw std::invalid_argument("direct_projection_eigs: n_eigs must be positive");
    Eigen::SparseMatrix<double> a = detail::linearized_operator(model, front.grid, front.values, front.speed);
    const int size = static_cast<int>(a.rows());
    Eigen::SparseMatrix<double> shift(size, size);
    shift.setIdentity();
    a -= sigma * shift;
    detail::SparseLu lu;
    if (!lu.factor(a)) {
        throw ShiftError("direct_projection_eigs: L - sigma I is singular at sigma = " + std::to_string(sigma) +
                         "; choose a different shift");
    }
    std::mt19937 rng(options.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> start(static_cast<std::size_t>(size));
    for (double& s : start) s = dist(rng);
    const int ncv = std::min(size, options.ncv > 0 ? options.ncv : std::max(2 * n_eigs + 1, 80));
    const auto op = [&](const double* x, double* y) {
        Eigen::Map<Eigen::VectorXd>(y, size) = lu.solve(Eigen::Map<const Eigen::VectorXd>(x, size));
    };
    const detail::ArpackOutcome o = detail::arpack_largest(size, n_eigs, ncv, options.tol, options.max_restarts, op,
                                                           std::move(start));
    EigsResult r;
    r.converged = o.converged;
    r.operator_applications = o.applications;
    r.solver = std::string("arpack+") + lu.backend();
    for (const Complex& theta : o.ritz) r.eigenvalues.push_back(sigma + 1.0 / theta);
    std::sort(r.eigenvalues.begin(), r.eigenvalues.end(), [sigma](Complex x, Complex y) {
        const double dx = std::abs(x - sigma), dy = std::abs(y - sigma);
        if (dx != dy) return dx < dy;
        return x.imag() < y.imag();
    });
    if (static_cast<int>(r.eigenvalues.size()) > n_eigs) r.eigenvalues.resize(static_cast<std::size_t>(n_eigs));
    return r;
}

}  // namespace frontstab
