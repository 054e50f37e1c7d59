#pragma once

// Evans function of a projected front: evaluation by Riccati charts or the
// Drury-Oja flow, real-axis zero location, argument-principle counts,
// dispersion curves of planar fronts, a priori spectral bounds and the direct
// finite-difference eigensolver used as a cross-check.

#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "frontstab/front1d.hpp"
#include "frontstab/front2d.hpp"
#include "frontstab/grassmann.hpp"
#include "frontstab/model.hpp"
#include "frontstab/numkit.hpp"
#include "frontstab/projection.hpp"

namespace frontstab {

enum class Backend { Riccati, DruryOja };

const char* backend_name(Backend b);
Backend parse_backend(const std::string& s);

struct EvansOptions {
    double x_star = 0.0;
    /// Integration limits; NaN selects the ends of the projected system.
    double x_left = std::numeric_limits<double>::quiet_NaN();
    double x_right = std::numeric_limits<double>::quiet_NaN();
    numkit::ToleranceSpec tol{1e-8, 1e-6};
    double swap_threshold = 1e3;
};

struct EvansValue {
    Complex lambda;
    LogDet value;
    Backend backend = Backend::Riccati;
    double x_star = 0.0;
    int K = 0;
    /// Part of log D that is a single-valued continuous function of lambda (the
    /// accumulated log det R for Drury-Oja); its argument cannot wind.
    double continuous_log = 0.0;
    double continuous_arg = 0.0;

    [[nodiscard]] Complex plain() const { return value.value(); }
};

/// Chart data at the far ends: y_minus = P U^{-1} of the unstable subspace at
/// -inf (patch rows 0..m-1) and y_plus = U P^{-1} of the stable subspace at +inf.
struct InitialCharts {
    Eigen::MatrixXcd y_minus;
    Eigen::MatrixXcd y_plus;
};
InitialCharts initial_charts(const ProjectedSystem& sys, Complex lambda);

/// det [Y^-(x*), Y^+(x*)] with both frames in chart form (identity on their
/// patch), times the recorded patch-swap determinants.
EvansValue evans_riccati(const ProjectedSystem& sys, Complex lambda, const EvansOptions& options = {});

/// det(Q^-, Q^+) det R^- det R^+ with frames started from the chart bases.
EvansValue evans_drury_oja(const ProjectedSystem& sys, Complex lambda, const EvansOptions& options = {});

EvansValue evans(const ProjectedSystem& sys, Complex lambda, Backend backend, const EvansOptions& options = {});

/// Angle between the propagated unstable and stable subspaces at x*.
double evans_angle(const ProjectedSystem& sys, Complex lambda, const EvansOptions& options = {});

// ---------------------------------------------------------------------------
// Zeros on the real axis

enum class ZeroKind { SignChange, DoubleDip, UnresolvedDip };

struct RealZero {
    double lambda = 0.0;
    int multiplicity = 1;
    ZeroKind kind = ZeroKind::SignChange;
    double log_abs_at_zero = 0.0;  // log |D| at the refined point
};

struct ScanOptions {
    double root_tol = 1e-9;
    double dip_factor = 1e-3;  // double zero when min |D| < dip_factor * median |D|
    double suspect_factor = 1e-1;
    int workers = 1;
};

struct ScanResult {
    std::vector<double> grid;
    std::vector<LogDet> values;
    std::vector<RealZero> zeros;  // sorted by lambda
    long evaluations = 0;
};

using RealEvaluator = std::function<LogDet(double)>;

/// Samples a function that is real on [a, b] (up to rounding), brackets sign
/// changes and refines them, and refines non-sign-changing dips of |D| by
/// minimisation, splitting them when a sign change is uncovered.
ScanResult scan_and_refine(const RealEvaluator& f, double a, double b, int n_samples, const ScanOptions& options = {});

ScanResult scan_and_refine(const ProjectedSystem& sys, double a, double b, int n_samples, Backend backend,
                           const EvansOptions& evans_options = {}, const ScanOptions& options = {});

// ---------------------------------------------------------------------------
// Dispersion relation of a planar front

struct DispersionPoint {
    double wavenumber = 0.0;
    double growth = std::numeric_limits<double>::quiet_NaN();
    bool found = false;
};

struct DispersionOptions {
    EvansOptions evans{};  // x_star and the integration window around the planar front
    double initial_width = 2e-4;
    double max_width = 0.05;
};

/// Follows the real Evans zero of the single-mode problem through the given
/// wavenumbers, starting from the translation eigenvalue at wavenumber 0.
std::vector<DispersionPoint> dispersion_relation(const ModelSpec& model, const FrontProfile1D& planar,
                                                 const std::vector<double>& wavenumbers,
                                                 const DispersionOptions& options = {});

// ---------------------------------------------------------------------------
// Argument principle

struct ContourSegment {
    enum class Kind { Line, Arc } kind = Kind::Line;
    Complex a, b;        // line end points
    Complex center;      // arc centre
    double radius = 0.0;
    double theta0 = 0.0, theta1 = 0.0;

    [[nodiscard]] Complex at(double t) const;
    static ContourSegment line(Complex a, Complex b);
    static ContourSegment arc(Complex center, double radius, double theta0, double theta1);
};

/// A closed contour, or (mirrored) its upper half running between two real
/// points; the lower half then follows from D(conj l) = conj D(l).
struct ContourSpec {
    std::vector<ContourSegment> segments;
    bool mirrored = false;
    double max_arg_change = 1.5707963267948966;
    /// Also bounds the change of log |D| per piece; by analyticity a fast modulus
    /// change signals a fast argument change that the wrapped difference may alias.
    double max_log_change = 1.5707963267948966;
    int max_depth = 20;
    int initial_pieces = 8;
};

/// Boundary of  0 <= Re l <= re_cap,  Re l + |Im l| <= sector_cap  with a
/// semicircle of radius r0 removing the origin, counter-clockwise.
ContourSpec sectorial_contour(double re_cap, double sector_cap, double r0 = 1e-4);
ContourSpec circle_contour(Complex center, double radius);

struct ArgumentSample {
    Complex lambda;
    double arg = 0.0;  // unwrapped along the traversal
};

struct WindingResult {
    int count = 0;
    double raw = 0.0;  // total argument change / 2 pi
    std::vector<ArgumentSample> trace;
    long evaluations = 0;
};

class UnresolvedWindingError : public numkit::NumericError {
public:
    using numkit::NumericError::NumericError;
};

/// A value together with the part of its logarithm known to be continuous in
/// lambda; only the remainder is unwrapped between contour samples.
struct PhaseValue {
    LogDet value;
    double continuous_log = 0.0;
    double continuous_arg = 0.0;

    PhaseValue() = default;
    PhaseValue(LogDet v, double lift_log = 0.0, double lift_arg = 0.0)  // NOLINT: implicit from LogDet
        : value(v), continuous_log(lift_log), continuous_arg(lift_arg) {}
};

using ComplexEvaluator = std::function<PhaseValue(Complex)>;

WindingResult winding_number(const ComplexEvaluator& f, const ContourSpec& contour, int workers = 1);
WindingResult winding_number(const ProjectedSystem& sys, const ContourSpec& contour, Backend backend,
                             const EvansOptions& options = {}, int workers = 1);

// ---------------------------------------------------------------------------
// Bounds and asymptotics

struct SectorialBounds {
    double re_cap = 0.0;      // Re l <= ||DF||
    double sector_cap = 0.0;  // Re l + |Im l| <= c^2 / (4 kappa) + 2 ||DF||
    double kappa = 0.0;       // smallest diffusion coefficient
    double df_norm = 0.0;     // max over grid nodes of the spectral norm of DF
};

SectorialBounds sectorial_bounds(const ModelSpec& model, const FrontProfile2D& front);
SectorialBounds sectorial_bounds(const ModelSpec& model, const FrontProfile1D& front);

/// 2 (delta^{-1/2} e^{i arg l})^{2K+1}.
Complex large_lambda_asymptote(double delta, int K, Complex lambda);

/// Limit of the normalised per-mode product below: prod_k det(2 B~^{1/2}) with
/// B~ = e^{i arg l} B^{-1}, i.e. (2^N det B~^{1/2})^{2K+1}.
Complex mode_product_asymptote(const ProjectedSystem& sys, Complex lambda);

/// Product over modes of the single-mode Evans functions of a planar system
/// with large-|l| normalisation: columns (e, mu e) at -inf and (-e, -mu e)
/// at +inf, the accumulated exponential exp(int sum mu_j(x) dx) of the local
/// spatial eigenvalues divided out and the derivative rows scaled by |l|^{-1/2}.
Complex normalized_mode_product(const ProjectedSystem& planar, Complex lambda, const EvansOptions& options = {});

// ---------------------------------------------------------------------------
// Cross-checks

struct FactorizationReport {
    double defect = 0.0;  // |log D - sum_k log D_k| with the phase reduced mod 2 pi
    LogDet full;
    LogDet product;
};

/// Replays every single-mode Riccati flow on the mesh of the full planar
/// computation, so both sides share identical discretisations.
FactorizationReport factorization_check(const ProjectedSystem& planar, Complex lambda,
                                        const EvansOptions& options = {});

struct EigsOptions {
    int ncv = 0;  // Krylov basis size, 0 selects max(2 n_eigs + 1, 80)
    double tol = 1e-12;
    int max_restarts = 3000;
    unsigned seed = 20240611;  // start vector
};

class ShiftError : public numkit::NumericError {
public:
    using numkit::NumericError::NumericError;
};

struct EigsResult {
    std::vector<Complex> eigenvalues;  // sorted by distance to sigma
    int converged = 0;
    int operator_applications = 0;
    std::string solver;
};

/// Eigenvalues nearest sigma of the finite-difference operator
/// B Lap + c d_x + DF(U) on the front's grid, by ARPACK in shift-invert mode.
EigsResult direct_projection_eigs(const ModelSpec& model, const FrontProfile2D& front, double sigma, int n_eigs,
                                  const EigsOptions& options = {});

}  // namespace frontstab
