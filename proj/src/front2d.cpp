#include "frontstab/front2d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "fd_problem.hpp"
#include "frontstab/spline.hpp"

namespace frontstab {

void FrontProfile2D::validate(const ModelSpec& model, double residual_tol) const {
    grid.validate();
    if (n_fields != model.n_fields ||
        values.size() != static_cast<Eigen::Index>(grid.nodes()) * n_fields) {
        throw std::invalid_argument("FrontProfile2D: field array does not match grid and model");
    }
    if (!values.allFinite()) throw std::invalid_argument("FrontProfile2D: non-finite field values");
    for (int i : {0, grid.nx - 1}) {
        for (int f = 0; f < n_fields; ++f) {
            double lo = at(f, i, 0), hi = lo;
            for (int j = 1; j < grid.ny; ++j) {
                lo = std::min(lo, at(f, i, j));
                hi = std::max(hi, at(f, i, j));
            }
            if (hi - lo > 1e-4) {
                throw std::invalid_argument("FrontProfile2D: boundary column is not y-independent");
            }
        }
    }
    if (residual_tol > 0.0) {
        const double r = stationary_residual(model, *this);
        if (!(r < residual_tol)) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "FrontProfile2D: stationary residual %.3e exceeds tolerance %.3e", r,
                          residual_tol);
            throw std::invalid_argument(buf);
        }
    }
}

double stationary_residual(const ModelSpec& model, const FrontProfile2D& front) {
    return detail::stationary_residual_inf(model, front.grid, front.values, front.speed);
}

double transverse_variation(const FrontProfile2D& front) {
    return detail::transverse_variation(front.grid, front.n_fields, front.values);
}

FrontProfile2D sweep_planar(const ModelSpec& model, const FrontProfile1D& planar, const FieldGrid& grid,
                            double amplitude, int mode) {
    grid.validate();
    const int n = model.n_fields;
    if (planar.n_fields() != n) throw std::invalid_argument("sweep_planar: field count mismatch");
    std::vector<double> nodes(static_cast<std::size_t>(planar.n_x) * n);
    for (int i = 0; i < planar.n_x; ++i)
        for (int f = 0; f < n; ++f) nodes[static_cast<std::size_t>(i) * n + f] = planar.fields(i, f);
    const UniformSplineBundle<double> spline(planar.x_min, planar.h(), planar.n_x, n, std::move(nodes));

    const bool same_grid = amplitude == 0.0 && planar.n_x == grid.nx && planar.x_order == grid.x_order &&
                           std::abs(planar.x_min - grid.x_min) < 1e-12 &&
                           std::abs(planar.x_max - grid.x_max) < 1e-12;
    FrontProfile2D out;
    out.grid = grid;
    out.n_fields = n;
    out.values.resize(static_cast<Eigen::Index>(grid.nodes()) * n);
    out.speed = planar.speed;
    out.delta = planar.delta;
    out.model_name = planar.model_name;
    out.provenance = "planar";
    std::vector<double> tmp(static_cast<std::size_t>(n));
    for (int j = 0; j < grid.ny; ++j) {
        const double shift =
            amplitude * std::cos(2.0 * std::numbers::pi * mode * grid.y(j) / grid.period);
        for (int i = 0; i < grid.nx; ++i) {
            if (same_grid) {
                for (int f = 0; f < n; ++f) tmp[static_cast<std::size_t>(f)] = planar.fields(i, f);
            } else {
                const double xs = grid.x(i) - shift;
                if (xs <= planar.x_min) {
                    for (int f = 0; f < n; ++f) tmp[static_cast<std::size_t>(f)] = model.left_state(f);
                } else if (xs >= planar.x_max) {
                    for (int f = 0; f < n; ++f) tmp[static_cast<std::size_t>(f)] = model.right_state(f);
                } else {
                    spline.eval(xs, tmp.data());
                }
            }
            if (i == 0) {
                for (int f = 0; f < n; ++f) tmp[static_cast<std::size_t>(f)] = model.left_state(f);
            } else if (i == grid.nx - 1) {
                for (int f = 0; f < n; ++f) tmp[static_cast<std::size_t>(f)] = model.right_state(f);
            }
            for (int f = 0; f < n; ++f) out.values(grid.index(f, i, j)) = tmp[static_cast<std::size_t>(f)];
        }
    }
    return out;
}

FreezeState freeze_evolve(const ModelSpec& model, const FrontProfile2D& initial, const FreezeOptions& options) {
    if (!(options.dt > 0.0) || !(options.t_end >= 0.0)) {
        throw std::invalid_argument("freeze_evolve: dt must be positive and t_end non-negative");
    }
    initial.validate(model, 0.0);
    FreezeState st;
    st.current = initial;
    st.current.provenance = "frozen";
    st.template_values = initial.values;
    st.zeta = initial.speed;
    detail::ImexFreezer stepper(model, initial.grid, initial.values, options.dt);

    const long steps = static_cast<long>(std::ceil(options.t_end / options.dt - 1e-12));
    const int stride = std::max(1, options.record_every);
    Eigen::VectorXd previous;
    for (long s = 0; s < steps; ++s) {
        previous = st.current.values;
        st.zeta = stepper.step(st.current.values);
        st.t += options.dt;
        if (!std::isfinite(st.zeta) || !st.current.values.allFinite()) {
            throw RunawayError("freeze_evolve: non-finite state", st.t);
        }
        if (options.c_planar > 0.0 && std::abs(st.zeta) > 10.0 * options.c_planar) {
            throw RunawayError("freeze_evolve: frame speed diverged", st.t);
        }
        const double rate = (st.current.values - previous).cwiseAbs().maxCoeff() / options.dt;
        const bool last = s + 1 == steps;
        const bool steady = options.steady_tol > 0.0 && rate < options.steady_tol;
        if ((s + 1) % stride == 0 || last || steady) {
            st.history.push_back({st.t, st.zeta, transverse_variation(st.current), rate});
        }
        if (steady) break;
    }
    st.current.speed = st.zeta;
    return st;
}

FrontProfile2D newton_refine(const ModelSpec& model, const FrontProfile2D& guess, const NewtonOptions& options) {
    guess.validate(model, 0.0);
    const double tv = transverse_variation(guess);
    const bool pin_y = guess.grid.ny >= 3 && tv > options.pin_y_threshold;
    const detail::StationaryProblem problem(model, guess.grid, guess.values, pin_y);
    const detail::NewtonOutcome out =
        detail::newton_stationary(problem, guess.values, guess.speed, options.tol, options.max_iterations);
    if (!out.converged) {
        throw NewtonError("newton_refine: no convergence, last residual " +
                              std::to_string(out.residual_history.back()),
                          out.residual_history);
    }
    FrontProfile2D res = guess;
    res.values = out.values;
    res.speed = out.theta;
    if (out.iterations > 0) res.provenance = "newton";
    return res;
}

FrontProfile2D continue_in_delta(const FrontProfile2D& start, double target_delta, int steps,
                                 const NewtonOptions& options) {
    if (steps < 1) throw std::invalid_argument("continue_in_delta: steps must be positive");
    if (target_delta == start.delta) return start;
    const double origin = start.delta;
    FrontProfile2D current = start;
    double step = (target_delta - origin) / steps;
    while (current.delta != target_delta) {
        double next = current.delta + step;
        if ((step > 0.0 && next > target_delta) || (step < 0.0 && next < target_delta)) next = target_delta;
        const ModelSpec model = model_from_record(start.model_name, next);
        FrontProfile2D guess = current;
        guess.delta = next;
        try {
            current = newton_refine(model, guess, options);
            current.delta = next;
        } catch (const NewtonError&) {
            step *= 0.5;
            if (std::abs(step) < 1e-4) {
                throw ContinuationStallError("continue_in_delta: step fell below 1e-4", current.delta);
            }
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "continued-from %.6g", origin);
    current.provenance = buf;
    return current;
}

FrontProfile2D wrinkled_front(const ModelSpec& model, const WrinkledFrontOptions& options) {
    options.grid.validate();
    PlanarFrontOptions po;
    po.x_min = options.grid.x_min;
    po.x_max = options.grid.x_max;
    po.n_x = options.grid.nx;
    po.x_order = options.grid.x_order;
    po.center = options.center;
    const FrontProfile1D planar = solve_planar_front(model, po);
    FreezeOptions fo = options.freeze;
    if (fo.c_planar == 0.0) fo.c_planar = planar.speed;
    const FreezeState frozen =
        freeze_evolve(model, sweep_planar(model, planar, options.grid, options.amplitude, options.mode), fo);
    return newton_refine(model, frozen.current, options.newton);
}

}  // namespace frontstab
