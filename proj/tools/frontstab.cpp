// frontstab: command-line driver for fronts, projections, Evans sweeps,
// contour counts, dispersion curves and the direct cross-checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "frontstab/evans.hpp"
#include "frontstab/front1d.hpp"
#include "frontstab/front2d.hpp"
#include "frontstab/io.hpp"
#include "frontstab/model.hpp"
#include "frontstab/parallel.hpp"
#include "frontstab/projection.hpp"

namespace fs = std::filesystem;
using namespace frontstab;
using frontstab::cli::ConfigError;
using frontstab::cli::json;
using frontstab::cli::Section;
using frontstab::io::num;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Flags {
    std::string config_path;
    std::string out_dir;
    std::string backend;
    int workers = -1;
    double tol_abs = 0.0;
    double tol_rel = 0.0;
    bool gate = false;
};

// ---------------------------------------------------------------------------
// Run context: effective config, its hash and the output directory

class Run {
public:
    Run(std::string command, const Flags& flags) : command_(std::move(command)), start_(clock::now()) {
        std::ifstream in(flags.config_path);
        if (!in) throw ConfigError("config: cannot open '" + flags.config_path + "'");
        try {
            config_ = json::parse(in, nullptr, true, true);
        } catch (const json::parse_error& e) {
            throw ConfigError("config: '" + flags.config_path + "' is not valid JSON: " + e.what());
        }
        if (!config_.is_object()) throw ConfigError("config: top level must be an object");
        if (!flags.backend.empty()) config_["backend"] = flags.backend;
        if (flags.workers >= 0) config_["workers"] = flags.workers;
        if (flags.tol_abs > 0.0) config_["tol"]["abs"] = flags.tol_abs;
        if (flags.tol_rel > 0.0) config_["tol"]["rel"] = flags.tol_rel;
        if (!flags.out_dir.empty()) config_["out"] = flags.out_dir;
        // Where the output goes and how many threads compute it do not change any result.
        json hashed = config_;
        hashed.erase("out");
        hashed.erase("workers");
        hash_ = io::content_hash(hashed.dump());
        root_ = std::make_unique<Section>(config_, "");
        const auto cmd = root_->string("command", command_);
        if (cmd != command_) root_->fail("command", "names '" + cmd + "' but '" + command_ + "' was run");
        root_->string("comment", "");
        out_ = root_->string("out", "out/" + command_);
        workers_ = root_->at_least("workers", 0, 0);
        auto tol = root_->section("tol");
        tol_ = {tol.positive("abs", 1e-8), tol.positive("rel", 1e-6)};
        tol.done();
    }

    Section& root() { return *root_; }
    [[nodiscard]] const std::string& hash() const { return hash_; }
    [[nodiscard]] int workers() const { return workers_; }
    [[nodiscard]] numkit::ToleranceSpec tol() const { return tol_; }

    std::vector<Backend> backends() {
        const auto b = root_->string("backend", "riccati", {"riccati", "drury-oja", "both"});
        if (b == "both") return {Backend::Riccati, Backend::DruryOja};
        return {parse_backend(b)};
    }

    /// Finishes validation and creates the output directory with the config copy.
    void begin() {
        root_->done();
        fs::create_directories(out_);
        write("config.json", config_.dump(2) + "\n");
        log("config hash " + hash_ + ", output in " + out_);
    }

    [[nodiscard]] std::string path(const std::string& name) const { return (fs::path(out_) / name).string(); }
    [[nodiscard]] std::string csv_header() const { return "# config_hash=" + hash_ + "\n"; }

    void write(const std::string& name, const std::string& text) const {
        std::ofstream f(path(name), std::ios::binary);
        f << text;
        if (!f) throw std::runtime_error("cannot write '" + path(name) + "'");
    }
    void write_report(json report) const {
        report["command"] = command_;
        report["config_hash"] = hash_;
        write("report.json", report.dump(2) + "\n");
    }
    void log(const std::string& what) const {
        const double t = std::chrono::duration<double>(clock::now() - start_).count();
        std::fprintf(stderr, "[frontstab %s %8.1fs] %s\n", command_.c_str(), t, what.c_str());
    }

private:
    using clock = std::chrono::steady_clock;
    std::string command_;
    clock::time_point start_;
    json config_;
    std::string hash_;
    std::unique_ptr<Section> root_;
    std::string out_;
    int workers_ = 0;
    numkit::ToleranceSpec tol_{};
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Shared option groups

ModelSpec model_section(Section& root, std::optional<double> archive_delta = std::nullopt) {
    const auto name = root.string("model", "cubic_autocatalysis", {"cubic_autocatalysis"});
    if (archive_delta) {
        if (root.has("delta") && std::abs(root.number("delta", 0.0) - *archive_delta) > 1e-12)
            root.fail("delta", "disagrees with the input archive (delta = " + num(*archive_delta) + ")");
        root.number("delta", 0.0);
        return model_from_record(name, *archive_delta);
    }
    if (!root.has("delta")) root.fail("delta", "is required");
    return model_from_record(name, root.positive("delta", 0.0));
}

PlanarFrontOptions planar_section(Section s) {
    PlanarFrontOptions o;
    o.n_x = 3001;
    o.x_order = 4;
    o.x_min = s.number("x_min", o.x_min);
    o.x_max = s.number("x_max", o.x_max);
    o.n_x = s.at_least("n_x", o.n_x, 5);
    o.x_order = s.integer("x_order", o.x_order);
    if (o.x_order != 2 && o.x_order != 4) s.fail("x_order", "must be 2 or 4");
    if (!(o.x_max > o.x_min)) s.fail("x_max", "must exceed x_min");
    o.center = s.number("center", o.center);
    o.relax_time = s.number("relax_time", o.relax_time);
    o.dt = s.positive("dt", o.dt);
    o.newton_tol = s.positive("newton_tol", o.newton_tol);
    o.max_newton = s.at_least("max_newton", o.max_newton, 1);
    s.done();
    return o;
}

FieldGrid grid_section(Section s) {
    FieldGrid g{-150.0, 150.0, 301, 120.0, 240, 4};
    g.x_min = s.number("x_min", g.x_min);
    g.x_max = s.number("x_max", g.x_max);
    g.nx = s.at_least("nx", g.nx, 4);
    g.period = s.positive("period", g.period);
    g.ny = s.at_least("ny", g.ny, 1);
    g.x_order = s.integer("x_order", g.x_order);
    if (g.x_order != 2 && g.x_order != 4) s.fail("x_order", "must be 2 or 4");
    if (!(g.x_max > g.x_min)) s.fail("x_max", "must exceed x_min");
    s.done();
    return g;
}

NewtonOptions newton_section(Section s) {
    NewtonOptions o;
    o.tol = s.positive("tol", o.tol);
    o.max_iterations = s.at_least("max_iterations", o.max_iterations, 1);
    o.pin_y_threshold = s.number("pin_y_threshold", o.pin_y_threshold);
    s.done();
    return o;
}

EvansOptions evans_section(Section s, const Run& run, std::optional<double> default_x_star) {
    EvansOptions o;
    o.tol = run.tol();
    if (default_x_star) {
        o.x_star = s.number("x_star", *default_x_star);
    } else {
        o.x_star = s.required_number("x_star");
    }
    o.x_left = s.number("x_left", o.x_left);
    o.x_right = s.number("x_right", o.x_right);
    o.swap_threshold = s.positive("swap_threshold", o.swap_threshold);
    s.done();
    return o;
}

Complex complex_value(const json& v, const Section& owner, const std::string& key) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    owner.fail(key, "entries must be numbers or [re, im] pairs");
}

std::vector<Complex> lambda_list(Section& s, const std::string& key) {
    const json* v = s.raw(key);
    if (!v) s.fail(key, "is required");
    if (!v->is_array() || v->empty()) s.fail(key, "must be a non-empty array");
    std::vector<Complex> out;
    for (const auto& e : *v) out.push_back(complex_value(e, s, key));
    return out;
}

struct RealScan {
    double a = 0.0, b = 0.0;
    int samples = 0;
    ScanOptions options;
};

RealScan scan_section(Section s, int workers) {
    RealScan r;
    r.a = s.required_number("a");
    r.b = s.required_number("b");
    if (!(r.b > r.a)) s.fail("b", "must exceed a");
    r.samples = s.at_least("samples", 101, 3);
    r.options.root_tol = s.positive("root_tol", r.options.root_tol);
    r.options.dip_factor = s.positive("dip_factor", r.options.dip_factor);
    r.options.suspect_factor = s.positive("suspect_factor", r.options.suspect_factor);
    r.options.workers = workers;
    s.done();
    return r;
}

// ---------------------------------------------------------------------------
// Inputs

struct FrontSource {
    io::ArchiveKind kind = io::ArchiveKind::Front1D;
    std::string path;
    std::string hash;
    std::optional<FrontProfile1D> front1;
    std::optional<FrontProfile2D> front2;
    std::optional<ProjectedSystem> projected;
    std::optional<ModelSpec> model;

    [[nodiscard]] double delta() const {
        if (front1) return front1->delta;
        if (front2) return front2->delta;
        return projected->delta;
    }
    [[nodiscard]] bool planar() const {
        return front1.has_value() || (front2 && front2->provenance == "planar");
    }
    [[nodiscard]] std::optional<double> default_x_star() const {
        if (projected) return std::nullopt;
        return planar() ? 0.0 : 50.0;
    }
    json describe() const {
        static const char* names[] = {"front1d", "front2d", "projected"};
        return {{"path", path}, {"kind", names[static_cast<int>(kind)]}, {"content_hash", hash}};
    }
};

ConfigError input_error(const std::string& path, const std::string& what) {
    return ConfigError("input '" + path + "': " + what);
}

FrontSource load_source(const std::string& path, const std::vector<io::ArchiveKind>& accepted) {
    FrontSource src;
    src.path = path;
    if (!fs::exists(path)) throw input_error(path, "no such file");
    try {
        src.kind = io::archive_kind(path);
        bool ok = false;
        for (auto k : accepted) ok = ok || k == src.kind;
        if (!ok) throw input_error(path, "archive type not accepted by this command");
        switch (src.kind) {
            case io::ArchiveKind::Front1D:
                src.front1 = io::load_front1d(path);
                src.model = model_from_record(src.front1->model_name, src.front1->delta);
                src.front1->validate(*src.model, 1e-6);
                break;
            case io::ArchiveKind::Front2D:
                src.front2 = io::load_front2d(path);
                src.model = model_from_record(src.front2->model_name, src.front2->delta);
                src.front2->validate(*src.model, 1e-6);
                break;
            case io::ArchiveKind::Projected:
                src.projected = io::load_projected(path);
                src.projected->validate();
                src.model = model_from_record(src.projected->model_name, src.projected->delta);
                break;
        }
    } catch (const io::FormatError& e) {
        throw input_error(path, e.what());
    } catch (const std::invalid_argument& e) {
        throw input_error(path, e.what());
    }
    src.hash = io::content_hash(slurp(path));
    return src;
}

std::string input_path(Section& root) {
    const auto p = root.string("input", "");
    if (p.empty()) root.fail("input", "is required");
    return p;
}

/// Builds the projected system for truncation K; a projected archive is used as is.
ProjectedSystem project(const FrontSource& src, int K, double period) {
    if (src.projected) return *src.projected;
    if (src.front2) return build_projected_system(*src.model, *src.front2, K);
    return build_projected_system(*src.model, *src.front1, K, period);
}

/// Reads K (a single value or a list) and the period consistent with the source.
struct Truncation {
    std::vector<int> K;
    double period = 0.0;
};

Truncation truncation_section(Section& root, const FrontSource& src, bool allow_list) {
    Truncation t;
    const json* k = root.raw("K");
    if (src.projected) {
        t.K = {src.projected->K};
        t.period = src.projected->period;
        if (k && !(k->is_number_integer() && k->get<int>() == src.projected->K))
            root.fail("K", "disagrees with the projected archive (K = " + std::to_string(src.projected->K) + ")");
        if (root.has("period") && std::abs(root.number("period", 0.0) - t.period) > 1e-12)
            root.fail("period", "disagrees with the projected archive");
        root.number("period", 0.0);
        return t;
    }
    if (!k) root.fail("K", "is required");
    if (k->is_number_integer()) {
        t.K = {k->get<int>()};
    } else if (allow_list && k->is_array() && !k->empty()) {
        for (const auto& e : *k) {
            if (!e.is_number_integer()) root.fail("K", "entries must be integers");
            t.K.push_back(e.get<int>());
        }
    } else {
        root.fail("K", allow_list ? "must be an integer or a list of integers" : "must be an integer");
    }
    for (int K : t.K)
        if (K < 0) root.fail("K", "must be >= 0");
    if (src.front2) {
        t.period = src.front2->grid.period;
        if (root.has("period") && std::abs(root.number("period", 0.0) - t.period) > 1e-12)
            root.fail("period", "disagrees with the front's transverse period");
        root.number("period", 0.0);
    } else {
        if (!root.has("period")) root.fail("period", "is required for a planar 1D front");
        t.period = root.positive("period", 0.0);
    }
    return t;
}

std::string complex_text(Complex z) {
    const double im = z.imag() == 0.0 ? 0.0 : z.imag();
    return num(z.real()) + (im < 0.0 ? "" : "+") + num(im) + "i";
}

json zero_json(const RealZero& z) {
    static const char* kinds[] = {"sign_change", "double_dip", "unresolved_dip"};
    return {{"lambda", z.lambda},
            {"multiplicity", z.multiplicity},
            {"kind", kinds[static_cast<int>(z.kind)]},
            {"log_abs", z.log_abs_at_zero}};
}

std::vector<double> expand(const std::vector<RealZero>& zeros) {
    std::vector<double> out;
    for (const auto& z : zeros)
        for (int m = 0; m < z.multiplicity; ++m) out.push_back(z.lambda);
    return out;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_front1d(Run& run) {
    auto& root = run.root();
    const auto model = model_section(root);
    const auto options = planar_section(root.section("planar"));
    run.begin();
    run.log("solving planar front, delta = " + num(model.delta));
    const auto front = solve_planar_front(model, options);
    const double residual = planar_residual_inf(model, front);
    io::save_front(run.path("front.bin"), front);
    io::write_front_csv(run.path("front.csv"), front, "config_hash=" + run.hash());
    run.write_report({{"delta", front.delta},
                      {"speed", front.speed},
                      {"residual_inf", residual},
                      {"n_x", front.n_x},
                      {"x_order", front.x_order},
                      {"x_min", front.x_min},
                      {"x_max", front.x_max}});
    run.log("residual " + num(residual));
    std::printf("c = %s\n", num(front.speed).c_str());
    return 0;
}

int argmax_mode(const ModelSpec& model, double period, int max_mode, Run& run, json& info) {
    PlanarFrontOptions po;
    po.n_x = 3001;
    po.x_order = 4;
    const auto planar = solve_planar_front(model, po);
    std::vector<double> kappas;
    for (int k = 1; k <= max_mode; ++k) kappas.push_back(2.0 * kPi * k / period);
    DispersionOptions d;
    d.evans.tol = run.tol();
    d.evans.x_left = -25.0;
    d.evans.x_right = 25.0;
    const auto curve = dispersion_relation(model, planar, kappas, d);
    int best = 0;
    double best_growth = 0.0;
    json rates = json::array();
    for (int k = 1; k <= max_mode; ++k) {
        const auto& p = curve[static_cast<std::size_t>(k - 1)];
        rates.push_back({{"mode", k}, {"growth", p.found ? json(p.growth) : json(nullptr)}});
        if (p.found && p.growth > best_growth) {
            best_growth = p.growth;
            best = k;
        }
    }
    info["seed_dispersion"] = rates;
    if (best == 0) throw numkit::NumericError("seed: no transverse mode grows (planar front is stable)");
    run.log("seed mode " + std::to_string(best) + " (growth " + num(best_growth) + ")");
    return best;
}

int cmd_front2d(Run& run) {
    auto& root = run.root();
    const auto model = model_section(root);
    WrinkledFrontOptions w;
    json info;
    // With an input archive the front is only continued in delta; otherwise it is seeded,
    // frozen and refined, optionally at another delta first.
    std::optional<FrontSource> src;
    if (root.has("input")) src = load_source(input_path(root), {io::ArchiveKind::Front2D});
    bool auto_mode = true;
    int max_mode = 8;
    if (!src) {
        w.grid = grid_section(root.section("grid"));
        auto seed = root.section("seed");
        w.center = seed.number("center", w.center);
        w.amplitude = seed.number("amplitude", w.amplitude);
        if (const json* m = seed.raw("mode")) {
            if (m->is_string() && m->get<std::string>() == "auto") {
                auto_mode = true;
            } else if (m->is_number_integer() && m->get<int>() >= 0) {
                auto_mode = false;
                w.mode = m->get<int>();
            } else {
                seed.fail("mode", "must be a non-negative integer or \"auto\"");
            }
        }
        max_mode = seed.at_least("auto_max_mode", max_mode, 1);
        seed.done();
        auto freeze = root.section("freeze");
        w.freeze.t_end = freeze.positive("t_end", w.freeze.t_end);
        w.freeze.dt = freeze.positive("dt", w.freeze.dt);
        w.freeze.record_every = freeze.at_least("record_every", w.freeze.record_every, 1);
        w.freeze.steady_tol = freeze.number("steady_tol", w.freeze.steady_tol);
        freeze.done();
    }
    w.newton = newton_section(root.section("newton"));
    const bool continuing = root.has("continuation");
    auto cont = root.section("continuation");
    double from_delta = model.delta;
    if (src) {
        from_delta = src->delta();
        if (!continuing) root.fail("continuation", "is required with an input front");
    } else if (continuing) {
        if (!cont.has("from_delta")) cont.fail("from_delta", "is required");
        from_delta = cont.positive("from_delta", 0.0);
    }
    const int steps = cont.at_least("steps", 5, 1);
    cont.done();
    run.begin();

    FrontProfile2D front;
    if (src) {
        info["input"] = src->describe();
        front = *src->front2;
    } else {
        const auto seed_model = model_from_record(model.name, from_delta);
        if (auto_mode) w.mode = argmax_mode(seed_model, w.grid.period, max_mode, run, info);
        info["seed_mode"] = w.mode;
        run.log("wrinkled front at delta = " + num(from_delta) + ", mode " + std::to_string(w.mode));
        front = wrinkled_front(seed_model, w);
        run.log("front speed " + num(front.speed) + ", residual " + num(stationary_residual(seed_model, front)));
    }
    if (from_delta != model.delta) {
        run.log("continuing to delta = " + num(model.delta) + " in " + std::to_string(steps) + " steps");
        front = continue_in_delta(front, model.delta, steps, w.newton);
    }
    const double residual = stationary_residual(model, front);
    io::save_front(run.path("front.bin"), front);
    io::write_front_csv(run.path("front.csv"), front, "config_hash=" + run.hash());
    info["delta"] = front.delta;
    info["speed"] = front.speed;
    info["residual_inf"] = residual;
    info["transverse_variation"] = transverse_variation(front);
    info["provenance"] = front.provenance;
    info["grid"] = {{"x_min", front.grid.x_min}, {"x_max", front.grid.x_max}, {"nx", front.grid.nx},
                    {"period", front.grid.period}, {"ny", front.grid.ny}, {"x_order", front.grid.x_order}};
    run.write_report(info);
    std::printf("c = %s\n", num(front.speed).c_str());
    return 0;
}

int cmd_project(Run& run) {
    auto& root = run.root();
    const auto src = load_source(input_path(root), {io::ArchiveKind::Front1D, io::ArchiveKind::Front2D});
    model_section(root, src.delta());
    const auto t = truncation_section(root, src, false);
    run.begin();
    const auto sys = project(src, t.K[0], t.period);
    io::save_projected(run.path("projected.bin"), sys);
    run.write_report({{"input", src.describe()},
                      {"K", sys.K},
                      {"period", sys.period},
                      {"speed", sys.speed},
                      {"delta", sys.delta},
                      {"mode_reach", sys.mode_reach},
                      {"dim", sys.dim()}});
    run.log("projected system of dimension " + std::to_string(sys.dim()));
    return 0;
}

std::string sample_row(Complex l, const LogDet& v, Backend b, int K, double x_star) {
    return num(l.real()) + "," + num(l.imag()) + "," + num(v.log_abs) + "," + num(v.arg) + "," + backend_name(b) +
           "," + std::to_string(K) + "," + num(x_star) + "\n";
}

int cmd_evans_scan(Run& run) {
    auto& root = run.root();
    const auto src = load_source(input_path(root), {io::ArchiveKind::Front1D, io::ArchiveKind::Front2D,
                                                    io::ArchiveKind::Projected});
    model_section(root, src.delta());
    const auto t = truncation_section(root, src, true);
    const auto backends = run.backends();
    const auto eo = evans_section(root.section("evans"), run, src.default_x_star());
    std::optional<RealScan> scan;
    if (root.has("scan")) scan = scan_section(root.section("scan"), run.workers());
    struct Grid {
        double re0, re1, im0, im1;
        int n_re, n_im;
    };
    std::optional<Grid> grid;
    if (root.has("grid")) {
        auto g = root.section("grid");
        Grid v{};
        auto axis = [&](const std::string& key, double& lo, double& hi, int& n) {
            const json* a = g.raw(key);
            if (!a || !a->is_array() || a->size() != 3 || !(*a)[0].is_number() || !(*a)[1].is_number() ||
                !(*a)[2].is_number_integer() || (*a)[2].get<int>() < 2 || !((*a)[1].get<double>() > (*a)[0].get<double>()))
                g.fail(key, "must be [lo, hi, n] with hi > lo and n >= 2");
            lo = (*a)[0].get<double>();
            hi = (*a)[1].get<double>();
            n = (*a)[2].get<int>();
        };
        axis("re", v.re0, v.re1, v.n_re);
        axis("im", v.im0, v.im1, v.n_im);
        g.done();
        grid = v;
    }
    if (!scan && !grid) root.fail("scan", "or 'grid' is required");
    run.begin();

    const std::string header = "re,im,log_abs,arg,backend,K,x_star\n";
    std::string samples = run.csv_header() + header;
    std::string grid_csv = run.csv_header() + header;
    std::string zeros_csv = run.csv_header() + "K,backend,lambda,multiplicity,kind,log_abs\n";
    json runs = json::array();
    json differences = json::array();
    double worst_difference = 0.0;
    bool count_mismatch = false;
    for (int K : t.K) {
        const auto sys = project(src, K, t.period);
        std::vector<std::vector<double>> zero_lists;
        for (auto b : backends) {
            json entry{{"K", K}, {"backend", backend_name(b)}, {"x_star", eo.x_star}};
            if (scan) {
                run.log("K = " + std::to_string(K) + ", " + backend_name(b) + ": scanning [" + num(scan->a) + ", " +
                        num(scan->b) + "]");
                const auto r = scan_and_refine(sys, scan->a, scan->b, scan->samples, b, eo, scan->options);
                for (std::size_t i = 0; i < r.grid.size(); ++i)
                    samples += sample_row({r.grid[i], 0.0}, r.values[i], b, K, eo.x_star);
                json zs = json::array();
                for (const auto& z : r.zeros) {
                    zs.push_back(zero_json(z));
                    zeros_csv += std::to_string(K) + "," + backend_name(b) + "," + num(z.lambda) + "," +
                                 std::to_string(z.multiplicity) + "," + zero_json(z)["kind"].get<std::string>() +
                                 "," + num(z.log_abs_at_zero) + "\n";
                }
                entry["zeros"] = zs;
                entry["evaluations"] = r.evaluations;
                zero_lists.push_back(expand(r.zeros));
                run.log(std::to_string(r.zeros.size()) + " zeros after " + std::to_string(r.evaluations) +
                        " evaluations");
            }
            if (grid) {
                const int n = grid->n_re * grid->n_im;
                std::vector<EvansValue> values(static_cast<std::size_t>(n));
                run.log("K = " + std::to_string(K) + ", " + backend_name(b) + ": " + std::to_string(n) +
                        " grid points");
                parallel_for(n, run.workers(), [&](int idx) {
                    const int i = idx / grid->n_im, j = idx % grid->n_im;
                    const Complex l(grid->re0 + (grid->re1 - grid->re0) * i / (grid->n_re - 1),
                                    grid->im0 + (grid->im1 - grid->im0) * j / (grid->n_im - 1));
                    values[static_cast<std::size_t>(idx)] = evans(sys, l, b, eo);
                });
                for (const auto& v : values) grid_csv += sample_row(v.lambda, v.value, b, K, eo.x_star);
            }
            runs.push_back(entry);
        }
        if (zero_lists.size() == 2) {
            json d{{"K", K}};
            if (zero_lists[0].size() != zero_lists[1].size()) {
                count_mismatch = true;
                d["count_mismatch"] = true;
            } else {
                json diffs = json::array();
                double worst = 0.0;
                for (std::size_t i = 0; i < zero_lists[0].size(); ++i) {
                    const double e = std::abs(zero_lists[0][i] - zero_lists[1][i]);
                    diffs.push_back(e);
                    worst = std::max(worst, e);
                }
                d["differences"] = diffs;
                d["max_difference"] = worst;
                worst_difference = std::max(worst_difference, worst);
            }
            differences.push_back(d);
        }
    }
    if (scan) {
        run.write("samples.csv", samples);
        run.write("zeros.csv", zeros_csv);
    }
    if (grid) run.write("grid.csv", grid_csv);
    json report{{"input", src.describe()}, {"runs", runs}};
    if (!differences.empty()) {
        report["backend_differences"] = differences;
        report["max_backend_difference"] = worst_difference;
        report["backend_count_mismatch"] = count_mismatch;
        std::printf("max backend zero difference = %s%s\n", num(worst_difference).c_str(),
                    count_mismatch ? " (zero counts differ)" : "");
    }
    if (src.model && (src.front1 || src.front2)) {
        const auto bd = src.front2 ? sectorial_bounds(*src.model, *src.front2)
                                   : sectorial_bounds(*src.model, *src.front1);
        report["sectorial_bounds"] = {{"re_cap", bd.re_cap}, {"sector_cap", bd.sector_cap},
                                      {"kappa", bd.kappa}, {"df_norm", bd.df_norm}};
    }
    run.write_report(report);
    for (const auto& r : runs) {
        if (!r.contains("zeros")) continue;
        std::printf("K=%d %s:", r["K"].get<int>(), r["backend"].get<std::string>().c_str());
        for (const auto& z : r["zeros"])
            std::printf(" %s%s", num(z["lambda"].get<double>()).c_str(),
                        z["multiplicity"].get<int>() > 1 ? "(x2)" : "");
        std::printf("\n");
    }
    return 0;
}

int cmd_evans_contour(Run& run, bool gate) {
    auto& root = run.root();
    const auto src = load_source(input_path(root), {io::ArchiveKind::Front1D, io::ArchiveKind::Front2D,
                                                    io::ArchiveKind::Projected});
    model_section(root, src.delta());
    const auto t = truncation_section(root, src, false);
    const auto backends = run.backends();
    const auto eo = evans_section(root.section("evans"), run, src.default_x_star());
    std::optional<SectorialBounds> bounds;
    if (src.front2) bounds = sectorial_bounds(*src.model, *src.front2);
    if (src.front1) bounds = sectorial_bounds(*src.model, *src.front1);

    struct Named {
        std::string name;
        std::string kind;
        ContourSpec spec;
    };
    std::vector<Named> contours;
    json default_contours = json::array({json{{"name", "sector"}, {"kind", "sectorial"}},
                                         json{{"name", "origin"}, {"kind", "circle"}}});
    const json* list = root.raw("contours");
    if (list && (!list->is_array() || list->empty())) root.fail("contours", "must be a non-empty array");
    const json& items = list ? *list : default_contours;
    for (std::size_t i = 0; i < items.size(); ++i) {
        Section c(items[i], "contours[" + std::to_string(i) + "]");
        Named n;
        n.kind = c.string("kind", "sectorial", {"sectorial", "circle"});
        n.name = c.string("name", n.kind + std::to_string(i));
        if (n.kind == "sectorial") {
            const double r0 = c.positive("r0", 1e-4);
            if (!bounds && !(c.has("re_cap") && c.has("sector_cap")))
                c.fail("re_cap", "and 'sector_cap' are required when the input has no front");
            const double re_cap = c.positive("re_cap", bounds ? bounds->re_cap : 0.0);
            const double sector_cap = c.positive("sector_cap", bounds ? bounds->sector_cap : 0.0);
            n.spec = sectorial_contour(re_cap, sector_cap, r0);
        } else {
            Complex center(0.0, 0.0);
            if (const json* v = c.raw("center")) center = complex_value(*v, c, "center");
            n.spec = circle_contour(center, c.positive("radius", 1e-4));
        }
        n.spec.max_arg_change = c.positive("max_arg_change", n.spec.max_arg_change);
        n.spec.max_log_change = c.positive("max_log_change", n.spec.max_log_change);
        n.spec.max_depth = c.at_least("max_depth", n.spec.max_depth, 1);
        n.spec.initial_pieces = c.at_least("initial_pieces", n.spec.initial_pieces, 1);
        c.done();
        contours.push_back(std::move(n));
    }
    run.begin();

    const auto sys = project(src, t.K[0], t.period);
    std::string trace = run.csv_header() + "contour,backend,re,im,arg\n";
    json results = json::array();
    std::optional<int> gate_count;
    bool disagree = false;
    for (const auto& c : contours) {
        std::optional<int> first;
        for (auto b : backends) {
            run.log("contour '" + c.name + "', " + backend_name(b));
            const auto w = winding_number(sys, c.spec, b, eo, run.workers());
            for (const auto& s : w.trace)
                trace += c.name + "," + backend_name(b) + "," + num(s.lambda.real()) + "," + num(s.lambda.imag()) +
                         "," + num(s.arg) + "\n";
            results.push_back({{"contour", c.name},
                               {"kind", c.kind},
                               {"backend", backend_name(b)},
                               {"count", w.count},
                               {"raw", w.raw},
                               {"evaluations", w.evaluations}});
            std::printf("%s %s: count = %d (raw %s)\n", c.name.c_str(), backend_name(b), w.count,
                        num(w.raw).c_str());
            if (first && *first != w.count) disagree = true;
            if (!first) first = w.count;
        }
        if (!gate_count && c.kind == "sectorial") gate_count = first;
    }
    if (!gate_count && !results.empty()) gate_count = results[0]["count"].get<int>();
    run.write("trace.csv", trace);
    json report{{"input", src.describe()}, {"K", sys.K}, {"x_star", eo.x_star}, {"contours", results},
                {"backends_disagree", disagree}};
    if (bounds)
        report["sectorial_bounds"] = {{"re_cap", bounds->re_cap}, {"sector_cap", bounds->sector_cap},
                                      {"kappa", bounds->kappa}, {"df_norm", bounds->df_norm}};
    report["unstable_count"] = *gate_count;
    run.write_report(report);
    if (disagree) {
        run.log("backends disagree on a winding count");
        return 1;
    }
    return gate ? 10 + *gate_count : 0;
}

int cmd_evans_angle(Run& run) {
    auto& root = run.root();
    const auto src = load_source(input_path(root), {io::ArchiveKind::Front1D, io::ArchiveKind::Front2D,
                                                    io::ArchiveKind::Projected});
    model_section(root, src.delta());
    const auto t = truncation_section(root, src, false);
    const auto eo = evans_section(root.section("evans"), run, src.default_x_star());
    std::vector<Complex> lambdas;
    if (root.has("lambdas")) {
        lambdas = lambda_list(root, "lambdas");
    } else {
        auto s = root.section("scan");
        const double a = s.required_number("a"), b = s.required_number("b");
        const int n = s.at_least("samples", 101, 2);
        if (!(b > a)) s.fail("b", "must exceed a");
        s.done();
        for (int i = 0; i < n; ++i) lambdas.emplace_back(a + (b - a) * i / (n - 1), 0.0);
    }
    run.begin();
    const auto sys = project(src, t.K[0], t.period);
    std::vector<double> angles(lambdas.size());
    parallel_for(static_cast<int>(lambdas.size()), run.workers(),
                 [&](int i) { angles[static_cast<std::size_t>(i)] = evans_angle(sys, lambdas[static_cast<std::size_t>(i)], eo); });
    std::string csv = run.csv_header() + "re,im,angle,K,x_star\n";
    double smallest = INFINITY;
    Complex at;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        csv += num(lambdas[i].real()) + "," + num(lambdas[i].imag()) + "," + num(angles[i]) + "," +
               std::to_string(sys.K) + "," + num(eo.x_star) + "\n";
        if (angles[i] < smallest) {
            smallest = angles[i];
            at = lambdas[i];
        }
    }
    run.write("angle.csv", csv);
    run.write_report({{"input", src.describe()},
                      {"K", sys.K},
                      {"x_star", eo.x_star},
                      {"min_angle", smallest},
                      {"min_angle_at", {at.real(), at.imag()}}});
    std::printf("min angle = %s at %s\n", num(smallest).c_str(), complex_text(at).c_str());
    return 0;
}

int cmd_dispersion(Run& run) {
    auto& root = run.root();
    std::vector<double> deltas;
    std::optional<FrontSource> src;
    if (root.has("input")) {
        src = load_source(input_path(root), {io::ArchiveKind::Front1D});
        model_section(root, src->delta());
        deltas = {src->delta()};
    } else {
        root.string("model", "cubic_autocatalysis", {"cubic_autocatalysis"});
        const json* d = root.raw("delta");
        if (!d) root.fail("delta", "is required");
        if (d->is_number()) {
            deltas = {d->get<double>()};
        } else if (d->is_array() && !d->empty()) {
            for (const auto& e : *d) {
                if (!e.is_number()) root.fail("delta", "entries must be numbers");
                deltas.push_back(e.get<double>());
            }
        } else {
            root.fail("delta", "must be a number or a list of numbers");
        }
        for (double v : deltas)
            if (!(v > 0.0)) root.fail("delta", "must be > 0");
    }
    const auto planar_options = planar_section(root.section("planar"));
    std::vector<double> kappas;
    auto w = root.section("wavenumbers");
    if (const json* list = w.raw("values")) {
        if (!list->is_array() || list->empty()) w.fail("values", "must be a non-empty array");
        for (const auto& e : *list) {
            if (!e.is_number()) w.fail("values", "entries must be numbers");
            kappas.push_back(e.get<double>());
        }
    } else if (w.has("period")) {
        const double period = w.positive("period", 0.0);
        const int modes = w.at_least("modes", 8, 1);
        for (int k = 1; k <= modes; ++k) kappas.push_back(2.0 * kPi * k / period);
    } else {
        const double k_max = w.positive("k_max", 0.2);
        const int samples = w.at_least("samples", 41, 2);
        for (int i = 1; i < samples; ++i) kappas.push_back(k_max * i / (samples - 1));
    }
    w.done();
    DispersionOptions d;
    auto es = root.section("evans");
    d.evans.tol = run.tol();
    d.evans.x_star = es.number("x_star", 0.0);
    d.evans.x_left = es.number("x_left", -25.0);
    d.evans.x_right = es.number("x_right", 25.0);
    d.evans.swap_threshold = es.positive("swap_threshold", d.evans.swap_threshold);
    es.done();
    d.initial_width = root.positive("initial_width", d.initial_width);
    d.max_width = root.positive("max_width", d.max_width);
    run.begin();

    std::string csv = run.csv_header() + "delta,wavenumber,growth,found\n";
    json curves = json::array();
    for (double delta : deltas) {
        const auto model = model_from_record("cubic_autocatalysis", delta);
        const auto planar = src ? *src->front1 : solve_planar_front(model, planar_options);
        run.log("delta = " + num(delta) + ": c = " + num(planar.speed) + ", " + std::to_string(kappas.size()) +
                " wavenumbers");
        const auto curve = dispersion_relation(model, planar, kappas, d);
        double max_growth = -INFINITY, at = 0.0;
        bool all_found = true;
        for (const auto& p : curve) {
            csv += num(delta) + "," + num(p.wavenumber) + "," + (p.found ? num(p.growth) : std::string("nan")) + "," +
                   (p.found ? "1" : "0") + "\n";
            all_found = all_found && p.found;
            if (p.found && p.growth > max_growth) {
                max_growth = p.growth;
                at = p.wavenumber;
            }
        }
        curves.push_back({{"delta", delta},
                          {"speed", planar.speed},
                          {"max_growth", max_growth},
                          {"argmax_wavenumber", at},
                          {"all_found", all_found},
                          {"nonpositive", max_growth <= 0.0}});
        std::printf("delta=%s max growth %s at wavenumber %s\n", num(delta).c_str(), num(max_growth).c_str(),
                    num(at).c_str());
    }
    run.write("dispersion.csv", csv);
    json report{{"curves", curves}};
    if (src) report["input"] = src->describe();
    run.write_report(report);
    return 0;
}

int cmd_eigs_direct(Run& run) {
    auto& root = run.root();
    const auto src = load_source(input_path(root), {io::ArchiveKind::Front2D});
    model_section(root, src.delta());
    const double sigma = root.number("sigma", 1.0);
    const int n_eigs = root.at_least("n_eigs", 10, 1);
    EigsOptions o;
    o.ncv = root.at_least("ncv", o.ncv, 0);
    o.tol = root.positive("eig_tol", o.tol);
    o.max_restarts = root.at_least("max_restarts", o.max_restarts, 1);
    const int seed = root.at_least("seed", static_cast<int>(o.seed), 0);
    o.seed = static_cast<unsigned>(seed);
    run.begin();
    run.log("shift-invert eigensolve, sigma = " + num(sigma));
    const auto r = direct_projection_eigs(*src.model, *src.front2, sigma, n_eigs, o);
    std::string csv = run.csv_header() + "index,re,im,distance\n";
    json eigs = json::array();
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
        const auto e = r.eigenvalues[i];
        csv += std::to_string(i) + "," + num(e.real()) + "," + num(e.imag()) + "," + num(std::abs(e - sigma)) + "\n";
        eigs.push_back({e.real(), e.imag()});
        std::printf("%s\n", complex_text(e).c_str());
    }
    run.write("eigs.csv", csv);
    run.write_report({{"input", src.describe()},
                      {"sigma", sigma},
                      {"n_eigs", n_eigs},
                      {"seed", o.seed},
                      {"solver", r.solver},
                      {"converged", r.converged},
                      {"operator_applications", r.operator_applications},
                      {"eigenvalues", eigs}});
    if (r.converged < n_eigs) {
        run.log("only " + std::to_string(r.converged) + " eigenvalues converged");
        return 1;
    }
    return 0;
}

int cmd_factorization_check(Run& run) {
    auto& root = run.root();
    const auto src = load_source(input_path(root), {io::ArchiveKind::Front1D, io::ArchiveKind::Front2D,
                                                    io::ArchiveKind::Projected});
    model_section(root, src.delta());
    const auto t = truncation_section(root, src, false);
    const auto eo = evans_section(root.section("evans"), run, src.default_x_star());
    const auto lambdas = lambda_list(root, "lambdas");
    const double threshold = root.positive("threshold", 1e-8);
    run.begin();
    const auto sys = project(src, t.K[0], t.period);
    std::vector<FactorizationReport> reports(lambdas.size());
    parallel_for(static_cast<int>(lambdas.size()), run.workers(), [&](int i) {
        reports[static_cast<std::size_t>(i)] = factorization_check(sys, lambdas[static_cast<std::size_t>(i)], eo);
    });
    std::string csv = run.csv_header() + "re,im,defect,log_abs_full,arg_full,log_abs_product,arg_product\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const auto& r = reports[i];
        csv += num(lambdas[i].real()) + "," + num(lambdas[i].imag()) + "," + num(r.defect) + "," +
               num(r.full.log_abs) + "," + num(r.full.arg) + "," + num(r.product.log_abs) + "," +
               num(r.product.arg) + "\n";
        worst = std::max(worst, r.defect);
    }
    run.write("factorization.csv", csv);
    run.write_report({{"input", src.describe()},
                      {"K", sys.K},
                      {"x_star", eo.x_star},
                      {"max_defect", worst},
                      {"threshold", threshold},
                      {"pass", worst < threshold}});
    std::printf("max factorization defect = %s\n", num(worst).c_str());
    return worst < threshold ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Travelling fronts and their Evans-function stability"};
    app.require_subcommand(1);
    Flags flags;
    const std::vector<std::string> commands = {"front1d",     "front2d",    "project",     "evans-scan",
                                               "evans-contour", "evans-angle", "dispersion", "eigs-direct",
                                               "factorization-check"};
    std::map<std::string, CLI::App*> subs;
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", flags.config_path, "JSON run configuration")->required();
        sub->add_option("--out", flags.out_dir, "output directory (overrides the config)");
        sub->add_option("--backend", flags.backend, "riccati, drury-oja or both")
            ->check(CLI::IsMember({"riccati", "drury-oja", "both"}));
        sub->add_option("--workers", flags.workers, "worker threads for lambda sweeps (0 = all cores)")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--tol-abs", flags.tol_abs, "absolute ODE tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--tol-rel", flags.tol_rel, "relative ODE tolerance")->check(CLI::PositiveNumber);
        if (name == "evans-contour") sub->add_flag("--gate", flags.gate, "exit with 10 + unstable count");
        subs[name] = sub;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    std::string command;
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) command = name;

    try {
        Run run(command, flags);
        if (command == "front1d") return cmd_front1d(run);
        if (command == "front2d") return cmd_front2d(run);
        if (command == "project") return cmd_project(run);
        if (command == "evans-scan") return cmd_evans_scan(run);
        if (command == "evans-contour") return cmd_evans_contour(run, flags.gate);
        if (command == "evans-angle") return cmd_evans_angle(run);
        if (command == "dispersion") return cmd_dispersion(run);
        if (command == "eigs-direct") return cmd_eigs_direct(run);
        return cmd_factorization_check(run);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: invalid setting: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
