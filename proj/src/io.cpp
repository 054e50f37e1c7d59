#include "frontstab/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <type_traits>
#include <vector>

namespace frontstab::io {

namespace {

static_assert(std::endian::native == std::endian::little, "archives are little-endian");

constexpr char kMagic1D[8] = {'F', 'S', 'T', 'B', '1', 'D', '0', '1'};
constexpr char kMagic2D[8] = {'F', 'S', 'T', 'B', '2', 'D', '0', '1'};
constexpr char kMagicProj[8] = {'F', 'S', 'T', 'B', 'P', 'S', '0', '1'};

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
        if (!out_) throw FormatError("cannot open '" + path + "' for writing");
    }

    void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

    template <typename T>
    void pod(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        bytes(&v, sizeof v);
    }

    void str(const std::string& s) {
        pod<std::uint64_t>(s.size());
        bytes(s.data(), s.size());
    }

    template <typename T>
    void array(const T* p, std::size_t n) {
        pod<std::uint64_t>(n);
        bytes(p, n * sizeof(T));
    }

    void finish() {
        out_.flush();
        if (!out_) throw FormatError("write to '" + path_ + "' failed");
    }

private:
    std::ofstream out_;
    std::string path_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw FormatError("cannot open '" + path + "'");
    }

    void bytes(void* p, std::size_t n, const char* what) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) fail(std::string("truncated while reading ") + what);
    }

    template <typename T>
    T pod(const char* what) {
        T v;
        bytes(&v, sizeof v, what);
        return v;
    }

    std::string str(const char* what) {
        const auto n = pod<std::uint64_t>(what);
        if (n > (1u << 20)) fail(std::string("implausible string length for ") + what);
        std::string s(n, '\0');
        bytes(s.data(), n, what);
        return s;
    }

    template <typename T>
    std::vector<T> array(std::size_t expected, const char* what) {
        const auto n = pod<std::uint64_t>(what);
        if (n != expected) fail(std::string("size mismatch in ") + what);
        std::vector<T> v(n);
        bytes(v.data(), n * sizeof(T), what);
        return v;
    }

    void magic(const char (&m)[8]) {
        char got[8];
        bytes(got, 8, "magic");
        if (std::memcmp(got, m, 8) != 0) fail("wrong archive type");
    }

    void finish() {
        if (in_.peek() != std::char_traits<char>::eof()) fail("trailing bytes");
    }

    [[noreturn]] void fail(const std::string& why) const { throw FormatError("'" + path_ + "': " + why); }

private:
    std::ifstream in_;
    std::string path_;
};

void validated(const std::string& path, const std::function<void()>& check) {
    try {
        check();
    } catch (const std::invalid_argument& e) {
        throw FormatError("'" + path + "': invariant violated: " + e.what());
    }
}

std::vector<std::string> field_names(const std::string& model, int n) {
    if (model == "cubic_autocatalysis" && n == 2) return {"u", "v"};
    std::vector<std::string> names;
    for (int f = 0; f < n; ++f) names.push_back("f" + std::to_string(f));
    return names;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw FormatError("write to '" + path + "' failed");
}

std::string comment_line(const std::string& comment) { return comment.empty() ? "" : "# " + comment + "\n"; }

}  // namespace

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string content_hash(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_front(const std::string& path, const FrontProfile1D& front) {
    Writer w(path);
    w.bytes(kMagic1D, 8);
    w.pod(front.x_min);
    w.pod(front.x_max);
    w.pod<std::int32_t>(front.n_x);
    w.pod<std::int32_t>(front.n_fields());
    w.pod<std::int32_t>(front.x_order);
    w.pod(front.speed);
    w.pod(front.delta);
    w.str(front.model_name);
    w.array(front.fields.data(), static_cast<std::size_t>(front.fields.size()));
    w.finish();
}

FrontProfile1D load_front1d(const std::string& path) {
    Reader r(path);
    r.magic(kMagic1D);
    FrontProfile1D f;
    f.x_min = r.pod<double>("x_min");
    f.x_max = r.pod<double>("x_max");
    f.n_x = r.pod<std::int32_t>("n_x");
    const int n = r.pod<std::int32_t>("n_fields");
    f.x_order = r.pod<std::int32_t>("x_order");
    f.speed = r.pod<double>("speed");
    f.delta = r.pod<double>("delta");
    f.model_name = r.str("model name");
    if (f.n_x < 2 || n < 1) r.fail("bad dimensions");
    const auto v = r.array<double>(static_cast<std::size_t>(f.n_x) * n, "fields");
    f.fields = Eigen::Map<const Eigen::MatrixXd>(v.data(), f.n_x, n);
    r.finish();
    validated(path, [&] { f.validate(model_from_record(f.model_name, f.delta), 0.0); });
    return f;
}

void save_front(const std::string& path, const FrontProfile2D& front) {
    Writer w(path);
    w.bytes(kMagic2D, 8);
    const FieldGrid& g = front.grid;
    w.pod(g.x_min);
    w.pod(g.x_max);
    w.pod<std::int32_t>(g.nx);
    w.pod(g.period);
    w.pod<std::int32_t>(g.ny);
    w.pod<std::int32_t>(g.x_order);
    w.pod<std::int32_t>(front.n_fields);
    w.pod(front.speed);
    w.pod(front.delta);
    w.str(front.model_name);
    w.str(front.provenance);
    w.array(front.values.data(), static_cast<std::size_t>(front.values.size()));
    w.finish();
}

FrontProfile2D load_front2d(const std::string& path) {
    Reader r(path);
    r.magic(kMagic2D);
    FrontProfile2D f;
    FieldGrid& g = f.grid;
    g.x_min = r.pod<double>("x_min");
    g.x_max = r.pod<double>("x_max");
    g.nx = r.pod<std::int32_t>("nx");
    g.period = r.pod<double>("period");
    g.ny = r.pod<std::int32_t>("ny");
    g.x_order = r.pod<std::int32_t>("x_order");
    f.n_fields = r.pod<std::int32_t>("n_fields");
    f.speed = r.pod<double>("speed");
    f.delta = r.pod<double>("delta");
    f.model_name = r.str("model name");
    f.provenance = r.str("provenance");
    if (g.nx < 1 || g.ny < 1 || f.n_fields < 1) r.fail("bad dimensions");
    const auto v = r.array<double>(g.nodes() * static_cast<std::size_t>(f.n_fields), "values");
    f.values = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    r.finish();
    validated(path, [&] { f.validate(model_from_record(f.model_name, f.delta), 0.0); });
    return f;
}

void save_projected(const std::string& path, const ProjectedSystem& sys) {
    Writer w(path);
    w.bytes(kMagicProj, 8);
    w.pod<std::int32_t>(sys.K);
    w.pod(sys.period);
    w.pod<std::int32_t>(sys.n_fields);
    w.array(sys.diffusion.data(), static_cast<std::size_t>(sys.diffusion.size()));
    w.pod(sys.speed);
    w.pod(sys.delta);
    w.str(sys.model_name);
    w.array(sys.kappa.data(), sys.kappa.size());
    w.pod<std::int32_t>(sys.mode_reach);
    w.pod(sys.modes.x_min());
    w.pod(sys.modes.step());
    w.pod<std::int32_t>(sys.modes.nodes());
    w.pod<std::int32_t>(sys.modes.channels());
    w.array(sys.modes.node_values().data(), sys.modes.node_values().size());
    w.array(sys.far_left.data(), static_cast<std::size_t>(sys.far_left.size()));
    w.array(sys.far_right.data(), static_cast<std::size_t>(sys.far_right.size()));
    w.finish();
}

ProjectedSystem load_projected(const std::string& path) {
    Reader r(path);
    r.magic(kMagicProj);
    ProjectedSystem s;
    s.K = r.pod<std::int32_t>("K");
    s.period = r.pod<double>("period");
    s.n_fields = r.pod<std::int32_t>("n_fields");
    if (s.K < 0 || s.n_fields < 1) r.fail("bad dimensions");
    const std::size_t n = static_cast<std::size_t>(s.n_fields);
    const auto diff = r.array<double>(n, "diffusion");
    s.diffusion = Eigen::Map<const Eigen::VectorXd>(diff.data(), s.n_fields);
    s.speed = r.pod<double>("speed");
    s.delta = r.pod<double>("delta");
    s.model_name = r.str("model name");
    s.kappa = r.array<double>(static_cast<std::size_t>(2 * s.K + 1), "wavenumbers");
    s.mode_reach = r.pod<std::int32_t>("mode reach");
    const double x0 = r.pod<double>("spline origin");
    const double h = r.pod<double>("spline step");
    const int nodes = r.pod<std::int32_t>("spline nodes");
    const int channels = r.pod<std::int32_t>("spline channels");
    if (nodes < 2 || channels < 1) r.fail("bad spline dimensions");
    auto values = r.array<Complex>(static_cast<std::size_t>(nodes) * channels, "mode values");
    const auto fl = r.array<double>(n * n, "left far field");
    const auto fr = r.array<double>(n * n, "right far field");
    r.finish();
    validated(path, [&] {
        s.modes = UniformSplineBundle<Complex>(x0, h, nodes, channels, std::move(values));
        s.far_left = Eigen::Map<const Eigen::MatrixXd>(fl.data(), s.n_fields, s.n_fields);
        s.far_right = Eigen::Map<const Eigen::MatrixXd>(fr.data(), s.n_fields, s.n_fields);
        s.validate();
    });
    return s;
}

ArchiveKind archive_kind(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    char got[8];
    in.read(got, 8);
    if (in.gcount() != 8) throw FormatError("'" + path + "': truncated while reading magic");
    if (std::memcmp(got, kMagic1D, 8) == 0) return ArchiveKind::Front1D;
    if (std::memcmp(got, kMagic2D, 8) == 0) return ArchiveKind::Front2D;
    if (std::memcmp(got, kMagicProj, 8) == 0) return ArchiveKind::Projected;
    throw FormatError("'" + path + "': not a frontstab archive");
}

void write_front_csv(const std::string& path, const FrontProfile1D& front, const std::string& comment) {
    const auto names = field_names(front.model_name, front.n_fields());
    std::string text = comment_line(comment) + "# c=" + num(front.speed) + " delta=" + num(front.delta) + "\nx";
    for (const auto& nm : names) text += "," + nm;
    text += "\n";
    for (int i = 0; i < front.n_x; ++i) {
        text += num(front.x(i));
        for (int f = 0; f < front.n_fields(); ++f) text += "," + num(front.fields(i, f));
        text += "\n";
    }
    write_text(path, text);
}

void write_front_csv(const std::string& path, const FrontProfile2D& front, const std::string& comment) {
    const auto names = field_names(front.model_name, front.n_fields);
    std::string text = comment_line(comment) + "# c=" + num(front.speed) + " delta=" + num(front.delta) + "\nx,y";
    for (const auto& nm : names) text += "," + nm;
    text += "\n";
    const FieldGrid& g = front.grid;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            text += num(g.x(i)) + "," + num(g.y(j));
            for (int f = 0; f < front.n_fields; ++f) text += "," + num(front.at(f, i, j));
            text += "\n";
        }
    }
    write_text(path, text);
}

}  // namespace frontstab::io
