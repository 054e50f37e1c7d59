#include "sparse_lu.hpp"

#include <dlfcn.h>

#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseLU>

namespace frontstab::detail {

namespace {

// Stable UMFPACK ABI constants (umfpack.h).
constexpr int kControlSize = 20;
constexpr int kInfoSize = 90;
constexpr int kSysA = 0;

struct UmfpackApi {
    using Defaults = void (*)(double*);
    using Symbolic = int (*)(int, int, const int*, const int*, const double*, void**, const double*, double*);
    using Numeric = int (*)(const int*, const int*, const double*, void*, void**, const double*, double*);
    using Solve = int (*)(int, const int*, const int*, const double*, double*, const double*, void*,
                          const double*, double*);
    using Free = void (*)(void**);

    Defaults defaults = nullptr;
    Symbolic symbolic = nullptr;
    Numeric numeric = nullptr;
    Solve solve = nullptr;
    Free free_symbolic = nullptr;
    Free free_numeric = nullptr;
    bool ok = false;
};

const UmfpackApi& umfpack() {
    static UmfpackApi api;
    static std::once_flag once;
    std::call_once(once, [] {
        if (std::getenv("FRONTSTAB_NO_UMFPACK") != nullptr) return;
        pin_openblas_kernel();
        void* h = dlopen("libumfpack.so.5", RTLD_NOW | RTLD_LOCAL);
        if (h == nullptr) h = dlopen("libumfpack.so", RTLD_NOW | RTLD_LOCAL);
        if (h == nullptr) return;
        api.defaults = reinterpret_cast<UmfpackApi::Defaults>(dlsym(h, "umfpack_di_defaults"));
        api.symbolic = reinterpret_cast<UmfpackApi::Symbolic>(dlsym(h, "umfpack_di_symbolic"));
        api.numeric = reinterpret_cast<UmfpackApi::Numeric>(dlsym(h, "umfpack_di_numeric"));
        api.solve = reinterpret_cast<UmfpackApi::Solve>(dlsym(h, "umfpack_di_solve"));
        api.free_symbolic = reinterpret_cast<UmfpackApi::Free>(dlsym(h, "umfpack_di_free_symbolic"));
        api.free_numeric = reinterpret_cast<UmfpackApi::Free>(dlsym(h, "umfpack_di_free_numeric"));
        api.ok = api.defaults && api.symbolic && api.numeric && api.solve && api.free_symbolic &&
                 api.free_numeric;
    });
    return api;
}

}  // namespace

void pin_openblas_kernel() { setenv("OPENBLAS_CORETYPE", "SkylakeX", 0); }

struct SparseLu::Impl {
    bool use_umfpack = false;
    Eigen::SparseMatrix<double> a;  // UMFPACK refines against the original matrix
    void* numeric = nullptr;
    double control[kControlSize] = {};
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> eigen_lu;
    bool ready = false;

    void release() {
        if (numeric != nullptr) umfpack().free_numeric(&numeric);
        numeric = nullptr;
    }
    ~Impl() { release(); }
};

SparseLu::SparseLu() : impl_(std::make_unique<Impl>()) {
    impl_->use_umfpack = umfpack().ok;
    if (impl_->use_umfpack) umfpack().defaults(impl_->control);
}

SparseLu::~SparseLu() = default;

bool SparseLu::factor(const Eigen::SparseMatrix<double>& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("SparseLu: matrix must be square");
    Impl& m = *impl_;
    m.ready = false;
    if (!m.use_umfpack) {
        m.eigen_lu.compute(a);
        m.ready = m.eigen_lu.info() == Eigen::Success;
        return m.ready;
    }
    m.release();
    m.a = a;
    m.a.makeCompressed();
    const UmfpackApi& api = umfpack();
    double info[kInfoSize];
    void* symbolic = nullptr;
    const int n = static_cast<int>(m.a.rows());
    int status = api.symbolic(n, n, m.a.outerIndexPtr(), m.a.innerIndexPtr(), m.a.valuePtr(), &symbolic,
                              m.control, info);
    if (status != 0) {
        if (symbolic != nullptr) api.free_symbolic(&symbolic);
        return false;
    }
    status = api.numeric(m.a.outerIndexPtr(), m.a.innerIndexPtr(), m.a.valuePtr(), symbolic, &m.numeric,
                         m.control, info);
    api.free_symbolic(&symbolic);
    // Status 1 flags a singular matrix; the factors exist but solves are meaningless.
    m.ready = status == 0;
    return m.ready;
}

Eigen::VectorXd SparseLu::solve(const Eigen::VectorXd& b) const {
    const Impl& m = *impl_;
    if (!m.ready) throw std::logic_error("SparseLu: solve before a successful factorization");
    if (!m.use_umfpack) return m.eigen_lu.solve(b);
    Eigen::VectorXd x(b.size());
    double info[kInfoSize];
    const int status = umfpack().solve(kSysA, m.a.outerIndexPtr(), m.a.innerIndexPtr(), m.a.valuePtr(), x.data(),
                                       b.data(), m.numeric, m.control, info);
    if (status != 0) throw std::runtime_error("SparseLu: UMFPACK solve failed");
    return x;
}

const char* SparseLu::backend() const { return impl_->use_umfpack ? "umfpack" : "eigen-sparselu"; }

}  // namespace frontstab::detail
