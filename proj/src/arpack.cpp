#include "arpack.hpp"

#include <dlfcn.h>

#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <string>

#include "sparse_lu.hpp"

namespace frontstab::detail {

namespace {

// Fortran entry points; trailing arguments are the hidden character lengths.
using Naupd = void (*)(int* ido, const char* bmat, const int* n, const char* which, const int* nev, const double* tol,
                       double* resid, const int* ncv, double* v, const int* ldv, int* iparam, int* ipntr,
                       double* workd, double* workl, const int* lworkl, int* info, std::size_t, std::size_t);
using Neupd = void (*)(const int* rvec, const char* howmny, int* select, double* dr, double* di, double* z,
                       const int* ldz, const double* sigmar, const double* sigmai, double* workev, const char* bmat,
                       const int* n, const char* which, const int* nev, const double* tol, double* resid,
                       const int* ncv, double* v, const int* ldv, int* iparam, int* ipntr, double* workd,
                       double* workl, const int* lworkl, int* info, std::size_t, std::size_t, std::size_t);

struct ArpackApi {
    Naupd naupd = nullptr;
    Neupd neupd = nullptr;
};

const ArpackApi& api() {
    static ArpackApi a;
    static std::once_flag once;
    std::call_once(once, [] {
        pin_openblas_kernel();
        void* h = dlopen("libarpack.so.2", RTLD_NOW | RTLD_LOCAL);
        if (h == nullptr) h = dlopen("libarpack.so", RTLD_NOW | RTLD_LOCAL);
        if (h == nullptr) return;
        a.naupd = reinterpret_cast<Naupd>(dlsym(h, "dnaupd_"));
        a.neupd = reinterpret_cast<Neupd>(dlsym(h, "dneupd_"));
    });
    return a;
}

}  // namespace

bool arpack_available() { return api().naupd != nullptr && api().neupd != nullptr; }

ArpackOutcome arpack_largest(int n, int nev, int ncv, double tol, int max_restarts,
                             const std::function<void(const double* x, double* y)>& op, std::vector<double> start) {
    if (!arpack_available()) throw std::runtime_error("ARPACK (libarpack.so.2) is not available");
    if (nev < 1 || ncv <= nev + 1 || ncv > n) throw std::invalid_argument("arpack_largest: need nev + 2 <= ncv <= n");
    if (static_cast<int>(start.size()) != n) throw std::invalid_argument("arpack_largest: start vector size");
    const ArpackApi& a = api();
    int ido = 0;
    int info = 1;  // use the supplied start vector
    const int ldv = n;
    const int lworkl = 3 * ncv * ncv + 6 * ncv;
    std::vector<double> v(static_cast<std::size_t>(n) * ncv), workd(3 * static_cast<std::size_t>(n)),
        workl(static_cast<std::size_t>(lworkl));
    int iparam[11] = {};
    int ipntr[14] = {};
    iparam[0] = 1;  // exact shifts
    iparam[2] = max_restarts;
    iparam[6] = 1;  // regular mode: the caller applies the spectral transformation
    ArpackOutcome out;
    for (;;) {
        a.naupd(&ido, "I", &n, "LM", &nev, &tol, start.data(), &ncv, v.data(), &ldv, iparam, ipntr, workd.data(),
                workl.data(), &lworkl, &info, 1, 2);
        if (ido == -1 || ido == 1) {
            op(&workd[static_cast<std::size_t>(ipntr[0] - 1)], &workd[static_cast<std::size_t>(ipntr[1] - 1)]);
            ++out.applications;
            continue;
        }
        break;
    }
    if (info < 0) throw std::runtime_error("ARPACK dnaupd failed with info = " + std::to_string(info));
    const int rvec = 0;
    std::vector<int> select(static_cast<std::size_t>(ncv));
    std::vector<double> dr(static_cast<std::size_t>(nev) + 1), di(static_cast<std::size_t>(nev) + 1),
        workev(3 * static_cast<std::size_t>(ncv));
    const double sigma = 0.0;
    double z_dummy = 0.0;
    const int ldz = 1;
    int info2 = 0;
    a.neupd(&rvec, "A", select.data(), dr.data(), di.data(), &z_dummy, &ldz, &sigma, &sigma, workev.data(), "I", &n,
            "LM", &nev, &tol, start.data(), &ncv, v.data(), &ldv, iparam, ipntr, workd.data(), workl.data(),
            &lworkl, &info2, 1, 1, 2);
    if (info2 != 0) throw std::runtime_error("ARPACK dneupd failed with info = " + std::to_string(info2));
    out.converged = iparam[4];
    for (int i = 0; i < out.converged; ++i) {
        out.ritz.emplace_back(dr[static_cast<std::size_t>(i)], di[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace frontstab::detail
