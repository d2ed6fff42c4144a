// pscatter: shared basics -- aliases, constants, tolerances, summation, threads.
#pragma once

#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <charconv>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pscatter {

using cplx = std::complex<double>;

inline constexpr double pi      = 3.14159265358979323846264338327950288;
inline constexpr double two_pi  = 2.0 * pi;
inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;
// positive root of the digamma function, Gamma'(x)/Gamma(x) = 0
inline constexpr double digamma_positive_root = 1.4616321449683623413;
inline constexpr double inf = std::numeric_limits<double>::infinity();

// Central tolerance knobs.  Every hard-coded threshold used by the library
// lives here so tests and callers agree on the contract.
namespace tol {
inline constexpr double det_tol            = 1e-9;   // |det - 1| for group generators
inline constexpr double psl_quantum        = 1e-9;   // entry quantization for PSL(2,R) dedup
inline constexpr double fix_tol            = 1e-9;   // d(gz0,z0) below this => stabilizer element
inline constexpr double length_cluster     = 1e-8;   // orbit lengths closer than this merge
inline constexpr double green_margin       = 1e-3;   // require Im rho <= -1/2 - margin
inline constexpr double green_abs          = 1e-12;  // absolute quadrature target per Green value
inline constexpr double c0_tail_tol        = 1e-10;  // orbit tail allowed in c0 (alpha-based contexts)
inline constexpr double singular_coupling  = 1e-10;  // |denominator| of beta(alpha) below this => error
inline constexpr double pole_tol           = 1e-8;   // refusal distance to spectral poles, in rho
inline constexpr double bisect_tol         = 1e-12;  // eigenvalue bisection width, in lambda
inline constexpr double denom_residual     = 1e-12;  // |1 + m beta psi| at the located zero
inline constexpr double spline_tol         = 1e-9;   // transform interpolation budget
inline constexpr double identity_imag      = 1e-9;   // allowed imaginary residue of identity term
inline constexpr double ratio_max          = 0.9;    // contraction ratio accepted by select_sigma
inline constexpr double sigma_cap          = 1e3;    // hard cap on the selected contour depth
inline constexpr int    bracket_expand_max = 60;     // ground-state bracket expands to -2^k, k<=this
}

// value + attached truncation/tail estimate (absolute)
template <class T>
struct ValueWithTail {
    T value{};
    double tail = 0.0;
};

// ---- compensated accumulation ------------------------------------------

// Neumaier variant of Kahan summation; deterministic for a fixed visit order.
struct CompensatedSum {
    double s = 0.0, c = 0.0;
    void add(double x) {
        double t = s + x;
        if (std::abs(s) >= std::abs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
    double result() const { return s + c; }
};

struct CompensatedSumC {
    CompensatedSum re, im;
    void add(const cplx& z) { re.add(z.real()); im.add(z.imag()); }
    cplx result() const { return {re.result(), im.result()}; }
};

// ---- numeric text formatting --------------------------------------------

// 17 significant digits: doubles round-trip exactly through this format.
inline std::string fmt_g17(double x) {
    if (x == inf)  return "inf";
    if (x == -inf) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double parse_double_strict(const std::string& tok, const char* what) {
    if (tok == "inf")  return inf;
    if (tok == "-inf") return -inf;
    double v = 0.0;
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e)
        throw std::invalid_argument(std::string("could not parse ") + what + ": '" + tok + "'");
    return v;
}

inline long parse_long_strict(const std::string& tok, const char* what) {
    long v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
        throw std::invalid_argument(std::string("could not parse ") + what + ": '" + tok + "'");
    return v;
}

// ---- threading ------------------------------------------------------------

// Thread count comes from PSCATTER_THREADS only (default 1); results must not
// depend on it, so parallel loops write into preallocated slots.
inline unsigned thread_count() {
    if (const char* s = std::getenv("PSCATTER_THREADS")) {
        long n = std::strtol(s, nullptr, 10);
        if (n >= 1 && n <= 256) return static_cast<unsigned>(n);
    }
    return 1;
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& body) {
    unsigned nt = thread_count();
    if (nt <= 1 || n < 2 * nt) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

// ---- tiny deterministic RNG (xoshiro-free: std::mt19937_64 bits only) -----

// Distributions are hand-mapped from raw bits so streams are identical across
// standard libraries.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
    std::uint64_t next_u64() {  // splitmix64
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // uniform in [0,1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    // exponential with given mean, by inversion
    double exponential(double mean) {
        double u;
        do { u = uniform(); } while (u <= 0.0);
        return -mean * std::log1p(-u);
    }
};

}  // namespace pscatter
