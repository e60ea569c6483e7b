#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"

namespace crosskerr {

using cplx = std::complex<double>;
inline constexpr cplx I_UNIT{0.0, 1.0};

/// Neumaier-compensated accumulator. Summation order is the caller's order,
/// so results are reproducible as long as terms arrive in a fixed sequence.
template <class T>
class CompensatedSum {
public:
    void add(T term) {
        if constexpr (std::is_same_v<T, cplx>) {
            re_.add(term.real());
            im_.add(term.imag());
        } else {
            const double t = sum_ + term;
            if (std::abs(sum_) >= std::abs(term))
                comp_ += (sum_ - t) + term;
            else
                comp_ += (term - t) + sum_;
            sum_ = t;
        }
    }
    T value() const {
        if constexpr (std::is_same_v<T, cplx>)
            return {re_.value(), im_.value()};
        else
            return sum_ + comp_;
    }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
    struct Part {
        double s = 0.0, c = 0.0;
        void add(double x) {
            const double t = s + x;
            c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
            s = t;
        }
        double value() const { return s + c; }
    };
    Part re_, im_;
};

/// Runs fn(i) for i in [0, count) on up to `workers` threads and returns the
/// results indexed by i. The output never depends on the worker count.
template <class Fn>
auto parallel_map(std::size_t count, unsigned workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(count);
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
    return out;
}

inline unsigned default_workers() {
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Adaptive Gauss-Kronrod (7/15) integral of f over [a, b] with absolute
/// error target `abs_tol`. Throws NumericalError when the estimate misses it.
template <class F>
auto integrate(F&& f, double a, double b, double abs_tol) -> decltype(f(a)) {
    using R = decltype(f(a));
    if (b == a) return R{};
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    double err = 0.0, l1 = 0.0;
    // A single rule gives the L1 scale that turns the absolute target into
    // the relative tolerance boost expects.
    GK::integrate(f, a, b, 0, 0.0, &err, &l1);
    const double rel = abs_tol / std::max(l1, abs_tol);
    R value = GK::integrate(f, a, b, 30, rel, &err, &l1);
    if (!(err <= abs_tol) && !(err <= 64 * std::numeric_limits<double>::epsilon() * l1)) {
        throw NumericalError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                                 std::to_string(b) + "]: achieved error " + std::to_string(err),
                             err);
    }
    return value;
}

/// Cumulative integrals F(grid[k]) = ∫_{grid[0]}^{grid[k]} f. The absolute
/// error budget is split across intervals in proportion to their length, so
/// every prefix value is within `abs_tol`. Interval pieces are cut at
/// `breaks` (discontinuities of the integrand) before quadrature.
template <class F>
auto cumulative_integral(F&& f, const std::vector<double>& grid, double abs_tol, const std::vector<double>& breaks = {})
    -> std::vector<decltype(f(0.0))> {
    using R = decltype(f(0.0));
    std::vector<R> out(grid.size(), R{});
    if (grid.size() < 2) return out;
    const double span = grid.back() - grid.front();
    R acc{};
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double a = grid[k - 1], b = grid[k];
        const double budget = span > 0 ? abs_tol * (b - a) / span : abs_tol;
        std::vector<double> cuts{a};
        for (double x : breaks)
            if (x > a && x < b) cuts.push_back(x);
        cuts.push_back(b);
        for (std::size_t j = 1; j < cuts.size(); ++j)
            acc += integrate(f, cuts[j - 1], cuts[j], budget * (cuts[j] - cuts[j - 1]) / (b - a));
        out[k] = acc;
    }
    return out;
}

inline std::vector<double> linspace(double start, double stop, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = stop;
        return out;
    }
    for (std::size_t k = 0; k < count; ++k)
        out[k] = k + 1 == count ? stop : start + (stop - start) * static_cast<double>(k) / static_cast<double>(count - 1);
    return out;
}

} // namespace crosskerr
