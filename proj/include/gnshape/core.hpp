#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gnshape {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Field or residual produced a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A residual or projection needed a surface normal where ‖∇f‖ fell below
/// the gradient floor. Carries the offending point.
class DegenerateGradientError : public Error {
public:
    DegenerateGradientError(const std::string& what, const Vec3& point)
        : Error(what), point_(point) {}
    const Vec3& point() const { return point_; }

private:
    Vec3 point_;
};

/// Level-set sampling produced zero converged points.
class EmptySurfaceError : public Error {
public:
    using Error::Error;
};

class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

class LineSearchError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

constexpr double kGradientFloor = 1e-8;

/// splitmix64 finalizer; used to derive independent RNG streams from
/// (seed, iteration, term index) tuples.
inline std::uint64_t mix_bits(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return mix_bits(a ^ mix_bits(b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

namespace detail {
inline int& thread_count_slot() {
    static int count = static_cast<int>(std::thread::hardware_concurrency());
    return count;
}
}  // namespace detail

inline void set_thread_count(int n) { detail::thread_count_slot() = n > 0 ? n : 1; }
inline int thread_count() { return detail::thread_count_slot() > 0 ? detail::thread_count_slot() : 1; }

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
/// thread; each index must write only to its own output slot so the result is
/// independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t threads =
        std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    if (threads <= 1 || n < 32) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gnshape
