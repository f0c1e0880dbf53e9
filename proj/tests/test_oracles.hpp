#pragma once

// Test-only oracles: finite differences, brute-force reference computations.
// These deliberately use only black-box eval()/jet2() calls so they stay
// independent of the differentiation paths they check.

#include <functional>

#include "gnshape/field.hpp"

namespace gnshape::testing {

inline Vec3 grad_fd(const Field& f, const Vec3& x, double h = 1e-4) {
    Vec3 g;
    for (int k = 0; k < 3; ++k) {
        Vec3 hi = x, lo = x;
        hi[k] += h;
        lo[k] -= h;
        g[k] = (f.eval(hi) - f.eval(lo)) / (2.0 * h);
    }
    return g;
}

inline Mat3 hess_fd(const Field& f, const Vec3& x, double h = 1e-3) {
    Mat3 H;
    const double f0 = f.eval(x);
    for (int k = 0; k < 3; ++k) {
        Vec3 hi = x, lo = x;
        hi[k] += h;
        lo[k] -= h;
        H(k, k) = (f.eval(hi) - 2.0 * f0 + f.eval(lo)) / (h * h);
    }
    for (int k = 0; k < 3; ++k)
        for (int m = k + 1; m < 3; ++m) {
            Vec3 pp = x, pm = x, mp = x, mm = x;
            pp[k] += h;
            pp[m] += h;
            pm[k] += h;
            pm[m] -= h;
            mp[k] -= h;
            mp[m] += h;
            mm[k] -= h;
            mm[m] -= h;
            H(k, m) = (f.eval(pp) - f.eval(pm) - f.eval(mp) + f.eval(mm)) / (4.0 * h * h);
            H(m, k) = H(k, m);
        }
    return H;
}

/// Central finite differences in theta of an arbitrary scalar of the jet.
inline VecX theta_grad_fd(const NeuralField& field,
                          const std::function<double(const Jet2&)>& scalar, const Vec3& x,
                          double h = 1e-6) {
    const VecX& theta = field.params();
    VecX g(theta.size());
    for (int i = 0; i < theta.size(); ++i) {
        const double step = h * std::max(1.0, std::abs(theta[i]));
        VecX hi = theta, lo = theta;
        hi[i] += step;
        lo[i] -= step;
        g[i] = (scalar(field.with_params(hi).jet2(x)) -
                scalar(field.with_params(lo).jet2(x))) /
               (2.0 * step);
    }
    return g;
}

inline double rel_err(double got, double want, double floor = 1e-12) {
    return std::abs(got - want) / std::max(std::abs(want), floor);
}

inline double rel_err(const VecX& got, const VecX& want, double floor = 1e-12) {
    return (got - want).norm() / std::max(want.norm(), floor);
}

}  // namespace gnshape::testing
