#pragma once

#include "gnshape/core.hpp"

namespace gnshape {

struct CgSettings {
    int max_iter = 500;
    double rel_tol = 1e-10;
    bool jacobi = true;
};

struct CgReport {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

/// Solves (J'J + eps I) delta = g by a dense LDLT factorization with one step
/// of iterative refinement. With eps = 0 a rank-deficient system is reported
/// rather than silently returning garbage.
template <typename DJ>
VecX gn_direction_dense(const Eigen::MatrixBase<DJ>& J, const VecX& g, double eps) {
    const int p = static_cast<int>(J.cols());
    if (g.size() != p) throw Error("gn_direction_dense: gradient length mismatch");
    const double gnorm = g.norm();
    if (gnorm == 0.0) return VecX::Zero(p);

    MatX a = MatX::Zero(p, p);
    a.template selfadjointView<Eigen::Lower>().rankUpdate(J.adjoint());
    a = a.template selfadjointView<Eigen::Lower>();
    a.diagonal().array() += eps;

    Eigen::LDLT<MatX> ldlt(a);
    VecX delta = ldlt.solve(g);
    delta += ldlt.solve(g - a * delta);  // refinement
    const double rel_res = (a * delta - g).norm() / gnorm;
    if (eps == 0.0 && (ldlt.info() != Eigen::Success || rel_res > 1e-8))
        throw RankDeficiencyError(
            "normal system is singular with eps = 0; use a positive regularization");
    if (!delta.allFinite())
        throw NumericError("dense Gauss-Newton solve produced non-finite direction");
    return delta;
}

/// Preconditioned conjugate gradients on an SPD operator given only as a
/// matrix-vector product. `diag` (when present) supplies the Jacobi
/// preconditioner diagonal.
inline VecX gn_direction_cg(const std::function<VecX(const VecX&)>& matvec, const VecX& g,
                            const CgSettings& cfg, const VecX* diag = nullptr,
                            CgReport* report = nullptr) {
    const int p = static_cast<int>(g.size());
    VecX x = VecX::Zero(p);
    const double gnorm = g.norm();
    CgReport local;
    if (gnorm == 0.0) {
        if (report) *report = local;
        return x;
    }
    auto precond = [&](const VecX& v) -> VecX {
        if (!diag) return v;
        return v.array() / diag->array();
    };

    VecX r = g;
    VecX z = precond(r);
    VecX p_dir = z;
    double rz = r.dot(z);
    const double tol = cfg.rel_tol * gnorm;
    int k = 0;
    for (; k < cfg.max_iter && r.norm() > tol; ++k) {
        const VecX ap = matvec(p_dir);
        if (!ap.allFinite())
            throw NumericError("CG abort: operator returned non-finite values at iteration " +
                               std::to_string(k));
        const double alpha = rz / p_dir.dot(ap);
        x += alpha * p_dir;
        r -= alpha * ap;
        z = precond(r);
        const double rz_new = r.dot(z);
        p_dir = z + (rz_new / rz) * p_dir;
        rz = rz_new;
    }
    local.iterations = k;
    local.rel_residual = r.norm() / gnorm;
    local.converged = r.norm() <= tol;
    if (report) *report = local;
    return x;
}

/// Matrix-free Gramian operator v -> J'(J v) + eps v and its Jacobi diagonal.
template <typename DJ>
std::function<VecX(const VecX&)> gramian_operator(const Eigen::MatrixBase<DJ>& J,
                                                  double eps) {
    const auto& j_ref = J.derived();
    return [&j_ref, eps](const VecX& v) -> VecX {
        return j_ref.adjoint() * (j_ref * v) + eps * v;
    };
}

template <typename DJ>
VecX gramian_jacobi_diagonal(const Eigen::MatrixBase<DJ>& J, double eps) {
    return J.colwise().squaredNorm().transpose().array() + eps;
}

/// Gauss-Newton direction through the push-through identity:
/// delta = J'(eps I_N + J J')^{-1} r, an N x N solve instead of p x p.
/// J J' is accumulated over column blocks (one block per network layer keeps
/// the peak intermediate at N x max-layer-width).
template <typename DJ>
VecX gn_direction_woodbury(const Eigen::MatrixBase<DJ>& J, const VecX& r, double eps,
                           const std::vector<std::pair<int, int>>& column_blocks = {}) {
    if (!(eps > 0.0))
        throw Error("gn_direction_woodbury: the push-through identity requires eps > 0");
    const int n = static_cast<int>(J.rows());
    if (r.size() != n) throw Error("gn_direction_woodbury: residual length mismatch");

    MatX k = MatX::Zero(n, n);
    if (column_blocks.empty()) {
        k.template selfadjointView<Eigen::Lower>().rankUpdate(J.derived());
    } else {
        for (const auto& [offset, len] : column_blocks)
            k.template selfadjointView<Eigen::Lower>().rankUpdate(
                J.derived().middleCols(offset, len));
    }
    k = k.template selfadjointView<Eigen::Lower>();
    k.diagonal().array() += eps;
    const VecX y = Eigen::LDLT<MatX>(k).solve(r);
    VecX delta = J.adjoint() * y;
    if (!delta.allFinite())
        throw NumericError("Woodbury solve produced non-finite direction");
    return delta;
}

}  // namespace gnshape
