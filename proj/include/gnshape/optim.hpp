#pragma once

#include <chrono>
#include <deque>

#include "gnshape/loss.hpp"
#include "gnshape/solvers.hpp"

namespace gnshape {

struct GnConfig {
    double epsilon = 1e-6;

    enum class Solver { DenseQR, ConjugateGradient, Woodbury };
    Solver solver = Solver::DenseQR;
    CgSettings cg;
    int woodbury_max_rows = 8192;

    enum class Step { Fixed, LogLineSearch };
    Step step = Step::Fixed;
    double eta = 0.1;
    double eta_min = 1e-4;
    double eta_max = 1.0;
    int eta_count = 9;

    void validate() const {
        if (epsilon < 0.0) throw Error("GnConfig: epsilon must be >= 0");
        if (step == Step::LogLineSearch) {
            if (!(eta_min < eta_max)) throw Error("GnConfig: need eta_min < eta_max");
            if (!(eta_min > 0.0)) throw Error("GnConfig: eta_min must be positive");
            if (eta_count < 2) throw Error("GnConfig: line search needs >= 2 candidates");
        }
    }
};

struct StepReport {
    double loss_before = 0.0;
    double loss_after = 0.0;
    double eta_used = 0.0;
    int solver_iterations = 0;
    double direction_norm = 0.0;
    double wall_time_s = 0.0;
    bool fallback_steepest = false;
};

struct LineSearchResult {
    double eta = 0.0;
    double loss = 0.0;
};

/// Evaluates loss_fn on count candidates equidistant in log-space between
/// eta_min and eta_max and returns the argmin. Non-finite candidates are
/// excluded; ties break toward the larger eta.
template <typename LossFn>
LineSearchResult line_search_log(LossFn&& loss_fn, double eta_min, double eta_max,
                                 int count) {
    if (count < 2) throw Error("line_search_log: count must be >= 2");
    if (!(eta_min > 0.0 && eta_min < eta_max))
        throw Error("line_search_log: need 0 < eta_min < eta_max");
    const double ratio = eta_max / eta_min;
    LineSearchResult best;
    bool any = false;
    for (int j = 0; j < count; ++j) {
        const double eta =
            eta_min * std::pow(ratio, static_cast<double>(j) / (count - 1));
        const double loss = loss_fn(eta);
        if (!std::isfinite(loss)) continue;
        if (!any || loss <= best.loss) {
            best.eta = eta;
            best.loss = loss;
            any = true;
        }
    }
    if (!any) throw LineSearchError("no line-search candidate produced a finite loss");
    return best;
}

namespace detail {

struct SolveOutcome {
    VecX delta;
    int iterations = 0;
};

inline SolveOutcome solve_direction(const GnConfig& cfg, const MatRM& jac, const VecX& r,
                                    const VecX& g,
                                    const std::vector<std::pair<int, int>>& blocks) {
    SolveOutcome out;
    switch (cfg.solver) {
        case GnConfig::Solver::DenseQR:
            out.delta = gn_direction_dense(jac, g, cfg.epsilon);
            return out;
        case GnConfig::Solver::ConjugateGradient: {
            const VecX diag = gramian_jacobi_diagonal(jac, cfg.epsilon);
            CgReport report;
            out.delta = gn_direction_cg(gramian_operator(jac, cfg.epsilon), g, cfg.cg,
                                        cfg.cg.jacobi ? &diag : nullptr, &report);
            out.iterations = report.iterations;
            return out;
        }
        case GnConfig::Solver::Woodbury:
            if (jac.rows() > cfg.woodbury_max_rows)
                throw Error("Woodbury solver: residual count " +
                            std::to_string(jac.rows()) + " exceeds configured limit " +
                            std::to_string(cfg.woodbury_max_rows));
            out.delta = gn_direction_woodbury(jac, r, cfg.epsilon, blocks);
            return out;
    }
    throw Error("unreachable");
}

}  // namespace detail

struct GnStepResult {
    NeuralField field;
    StepReport report;
    std::vector<SampleBatch> batches;
};

/// One regularized Gauss-Newton iteration: resample all domains at the current
/// parameters, assemble the scaled residual and Jacobian, solve for the
/// direction, pick the step length (fixed or by log line search on this
/// iteration's own batch), and apply theta' = theta - eta * delta.
inline GnStepResult gn_step(const std::vector<LossTerm>& terms, const NeuralField& field,
                            const GnConfig& cfg, std::uint64_t seed,
                            std::uint64_t iteration) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    GnStepResult result{field, {}, resample_iteration(terms, field, seed, iteration)};
    const ResidualEval eval = eval_residuals(terms, field, result.batches, true);
    const VecX g = eval.gradient();
    const auto solve =
        detail::solve_direction(cfg, *eval.jacobian, eval.r, g, field.layer_blocks());

    auto loss_at = [&](double eta) -> double {
        try {
            const VecX theta = field.params() - eta * solve.delta;
            return eval_residuals(terms, field.with_params(theta), result.batches, false)
                .loss();
        } catch (const Error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    double eta, loss_after;
    if (cfg.step == GnConfig::Step::Fixed) {
        eta = cfg.eta;
        loss_after = loss_at(eta);
        if (!std::isfinite(loss_after))
            throw DivergenceError("fixed-step Gauss-Newton produced a non-finite loss");
    } else {
        const auto ls = line_search_log(loss_at, cfg.eta_min, cfg.eta_max, cfg.eta_count);
        eta = ls.eta;
        loss_after = ls.loss;
    }

    result.field = field.with_params(field.params() - eta * solve.delta);
    result.report.loss_before = eval.loss();
    result.report.loss_after = loss_after;
    result.report.eta_used = eta;
    result.report.solver_iterations = solve.iterations;
    result.report.direction_norm = solve.delta.norm();
    result.report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

struct AdamState {
    VecX m, v;
    long t = 0;

    void ensure(int p) {
        if (m.size() != p) {
            m = VecX::Zero(p);
            v = VecX::Zero(p);
            t = 0;
        }
    }
};

inline VecX adam_step(const VecX& theta, const VecX& g, AdamState& state, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    state.ensure(static_cast<int>(theta.size()));
    state.t += 1;
    state.m = beta1 * state.m + (1.0 - beta1) * g;
    state.v = beta2 * state.v + (1.0 - beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    const VecX m_hat = state.m / bc1;
    const VecX v_hat = state.v / bc2;
    return theta - lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
}

struct LbfgsOptions {
    int memory = 10;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double init_step = 1.0;
    int max_backtracks = 30;
};

struct LbfgsState {
    std::deque<std::pair<VecX, VecX>> history;  // (s, y) pairs
    VecX last_theta, last_grad;
    bool has_last = false;

    void reset() {
        history.clear();
        has_last = false;
    }
};

namespace detail {

inline VecX lbfgs_two_loop(const std::deque<std::pair<VecX, VecX>>& history,
                           const VecX& g) {
    VecX q = g;
    std::vector<double> alpha(history.size());
    std::vector<double> rho(history.size());
    for (std::size_t i = history.size(); i-- > 0;) {
        const auto& [s, y] = history[i];
        rho[i] = 1.0 / y.dot(s);
        alpha[i] = rho[i] * s.dot(q);
        q -= alpha[i] * y;
    }
    if (!history.empty()) {
        const auto& [s, y] = history.back();
        q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& [s, y] = history[i];
        const double beta = rho[i] * y.dot(q);
        q += (alpha[i] - beta) * history[i].first;
    }
    return q;
}

}  // namespace detail

/// One LBFGS iteration against loss_grad_fn (bound to the current batch). The
/// two-loop direction is guarded: non-descent directions fall back to steepest
/// descent (reported), and curvature pairs with s'y <= 0 are skipped. Step
/// length by Armijo backtracking.
template <typename LossGradFn>
std::pair<VecX, StepReport> lbfgs_step(const VecX& theta, LossGradFn&& loss_grad_fn,
                                       LbfgsState& state,
                                       const LbfgsOptions& options = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    auto [f0, g0] = loss_grad_fn(theta);

    if (state.has_last) {
        const VecX s = theta - state.last_theta;
        const VecX y = g0 - state.last_grad;
        if (s.dot(y) > 1e-14 * s.norm() * y.norm())
            state.history.emplace_back(s, y);
        while (state.history.size() > static_cast<std::size_t>(options.memory))
            state.history.pop_front();
    }

    StepReport report;
    report.loss_before = f0;

    VecX d = detail::lbfgs_two_loop(state.history, g0);
    if (d.dot(g0) <= 0.0) {
        d = g0;
        report.fallback_steepest = true;
    }

    const double slope = g0.dot(d);
    double alpha = options.init_step;
    double best_alpha = 0.0;
    double best_loss = f0;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
        double f = std::numeric_limits<double>::quiet_NaN();
        try {
            f = loss_grad_fn(theta - alpha * d).first;
        } catch (const Error&) {
        }
        if (std::isfinite(f) && f < best_loss) {
            best_loss = f;
            best_alpha = alpha;
        }
        if (std::isfinite(f) && f <= f0 - options.armijo_c * alpha * slope) break;
        alpha *= options.backtrack;
    }

    state.last_theta = theta;
    state.last_grad = g0;
    state.has_last = true;

    const VecX theta_next = theta - best_alpha * d;
    report.loss_after = best_loss;
    report.eta_used = best_alpha;
    report.direction_norm = d.norm();
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {theta_next, report};
}

struct PretrainConfig {
    int iters = 200;
    int n_samples = 2048;
    GnConfig gn;
    std::uint64_t seed = 0;
    double divergence_threshold = 1e10;

    PretrainConfig() {
        gn.step = GnConfig::Step::LogLineSearch;
        gn.eta_min = 1e-3;
        gn.eta_max = 1.0;
        gn.eta_count = 7;
    }
};

struct PretrainReport {
    double final_loss = 0.0;
    double mean_abs_error = 0.0;
    int iterations = 0;
};

/// Supervised fit of the field against an analytic SDF over the box. Returns
/// the fitted field and the mean absolute error on a fresh evaluation batch.
inline std::pair<NeuralField, PretrainReport> pretrain(
    const NeuralField& init, const std::function<double(const Vec3&)>& target,
    const BoxBounds& box, const PretrainConfig& cfg) {
    LossTerm term;
    term.kind = ResidualKind::Supervised;
    term.n_samples = cfg.n_samples;
    term.target_value_fn = target;
    BoxDomain domain;
    domain.box = box;
    term.domain = domain;

    NeuralField field = init;
    PretrainReport report;
    for (int k = 1; k <= cfg.iters; ++k) {
        auto step = gn_step({term}, field, cfg.gn, mix_seed(cfg.seed, 0x9e77), k);
        if (!std::isfinite(step.report.loss_after) ||
            step.report.loss_after > cfg.divergence_threshold)
            throw DivergenceError("pretraining diverged at iteration " + std::to_string(k));
        field = std::move(step.field);
        report.final_loss = step.report.loss_after;
        report.iterations = k;
    }

    const auto eval_pts = sample_box(box, 4096, mix_seed(cfg.seed, 0xe7a1));
    double acc = 0.0;
    for (const auto& x : eval_pts) acc += std::abs(field.eval(x) - target(x));
    report.mean_abs_error = acc / static_cast<double>(eval_pts.size());
    return {std::move(field), report};
}

}  // namespace gnshape
