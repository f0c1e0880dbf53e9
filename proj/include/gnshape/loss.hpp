#pragma once

#include <optional>

#include "gnshape/sampling.hpp"

namespace gnshape {

/// One weighted residual energy: what to penalize, where to sample it, and
/// how many points per iteration. The weight is the reweighted
/// lambda-tilde = lambda * |domain| of the Monte Carlo quadrature; domain
/// measures are folded into it.
struct LossTerm {
    ResidualKind kind;
    double weight = 1.0;
    Sampler domain;
    int n_samples = 0;
    double clip_cap = std::numeric_limits<double>::infinity();
    std::function<double(const Vec3&)> target_value_fn;  // Supervised targets

    void validate() const {
        if (!(weight > 0.0) || !std::isfinite(weight))
            throw Error("LossTerm: weight must be finite and positive");
        if (n_samples < 1) throw Error("LossTerm: n_samples must be >= 1");
        if (kind == ResidualKind::Supervised && !target_value_fn)
            throw Error("LossTerm: supervised term needs a target function");
    }
};

namespace detail {

inline int jet_channels(ResidualKind kind) {
    if (kind_is_curvature(kind)) return 13;
    if (kind == ResidualKind::Eikonal || kind == ResidualKind::Normal) return 4;
    return 1;
}

inline SampleBatch draw_batch(const LossTerm& term, const Field& field, std::uint64_t seed) {
    SampleBatch batch;
    batch.requested = term.n_samples;
    std::mt19937_64 rng(seed);

    if (const auto* box = std::get_if<BoxDomain>(&term.domain)) {
        batch.points = sample_box(box->box, term.n_samples, rng);
    } else if (const auto* rej = std::get_if<RejectionDomain>(&term.domain)) {
        rej->box.validate();
        batch.points.reserve(static_cast<std::size_t>(term.n_samples));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int i = 0; i < term.n_samples; ++i) {
            bool found = false;
            for (int a = 0; a < rej->max_attempts_per_point; ++a) {
                Vec3 p;
                for (int k = 0; k < 3; ++k)
                    p[k] = rej->box.lo[k] + unit(rng) * (rej->box.hi[k] - rej->box.lo[k]);
                if (rej->keep(p)) {
                    batch.points.push_back(p);
                    found = true;
                    break;
                }
            }
            if (!found)
                throw Error("rejection sampler exhausted attempts; region may be empty");
        }
    } else if (const auto* curves = std::get_if<CurveDomain>(&term.domain)) {
        if (curves->curves.empty()) throw Error("curve sampler has no curves");
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> pick(0, curves->curves.size() - 1);
        batch.points.reserve(static_cast<std::size_t>(term.n_samples));
        for (int i = 0; i < term.n_samples; ++i)
            batch.points.push_back(curves->curves[pick(rng)].point(unit(rng)));
    } else if (const auto* level = std::get_if<LevelSetDomain>(&term.domain)) {
        batch = sample_level_set(field, *level, term.n_samples, seed);
    } else if (const auto* cloud_dom = std::get_if<CloudDomain>(&term.domain)) {
        const auto& cloud = *cloud_dom->cloud;
        if (cloud.points.empty()) throw Error("cloud sampler has no points");
        const std::size_t m = cloud.points.size();
        std::vector<std::size_t> idx;
        if (static_cast<std::size_t>(term.n_samples) >= m) {
            idx.resize(m);
            for (std::size_t i = 0; i < m; ++i) idx[i] = i;
        } else {
            // partial Fisher-Yates: deterministic subset without replacement
            std::vector<std::size_t> all(m);
            for (std::size_t i = 0; i < m; ++i) all[i] = i;
            for (int i = 0; i < term.n_samples; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, m - 1);
                std::swap(all[static_cast<std::size_t>(i)], all[pick(rng)]);
            }
            idx.assign(all.begin(), all.begin() + term.n_samples);
        }
        batch.points.reserve(idx.size());
        batch.metas.resize(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            batch.points.push_back(cloud.points[idx[i]]);
            batch.metas[i].target_normal = cloud.normals[idx[i]];
        }
    }

    if (batch.metas.size() != batch.points.size()) batch.metas.resize(batch.points.size());
    const bool outside = std::holds_alternative<RejectionDomain>(term.domain);
    for (std::size_t i = 0; i < batch.points.size(); ++i) {
        batch.metas[i].point = batch.points[i];
        if (outside) batch.metas[i].outside_design_region = true;
        if (term.kind == ResidualKind::Supervised)
            batch.metas[i].target_value = term.target_value_fn(batch.points[i]);
    }
    return batch;
}

}  // namespace detail

/// Draws fresh batches for every term at the current parameters. Moving
/// (level-set) domains are reprojected; their batches carry the diagnostic
/// mean of the squared pointwise residual, whose smallness justifies
/// neglecting the domain-transport term of the gradient.
inline std::vector<SampleBatch> resample_iteration(const std::vector<LossTerm>& terms,
                                                   const Field& field, std::uint64_t seed,
                                                   std::uint64_t iteration) {
    std::vector<SampleBatch> batches;
    batches.reserve(terms.size());
    for (std::size_t t = 0; t < terms.size(); ++t) {
        terms[t].validate();
        SampleBatch batch =
            detail::draw_batch(terms[t], field, mix_seed(seed, iteration, t));
        if (batch.moving_domain) {
            double acc = 0.0;
            for (std::size_t i = 0; i < batch.points.size(); ++i) {
                const Jet2 jet = field.jet2(batch.points[i]);
                const PointResidual r = residual_at(terms[t].kind, jet, batch.metas[i]);
                for (int e = 0; e < r.count; ++e) acc += r.values[e] * r.values[e];
            }
            batch.mean_sq_residual = acc / static_cast<double>(batch.points.size());
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TermBlock {
    int offset = 0;
    int rows = 0;
    ResidualKind kind;
};

/// Stacked residual vector (and optionally its Jacobian) across all terms,
/// with each block scaled by sqrt(weight / N_i) so that loss = |r|^2 / 2 and
/// grad = J^T r.
struct ResidualEval {
    VecX r;
    std::optional<MatRM> jacobian;
    std::vector<TermBlock> blocks;

    double loss() const { return 0.5 * r.squaredNorm(); }

    double term_loss(std::size_t t) const {
        const TermBlock& b = blocks.at(t);
        return 0.5 * r.segment(b.offset, b.rows).squaredNorm();
    }

    VecX gradient() const {
        if (!jacobian) throw Error("ResidualEval: gradient requires the Jacobian");
        return jacobian->transpose() * r;
    }
};

/// Evaluates all terms on the given batches. Each batch must have been drawn
/// at the field's current parameters (moving domains resampled this
/// iteration). Clipped entries contribute zero Jacobian rows.
inline ResidualEval eval_residuals(const std::vector<LossTerm>& terms,
                                   const NeuralField& field,
                                   const std::vector<SampleBatch>& batches,
                                   bool want_jacobian,
                                   double gradient_floor = kGradientFloor) {
    if (terms.size() != batches.size())
        throw Error("eval_residuals: one batch per term required");

    ResidualEval eval;
    int total_rows = 0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const int entries = terms[t].kind == ResidualKind::SurfaceStrain ? 2 : 1;
        const int rows = entries * static_cast<int>(batches[t].points.size());
        eval.blocks.push_back({total_rows, rows, terms[t].kind});
        total_rows += rows;
    }
    eval.r = VecX::Zero(total_rows);
    if (want_jacobian) eval.jacobian = MatRM::Zero(total_rows, field.param_count());

    for (std::size_t t = 0; t < terms.size(); ++t) {
        const LossTerm& term = terms[t];
        const SampleBatch& batch = batches[t];
        if (batch.points.empty()) continue;
        const int entries = term.kind == ResidualKind::SurfaceStrain ? 2 : 1;
        const double scale =
            std::sqrt(term.weight / static_cast<double>(batch.points.size()));
        const int offset = eval.blocks[t].offset;
        const int channels = detail::jet_channels(term.kind);

        parallel_for(batch.points.size(), [&](std::size_t i) {
            try {
                NeuralField::Trace trace;
                const Jet2 jet = field.jet2_traced(batch.points[i], trace, channels);
                const PointResidual res =
                    residual_at(term.kind, jet, batch.metas[i], gradient_floor);
                PointSeeds seeds;
                if (want_jacobian)
                    seeds = residual_seeds(term.kind, jet, batch.metas[i], gradient_floor);
                for (int e = 0; e < res.count; ++e) {
                    const int row = offset + static_cast<int>(i) * entries + e;
                    const double clipped = clip_residual(res.values[e], term.clip_cap);
                    eval.r[row] = scale * clipped;
                    if (want_jacobian && !clip_active(res.values[e], term.clip_cap)) {
                        JetSeed seed = seeds.seeds[e];
                        seed.d_value *= scale;
                        seed.d_grad *= scale;
                        seed.d_hess *= scale;
                        Eigen::Map<VecX> row_map(
                            eval.jacobian->data() +
                                static_cast<std::ptrdiff_t>(row) * field.param_count(),
                            field.param_count());
                        field.param_gradient_into(trace, seed, row_map);
                    }
                }
            } catch (const DegenerateGradientError& e) {
                throw DegenerateGradientError("term " + std::to_string(t) + " (" +
                                                  kind_name(term.kind) + ") sample " +
                                                  std::to_string(i) + ": " + e.what(),
                                              e.point());
            }
        });
    }
    return eval;
}

}  // namespace gnshape
