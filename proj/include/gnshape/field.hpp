#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <utility>

#include "gnshape/core.hpp"

namespace gnshape {

enum class Activation { Tanh, Sine };

/// MLP architecture of the scalar field f: R^3 -> R.
struct FieldSpec {
    std::vector<int> layer_widths;  // first must be 3, last must be 1
    Activation activation = Activation::Tanh;
    double omega = 30.0;  // Sine frequency, ignored for Tanh
    std::uint64_t init_seed = 0;

    void validate() const {
        if (layer_widths.size() < 3)
            throw Error("FieldSpec: need at least one hidden layer");
        if (layer_widths.front() != 3 || layer_widths.back() != 1)
            throw Error("FieldSpec: widths must start at 3 and end at 1");
        for (int w : layer_widths)
            if (w < 1) throw Error("FieldSpec: widths must be >= 1");
        if (activation == Activation::Sine && !(omega > 0.0))
            throw Error("FieldSpec: sine frequency must be positive");
    }

    int layer_count() const { return static_cast<int>(layer_widths.size()) - 1; }

    int param_count() const {
        int p = 0;
        for (int l = 0; l < layer_count(); ++l)
            p += layer_widths[l] * layer_widths[l + 1] + layer_widths[l + 1];
        return p;
    }
};

/// Second-order spatial jet of a scalar field at a point.
struct Jet2 {
    double value = 0.0;
    Vec3 grad = Vec3::Zero();
    Mat3 hess = Mat3::Zero();
};

/// Linearization of a scalar function of a Jet2, used to seed the reverse
/// pass: d(seed)/d(value), d(seed)/d(grad), d(seed)/d(hess).
struct JetSeed {
    double d_value = 0.0;
    Vec3 d_grad = Vec3::Zero();
    Mat3 d_hess = Mat3::Zero();

    bool touches_grad() const { return !d_grad.isZero(0.0) || touches_hess(); }
    bool touches_hess() const { return !d_hess.isZero(0.0); }
};

class Field {
public:
    virtual ~Field() = default;
    virtual double eval(const Vec3& x) const = 0;
    virtual Jet2 jet2(const Vec3& x) const = 0;
};

/// Closed-form field defined by a jet function. Used for analytic SDFs and
/// implicit ground-truth gauges.
class AnalyticField final : public Field {
public:
    explicit AnalyticField(std::function<Jet2(const Vec3&)> jet_fn)
        : jet_fn_(std::move(jet_fn)) {}

    // Only the value must be finite here: closed-form SDFs have well-defined
    // values on the medial axis where the derivatives blow up.
    double eval(const Vec3& x) const override {
        const double v = jet_fn_(x).value;
        if (!std::isfinite(v)) throw NumericError("analytic field value is non-finite");
        return v;
    }

    Jet2 jet2(const Vec3& x) const override {
        Jet2 j = jet_fn_(x);
        if (!std::isfinite(j.value) || !j.grad.allFinite() || !j.hess.allFinite())
            throw NumericError("analytic field produced a non-finite jet");
        return j;
    }

private:
    std::function<Jet2(const Vec3&)> jet_fn_;
};

namespace detail {

// Activation value and first three derivatives at z.
struct ActDerivs {
    double s0, s1, s2, s3;
};

inline ActDerivs act_derivs(Activation act, double omega, double z) {
    ActDerivs d;
    if (act == Activation::Tanh) {
        const double t = std::tanh(z);
        d.s0 = t;
        d.s1 = 1.0 - t * t;
        d.s2 = -2.0 * t * d.s1;
        d.s3 = -2.0 * (d.s1 * d.s1 + t * d.s2);
    } else {
        const double c = std::cos(omega * z);
        const double s = std::sin(omega * z);
        d.s0 = s;
        d.s1 = omega * c;
        d.s2 = -omega * omega * s;
        d.s3 = -omega * omega * omega * c;
    }
    return d;
}

}  // namespace detail

/// Fully connected scalar field with exact spatial jets and exact parameter
/// gradients of any scalar built from a jet.
///
/// Parameter layout (flat theta of length param_count()): all weight matrices
/// in layer order, each row-major (out x in), followed by all bias vectors in
/// layer order. Hidden layers apply the activation; the final layer is affine.
///
/// The jet is propagated as a width x C channel matrix: column 0 holds values,
/// columns 1..3 the spatial gradient, columns 4..12 the row-major Hessian.
/// C in {1, 4, 13} selects how many derivative channels are carried; the
/// reverse pass reuses the same layout to push adjoints back onto (W, b).
class NeuralField final : public Field {
public:
    NeuralField(FieldSpec spec, VecX theta) : spec_(std::move(spec)) {
        spec_.validate();
        if (theta.size() != spec_.param_count())
            throw Error("NeuralField: theta has wrong length");
        theta_ = std::move(theta);
        unpack();
    }

    /// Deterministic initialization. Tanh layers use Glorot uniform bounds
    /// sqrt(6/(fan_in+fan_out)); sine layers use the frequency-scaled scheme
    /// (first layer +-1/fan_in, later layers +-sqrt(6/fan_in)/omega).
    /// Biases start at zero.
    static VecX init_params(const FieldSpec& spec, std::uint64_t seed) {
        spec.validate();
        VecX theta = VecX::Zero(spec.param_count());
        std::mt19937_64 rng(seed);
        int offset = 0;
        for (int l = 0; l < spec.layer_count(); ++l) {
            const int fan_in = spec.layer_widths[l];
            const int fan_out = spec.layer_widths[l + 1];
            double bound;
            if (spec.activation == Activation::Tanh) {
                bound = std::sqrt(6.0 / (fan_in + fan_out));
            } else if (l == 0) {
                bound = 1.0 / fan_in;
            } else {
                bound = std::sqrt(6.0 / fan_in) / spec.omega;
            }
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (int i = 0; i < fan_out * fan_in; ++i) theta[offset + i] = dist(rng);
            offset += fan_out * fan_in;
        }
        // biases stay zero
        return theta;
    }

    const FieldSpec& spec() const { return spec_; }
    const VecX& params() const { return theta_; }
    int param_count() const { return static_cast<int>(theta_.size()); }

    NeuralField with_params(VecX theta) const { return NeuralField(spec_, std::move(theta)); }

    double eval(const Vec3& x) const override {
        VecX a = x;
        for (int l = 0; l < spec_.layer_count(); ++l) {
            VecX z = W_[l] * a + b_[l];
            if (l + 1 < spec_.layer_count())
                for (int i = 0; i < z.size(); ++i) z[i] = activate(z[i]);
            a = std::move(z);
        }
        const double value = a[0];
        if (!std::isfinite(value))
            throw NumericError("neural field evaluation overflowed");
        return value;
    }

    Jet2 jet2(const Vec3& x) const override {
        Trace scratch;
        return jet2_traced(x, scratch, 13);
    }

    /// Per-point cache of the forward jet propagation, consumed by
    /// param_gradient_into. `inputs[l]` is the channel matrix entering affine
    /// layer l; `pre[l]` its pre-activation output.
    struct Trace {
        std::vector<MatX> inputs;
        std::vector<MatX> pre;
        int cols = 0;
    };

    /// Forward jet propagation carrying `cols` channels (1: value, 4: value +
    /// gradient, 13: value + gradient + Hessian).
    Jet2 jet2_traced(const Vec3& x, Trace& trace, int cols = 13) const {
        if (cols != 1 && cols != 4 && cols != 13)
            throw Error("jet2_traced: cols must be 1, 4, or 13");
        const int layers = spec_.layer_count();
        trace.cols = cols;
        trace.inputs.resize(layers);
        trace.pre.resize(layers);

        MatX state = MatX::Zero(3, cols);
        state.col(0) = x;
        if (cols >= 4) state.block<3, 3>(0, 1).setIdentity();

        for (int l = 0; l < layers; ++l) {
            trace.inputs[l] = state;
            // The value channel uses the same gemv expression as eval() so the
            // two paths agree bitwise.
            const VecX value_in = state.col(0);
            const VecX value_out = W_[l] * value_in + b_[l];
            MatX z(W_[l].rows(), cols);
            z.col(0) = value_out;
            if (cols > 1) z.rightCols(cols - 1) = W_[l] * state.rightCols(cols - 1);
            trace.pre[l] = z;
            if (l + 1 == layers) {
                state = std::move(z);
                break;
            }
            state.resize(z.rows(), cols);
            for (int i = 0; i < z.rows(); ++i)
                apply_activation_row(z, state, i, cols);
        }

        Jet2 out;
        out.value = state(0, 0);
        if (cols >= 4) out.grad = state.row(0).segment<3>(1).transpose();
        if (cols == 13)
            for (int k = 0; k < 3; ++k)
                for (int m = 0; m < 3; ++m) out.hess(k, m) = state(0, 4 + 3 * k + m);
        if (!std::isfinite(out.value) || !out.grad.allFinite() || !out.hess.allFinite())
            throw NumericError("neural field jet evaluation overflowed");
        return out;
    }

    /// Accumulates d(seed . jet)/d(theta) into grad_out (which must be zeroed
    /// by the caller and have length param_count()). The trace must carry
    /// enough channels for the seed: gradient seeds need cols >= 4, Hessian
    /// seeds cols == 13.
    void param_gradient_into(const Trace& trace, const JetSeed& seed,
                             Eigen::Ref<VecX> grad_out) const {
        const int cols = trace.cols;
        if (seed.touches_hess() && cols != 13)
            throw Error("param_gradient: Hessian seed requires a 13-channel trace");
        if (seed.touches_grad() && cols < 4)
            throw Error("param_gradient: gradient seed requires >= 4 channels");
        const int layers = spec_.layer_count();

        MatX adj = MatX::Zero(1, cols);
        adj(0, 0) = seed.d_value;
        if (cols >= 4) adj.row(0).segment<3>(1) = seed.d_grad.transpose();
        if (cols == 13)
            for (int k = 0; k < 3; ++k)
                for (int m = 0; m < 3; ++m) adj(0, 4 + 3 * k + m) = seed.d_hess(k, m);

        for (int l = layers - 1; l >= 0; --l) {
            // z = W a + b (channel-wise): accumulate dW, db, then pull the
            // adjoint through W and the preceding activation.
            const MatX& a_in = trace.inputs[l];
            MatX w_bar = adj * a_in.transpose();
            Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                grad_out.data() + w_offsets_[l], w_bar.rows(), w_bar.cols()) += w_bar;
            grad_out.segment(b_offsets_[l], w_bar.rows()) += adj.col(0);
            if (l == 0) break;

            MatX s_bar = W_[l].transpose() * adj;
            const MatX& z_prev = trace.pre[l - 1];
            adj.resize(z_prev.rows(), cols);
            for (int i = 0; i < z_prev.rows(); ++i)
                pull_through_activation_row(z_prev, s_bar, adj, i, cols);
        }
    }

    VecX param_gradient(const Vec3& x, const JetSeed& seed) const {
        Trace trace;
        const int cols = seed.touches_hess() ? 13 : (seed.touches_grad() ? 4 : 1);
        jet2_traced(x, trace, cols);
        VecX grad = VecX::Zero(param_count());
        param_gradient_into(trace, seed, grad);
        return grad;
    }

    /// Contiguous parameter ranges (offset, length), one per weight matrix and
    /// one per bias vector, in flat-theta order.
    std::vector<std::pair<int, int>> layer_blocks() const {
        std::vector<std::pair<int, int>> blocks;
        for (int l = 0; l < spec_.layer_count(); ++l)
            blocks.emplace_back(w_offsets_[l],
                                spec_.layer_widths[l] * spec_.layer_widths[l + 1]);
        for (int l = 0; l < spec_.layer_count(); ++l)
            blocks.emplace_back(b_offsets_[l], spec_.layer_widths[l + 1]);
        return blocks;
    }

private:
    double activate(double z) const {
        return spec_.activation == Activation::Tanh ? std::tanh(z)
                                                    : std::sin(spec_.omega * z);
    }

    void apply_activation_row(const MatX& z, MatX& out, int i, int cols) const {
        // Value channel goes through the same plain libm call as eval() so the
        // two stay bitwise consistent; act_derivs may be lowered to sincos.
        out(i, 0) = activate(z(i, 0));
        if (cols == 1) return;
        const auto d = detail::act_derivs(spec_.activation, spec_.omega, z(i, 0));
        if (cols >= 4)
            out.row(i).segment<3>(1) = d.s1 * z.row(i).segment<3>(1);
        if (cols == 13) {
            const Eigen::Matrix<double, 1, 3> g = z.row(i).segment<3>(1);
            for (int k = 0; k < 3; ++k)
                for (int m = 0; m < 3; ++m)
                    out(i, 4 + 3 * k + m) =
                        d.s2 * g(k) * g(m) + d.s1 * z(i, 4 + 3 * k + m);
        }
    }

    // Adjoint of apply_activation_row: s_bar holds d(seed)/d(activated state),
    // writes d(seed)/d(pre-activation state) into adj.
    void pull_through_activation_row(const MatX& z, const MatX& s_bar, MatX& adj, int i,
                                     int cols) const {
        const auto d = detail::act_derivs(spec_.activation, spec_.omega, z(i, 0));
        double vz_bar = d.s1 * s_bar(i, 0);
        if (cols >= 4) {
            const Eigen::Matrix<double, 1, 3> g = z.row(i).segment<3>(1);
            const Eigen::Matrix<double, 1, 3> g_bar = s_bar.row(i).segment<3>(1);
            vz_bar += d.s2 * g_bar.dot(g);
            Eigen::Matrix<double, 1, 3> gz_bar = d.s1 * g_bar;
            if (cols == 13) {
                Mat3 h_bar, hz;
                for (int k = 0; k < 3; ++k)
                    for (int m = 0; m < 3; ++m) {
                        h_bar(k, m) = s_bar(i, 4 + 3 * k + m);
                        hz(k, m) = z(i, 4 + 3 * k + m);
                    }
                const Vec3 gv = g.transpose();
                vz_bar += d.s3 * gv.dot(h_bar * gv) + d.s2 * (h_bar.array() * hz.array()).sum();
                gz_bar += (d.s2 * ((h_bar + h_bar.transpose()) * gv)).transpose();
                for (int k = 0; k < 3; ++k)
                    for (int m = 0; m < 3; ++m)
                        adj(i, 4 + 3 * k + m) = d.s1 * h_bar(k, m);
            }
            adj.row(i).segment<3>(1) = gz_bar;
        }
        adj(i, 0) = vz_bar;
    }

    void unpack() {
        const int layers = spec_.layer_count();
        W_.resize(layers);
        b_.resize(layers);
        w_offsets_.resize(layers);
        b_offsets_.resize(layers);
        int offset = 0;
        for (int l = 0; l < layers; ++l) {
            const int in = spec_.layer_widths[l];
            const int out = spec_.layer_widths[l + 1];
            w_offsets_[l] = offset;
            W_[l] = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>>(
                theta_.data() + offset, out, in);
            offset += out * in;
        }
        for (int l = 0; l < layers; ++l) {
            const int out = spec_.layer_widths[l + 1];
            b_offsets_[l] = offset;
            b_[l] = theta_.segment(offset, out);
            offset += out;
        }
    }

    FieldSpec spec_;
    VecX theta_;
    std::vector<MatX> W_;
    std::vector<VecX> b_;
    std::vector<int> w_offsets_;
    std::vector<int> b_offsets_;
};

}  // namespace gnshape
