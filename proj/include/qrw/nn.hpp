#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qrw/tensor.hpp"

namespace qrw {

using Vec = std::vector<double>;

// ---- elementwise kernels ----

double sigmoid(double x);
double tanh_act(double x);
double relu(double x);

Vec tanh_forward(const Vec& x);
/// dx given the forward OUTPUT y and upstream dy.
Vec tanh_backward(const Vec& y, const Vec& dy);

Vec relu_forward(const Vec& x);
/// dx given the forward INPUT x and upstream dy.
Vec relu_backward(const Vec& x, const Vec& dy);

// ---- linear map ----

/// y = W x + b. W: (m x n), b: m (or scalar broadcast when b has size 1).
Vec linear_forward(const Tensor& W, const Tensor& b, const Vec& x);

/// Accumulates dW, db and returns dx.
Vec linear_backward(const Tensor& W, const Vec& x, const Vec& dy, Tensor& dW, Tensor& db);

// ---- 1-D convolution + average pooling ----

/// Input sequence as columns: cols[t] has dim d_in. The kernel ignores
/// trailing all-zero columns (minibatch padding), applies a same-padded
/// width-w convolution over the effective region and averages over its
/// positions. W: (d_out x d_in*w), bias: d_out, w odd.
struct ConvCache {
    std::size_t effective_len = 0;
};

Vec conv1d_avgpool_forward(const Tensor& W, const Tensor& bias,
                           const std::vector<Vec>& cols, ConvCache* cache = nullptr);

/// Accumulates dW, dbias; returns gradients w.r.t. the effective input
/// columns (trailing padding receives none).
std::vector<Vec> conv1d_avgpool_backward(const Tensor& W, const std::vector<Vec>& cols,
                                         const Vec& dout, Tensor& dW, Tensor& dbias);

// ---- simple recurrent cell ----

/// h = tanh(Wa a + Wb x + Wh h_prev); all matrices d x d.
Vec rnn_cell_forward(const Tensor& Wa, const Tensor& Wb, const Tensor& Wh, const Vec& a,
                     const Vec& x, const Vec& h_prev);

struct RnnCellGrads {
    Vec da, dx, dh_prev;
};

/// Accumulates dWa, dWb, dWh given the step's forward output h.
RnnCellGrads rnn_cell_backward(const Tensor& Wa, const Tensor& Wb, const Tensor& Wh, const Vec& a,
                               const Vec& x, const Vec& h_prev, const Vec& h, const Vec& dh,
                               Tensor& dWa, Tensor& dWb, Tensor& dWh);

// ---- optimizer ----

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool clip_unit_norm = false;  // clip the global gradient to unit L2 norm
};

struct AdamState {
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
    uint64_t step = 0;

    static AdamState init(const ParamSet& params);
};

/// Standard bias-corrected Adam update, in place.
void adam_step(ParamSet& params, const GradMap& grads, AdamState& state, const AdamConfig& config);

// ---- finite-difference gradient checker ----

struct LossProbe {
    double value = 0.0;
    /// Distance of the nearest ReLU pre-activation to its kink; the checker
    /// skips coordinates whose perturbed evaluations land within h of one.
    double kink_distance = std::numeric_limits<double>::infinity();
};

using LossFn = std::function<LossProbe(const ParamSet&)>;

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
};

/// Central differences on every coordinate of every tensor in `params`,
/// compared against `analytic`. Relative error uses |a - n| / max(|a| +
/// |n|, 1e-4). Throws NumericError on a non-finite loss.
GradCheckReport grad_check(const LossFn& loss, ParamSet params, const GradMap& analytic, double h);

// ---- checkpoints ----

/// Versioned JSON with named parameter arrays and shapes.
void save_checkpoint(const ParamSet& params, const std::string& path);
ParamSet load_checkpoint(const std::string& path);

}  // namespace qrw
