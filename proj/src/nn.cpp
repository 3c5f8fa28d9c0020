#include "qrw/nn.hpp"

#include <cassert>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "qrw/error.hpp"

namespace qrw {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double tanh_act(double x) { return std::tanh(x); }
double relu(double x) { return x > 0.0 ? x : 0.0; }

Vec tanh_forward(const Vec& x) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    return y;
}

Vec tanh_backward(const Vec& y, const Vec& dy) {
    assert(y.size() == dy.size());
    Vec dx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
    return dx;
}

Vec relu_forward(const Vec& x) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = relu(x[i]);
    return y;
}

Vec relu_backward(const Vec& x, const Vec& dy) {
    assert(x.size() == dy.size());
    Vec dx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
    return dx;
}

Vec linear_forward(const Tensor& W, const Tensor& b, const Vec& x) {
    assert(W.rank() == 2);
    std::size_t m = W.shape()[0], n = W.shape()[1];
    if (x.size() != n) throw NumericError("linear_forward: shape mismatch");
    Vec y(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double acc = b.size() == 1 ? b[0] : b[i];
        for (std::size_t j = 0; j < n; ++j) acc += W.at(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

Vec linear_backward(const Tensor& W, const Vec& x, const Vec& dy, Tensor& dW, Tensor& db) {
    std::size_t m = W.shape()[0], n = W.shape()[1];
    assert(dy.size() == m && x.size() == n);
    Vec dx(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        if (db.size() == 1)
            db[0] += dy[i];
        else
            db[i] += dy[i];
        for (std::size_t j = 0; j < n; ++j) {
            dW.at(i, j) += dy[i] * x[j];
            dx[j] += W.at(i, j) * dy[i];
        }
    }
    return dx;
}

namespace {

std::size_t effective_length(const std::vector<Vec>& cols) {
    std::size_t len = cols.size();
    while (len > 0) {
        bool all_zero = true;
        for (double v : cols[len - 1])
            if (v != 0.0) { all_zero = false; break; }
        if (!all_zero) break;
        --len;
    }
    return len;
}

}  // namespace

Vec conv1d_avgpool_forward(const Tensor& W, const Tensor& bias, const std::vector<Vec>& cols,
                           ConvCache* cache) {
    std::size_t d_out = W.shape()[0];
    std::size_t span = W.shape()[1];
    std::size_t d_in = cols.empty() ? 0 : cols[0].size();
    std::size_t width = d_in == 0 ? 1 : span / d_in;
    assert(d_in == 0 || span == d_in * width);
    assert(width % 2 == 1);

    std::size_t len = effective_length(cols);
    if (cache) cache->effective_len = len;
    Vec out(d_out, 0.0);
    if (len == 0) return out;

    std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(width) / 2;
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(len); ++t) {
        for (std::size_t o = 0; o < d_out; ++o) {
            double acc = bias[o];
            for (std::ptrdiff_t w = -pad; w <= pad; ++w) {
                std::ptrdiff_t src = t + w;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                std::size_t base = static_cast<std::size_t>(w + pad) * d_in;
                for (std::size_t i = 0; i < d_in; ++i)
                    acc += W.at(o, base + i) * cols[static_cast<std::size_t>(src)][i];
            }
            out[o] += acc;
        }
    }
    double inv = 1.0 / static_cast<double>(len);
    for (auto& v : out) v *= inv;
    return out;
}

std::vector<Vec> conv1d_avgpool_backward(const Tensor& W, const std::vector<Vec>& cols,
                                         const Vec& dout, Tensor& dW, Tensor& dbias) {
    std::size_t d_out = W.shape()[0];
    std::size_t d_in = cols.empty() ? 0 : cols[0].size();
    std::size_t width = d_in == 0 ? 1 : W.shape()[1] / d_in;
    std::size_t len = effective_length(cols);

    std::vector<Vec> dcols(len, Vec(d_in, 0.0));
    if (len == 0) return dcols;
    double inv = 1.0 / static_cast<double>(len);
    std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(width) / 2;

    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(len); ++t) {
        for (std::size_t o = 0; o < d_out; ++o) {
            double g = dout[o] * inv;
            dbias[o] += g;
            for (std::ptrdiff_t w = -pad; w <= pad; ++w) {
                std::ptrdiff_t src = t + w;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                std::size_t base = static_cast<std::size_t>(w + pad) * d_in;
                for (std::size_t i = 0; i < d_in; ++i) {
                    dW.at(o, base + i) += g * cols[static_cast<std::size_t>(src)][i];
                    dcols[static_cast<std::size_t>(src)][i] += g * W.at(o, base + i);
                }
            }
        }
    }
    return dcols;
}

Vec rnn_cell_forward(const Tensor& Wa, const Tensor& Wb, const Tensor& Wh, const Vec& a,
                     const Vec& x, const Vec& h_prev) {
    std::size_t d = Wa.shape()[0];
    Vec z(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            acc += Wa.at(i, j) * a[j] + Wb.at(i, j) * x[j] + Wh.at(i, j) * h_prev[j];
        z[i] = std::tanh(acc);
    }
    return z;
}

RnnCellGrads rnn_cell_backward(const Tensor& Wa, const Tensor& Wb, const Tensor& Wh, const Vec& a,
                               const Vec& x, const Vec& h_prev, const Vec& h, const Vec& dh,
                               Tensor& dWa, Tensor& dWb, Tensor& dWh) {
    std::size_t d = h.size();
    RnnCellGrads grads{Vec(d, 0.0), Vec(d, 0.0), Vec(d, 0.0)};
    for (std::size_t i = 0; i < d; ++i) {
        double dz = dh[i] * (1.0 - h[i] * h[i]);
        for (std::size_t j = 0; j < d; ++j) {
            dWa.at(i, j) += dz * a[j];
            dWb.at(i, j) += dz * x[j];
            dWh.at(i, j) += dz * h_prev[j];
            grads.da[j] += Wa.at(i, j) * dz;
            grads.dx[j] += Wb.at(i, j) * dz;
            grads.dh_prev[j] += Wh.at(i, j) * dz;
        }
    }
    return grads;
}

AdamState AdamState::init(const ParamSet& params) {
    AdamState state;
    for (const auto& [name, p] : params) {
        state.m.emplace(name, Tensor::zeros(p.shape()));
        state.v.emplace(name, Tensor::zeros(p.shape()));
    }
    return state;
}

void adam_step(ParamSet& params, const GradMap& grads, AdamState& state,
               const AdamConfig& config) {
    double clip_scale = 1.0;
    if (config.clip_unit_norm) {
        double norm = grads.l2_norm();
        if (norm > 1.0) clip_scale = 1.0 / norm;
    }
    state.step += 1;
    double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (auto& [name, p] : params) {
        const Tensor& g = grads.at(name);
        Tensor& m = state.m.at(name);
        Tensor& v = state.v.at(name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            double gi = g[i] * clip_scale;
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * gi;
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * gi * gi;
            double m_hat = m[i] / bc1;
            double v_hat = v[i] / bc2;
            p[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
        }
    }
}

GradCheckReport grad_check(const LossFn& loss, ParamSet params, const GradMap& analytic,
                           double h) {
    GradCheckReport report;
    for (auto& [name, tensor] : params) {
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            double original = tensor[i];

            tensor[i] = original + h;
            LossProbe plus = loss(params);
            tensor[i] = original - h;
            LossProbe minus = loss(params);
            tensor[i] = original;

            if (!std::isfinite(plus.value) || !std::isfinite(minus.value))
                throw NumericError("grad_check: non-finite loss at parameter " + name);
            if (plus.kink_distance < h || minus.kink_distance < h) {
                ++report.skipped;
                continue;
            }
            double numeric = (plus.value - minus.value) / (2.0 * h);
            double a = analytic.at(name)[i];
            double err = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-4);
            if (err > report.max_rel_err) {
                report.max_rel_err = err;
                report.worst_param = name;
                report.worst_index = i;
            }
            ++report.checked;
        }
    }
    return report;
}

void save_checkpoint(const ParamSet& params, const std::string& path) {
    nlohmann::json j;
    j["version"] = 1;
    nlohmann::json entries;
    for (const auto& [name, tensor] : params) {
        entries[name] = {{"shape", tensor.shape()}, {"data", tensor.data()}};
    }
    j["params"] = std::move(entries);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << j.dump() << '\n';
}

ParamSet load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": parse error: " + e.what());
    }
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw DataError(path + ": unsupported checkpoint version");
    ParamSet params;
    for (const auto& [name, entry] : j["params"].items()) {
        auto shape = entry["shape"].get<std::vector<std::size_t>>();
        auto data = entry["data"].get<std::vector<double>>();
        params.emplace(name, Tensor::from(std::move(shape), std::move(data)));
    }
    return params;
}

}  // namespace qrw
