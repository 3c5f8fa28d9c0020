#pragma once

#include <cassert>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "qrw/rng.hpp"

namespace qrw {

/// Dense 64-bit tensor with up to three axes. Small by construction; all
/// shapes in this project are O(d^2) with d the embedding dimension.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape) {
        Tensor t;
        t.shape_ = std::move(shape);
        assert(t.shape_.size() >= 1 && t.shape_.size() <= 3);
        t.data_.assign(t.count(), 0.0);
        return t;
    }

    static Tensor vec(std::size_t n) { return zeros({n}); }
    static Tensor mat(std::size_t r, std::size_t c) { return zeros({r, c}); }

    static Tensor from(std::vector<std::size_t> shape, std::vector<double> values) {
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = std::move(values);
        assert(t.data_.size() == t.count());
        return t;
    }

    /// Seeded uniform init in [-scale, scale].
    static Tensor uniform(std::vector<std::size_t> shape, Rng& rng, double scale) {
        Tensor t = zeros(std::move(shape));
        for (auto& v : t.data_) v = rng.uniform(-scale, scale);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    std::size_t count() const {
        std::size_t n = 1;
        for (auto s : shape_) n *= s;
        return n;
    }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i) {
        assert(rank() == 1 && i < shape_[0]);
        return data_[i];
    }
    double at(std::size_t i) const { return const_cast<Tensor*>(this)->at(i); }

    double& at(std::size_t i, std::size_t j) {
        assert(rank() == 2 && i < shape_[0] && j < shape_[1]);
        return data_[i * shape_[1] + j];
    }
    double at(std::size_t i, std::size_t j) const { return const_cast<Tensor*>(this)->at(i, j); }

    double& at(std::size_t i, std::size_t j, std::size_t k) {
        assert(rank() == 3 && i < shape_[0] && j < shape_[1] && k < shape_[2]);
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return const_cast<Tensor*>(this)->at(i, j, k);
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    void fill(double v) { data_.assign(data_.size(), v); }

    void add_scaled(const Tensor& other, double alpha) {
        assert(same_shape(other));
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * other.data_[i];
    }

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Named parameter collection. Ordered map so every iteration (updates,
/// serialization, gradient checks) is deterministic.
using ParamSet = std::map<std::string, Tensor>;

/// Gradient accumulator keyed like a ParamSet.
class GradMap {
  public:
    explicit GradMap(const ParamSet& params) {
        for (const auto& [name, p] : params) grads_.emplace(name, Tensor::zeros(p.shape()));
    }

    Tensor& operator[](const std::string& name) { return grads_.at(name); }
    const Tensor& at(const std::string& name) const { return grads_.at(name); }
    bool has(const std::string& name) const { return grads_.count(name) > 0; }

    auto begin() { return grads_.begin(); }
    auto end() { return grads_.end(); }
    auto begin() const { return grads_.begin(); }
    auto end() const { return grads_.end(); }

    void scale(double alpha) {
        for (auto& [name, g] : grads_)
            for (auto& v : g.data()) v *= alpha;
    }

    void add(const GradMap& other) {
        for (auto& [name, g] : grads_) g.add_scaled(other.at(name), 1.0);
    }

    double l2_norm() const {
        double s = 0.0;
        for (const auto& [name, g] : grads_)
            for (double v : g.data()) s += v * v;
        return std::sqrt(s);
    }

  private:
    std::map<std::string, Tensor> grads_;
};

}  // namespace qrw
