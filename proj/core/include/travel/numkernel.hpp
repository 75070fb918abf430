#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "travel/rng.hpp"

namespace travel {

// Dense row-major matrix of 64-bit floats.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// Throws NumericError naming `what` if any entry is NaN or infinite.
void ensure_finite(const Matrix& m, const std::string& what);

// A parameter tensor paired with its gradient accumulator.
struct ParamView {
    std::string name;
    Matrix* value = nullptr;
    Matrix* grad = nullptr;
};

// Fully connected layer, Y = X * W^T + b with W stored out x in.
class LinearLayer {
public:
    LinearLayer() = default;
    LinearLayer(std::size_t out_dim, std::size_t in_dim);

    // Glorot-uniform W, zero b.
    void init(Rng& rng);

    Matrix forward(const Matrix& x) const;
    // Returns dX; accumulates grad_W and grad_b. `x` must be the forward input.
    Matrix backward(const Matrix& x, const Matrix& dy);

    void zero_grad();
    std::vector<ParamView> params(const std::string& prefix);

    std::size_t in_dim() const { return w.cols(); }
    std::size_t out_dim() const { return w.rows(); }

    Matrix w, b;            // b is 1 x out
    Matrix grad_w, grad_b;
};

Matrix relu_forward(const Matrix& x);
Matrix relu_backward(const Matrix& dy, const Matrix& x);

// Two linear stages with a ReLU between them.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim);

    void init(Rng& rng);

    struct Cache {
        Matrix x;
        Matrix h_pre;  // first stage pre-activation
        Matrix h;      // ReLU output
    };

    Matrix forward(const Matrix& x, Cache& cache) const;
    Matrix backward(const Cache& cache, const Matrix& dy);

    void zero_grad();
    std::vector<ParamView> params(const std::string& prefix);

    std::size_t in_dim() const { return stage1.in_dim(); }
    std::size_t out_dim() const { return stage2.out_dim(); }

    LinearLayer stage1, stage2;
};

// Inverted dropout: kept units scaled by 1/(1-p). Identity when not training.
struct DropoutResult {
    Matrix y;
    Matrix mask;  // per-entry scale factors, 0 or 1/(1-p)
};
DropoutResult dropout_forward(const Matrix& x, double p, Rng& rng, bool training);
Matrix dropout_backward(const Matrix& dy, const Matrix& mask);

// Mean softmax cross-entropy. Gradient is (softmax - onehot) / batch, or the
// weight-normalized version when per-class weights are given.
struct LossResult {
    double loss = 0.0;
    Matrix dlogits;
};
LossResult cross_entropy(const Matrix& logits, std::span<const int> targets,
                         std::span<const double> class_weights = {});

Matrix softmax_rows(const Matrix& logits);

// Adam with bias correction; weight decay is plain L2 added to the gradient
// before the moment updates.
class AdamState {
public:
    AdamState(double lr = 0.01, double weight_decay = 0.0, double beta1 = 0.9,
              double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::span<ParamView> params);

    std::size_t t() const { return t_; }
    double lr() const { return lr_; }

private:
    double lr_, weight_decay_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Central-difference check of an analytic gradient. Relative error per
// coordinate is |a - n| / max(1e-8, |a| + |n|).
struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
};
GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x0, std::span<const double> analytic_grad,
                           double h = 1e-5);

}  // namespace travel
