#include "travel/numkernel.hpp"

#include <algorithm>
#include <cmath>

#include "travel/errors.hpp"

namespace travel {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void ensure_finite(const Matrix& m, const std::string& what) {
    for (double v : m.data())
        if (!std::isfinite(v)) throw NumericError(what + ": non-finite value");
}

LinearLayer::LinearLayer(std::size_t out_dim, std::size_t in_dim)
    : w(out_dim, in_dim), b(1, out_dim), grad_w(out_dim, in_dim), grad_b(1, out_dim) {}

void LinearLayer::init(Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (double& v : w.data()) v = rng.uniform(-a, a);
    b.fill(0.0);
}

Matrix LinearLayer::forward(const Matrix& x) const {
    if (x.cols() != w.cols())
        throw ShapeMismatch("linear_forward: input width " + std::to_string(x.cols()) +
                            " != " + std::to_string(w.cols()));
    Matrix y(x.rows(), w.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* xr = x.row(r).data();
        double* yr = y.row(r).data();
        for (std::size_t o = 0; o < w.rows(); ++o) {
            const double* wo = w.row(o).data();
            double acc = b(0, o);
            for (std::size_t i = 0; i < w.cols(); ++i) acc += xr[i] * wo[i];
            yr[o] = acc;
        }
    }
    return y;
}

Matrix LinearLayer::backward(const Matrix& x, const Matrix& dy) {
    if (dy.rows() != x.rows() || dy.cols() != w.rows() || x.cols() != w.cols())
        throw ShapeMismatch("linear_backward: inconsistent shapes");
    Matrix dx(x.rows(), w.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* xr = x.row(r).data();
        const double* dyr = dy.row(r).data();
        double* dxr = dx.row(r).data();
        for (std::size_t o = 0; o < w.rows(); ++o) {
            const double g = dyr[o];
            if (g == 0.0) continue;
            const double* wo = w.row(o).data();
            double* gwo = grad_w.row(o).data();
            for (std::size_t i = 0; i < w.cols(); ++i) {
                dxr[i] += g * wo[i];
                gwo[i] += g * xr[i];
            }
            grad_b(0, o) += g;
        }
    }
    return dx;
}

void LinearLayer::zero_grad() {
    grad_w.fill(0.0);
    grad_b.fill(0.0);
}

std::vector<ParamView> LinearLayer::params(const std::string& prefix) {
    return {{prefix + ".W", &w, &grad_w}, {prefix + ".b", &b, &grad_b}};
}

Matrix relu_forward(const Matrix& x) {
    Matrix y = x;
    for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
    return y;
}

Matrix relu_backward(const Matrix& dy, const Matrix& x) {
    if (!dy.same_shape(x)) throw ShapeMismatch("relu_backward: shape mismatch");
    Matrix dx = dy;
    for (std::size_t i = 0; i < dx.data().size(); ++i)
        if (x.data()[i] <= 0.0) dx.data()[i] = 0.0;
    return dx;
}

Mlp::Mlp(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim)
    : stage1(hidden_dim, in_dim), stage2(out_dim, hidden_dim) {}

void Mlp::init(Rng& rng) {
    stage1.init(rng);
    stage2.init(rng);
}

Matrix Mlp::forward(const Matrix& x, Cache& cache) const {
    cache.x = x;
    cache.h_pre = stage1.forward(x);
    cache.h = relu_forward(cache.h_pre);
    return stage2.forward(cache.h);
}

Matrix Mlp::backward(const Cache& cache, const Matrix& dy) {
    Matrix dh = stage2.backward(cache.h, dy);
    Matrix dh_pre = relu_backward(dh, cache.h_pre);
    return stage1.backward(cache.x, dh_pre);
}

void Mlp::zero_grad() {
    stage1.zero_grad();
    stage2.zero_grad();
}

std::vector<ParamView> Mlp::params(const std::string& prefix) {
    auto out = stage1.params(prefix + ".l1");
    auto second = stage2.params(prefix + ".l2");
    out.insert(out.end(), second.begin(), second.end());
    return out;
}

DropoutResult dropout_forward(const Matrix& x, double p, Rng& rng, bool training) {
    if (p < 0.0 || p >= 1.0) throw InputError("dropout rate must be in [0, 1)");
    DropoutResult out;
    if (!training || p == 0.0) {
        out.y = x;
        out.mask = Matrix(x.rows(), x.cols(), 1.0);
        return out;
    }
    const double scale = 1.0 / (1.0 - p);
    out.mask = Matrix(x.rows(), x.cols());
    out.y = Matrix(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.data().size(); ++i) {
        const double keep = rng.uniform() < p ? 0.0 : scale;
        out.mask.data()[i] = keep;
        out.y.data()[i] = x.data()[i] * keep;
    }
    return out;
}

Matrix dropout_backward(const Matrix& dy, const Matrix& mask) {
    if (!dy.same_shape(mask)) throw ShapeMismatch("dropout_backward: shape mismatch");
    Matrix dx = dy;
    for (std::size_t i = 0; i < dx.data().size(); ++i) dx.data()[i] *= mask.data()[i];
    return dx;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto row = logits.row(r);
        double mx = row[0];
        for (double v : row) mx = std::max(mx, v);
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            const double e = std::exp(row[c] - mx);
            p(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < logits.cols(); ++c) p(r, c) /= sum;
    }
    return p;
}

LossResult cross_entropy(const Matrix& logits, std::span<const int> targets,
                         std::span<const double> class_weights) {
    if (targets.size() != logits.rows())
        throw ShapeMismatch("cross_entropy: batch size mismatch");
    if (!class_weights.empty() && class_weights.size() != logits.cols())
        throw ShapeMismatch("cross_entropy: weight count mismatch");
    if (logits.rows() == 0) throw ShapeMismatch("cross_entropy: empty batch");

    Matrix p = softmax_rows(logits);
    double total = 0.0, weight_sum = 0.0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const int t = targets[r];
        if (t < 0 || static_cast<std::size_t>(t) >= logits.cols())
            throw IndexOutOfRange("cross_entropy: target class out of range");
        const double w = class_weights.empty() ? 1.0 : class_weights[t];
        // log-softmax directly from the stabilized probabilities
        total += -w * std::log(std::max(p(r, t), 1e-300));
        weight_sum += w;
    }

    LossResult out;
    out.loss = total / weight_sum;
    out.dlogits = std::move(p);
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const int t = targets[r];
        const double w = class_weights.empty() ? 1.0 : class_weights[t];
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            double delta = (static_cast<int>(c) == t) ? 1.0 : 0.0;
            out.dlogits(r, c) = w * (out.dlogits(r, c) - delta) / weight_sum;
        }
    }
    if (!std::isfinite(out.loss)) throw NumericError("cross_entropy: non-finite loss");
    return out;
}

void AdamState::step(std::span<ParamView> params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].value->size(), 0.0);
            v_[i].assign(params[i].value->size(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw ShapeMismatch("adam_step: parameter count changed");

    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& value = params[i].value->data();
        const auto& grad = params[i].grad->data();
        if (value.size() != grad.size() || value.size() != m_[i].size())
            throw ShapeMismatch("adam_step: buffer shape mismatch for " + params[i].name);
        for (std::size_t j = 0; j < value.size(); ++j) {
            const double g = grad[j] + weight_decay_ * value[j];
            m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
            v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            if (!std::isfinite(value[j]))
                throw NumericError("adam_step: parameter " + params[i].name + " diverged");
        }
    }
}

GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x0, std::span<const double> analytic_grad,
                           double h) {
    if (x0.size() != analytic_grad.size())
        throw ShapeMismatch("grad_check: gradient length mismatch");
    std::vector<double> x(x0.begin(), x0.end());
    GradCheckReport report;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double fp = f(x);
        x[i] = saved - h;
        const double fm = f(x);
        x[i] = saved;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic_grad[i];
        const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    return report;
}

}  // namespace travel
