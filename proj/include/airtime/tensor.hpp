#ifndef AIRTIME_TENSOR_HPP
#define AIRTIME_TENSOR_HPP

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "airtime/error.hpp"

namespace airtime::nn {

/// Dense row-major tensor of 64-bit floats. Rank 2 throughout the model;
/// scalars are [1,1] and row/column vectors are [1,n] / [n,1].
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data_[0] = v;
        return t;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t numel() const { return data_.size(); }
    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& at(std::size_t i) { return data_[i]; }
    double at(std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    void fill(double v) { data_.assign(data_.size(), v); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

class Node;
using Var = std::shared_ptr<Node>;

/// One recorded operation (or leaf) of the reverse-mode tape. The graph is
/// held together by shared_ptr parent links; backward() accumulates this
/// node's output gradient into its parents' gradient buffers.
class Node {
public:
    Tensor value;
    Tensor grad; // allocated lazily, same shape as value
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<Var> parents;

    virtual ~Node() = default;
    virtual void backward() {}
    virtual const char* op_name() const { return "leaf"; }

    Tensor& ensure_grad() {
        if (!grad_ready) {
            grad = Tensor(value.rows(), value.cols());
            grad_ready = true;
        }
        return grad;
    }
};

/// Wrap a tensor as a graph leaf. Trainable parameters set requires_grad.
Var leaf(Tensor value, bool requires_grad = false);
Var scalar(double v);

// Elementwise and shape ops. All throw ShapeError on non-conforming inputs.
Var matmul(const Var& a, const Var& b, bool trans_a = false, bool trans_b = false);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var affine(const Var& a, double scale, double shift); // scale*a + shift
Var add_rowvec(const Var& a, const Var& v);           // a[R,C] + v[1,C] per row
Var relu(const Var& a);
Var tanh_act(const Var& a);
Var rsqrt_shift(const Var& a, double shift); // 1/sqrt(a + shift)
Var softmax_rows(const Var& a);
Var logsumexp_rows(const Var& a); // [R,C] -> [R,1]
Var logsumexp_cols(const Var& a); // [R,C] -> [1,C]
Var mean_rows(const Var& a);      // [R,C] -> [1,C], mean over axis 0
Var mean_cols(const Var& a);      // [R,C] -> [R,1], mean over axis 1
Var sum_all(const Var& a);        // [R,C] -> [1,1]
Var broadcast_rows(const Var& v, std::size_t rows); // [1,C] -> [R,C]
Var broadcast_cols(const Var& v, std::size_t cols); // [R,1] -> [R,C]
Var block(const Var& a, std::size_t r0, std::size_t nr, std::size_t c0, std::size_t nc);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var transpose(const Var& a);

/// Sum of selected entries: sum_i a(idx[i].first, idx[i].second) -> [1,1].
Var select_sum(const Var& a, std::vector<std::pair<std::size_t, std::size_t>> idx);

/// Per-block left-multiply by constant square matrices: x is [T*J, C] and
/// blocks holds T constant [J,J] matrices; row block t of the result is
/// blocks[t] * x_t. Gradients flow to x only.
Var block_diag_matmul(std::shared_ptr<const std::vector<Tensor>> blocks, const Var& x);

/// Mean over each consecutive group of `block_rows` rows: [T*J, C] -> [T, C].
Var block_mean_rows(const Var& x, std::size_t block_rows);

/// Row-wise layer normalization with learned gain/bias [1,C], built from
/// primitive ops so its gradient is covered by the primitive checks.
Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);

/// Reverse-mode accumulation from a scalar loss into every reachable
/// requires_grad leaf. Gradients add up across calls until zeroed.
void backward(const Var& loss);

} // namespace airtime::nn

#endif
