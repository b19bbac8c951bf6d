#include "airtime/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace airtime::nn {
namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

CMap cmap(const Tensor& t) { return CMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())); }
Map map(Tensor& t) { return Map(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())); }

[[noreturn]] void shape_fail(const char* op, const Tensor& a) {
    throw ShapeError(std::string(op) + ": bad operand shape [" + std::to_string(a.rows()) + "," + std::to_string(a.cols()) + "]");
}

[[noreturn]] void shape_fail2(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": shapes [" + std::to_string(a.rows()) + "," + std::to_string(a.cols()) + "] and [" +
                     std::to_string(b.rows()) + "," + std::to_string(b.cols()) + "] do not conform");
}

struct LeafNode final : Node {
    const char* op_name() const override { return "leaf"; }
};

Var make_result(Tensor value, std::vector<Var> parents, Node* node) {
    node->value = std::move(value);
    node->parents = std::move(parents);
    for (const Var& p : node->parents) {
        if (p->requires_grad) {
            node->requires_grad = true;
            break;
        }
    }
    return Var(node);
}

struct MatmulNode final : Node {
    bool ta = false, tb = false;
    const char* op_name() const override { return "matmul"; }
    void backward() override {
        const Tensor& a = parents[0]->value;
        const Tensor& b = parents[1]->value;
        CMap ga = cmap(a), gb = cmap(b), gc = cmap(grad);
        if (parents[0]->requires_grad) {
            Map da = map(parents[0]->ensure_grad());
            if (!ta && !tb)
                da.noalias() += gc * gb.transpose();
            else if (!ta && tb)
                da.noalias() += gc * gb;
            else if (ta && !tb)
                da.noalias() += gb * gc.transpose();
            else
                da.noalias() += gb.transpose() * gc.transpose();
        }
        if (parents[1]->requires_grad) {
            Map db = map(parents[1]->ensure_grad());
            if (!ta && !tb)
                db.noalias() += ga.transpose() * gc;
            else if (!ta && tb)
                db.noalias() += gc.transpose() * ga;
            else if (ta && !tb)
                db.noalias() += ga * gc;
            else
                db.noalias() += gc.transpose() * ga.transpose();
        }
    }
};

struct AddNode final : Node {
    const char* op_name() const override { return "add"; }
    void backward() override {
        for (int k = 0; k < 2; ++k) {
            if (!parents[k]->requires_grad) continue;
            Tensor& g = parents[k]->ensure_grad();
            for (std::size_t i = 0; i < g.numel(); ++i) g.at(i) += grad.at(i);
        }
    }
};

struct SubNode final : Node {
    const char* op_name() const override { return "sub"; }
    void backward() override {
        if (parents[0]->requires_grad) {
            Tensor& g = parents[0]->ensure_grad();
            for (std::size_t i = 0; i < g.numel(); ++i) g.at(i) += grad.at(i);
        }
        if (parents[1]->requires_grad) {
            Tensor& g = parents[1]->ensure_grad();
            for (std::size_t i = 0; i < g.numel(); ++i) g.at(i) -= grad.at(i);
        }
    }
};

struct MulNode final : Node {
    const char* op_name() const override { return "mul"; }
    void backward() override {
        const Tensor& a = parents[0]->value;
        const Tensor& b = parents[1]->value;
        if (parents[0]->requires_grad) {
            Tensor& g = parents[0]->ensure_grad();
            for (std::size_t i = 0; i < g.numel(); ++i) g.at(i) += grad.at(i) * b.at(i);
        }
        if (parents[1]->requires_grad) {
            Tensor& g = parents[1]->ensure_grad();
            for (std::size_t i = 0; i < g.numel(); ++i) g.at(i) += grad.at(i) * a.at(i);
        }
    }
};

struct AffineNode final : Node {
    double scale = 1.0;
    const char* op_name() const override { return "affine"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.numel(); ++i) g.at(i) += scale * grad.at(i);
    }
};

struct AddRowvecNode final : Node {
    const char* op_name() const override { return "add_rowvec"; }
    void backward() override {
        const std::size_t rows = value.rows(), cols = value.cols();
        if (parents[0]->requires_grad) {
            Tensor& g = parents[0]->ensure_grad();
            for (std::size_t i = 0; i < g.numel(); ++i) g.at(i) += grad.at(i);
        }
        if (parents[1]->requires_grad) {
            Tensor& g = parents[1]->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) g(0, c) += grad(r, c);
        }
    }
};

struct ReluNode final : Node {
    const char* op_name() const override { return "relu"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        const Tensor& a = parents[0]->value;
        Tensor& g = parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.numel(); ++i)
            if (a.at(i) > 0.0) g.at(i) += grad.at(i);
    }
};

struct TanhNode final : Node {
    const char* op_name() const override { return "tanh"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.numel(); ++i) {
            const double y = value.at(i);
            g.at(i) += grad.at(i) * (1.0 - y * y);
        }
    }
};

struct RsqrtShiftNode final : Node {
    const char* op_name() const override { return "rsqrt_shift"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.numel(); ++i) {
            const double y = value.at(i);
            g.at(i) += grad.at(i) * (-0.5 * y * y * y);
        }
    }
};

struct SoftmaxRowsNode final : Node {
    const char* op_name() const override { return "softmax_rows"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        const std::size_t rows = value.rows(), cols = value.cols();
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dot += grad(r, c) * value(r, c);
            for (std::size_t c = 0; c < cols; ++c) g(r, c) += value(r, c) * (grad(r, c) - dot);
        }
    }
};

struct LogsumexpRowsNode final : Node {
    const char* op_name() const override { return "logsumexp_rows"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        const Tensor& a = parents[0]->value;
        Tensor& g = parents[0]->ensure_grad();
        for (std::size_t r = 0; r < a.rows(); ++r)
            for (std::size_t c = 0; c < a.cols(); ++c) g(r, c) += grad(r, 0) * std::exp(a(r, c) - value(r, 0));
    }
};

struct LogsumexpColsNode final : Node {
    const char* op_name() const override { return "logsumexp_cols"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        const Tensor& a = parents[0]->value;
        Tensor& g = parents[0]->ensure_grad();
        for (std::size_t r = 0; r < a.rows(); ++r)
            for (std::size_t c = 0; c < a.cols(); ++c) g(r, c) += grad(0, c) * std::exp(a(r, c) - value(0, c));
    }
};

struct MeanRowsNode final : Node {
    const char* op_name() const override { return "mean_rows"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        const double inv = 1.0 / static_cast<double>(g.rows());
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) g(r, c) += grad(0, c) * inv;
    }
};

struct MeanColsNode final : Node {
    const char* op_name() const override { return "mean_cols"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        const double inv = 1.0 / static_cast<double>(g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) g(r, c) += grad(r, 0) * inv;
    }
};

struct SumAllNode final : Node {
    const char* op_name() const override { return "sum_all"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.numel(); ++i) g.at(i) += grad.at(0);
    }
};

struct BroadcastRowsNode final : Node {
    const char* op_name() const override { return "broadcast_rows"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        for (std::size_t r = 0; r < value.rows(); ++r)
            for (std::size_t c = 0; c < value.cols(); ++c) g(0, c) += grad(r, c);
    }
};

struct BroadcastColsNode final : Node {
    const char* op_name() const override { return "broadcast_cols"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        for (std::size_t r = 0; r < value.rows(); ++r)
            for (std::size_t c = 0; c < value.cols(); ++c) g(r, 0) += grad(r, c);
    }
};

struct BlockNode final : Node {
    std::size_t r0 = 0, c0 = 0;
    const char* op_name() const override { return "block"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        for (std::size_t r = 0; r < value.rows(); ++r)
            for (std::size_t c = 0; c < value.cols(); ++c) g(r0 + r, c0 + c) += grad(r, c);
    }
};

struct ConcatColsNode final : Node {
    const char* op_name() const override { return "concat_cols"; }
    void backward() override {
        std::size_t off = 0;
        for (const Var& p : parents) {
            const std::size_t pc = p->value.cols();
            if (p->requires_grad) {
                Tensor& g = p->ensure_grad();
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t c = 0; c < pc; ++c) g(r, c) += grad(r, off + c);
            }
            off += pc;
        }
    }
};

struct ConcatRowsNode final : Node {
    const char* op_name() const override { return "concat_rows"; }
    void backward() override {
        std::size_t off = 0;
        for (const Var& p : parents) {
            const std::size_t pr = p->value.rows();
            if (p->requires_grad) {
                Tensor& g = p->ensure_grad();
                for (std::size_t r = 0; r < pr; ++r)
                    for (std::size_t c = 0; c < g.cols(); ++c) g(r, c) += grad(off + r, c);
            }
            off += pr;
        }
    }
};

struct TransposeNode final : Node {
    const char* op_name() const override { return "transpose"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        for (std::size_t r = 0; r < value.rows(); ++r)
            for (std::size_t c = 0; c < value.cols(); ++c) g(c, r) += grad(r, c);
    }
};

struct SelectSumNode final : Node {
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    const char* op_name() const override { return "select_sum"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        for (const auto& [r, c] : idx) g(r, c) += grad.at(0);
    }
};

struct BlockDiagMatmulNode final : Node {
    std::shared_ptr<const std::vector<Tensor>> blocks;
    std::size_t j = 0;
    const char* op_name() const override { return "block_diag_matmul"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        const std::size_t cols = value.cols();
        for (std::size_t t = 0; t < blocks->size(); ++t) {
            CMap b = cmap((*blocks)[t]);
            Map dx(g.data() + t * j * cols, static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(cols));
            CMap dy(grad.data() + t * j * cols, static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(cols));
            dx.noalias() += b.transpose() * dy;
        }
    }
};

struct BlockMeanRowsNode final : Node {
    std::size_t j = 0;
    const char* op_name() const override { return "block_mean_rows"; }
    void backward() override {
        if (!parents[0]->requires_grad) return;
        Tensor& g = parents[0]->ensure_grad();
        const double inv = 1.0 / static_cast<double>(j);
        for (std::size_t t = 0; t < value.rows(); ++t)
            for (std::size_t r = 0; r < j; ++r)
                for (std::size_t c = 0; c < value.cols(); ++c) g(t * j + r, c) += grad(t, c) * inv;
    }
};

} // namespace

Var leaf(Tensor value, bool requires_grad) {
    auto* n = new LeafNode();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(n);
}

Var scalar(double v) { return leaf(Tensor::scalar(v)); }

Var matmul(const Var& a, const Var& b, bool trans_a, bool trans_b) {
    const std::size_t ar = trans_a ? a->value.cols() : a->value.rows();
    const std::size_t ac = trans_a ? a->value.rows() : a->value.cols();
    const std::size_t br = trans_b ? b->value.cols() : b->value.rows();
    const std::size_t bc = trans_b ? b->value.rows() : b->value.cols();
    if (ac != br) shape_fail2("matmul", a->value, b->value);
    Tensor out(ar, bc);
    {
        CMap ma = cmap(a->value), mb = cmap(b->value);
        Map mo = map(out);
        if (!trans_a && !trans_b)
            mo.noalias() = ma * mb;
        else if (!trans_a && trans_b)
            mo.noalias() = ma * mb.transpose();
        else if (trans_a && !trans_b)
            mo.noalias() = ma.transpose() * mb;
        else
            mo.noalias() = ma.transpose() * mb.transpose();
    }
    auto* n = new MatmulNode();
    n->ta = trans_a;
    n->tb = trans_b;
    return make_result(std::move(out), {a, b}, n);
}

Var add(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) shape_fail2("add", a->value, b->value);
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) += b->value.at(i);
    return make_result(std::move(out), {a, b}, new AddNode());
}

Var sub(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) shape_fail2("sub", a->value, b->value);
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) -= b->value.at(i);
    return make_result(std::move(out), {a, b}, new SubNode());
}

Var mul(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) shape_fail2("mul", a->value, b->value);
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) *= b->value.at(i);
    return make_result(std::move(out), {a, b}, new MulNode());
}

Var affine(const Var& a, double scale, double shift) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = scale * out.at(i) + shift;
    auto* n = new AffineNode();
    n->scale = scale;
    return make_result(std::move(out), {a}, n);
}

Var add_rowvec(const Var& a, const Var& v) {
    if (v->value.rows() != 1 || v->value.cols() != a->value.cols()) shape_fail2("add_rowvec", a->value, v->value);
    Tensor out = a->value;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += v->value(0, c);
    return make_result(std::move(out), {a, v}, new AddRowvecNode());
}

Var relu(const Var& a) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i)
        if (out.at(i) < 0.0) out.at(i) = 0.0;
    return make_result(std::move(out), {a}, new ReluNode());
}

Var tanh_act(const Var& a) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = std::tanh(out.at(i));
    return make_result(std::move(out), {a}, new TanhNode());
}

Var rsqrt_shift(const Var& a, double shift) {
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = 1.0 / std::sqrt(out.at(i) + shift);
    return make_result(std::move(out), {a}, new RsqrtShiftNode());
}

Var softmax_rows(const Var& a) {
    Tensor out = a->value;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        double mx = out(r, 0);
        for (std::size_t c = 1; c < out.cols(); ++c) mx = std::max(mx, out(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < out.cols(); ++c) {
            out(r, c) = std::exp(out(r, c) - mx);
            sum += out(r, c);
        }
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= sum;
    }
    return make_result(std::move(out), {a}, new SoftmaxRowsNode());
}

namespace {
double lse_range(const Tensor& t, std::size_t r0, std::size_t c0, std::size_t n, bool along_cols) {
    // max-shifted log-sum-exp over a row (along_cols) or a column
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = along_cols ? t(r0, c0 + i) : t(r0 + i, c0);
        mx = std::max(mx, v);
    }
    if (!std::isfinite(mx)) return mx;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = along_cols ? t(r0, c0 + i) : t(r0 + i, c0);
        sum += std::exp(v - mx);
    }
    return mx + std::log(sum);
}
} // namespace

Var logsumexp_rows(const Var& a) {
    Tensor out(a->value.rows(), 1);
    for (std::size_t r = 0; r < a->value.rows(); ++r) out(r, 0) = lse_range(a->value, r, 0, a->value.cols(), true);
    return make_result(std::move(out), {a}, new LogsumexpRowsNode());
}

Var logsumexp_cols(const Var& a) {
    Tensor out(1, a->value.cols());
    for (std::size_t c = 0; c < a->value.cols(); ++c) out(0, c) = lse_range(a->value, 0, c, a->value.rows(), false);
    return make_result(std::move(out), {a}, new LogsumexpColsNode());
}

Var mean_rows(const Var& a) {
    Tensor out(1, a->value.cols());
    const double inv = 1.0 / static_cast<double>(a->value.rows());
    for (std::size_t r = 0; r < a->value.rows(); ++r)
        for (std::size_t c = 0; c < a->value.cols(); ++c) out(0, c) += a->value(r, c) * inv;
    return make_result(std::move(out), {a}, new MeanRowsNode());
}

Var mean_cols(const Var& a) {
    Tensor out(a->value.rows(), 1);
    const double inv = 1.0 / static_cast<double>(a->value.cols());
    for (std::size_t r = 0; r < a->value.rows(); ++r)
        for (std::size_t c = 0; c < a->value.cols(); ++c) out(r, 0) += a->value(r, c) * inv;
    return make_result(std::move(out), {a}, new MeanColsNode());
}

Var sum_all(const Var& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a->value.numel(); ++i) s += a->value.at(i);
    return make_result(Tensor::scalar(s), {a}, new SumAllNode());
}

Var broadcast_rows(const Var& v, std::size_t rows) {
    if (v->value.rows() != 1) shape_fail("broadcast_rows", v->value);
    Tensor out(rows, v->value.cols());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = v->value(0, c);
    return make_result(std::move(out), {v}, new BroadcastRowsNode());
}

Var broadcast_cols(const Var& v, std::size_t cols) {
    if (v->value.cols() != 1) shape_fail("broadcast_cols", v->value);
    Tensor out(v->value.rows(), cols);
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) out(r, c) = v->value(r, 0);
    return make_result(std::move(out), {v}, new BroadcastColsNode());
}

Var block(const Var& a, std::size_t r0, std::size_t nr, std::size_t c0, std::size_t nc) {
    if (r0 + nr > a->value.rows() || c0 + nc > a->value.cols()) shape_fail("block", a->value);
    Tensor out(nr, nc);
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t c = 0; c < nc; ++c) out(r, c) = a->value(r0 + r, c0 + c);
    auto* n = new BlockNode();
    n->r0 = r0;
    n->c0 = c0;
    return make_result(std::move(out), {a}, n);
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw UsageError("concat_cols: no operands");
    const std::size_t rows = parts[0]->value.rows();
    std::size_t cols = 0;
    for (const Var& p : parts) {
        if (p->value.rows() != rows) shape_fail2("concat_cols", parts[0]->value, p->value);
        cols += p->value.cols();
    }
    Tensor out(rows, cols);
    std::size_t off = 0;
    for (const Var& p : parts) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < p->value.cols(); ++c) out(r, off + c) = p->value(r, c);
        off += p->value.cols();
    }
    return make_result(std::move(out), parts, new ConcatColsNode());
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw UsageError("concat_rows: no operands");
    const std::size_t cols = parts[0]->value.cols();
    std::size_t rows = 0;
    for (const Var& p : parts) {
        if (p->value.cols() != cols) shape_fail2("concat_rows", parts[0]->value, p->value);
        rows += p->value.rows();
    }
    Tensor out(rows, cols);
    std::size_t off = 0;
    for (const Var& p : parts) {
        for (std::size_t r = 0; r < p->value.rows(); ++r)
            for (std::size_t c = 0; c < cols; ++c) out(off + r, c) = p->value(r, c);
        off += p->value.rows();
    }
    return make_result(std::move(out), parts, new ConcatRowsNode());
}

Var transpose(const Var& a) {
    Tensor out(a->value.cols(), a->value.rows());
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = a->value(c, r);
    return make_result(std::move(out), {a}, new TransposeNode());
}

Var select_sum(const Var& a, std::vector<std::pair<std::size_t, std::size_t>> idx) {
    double s = 0.0;
    for (const auto& [r, c] : idx) {
        if (r >= a->value.rows() || c >= a->value.cols()) shape_fail("select_sum", a->value);
        s += a->value(r, c);
    }
    auto* n = new SelectSumNode();
    n->idx = std::move(idx);
    return make_result(Tensor::scalar(s), {a}, n);
}

Var block_diag_matmul(std::shared_ptr<const std::vector<Tensor>> blocks, const Var& x) {
    if (!blocks || blocks->empty()) throw UsageError("block_diag_matmul: no blocks");
    const std::size_t j = (*blocks)[0].rows();
    if ((*blocks)[0].cols() != j || x->value.rows() != blocks->size() * j) shape_fail("block_diag_matmul", x->value);
    const std::size_t cols = x->value.cols();
    Tensor out(x->value.rows(), cols);
    for (std::size_t t = 0; t < blocks->size(); ++t) {
        CMap b = cmap((*blocks)[t]);
        CMap xin(x->value.data() + t * j * cols, static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(cols));
        Map yout(out.data() + t * j * cols, static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(cols));
        yout.noalias() = b * xin;
    }
    auto* n = new BlockDiagMatmulNode();
    n->blocks = std::move(blocks);
    n->j = j;
    return make_result(std::move(out), {x}, n);
}

Var block_mean_rows(const Var& x, std::size_t block_rows) {
    if (block_rows == 0 || x->value.rows() % block_rows != 0) shape_fail("block_mean_rows", x->value);
    const std::size_t t_out = x->value.rows() / block_rows;
    Tensor out(t_out, x->value.cols());
    const double inv = 1.0 / static_cast<double>(block_rows);
    for (std::size_t t = 0; t < t_out; ++t)
        for (std::size_t r = 0; r < block_rows; ++r)
            for (std::size_t c = 0; c < out.cols(); ++c) out(t, c) += x->value(t * block_rows + r, c) * inv;
    auto* n = new BlockMeanRowsNode();
    n->j = block_rows;
    return make_result(std::move(out), {x}, n);
}

Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps) {
    if (gain->value.rows() != 1 || gain->value.cols() != x->value.cols()) shape_fail2("layer_norm_rows", x->value, gain->value);
    if (bias->value.rows() != 1 || bias->value.cols() != x->value.cols()) shape_fail2("layer_norm_rows", x->value, bias->value);
    const Var m = mean_cols(x);
    const Var centered = sub(x, broadcast_cols(m, x->value.cols()));
    const Var var = mean_cols(mul(centered, centered));
    const Var inv_std = rsqrt_shift(var, eps);
    const Var normed = mul(centered, broadcast_cols(inv_std, x->value.cols()));
    return add_rowvec(mul(normed, broadcast_rows(gain, x->value.rows())), bias);
}

void backward(const Var& loss) {
    if (!loss) throw UsageError("backward: null loss");
    if (loss->value.numel() != 1) throw UsageError("backward: loss must be a scalar tensor");
    if (!loss->requires_grad) return;

    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    struct Frame {
        Node* n;
        std::size_t next;
    };
    std::vector<Frame> stack;
    stack.push_back({loss.get(), 0});
    seen.insert(loss.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.n->parents.size()) {
            Node* p = f.n->parents[f.next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.n);
            stack.pop_back();
        }
    }

    loss->ensure_grad().at(0) += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        (*it)->ensure_grad();
        (*it)->backward();
    }
}

} // namespace airtime::nn
