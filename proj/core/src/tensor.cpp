#include "defgoal/tensor.hpp"

#include "defgoal/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace defgoal {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::string shape_str(const std::vector<int>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out + ")";
}

[[noreturn]] void shape_fail(const std::string& op, const std::vector<int>& a,
                             const std::vector<int>& b) {
    throw ShapeError(op + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

}  // namespace

Tensor::Tensor(std::vector<int> s, std::vector<double> v, bool grad)
    : shape(std::move(s)), values(std::move(v)), requires_grad(grad) {
    if (count_of(shape) != static_cast<int>(values.size()))
        throw ShapeError("Tensor: value count does not match shape " + shape_str(shape));
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    const int n = count_of(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0),
                  requires_grad);
}

int Tensor::count_of(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("Tensor: non-positive dimension");
        n *= d;
    }
    return n;
}

bool Tensor::finite() const {
    return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

Tape::Node& Tape::node(Value v) {
    if (v.id < 0 || v.id >= size()) throw InvalidArgument("Tape: bad value id");
    return *nodes_[static_cast<size_t>(v.id)];
}

const Tape::Node& Tape::node(Value v) const {
    if (v.id < 0 || v.id >= size()) throw InvalidArgument("Tape: bad value id");
    return *nodes_[static_cast<size_t>(v.id)];
}

Value Tape::push(std::unique_ptr<Node> n) {
    for (int p : n->parents)
        if (p < 0 || p >= size()) throw InvalidArgument("Tape: node parent out of range");
    n->grad.assign(n->value.size(), 0.0);
    nodes_.push_back(std::move(n));
    Value v{size() - 1};
    nodes_.back()->forward(*this);
    return v;
}

namespace {

struct LeafNode final : Tape::Node {
    void forward(Tape&) override {
        if (external) std::copy(external, external + value.size(), value.begin());
    }
};

struct MatmulNode final : Tape::Node {
    int m = 0, k = 0, n = 0;
    void forward(Tape& t) override {
        ConstMatMap a(t.values({parents[0]}).data(), m, k);
        ConstMatMap b(t.values({parents[1]}).data(), k, n);
        MatMap(value.data(), m, n).noalias() = a * b;
    }
    void backward(Tape& t) override {
        ConstMatMap a(t.values({parents[0]}).data(), m, k);
        ConstMatMap b(t.values({parents[1]}).data(), k, n);
        ConstMatMap g(grad.data(), m, n);
        MatMap(t.node({parents[0]}).grad.data(), m, k).noalias() += g * b.transpose();
        MatMap(t.node({parents[1]}).grad.data(), k, n).noalias() += a.transpose() * g;
    }
};

struct AddNode final : Tape::Node {
    void forward(Tape& t) override {
        const auto& a = t.values({parents[0]});
        const auto& b = t.values({parents[1]});
        for (size_t i = 0; i < value.size(); ++i) value[i] = a[i] + b[i];
    }
    void backward(Tape& t) override {
        auto& ga = t.node({parents[0]}).grad;
        auto& gb = t.node({parents[1]}).grad;
        for (size_t i = 0; i < grad.size(); ++i) {
            ga[i] += grad[i];
            gb[i] += grad[i];
        }
    }
};

struct BroadcastAddNode final : Tape::Node {
    int rows = 0, cols = 0;
    void forward(Tape& t) override {
        const auto& a = t.values({parents[0]});
        const auto& bias = t.values({parents[1]});
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                value[static_cast<size_t>(r * cols + c)] =
                    a[static_cast<size_t>(r * cols + c)] + bias[static_cast<size_t>(c)];
    }
    void backward(Tape& t) override {
        auto& ga = t.node({parents[0]}).grad;
        auto& gb = t.node({parents[1]}).grad;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                ga[static_cast<size_t>(r * cols + c)] += grad[static_cast<size_t>(r * cols + c)];
                gb[static_cast<size_t>(c)] += grad[static_cast<size_t>(r * cols + c)];
            }
    }
};

struct ReluNode final : Tape::Node {
    void forward(Tape& t) override {
        const auto& a = t.values({parents[0]});
        for (size_t i = 0; i < value.size(); ++i) value[i] = a[i] > 0.0 ? a[i] : 0.0;
    }
    void backward(Tape& t) override {
        auto& ga = t.node({parents[0]}).grad;
        const auto& a = t.values({parents[0]});
        for (size_t i = 0; i < grad.size(); ++i)
            if (a[i] > 0.0) ga[i] += grad[i];
    }
};

struct MaxOverAxisNode final : Tape::Node {
    int outer = 0, k = 0, inner = 0;
    std::vector<int> argmax;  // per output element
    void forward(Tape& t) override {
        const auto& a = t.values({parents[0]});
        argmax.assign(value.size(), 0);
        for (int o = 0; o < outer; ++o) {
            for (int c = 0; c < inner; ++c) {
                double best = a[static_cast<size_t>((o * k) * inner + c)];
                int best_j = 0;
                for (int j = 1; j < k; ++j) {
                    const double x = a[static_cast<size_t>((o * k + j) * inner + c)];
                    if (x > best) {  // strict: ties keep the lowest index
                        best = x;
                        best_j = j;
                    }
                }
                value[static_cast<size_t>(o * inner + c)] = best;
                argmax[static_cast<size_t>(o * inner + c)] = best_j;
            }
        }
    }
    void backward(Tape& t) override {
        auto& ga = t.node({parents[0]}).grad;
        for (int o = 0; o < outer; ++o)
            for (int c = 0; c < inner; ++c) {
                const int j = argmax[static_cast<size_t>(o * inner + c)];
                ga[static_cast<size_t>((o * k + j) * inner + c)] +=
                    grad[static_cast<size_t>(o * inner + c)];
            }
    }
};

struct ConcatNode final : Tape::Node {
    int axis = 0, rows_a = 0, cols_a = 0, rows_b = 0, cols_b = 0;
    void forward(Tape& t) override {
        const auto& a = t.values({parents[0]});
        const auto& b = t.values({parents[1]});
        if (axis == 0) {
            std::copy(a.begin(), a.end(), value.begin());
            std::copy(b.begin(), b.end(), value.begin() + static_cast<long>(a.size()));
        } else {
            const int cols = cols_a + cols_b;
            for (int r = 0; r < rows_a; ++r) {
                std::copy(a.begin() + static_cast<long>(r) * cols_a,
                          a.begin() + static_cast<long>(r + 1) * cols_a,
                          value.begin() + static_cast<long>(r) * cols);
                std::copy(b.begin() + static_cast<long>(r) * cols_b,
                          b.begin() + static_cast<long>(r + 1) * cols_b,
                          value.begin() + static_cast<long>(r) * cols + cols_a);
            }
        }
    }
    void backward(Tape& t) override {
        auto& ga = t.node({parents[0]}).grad;
        auto& gb = t.node({parents[1]}).grad;
        if (axis == 0) {
            for (size_t i = 0; i < ga.size(); ++i) ga[i] += grad[i];
            for (size_t i = 0; i < gb.size(); ++i) gb[i] += grad[i + ga.size()];
        } else {
            const int cols = cols_a + cols_b;
            for (int r = 0; r < rows_a; ++r) {
                for (int c = 0; c < cols_a; ++c)
                    ga[static_cast<size_t>(r * cols_a + c)] +=
                        grad[static_cast<size_t>(r * cols + c)];
                for (int c = 0; c < cols_b; ++c)
                    gb[static_cast<size_t>(r * cols_b + c)] +=
                        grad[static_cast<size_t>(r * cols + cols_a + c)];
            }
        }
    }
};

struct ReshapeNode final : Tape::Node {
    void forward(Tape& t) override {
        const auto& a = t.values({parents[0]});
        std::copy(a.begin(), a.end(), value.begin());
    }
    void backward(Tape& t) override {
        auto& ga = t.node({parents[0]}).grad;
        for (size_t i = 0; i < grad.size(); ++i) ga[i] += grad[i];
    }
};

struct SquaredNormNode final : Tape::Node {
    void forward(Tape& t) override {
        const auto& a = t.values({parents[0]});
        double s = 0.0;
        for (double x : a) s += x * x;
        value[0] = s;
    }
    void backward(Tape& t) override {
        auto& ga = t.node({parents[0]}).grad;
        const auto& a = t.values({parents[0]});
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * a[i] * grad[0];
    }
};

struct ScalarScaleNode final : Tape::Node {
    double s = 1.0;
    void forward(Tape& t) override {
        const auto& a = t.values({parents[0]});
        for (size_t i = 0; i < value.size(); ++i) value[i] = s * a[i];
    }
    void backward(Tape& t) override {
        auto& ga = t.node({parents[0]}).grad;
        for (size_t i = 0; i < grad.size(); ++i) ga[i] += s * grad[i];
    }
};

struct GatherRowsNode final : Tape::Node {
    int cols = 0;
    std::vector<int> rows;
    void forward(Tape& t) override {
        const auto& a = t.values({parents[0]});
        for (size_t r = 0; r < rows.size(); ++r)
            std::copy(a.begin() + static_cast<long>(rows[r]) * cols,
                      a.begin() + static_cast<long>(rows[r] + 1) * cols,
                      value.begin() + static_cast<long>(r) * cols);
    }
    void backward(Tape& t) override {
        auto& ga = t.node({parents[0]}).grad;
        for (size_t r = 0; r < rows.size(); ++r)
            for (int c = 0; c < cols; ++c)
                ga[static_cast<size_t>(rows[r] * cols + c)] +=
                    grad[r * static_cast<size_t>(cols) + static_cast<size_t>(c)];
    }
};

}  // namespace

Value Tape::leaf(const Tensor& t) {
    auto n = std::make_unique<LeafNode>();
    n->shape = t.shape;
    n->value = t.values;
    n->requires_grad = t.requires_grad;
    return push(std::move(n));
}

Value Tape::leaf_external(const std::vector<int>& shape, const double* data, bool requires_grad) {
    auto n = std::make_unique<LeafNode>();
    n->shape = shape;
    n->value.assign(static_cast<size_t>(Tensor::count_of(shape)), 0.0);
    n->external = data;
    n->requires_grad = requires_grad;
    return push(std::move(n));
}

Value Tape::constant(const std::vector<int>& shape, std::vector<double> values) {
    if (Tensor::count_of(shape) != static_cast<int>(values.size()))
        throw ShapeError("constant: value count does not match shape");
    auto n = std::make_unique<LeafNode>();
    n->shape = shape;
    n->value = std::move(values);
    return push(std::move(n));
}

void Tape::set_leaf_values(Value v, const std::vector<double>& values) {
    Node& n = node(v);
    if (n.external) throw InvalidArgument("set_leaf_values: leaf uses external storage");
    if (values.size() != n.value.size()) throw ShapeError("set_leaf_values: size mismatch");
    n.value = values;
}

Value Tape::matmul(Value a, Value b) {
    const Node& na = node(a);
    const Node& nb = node(b);
    if (na.shape.size() != 2 || nb.shape.size() != 2 || na.shape[1] != nb.shape[0])
        shape_fail("matmul", na.shape, nb.shape);
    auto n = std::make_unique<MatmulNode>();
    n->m = na.shape[0];
    n->k = na.shape[1];
    n->n = nb.shape[1];
    n->shape = {n->m, n->n};
    n->parents = {a.id, b.id};
    n->requires_grad = na.requires_grad || nb.requires_grad;
    n->value.assign(static_cast<size_t>(n->m) * static_cast<size_t>(n->n), 0.0);
    return push(std::move(n));
}

Value Tape::add(Value a, Value b) {
    const Node& na = node(a);
    const Node& nb = node(b);
    if (na.shape != nb.shape) shape_fail("add", na.shape, nb.shape);
    auto n = std::make_unique<AddNode>();
    n->shape = na.shape;
    n->parents = {a.id, b.id};
    n->requires_grad = na.requires_grad || nb.requires_grad;
    n->value.assign(na.value.size(), 0.0);
    return push(std::move(n));
}

Value Tape::broadcast_add(Value a, Value bias) {
    const Node& na = node(a);
    const Node& nb = node(bias);
    const int bias_len = Tensor::count_of(nb.shape);
    if (na.shape.size() != 2 || bias_len != na.shape[1])
        shape_fail("broadcast_add", na.shape, nb.shape);
    auto n = std::make_unique<BroadcastAddNode>();
    n->rows = na.shape[0];
    n->cols = na.shape[1];
    n->shape = na.shape;
    n->parents = {a.id, bias.id};
    n->requires_grad = na.requires_grad || nb.requires_grad;
    n->value.assign(na.value.size(), 0.0);
    return push(std::move(n));
}

Value Tape::relu(Value a) {
    const Node& na = node(a);
    auto n = std::make_unique<ReluNode>();
    n->shape = na.shape;
    n->parents = {a.id};
    n->requires_grad = na.requires_grad;
    n->value.assign(na.value.size(), 0.0);
    return push(std::move(n));
}

Value Tape::max_over_axis(Value a, int axis) {
    const Node& na = node(a);
    int outer, k, inner;
    if (na.shape.size() == 3 && axis == 1) {
        outer = na.shape[0];
        k = na.shape[1];
        inner = na.shape[2];
    } else if (na.shape.size() == 2 && axis == 0) {
        outer = 1;
        k = na.shape[0];
        inner = na.shape[1];
    } else {
        throw ShapeError("max_over_axis: need (o,k,i) with axis=1 or 2-D with axis=0, got " +
                         shape_str(na.shape) + " axis=" + std::to_string(axis));
    }
    auto n = std::make_unique<MaxOverAxisNode>();
    n->outer = outer;
    n->k = k;
    n->inner = inner;
    n->shape = {outer, inner};
    n->parents = {a.id};
    n->requires_grad = na.requires_grad;
    n->value.assign(static_cast<size_t>(outer) * static_cast<size_t>(inner), 0.0);
    return push(std::move(n));
}

Value Tape::concat(Value a, Value b, int axis) {
    const Node& na = node(a);
    const Node& nb = node(b);
    if (na.shape.size() != 2 || nb.shape.size() != 2 || axis < 0 || axis > 1)
        shape_fail("concat", na.shape, nb.shape);
    auto n = std::make_unique<ConcatNode>();
    n->axis = axis;
    n->rows_a = na.shape[0];
    n->cols_a = na.shape[1];
    n->rows_b = nb.shape[0];
    n->cols_b = nb.shape[1];
    if (axis == 0) {
        if (na.shape[1] != nb.shape[1]) shape_fail("concat", na.shape, nb.shape);
        n->shape = {na.shape[0] + nb.shape[0], na.shape[1]};
    } else {
        if (na.shape[0] != nb.shape[0]) shape_fail("concat", na.shape, nb.shape);
        n->shape = {na.shape[0], na.shape[1] + nb.shape[1]};
    }
    n->parents = {a.id, b.id};
    n->requires_grad = na.requires_grad || nb.requires_grad;
    n->value.assign(na.value.size() + nb.value.size(), 0.0);
    return push(std::move(n));
}

Value Tape::reshape(Value a, std::vector<int> shape) {
    const Node& na = node(a);
    if (Tensor::count_of(shape) != static_cast<int>(na.value.size()))
        shape_fail("reshape", na.shape, shape);
    auto n = std::make_unique<ReshapeNode>();
    n->shape = std::move(shape);
    n->parents = {a.id};
    n->requires_grad = na.requires_grad;
    n->value.assign(na.value.size(), 0.0);
    return push(std::move(n));
}

Value Tape::squared_norm(Value a) {
    const Node& na = node(a);
    auto n = std::make_unique<SquaredNormNode>();
    n->shape = {1};
    n->parents = {a.id};
    n->requires_grad = na.requires_grad;
    n->value.assign(1, 0.0);
    return push(std::move(n));
}

Value Tape::scalar_scale(Value a, double s) {
    const Node& na = node(a);
    auto n = std::make_unique<ScalarScaleNode>();
    n->s = s;
    n->shape = na.shape;
    n->parents = {a.id};
    n->requires_grad = na.requires_grad;
    n->value.assign(na.value.size(), 0.0);
    return push(std::move(n));
}

Value Tape::gather_rows(Value a, std::vector<int> rows) {
    const Node& na = node(a);
    if (na.shape.size() != 2) throw ShapeError("gather_rows: need 2-D input");
    for (int r : rows)
        if (r < 0 || r >= na.shape[0])
            throw ShapeError("gather_rows: row " + std::to_string(r) + " out of range");
    auto n = std::make_unique<GatherRowsNode>();
    n->cols = na.shape[1];
    n->rows = std::move(rows);
    n->shape = {static_cast<int>(n->rows.size()), n->cols};
    n->parents = {a.id};
    n->requires_grad = na.requires_grad;
    n->value.assign(n->rows.size() * static_cast<size_t>(n->cols), 0.0);
    return push(std::move(n));
}

Value Tape::custom(std::unique_ptr<Node> n) {
    if (Tensor::count_of(n->shape) != static_cast<int>(n->value.size()))
        throw ShapeError("custom node: value count does not match shape");
    return push(std::move(n));
}

void Tape::recompute() {
    for (auto& n : nodes_) n->forward(*this);
}

void Tape::backward(Value output) {
    Node& out = node(output);
    if (out.value.size() != 1) throw InvalidArgument("backward: output must be scalar");
    for (auto& n : nodes_) std::fill(n->grad.begin(), n->grad.end(), 0.0);
    out.grad[0] = 1.0;
    for (int i = output.id; i >= 0; --i) {
        Node& n = *nodes_[static_cast<size_t>(i)];
        if (!n.requires_grad) continue;
        n.backward(*this);
    }
}

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::function<std::vector<double>(const std::vector<double>&)>& grad,
                  const std::vector<double>& point, double h, const std::vector<int>& coords) {
    const std::vector<double> g = grad(point);
    if (g.size() != point.size()) throw InvalidArgument("grad_check: gradient size mismatch");

    std::vector<int> idx = coords;
    if (idx.empty()) {
        idx.resize(point.size());
        for (size_t i = 0; i < point.size(); ++i) idx[i] = static_cast<int>(i);
    }

    double worst = 0.0;
    std::vector<double> x = point;
    for (int i : idx) {
        const double x0 = x[static_cast<size_t>(i)];
        x[static_cast<size_t>(i)] = x0 + h;
        const double fp = f(x);
        x[static_cast<size_t>(i)] = x0 - h;
        const double fm = f(x);
        x[static_cast<size_t>(i)] = x0;
        const double fd = (fp - fm) / (2.0 * h);
        const double ad = g[static_cast<size_t>(i)];
        const double err = std::abs(ad - fd) / std::max(1e-8, std::abs(ad) + std::abs(fd));
        worst = std::max(worst, err);
    }
    return worst;
}

double grad_check_tape(Tape& tape, Value output, Value input_leaf, double h,
                       const std::vector<int>& coords) {
    if (tape.values(output).size() != 1)
        throw InvalidArgument("grad_check_tape: output must be scalar");
    const std::vector<double> point = tape.values(input_leaf);

    const auto f = [&](const std::vector<double>& x) {
        tape.set_leaf_values(input_leaf, x);
        tape.recompute();
        return tape.values(output)[0];
    };
    const auto g = [&](const std::vector<double>& x) {
        tape.set_leaf_values(input_leaf, x);
        tape.recompute();
        tape.backward(output);
        return tape.grad(input_leaf);
    };
    const double worst = grad_check(f, g, point, h, coords);
    tape.set_leaf_values(input_leaf, point);
    tape.recompute();
    return worst;
}

}  // namespace defgoal
