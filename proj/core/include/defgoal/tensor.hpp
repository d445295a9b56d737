#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace defgoal {

/// Dense row-major tensor of 64-bit floats.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<double> v, bool grad = false);

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static int count_of(const std::vector<int>& shape);
    int count() const { return static_cast<int>(values.size()); }
    bool finite() const;
};

struct Value {
    int id = -1;
    bool ok() const { return id >= 0; }
};

/// Reverse-mode tape. Nodes are appended in creation order, which is a
/// topological order; backward walks it once in reverse. Forward values are
/// never mutated by backward. recompute() replays the graph from current
/// leaf contents, keeping any data frozen inside nodes (masks, indices,
/// transport plans) fixed -- that replay is exactly the function the
/// reported gradient differentiates.
class Tape {
  public:
    struct Node {
        std::vector<int> shape;
        std::vector<int> parents;
        std::vector<double> value;
        std::vector<double> grad;
        const double* external = nullptr;  // leaf backed by caller storage
        bool requires_grad = false;

        virtual void forward(Tape&) {}
        virtual void backward(Tape&) {}
        virtual ~Node() = default;
    };

    Value leaf(const Tensor& t);
    Value leaf_external(const std::vector<int>& shape, const double* data, bool requires_grad);
    Value constant(const std::vector<int>& shape, std::vector<double> values);

    Value matmul(Value a, Value b);
    Value add(Value a, Value b);
    Value broadcast_add(Value a, Value bias);
    Value relu(Value a);
    /// Max over the middle axis of a (outer, k, inner) tensor; a 2-D input
    /// with axis 0 pools over rows. Gradient routes to the argmax entry,
    /// ties to the lowest index.
    Value max_over_axis(Value a, int axis);
    Value concat(Value a, Value b, int axis);
    Value reshape(Value a, std::vector<int> shape);
    Value squared_norm(Value a);
    Value scalar_scale(Value a, double s);
    /// Row gather with scatter-add gradient (10th primitive; the grouped
    /// encoder stages select stage-1 feature rows by neighbor index).
    Value gather_rows(Value a, std::vector<int> rows);

    /// Install a caller-defined node (used by the training-loss terms).
    Value custom(std::unique_ptr<Node> node);

    const std::vector<int>& shape(Value v) const { return node(v).shape; }
    const std::vector<double>& values(Value v) const { return node(v).value; }
    const std::vector<double>& grad(Value v) const { return node(v).grad; }
    void set_leaf_values(Value v, const std::vector<double>& values);

    /// Replay forward over all nodes from current leaf contents.
    void recompute();
    /// Seed d(output)=1 and accumulate gradients in reverse order.
    void backward(Value output);

    Node& node(Value v);
    const Node& node(Value v) const;
    int size() const { return static_cast<int>(nodes_.size()); }

  private:
    Value push(std::unique_ptr<Node> n);
    std::vector<std::unique_ptr<Node>> nodes_;
};

/// Max relative error between the analytic gradient and central differences
/// of `f`, over the given coordinates (all when empty):
/// |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::function<std::vector<double>(const std::vector<double>&)>& grad,
                  const std::vector<double>& point, double h = 1e-5,
                  const std::vector<int>& coords = {});

/// grad_check over a tape: perturbs one leaf, replays, and compares against
/// the backward gradient. Throws InvalidArgument unless `output` is scalar.
double grad_check_tape(Tape& tape, Value output, Value input_leaf, double h = 1e-5,
                       const std::vector<int>& coords = {});

}  // namespace defgoal
