#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "reprog/tensor.hpp"

// Tensor-level reverse-mode differentiation on an append-only tape. Nodes are
// recorded in evaluation order, so reverse insertion order is a valid
// topological order for the backward sweep.
namespace reprog::ad {

struct Var {
    std::size_t id = 0;
};

class Tape {
public:
    using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

    Var constant(Tensor value);
    Var variable(Tensor value);
    Var record(Tensor value, bool requires_grad, Backward backward);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

    /// Gradient accumulated by the last backward(); zeros if none reached `v`.
    const Tensor& grad(Var v);

    /// Accumulation target used by op backward rules.
    Tensor& grad_accumulator(Var v);

    /// Seeds d(loss)/d(loss) = 1 and sweeps the tape once. `loss` must be scalar.
    void backward(Var loss);

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        Backward backward;
    };
    std::vector<Node> nodes_;
};

Var add(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var a, double factor);
Var relu(Tape& tape, Var a);

/// y[c,t] = bias[c] + sum_{c',k} kernel[c,c',k] * x[c', t - k*dilation], zero left padding.
Var causal_conv(Tape& tape, Var x, Var kernel, Var bias, std::size_t dilation);

/// [C x T] -> [C], the column at the final timestep.
Var last_step(Tape& tape, Var x);

/// w [O x I], b [O], x [I] -> w*x + b.
Var linear(Tape& tape, Var w, Var b, Var x);

/// Mean of squared differences; scalar result of shape [1].
Var mse(Tape& tape, Var pred, Var target);

}  // namespace reprog::ad
