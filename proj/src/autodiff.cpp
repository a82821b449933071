#include "reprog/autodiff.hpp"

#include "reprog/error.hpp"
#include "reprog/kernels.hpp"

namespace reprog::ad {

Var Tape::constant(Tensor value) { return record(std::move(value), false, {}); }

Var Tape::variable(Tensor value) { return record(std::move(value), true, {}); }

Var Tape::record(Tensor value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(backward)});
    return Var{nodes_.size() - 1};
}

Tensor& Tape::grad_accumulator(Var v) {
    Node& node = nodes_[v.id];
    if (node.grad.shape() != node.value.shape()) node.grad = Tensor(node.value.shape());
    return node.grad;
}

const Tensor& Tape::grad(Var v) { return grad_accumulator(v); }

void Tape::backward(Var loss) {
    if (nodes_[loss.id].value.size() != 1)
        fail(ErrorKind::usage, "backward needs a scalar loss, got shape " +
                                   shape_string(nodes_[loss.id].value.shape()));
    for (auto& node : nodes_) node.grad = Tensor{};
    grad_accumulator(loss)[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.requires_grad || !node.backward || node.grad.empty()) continue;
        // The closure may touch other nodes' grads but never this node's storage.
        const Tensor out_grad = node.grad;
        node.backward(*this, out_grad);
    }
}

Var add(Tape& tape, Var a, Var b) {
    require_same_shape(tape.value(a), tape.value(b), "add");
    Tensor out = tape.value(a);
    const auto& bv = tape.value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return tape.record(std::move(out), rg, [a, b](Tape& t, const Tensor& g) {
        for (Var v : {a, b}) {
            if (!t.requires_grad(v)) continue;
            auto& acc = t.grad_accumulator(v);
            for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
        }
    });
}

Var scale(Tape& tape, Var a, double factor) {
    Tensor out = tape.value(a);
    for (auto& v : out.values()) v *= factor;
    return tape.record(std::move(out), tape.requires_grad(a), [a, factor](Tape& t, const Tensor& g) {
        auto& acc = t.grad_accumulator(a);
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += factor * g[i];
    });
}

Var relu(Tape& tape, Var a) {
    Tensor out = kernels::relu(tape.value(a));
    return tape.record(std::move(out), tape.requires_grad(a), [a](Tape& t, const Tensor& g) {
        const auto& in = t.value(a);
        auto& acc = t.grad_accumulator(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (in[i] > 0.0) acc[i] += g[i];
    });
}

Var causal_conv(Tape& tape, Var x, Var kernel, Var bias, std::size_t dilation) {
    Tensor out = kernels::causal_conv(tape.value(x), tape.value(kernel), tape.value(bias), dilation);
    const bool rg = tape.requires_grad(x) || tape.requires_grad(kernel) || tape.requires_grad(bias);
    return tape.record(std::move(out), rg, [x, kernel, bias, dilation](Tape& t, const Tensor& g) {
        const auto& xv = t.value(x);
        const auto& kv = t.value(kernel);
        const std::size_t c_out = kv.dim(0), c_in = kv.dim(1), ksize = kv.dim(2), steps = xv.dim(1);
        if (t.requires_grad(bias)) {
            auto& gb = t.grad_accumulator(bias);
            for (std::size_t c = 0; c < c_out; ++c)
                for (std::size_t s = 0; s < steps; ++s) gb[c] += g[c * steps + s];
        }
        const bool want_x = t.requires_grad(x), want_k = t.requires_grad(kernel);
        if (!want_x && !want_k) return;
        Tensor* gx = want_x ? &t.grad_accumulator(x) : nullptr;
        Tensor* gk = want_k ? &t.grad_accumulator(kernel) : nullptr;
        for (std::size_t c = 0; c < c_out; ++c) {
            const double* grow = g.data().data() + c * steps;
            for (std::size_t ci = 0; ci < c_in; ++ci) {
                const double* xrow = xv.data().data() + ci * steps;
                for (std::size_t k = 0; k < ksize; ++k) {
                    const std::size_t shift = k * dilation;
                    if (shift >= steps) break;
                    const std::size_t widx = (c * c_in + ci) * ksize + k;
                    if (gk) {
                        double acc = 0.0;
                        for (std::size_t s = shift; s < steps; ++s) acc += grow[s] * xrow[s - shift];
                        (*gk)[widx] += acc;
                    }
                    if (gx) {
                        const double w = kv[widx];
                        double* gxrow = &(*gx)[ci * steps];
                        for (std::size_t s = shift; s < steps; ++s) gxrow[s - shift] += w * grow[s];
                    }
                }
            }
        }
    });
}

Var last_step(Tape& tape, Var x) {
    const auto& xv = tape.value(x);
    if (xv.rank() != 2) fail(ErrorKind::dimension, "last_step expects [C x T], got " + shape_string(xv.shape()));
    const std::size_t channels = xv.dim(0), steps = xv.dim(1);
    Tensor out({channels});
    for (std::size_t c = 0; c < channels; ++c) out[c] = xv[c * steps + steps - 1];
    return tape.record(std::move(out), tape.requires_grad(x), [x, channels, steps](Tape& t, const Tensor& g) {
        auto& acc = t.grad_accumulator(x);
        for (std::size_t c = 0; c < channels; ++c) acc[c * steps + steps - 1] += g[c];
    });
}

Var linear(Tape& tape, Var w, Var b, Var x) {
    Tensor out = kernels::affine(tape.value(w), tape.value(b), tape.value(x));
    const bool rg = tape.requires_grad(w) || tape.requires_grad(b) || tape.requires_grad(x);
    return tape.record(std::move(out), rg, [w, b, x](Tape& t, const Tensor& g) {
        const auto& wv = t.value(w);
        const auto& xv = t.value(x);
        const std::size_t rows = wv.dim(0), cols = wv.dim(1);
        if (t.requires_grad(b)) {
            auto& gb = t.grad_accumulator(b);
            for (std::size_t r = 0; r < rows; ++r) gb[r] += g[r];
        }
        if (t.requires_grad(w)) {
            auto& gw = t.grad_accumulator(w);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) gw[r * cols + c] += g[r] * xv[c];
        }
        if (t.requires_grad(x)) {
            auto& gx = t.grad_accumulator(x);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) gx[c] += g[r] * wv[r * cols + c];
        }
    });
}

Var mse(Tape& tape, Var pred, Var target) {
    const double value = kernels::mse(tape.value(pred), tape.value(target));
    const bool rg = tape.requires_grad(pred) || tape.requires_grad(target);
    return tape.record(Tensor({1}, {value}), rg, [pred, target](Tape& t, const Tensor& g) {
        const auto& p = t.value(pred);
        const auto& y = t.value(target);
        const double factor = 2.0 * g[0] / static_cast<double>(p.size());
        if (t.requires_grad(pred)) {
            auto& acc = t.grad_accumulator(pred);
            for (std::size_t i = 0; i < p.size(); ++i) acc[i] += factor * (p[i] - y[i]);
        }
        if (t.requires_grad(target)) {
            auto& acc = t.grad_accumulator(target);
            for (std::size_t i = 0; i < p.size(); ++i) acc[i] -= factor * (p[i] - y[i]);
        }
    });
}

}  // namespace reprog::ad
