#include "reprog/kernels.hpp"

#include <string>

#include "reprog/error.hpp"

namespace reprog::kernels {

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor causal_conv(const Tensor& x, const Tensor& kernel, const Tensor& bias, std::size_t dilation) {
    if (x.rank() != 2) fail(ErrorKind::dimension, "conv input must be [channels x time], got " + shape_string(x.shape()));
    if (kernel.rank() != 3)
        fail(ErrorKind::dimension, "conv kernel must be [out x in x kernel], got " + shape_string(kernel.shape()));
    if (dilation < 1) fail(ErrorKind::dimension, "conv dilation must be >= 1");
    const std::size_t c_out = kernel.dim(0), c_in = kernel.dim(1), ksize = kernel.dim(2);
    if (x.dim(0) != c_in)
        fail(ErrorKind::dimension, "conv channel axis: input has " + std::to_string(x.dim(0)) +
                                       " channels, kernel expects " + std::to_string(c_in));
    if (bias.rank() != 1 || bias.dim(0) != c_out)
        fail(ErrorKind::dimension, "conv bias axis: expected [" + std::to_string(c_out) + "], got " +
                                       shape_string(bias.shape()));
    const std::size_t steps = x.dim(1);
    Tensor y({c_out, steps});
    for (std::size_t c = 0; c < c_out; ++c) {
        double* yrow = &y[c * steps];
        for (std::size_t s = 0; s < steps; ++s) yrow[s] = bias[c];
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const double* xrow = x.data().data() + ci * steps;
            for (std::size_t k = 0; k < ksize; ++k) {
                const std::size_t shift = k * dilation;
                if (shift >= steps) break;
                const double w = kernel[(c * c_in + ci) * ksize + k];
                for (std::size_t s = shift; s < steps; ++s) yrow[s] += w * xrow[s - shift];
            }
        }
    }
    return y;
}

Tensor affine(const Tensor& w, const Tensor& b, const Tensor& x) {
    if (w.rank() != 2) fail(ErrorKind::dimension, "weight must be a matrix, got " + shape_string(w.shape()));
    const std::size_t rows = w.dim(0), cols = w.dim(1);
    if (x.rank() != 1 || x.dim(0) != cols)
        fail(ErrorKind::dimension, "linear input axis: expected [" + std::to_string(cols) + "], got " +
                                       shape_string(x.shape()));
    if (b.rank() != 1 || b.dim(0) != rows)
        fail(ErrorKind::dimension, "linear bias axis: expected [" + std::to_string(rows) + "], got " +
                                       shape_string(b.shape()));
    Tensor y({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b[r];
        for (std::size_t c = 0; c < cols; ++c) acc += w[r * cols + c] * x[c];
        y[r] = acc;
    }
    return y;
}

double mse(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

}  // namespace reprog::kernels
