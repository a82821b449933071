#include <gtest/gtest.h>

#include "reprog/autodiff.hpp"
#include "reprog/error.hpp"
#include "reprog/kernels.hpp"
#include "reprog/layers.hpp"
#include "reprog/optimizer.hpp"
#include "support.hpp"

using namespace reprog;
using testing_support::check_gradient;
using testing_support::GradCheck;
using testing_support::random_tensor;

namespace {

// Straight transcription of the causal dilated conv sum, one output at a time.
double conv_at(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t d, std::size_t c, std::size_t t) {
    const std::size_t cin = w.dim(1), k_size = w.dim(2);
    double y = b[c];
    for (std::size_t ci = 0; ci < cin; ++ci)
        for (std::size_t k = 0; k < k_size; ++k) {
            const long src = static_cast<long>(t) - static_cast<long>(k * d);
            if (src < 0) continue;
            y += w[(c * cin + ci) * k_size + k] * x.at(ci, static_cast<std::size_t>(src));
        }
    return y;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::numeric;
}

}  // namespace

TEST(Tensor, RejectsZeroAxisAndSizeMismatch) {
    EXPECT_EQ(kind_of([] { Tensor({2, 0}); }), ErrorKind::dimension);
    EXPECT_EQ(kind_of([] { Tensor({2, 2}, std::vector<double>{1, 2, 3}); }), ErrorKind::dimension);
    Tensor t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
    EXPECT_EQ(t.at(1, 2), 6.0);
    EXPECT_EQ(t.reshaped({3, 2}).at(2, 0), 5.0);
}

TEST(Kernels, CausalConvMatchesDirectSum) {
    std::mt19937_64 rng(3);
    for (std::size_t d : {1u, 2u, 3u}) {
        Tensor x = random_tensor({3, 11}, rng), w = random_tensor({4, 3, 3}, rng), b = random_tensor({4}, rng);
        Tensor y = kernels::causal_conv(x, w, b, d);
        ASSERT_EQ(y.shape(), (Shape{4, 11}));
        for (std::size_t c = 0; c < 4; ++c)
            for (std::size_t t = 0; t < 11; ++t) EXPECT_NEAR(y.at(c, t), conv_at(x, w, b, d, c, t), 1e-12);
    }
}

TEST(Kernels, CausalConvIgnoresTheFuture) {
    std::mt19937_64 rng(4);
    Tensor x = random_tensor({2, 12}, rng), w = random_tensor({3, 2, 3}, rng), b = random_tensor({3}, rng);
    const Tensor before = kernels::causal_conv(x, w, b, 2);
    for (std::size_t c = 0; c < 2; ++c) x.at(c, 7) += 5.0;
    const Tensor after = kernels::causal_conv(x, w, b, 2);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t t = 0; t < 7; ++t) EXPECT_EQ(before.at(c, t), after.at(c, t));
}

TEST(Kernels, ConvDimensionErrorNamesTheAxis) {
    Tensor x({3, 5}), w({2, 4, 3}), b({2});
    try {
        kernels::causal_conv(x, w, b, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::dimension);
        EXPECT_NE(std::string(e.what()).find("channel"), std::string::npos) << e.what();
    }
}

TEST(Layers, ResidualWithZeroKernelIsReluOfInput) {
    ConvLayerParams p{Tensor({2, 2, 3}), Tensor({2}), 1};
    Tensor x({2, 4}, std::vector<double>{-1, 2, -3, 4, 5, -6, 7, -8});
    Tensor y = tcn_sequence(x, std::span<const ConvLayerParams>(&p, 1));
    EXPECT_EQ(y, kernels::relu(x));
}

TEST(Layers, GlorotInitBoundsAndZeroBias) {
    Rng rng(5);
    auto p = init_conv(4, 8, 3, 2, rng);
    const double limit = std::sqrt(6.0 / (4 * 3 + 8 * 3));
    for (double v : p.kernel.values()) EXPECT_LE(std::abs(v), limit);
    for (double v : p.bias.values()) EXPECT_EQ(v, 0.0);
    auto m = init_mlp(8, 5, 1, rng);
    for (double v : m.w1.values()) EXPECT_LE(std::abs(v), std::sqrt(6.0 / 13.0));
}

TEST(Autodiff, BackwardRequiresScalarLoss) {
    ad::Tape tape;
    auto v = tape.variable(Tensor({3}, 1.0));
    EXPECT_EQ(kind_of([&] { tape.backward(v); }), ErrorKind::usage);
}

TEST(Autodiff, ReluSubgradientAtZeroIsZero) {
    ad::Tape tape;
    auto x = tape.variable(Tensor::vector({0.0, 1.0, -1.0}));
    auto target = tape.constant(Tensor::vector({-1.0, -1.0, -1.0}));
    tape.backward(ad::mse(tape, ad::relu(tape, x), target));
    EXPECT_EQ(tape.grad(x)[0], 0.0);
    EXPECT_GT(tape.grad(x)[1], 0.0);
    EXPECT_EQ(tape.grad(x)[2], 0.0);
}

TEST(Autodiff, ConstantsReceiveNoGradient) {
    ad::Tape tape;
    auto c = tape.constant(Tensor::vector({1.0, 2.0}));
    auto v = tape.variable(Tensor::vector({3.0, 4.0}));
    tape.backward(ad::mse(tape, ad::add(tape, c, v), tape.constant(Tensor::vector({0.0, 0.0}))));
    EXPECT_FALSE(tape.requires_grad(c));
    for (double g : tape.grad(c).values()) EXPECT_EQ(g, 0.0);
}

TEST(Autodiff, SharedNodeAccumulatesGradient) {
    // loss = mse(x + x, 0) = mean(4x^2) -> d/dx = 8x / n
    ad::Tape tape;
    auto x = tape.variable(Tensor::vector({1.0, -2.0}));
    tape.backward(ad::mse(tape, ad::add(tape, x, x), tape.constant(Tensor({2}))));
    EXPECT_DOUBLE_EQ(tape.grad(x)[0], 4.0);
    EXPECT_DOUBLE_EQ(tape.grad(x)[1], -8.0);
}

TEST(Autodiff, TcnAndHeadGradientsMatchFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        std::vector<ConvLayerParams> layers{init_conv(3, 4, 3, 1, rng), init_conv(4, 4, 2, 2, rng)};
        for (auto& l : layers) l.bias = random_tensor(l.bias.shape(), rng, 0.1);
        MlpParams head = init_mlp(4, 5, 2, rng);
        Tensor x = random_tensor({3, 9}, rng), y = random_tensor({2}, rng);

        auto loss = [&] { return mse(mlp_forward(tcn_forward(x, layers), head), y); };
        ad::Tape tape;
        auto xv = tape.variable(x);
        std::vector<ad::ConvVars> bound;
        for (const auto& l : layers) bound.push_back(ad::bind(tape, l, true));
        auto hv = ad::bind(tape, head, true);
        auto out = ad::mlp_forward(tape, ad::tcn_forward(tape, xv, bound), hv);
        auto lv = ad::mse(tape, out, tape.constant(y));
        EXPECT_NEAR(tape.value(lv)[0], loss(), 1e-12);
        tape.backward(lv);

        GradCheck gc;
        check_gradient(x, tape.grad(xv), loss, "x", gc);
        for (std::size_t i = 0; i < layers.size(); ++i) {
            check_gradient(layers[i].kernel, tape.grad(bound[i].kernel), loss, "kernel", gc);
            check_gradient(layers[i].bias, tape.grad(bound[i].bias), loss, "bias", gc);
        }
        check_gradient(head.w1, tape.grad(hv.w1), loss, "w1", gc);
        check_gradient(head.b1, tape.grad(hv.b1), loss, "b1", gc);
        check_gradient(head.w2, tape.grad(hv.w2), loss, "w2", gc);
        check_gradient(head.b2, tape.grad(hv.b2), loss, "b2", gc);
        EXPECT_EQ(gc.failures, 0u) << "seed " << seed << ": " << gc.first_failure;
    }
}

TEST(Autodiff, ScaleAndLastStep) {
    ad::Tape tape;
    auto x = tape.variable(Tensor({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6}));
    auto last = ad::last_step(tape, x);
    EXPECT_EQ(tape.value(last), Tensor::vector({3.0, 6.0}));
    auto loss = ad::mse(tape, ad::scale(tape, last, 2.0), tape.constant(Tensor({2})));
    tape.backward(loss);
    // d/dx_last = 2 * 2 * (2 x) / 2 = 4x
    EXPECT_EQ(tape.grad(x).at(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(tape.grad(x).at(0, 2), 12.0);
    EXPECT_DOUBLE_EQ(tape.grad(x).at(1, 2), 24.0);
}

TEST(Optimizer, FirstAdamStepMovesByLearningRate) {
    Tensor p = Tensor::vector({1.0, -1.0});
    Tensor g = Tensor::vector({0.5, -2.0});
    std::vector<Tensor*> params{&p};
    std::vector<const Tensor*> grads{&g};
    auto state = OptimizerState::init(params, AdamConfig{0.1});
    optimizer_step(params, grads, state);
    // bias-corrected m/sqrt(v) = sign(g) on the first step
    EXPECT_NEAR(p[0], 0.9, 1e-6);
    EXPECT_NEAR(p[1], -0.9, 1e-6);
}

TEST(Optimizer, NullGradientLeavesSlotUntouched) {
    Tensor a = Tensor::vector({1.0}), b = Tensor::vector({1.0});
    Tensor g = Tensor::vector({1.0});
    std::vector<Tensor*> params{&a, &b};
    auto state = OptimizerState::init(params, AdamConfig{0.1});
    std::vector<const Tensor*> grads{&g, nullptr};
    optimizer_step(params, grads, state);
    optimizer_step(params, grads, state);
    EXPECT_EQ(b[0], 1.0);
    EXPECT_EQ(state.slot_steps[1], 0u);
    // b's first real step still gets full bias correction
    grads = {nullptr, &g};
    optimizer_step(params, grads, state);
    EXPECT_NEAR(b[0], 0.9, 1e-6);
}

TEST(Kernels, ListedConvCases) {
    const Tensor x3({1, 3}, std::vector<double>{1, 2, 3});
    const Tensor zero_bias({1});
    EXPECT_EQ(kernels::causal_conv(x3, Tensor({1, 1, 1}, 1.0), zero_bias, 1).values(), x3.values());
    EXPECT_EQ(kernels::causal_conv(x3, Tensor({1, 1, 2}, 0.5), zero_bias, 1).values(),
              (std::vector<double>{0.5, 1.5, 2.5}));
    const Tensor x4({1, 4}, std::vector<double>{1, 2, 3, 4});
    EXPECT_EQ(kernels::causal_conv(x4, Tensor({1, 1, 2}, 1.0), zero_bias, 2).values(),
              (std::vector<double>{1, 2, 4, 6}));
}

TEST(Layers, ListedTcnCases) {
    ConvLayerParams identity{Tensor({1, 1, 1}, 1.0), Tensor({1}), 1};
    Tensor x({1, 2}, std::vector<double>{-4, 3});
    // residual-eligible 1->1 layer: relu(x + x) at the last step
    EXPECT_EQ(tcn_forward(x, std::span<const ConvLayerParams>(&identity, 1))[0], 6.0);
    ConvLayerParams zero{Tensor({1, 1, 3}), Tensor({1}), 1};
    Tensor x5({1, 2}, std::vector<double>{1, 5});
    EXPECT_EQ(tcn_forward(x5, std::span<const ConvLayerParams>(&zero, 1))[0], 5.0);
}

TEST(Layers, TwoLayerNetMatchesStraightLineOracle) {
    Rng rng(42);
    std::vector<ConvLayerParams> layers{init_conv(2, 3, 2, 1, rng), init_conv(3, 3, 2, 2, rng)};
    layers[1].bias = random_tensor({3}, rng, 0.2);
    Tensor x = random_tensor({2, 6}, rng);
    // layer 1 (no residual), layer 2 (residual), no shared helpers
    Tensor h1({3, 6}), h2({3, 6});
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t t = 0; t < 6; ++t)
            h1.at(c, t) = std::max(0.0, conv_at(x, layers[0].kernel, layers[0].bias, 1, c, t));
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t t = 0; t < 6; ++t)
            h2.at(c, t) = std::max(0.0, conv_at(h1, layers[1].kernel, layers[1].bias, 2, c, t) + h1.at(c, t));
    const Tensor f = tcn_forward(x, layers);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(f[c], h2.at(c, 5), 1e-14);
}

TEST(Layers, ListedMlpCases) {
    MlpParams id{Tensor({2, 2}, std::vector<double>{1, 0, 0, 1}), Tensor({2}),
                 Tensor({2, 2}, std::vector<double>{1, 0, 0, 1}), Tensor({2})};
    EXPECT_EQ(mlp_forward(Tensor::vector({-1, 2}), id).values(), (std::vector<double>{0, 2}));
    MlpParams zero{Tensor({3, 2}), Tensor({3}), Tensor({1, 3}), Tensor::vector({7})};
    EXPECT_EQ(mlp_forward(Tensor::vector({4, -9}), zero)[0], 7.0);

    Rng rng(8);
    MlpParams p = init_mlp(3, 4, 2, rng);
    p.b1 = random_tensor({4}, rng);
    p.b2 = random_tensor({2}, rng);
    Tensor f = random_tensor({3}, rng);
    for (std::size_t o = 0; o < 2; ++o) {
        double acc = p.b2[o];
        for (std::size_t h = 0; h < 4; ++h) {
            double z = p.b1[h];
            for (std::size_t i = 0; i < 3; ++i) z += p.w1.at(h, i) * f[i];
            acc += p.w2.at(o, h) * std::max(0.0, z);
        }
        EXPECT_NEAR(mlp_forward(f, p)[o], acc, 1e-14);
    }
}

TEST(Kernels, ListedMseCases) {
    EXPECT_EQ(kernels::mse(Tensor::vector({1, 2}), Tensor::vector({1, 2})), 0.0);
    EXPECT_EQ(kernels::mse(Tensor::vector({1, 2}), Tensor::vector({0, 0})), 2.5);
    EXPECT_NEAR(kernels::mse(Tensor::vector({0.25}), Tensor::vector({0.75})), 0.25, 1e-15);
}

TEST(Autodiff, ListedScalarGradients) {
    {
        // mse(w, 0) with one element is w^2
        ad::Tape tape;
        auto w = tape.variable(Tensor::vector({3.0}));
        tape.backward(ad::mse(tape, w, tape.constant(Tensor({1}))));
        EXPECT_EQ(tape.grad(w)[0], 6.0);
    }
    {
        ad::Tape tape;
        auto w = tape.variable(Tensor({1, 1}, 2.0));
        auto x = tape.constant(Tensor::vector({1.0}));
        auto y = ad::linear(tape, w, tape.constant(Tensor({1})), x);
        tape.backward(ad::mse(tape, y, tape.constant(Tensor({1}))));
        EXPECT_EQ(tape.grad(w)[0], 4.0);
    }
}

TEST(Optimizer, ZeroGradientKeepsParamsAndCountsStep) {
    Tensor p = Tensor::vector({1.5, -2.0});
    Tensor g({2});
    std::vector<Tensor*> params{&p};
    std::vector<const Tensor*> grads{&g};
    auto state = OptimizerState::init(params, AdamConfig{});
    optimizer_step(params, grads, state);
    EXPECT_EQ(p, Tensor::vector({1.5, -2.0}));
    EXPECT_EQ(state.step, 1u);
}

TEST(Optimizer, IdenticalStepsAreDeterministic) {
    auto run = [] {
        Tensor p = Tensor::vector({0.3, 0.7});
        Tensor g = Tensor::vector({0.1, -0.4});
        std::vector<Tensor*> params{&p};
        std::vector<const Tensor*> grads{&g};
        auto state = OptimizerState::init(params, AdamConfig{});
        optimizer_step(params, grads, state);
        optimizer_step(params, grads, state);
        return p;
    };
    EXPECT_EQ(run(), run());
}
