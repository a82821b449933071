#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "reprog/tensor.hpp"

namespace testing_support {

using reprog::Shape;
using reprog::Tensor;

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = normal(rng);
    return t;
}

// Central differences with step 1e-5; |a - n| <= max(1e-8, 1e-4 * max(|a|, |n|)).
struct GradCheck {
    std::size_t checked = 0;
    std::size_t failures = 0;
    double worst_rel = 0.0;
    std::string first_failure;
};

inline bool grad_close(double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    return diff <= std::max(1e-8, 1e-4 * std::max(std::abs(analytic), std::abs(numeric)));
}

inline void check_gradient(Tensor& param, const Tensor& analytic, const std::function<double()>& loss,
                           const std::string& name, GradCheck& out) {
    constexpr double h = 1e-5;
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = param[i];
        param[i] = saved + h;
        const double up = loss();
        param[i] = saved - h;
        const double down = loss();
        param[i] = saved;
        const double numeric = (up - down) / (2 * h);
        ++out.checked;
        const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
        if (scale > 1e-8) out.worst_rel = std::max(out.worst_rel, std::abs(analytic[i] - numeric) / scale);
        if (!grad_close(analytic[i], numeric)) {
            if (out.failures++ == 0)
                out.first_failure = name + "[" + std::to_string(i) + "]: analytic " + std::to_string(analytic[i]) +
                                    " numeric " + std::to_string(numeric);
        }
    }
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("reprog_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_support
