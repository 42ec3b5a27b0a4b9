#pragma once

#include <cmath>
#include <string>

#include "vano/errors.hpp"

namespace vano {

enum class Activation { identity, gelu, tanh, softplus, sigmoid };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::gelu: return "gelu";
        case Activation::tanh: return "tanh";
        case Activation::softplus: return "softplus";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "gelu") return Activation::gelu;
    if (s == "tanh") return Activation::tanh;
    if (s == "softplus") return Activation::softplus;
    if (s == "sigmoid") return Activation::sigmoid;
    throw ConfigError("unknown activation: " + s);
}

namespace actfn {

constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

// Exact erf form, not the tanh approximation.
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

inline double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

} // namespace actfn

inline double act_apply(Activation a, double x) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::gelu: return actfn::gelu(x);
        case Activation::tanh: return std::tanh(x);
        case Activation::softplus: return actfn::softplus(x);
        case Activation::sigmoid: return actfn::sigmoid(x);
    }
    return x;
}

// d act / d x as a function of the pre-activation input.
inline double act_grad(Activation a, double x) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::gelu: return actfn::gelu_grad(x);
        case Activation::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::softplus: return actfn::sigmoid(x);
        case Activation::sigmoid: {
            const double s = actfn::sigmoid(x);
            return s * (1.0 - s);
        }
    }
    return 1.0;
}

} // namespace vano
