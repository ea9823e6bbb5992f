#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace rscopt {

enum class ActKind { Tanh, Sigmoid, Gelu, Softplus, Identity };

namespace detail {

inline double std_normal_pdf(double x) {
    return std::exp(-0.5 * x * x) * 0.39894228040143267794;  // 1/sqrt(2*pi)
}
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

inline double act_eval(ActKind k, double x) {
    switch (k) {
        case ActKind::Tanh: return std::tanh(x);
        case ActKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case ActKind::Gelu: return x * std_normal_cdf(x);
        case ActKind::Softplus: return x > 30.0 ? x + std::exp(-x) : std::log1p(std::exp(x));
        case ActKind::Identity: return x;
    }
    return 0.0;
}

inline double act_deriv(ActKind k, double x) {
    switch (k) {
        case ActKind::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case ActKind::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
        case ActKind::Gelu: return std_normal_cdf(x) + x * std_normal_pdf(x);
        case ActKind::Softplus: return 1.0 / (1.0 + std::exp(-x));
        case ActKind::Identity: return 1.0;
    }
    return 0.0;
}

inline double act_deriv2(ActKind k, double x) {
    switch (k) {
        case ActKind::Tanh: {
            const double t = std::tanh(x);
            return -2.0 * t * (1.0 - t * t);
        }
        case ActKind::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s) * (1.0 - 2.0 * s);
        }
        case ActKind::Gelu: return (2.0 - x * x) * std_normal_pdf(x);
        case ActKind::Softplus: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
        case ActKind::Identity: return 0.0;
    }
    return 0.0;
}

/// max |f| over the grid [-20, 20] with step 1e-4.
inline double grid_max_abs(ActKind k, double (*f)(ActKind, double)) {
    double best = 0.0;
    for (long i = -200000; i <= 200000; ++i) {
        const double v = std::abs(f(k, static_cast<double>(i) * 1e-4));
        if (v > best) best = v;
    }
    return best;
}

}  // namespace detail

/// Pointwise activation with its Lipschitz constant, smoothness constant
/// (bound on |phi''|), and value at zero.
struct Activation {
    ActKind kind = ActKind::Tanh;
    double lipschitz = 1.0;
    double smoothness = 0.7698003589195010;  // 4/(3*sqrt(3))
    double value_at_zero = 0.0;

    static Activation make(ActKind k) {
        Activation a;
        a.kind = k;
        switch (k) {
            case ActKind::Tanh:
                a.lipschitz = 1.0;
                a.smoothness = 4.0 / (3.0 * std::sqrt(3.0));
                a.value_at_zero = 0.0;
                break;
            case ActKind::Sigmoid:
                a.lipschitz = 0.25;
                a.smoothness = 1.0 / (6.0 * std::sqrt(3.0));
                a.value_at_zero = 0.5;
                break;
            case ActKind::Softplus:
                a.lipschitz = 1.0;
                a.smoothness = 0.25;
                a.value_at_zero = std::log(2.0);
                break;
            case ActKind::Identity:
                a.lipschitz = 1.0;
                a.smoothness = 0.0;
                a.value_at_zero = 0.0;
                break;
            case ActKind::Gelu: {
                // no published closed forms; maximize |phi'|, |phi''| on a grid
                static const double lip = detail::grid_max_abs(ActKind::Gelu, detail::act_deriv);
                static const double smo = detail::grid_max_abs(ActKind::Gelu, detail::act_deriv2);
                a.lipschitz = lip;
                a.smoothness = smo;
                a.value_at_zero = 0.0;
                break;
            }
        }
        return a;
    }

    static Activation from_name(const std::string& name) {
        if (name == "tanh") return make(ActKind::Tanh);
        if (name == "sigmoid") return make(ActKind::Sigmoid);
        if (name == "gelu") return make(ActKind::Gelu);
        if (name == "softplus") return make(ActKind::Softplus);
        if (name == "identity") return make(ActKind::Identity);
        throw std::invalid_argument("unknown activation: " + name);
    }

    std::string name() const {
        switch (kind) {
            case ActKind::Tanh: return "tanh";
            case ActKind::Sigmoid: return "sigmoid";
            case ActKind::Gelu: return "gelu";
            case ActKind::Softplus: return "softplus";
            case ActKind::Identity: return "identity";
        }
        return "?";
    }

    double eval(double x) const {
        if (!std::isfinite(x)) throw std::domain_error("activation: non-finite input");
        return detail::act_eval(kind, x);
    }
    double deriv(double x) const {
        if (!std::isfinite(x)) throw std::domain_error("activation: non-finite input");
        return detail::act_deriv(kind, x);
    }
    double deriv2(double x) const {
        if (!std::isfinite(x)) throw std::domain_error("activation: non-finite input");
        return detail::act_deriv2(kind, x);
    }
};

}  // namespace rscopt
