#include "kernelsens/activations.hpp"

#include "kernelsens/error.hpp"
#include "kernelsens/quadrature.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace kernelsens {

namespace {

double logistic(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace

Activation::Activation(ActivationKind kind, double beta) : kind_(kind), beta_(beta) {
    moments_.m1 = gaussian_mean_d1(*this, kDefaultQuadOrder);
    moments_.m1sq = moments_.m1 * moments_.m1;
}

Activation Activation::tanh() { return Activation(ActivationKind::Tanh, 0.0); }
Activation Activation::square() { return Activation(ActivationKind::Square, 0.0); }
Activation Activation::identity() { return Activation(ActivationKind::Identity, 0.0); }

Activation Activation::smooth_relu(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw InvalidArgument("smoothrelu: beta must be positive and finite");
    }
    return Activation(ActivationKind::SmoothRelu, beta);
}

Activation Activation::parse(std::string_view name) {
    if (name == "tanh") return tanh();
    if (name == "square") return square();
    if (name == "identity") return identity();
    if (name == "smoothrelu") return smooth_relu(1.0);
    constexpr std::string_view prefix = "smoothrelu:";
    if (name.substr(0, prefix.size()) == prefix) {
        const std::string rest(name.substr(prefix.size()));
        std::size_t used = 0;
        double beta = 0.0;
        try {
            beta = std::stod(rest, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != rest.size()) {
            throw InvalidArgument("invalid smoothrelu beta: '" + rest + "'");
        }
        return smooth_relu(beta);
    }
    throw InvalidArgument("unknown activation '" + std::string(name) +
                          "' (expected tanh | square | smoothrelu:<beta> | identity)");
}

std::string Activation::name() const {
    switch (kind_) {
        case ActivationKind::Tanh: return "tanh";
        case ActivationKind::Square: return "square";
        case ActivationKind::Identity: return "identity";
        case ActivationKind::SmoothRelu: {
            std::ostringstream os;
            os.precision(17);
            os << "smoothrelu:" << beta_;
            return os.str();
        }
    }
    return "unknown";
}

double Activation::value(double x) const noexcept {
    switch (kind_) {
        case ActivationKind::Tanh: return std::tanh(x);
        case ActivationKind::Square: return x * x;
        case ActivationKind::Identity: return x;
        case ActivationKind::SmoothRelu: {
            const double t = beta_ * x;
            return (std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)))) / beta_;
        }
    }
    return 0.0;
}

double Activation::d1(double x) const noexcept {
    switch (kind_) {
        case ActivationKind::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case ActivationKind::Square: return 2.0 * x;
        case ActivationKind::Identity: return 1.0;
        case ActivationKind::SmoothRelu: return logistic(beta_ * x);
    }
    return 0.0;
}

double Activation::d2(double x) const noexcept {
    switch (kind_) {
        case ActivationKind::Tanh: {
            const double t = std::tanh(x);
            return -2.0 * t * (1.0 - t * t);
        }
        case ActivationKind::Square: return 2.0;
        case ActivationKind::Identity: return 0.0;
        case ActivationKind::SmoothRelu: {
            const double s = logistic(beta_ * x);
            return beta_ * s * (1.0 - s);
        }
    }
    return 0.0;
}

Eigen::ArrayXXd Activation::value(const Eigen::ArrayXXd& x) const {
    switch (kind_) {
        case ActivationKind::Tanh: return x.tanh();
        case ActivationKind::Square: return x.square();
        case ActivationKind::Identity: return x;
        case ActivationKind::SmoothRelu: return x.unaryExpr([this](double v) { return value(v); });
    }
    return x;
}

Eigen::ArrayXXd Activation::d1(const Eigen::ArrayXXd& x) const {
    switch (kind_) {
        case ActivationKind::Tanh: return 1.0 - x.tanh().square();
        case ActivationKind::Square: return 2.0 * x;
        case ActivationKind::Identity: return Eigen::ArrayXXd::Ones(x.rows(), x.cols());
        case ActivationKind::SmoothRelu: return x.unaryExpr([this](double v) { return d1(v); });
    }
    return x;
}

Eigen::ArrayXXd Activation::d2(const Eigen::ArrayXXd& x) const {
    switch (kind_) {
        case ActivationKind::Square: return Eigen::ArrayXXd::Constant(x.rows(), x.cols(), 2.0);
        case ActivationKind::Identity: return Eigen::ArrayXXd::Zero(x.rows(), x.cols());
        default: return x.unaryExpr([this](double v) { return d2(v); });
    }
}

double gaussian_mean_d1(const Activation& a, int quad_order) {
    if (quad_order < kMinQuadOrder) {
        throw InvalidArgument("gaussian_mean_d1: quad_order must be >= " +
                              std::to_string(kMinQuadOrder));
    }
    const GaussHermiteRule rule = gauss_hermite(quad_order);
    return gaussian_expectation(rule, [&a](double x) { return a.d1(x); });
}

double gaussian_mean_scaled(const Activation& a, double sigma, int quad_order) {
    if (quad_order < kMinQuadOrder) {
        throw InvalidArgument("gaussian_mean_scaled: quad_order must be >= " +
                              std::to_string(kMinQuadOrder));
    }
    const GaussHermiteRule rule = gauss_hermite(quad_order);
    return gaussian_expectation(rule, [&a, sigma](double x) { return a.value(sigma * x); });
}

}  // namespace kernelsens
