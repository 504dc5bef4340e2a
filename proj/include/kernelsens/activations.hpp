#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>

namespace kernelsens {

enum class ActivationKind { Tanh, Square, SmoothRelu, Identity };

// Gaussian moments of the derivative, rho ~ N(0,1).
struct DerivativeMoments {
    double m1 = 0.0;    // E[phi'(rho)]
    double m1sq = 0.0;  // E[phi'(rho)]^2
};

inline constexpr int kDefaultQuadOrder = 128;
inline constexpr int kMinQuadOrder = 16;

/// Scalar activation with exact first and second derivatives.
///
/// SmoothRelu is the beta-softplus log(1 + exp(beta x)) / beta, whose
/// derivatives are the logistic sigmoid and its derivative, so phi, phi' and
/// phi'' are all Lipschitz. The derivative moments are computed once at
/// construction with the default quadrature order.
class Activation {
public:
    static Activation tanh();
    static Activation square();
    static Activation smooth_relu(double beta = 1.0);
    static Activation identity();

    /// Parses `tanh | square | smoothrelu[:<beta>] | identity`.
    static Activation parse(std::string_view name);

    ActivationKind kind() const noexcept { return kind_; }
    double beta() const noexcept { return beta_; }
    std::string name() const;

    double value(double x) const noexcept;
    double d1(double x) const noexcept;
    double d2(double x) const noexcept;

    Eigen::ArrayXXd value(const Eigen::ArrayXXd& x) const;
    Eigen::ArrayXXd d1(const Eigen::ArrayXXd& x) const;
    Eigen::ArrayXXd d2(const Eigen::ArrayXXd& x) const;

    bool is_even() const noexcept { return kind_ == ActivationKind::Square; }
    bool is_odd() const noexcept {
        return kind_ == ActivationKind::Tanh || kind_ == ActivationKind::Identity;
    }

    const DerivativeMoments& moments() const noexcept { return moments_; }

    friend bool operator==(const Activation& a, const Activation& b) {
        return a.kind_ == b.kind_ && a.beta_ == b.beta_;
    }

private:
    Activation(ActivationKind kind, double beta);

    ActivationKind kind_;
    double beta_;
    DerivativeMoments moments_;
};

/// Gauss-Hermite estimate of E[phi'(rho)], rho ~ N(0,1). Requires
/// quad_order >= 16.
double gaussian_mean_d1(const Activation& a, int quad_order = kDefaultQuadOrder);

/// E[phi(sigma * rho)], rho ~ N(0,1).
double gaussian_mean_scaled(const Activation& a, double sigma,
                            int quad_order = kDefaultQuadOrder);

}  // namespace kernelsens
