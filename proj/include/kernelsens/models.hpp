#pragma once

#include "kernelsens/activations.hpp"
#include "kernelsens/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>

namespace kernelsens {

enum class ModelKind { RF, NTK };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

/// Frozen Gaussian weights, one row per hidden unit, entries N(0, 1/d).
Eigen::MatrixXd sample_gaussian_weights(Eigen::Index k, Eigen::Index d, Rng& rng);

/// Random-features model f(x) = phi(V x)^T theta with frozen first layer V.
class RfModel {
public:
    RfModel(Eigen::MatrixXd V, Activation activation);
    static RfModel sample(Eigen::Index k, Eigen::Index d, Activation activation, Rng& rng);

    const Eigen::MatrixXd& weights() const noexcept { return V_; }
    const Activation& activation() const noexcept { return activation_; }
    Eigen::Index k() const noexcept { return V_.rows(); }
    Eigen::Index d() const noexcept { return V_.cols(); }

    const Eigen::VectorXd& theta() const noexcept { return theta_; }
    bool fitted() const noexcept { return fitted_; }
    // Number of training rows the coefficients were fitted on (0 if unknown).
    Eigen::Index n_train() const noexcept { return n_train_; }

    void set_theta(Eigen::VectorXd theta, Eigen::Index n_train = 0);

    std::uint64_t seed = 0;  // provenance only, carried through save/load

private:
    Eigen::MatrixXd V_;
    Activation activation_;
    Eigen::VectorXd theta_;
    Eigen::Index n_train_ = 0;
    bool fitted_ = false;
};

/// Linearization of the two-layer net sum phi(W1 x) - sum phi(W2 x) at
/// W1 = W2 = W0. Predictions use the dual form k_z^T alpha; the p = 2kd
/// dimensional feature vector is never formed.
class NtkModel {
public:
    /// Rejects activations that are not even unless allow_uneven is set.
    NtkModel(Eigen::MatrixXd W0, Activation activation, bool allow_uneven = false);
    static NtkModel sample(Eigen::Index k, Eigen::Index d, Activation activation, Rng& rng,
                           bool allow_uneven = false);

    const Eigen::MatrixXd& weights() const noexcept { return W0_; }
    const Activation& activation() const noexcept { return activation_; }
    Eigen::Index k() const noexcept { return W0_.rows(); }
    Eigen::Index d() const noexcept { return W0_.cols(); }
    Eigen::Index p() const noexcept { return 2 * k() * d(); }
    bool allow_uneven() const noexcept { return allow_uneven_; }

    const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
    const Eigen::MatrixXd& train_inputs() const noexcept { return train_X_; }
    bool fitted() const noexcept { return fitted_; }
    Eigen::Index n_train() const noexcept { return train_X_.rows(); }

    // Stores the dual coefficients together with the rows they refer to.
    void set_dual(Eigen::MatrixXd train_X, Eigen::VectorXd alpha);

    std::uint64_t seed = 0;

private:
    Eigen::MatrixXd W0_;
    Activation activation_;
    bool allow_uneven_ = false;
    Eigen::MatrixXd train_X_;
    Eigen::VectorXd alpha_;
    bool fitted_ = false;
};

// --- random features -------------------------------------------------------

/// phi(X V^T), n x k.
Eigen::MatrixXd rf_features(const RfModel& m, const Eigen::MatrixXd& X);

/// phi(V z), length k.
Eigen::VectorXd rf_feature_vector(const RfModel& m, const Eigen::VectorXd& z);

/// V^T diag(phi'(V z)) theta.
Eigen::VectorXd rf_input_gradient(const RfModel& m, const Eigen::VectorXd& z);

/// d x k Jacobian transpose V^T diag(phi'(V z)).
Eigen::MatrixXd rf_feature_jacobian_t(const RfModel& m, const Eigen::VectorXd& z);

// --- NTK -------------------------------------------------------------------

/// phi'(X W^T), n x k.
Eigen::MatrixXd ntk_derivative_features(const NtkModel& m, const Eigen::MatrixXd& X);

/// K = 2 (X X^T o G G^T), G = phi'(X W^T).
Eigen::MatrixXd ntk_kernel(const NtkModel& m, const Eigen::MatrixXd& X);

/// Cross kernel between rows of A and rows of B: 2 (A B^T o G_A G_B^T).
Eigen::MatrixXd ntk_cross_kernel(const NtkModel& m, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// d x N matrix grad_z Phi(z)^T Phi(X)^T
///   = 2 X^T diag(phi'(X W^T) phi'(W z)) + 2 W^T diag(phi''(W z)) phi'(X W^T)^T diag(X z).
Eigen::MatrixXd ntk_gradient_cross(const NtkModel& m, const Eigen::VectorXd& z, const Eigen::MatrixXd& X);

/// grad_z f_NTK(z) = ntk_gradient_cross(m, z, X_train) * alpha, computed with
/// matrix-vector products only.
Eigen::VectorXd ntk_input_gradient(const NtkModel& m, const Eigen::VectorXd& z);

// --- shared ----------------------------------------------------------------

double predict(const RfModel& m, const Eigen::VectorXd& z);
double predict(const NtkModel& m, const Eigen::VectorXd& z);
Eigen::VectorXd predict(const RfModel& m, const Eigen::MatrixXd& Z);
Eigen::VectorXd predict(const NtkModel& m, const Eigen::MatrixXd& Z);

inline Eigen::VectorXd input_gradient(const RfModel& m, const Eigen::VectorXd& z) {
    return rf_input_gradient(m, z);
}
inline Eigen::VectorXd input_gradient(const NtkModel& m, const Eigen::VectorXd& z) {
    return ntk_input_gradient(m, z);
}

}  // namespace kernelsens
