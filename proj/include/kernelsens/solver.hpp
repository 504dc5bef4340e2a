#pragma once

#include "kernelsens/data.hpp"
#include "kernelsens/models.hpp"

#include <Eigen/Dense>

#include <array>
#include <variant>

namespace kernelsens {

struct Spectrum {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

/// Extremal eigenvalues of a symmetric matrix (dense self-adjoint solver).
/// Throws DimensionError / InvalidArgument for non-square or non-symmetric input.
Spectrum spectrum(const Eigen::MatrixXd& K);

// Jitter levels, relative to the mean diagonal of K.
inline constexpr std::array<double, 4> kJitterLadder = {0.0, 1e-12, 1e-10, 1e-8};
inline constexpr double kMaxCondition = 1e10;

/// Factorized symmetric kernel. Cholesky of K + jitter * I with the smallest
/// rung of the jitter ladder that yields a usable factorization.
class KernelSystem {
public:
    explicit KernelSystem(Eigen::MatrixXd K);

    const Eigen::MatrixXd& matrix() const noexcept { return K_; }
    Eigen::Index size() const noexcept { return K_.rows(); }
    double jitter_used() const noexcept { return jitter_; }
    double lambda_min_est() const noexcept { return spectrum_.lambda_min; }
    double lambda_max_est() const noexcept { return spectrum_.lambda_max; }
    double condition() const noexcept;
    // True when condition() exceeds kMaxCondition or jitter was needed.
    bool ill_conditioned() const noexcept;

    /// K^{-1} b with one step of iterative refinement against the unjittered K.
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;

    double relative_residual(const Eigen::VectorXd& s, const Eigen::VectorXd& b) const;

private:
    Eigen::MatrixXd K_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double jitter_ = 0.0;
    Spectrum spectrum_;
};

struct FitReport {
    Eigen::Index n = 0;
    double jitter_used = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double condition = 0.0;
    double train_residual = 0.0;  // ||f(X) - Y|| / ||Y|| (0 when Y = 0)
    bool ill_conditioned = false;
};

/// Dual coefficients alpha = K^{-1} Y.
Eigen::VectorXd fit_min_norm_dual(const KernelSystem& system, const Eigen::VectorXd& Y);

/// theta* = Phi^T K^{-1} Y, the interpolator of minimum l2 norm.
FitReport fit_min_norm(RfModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& Y);

/// alpha = K_NTK^{-1} Y; predictions stay in dual form.
FitReport fit_min_norm(NtkModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& Y);

// --- centering -------------------------------------------------------------

/// nu_l = E_rho[phi(||V_l|| rho)]; valid for data uniform on the sqrt(d)-sphere.
struct GaussianClosedForm {
    int quad_order = kDefaultQuadOrder;
};

/// nu = average of phi(V x) over the given fresh samples (rows). With
/// antithetic set, each sample x is paired with -x.
struct MonteCarlo {
    Eigen::MatrixXd samples;
    bool antithetic = false;
};

using NuEstimator = std::variant<GaussianClosedForm, MonteCarlo>;

struct CenteredFeatures {
    Eigen::MatrixXd phi_tilde;  // N x k
    Eigen::VectorXd nu;         // k
    bool closed_form = false;
    Eigen::Index mc_samples = 0;
};

Eigen::VectorXd estimate_feature_mean(const RfModel& m, const NuEstimator& estimator,
                                      ProvenanceKind provenance);

/// phi_tilde = Phi - 1 nu^T. GaussianClosedForm requires sphere-Gaussian provenance.
CenteredFeatures center_features(const RfModel& m, const Eigen::MatrixXd& Phi,
                                 const NuEstimator& estimator, ProvenanceKind provenance);

/// Default estimator: closed form for sphere-Gaussian data; otherwise
/// MonteCarlo over `mc_per_row * n_train` fresh rows, drawn from the
/// hypercube sampler or taken from `pool` (held-out rows) for image data.
NuEstimator default_nu_estimator(ProvenanceKind provenance, Eigen::Index n_train, Eigen::Index d,
                                 Rng& rng, const Eigen::MatrixXd* pool = nullptr,
                                 Eigen::Index mc_per_row = 10);

}  // namespace kernelsens
