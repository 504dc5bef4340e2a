#pragma once

#include "kernelsens/data.hpp"
#include "kernelsens/models.hpp"
#include "kernelsens/solver.hpp"

#include <Eigen/Dense>

#include <optional>

namespace kernelsens {

struct SensitivityReport {
    double z_norm = 0.0;
    double grad_norm = 0.0;
    double sensitivity = 0.0;  // z_norm * grad_norm
    ModelKind model_kind = ModelKind::RF;
    std::optional<double> theory_bound;  // theory_rates at the model's (N, d, k)
};

/// Reference growth/decay curves without hidden constants:
/// RF  -> N^(1/6);  NTK -> log(k) sqrt(N d / p) with p = 2 d k.
double theory_rates(ModelKind kind, double N, double d, double k);

/// S(z) = ||z|| * ||grad_z f(z)||.
SensitivityReport sensitivity(const RfModel& m, const Eigen::VectorXd& z);
SensitivityReport sensitivity(const NtkModel& m, const Eigen::VectorXd& z);

// --- interaction matrix -----------------------------------------------------

struct InteractionReport {
    double frob = 0.0;    // ||I(z)||_F
    double theory = 0.0;  // E^2[phi'(rho)] k sqrt(N) / sqrt(d)
    double ratio = 0.0;   // frob / theory, +inf when theory == 0
    Eigen::VectorXd per_column_norms;  // ||V^T diag(phi'(V z)) phi_tilde(V x_i)||
};

/// I(z) = V^T diag(phi'(V z)) phi_tilde^T, d x N.
Eigen::MatrixXd interaction_matrix_dense(const RfModel& m, const Eigen::VectorXd& z,
                                         const CenteredFeatures& centered);

InteractionReport interaction_matrix(const RfModel& m, const Eigen::VectorXd& z,
                                     const CenteredFeatures& centered);

/// A(z) = grad_z Phi(z)^T Phi^T K^{-1}, d x N.
Eigen::MatrixXd a_matrix(const RfModel& m, const Eigen::VectorXd& z, const Eigen::MatrixXd& Phi,
                         const KernelSystem& system);

struct NoiseBoundCheck {
    double lhs = 0.0;  // S(z)
    double rhs = 0.0;  // (eps / 2) ||z|| ||A(z)||_F
    double a_frob = 0.0;
    bool holds = false;
};

/// Compares S(z) with (eps/2) ||z|| ||A(z)||_F. The dataset must carry labels
/// generated with a zero ground truth; eps is their noise level. The model must
/// be fitted on `data`.
NoiseBoundCheck noise_bound_check(const RfModel& m, const Dataset& data, const Eigen::VectorXd& z);

struct SplitBounds {
    double a_frob = 0.0;
    double lower = 0.0;        // ||I||_F / lambda_max(K_tilde)
    double upper = 0.0;        // ||I||_F / lambda_min(K_tilde)
    double slack_scale = 0.0;  // sqrt(N + d) / d, multiplies the unknown constant
    double interaction_frob = 0.0;
    Spectrum centered_spectrum;
};

/// Brackets ||A(z)||_F by the interaction norm over the extremal eigenvalues
/// of the centered kernel. X are the training rows behind `centered`.
SplitBounds split_bounds(const RfModel& m, const Eigen::VectorXd& z, const Eigen::MatrixXd& X,
                         const CenteredFeatures& centered);

// --- attacks ---------------------------------------------------------------

struct AttackResult {
    double delta = 0.0;
    Eigen::VectorXd z_adv;
    double output_change = 0.0;           // |f(z_adv) - f(z)|
    double first_order_prediction = 0.0;  // delta ||z|| ||grad f||
    double saturation = 0.0;              // output_change / first_order_prediction
};

/// z_adv = z + delta ||z|| grad f / ||grad f||. A zero gradient leaves z
/// unchanged with saturation 0.
AttackResult attack(const RfModel& m, const Eigen::VectorXd& z, double delta);
AttackResult attack(const NtkModel& m, const Eigen::VectorXd& z, double delta);

}  // namespace kernelsens
