#include "kernelsens/analysis.hpp"

#include "kernelsens/error.hpp"

#include <cmath>
#include <limits>

namespace kernelsens {

double theory_rates(ModelKind kind, double N, double d, double k) {
    if (!(N > 0.0) || !(d > 0.0) || !(k > 0.0)) {
        throw InvalidArgument("theory_rates: N, d and k must be positive");
    }
    if (kind == ModelKind::RF) return std::cbrt(std::sqrt(N));
    const double p = 2.0 * d * k;
    return std::log(k) * std::sqrt(N * d / p);
}

namespace {

template <class Model>
SensitivityReport make_sensitivity(const Model& m, const Eigen::VectorXd& z, ModelKind kind) {
    SensitivityReport r;
    r.model_kind = kind;
    const Eigen::VectorXd g = input_gradient(m, z);
    r.z_norm = z.norm();
    r.grad_norm = g.norm();
    r.sensitivity = r.z_norm * r.grad_norm;
    if (m.n_train() > 0) {
        r.theory_bound = theory_rates(kind, static_cast<double>(m.n_train()), static_cast<double>(m.d()),
                                      static_cast<double>(m.k()));
    }
    return r;
}

template <class Model>
AttackResult make_attack(const Model& m, const Eigen::VectorXd& z, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("attack: delta must be positive");
    AttackResult r;
    r.delta = delta;
    const Eigen::VectorXd g = input_gradient(m, z);
    const double gn = g.norm();
    const double f0 = predict(m, z);
    if (gn == 0.0) {
        r.z_adv = z;
        return r;
    }
    const double zn = z.norm();
    r.z_adv = z + (delta * zn / gn) * g;
    r.output_change = std::abs(predict(m, r.z_adv) - f0);
    r.first_order_prediction = delta * zn * gn;
    r.saturation = r.output_change / r.first_order_prediction;
    return r;
}

}  // namespace

SensitivityReport sensitivity(const RfModel& m, const Eigen::VectorXd& z) {
    return make_sensitivity(m, z, ModelKind::RF);
}

SensitivityReport sensitivity(const NtkModel& m, const Eigen::VectorXd& z) {
    return make_sensitivity(m, z, ModelKind::NTK);
}

Eigen::MatrixXd interaction_matrix_dense(const RfModel& m, const Eigen::VectorXd& z,
                                         const CenteredFeatures& centered) {
    if (centered.phi_tilde.cols() != m.k() || centered.nu.size() != m.k()) {
        throw DimensionError("interaction_matrix: centered features do not match the model (k = " +
                             std::to_string(m.k()) + ")");
    }
    return rf_feature_jacobian_t(m, z) * centered.phi_tilde.transpose();
}

InteractionReport interaction_matrix(const RfModel& m, const Eigen::VectorXd& z,
                                     const CenteredFeatures& centered) {
    const Eigen::MatrixXd I = interaction_matrix_dense(m, z, centered);
    InteractionReport r;
    r.per_column_norms = I.colwise().norm().transpose();
    r.frob = I.norm();
    const double n = static_cast<double>(I.cols());
    r.theory = m.activation().moments().m1sq * static_cast<double>(m.k()) * std::sqrt(n) /
               std::sqrt(static_cast<double>(m.d()));
    r.ratio = r.theory > 0.0 ? r.frob / r.theory : std::numeric_limits<double>::infinity();
    return r;
}

Eigen::MatrixXd a_matrix(const RfModel& m, const Eigen::VectorXd& z, const Eigen::MatrixXd& Phi,
                         const KernelSystem& system) {
    if (Phi.cols() != m.k() || Phi.rows() != system.size()) {
        throw DimensionError("a_matrix: feature matrix does not match model or kernel");
    }
    const Eigen::MatrixXd B = rf_feature_jacobian_t(m, z) * Phi.transpose();  // d x N
    // K symmetric: B K^{-1} = (K^{-1} B^T)^T
    return system.solve(Eigen::MatrixXd(B.transpose())).transpose();
}

NoiseBoundCheck noise_bound_check(const RfModel& m, const Dataset& data, const Eigen::VectorXd& z) {
    if (!data.labels || data.labels->ground_truth != GroundTruth::Zero) {
        throw InvalidArgument("noise_bound_check: labels must be pure noise (zero ground truth)");
    }
    if (!m.fitted()) throw UnfittedModelError("noise_bound_check: model has no coefficients");
    const double eps = data.labels->noise_std;
    const Eigen::MatrixXd Phi = rf_features(m, data.X);
    Eigen::MatrixXd K = Phi * Phi.transpose();
    K = 0.5 * (K + K.transpose()).eval();
    const KernelSystem sys(std::move(K));
    const Eigen::MatrixXd A = a_matrix(m, z, Phi, sys);

    NoiseBoundCheck r;
    r.lhs = sensitivity(m, z).sensitivity;
    r.a_frob = A.norm();
    r.rhs = 0.5 * eps * z.norm() * r.a_frob;
    r.holds = r.lhs >= r.rhs;
    return r;
}

SplitBounds split_bounds(const RfModel& m, const Eigen::VectorXd& z, const Eigen::MatrixXd& X,
                         const CenteredFeatures& centered) {
    if (centered.phi_tilde.rows() != X.rows()) {
        throw DimensionError("split_bounds: centered features and X have different row counts");
    }
    const Eigen::MatrixXd Phi = rf_features(m, X);
    Eigen::MatrixXd K = Phi * Phi.transpose();
    K = 0.5 * (K + K.transpose()).eval();
    const KernelSystem sys(std::move(K));

    Eigen::MatrixXd Kt = centered.phi_tilde * centered.phi_tilde.transpose();
    Kt = 0.5 * (Kt + Kt.transpose()).eval();
    SplitBounds r;
    r.centered_spectrum = spectrum(Kt);
    if (!(r.centered_spectrum.lambda_min > 0.0)) {
        throw SingularKernelError("split_bounds: centered kernel is singular",
                                  r.centered_spectrum.lambda_min);
    }
    r.interaction_frob = interaction_matrix_dense(m, z, centered).norm();
    r.a_frob = a_matrix(m, z, Phi, sys).norm();
    r.lower = r.interaction_frob / r.centered_spectrum.lambda_max;
    r.upper = r.interaction_frob / r.centered_spectrum.lambda_min;
    const double n = static_cast<double>(X.rows());
    const double d = static_cast<double>(m.d());
    r.slack_scale = std::sqrt(n + d) / d;
    return r;
}

AttackResult attack(const RfModel& m, const Eigen::VectorXd& z, double delta) {
    return make_attack(m, z, delta);
}

AttackResult attack(const NtkModel& m, const Eigen::VectorXd& z, double delta) {
    return make_attack(m, z, delta);
}

}  // namespace kernelsens
