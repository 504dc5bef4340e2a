#include "kernelsens/models.hpp"

#include "kernelsens/error.hpp"

#include <cmath>

namespace kernelsens {

std::string to_string(ModelKind kind) { return kind == ModelKind::RF ? "rf" : "ntk"; }

ModelKind parse_model_kind(const std::string& text) {
    if (text == "rf" || text == "RF") return ModelKind::RF;
    if (text == "ntk" || text == "NTK") return ModelKind::NTK;
    throw InvalidArgument("unknown model '" + text + "' (expected rf | ntk)");
}

Eigen::MatrixXd sample_gaussian_weights(Eigen::Index k, Eigen::Index d, Rng& rng) {
    if (k < 1 || d < 1) throw InvalidArgument("weight matrix dimensions must be positive");
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    Eigen::MatrixXd W(k, d);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) W(i, j) = normal(rng);
    }
    return W;
}

namespace {

void require_cols(const Eigen::MatrixXd& X, Eigen::Index d, const char* what) {
    if (X.cols() != d) {
        throw DimensionError(std::string(what) + ": input has " + std::to_string(X.cols()) +
                             " columns, model expects d = " + std::to_string(d));
    }
}

void require_len(const Eigen::VectorXd& z, Eigen::Index d, const char* what) {
    if (z.size() != d) {
        throw DimensionError(std::string(what) + ": vector has length " + std::to_string(z.size()) +
                             ", model expects d = " + std::to_string(d));
    }
}

}  // namespace

// --- RfModel ---------------------------------------------------------------

RfModel::RfModel(Eigen::MatrixXd V, Activation activation)
    : V_(std::move(V)), activation_(activation), theta_(Eigen::VectorXd::Zero(V_.rows())) {
    if (V_.rows() < 1 || V_.cols() < 1) throw InvalidArgument("RfModel: empty weight matrix");
}

RfModel RfModel::sample(Eigen::Index k, Eigen::Index d, Activation activation, Rng& rng) {
    return RfModel(sample_gaussian_weights(k, d, rng), activation);
}

void RfModel::set_theta(Eigen::VectorXd theta, Eigen::Index n_train) {
    if (theta.size() != k()) {
        throw DimensionError("RfModel: theta has length " + std::to_string(theta.size()) +
                             ", expected k = " + std::to_string(k()));
    }
    theta_ = std::move(theta);
    n_train_ = n_train;
    fitted_ = true;
}

Eigen::MatrixXd rf_features(const RfModel& m, const Eigen::MatrixXd& X) {
    require_cols(X, m.d(), "rf_features");
    const Eigen::MatrixXd pre = X * m.weights().transpose();
    return m.activation().value(pre.array()).matrix();
}

Eigen::VectorXd rf_feature_vector(const RfModel& m, const Eigen::VectorXd& z) {
    require_len(z, m.d(), "rf_feature_vector");
    const Eigen::VectorXd pre = m.weights() * z;
    return m.activation().value(pre.array()).matrix();
}

Eigen::MatrixXd rf_feature_jacobian_t(const RfModel& m, const Eigen::VectorXd& z) {
    require_len(z, m.d(), "rf_feature_jacobian_t");
    const Eigen::VectorXd pre = m.weights() * z;
    const Eigen::ArrayXd slope = m.activation().d1(pre.array());
    return m.weights().transpose() * slope.matrix().asDiagonal();
}

Eigen::VectorXd rf_input_gradient(const RfModel& m, const Eigen::VectorXd& z) {
    if (!m.fitted()) throw UnfittedModelError("rf_input_gradient: model has no coefficients");
    require_len(z, m.d(), "rf_input_gradient");
    const Eigen::VectorXd pre = m.weights() * z;
    const Eigen::ArrayXd slope = m.activation().d1(pre.array());
    return m.weights().transpose() * (slope * m.theta().array()).matrix();
}

double predict(const RfModel& m, const Eigen::VectorXd& z) {
    if (!m.fitted()) throw UnfittedModelError("predict: RF model has no coefficients");
    return rf_feature_vector(m, z).dot(m.theta());
}

Eigen::VectorXd predict(const RfModel& m, const Eigen::MatrixXd& Z) {
    if (!m.fitted()) throw UnfittedModelError("predict: RF model has no coefficients");
    return rf_features(m, Z) * m.theta();
}

// --- NtkModel --------------------------------------------------------------

NtkModel::NtkModel(Eigen::MatrixXd W0, Activation activation, bool allow_uneven)
    : W0_(std::move(W0)), activation_(activation), allow_uneven_(allow_uneven) {
    if (W0_.rows() < 1 || W0_.cols() < 1) throw InvalidArgument("NtkModel: empty weight matrix");
    if (!activation_.is_even() && !allow_uneven_) {
        throw InvalidArgument("NtkModel: activation '" + activation_.name() +
                              "' is not even; pass allow_uneven to use it anyway");
    }
}

NtkModel NtkModel::sample(Eigen::Index k, Eigen::Index d, Activation activation, Rng& rng,
                          bool allow_uneven) {
    return NtkModel(sample_gaussian_weights(k, d, rng), activation, allow_uneven);
}

void NtkModel::set_dual(Eigen::MatrixXd train_X, Eigen::VectorXd alpha) {
    require_cols(train_X, d(), "NtkModel::set_dual");
    if (alpha.size() != train_X.rows()) {
        throw DimensionError("NtkModel: alpha has length " + std::to_string(alpha.size()) + " for " +
                             std::to_string(train_X.rows()) + " training rows");
    }
    train_X_ = std::move(train_X);
    alpha_ = std::move(alpha);
    fitted_ = true;
}

Eigen::MatrixXd ntk_derivative_features(const NtkModel& m, const Eigen::MatrixXd& X) {
    require_cols(X, m.d(), "ntk_derivative_features");
    const Eigen::MatrixXd pre = X * m.weights().transpose();
    return m.activation().d1(pre.array()).matrix();
}

Eigen::MatrixXd ntk_kernel(const NtkModel& m, const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd G = ntk_derivative_features(m, X);
    Eigen::MatrixXd inner(X.rows(), X.rows());
    inner.setZero();
    inner.selfadjointView<Eigen::Lower>().rankUpdate(X);
    Eigen::MatrixXd act(X.rows(), X.rows());
    act.setZero();
    act.selfadjointView<Eigen::Lower>().rankUpdate(G);
    Eigen::MatrixXd K(X.rows(), X.rows());
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
        for (Eigen::Index i = j; i < K.rows(); ++i) {
            K(i, j) = 2.0 * inner(i, j) * act(i, j);
            K(j, i) = K(i, j);
        }
    }
    return K;
}

Eigen::MatrixXd ntk_cross_kernel(const NtkModel& m, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::MatrixXd GA = ntk_derivative_features(m, A);
    const Eigen::MatrixXd GB = ntk_derivative_features(m, B);
    return 2.0 * ((A * B.transpose()).array() * (GA * GB.transpose()).array()).matrix();
}

Eigen::MatrixXd ntk_gradient_cross(const NtkModel& m, const Eigen::VectorXd& z, const Eigen::MatrixXd& X) {
    require_len(z, m.d(), "ntk_gradient_cross");
    require_cols(X, m.d(), "ntk_gradient_cross");
    const Eigen::MatrixXd& W = m.weights();
    const Eigen::VectorXd wz = W * z;
    const Eigen::VectorXd gz = m.activation().d1(wz.array()).matrix();
    const Eigen::VectorXd hz = m.activation().d2(wz.array()).matrix();
    const Eigen::MatrixXd G = ntk_derivative_features(m, X);  // N x k
    const Eigen::VectorXd u = G * gz;                         // phi'(X W^T) phi'(W z)
    const Eigen::VectorXd xz = X * z;

    Eigen::MatrixXd M = 2.0 * X.transpose() * u.asDiagonal();
    M.noalias() += 2.0 * (W.transpose() * hz.asDiagonal()) * G.transpose() * xz.asDiagonal();
    return M;
}

Eigen::VectorXd ntk_input_gradient(const NtkModel& m, const Eigen::VectorXd& z) {
    if (!m.fitted()) throw UnfittedModelError("ntk_input_gradient: model has no dual coefficients");
    require_len(z, m.d(), "ntk_input_gradient");
    const Eigen::MatrixXd& W = m.weights();
    const Eigen::MatrixXd& X = m.train_inputs();
    const Eigen::VectorXd wz = W * z;
    const Eigen::ArrayXd gz = m.activation().d1(wz.array());
    const Eigen::ArrayXd hz = m.activation().d2(wz.array());
    const Eigen::MatrixXd G = ntk_derivative_features(m, X);
    const Eigen::ArrayXd u = (G * gz.matrix()).array();
    const Eigen::ArrayXd xz = (X * z).array();

    const Eigen::VectorXd first = X.transpose() * (u * m.alpha().array()).matrix();
    const Eigen::VectorXd mixed = G.transpose() * (xz * m.alpha().array()).matrix();
    const Eigen::VectorXd second = W.transpose() * (hz * mixed.array()).matrix();
    return 2.0 * (first + second);
}

double predict(const NtkModel& m, const Eigen::VectorXd& z) {
    if (!m.fitted()) throw UnfittedModelError("predict: NTK model has no dual coefficients");
    require_len(z, m.d(), "predict");
    const Eigen::VectorXd gz = m.activation().d1((m.weights() * z).array()).matrix();
    const Eigen::MatrixXd G = ntk_derivative_features(m, m.train_inputs());
    const Eigen::ArrayXd kz = 2.0 * (m.train_inputs() * z).array() * (G * gz).array();
    return (kz * m.alpha().array()).sum();
}

Eigen::VectorXd predict(const NtkModel& m, const Eigen::MatrixXd& Z) {
    if (!m.fitted()) throw UnfittedModelError("predict: NTK model has no dual coefficients");
    return ntk_cross_kernel(m, Z, m.train_inputs()) * m.alpha();
}

}  // namespace kernelsens
