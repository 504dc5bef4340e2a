#include "kernelsens/solver.hpp"

#include "kernelsens/error.hpp"
#include "kernelsens/quadrature.hpp"

#include <cmath>
#include <limits>

namespace kernelsens {

namespace {

// Beyond this the Cholesky factor carries no useful digits.
constexpr double kUsableCondition = 1e14;

Eigen::MatrixXd gram(const Eigen::MatrixXd& Phi) {
    Eigen::MatrixXd K(Phi.rows(), Phi.rows());
    K.setZero();
    K.selfadjointView<Eigen::Lower>().rankUpdate(Phi);
    K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
    return K;
}

}  // namespace

Spectrum spectrum(const Eigen::MatrixXd& K) {
    if (K.rows() != K.cols() || K.rows() == 0) {
        throw DimensionError("spectrum: matrix must be square and non-empty");
    }
    const double asym = (K - K.transpose()).norm();
    if (asym > 1e-12 * K.norm()) throw InvalidArgument("spectrum: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error("spectrum: eigensolver did not converge");
    const auto& ev = es.eigenvalues();
    return {ev(0), ev(ev.size() - 1)};
}

KernelSystem::KernelSystem(Eigen::MatrixXd K) : K_(std::move(K)) {
    spectrum_ = spectrum(K_);
    const double mean_diag = K_.diagonal().mean();
    for (double rung : kJitterLadder) {
        const double jitter = rung * mean_diag;
        const double lo = spectrum_.lambda_min + jitter;
        const double hi = spectrum_.lambda_max + jitter;
        if (!(lo > 0.0) || hi / lo > kUsableCondition) continue;
        Eigen::MatrixXd shifted = K_;
        shifted.diagonal().array() += jitter;
        llt_.compute(shifted);
        if (llt_.info() == Eigen::Success) {
            jitter_ = jitter;
            return;
        }
    }
    throw SingularKernelError("kernel is numerically singular (lambda_min = " +
                                  std::to_string(spectrum_.lambda_min) + ", lambda_max = " +
                                  std::to_string(spectrum_.lambda_max) + ")",
                              spectrum_.lambda_min);
}

double KernelSystem::condition() const noexcept {
    if (!(spectrum_.lambda_min > 0.0)) return std::numeric_limits<double>::infinity();
    return spectrum_.lambda_max / spectrum_.lambda_min;
}

bool KernelSystem::ill_conditioned() const noexcept {
    return jitter_ > 0.0 || condition() > kMaxCondition;
}

Eigen::VectorXd KernelSystem::solve(const Eigen::VectorXd& b) const {
    if (b.size() != size()) throw DimensionError("KernelSystem::solve: right-hand side length mismatch");
    Eigen::VectorXd s = llt_.solve(b);
    const Eigen::VectorXd r = b - K_ * s;
    s += llt_.solve(r);
    return s;
}

Eigen::MatrixXd KernelSystem::solve(const Eigen::MatrixXd& B) const {
    if (B.rows() != size()) throw DimensionError("KernelSystem::solve: right-hand side row mismatch");
    Eigen::MatrixXd S = llt_.solve(B);
    const Eigen::MatrixXd R = B - K_ * S;
    S += llt_.solve(R);
    return S;
}

double KernelSystem::relative_residual(const Eigen::VectorXd& s, const Eigen::VectorXd& b) const {
    const double bn = b.norm();
    const double rn = (K_ * s - b).norm();
    return bn > 0.0 ? rn / bn : rn;
}

Eigen::VectorXd fit_min_norm_dual(const KernelSystem& system, const Eigen::VectorXd& Y) {
    return system.solve(Y);
}

namespace {

FitReport make_report(const KernelSystem& sys, const Eigen::VectorXd& fitted, const Eigen::VectorXd& Y) {
    FitReport r;
    r.n = sys.size();
    r.jitter_used = sys.jitter_used();
    r.lambda_min = sys.lambda_min_est();
    r.lambda_max = sys.lambda_max_est();
    r.condition = sys.condition();
    r.ill_conditioned = sys.ill_conditioned();
    const double yn = Y.norm();
    r.train_residual = yn > 0.0 ? (fitted - Y).norm() / yn : (fitted - Y).norm();
    return r;
}

}  // namespace

FitReport fit_min_norm(RfModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
    if (X.rows() != Y.size()) throw DimensionError("fit_min_norm: X and Y row counts differ");
    const Eigen::MatrixXd Phi = rf_features(model, X);
    const KernelSystem sys(gram(Phi));
    const Eigen::VectorXd alpha = fit_min_norm_dual(sys, Y);
    model.set_theta(Phi.transpose() * alpha, X.rows());
    return make_report(sys, Phi * model.theta(), Y);
}

FitReport fit_min_norm(NtkModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
    if (X.rows() != Y.size()) throw DimensionError("fit_min_norm: X and Y row counts differ");
    const KernelSystem sys(ntk_kernel(model, X));
    Eigen::VectorXd alpha = fit_min_norm_dual(sys, Y);
    const Eigen::VectorXd fitted = sys.matrix() * alpha;
    model.set_dual(X, std::move(alpha));
    return make_report(sys, fitted, Y);
}

// --- centering -------------------------------------------------------------

Eigen::VectorXd estimate_feature_mean(const RfModel& m, const NuEstimator& estimator,
                                      ProvenanceKind provenance) {
    if (const auto* cf = std::get_if<GaussianClosedForm>(&estimator)) {
        if (provenance != ProvenanceKind::SyntheticSphereGaussian) {
            throw InvalidArgument("GaussianClosedForm centering requires sphere-Gaussian data, got " +
                                  to_string(provenance));
        }
        if (cf->quad_order < kMinQuadOrder) throw InvalidArgument("quadrature order must be >= 16");
        const GaussHermiteRule rule = gauss_hermite(cf->quad_order);
        const Activation& act = m.activation();
        Eigen::VectorXd nu(m.k());
        for (Eigen::Index l = 0; l < m.k(); ++l) {
            const double scale = m.weights().row(l).norm();
            nu(l) = gaussian_expectation(rule, [&act, scale](double x) { return act.value(scale * x); });
        }
        return nu;
    }
    const auto& mc = std::get<MonteCarlo>(estimator);
    if (mc.samples.rows() == 0) throw InvalidArgument("MonteCarlo centering needs at least one sample");
    if (mc.samples.cols() != m.d()) throw DimensionError("MonteCarlo samples have the wrong dimension");
    Eigen::VectorXd nu = rf_features(m, mc.samples).colwise().sum().transpose();
    double count = static_cast<double>(mc.samples.rows());
    if (mc.antithetic) {
        nu += rf_features(m, -mc.samples).colwise().sum().transpose();
        count *= 2.0;
    }
    return nu / count;
}

CenteredFeatures center_features(const RfModel& m, const Eigen::MatrixXd& Phi,
                                 const NuEstimator& estimator, ProvenanceKind provenance) {
    if (Phi.cols() != m.k()) {
        throw DimensionError("center_features: feature matrix has " + std::to_string(Phi.cols()) +
                             " columns, model has k = " + std::to_string(m.k()));
    }
    CenteredFeatures c;
    c.nu = estimate_feature_mean(m, estimator, provenance);
    c.phi_tilde = Phi.rowwise() - c.nu.transpose();
    c.closed_form = std::holds_alternative<GaussianClosedForm>(estimator);
    if (const auto* mc = std::get_if<MonteCarlo>(&estimator)) {
        c.mc_samples = mc->samples.rows() * (mc->antithetic ? 2 : 1);
    }
    return c;
}

NuEstimator default_nu_estimator(ProvenanceKind provenance, Eigen::Index n_train, Eigen::Index d,
                                 Rng& rng, const Eigen::MatrixXd* pool, Eigen::Index mc_per_row) {
    const Eigen::Index count = std::max<Eigen::Index>(1, mc_per_row * n_train);
    switch (provenance) {
        case ProvenanceKind::SyntheticSphereGaussian: return GaussianClosedForm{};
        case ProvenanceKind::SyntheticHypercube: return MonteCarlo{sample_hypercube(count, d, rng), false};
        case ProvenanceKind::Mnist:
        case ProvenanceKind::Cifar10:
            if (pool == nullptr || pool->rows() == 0) {
                throw InvalidArgument("MonteCarlo centering for image data needs held-out rows");
            }
            return MonteCarlo{pool->topRows(std::min(count, pool->rows())), false};
    }
    throw InvalidArgument("unknown provenance");
}

}  // namespace kernelsens
