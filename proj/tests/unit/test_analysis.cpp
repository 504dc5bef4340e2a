#include <doctest.h>

#include "kernelsens/analysis.hpp"
#include "kernelsens/error.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>

using namespace kernelsens;

namespace {

// Frozen from a sweep over tanh / smoothrelu / square, d in {50, 100},
// N in {50, 100}, k in {400, 1600}, 3 seeds each: A(z) never left [lower, upper].
constexpr double kSplitSlackConstant = 0.0;

Eigen::VectorXd gaussian_vector(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

Eigen::VectorXd sphere_point(Eigen::Index d, Rng& rng) { return sample_sphere_gaussian(1, d, rng).row(0).transpose(); }

CenteredFeatures closed_form_centering(const RfModel& m, const Eigen::MatrixXd& X) {
    return center_features(m, rf_features(m, X), GaussianClosedForm{}, ProvenanceKind::SyntheticSphereGaussian);
}

}  // namespace

TEST_CASE("theory rates") {
    CHECK(theory_rates(ModelKind::RF, 64, 10, 100) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(theory_rates(ModelKind::NTK, 100, 50, 400) == doctest::Approx(std::log(400.0) * std::sqrt(1.0 / 8)).epsilon(1e-15));
    for (double d : {3.0, 17.0, 1000.0})
        CHECK(theory_rates(ModelKind::NTK, 250, d, 250) == doctest::Approx(std::log(250.0) / std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(theory_rates(ModelKind::RF, 0, 1, 1), InvalidArgument);
}

TEST_CASE("sensitivity closed cases") {
    Rng rng(1);
    RfModel zero = RfModel::sample(10, 4, Activation::tanh(), rng);
    zero.set_theta(Eigen::VectorXd::Zero(10));
    CHECK(sensitivity(zero, sphere_point(4, rng)).sensitivity == 0.0);

    const Eigen::Index d = 9;
    RfModel lin(Eigen::MatrixXd::Identity(d, d), Activation::identity());
    lin.set_theta(Eigen::VectorXd::Unit(d, 0), 1);
    const SensitivityReport r = sensitivity(lin, sphere_point(d, rng));
    CHECK(r.sensitivity == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(r.grad_norm == 1.0);
    REQUIRE(r.theory_bound.has_value());
    CHECK(*r.theory_bound == 1.0);
}

TEST_CASE("rf sensitivity matches the finite-difference gradient") {
    Rng rng(2);
    RfModel m = RfModel::sample(800, 50, Activation::tanh(), rng);
    const Eigen::MatrixXd X = sample_sphere_gaussian(100, 50, rng);
    fit_min_norm(m, X, gaussian_vector(100, rng));
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::VectorXd z = sphere_point(50, rng);
        const Eigen::VectorXd fd =
            oracle::fd_gradient([&](const Eigen::VectorXd& x) { return predict(m, x); }, z, 1e-5 * std::sqrt(50.0));
        const double expected = z.norm() * fd.norm();
        CHECK(std::abs(sensitivity(m, z).sensitivity - expected) <= 1e-4 * expected);
    }
}

TEST_CASE("sensitivity is linear in the labels") {
    Rng rng(3);
    const Eigen::MatrixXd X = sample_sphere_gaussian(30, 10, rng);
    const Eigen::VectorXd Y = gaussian_vector(30, rng);
    const Eigen::VectorXd z = sphere_point(10, rng);
    for (double c : {0.5, 3.0, 1e3}) {
        Rng wa(4), wb(4);
        RfModel a = RfModel::sample(200, 10, Activation::tanh(), wa);
        RfModel b = RfModel::sample(200, 10, Activation::tanh(), wb);
        fit_min_norm(a, X, Y);
        fit_min_norm(b, X, c * Y);
        CHECK(sensitivity(b, z).sensitivity == doctest::Approx(c * sensitivity(a, z).sensitivity).epsilon(1e-12));

        Rng na(5), nb(5);
        NtkModel p = NtkModel::sample(20, 10, Activation::square(), na);
        NtkModel q = NtkModel::sample(20, 10, Activation::square(), nb);
        fit_min_norm(p, X, Y);
        fit_min_norm(q, X, c * Y);
        CHECK(sensitivity(q, z).sensitivity == doctest::Approx(c * sensitivity(p, z).sensitivity).epsilon(1e-12));
    }
}

TEST_CASE("interaction matrix with a flat activation slope is zero") {
    // square activation with V = 0 has phi' = 0 at every input
    Rng rng(6);
    const RfModel m(Eigen::MatrixXd::Zero(5, 4), Activation::square());
    const Eigen::MatrixXd X = sample_sphere_gaussian(6, 4, rng);
    const InteractionReport r = interaction_matrix(m, sphere_point(4, rng), closed_form_centering(m, X));
    CHECK(r.frob == 0.0);
}

TEST_CASE("square activation has zero theory and an infinite ratio") {
    Rng rng(7);
    const RfModel m = RfModel::sample(50, 8, Activation::square(), rng);
    const Eigen::MatrixXd X = sample_sphere_gaussian(6, 8, rng);
    const InteractionReport r = interaction_matrix(m, sphere_point(8, rng), closed_form_centering(m, X));
    CHECK(r.theory == 0.0);
    CHECK(r.ratio == std::numeric_limits<double>::infinity());
    CHECK(r.frob > 0.0);
}

TEST_CASE("Frobenius norm decomposes over training columns") {
    Rng rng(8);
    const RfModel m = RfModel::sample(300, 20, Activation::tanh(), rng);
    const Eigen::MatrixXd X = sample_sphere_gaussian(15, 20, rng);
    const CenteredFeatures c = closed_form_centering(m, X);
    const Eigen::VectorXd z = sphere_point(20, rng);
    const InteractionReport r = interaction_matrix(m, z, c);
    double total = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Eigen::VectorXd Vx = m.weights() * z;
        const Eigen::VectorXd col =
            m.weights().transpose() * (Activation::tanh().d1(Vx.array()) * c.phi_tilde.row(i).transpose().array()).matrix();
        total += col.squaredNorm();
        CHECK(r.per_column_norms(i) == doctest::Approx(col.norm()).epsilon(1e-12));
    }
    CHECK(r.frob * r.frob == doctest::Approx(total).epsilon(1e-10));
}

TEST_CASE("tanh interaction ratio is near one on sphere data") {
    Rng rng(9);
    const RfModel m = RfModel::sample(4096, 256, Activation::tanh(), rng);
    const Eigen::MatrixXd X = sample_sphere_gaussian(64, 256, rng);
    const InteractionReport r = interaction_matrix(m, sphere_point(256, rng), closed_form_centering(m, X));
    CHECK(r.ratio >= 0.8);
    CHECK(r.ratio <= 1.2);
}

TEST_CASE("A matrix Frobenius norm equals the column recomputation") {
    Rng rng(10);
    const RfModel m = RfModel::sample(200, 10, Activation::tanh(), rng);
    const Eigen::MatrixXd X = sample_sphere_gaussian(20, 10, rng);
    const Eigen::MatrixXd Phi = rf_features(m, X);
    const KernelSystem sys(Phi * Phi.transpose());
    const Eigen::VectorXd z = sphere_point(10, rng);
    const Eigen::MatrixXd A = a_matrix(m, z, Phi, sys);
    // oracle: each column of A is the feature Jacobian applied to a pseudoinverse column
    const Eigen::MatrixXd pinv = Phi.completeOrthogonalDecomposition().pseudoInverse();  // k x N
    const Eigen::MatrixXd J = rf_feature_jacobian_t(m, z);
    double sq = 0.0;
    for (Eigen::Index i = 0; i < 20; ++i) sq += (J * pinv.col(i)).squaredNorm();
    CHECK(A.norm() == doctest::Approx(std::sqrt(sq)).epsilon(1e-8));
    CHECK(A.norm() == doctest::Approx(std::sqrt(A.colwise().squaredNorm().sum())).epsilon(1e-12));
}

TEST_CASE("noise bound check") {
    Rng data_rng(11), noise_rng(12), wrng(13);
    const Dataset ds =
        make_synthetic(ProvenanceKind::SyntheticSphereGaussian, 40, 20, LabelSpec::zero(1.0), data_rng, noise_rng);
    RfModel m = RfModel::sample(400, 20, Activation::tanh(), wrng);
    fit_min_norm(m, ds.X, ds.Y);
    const Eigen::VectorXd z = sphere_point(20, wrng);
    const NoiseBoundCheck r = noise_bound_check(m, ds, z);
    CHECK(r.rhs == doctest::Approx(0.5 * z.norm() * r.a_frob));
    CHECK(r.holds == (r.lhs >= r.rhs));

    Rng d2(11), n2(12);
    const Dataset quiet =
        make_synthetic(ProvenanceKind::SyntheticSphereGaussian, 40, 20, LabelSpec::zero(0.0), d2, n2);
    RfModel q = RfModel::sample(400, 20, Activation::tanh(), wrng);
    fit_min_norm(q, quiet.X, quiet.Y);
    const NoiseBoundCheck s = noise_bound_check(q, quiet, z);
    CHECK(s.rhs == 0.0);
    CHECK(s.holds);

    Dataset linear = ds;
    linear.labels = LabelSpec::constant_value(1.0);
    CHECK_THROWS_AS(noise_bound_check(m, linear, z), InvalidArgument);
    linear.labels.reset();
    CHECK_THROWS_AS(noise_bound_check(m, linear, z), InvalidArgument);
}

TEST_CASE("split bounds bracket A(z)") {
    for (const char* name : {"tanh", "smoothrelu", "square"}) {
        CAPTURE(name);
        for (std::uint64_t seed : {21u, 22u, 23u}) {
            Rng rng(seed);
            const RfModel m = RfModel::sample(800, 60, Activation::parse(name), rng);
            const Eigen::MatrixXd X = sample_sphere_gaussian(70, 60, rng);
            const SplitBounds sb = split_bounds(m, sphere_point(60, rng), X, closed_form_centering(m, X));
            CHECK(sb.lower <= sb.upper);
            CHECK(sb.slack_scale == doctest::Approx(std::sqrt(130.0) / 60));
            CHECK(sb.a_frob >= sb.lower - sb.slack_scale * kSplitSlackConstant);
            CHECK(sb.a_frob <= sb.upper + sb.slack_scale * kSplitSlackConstant);
        }
    }
}

TEST_CASE("split bounds coincide for a one-sample kernel") {
    Rng rng(24);
    const RfModel m = RfModel::sample(50, 6, Activation::tanh(), rng);
    const Eigen::MatrixXd X = sample_sphere_gaussian(1, 6, rng);
    const SplitBounds sb = split_bounds(m, sphere_point(6, rng), X, closed_form_centering(m, X));
    CHECK(sb.lower == sb.upper);
}

TEST_CASE("square split bracket shrinks as k grows") {
    // zero Gaussian moment: the interaction norm stays small against K_tilde, so the
    // bracket falls with k while the tanh bracket does not
    double square_upper[2], tanh_upper[2];
    const Eigen::Index ks[2] = {400, 3200};
    for (int i = 0; i < 2; ++i) {
        double sq = 0.0, th = 0.0;
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            for (const char* name : {"square", "tanh"}) {
                Rng rng(100 + seed);
                const RfModel m = RfModel::sample(ks[i], 50, Activation::parse(name), rng);
                const Eigen::MatrixXd X = sample_sphere_gaussian(50, 50, rng);
                const SplitBounds sb = split_bounds(m, sphere_point(50, rng), X, closed_form_centering(m, X));
                (name[0] == 's' ? sq : th) += sb.upper;
            }
        }
        square_upper[i] = sq;
        tanh_upper[i] = th;
    }
    CHECK(square_upper[1] < 0.6 * square_upper[0]);
    CHECK(square_upper[1] < tanh_upper[1]);
    CHECK(square_upper[0] < tanh_upper[0]);
}

TEST_CASE("attack on a linear model saturates exactly") {
    Rng rng(30);
    RfModel m = RfModel::sample(30, 10, Activation::identity(), rng);
    m.set_theta(gaussian_vector(30, rng));
    for (double delta : {1e-6, 1e-3, 0.5, 4.0}) {
        const Eigen::VectorXd z = sphere_point(10, rng);
        const AttackResult r = attack(m, z, delta);
        // f(z_adv) - f(z) cancels: roundoff grows like eps / delta
        CHECK(std::abs(r.saturation - 1.0) <= std::max(1e-12, 1e-15 / delta));
        CHECK((r.z_adv - z).norm() == doctest::Approx(delta * z.norm()).epsilon(1e-14));
    }
}

TEST_CASE("attack on smooth activations is first-order accurate") {
    Rng rng(31);
    RfModel m = RfModel::sample(400, 30, Activation::tanh(), rng);
    const Eigen::MatrixXd X = sample_sphere_gaussian(50, 30, rng);
    fit_min_norm(m, X, gaussian_vector(50, rng));
    NtkModel n = NtkModel::sample(30, 30, Activation::square(), rng);
    fit_min_norm(n, X, gaussian_vector(50, rng));
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::VectorXd z = sphere_point(30, rng);
        const AttackResult a = attack(m, z, 1e-3);
        CHECK(a.saturation >= 0.9);
        CHECK(a.saturation <= 1.1);
        CHECK((a.z_adv - z).norm() == doctest::Approx(1e-3 * z.norm()).epsilon(1e-12));
        const AttackResult b = attack(n, z, 1e-3);
        CHECK(b.saturation >= 0.9);
        CHECK(b.saturation <= 1.1);
    }
}

TEST_CASE("attack with a zero gradient leaves z in place") {
    Rng rng(32);
    RfModel m = RfModel::sample(10, 5, Activation::tanh(), rng);
    m.set_theta(Eigen::VectorXd::Zero(10));
    const Eigen::VectorXd z = sphere_point(5, rng);
    const AttackResult r = attack(m, z, 0.1);
    CHECK(r.z_adv == z);
    CHECK(r.output_change == 0.0);
    CHECK_THROWS_AS(attack(m, z, 0.0), InvalidArgument);
    CHECK_THROWS_AS(attack(m, z, -1.0), InvalidArgument);
}
