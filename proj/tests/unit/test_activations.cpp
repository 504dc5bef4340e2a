#include <doctest.h>

#include "kernelsens/activations.hpp"
#include "kernelsens/error.hpp"

#include <cmath>
#include <vector>

using namespace kernelsens;

namespace {

// E[sech^2(rho)], rho ~ N(0,1): 50-digit mpmath quadrature, frozen.
constexpr double kTanhMeanD1 = 0.605705509602158825583540227556;
// E[sigmoid(rho)] and E[softplus(rho)] for the same Gaussian.
constexpr double kSigmoidMean = 0.5;
constexpr double kSoftplusMean = 0.806059183347439784528228831504;

std::vector<Activation> all_activations() {
    return {Activation::tanh(), Activation::square(), Activation::smooth_relu(), Activation::smooth_relu(3.0),
            Activation::identity()};
}

}  // namespace

TEST_CASE("pointwise values") {
    const Activation t = Activation::tanh();
    CHECK(t.value(0.0) == 0.0);
    CHECK(t.d1(0.0) == 1.0);
    CHECK(t.d2(0.0) == 0.0);
    const Activation s = Activation::square();
    CHECK(s.value(2.0) == 4.0);
    CHECK(s.d1(2.0) == 4.0);
    CHECK(s.d2(2.0) == 2.0);
    const Activation id = Activation::identity();
    CHECK(id.value(-1.5) == -1.5);
    CHECK(id.d1(7.0) == 1.0);
    CHECK(id.d2(7.0) == 0.0);
}

TEST_CASE("tanh d1 at 1 agrees with a finite difference") {
    const Activation t = Activation::tanh();
    const double h = 1e-6;
    const double fd = (t.value(1 + h) - t.value(1 - h)) / (2 * h);
    CHECK(std::abs(t.d1(1.0) - fd) <= 1e-6 * std::abs(fd));
    CHECK(t.d1(1.0) == doctest::Approx(1 - std::tanh(1.0) * std::tanh(1.0)).epsilon(1e-15));
}

TEST_CASE("derivatives match central differences on [-10, 10]") {
    const double h = 1e-5;
    for (const Activation& a : all_activations()) {
        CAPTURE(a.name());
        for (double x = -10.0; x <= 10.0; x += 0.05) {
            const double fd1 = (a.value(x + h) - a.value(x - h)) / (2 * h);
            CHECK(std::abs(a.d1(x) - fd1) <= 1e-6 * std::max(1.0, std::abs(a.d1(x))));
            const double fd2 = (a.d1(x + h) - a.d1(x - h)) / (2 * h);
            CHECK(std::abs(a.d2(x) - fd2) <= 1e-6 * std::max(1.0, std::abs(a.d2(x))));
        }
    }
}

TEST_CASE("batched evaluation matches the scalar path") {
    Eigen::ArrayXXd x(3, 4);
    x << -3, -1, 0, 0.5, 1, 2, 8, -40, 40, 1e-9, -7, 3;
    for (const Activation& a : all_activations()) {
        const Eigen::ArrayXXd v = a.value(x), g = a.d1(x), h = a.d2(x);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                CHECK(v(i, j) == a.value(x(i, j)));
                CHECK(g(i, j) == a.d1(x(i, j)));
                CHECK(h(i, j) == a.d2(x(i, j)));
            }
        }
    }
}

TEST_CASE("smoothrelu stays finite far from the origin") {
    const Activation a = Activation::smooth_relu();
    CHECK(a.value(800.0) == doctest::Approx(800.0));
    CHECK(a.value(-800.0) >= 0.0);
    CHECK(std::isfinite(a.d1(-800.0)));
    CHECK(a.d1(800.0) == doctest::Approx(1.0));
    CHECK(a.d2(800.0) == doctest::Approx(0.0));
}

TEST_CASE("gaussian_mean_d1 closed values") {
    CHECK(gaussian_mean_d1(Activation::square()) == 0.0);
    CHECK(gaussian_mean_d1(Activation::identity()) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gaussian_mean_d1(Activation::tanh()) == doctest::Approx(kTanhMeanD1).epsilon(1e-12));
    CHECK(gaussian_mean_d1(Activation::smooth_relu()) == doctest::Approx(kSigmoidMean).epsilon(1e-13));
    CHECK(gaussian_mean_scaled(Activation::smooth_relu(), 1.0) == doctest::Approx(kSoftplusMean).epsilon(1e-12));
    CHECK(gaussian_mean_scaled(Activation::square(), 3.0) == doctest::Approx(9.0).epsilon(1e-13));
    CHECK(gaussian_mean_scaled(Activation::tanh(), 2.5) == 0.0);
}

TEST_CASE("gaussian_mean_d1 is stable under refinement beyond order 64") {
    // tanh has poles at +-i pi/2, so order 64 itself is still ~3e-9 away
    for (const Activation& a : all_activations()) {
        CAPTURE(a.name());
        const double ref = gaussian_mean_d1(a, 96);
        for (int order : {128, 160, 200, 256, 300}) CHECK(std::abs(gaussian_mean_d1(a, order) - ref) <= 1e-10);
    }
}

TEST_CASE("square mean is exactly zero at every order") {
    for (int order = kMinQuadOrder; order <= 140; order += 7) CHECK(gaussian_mean_d1(Activation::square(), order) == 0.0);
}

TEST_CASE("moments are cached at construction") {
    const Activation t = Activation::tanh();
    CHECK(t.moments().m1 == gaussian_mean_d1(t));
    CHECK(t.moments().m1sq == t.moments().m1 * t.moments().m1);
    CHECK(Activation::square().moments().m1sq == 0.0);
}

TEST_CASE("quadrature order below the floor is rejected") {
    CHECK_THROWS_AS(gaussian_mean_d1(Activation::tanh(), 8), InvalidArgument);
}

TEST_CASE("parse and name round trip") {
    for (const Activation& a : all_activations()) CHECK(Activation::parse(a.name()) == a);
    CHECK(Activation::parse("smoothrelu:2.5").beta() == 2.5);
    CHECK(Activation::parse("tanh").is_odd());
    CHECK(Activation::parse("square").is_even());
    CHECK_FALSE(Activation::parse("smoothrelu").is_even());
    CHECK_THROWS_AS(Activation::parse("relu"), InvalidArgument);
    CHECK_THROWS_AS(Activation::parse("smoothrelu:-1"), InvalidArgument);
    CHECK_THROWS_AS(Activation::parse("smoothrelu:abc"), InvalidArgument);
}
