#include "kernelsens/quadrature.hpp"

#include "kernelsens/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace kernelsens {

// Golub-Welsch eigenvalues seed the roots; each is then polished by Newton
// iteration on the orthonormal Hermite recurrence, which also gives the weights.
GaussHermiteRule gauss_hermite(int order) {
    if (order < 1) throw InvalidArgument("gauss_hermite: order must be positive");
    constexpr double kPiM4 = 0.75112554446494248286;  // pi^(-1/4)
    constexpr int kMaxIter = 100;

    const int n = order;
    const int m = (n + 1) / 2;
    std::vector<double> x(static_cast<std::size_t>(m));
    std::vector<double> w(static_cast<std::size_t>(m));

    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    for (int j = 1; j < n; ++j) sub(j - 1) = std::sqrt(0.5 * j);
    Eigen::VectorXd guesses = diag;
    if (n > 1) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
        eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
        guesses = eig.eigenvalues();  // ascending
    }

    for (int i = 0; i < m; ++i) {
        double z = guesses(n - 1 - i);
        if (n % 2 == 1 && i == m - 1) z = 0.0;
        double pp = 0.0;
        int it = 0;
        for (; it < kMaxIter; ++it) {
            double p1 = kPiM4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        if (it == kMaxIter) {
            throw Error("gauss_hermite: Newton iteration did not converge for order " +
                        std::to_string(order));
        }
        x[static_cast<std::size_t>(i)] = z;
        w[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
    }

    GaussHermiteRule rule;
    rule.order = n;
    if (n % 2 == 1) {
        rule.center_weight = w.back();
        x.pop_back();
        w.pop_back();
    }
    rule.nodes = std::move(x);
    rule.weights = std::move(w);
    return rule;
}

}  // namespace kernelsens
