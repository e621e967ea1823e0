#include <doctest.h>

#include "kcb/kernels.hpp"
#include "kcb/rng.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

using namespace kcb;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<KernelSpec> all_profiles(int d) {
    return {KernelSpec::linear(d),
            KernelSpec::polynomial(d, 0.5, 3),
            KernelSpec::gaussian(d, 1.3),
            KernelSpec::laplace(d, 0.8),
            KernelSpec::rational_quadratic(d, 1.7, 0.9),
            KernelSpec::matern(d, 1.1, 2.5),
            KernelSpec::matern(d, 0.9, 3.5)};
}

MatrixXd random_matrix(Rng& rng, int n, int d, double scale = 1.0) {
    MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = scale * rng.normal();
    return X;
}

double min_eigenvalue(const MatrixXd& A) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

} // namespace

TEST_CASE("eval_kernel pinned values") {
    const KernelSpec g4 = KernelSpec::gaussian(3, 4.0);
    VectorXd x(3);
    x << 0.3, -1.2, 2.0;
    CHECK(eval_kernel(g4, x, x) == doctest::Approx(1.0).epsilon(1e-15));

    const KernelSpec g4d2 = KernelSpec::gaussian(2, 4.0);
    VectorXd a(2), b(2);
    a << 1, 0;
    b << 0, 1;
    CHECK(eval_kernel(g4d2, a, b) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));

    const KernelSpec lin = KernelSpec::linear(3);
    VectorXd u(3), v(3);
    u << 1, 2, 3;
    v << 3, 2, 1;
    CHECK(eval_kernel(lin, u, v) == doctest::Approx(10.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("the experiment RBF kernel is gaussian g=4 under 1/d scaling") {
    Rng rng(11);
    for (int d : {2, 10, 100}) {
        const KernelSpec g4 = KernelSpec::gaussian(d, 4.0);
        for (int rep = 0; rep < 10; ++rep) {
            VectorXd x(d), y(d);
            for (int j = 0; j < d; ++j) {
                x(j) = rng.normal();
                y(j) = rng.normal();
            }
            const double f_rbf = std::exp(-(x - y).squaredNorm() / (0.25 * d));
            CHECK(eval_kernel(g4, x, y) == doctest::Approx(f_rbf).epsilon(1e-14));
        }
    }
}

TEST_CASE("eval_kernel rejects bad input") {
    const KernelSpec g = KernelSpec::gaussian(3, 1.0);
    VectorXd x(3), y2(2);
    x.setZero();
    y2.setZero();
    CHECK_THROWS_AS(eval_kernel(g, x, y2), std::invalid_argument);
    VectorXd bad = x;
    bad(1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(eval_kernel(g, x, bad), std::invalid_argument);
}

TEST_CASE("profile/family compatibility is validated") {
    CHECK_THROWS_AS(KernelSpec(KernelFamily::Rbf, Profile::linear(), 3), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec(KernelFamily::InnerProduct, Profile::gaussian(1.0), 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::matern(3, 1.0, 1.5), std::invalid_argument);  // nu unsupported
    CHECK_THROWS_AS(KernelSpec::gaussian(3, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(KernelSpec::polynomial(3, -0.5, 2), std::invalid_argument);
}

TEST_CASE("gram pinned values and structure") {
    Rng rng(3);
    const KernelSpec g4 = KernelSpec::gaussian(4, 4.0);
    const MatrixXd X1 = random_matrix(rng, 1, 4);
    const GramMatrix G1 = gram(g4, X1);
    CHECK(G1.entries.rows() == 1);
    CHECK(G1.entries(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

    const KernelSpec g4d2 = KernelSpec::gaussian(2, 4.0);
    MatrixXd X2(2, 2);
    X2 << 1, 0, 0, 1;
    const MatrixXd G2 = gram(g4d2, X2).entries;
    CHECK(G2(0, 0) == doctest::Approx(1.0));
    CHECK(G2(1, 1) == doctest::Approx(1.0));
    CHECK(G2(0, 1) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
    CHECK(G2(1, 0) == G2(0, 1));
}

TEST_CASE("duplicated rows give a singular gram") {
    Rng rng(4);
    MatrixXd X = random_matrix(rng, 6, 5);
    X.row(3) = X.row(1);
    const MatrixXd G = gram(KernelSpec::gaussian(5, 2.0), X).entries;
    const double mn = min_eigenvalue(G);
    CHECK(std::abs(mn) <= 1e-10 * 6);
}

TEST_CASE("gram is exactly symmetric with bounded diagonal") {
    Rng rng(5);
    for (const auto& spec : all_profiles(6)) {
        if (spec.family == KernelFamily::InnerProduct) continue;  // diag is h(0) = 1 for RBF
        const MatrixXd X = random_matrix(rng, 12, 6);
        const MatrixXd G = gram(spec, X).entries;
        CHECK((G - G.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(G.diagonal().maxCoeff() <= 1.0 + 1e-12);
    }
}

TEST_CASE("profile_derivs pinned values") {
    const auto g1 = profile_derivs(KernelSpec::gaussian(3, 1.0), 0.0);
    CHECK(g1.h == doctest::Approx(1.0));
    CHECK(g1.h1 == doctest::Approx(-1.0));
    CHECK(g1.h2 == doctest::Approx(1.0));

    const auto lin = profile_derivs(KernelSpec::linear(3), 0.7);
    CHECK(lin.h == doctest::Approx(0.7));
    CHECK(lin.h1 == doctest::Approx(1.0));
    CHECK(lin.h2 == doctest::Approx(0.0));

    const auto rq = profile_derivs(KernelSpec::rational_quadratic(3, 1.0, 1.0), 0.0);
    CHECK(rq.h == doctest::Approx(1.0));
    CHECK(rq.h1 == doctest::Approx(-0.5));
    CHECK(rq.h2 == doctest::Approx(0.5));
}

TEST_CASE("laplace and matern refuse derivatives at the origin") {
    CHECK_THROWS_AS(profile_derivs(KernelSpec::laplace(3, 1.0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(profile_derivs(KernelSpec::matern(3, 1.0, 2.5), 0.0),
                    std::invalid_argument);
    // the kernel value itself is still defined there
    CHECK(profile_value(KernelSpec::matern(3, 1.0, 2.5), 0.0) == doctest::Approx(1.0));
    VectorXd x = VectorXd::Zero(3);
    CHECK(eval_kernel(KernelSpec::matern(3, 1.0, 2.5), x, x) == doctest::Approx(1.0));
}

TEST_CASE("profile_derivs matches central finite differences") {
    Rng rng(6);
    for (const auto& spec : all_profiles(4)) {
        const bool ip = spec.family == KernelFamily::InnerProduct;
        for (int rep = 0; rep < 20; ++rep) {
            const double t = ip ? rng.uniform(0.0, 1.0) : rng.uniform(0.05, 2.0);
            const auto dv = profile_derivs(spec, t);
            const double s = 1e-4 * std::max(1.0, t);
            auto h = [&](double u) { return profile_value(spec, u); };
            const double fd1 = (h(t + s) - h(t - s)) / (2.0 * s);
            const double fd2 = (h(t + s) - 2.0 * h(t) + h(t - s)) / (s * s);
            CHECK(dv.h1 == doctest::Approx(fd1).epsilon(1e-5));
            if (std::abs(dv.h2) > 1e-12)
                CHECK(dv.h2 == doctest::Approx(fd2).epsilon(1e-5));
            else
                CHECK(std::abs(fd2) < 1e-6);
        }
    }
}

TEST_CASE("kernel symmetry and permutation invariance") {
    Rng rng(7);
    for (const auto& spec : all_profiles(8)) {
        for (int rep = 0; rep < 20; ++rep) {
            VectorXd x(8), y(8);
            for (int j = 0; j < 8; ++j) {
                x(j) = rng.uniform(-2.0, 2.0);
                y(j) = rng.uniform(-2.0, 2.0);
            }
            CHECK(eval_kernel(spec, x, y) == eval_kernel(spec, y, x));

            // simultaneous coordinate permutation (reversal)
            const VectorXd xp = x.reverse();
            const VectorXd yp = y.reverse();
            CHECK(eval_kernel(spec, xp, yp) ==
                  doctest::Approx(eval_kernel(spec, x, y)).epsilon(1e-13));
        }
    }
}

TEST_CASE("gram matrices are positive semidefinite across profiles") {
    Rng rng(8);
    for (const auto& spec0 : all_profiles(2)) {
        for (int rep = 0; rep < 100; ++rep) {
            const int n = 2 + static_cast<int>(rng.below(49));
            const int d = 2 + static_cast<int>(rng.below(49));
            KernelSpec spec(spec0.family, spec0.profile, d);
            const MatrixXd X = random_matrix(rng, n, d);
            const MatrixXd G = gram(spec, X).entries;
            CHECK(min_eigenvalue(G) >= -1e-8 * n);
        }
    }
}

TEST_CASE("kernel_params pinned values") {
    SUBCASE("linear profile has zero curvature gap") {
        Rng rng(9);
        VectorXd eigs(5);
        for (int j = 0; j < 5; ++j) eigs(j) = rng.uniform(0.0, 1.0);
        const auto kp = kernel_params(KernelSpec::linear(5), eigs);
        CHECK(kp.gamma == 0.0);
        CHECK(kp.beta == 1.0);
        CHECK(kp.tau == doctest::Approx(2.0 * eigs.sum() / 5.0));
    }
    SUBCASE("gaussian g=1 with identity covariance") {
        const int d = 7;
        const VectorXd eigs = VectorXd::Ones(d);
        const auto kp = kernel_params(KernelSpec::gaussian(d, 1.0), eigs);
        CHECK(kp.tau == doctest::Approx(2.0));
        CHECK(kp.gamma == doctest::Approx(1.0 - 3.0 * std::exp(-2.0)).epsilon(1e-14));
        CHECK(kp.beta == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-14));
        CHECK(kp.alpha ==
              doctest::Approx(std::exp(-2.0) + 2.0 * std::exp(-2.0) / d).epsilon(1e-14));
        CHECK(kp.r == doctest::Approx(kp.gamma / kp.beta));
    }
    SUBCASE("rows with norm^2 = d tau/2 zero out the detail vectors") {
        const int d = 6, n = 4;
        const VectorXd eigs = VectorXd::Ones(d);  // tau = 2
        const MatrixXd X = MatrixXd::Ones(n, d);  // ||x||^2 = d = d*tau/2
        const auto kp = kernel_params(KernelSpec::gaussian(d, 1.0), eigs, X);
        REQUIRE(kp.psi.size() == n);
        CHECK(kp.psi.cwiseAbs().maxCoeff() == 0.0);
        CHECK(kp.rho.cwiseAbs().maxCoeff() == 0.0);
        CHECK(kp.zeta.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("detail vectors follow the sample formulas") {
        Rng rng(10);
        const int d = 5, n = 7;
        VectorXd eigs(d);
        for (int j = 0; j < d; ++j) eigs(j) = rng.uniform(0.1, 1.0);
        const MatrixXd X = random_matrix(rng, n, d, 0.5);
        const KernelSpec spec = KernelSpec::gaussian(d, 1.5);
        const auto kp = kernel_params(spec, eigs, X);
        const auto dv = profile_derivs(spec, kp.tau);
        for (int j = 0; j < n; ++j) {
            const double psi_j = X.row(j).squaredNorm() / d - kp.tau / 2.0;
            CHECK(kp.psi(j) == doctest::Approx(psi_j).epsilon(1e-14));
            CHECK(kp.rho(j) ==
                  doctest::Approx(dv.h1 * psi_j + 0.5 * dv.h2 * psi_j * psi_j).epsilon(1e-14));
            for (int k = 0; k < n; ++k)
                CHECK(kp.zeta(j, k) ==
                      doctest::Approx(dv.h2 * kp.psi(j) * kp.psi(k)).epsilon(1e-13));
        }
    }
    SUBCASE("input validation") {
        VectorXd bad(3);
        bad << 0.5, -0.1, 0.2;
        CHECK_THROWS_AS(kernel_params(KernelSpec::gaussian(3, 1.0), bad),
                        std::invalid_argument);
        CHECK_THROWS_AS(kernel_params(KernelSpec::gaussian(4, 1.0), VectorXd::Ones(3)),
                        std::invalid_argument);
    }
}

TEST_CASE("gaussian gamma is positive whenever tau is") {
    Rng rng(12);
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 3 + static_cast<int>(rng.below(20));
        VectorXd eigs(d);
        for (int j = 0; j < d; ++j) eigs(j) = rng.uniform(0.0, 1.0);
        eigs(0) = std::max(eigs(0), 0.05);  // force tau > 0
        const auto kp = kernel_params(KernelSpec::gaussian(d, 1.0), eigs);
        CHECK(kp.gamma > 0.0);
    }
}

TEST_CASE("gaussian g=1 gamma dominates e^-2 tr(S)/d") {
    Rng rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 3 + static_cast<int>(rng.below(30));
        VectorXd eigs(d);
        for (int j = 0; j < d; ++j) eigs(j) = rng.uniform(0.0, 1.0);
        eigs(0) = std::max(eigs(0), 0.05);
        const auto kp = kernel_params(KernelSpec::gaussian(d, 1.0), eigs);
        const double ratio = kp.gamma / (eigs.sum() / d);
        CHECK(ratio >= std::exp(-2.0));
    }
}

TEST_CASE("kernel_constants records the profile extremes") {
    const auto kc = kernel_constants(KernelSpec::gaussian(4, 2.0), 3.0);
    CHECK(kc.b_norm == 3.0);
    CHECK(kc.h1_min == doctest::Approx(-2.0).epsilon(1e-9));          // h'(0) = -g
    CHECK(kc.c_lower == doctest::Approx(2.0 * 2.0 * std::exp(-4.0)).epsilon(1e-6));
    CHECK(kc.h2_max == doctest::Approx(4.0).epsilon(1e-9));           // h''(0) = g^2

    const auto pc = kernel_constants(KernelSpec::polynomial(4, 0.5, 3), 1.0);
    CHECK(pc.beta == doctest::Approx(3 * 0.25).epsilon(1e-12));       // p c^{p-1}
    CHECK(pc.h2_min == doctest::Approx(6 * 0.5).epsilon(1e-9));       // p(p-1)c at t=0
    CHECK(pc.h2_max == doctest::Approx(6 * 1.5).epsilon(1e-9));       // at t=1
}

TEST_CASE("empirical kernel_params approaches the population values") {
    Rng rng(14);
    const int d = 40, n = 4000;
    VectorXd eigs(d);
    for (int j = 0; j < d; ++j) eigs(j) = (j < 20) ? 0.8 : 0.0;
    MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = std::sqrt(eigs(j)) * rng.normal();
    const KernelSpec spec = KernelSpec::gaussian(d, 1.0);
    const auto pop = kernel_params(spec, eigs, X);
    KernelParamsOptions opt;
    opt.empirical = true;
    const auto emp = kernel_params(spec, eigs, X, opt);
    CHECK(emp.tau == doctest::Approx(pop.tau).epsilon(0.05));
    CHECK(emp.gamma == doctest::Approx(pop.gamma).epsilon(0.15));
}
