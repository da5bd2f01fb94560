#include <catch2/catch.hpp>

#include <random>

#include "fpnsd/fpca.hpp"
#include "support/synthetic.hpp"

using namespace fpnsd;
using testsupport::dense_fpca;
using testsupport::random_matrix;

namespace {

Eigen::VectorXd unit_weights(int p) {
    return panel::trapezoid_weights(Eigen::VectorXd::LinSpaced(p, 0.0, p - 1.0));
}

}  // namespace

TEST_CASE("identical curves give a zero basis", "[fpca]") {
    Eigen::MatrixXd curves = Eigen::VectorXd::Ones(5) * Eigen::RowVectorXd::Random(8);
    Warnings w;
    const fpca::FpcaBasis basis = fpca::fit(curves, unit_weights(8), 3, &w);
    CHECK(basis.truncated);
    CHECK_FALSE(w.messages.empty());
    CHECK(basis.order() == 0);
    CHECK(basis.mean.isApprox(curves.row(0).transpose(), 1e-12));
    CHECK(basis.scores.cols() == 0);
    CHECK(basis.eigenvalues.size() == 0);
}

TEST_CASE("two distinct curves have rank one", "[fpca]") {
    std::mt19937_64 rng(3);
    Eigen::MatrixXd curves = random_matrix(rng, 2, 6, 0.0, 2.0);
    Warnings w;
    const fpca::FpcaBasis basis = fpca::fit(curves, unit_weights(6), 2, &w);
    CHECK(basis.order() == 1);
    CHECK(basis.truncated);
    CHECK(basis.eigenvalues.size() == 1);
    CHECK(basis.eigenvalues[0] > 0.0);
}

TEST_CASE("scores and eigenvalues match the dense reference", "[fpca]") {
    std::mt19937_64 rng(8);
    SECTION("covariance route, n >= p") {
        const Eigen::MatrixXd curves = random_matrix(rng, 12, 8, 0.0, 3.0);
        const Eigen::VectorXd weights = unit_weights(8);
        const fpca::FpcaBasis basis = fpca::fit(curves, weights, 5);
        const testsupport::DenseFpca ref = dense_fpca(curves, weights);
        for (int k = 0; k < 5; ++k) {
            CHECK(basis.eigenvalues[k] ==
                  Approx(ref.eigenvalues[k]).epsilon(1e-8).margin(1e-10));
            CHECK((basis.components.col(k) - ref.components.col(k)).cwiseAbs().maxCoeff() <
                  1e-8);
            CHECK((basis.scores.col(k) - ref.scores.col(k)).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
    SECTION("Gram route, n < p") {
        const Eigen::MatrixXd curves = random_matrix(rng, 6, 9, 0.0, 3.0);
        const Eigen::VectorXd weights = unit_weights(9);
        const fpca::FpcaBasis basis = fpca::fit(curves, weights, 4);
        const testsupport::DenseFpca ref = dense_fpca(curves, weights);
        for (int k = 0; k < 4; ++k) {
            CHECK(basis.eigenvalues[k] ==
                  Approx(ref.eigenvalues[k]).epsilon(1e-8).margin(1e-10));
            CHECK((basis.components.col(k) - ref.components.col(k)).cwiseAbs().maxCoeff() <
                  1e-8);
            CHECK((basis.scores.col(k) - ref.scores.col(k)).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("components are orthonormal and scores decorrelated", "[fpca]") {
    std::mt19937_64 rng(21);
    const Eigen::MatrixXd curves = random_matrix(rng, 10, 7, 0.0, 3.0);
    const Eigen::VectorXd weights = unit_weights(7);
    const fpca::FpcaBasis basis = fpca::fit(curves, weights, 6);
    const int K = basis.order();
    REQUIRE(K >= 2);

    const Eigen::MatrixXd gram =
        basis.components.transpose() * weights.asDiagonal() * basis.components;
    CHECK((gram - Eigen::MatrixXd::Identity(K, K)).cwiseAbs().maxCoeff() < 1e-8);

    CHECK(basis.scores.colwise().mean().cwiseAbs().maxCoeff() < 1e-8);

    const Eigen::MatrixXd score_cov =
        basis.scores.transpose() * basis.scores / static_cast<double>(curves.rows());
    for (int a = 0; a < K; ++a) {
        for (int b = 0; b < K; ++b) {
            if (a == b) {
                CHECK(score_cov(a, a) == Approx(basis.eigenvalues[a]).epsilon(1e-6));
            } else {
                CHECK(std::abs(score_cov(a, b)) < 1e-6 * basis.eigenvalues[0]);
            }
        }
    }
}

TEST_CASE("eigenvalue mass equals integrated variance at full rank", "[fpca]") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd curves = random_matrix(rng, 9, 6, 0.0, 2.0);
    const Eigen::VectorXd weights = unit_weights(6);
    const fpca::FpcaBasis basis = fpca::fit(curves, weights, 6);

    const Eigen::MatrixXd centred = curves.rowwise() - curves.colwise().mean();
    const Eigen::VectorXd pointwise_var =
        centred.array().square().colwise().mean().transpose();
    const double integrated = weights.dot(pointwise_var);
    CHECK(basis.eigenvalues.sum() == Approx(integrated).epsilon(1e-6));
}

TEST_CASE("sign convention is deterministic across refits", "[fpca]") {
    std::mt19937_64 rng(99);
    const Eigen::MatrixXd curves = random_matrix(rng, 8, 10, 0.0, 3.0);
    const Eigen::VectorXd weights = unit_weights(10);
    const fpca::FpcaBasis a = fpca::fit(curves, weights, 4);
    const fpca::FpcaBasis b = fpca::fit(curves, weights, 4);
    CHECK(a.components == b.components);
    CHECK(a.scores == b.scores);
    for (int k = 0; k < a.order(); ++k) {
        int arg = 0;
        a.components.col(k).cwiseAbs().maxCoeff(&arg);
        CHECK(a.components(arg, k) > 0.0);
    }
}

TEST_CASE("reconstruction sharpens as components are added", "[fpca]") {
    std::mt19937_64 rng(14);
    const Eigen::MatrixXd curves = random_matrix(rng, 7, 9, 0.0, 2.0);
    const Eigen::VectorXd weights = unit_weights(9);
    const fpca::FpcaBasis basis = fpca::fit(curves, weights, 6);
    const int rank = basis.order();

    CHECK(reconstruct(basis, 3, 0) == basis.mean);
    CHECK((reconstruct(basis, 3) - curves.row(3).transpose()).cwiseAbs().maxCoeff() < 1e-6);

    for (int t = 0; t < curves.rows(); ++t) {
        double previous = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= rank; ++k) {
            const Eigen::VectorXd diff = reconstruct(basis, t, k) - curves.row(t).transpose();
            const double err = std::sqrt(weights.dot(diff.cwiseAbs2()));
            CHECK(err <= previous + 1e-10);
            previous = err;
        }
    }
    CHECK_THROWS_AS(reconstruct(basis, 7), data_error);
    CHECK_THROWS_AS(reconstruct(basis, -1), data_error);
    CHECK_THROWS_AS(reconstruct(basis, 0, rank + 1), config_error);
}

TEST_CASE("invalid fit inputs are rejected", "[fpca]") {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd curves = random_matrix(rng, 5, 4, 0.0, 1.0);
    CHECK_THROWS_AS(fpca::fit(curves.topRows(1), unit_weights(4), 2), data_error);
    CHECK_THROWS_AS(fpca::fit(curves, unit_weights(5), 2), data_error);
    Eigen::VectorXd bad = unit_weights(4);
    bad[2] = 0.0;
    CHECK_THROWS_AS(fpca::fit(curves, bad, 2), data_error);
    CHECK_THROWS_AS(fpca::fit(curves, unit_weights(4), -1), config_error);
    Eigen::MatrixXd nan_curves = curves;
    nan_curves(1, 1) = std::nan("");
    CHECK_THROWS_AS(fpca::fit(nan_curves, unit_weights(4), 2), data_error);
}

TEST_CASE("stacking one size reduces to plain FPCA", "[fpca]") {
    std::mt19937_64 rng(31);
    const FunctionalPanel pan = testsupport::random_panel(rng, 1, 8, 6);
    const fpca::StackedBasis stacked = fpca::fit_stacked(pan, 4);
    const fpca::FpcaBasis flat = fpca::fit(pan.values[0], pan.quad_weights, 4);
    CHECK((stacked.mean - flat.mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((stacked.components - flat.components).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((stacked.scores.transpose() - flat.scores).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((stacked.eigenvalues - flat.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("identical sizes share identical component blocks", "[fpca]") {
    std::mt19937_64 rng(17);
    FunctionalPanel pan = testsupport::random_panel(rng, 2, 7, 5);
    pan.values[1] = pan.values[0];
    const fpca::StackedBasis stacked = fpca::fit_stacked(pan, 3);
    CHECK((stacked.size_block(0) - stacked.size_block(1)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((stacked.size_mean(0) - stacked.size_mean(1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("stacked eigenvalues match a dense solve of the stacked sample", "[fpca]") {
    std::mt19937_64 rng(77);
    const FunctionalPanel pan = testsupport::random_panel(rng, 3, 9, 5);
    const int N = 6;
    const fpca::StackedBasis stacked = fpca::fit_stacked(pan, N);

    Eigen::MatrixXd sample(pan.days(), 3 * 5);
    for (int t = 0; t < pan.days(); ++t) {
        sample.row(t) = pan.stacked_day(t).transpose();
    }
    Eigen::VectorXd tiled(15);
    for (int s = 0; s < 3; ++s) {
        tiled.segment(5 * s, 5) = pan.quad_weights;
    }
    const testsupport::DenseFpca ref = dense_fpca(sample, tiled);
    REQUIRE(stacked.order() == N);
    for (int k = 0; k < N; ++k) {
        CHECK(stacked.eigenvalues[k] ==
              Approx(ref.eigenvalues[k]).epsilon(1e-8).margin(1e-10));
        CHECK((stacked.components.col(k) - ref.components.col(k)).cwiseAbs().maxCoeff() <
              1e-8);
        CHECK((stacked.scores.row(k).transpose() - ref.scores.col(k)).cwiseAbs().maxCoeff() <
              1e-8);
    }
}
