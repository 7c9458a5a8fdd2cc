#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "starkqfi/errors.hpp"
#include "starkqfi/model.hpp"
#include "starkqfi/scaling.hpp"
#include "starkqfi/spectral.hpp"

using namespace starkqfi;

namespace {

Eigen::MatrixXd random_symmetric(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd A(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) A(i, j) = g(rng);
    return 0.5 * (A + A.transpose());
}

void check_invariants(const Eigen::MatrixXd& H, const EigenDecomposition& d) {
    const Index n = d.dim();
    const double hn = std::max(H.norm(), 1e-300);
    for (Index k = 1; k < n; ++k) CHECK(d.energies(k) >= d.energies(k - 1));
    const Eigen::MatrixXd R = H * d.vectors - d.vectors * d.energies.asDiagonal();
    CHECK(R.colwise().norm().maxCoeff() <= 1e-10 * hn);
    const Eigen::MatrixXd O = d.vectors.transpose() * d.vectors - Eigen::MatrixXd::Identity(n, n);
    CHECK(O.cwiseAbs().maxCoeff() <= 1e-10);
    for (Index k = 0; k < n; ++k) {
        Index imax;
        d.vectors.col(k).cwiseAbs().maxCoeff(&imax);
        CHECK(d.vectors(imax, k) > 0.0);
    }
}

}  // namespace

TEST_CASE("two-level hopping") {
    Eigen::Matrix2d H;
    H << 0, -1, -1, 0;
    const EigenDecomposition d = eigendecompose(Eigen::MatrixXd(H));
    CHECK(d.energies(0) == doctest::Approx(-1.0));
    CHECK(d.energies(1) == doctest::Approx(1.0));
    check_invariants(H, d);
}

TEST_CASE("free chain spectrum matches the cosine band") {
    for (int L : {2, 3, 10, 77, 150, 300}) {
        const ProbeSpec s = ProbeSpec::single_particle(L, 0.05, 0.0);
        const EigenDecomposition d = eigendecompose(build_sp_hamiltonian(s));
        const EigenDecomposition dd = eigendecompose(build_sp_hamiltonian(s).dense());
        double err = 0.0, err_dense = 0.0;
        for (int k = 1; k <= L; ++k) {
            // ascending order: k-th level from the bottom is -2cos(k pi/(L+1))
            const double e = -2.0 * std::cos(k * std::numbers::pi / (L + 1));
            err = std::max(err, std::abs(d.energies(k - 1) - e));
            err_dense = std::max(err_dense, std::abs(dd.energies(k - 1) - e));
        }
        CHECK(err <= 1e-9);
        CHECK(err_dense <= 1e-9);
    }
}

TEST_CASE("diagonal input gives permuted identity") {
    Eigen::VectorXd dvals(5);
    dvals << 3.0, -1.0, 2.5, 0.0, -7.0;
    const EigenDecomposition d = eigendecompose(Eigen::MatrixXd(dvals.asDiagonal()));
    const std::vector<double> sorted = {-7.0, -1.0, 0.0, 2.5, 3.0};
    const std::vector<Index> where = {4, 1, 3, 2, 0};
    for (int k = 0; k < 5; ++k) {
        CHECK(d.energies(k) == sorted[k]);
        CHECK(d.vectors.col(k).isApprox(Eigen::VectorXd::Unit(5, where[k])));
    }
}

TEST_CASE("reconstruction and invariants on random symmetric matrices") {
    std::mt19937_64 rng(20240601);
    for (Index n : {1, 2, 7, 40, 150, 500}) {
        const Eigen::MatrixXd H = random_symmetric(n, rng);
        const EigenDecomposition d = eigendecompose(H);
        const Eigen::MatrixXd rec = d.vectors * d.energies.asDiagonal() * d.vectors.transpose();
        CHECK((H - rec).norm() <= 1e-9 * H.norm());
        check_invariants(H, d);
    }
}

TEST_CASE("non-symmetric or non-finite input is rejected") {
    Eigen::Matrix2d H;
    H << 0, 1, 2, 0;
    CHECK_THROWS_AS(eigendecompose(Eigen::MatrixXd(H)), InvalidArgument);
    H << 0, NAN, NAN, 0;
    CHECK_THROWS_AS(eigendecompose(Eigen::MatrixXd(H)), InvalidArgument);
}

TEST_CASE("state selection") {
    EigenDecomposition d2{Eigen::Vector2d(-1, 1), Eigen::MatrixXd::Identity(2, 2)};
    CHECK(select_state(d2, StateSelector::ground()).index == 0);
    EigenDecomposition d100{Eigen::VectorXd::LinSpaced(100, 0, 99), Eigen::MatrixXd::Identity(100, 100)};
    CHECK(select_state(d100, StateSelector::mid_spectrum()).index == 50);
    EigenDecomposition d3{Eigen::Vector3d(0, 1, 2), Eigen::MatrixXd::Identity(3, 3)};
    const SelectedState top = select_state(d3, StateSelector::index(2));
    CHECK(top.index == 2);
    CHECK(top.vector == Eigen::Vector3d(0, 0, 1));
    CHECK_THROWS_AS(select_state(d3, StateSelector::index(3)), InvalidArgument);
    CHECK(StateSelector::parse("mid").kind == StateSelector::Kind::MidSpectrum);
    CHECK(StateSelector::parse("index:7").k == 7);
    CHECK_THROWS_AS(StateSelector::parse("top"), InvalidArgument);
}

TEST_CASE("energy gap") {
    EigenDecomposition d{Eigen::Vector2d(-1, 1), Eigen::MatrixXd::Identity(2, 2)};
    CHECK(energy_gap(d).value == 2.0);
    CHECK_FALSE(energy_gap(d).degenerate);

    EigenDecomposition deg{Eigen::Vector2d(1, 1), Eigen::MatrixXd::Identity(2, 2)};
    const GapResult g = energy_gap(deg);
    CHECK(g.degenerate);
    CHECK(g.value == 0.0);

    const SectorBasis b2(2);
    const EigenDecomposition mb = eigendecompose(build_mb_hamiltonian(ProbeSpec::many_body(2, 0.3, 0.0), b2));
    CHECK(energy_gap(mb).value == doctest::Approx(4.0));

    std::vector<double> Ls, gaps;
    for (int L = 50; L <= 300; L += 10) {
        const EigenDecomposition f = eigendecompose(build_sp_hamiltonian(ProbeSpec::single_particle(L, 0.1, 0.0)));
        const double th = std::numbers::pi / (L + 1);
        const double exact = 2.0 * (std::cos(th) - std::cos(2 * th));
        CHECK(energy_gap(f).value == doctest::Approx(exact).epsilon(1e-9));
        Ls.push_back(L);
        gaps.push_back(energy_gap(f).value);
    }
    const FitResult fit = fit_power_law(Ls, gaps);
    CHECK(fit.slope >= -2.05);
    CHECK(fit.slope <= -1.95);
}

TEST_CASE("Lanczos lowest pairs match the dense solver") {
    const SectorBasis b(10);
    const ProbeSpec s = ProbeSpec::many_body(10, 0.1, 0.3);
    const SparseMatrix Hs = build_mb_sparse(s, b);
    const Eigen::MatrixXd Hd = build_mb_hamiltonian(s, b);
    const EigenDecomposition full = eigendecompose(Hd);
    const EigenDecomposition low = lowest_eigenpairs(Hs, 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(low.energies(k) == doctest::Approx(full.energies(k)).epsilon(1e-12));
        CHECK(std::abs(low.vectors.col(k).dot(full.vectors.col(k))) == doctest::Approx(1.0).epsilon(1e-10));
        // same sign convention, so the vectors agree, not just up to sign
        CHECK((low.vectors.col(k) - full.vectors.col(k)).norm() < 1e-8);
        CHECK((Hd * low.vectors.col(k) - low.energies(k) * low.vectors.col(k)).norm() <= 1e-10 * Hd.norm());
    }
}

TEST_CASE("Lanczos beyond the dense limit meets the residual contract") {
    const SectorBasis b(16);
    const ProbeSpec s = ProbeSpec::many_body(16, 0.05, 1e-8);
    const SparseMatrix H = build_mb_sparse(s, b);
    const EigenDecomposition low = lowest_eigenpairs(H, 2);
    double hnorm = 0.0;
    for (Index r = 0; r < H.rows(); ++r) hnorm = std::max(hnorm, H.row(r).cwiseAbs().sum());
    for (int k = 0; k < 2; ++k) {
        const Eigen::VectorXd v = low.vectors.col(k);
        CHECK((H * v - low.energies(k) * v).norm() <= 1e-10 * hnorm);
        CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(std::abs(low.vectors.col(0).dot(low.vectors.col(1))) < 1e-10);
    // ferromagnetic multiplet member of the sector at h -> 0: E0 = -(L-1)
    CHECK(low.energies(0) == doctest::Approx(-15.0).epsilon(1e-6));
}
