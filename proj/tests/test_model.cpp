#include <doctest.h>

#include <bit>
#include <cmath>
#include <complex>

#include "starkqfi/errors.hpp"
#include "starkqfi/model.hpp"
#include "starkqfi/spectral.hpp"

using namespace starkqfi;

namespace {

// Full 2^L operator from explicit Kronecker products. Bit b of the basis
// integer is site b+1, so site b+1 is the factor at position L-1-b from the left.
Eigen::MatrixXcd site_op(int L, int site, const Eigen::Matrix2cd& op) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int pos = 0; pos < L; ++pos) {
        const int bit = L - 1 - pos;
        const Eigen::Matrix2cd f = (bit == site - 1) ? op : Eigen::Matrix2cd::Identity();
        Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
        for (Index r = 0; r < out.rows(); ++r)
            for (Index c = 0; c < out.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = out(r, c) * f;
        out = next;
    }
    return out;
}

Eigen::MatrixXcd brute_force_mb(int L, double a, double h) {
    using cd = std::complex<double>;
    // basis |0> = down (bit clear), |1> = up (bit set)
    Eigen::Matrix2cd sx, sy, sz;
    sx << 0, 1, 1, 0;
    sy << 0, cd(0, 1), cd(0, -1), 0;
    sz << -1, 0, 0, 1;
    const Index dim = Index(1) << L;
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(dim, dim);
    for (int j = 1; j < L; ++j) {
        H -= site_op(L, j, sx) * site_op(L, j + 1, sx);
        H -= site_op(L, j, sy) * site_op(L, j + 1, sy);
        H -= site_op(L, j, sz) * site_op(L, j + 1, sz);
    }
    for (int j = 1; j <= L; ++j) H += h * std::exp(a * j) * site_op(L, j, sz);
    return H;
}

}  // namespace

TEST_CASE("potential values") {
    CHECK(potential_values(PotentialProfile::exponential(0.0), 3).isApprox(Eigen::Vector3d(1, 1, 1)));
    const Eigen::VectorXd v = potential_values(PotentialProfile::exponential(std::log(2.0)), 3);
    CHECK(v(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(v(1) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(v(2) == doctest::Approx(8.0).epsilon(1e-15));
    CHECK(potential_values(PotentialProfile::power_law(1.0), 4).isApprox(Eigen::Vector4d(1, 2, 3, 4)));
    CHECK_THROWS_AS(potential_values(PotentialProfile::exponential(0.1), 0), InvalidArgument);
    CHECK_THROWS_AS(PotentialProfile::exponential(-0.1), InvalidArgument);
    CHECK_THROWS_AS(PotentialProfile::power_law(0.0), InvalidArgument);
}

TEST_CASE("potential is strictly increasing for positive rate or exponent") {
    for (double a : {0.001, 0.05, 0.5}) {
        const Eigen::VectorXd v = potential_values(PotentialProfile::exponential(a), 300);
        for (Index j = 1; j < v.size(); ++j) CHECK(v(j) > v(j - 1));
    }
    for (double g : {0.5, 1.0, 2.0}) {
        const Eigen::VectorXd v = potential_values(PotentialProfile::power_law(g), 100);
        for (Index j = 1; j < v.size(); ++j) CHECK(v(j) > v(j - 1));
    }
}

TEST_CASE("probe spec validation") {
    CHECK_THROWS_AS(ProbeSpec::single_particle(1, 0.1), InvalidArgument);
    CHECK_THROWS_AS(ProbeSpec::many_body(5, 0.1), InvalidArgument);
    ProbeSpec s = ProbeSpec::single_particle(4, 0.1);
    s.J = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("single-particle hamiltonian") {
    const Eigen::MatrixXd h0 = build_sp_hamiltonian(ProbeSpec::single_particle(2, 0.3, 0.0)).dense();
    Eigen::Matrix2d expect;
    expect << 0, -1, -1, 0;
    CHECK(h0 == expect);

    const Eigen::MatrixXd h1 = build_sp_hamiltonian(ProbeSpec::single_particle(2, std::log(2.0), 1.0)).dense();
    CHECK(h1(0, 0) == doctest::Approx(2.0));
    CHECK(h1(1, 1) == doctest::Approx(4.0));
    CHECK(h1(0, 1) == -1.0);
    CHECK(h1(1, 0) == -1.0);

    const EigenDecomposition d = eigendecompose(build_sp_hamiltonian(ProbeSpec::single_particle(3, 0.2, 0.0)));
    CHECK(d.energies(0) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-14));
    CHECK(std::abs(d.energies(1)) < 1e-14);
    CHECK(d.energies(2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

    CHECK_THROWS_AS(build_sp_hamiltonian(ProbeSpec::many_body(4, 0.1)), InvalidArgument);
}

TEST_CASE("sector basis") {
    for (int L : {2, 4, 8, 12}) {
        const SectorBasis b(L);
        CHECK(b.size() == Index(binomial(L, L / 2)));
        for (Index i = 0; i < b.size(); ++i) {
            CHECK(std::popcount(b.state(i)) == L / 2);
            CHECK(b.index(b.state(i)) == i);
            if (i) CHECK(b.state(i) > b.state(i - 1));
        }
    }
    const SectorBasis b2(2);
    CHECK(b2.state(0) == 1);  // site 1 up, site 2 down
    CHECK(b2.state(1) == 2);
    CHECK_THROWS_AS(b2.index(3), InvalidArgument);
    CHECK_THROWS_AS(SectorBasis(3), InvalidArgument);
}

TEST_CASE("field generator") {
    const Eigen::VectorXd sp = build_field_generator(ProbeSpec::single_particle(2, std::log(2.0)));
    CHECK(sp(0) == doctest::Approx(2.0));
    CHECK(sp(1) == doctest::Approx(4.0));

    const double a = 0.37;
    const SectorBasis b2(2);
    const Eigen::VectorXd mb = build_field_generator(ProbeSpec::many_body(2, a), &b2);
    CHECK(mb(0) == doctest::Approx(std::exp(a) - std::exp(2 * a)).epsilon(1e-14));
    CHECK(mb(1) == doctest::Approx(std::exp(2 * a) - std::exp(a)).epsilon(1e-14));

    const SectorBasis b8(8);
    const Eigen::VectorXd flat = build_field_generator(ProbeSpec::many_body(8, 0.0), &b8);
    CHECK(flat.cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(build_field_generator(ProbeSpec::many_body(4, 0.1)), InvalidArgument);
    CHECK_THROWS_AS(build_field_generator(ProbeSpec::many_body(4, 0.1), &b8), InvalidArgument);
}

TEST_CASE("many-body hamiltonian small cases") {
    const SectorBasis b2(2);
    const Eigen::MatrixXd H = build_mb_hamiltonian(ProbeSpec::many_body(2, 0.4, 0.0), b2);
    Eigen::Matrix2d expect;
    expect << 1, -2, -2, 1;
    CHECK(H == expect);
    const EigenDecomposition d = eigendecompose(H);
    CHECK(d.energies(0) == doctest::Approx(-1.0));
    CHECK(d.energies(1) == doctest::Approx(3.0));

    const double a = 0.4, h = 0.7;
    const Eigen::MatrixXd Hh = build_mb_hamiltonian(ProbeSpec::many_body(2, a, h), b2);
    Eigen::Matrix2d field = Eigen::Matrix2d::Zero();
    field(0, 0) = std::exp(a) - std::exp(2 * a);
    field(1, 1) = -field(0, 0);
    CHECK((Hh - (expect + h * field)).cwiseAbs().maxCoeff() < 1e-14);

    // L = 4 trace from the six patterns by hand-rolled loop over all 16 integers
    const SectorBasis b4(4);
    double trace = 0.0;
    for (unsigned s = 0; s < 16; ++s) {
        if (std::popcount(s) != 2) continue;
        for (int j = 0; j < 3; ++j) trace -= ((s >> j & 1) ? 1 : -1) * ((s >> (j + 1) & 1) ? 1 : -1);
    }
    CHECK(build_mb_hamiltonian(ProbeSpec::many_body(4, 0.2, 0.0), b4).trace() == doctest::Approx(trace));

    CHECK_THROWS_AS(build_mb_hamiltonian(ProbeSpec::single_particle(4, 0.1), b4), InvalidArgument);
    CHECK_THROWS_AS(build_mb_hamiltonian(ProbeSpec::many_body(6, 0.1), b4), InvalidArgument);
}

TEST_CASE("many-body hamiltonian matches brute-force Pauli construction") {
    for (int L : {2, 4, 6, 8}) {
        for (double h : {0.0, 0.83}) {
            const double a = 0.13;
            const Eigen::MatrixXcd full = brute_force_mb(L, a, h);
            CHECK(full.imag().cwiseAbs().maxCoeff() < 1e-14);
            // block structure: no element joins different magnetisations
            double leak = 0.0;
            for (Index r = 0; r < full.rows(); ++r)
                for (Index c = 0; c < full.cols(); ++c)
                    if (std::popcount(std::uint64_t(r)) != std::popcount(std::uint64_t(c)))
                        leak = std::max(leak, std::abs(full(r, c)));
            CHECK(leak == 0.0);

            const SectorBasis b(L);
            const Eigen::MatrixXd H = build_mb_hamiltonian(ProbeSpec::many_body(L, a, h), b);
            double err = 0.0;
            for (Index i = 0; i < b.size(); ++i)
                for (Index j = 0; j < b.size(); ++j)
                    err = std::max(err, std::abs(full(Index(b.state(i)), Index(b.state(j))).real() - H(i, j)));
            CHECK(err <= 1e-12);
            CHECK(H == H.transpose());
        }
    }
}

TEST_CASE("sparse and dense builders agree") {
    const SectorBasis b(10);
    const ProbeSpec s = ProbeSpec::many_body(10, 0.1, 2.5);
    const Eigen::MatrixXd dense = build_mb_hamiltonian(s, b);
    const Eigen::MatrixXd from_sparse = Eigen::MatrixXd(build_mb_sparse(s, b));
    CHECK(dense == from_sparse);
}
