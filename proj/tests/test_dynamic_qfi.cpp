#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "starkqfi/dynamic_qfi.hpp"
#include "starkqfi/errors.hpp"
#include "starkqfi/scaling.hpp"

using namespace starkqfi;
using cd = std::complex<double>;

namespace {

double rel(double x, double y) { return std::abs(x - y) / std::abs(y); }

ComplexVector cvec(const Eigen::VectorXd& v) { return v.cast<cd>(); }

// psi(t, h) for a single-particle chain, by dense matrix exponential
ComplexVector evolve_expm(const ProbeSpec& s, const ComplexVector& psi0, double t) {
    const Eigen::MatrixXcd H = build_sp_hamiltonian(s).dense().cast<cd>();
    const Eigen::MatrixXcd U = (cd(0, -t) * H).exp();
    return U * psi0;
}

double fd_qfi(const ProbeSpec& s, const ComplexVector& psi0, double t, double d) {
    auto at = [&](double h) {
        const EigenDecomposition dec = eigendecompose(build_sp_hamiltonian(s.with_field(h)));
        return evolve(dec, psi0, t);
    };
    const ComplexVector psi = at(s.h);
    const ComplexVector dpsi = (at(s.h + d) - at(s.h - d)) / (2 * d);
    return qfi_dynamic({psi, dpsi});
}

}  // namespace

TEST_CASE("initial states") {
    CHECK(initial_state(ProbeSpec::single_particle(4, 0.1), InitialState::CenterSite) == Eigen::Vector4d(0, 1, 0, 0));
    const Eigen::VectorXd c101 = initial_state(ProbeSpec::single_particle(101, 0.1), InitialState::CenterSite);
    CHECK(c101(50) == 1.0);
    CHECK(c101.sum() == 1.0);
    const Eigen::VectorXd neel = initial_state(ProbeSpec::many_body(4, 0.1), InitialState::Neel);
    const SectorBasis b(4);
    CHECK(neel(b.index(0b0101)) == 1.0);  // sites 1 and 3 up
    CHECK(neel.sum() == 1.0);
    CHECK_THROWS_AS(initial_state(ProbeSpec::single_particle(4, 0.1), InitialState::Neel), InvalidArgument);
    CHECK_THROWS_AS(initial_state(ProbeSpec::many_body(4, 0.1), InitialState::CenterSite), InvalidArgument);
}

TEST_CASE("evolution") {
    const ProbeSpec s = ProbeSpec::single_particle(2, 0.3, 0.0);
    const EigenDecomposition d = eigendecompose(build_sp_hamiltonian(s));
    const ComplexVector psi0 = cvec(Eigen::Vector2d(1, 0));
    CHECK(evolve(d, psi0, 0.0) == psi0);

    const double t = std::numbers::pi / 2;
    const ComplexVector psi = evolve(d, psi0, t);
    CHECK(std::norm(psi(1)) == doctest::Approx(std::pow(std::sin(t), 2)).epsilon(1e-12));
    CHECK((psi - evolve_expm(s, psi0, t)).norm() < 1e-12);

    // diagonal Hamiltonian: only phases move
    EigenDecomposition diag{Eigen::Vector3d(0.3, -1.2, 2.0), Eigen::MatrixXd::Identity(3, 3)};
    const ComplexVector e1 = cvec(Eigen::Vector3d(0, 1, 0));
    const ComplexVector out = evolve(diag, e1, 3.7);
    CHECK(std::abs(out(1)) == doctest::Approx(1.0));
    CHECK(std::abs(out(0)) == 0.0);

    CHECK_THROWS_AS(evolve(d, cvec(Eigen::Vector2d(1, 1)), 1.0), InvalidArgument);
}

TEST_CASE("norm conservation against the matrix exponential") {
    const ProbeSpec s = ProbeSpec::single_particle(40, 0.07, 0.02);
    const EigenDecomposition d = eigendecompose(build_sp_hamiltonian(s));
    const ComplexVector psi0 = cvec(initial_state(s, InitialState::CenterSite));
    for (double t : {0.5, 3.0, 17.0, 250.0, 1000.0}) {
        const ComplexVector psi = evolve(d, psi0, t);
        CHECK(std::abs(psi.norm() - 1.0) <= 1e-10);
        if (t < 100) CHECK((psi - evolve_expm(s, psi0, t)).norm() < 1e-9);
    }
}

TEST_CASE("state derivative special cases") {
    const ProbeSpec s = ProbeSpec::single_particle(6, 0.2, 0.1);
    const EigenDecomposition d = eigendecompose(build_sp_hamiltonian(s));
    const Eigen::VectorXd g = build_field_generator(s);
    const ComplexVector psi0 = cvec(initial_state(s, InitialState::CenterSite));
    CHECK(dh_state_spectral(d, g, psi0, 0.0).norm() == 0.0);
    CHECK(qfi_dynamic({psi0, dh_state_spectral(d, g, psi0, 0.0)}) == 0.0);

    // no hopping: a site state only picks up the phase -i t V_j
    const Eigen::VectorXd V = potential_values(PotentialProfile::exponential(0.2), 6);
    const double h = 0.1;
    EigenDecomposition dz = eigendecompose(Eigen::MatrixXd((h * V).asDiagonal()));
    const ComplexVector site = cvec(Eigen::VectorXd::Unit(6, 2));
    const double t = 4.5;
    const ComplexVector psi = evolve(dz, site, t);
    const ComplexVector dpsi = dh_state_spectral(dz, V, site, t);
    CHECK((dpsi - cd(0, -t * V(2)) * psi).norm() < 1e-12);
    CHECK(qfi_dynamic({psi, dpsi}) == doctest::Approx(0.0));

    // superposition of two sites: F = t^2 (V1 - V2)^2
    const ComplexVector sup = cvec((Eigen::VectorXd::Unit(6, 0) + Eigen::VectorXd::Unit(6, 1)) / std::sqrt(2.0));
    const double f = qfi_dynamic({evolve(dz, sup, t), dh_state_spectral(dz, V, sup, t)});
    CHECK(f == doctest::Approx(t * t * std::pow(V(0) - V(1), 2)).epsilon(1e-12));
    CHECK(DynamicQfi(dz, V, sup).at(t) == doctest::Approx(t * t * std::pow(V(0) - V(1), 2)).epsilon(1e-12));
}

TEST_CASE("spectral derivative matches central differences") {
    const ProbeSpec s = ProbeSpec::single_particle(50, 0.05, 0.01);
    const EigenDecomposition d = eigendecompose(build_sp_hamiltonian(s));
    const ComplexVector psi0 = cvec(initial_state(s, InitialState::CenterSite));
    const double t = 10.0, delta = 1e-6;
    const ComplexVector dpsi = dh_state_spectral(d, build_field_generator(s), psi0, t);
    auto at = [&](double h) { return evolve(eigendecompose(build_sp_hamiltonian(s.with_field(h))), psi0, t); };
    const ComplexVector fd = (at(s.h + delta) - at(s.h - delta)) / (2 * delta);
    CHECK((dpsi - fd).norm() / dpsi.norm() <= 1e-5);
    const ComplexVector psi = evolve(d, psi0, t);
    CHECK(std::abs(psi.dot(dpsi).real()) < 1e-8);
}

TEST_CASE("spectral and finite-difference QFI agree on random samples") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> Ld(4, 60);
    std::uniform_real_distribution<double> ad(0.0, 0.1), hd(0.0, 0.1), td(0.1, 100.0);
    for (int trial = 0; trial < 25; ++trial) {
        const ProbeSpec s = ProbeSpec::single_particle(Ld(rng), ad(rng), hd(rng));
        const double t = td(rng);
        const ComplexVector psi0 = cvec(initial_state(s, InitialState::CenterSite));
        const EigenDecomposition d = eigendecompose(build_sp_hamiltonian(s));
        const Eigen::VectorXd g = build_field_generator(s);
        const double spectral = qfi_dynamic({evolve(d, psi0, t), dh_state_spectral(d, g, psi0, t)});
        const double batched = DynamicQfi(d, g, psi0).at(t);
        const double fd = fd_qfi(s, psi0, t, 1e-6);
        if (spectral < 1e-6) continue;  // a = 0 draws give F ~ 0
        CHECK(rel(fd, spectral) <= 1e-5);
        CHECK(rel(batched, spectral) <= 1e-9);
    }
}

TEST_CASE("batched series equals pointwise evaluation for many-body Neel start") {
    const ProbeSpec s = ProbeSpec::many_body(8, 0.02, 0.7);
    const SectorBasis b(8);
    const EigenDecomposition d = eigendecompose(build_mb_hamiltonian(s, b));
    const Eigen::VectorXd g = build_field_generator(s, &b);
    const ComplexVector psi0 = cvec(initial_state(s, InitialState::Neel));
    const DynamicQfi dq(d, g, psi0);
    const std::vector<double> ts = {0.0, 1e-3, 0.5, 7.0, 120.0, 999.0};
    const TimeSeries ser = dq.series(ts);
    CHECK(ser.values[0] == 0.0);
    for (std::size_t i = 1; i < ts.size(); ++i) {
        const double direct = qfi_dynamic({evolve(d, psi0, ts[i]), dh_state_spectral(d, g, psi0, ts[i])});
        CHECK(rel(ser.values[i], direct) <= 1e-8);
        CHECK(ser.values[i] >= 0.0);
    }
}

TEST_CASE("global phase invariance") {
    const ProbeSpec s = ProbeSpec::single_particle(30, 0.08, 0.05);
    const EigenDecomposition d = eigendecompose(build_sp_hamiltonian(s));
    const Eigen::VectorXd g = build_field_generator(s);
    Eigen::VectorXd base = Eigen::VectorXd::Zero(30);
    base(10) = 0.6;
    base(11) = 0.8;
    const ComplexVector psi0 = cvec(base);
    const ComplexVector rotated = std::exp(cd(0, 1.234)) * psi0;
    for (double t : {0.3, 5.0, 80.0}) {
        const double f0 = qfi_dynamic({evolve(d, psi0, t), dh_state_spectral(d, g, psi0, t)});
        const double f1 = qfi_dynamic({evolve(d, rotated, t), dh_state_spectral(d, g, rotated, t)});
        CHECK(std::abs(f0 - f1) <= 1e-10 * std::max(1.0, f0));
        CHECK(std::abs(DynamicQfi(d, g, psi0).at(t) - DynamicQfi(d, g, rotated).at(t)) <= 1e-10 * std::max(1.0, f0));
    }
}

TEST_CASE("short-time variance law") {
    const double t = 1e-3;
    {
        const ProbeSpec s = ProbeSpec::single_particle(40, 0.1, 0.03);
        Eigen::VectorXd base = Eigen::VectorXd::Zero(40);
        base(5) = 0.6;
        base(30) = 0.8;
        const Eigen::VectorXd g = build_field_generator(s);
        const double mean = base.cwiseAbs2().dot(g);
        const double var = base.cwiseAbs2().dot(g.cwiseAbs2()) - mean * mean;
        const double f = DynamicQfi(eigendecompose(build_sp_hamiltonian(s)), g, cvec(base)).at(t);
        CHECK(rel(f, 4 * t * t * var) <= 1e-4);
    }
    {
        const ProbeSpec s = ProbeSpec::many_body(8, 0.2, 0.4);
        const SectorBasis b(8);
        const Eigen::VectorXd g = build_field_generator(s, &b);
        Eigen::VectorXd base = Eigen::VectorXd::Zero(b.size());
        base(3) = 1.0;
        base(17) = -1.0;
        base(40) = 0.5;
        base.normalize();
        const double mean = base.cwiseAbs2().dot(g);
        const double var = base.cwiseAbs2().dot(g.cwiseAbs2()) - mean * mean;
        const double f = DynamicQfi(eigendecompose(build_mb_hamiltonian(s, b)), g, cvec(base)).at(t);
        CHECK(rel(f, 4 * t * t * var) <= 1e-4);
    }
}

TEST_CASE("time average") {
    TimeSeries c;
    c.times = integer_times(0, 1000);
    c.values.assign(c.times.size(), 2.5);
    // 901 samples divided by 900
    CHECK(time_average(c) == doctest::Approx(2.5 * 901.0 / 900.0));
    TimeSeries lin;
    lin.times = integer_times(100, 1000);
    lin.values = lin.times;
    CHECK(time_average(lin) == doctest::Approx(550.6111111111).epsilon(1e-10));
    lin.times.erase(lin.times.begin() + 300);
    lin.values.erase(lin.values.begin() + 300);
    CHECK_THROWS_AS(time_average(lin), InvalidArgument);
}

TEST_CASE("normalised QFI") {
    TimeSeries q{{0, 1, 2, 4}, {0, 1, 4, 16}};
    const TimeSeries n = normalized_qfi(q);
    CHECK(n.times == std::vector<double>{1, 2, 4});
    CHECK(n.values == std::vector<double>{1, 1, 1});
    const TimeSeries l = normalized_qfi(TimeSeries{{1, 2, 4}, {1, 2, 4}});
    CHECK(l.values == std::vector<double>{1, 0.5, 0.25});
    CHECK(mean_normalized_qfi(q, 1, 4) == 1.0);
    CHECK_THROWS_AS(mean_normalized_qfi(q, 10, 20), InvalidArgument);
}

TEST_CASE("centre-site dynamics: quartic onset then linear growth") {
    const ProbeSpec s = ProbeSpec::single_particle(100, 0.05, 0.0);
    const DynamicQfi dq = make_dynamic(s, InitialState::CenterSite);
    const auto early = dq.series(std::vector<double>{1, 2, 3, 5, 7, 10});
    const double p = fit_power_law(early.times, early.values).slope;
    CHECK(p > 3.7);
    CHECK(p < 4.7);
    CHECK(dq.at(0.0) == 0.0);
}
