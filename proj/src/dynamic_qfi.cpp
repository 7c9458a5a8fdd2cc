#include "starkqfi/dynamic_qfi.hpp"

#include <algorithm>
#include <cmath>

#include "starkqfi/equilibrium_qfi.hpp"
#include "starkqfi/errors.hpp"

namespace starkqfi {

namespace {

using cd = std::complex<double>;
constexpr cd I{0.0, 1.0};

// (e^{i w t} - 1)/(i w), with the series guard for |w t| < 1e-6.
cd tau(double w, double t) {
    const double x = w * t;
    if (std::abs(x) < 1e-6) return cd(t, 0.5 * w * t * t);
    return std::exp(cd(0.0, 0.5 * x)) * (2.0 * std::sin(0.5 * x) / w);
}

// Pairs closer than this go through tau() directly instead of the M/omega factorisation.
constexpr double kSmallOmega = 1e-3;
constexpr Index kTimeBlock = 256;

void check_unit(const ComplexVector& v, const char* who) {
    if (std::abs(v.norm() - 1.0) > 1e-10) throw InvalidArgument(std::string(who) + ": state must have unit norm");
}

}  // namespace

Eigen::VectorXd initial_state(const ProbeSpec& spec, InitialState kind) {
    spec.validate();
    if (kind == InitialState::CenterSite) {
        if (spec.probe != ProbeClass::SingleParticle) throw InvalidArgument("center-site state needs the single-particle probe");
        Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.L);
        v((spec.L + 1) / 2 - 1) = 1.0;
        return v;
    }
    if (spec.probe != ProbeClass::ManyBody) throw InvalidArgument("Neel state needs the many-body probe");
    const SectorBasis basis(spec.L);
    std::uint64_t pattern = 0;
    for (int b = 0; b < spec.L; b += 2) pattern |= std::uint64_t(1) << b;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(basis.size());
    v(basis.index(pattern)) = 1.0;
    return v;
}

ComplexVector evolve(const EigenDecomposition& decomp, const ComplexVector& psi0, double t) {
    if (psi0.size() != decomp.dim()) throw InvalidArgument("evolve: size mismatch");
    check_unit(psi0, "evolve");
    if (t == 0.0) return psi0;
    ComplexVector c = decomp.vectors.transpose().cast<cd>() * psi0;
    for (Index k = 0; k < c.size(); ++k) c(k) *= std::exp(cd(0.0, -decomp.energies(k) * t));
    return decomp.vectors.cast<cd>() * c;
}

ComplexVector dh_state_spectral(const EigenDecomposition& decomp, const Eigen::VectorXd& generator,
                                const ComplexVector& psi0, double t) {
    const Index n = decomp.dim();
    if (psi0.size() != n || generator.size() != n) throw InvalidArgument("dh_state_spectral: size mismatch");
    check_unit(psi0, "dh_state_spectral");
    const Eigen::MatrixXd& U = decomp.vectors;
    const Eigen::MatrixXd M = U.transpose() * generator.asDiagonal() * U;
    const ComplexVector c = U.transpose().cast<cd>() * psi0;
    ComplexVector w = ComplexVector::Zero(n);
    for (Index l = 0; l < n; ++l)
        for (Index k = 0; k < n; ++k) w(k) += M(k, l) * tau(decomp.energies(k) - decomp.energies(l), t) * c(l);
    for (Index k = 0; k < n; ++k) w(k) *= -I * std::exp(cd(0.0, -decomp.energies(k) * t));
    return U.cast<cd>() * w;
}

double qfi_dynamic(const StatePair& pair) {
    if (pair.psi.size() != pair.dpsi.size()) throw InvalidArgument("qfi_dynamic: size mismatch");
    check_unit(pair.psi, "qfi_dynamic");
    const double nn = pair.dpsi.squaredNorm();
    const double ov = std::norm(pair.dpsi.dot(pair.psi));
    const double f = 4.0 * (nn - ov);
    if (f < -1e-9 * std::max(1.0, 4.0 * nn)) throw NumericalError("qfi_dynamic: negative QFI " + std::to_string(f));
    return std::max(0.0, f);
}

double time_average(const TimeSeries& s, double t_min, double t_max) {
    if (s.times.size() != s.values.size()) throw InvalidArgument("time_average: malformed series");
    if (!(t_max > t_min) || t_min != std::floor(t_min) || t_max != std::floor(t_max))
        throw InvalidArgument("time_average: need integer t_min < t_max");
    double acc = 0.0;
    std::size_t j = 0;
    for (double t = t_min; t <= t_max; t += 1.0) {
        while (j < s.times.size() && s.times[j] < t - 1e-9) ++j;
        if (j == s.times.size() || std::abs(s.times[j] - t) > 1e-9)
            throw InvalidArgument("time_average: series has no sample at t=" + std::to_string(t));
        acc += s.values[j];
    }
    // literal normalisation: t_max - t_min + 1 samples divided by t_max - t_min
    return acc / (t_max - t_min);
}

TimeSeries normalized_qfi(const TimeSeries& s) {
    TimeSeries out;
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        if (s.times[i] <= 0.0) continue;
        out.times.push_back(s.times[i]);
        out.values.push_back(s.values[i] / (s.times[i] * s.times[i]));
    }
    return out;
}

double mean_normalized_qfi(const TimeSeries& s, double t_min, double t_max) {
    double acc = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        const double t = s.times[i];
        if (t < t_min || t > t_max || t <= 0.0) continue;
        acc += s.values[i] / (t * t);
        ++n;
    }
    if (n == 0) throw InvalidArgument("mean_normalized_qfi: no samples in window");
    return acc / n;
}

DynamicQfi::DynamicQfi(const EigenDecomposition& decomp, const Eigen::VectorXd& generator, const ComplexVector& psi0)
    : energies_(decomp.energies) {
    const Index n = decomp.dim();
    if (psi0.size() != n || generator.size() != n) throw InvalidArgument("DynamicQfi: size mismatch");
    check_unit(psi0, "DynamicQfi");
    const Eigen::MatrixXd& U = decomp.vectors;
    c_ = U.transpose().cast<cd>() * psi0;
    // F is unchanged by H0 -> H0 - mu; centring removes the large common part.
    const double mu = psi0.cwiseAbs2().dot(generator);
    const Eigen::VectorXd gshift = generator.array() - mu;
    g_.noalias() = U.transpose() * (gshift.asDiagonal() * U);
    for (Index l = 0; l < n; ++l) {
        for (Index k = 0; k < n; ++k) {
            const double w = energies_(k) - energies_(l);
            if (std::abs(w) < kSmallOmega) {
                if (g_(k, l) != 0.0) small_.push_back({k, l, g_(k, l), w});
                g_(k, l) = 0.0;
            } else {
                g_(k, l) /= w;
            }
        }
    }
    gc_ = g_.cast<cd>() * c_;
}

TimeSeries DynamicQfi::series(std::span<const double> times) const {
    const Index n = energies_.size();
    TimeSeries out;
    out.times.assign(times.begin(), times.end());
    out.values.resize(times.size());
    const Eigen::VectorXd cr = c_.real(), ci = c_.imag();
    for (Index b0 = 0; b0 < static_cast<Index>(times.size()); b0 += kTimeBlock) {
        const Index nb = std::min<Index>(kTimeBlock, static_cast<Index>(times.size()) - b0);
        // columns [0, nb): Re p(t), [nb, 2nb): Im p(t), p_l = e^{-i E_l t} c_l
        Eigen::MatrixXd P(n, 2 * nb);
        for (Index j = 0; j < nb; ++j) {
            const double t = times[b0 + j];
            for (Index l = 0; l < n; ++l) {
                const cd p = std::exp(cd(0.0, -energies_(l) * t)) * c_(l);
                P(l, j) = p.real();
                P(l, nb + j) = p.imag();
            }
        }
        const Eigen::MatrixXd GP = g_ * P;
        ComplexVector w(n);
        for (Index j = 0; j < nb; ++j) {
            const double t = times[b0 + j];
            for (Index k = 0; k < n; ++k) {
                const cd gp(GP(k, j), GP(k, nb + j));
                w(k) = -I * (std::exp(cd(0.0, energies_(k) * t)) * gp - gc_(k));
            }
            for (const SmallPair& s : small_) w(s.k) += s.m * tau(s.omega, t) * c_(s.l);
            const double nn = w.squaredNorm();
            const double ov = std::norm(c_.dot(w));
            const double f = 4.0 * (nn - ov);
            if (f < -1e-9 * std::max(1.0, 4.0 * nn))
                throw NumericalError("DynamicQfi: negative QFI " + std::to_string(f) + " at t=" + std::to_string(t));
            out.values[b0 + j] = t == 0.0 ? 0.0 : std::max(0.0, f);
        }
    }
    return out;
}

double DynamicQfi::at(double t) const {
    const double ts[1] = {t};
    return series(ts).values[0];
}

DynamicQfi make_dynamic(const ProbeSpec& spec, InitialState kind) {
    spec.validate();
    const Eigen::VectorXd psi0 = initial_state(spec, kind);
    if (spec.probe == ProbeClass::SingleParticle) {
        return DynamicQfi(eigendecompose(build_sp_hamiltonian(spec)), build_field_generator(spec), psi0.cast<cd>());
    }
    const SectorBasis basis(spec.L);
    if (basis.size() > kDenseLimit)
        throw InvalidArgument("many-body dynamics needs the full spectrum; L=" + std::to_string(spec.L) + " too large");
    return DynamicQfi(eigendecompose(build_mb_hamiltonian(spec, basis)), build_field_generator(spec, &basis),
                      psi0.cast<cd>());
}

std::vector<double> integer_times(int t_min, int t_max) {
    if (t_max < t_min) throw InvalidArgument("integer_times: t_max < t_min");
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(t_max - t_min + 1));
    for (int i = t_min; i <= t_max; ++i) t.push_back(i);
    return t;
}

double time_averaged_qfi(const ProbeSpec& spec, InitialState kind, int t_min, int t_max) {
    const auto times = integer_times(t_min, t_max);
    return time_average(make_dynamic(spec, kind).series(times), t_min, t_max);
}

}  // namespace starkqfi
