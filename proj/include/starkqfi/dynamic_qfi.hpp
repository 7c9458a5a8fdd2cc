#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "starkqfi/model.hpp"
#include "starkqfi/spectral.hpp"

namespace starkqfi {

using ComplexVector = Eigen::VectorXcd;

enum class InitialState { CenterSite, Neel };

/// CenterSite: site ceil(L/2) (single particle). Neel: sites 1,3,5,... up.
Eigen::VectorXd initial_state(const ProbeSpec& spec, InitialState kind);

struct TimeSeries {
    std::vector<double> times;
    std::vector<double> values;
};

struct StatePair {
    ComplexVector psi;
    ComplexVector dpsi;  ///< d psi / d h, unnormalised
};

/// psi(t) = sum_k e^{-i E_k t} <E_k|psi0> |E_k>
ComplexVector evolve(const EigenDecomposition& decomp, const ComplexVector& psi0, double t);

/// Exact d psi(t)/dh from the spectral representation. generator is diag(H0).
ComplexVector dh_state_spectral(const EigenDecomposition& decomp, const Eigen::VectorXd& generator,
                                const ComplexVector& psi0, double t);

/// 4 (<dpsi|dpsi> - |<dpsi|psi>|^2)
double qfi_dynamic(const StatePair& pair);

/// (1/(t_max - t_min)) sum over integer t in [t_min, t_max] of F(t).
double time_average(const TimeSeries& series, double t_min = 100.0, double t_max = 1000.0);

/// F(t)/t^2, t = 0 dropped.
TimeSeries normalized_qfi(const TimeSeries& series);

/// Arithmetic mean of F(t)/t^2 over samples with t in [t_min, t_max].
double mean_normalized_qfi(const TimeSeries& series, double t_min, double t_max);

/// F_Q(t) on many times for one decomposition. Uses the mean-shifted
/// generator and one GEMM per block of times.
class DynamicQfi {
public:
    DynamicQfi(const EigenDecomposition& decomp, const Eigen::VectorXd& generator, const ComplexVector& psi0);

    TimeSeries series(std::span<const double> times) const;
    double at(double t) const;

private:
    struct SmallPair {
        Index k, l;
        double m, omega;
    };
    Eigen::VectorXd energies_;
    ComplexVector c_;
    Eigen::MatrixXd g_;  ///< M/omega on well separated pairs, zero elsewhere
    ComplexVector gc_;
    std::vector<SmallPair> small_;
};

/// Decomposition, generator and initial state for one probe (dense path).
DynamicQfi make_dynamic(const ProbeSpec& spec, InitialState kind);

/// Integer times t_min..t_max (step 1).
std::vector<double> integer_times(int t_min, int t_max);

/// F-bar on [t_min, t_max] for one probe.
double time_averaged_qfi(const ProbeSpec& spec, InitialState kind, int t_min = 100, int t_max = 1000);

}  // namespace starkqfi
