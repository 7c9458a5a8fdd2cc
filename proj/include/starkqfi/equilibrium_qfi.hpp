#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "starkqfi/model.hpp"
#include "starkqfi/scaling.hpp"
#include "starkqfi/spectral.hpp"

namespace starkqfi {

enum class Method { EigenSum, FidelityFD, Dynamic };

std::string to_string(Method m);
Method parse_method(const std::string& text);

struct EigenSumResult {
    double value = 0.0;
    int excluded_pairs = 0;  ///< near-degenerate partners with vanishing matrix element
};

/// 4 sum_{k != l} |<k|H0|l>|^2 / (E_k - E_l)^2. generator is the diagonal of H0.
EigenSumResult qfi_eigen_sum(const EigenDecomposition& decomp, const Eigen::VectorXd& generator, Index l);

/// Normalised, sign-fixed state of the probe at field h.
using StateFunction = std::function<Eigen::VectorXd(double h)>;
using HamiltonianBuilder = std::function<Eigen::MatrixXd(double h)>;

struct FdResult {
    double value = 0.0;
    double dh = 0.0;
};

/// max(1e-6, 1e-4 |h|)
double default_fd_step(double h);

/// 2(1 - |<psi(h-dh)|psi(h+dh)>|)/dh^2 with one Richardson step (dh, dh/2).
FdResult qfi_fidelity_fd(const StateFunction& state_at, double h, std::optional<double> dh = std::nullopt);
FdResult qfi_fidelity_fd(const HamiltonianBuilder& builder, double h, const StateSelector& which,
                         std::optional<double> dh = std::nullopt);

enum class SolverPath { Auto, Dense, Iterative };

struct QfiOptions {
    Method method = Method::EigenSum;
    SolverPath path = SolverPath::Auto;  ///< Auto: dense up to dim 4000
    std::optional<double> dh;
};

inline constexpr Index kDenseLimit = 4000;

/// QFI of one probe at spec.h. For FidelityFD an exact h = 0 is moved to 1e-8.
double qfi_at(const ProbeSpec& spec, const StateSelector& which, const QfiOptions& opts = {});

/// Sampled h -> F_Q. h_grid holds magnitudes; the field applied is field_sign * h.
struct QfiCurve {
    ProbeSpec probe;
    StateSelector state;
    Method method = Method::EigenSum;
    double field_sign = 1.0;
    std::vector<double> h_grid;
    std::vector<double> values;
};

QfiCurve sweep_equilibrium(const ProbeSpec& templ, std::vector<double> h_grid, const StateSelector& which,
                           const QfiOptions& opts = {}, double field_sign = 1.0);

enum class PeakRule {
    GlobalMaximum,
    AfterFirstDip  ///< largest value after the first local minimum >= 1% below the running maximum
};

/// Grid index of the peak under `rule`. Boundary peaks throw NoInteriorPeakError.
Index peak_index(std::span<const double> h, std::span<const double> values, PeakRule rule = PeakRule::GlobalMaximum);

/// Parabolic refinement in (log h, log F) around the grid peak.
double find_transition(const QfiCurve& curve, PeakRule rule = PeakRule::GlobalMaximum);

struct TransitionPoint {
    double h_max = 0.0;
    double value = 0.0;
};

/// Grid scan, then a Brent search of log F over log h inside the bracketing grid cells.
TransitionPoint locate_transition(const std::function<double(double)>& f, std::span<const double> h_grid,
                                  PeakRule rule = PeakRule::GlobalMaximum);
TransitionPoint locate_transition(const std::function<double(double)>& f, std::span<const double> h_grid,
                                  std::span<const double> values, PeakRule rule = PeakRule::GlobalMaximum);

/// Slope of log F vs log(h - h_max) over grid points with h in [h_lo, h_hi].
FitResult fit_localized_decay(const QfiCurve& curve, double h_max, double h_lo, double h_hi);

/// n points log-spaced on [lo, hi], endpoints included.
std::vector<double> log_grid(double lo, double hi, int n);
std::vector<double> linear_grid(double lo, double hi, int n);

}  // namespace starkqfi
