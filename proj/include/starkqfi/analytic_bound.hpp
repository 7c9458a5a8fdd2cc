#pragma once

#include <optional>

namespace starkqfi {

/// value = mantissa * exp(log_scale). Keeps e^{2a(L+1)}-sized numbers usable.
struct LogScaled {
    double mantissa = 0.0;
    double log_scale = 0.0;

    double log() const;
    /// Plain double when finite, otherwise nothing.
    std::optional<double> value() const;
};

/// sum_{j=1}^{L} e^{a j} cos(j alpha), compensated summation.
double c_sum_direct(int L, double a, double alpha);

/// Geometric-series closed form of the same sum.
double c_sum_closed(int L, double a, double alpha);

/// N(k)/D(k) of the free-chain expansion, scaled by e^{-2aL} (log_scale = 2aL).
LogScaled n_over_d(int L, double a, int k);

/// Free-chain ground-state QFI at h = 0: (4/(L+1)^2) sum_{k>=2} N(k)/D(k).
LogScaled appendix_qfi_sum_scaled(int L, double a);
double appendix_qfi_sum(int L, double a);

/// Exact k = 2 contribution (4/(L+1)^2) N(2)/D(2).
LogScaled k2_term(int L, double a);

double theta_factor(double a, int L);
double theta_limit(double a);

/// e^{2a(L+1)} Theta(a,L) / (J^2 (L+1)^2).
///
/// Expanding sin(2j theta) sin(j theta) = [cos(j theta) - cos(3 j theta)]/2 gives
/// N(2) = [C(theta) - C(3 theta)]^2 / 4, so the asymptotic k = 2 term carries no
/// extra factor of 4. With that factor the expression overshoots the QFI.
LogScaled qfi_lower_bound(double a, int L, double J = 1.0);

/// Prefactor of the variant that keeps the spurious factor 4.
inline constexpr double kOvershootBoundPrefactor = 4.0;

}  // namespace starkqfi
