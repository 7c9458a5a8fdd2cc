#pragma once

#include <span>

namespace starkqfi {

/// Ordinary least squares y = slope x + intercept in the (possibly
/// log-transformed) coordinates; window is the range of the raw abscissa.
struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    int n_points = 0;
};

FitResult fit_linear(std::span<const double> x, std::span<const double> y);

/// ln F vs L; slope is beta.
FitResult fit_exponential_in_L(std::span<const double> L, std::span<const double> F);

/// ln y vs ln x.
FitResult fit_power_law(std::span<const double> x, std::span<const double> y);

/// beta = c1 a + c0; slope = c1, intercept = c0.
FitResult meta_fit_linear_in_a(std::span<const double> a, std::span<const double> beta);

/// ln h_max vs L; slope is a'.
FitResult fit_hmax_scaling(std::span<const double> L, std::span<const double> h_max);

/// F_Q / tau with tau = 1/gap.
double rescaled_fom(double F, double gap);

/// Cramer-Rao floor 1/sqrt(M F).
double precision_bound(double F, double M);

}  // namespace starkqfi
