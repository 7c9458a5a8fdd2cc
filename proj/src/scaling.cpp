#include "starkqfi/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "starkqfi/errors.hpp"

namespace starkqfi {

namespace {

std::vector<double> logs(std::span<const double> v, const char* what) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0) || !std::isfinite(v[i]))
            throw InvalidArgument(std::string(what) + " must be positive and finite (entry " + std::to_string(i) + ")");
        out[i] = std::log(v[i]);
    }
    return out;
}

FitResult with_window(FitResult f, std::span<const double> raw_x) {
    const auto [lo, hi] = std::minmax_element(raw_x.begin(), raw_x.end());
    f.window_lo = *lo;
    f.window_hi = *hi;
    return f;
}

}  // namespace

FitResult fit_linear(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("fit: x and y differ in length");
    const std::size_t n = x.size();
    if (n < 3) throw InvalidArgument("fit: need at least 3 points, got " + std::to_string(n));
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw InvalidArgument("fit: non-finite input");
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw InvalidArgument("fit: abscissa has no spread");
    FitResult f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        ssr += r * r;
    }
    // constant ordinate up to rounding: the fit is exact
    const bool flat = syy <= 1e-24 * (double(n) * my * my + 1e-300);
    f.r_squared = flat ? 1.0 : std::clamp(1.0 - ssr / syy, 0.0, 1.0);
    f.n_points = static_cast<int>(n);
    return with_window(f, x);
}

FitResult fit_exponential_in_L(std::span<const double> L, std::span<const double> F) {
    const auto lf = logs(F, "F");
    return fit_linear(L, lf);
}

FitResult fit_power_law(std::span<const double> x, std::span<const double> y) {
    const auto lx = logs(x, "x");
    const auto ly = logs(y, "y");
    return with_window(fit_linear(lx, ly), x);
}

FitResult meta_fit_linear_in_a(std::span<const double> a, std::span<const double> beta) {
    return fit_linear(a, beta);
}

FitResult fit_hmax_scaling(std::span<const double> L, std::span<const double> h_max) {
    const auto lh = logs(h_max, "h_max");
    return fit_linear(L, lh);
}

double rescaled_fom(double F, double gap) {
    if (!(gap > 0.0)) throw InvalidArgument("rescaled_fom: gap must be positive");
    return F * gap;
}

double precision_bound(double F, double M) {
    if (!(F > 0.0)) throw InvalidArgument("precision_bound: F must be positive");
    if (!(M >= 1.0)) throw InvalidArgument("precision_bound: M must be >= 1");
    return 1.0 / std::sqrt(M * F);
}

}  // namespace starkqfi
