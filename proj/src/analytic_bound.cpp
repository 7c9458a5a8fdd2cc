#include "starkqfi/analytic_bound.hpp"

#include <cmath>
#include <numbers>

#include "starkqfi/errors.hpp"

namespace starkqfi {

double LogScaled::log() const { return std::log(mantissa) + log_scale; }

std::optional<double> LogScaled::value() const {
    const double v = mantissa * std::exp(log_scale);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

namespace {

// Neumaier compensated summation.
struct Accumulator {
    double sum = 0.0, comp = 0.0;
    void add(double x) {
        const double t = sum + x;
        comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    double result() const { return sum + comp; }
};

void check_bound_args(double a, int L) {
    if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("a must be > 0");
    if (L < 2) throw InvalidArgument("L must be >= 2");
}

// sum_j e^{a(j-L)} sin(j k theta) sin(j theta)
double scaled_overlap(int L, double a, int k) {
    const double theta = std::numbers::pi / (L + 1);
    Accumulator acc;
    for (int j = 1; j <= L; ++j) acc.add(std::exp(a * (j - L)) * std::sin(j * k * theta) * std::sin(j * theta));
    return acc.result();
}

double d_of_k(int L, int k) {
    const double theta = std::numbers::pi / (L + 1);
    const double d = std::cos(k * theta) - std::cos(theta);
    return d * d;
}

// 1 - e^a cos(alpha) over 1 - 2 e^a cos(alpha) + e^{2a}
double leading_ratio(double a, double alpha) {
    const double ea = std::exp(a);
    return (1.0 - ea * std::cos(alpha)) / (1.0 - 2.0 * ea * std::cos(alpha) + ea * ea);
}

}  // namespace

double c_sum_direct(int L, double a, double alpha) {
    if (L < 1) throw InvalidArgument("c_sum_direct: L must be >= 1");
    Accumulator acc;
    for (int j = 1; j <= L; ++j) acc.add(std::exp(a * j) * std::cos(j * alpha));
    return acc.result();
}

double c_sum_closed(int L, double a, double alpha) {
    if (L < 1) throw InvalidArgument("c_sum_closed: L must be >= 1");
    const double ea = std::exp(a);
    const double den = 1.0 - 2.0 * ea * std::cos(alpha) + ea * ea;
    if (!(den > 1e-14)) throw InvalidArgument("c_sum_closed: near-singular denominator (a and alpha both ~ 0)");
    const double num = ea * std::cos(alpha) - ea * ea - std::exp(a * (L + 1)) * std::cos((L + 1) * alpha) +
                       std::exp(a * (L + 2)) * std::cos(L * alpha);
    return num / den;
}

LogScaled n_over_d(int L, double a, int k) {
    if (L < 2) throw InvalidArgument("n_over_d: L must be >= 2");
    if (k < 2 || k > L) throw InvalidArgument("n_over_d: k must be in [2, L]");
    const double s = scaled_overlap(L, a, k);
    return {s * s / d_of_k(L, k), 2.0 * a * L};
}

LogScaled appendix_qfi_sum_scaled(int L, double a) {
    if (L < 2) throw InvalidArgument("appendix_qfi_sum: L must be >= 2");
    if (!(a >= 0.0)) throw InvalidArgument("appendix_qfi_sum: a must be >= 0");
    Accumulator acc;
    for (int k = 2; k <= L; ++k) acc.add(n_over_d(L, a, k).mantissa);
    return {4.0 / double(L + 1) / double(L + 1) * acc.result(), 2.0 * a * L};
}

double appendix_qfi_sum(int L, double a) {
    const LogScaled s = appendix_qfi_sum_scaled(L, a);
    const auto v = s.value();
    return v ? *v : HUGE_VAL;
}

LogScaled k2_term(int L, double a) {
    LogScaled t = n_over_d(L, a, 2);
    t.mantissa *= 4.0 / double(L + 1) / double(L + 1);
    return t;
}

double theta_factor(double a, int L) {
    check_bound_args(a, L);
    const double theta = std::numbers::pi / (L + 1);
    const double diff = leading_ratio(a, theta) - leading_ratio(a, 3.0 * theta);
    const double inv = 1.0 / (std::cos(2.0 * theta) - std::cos(theta));
    return diff * diff * inv * inv;
}

double theta_limit(double a) {
    if (!(a > 0.0)) throw InvalidArgument("theta_limit: a must be > 0 (pole at a = 0)");
    if (a < 100.0) {
        const double ea = std::exp(a);
        const double em1 = std::expm1(a);
        const double em1_3 = em1 * em1 * em1;
        return (64.0 * ea * ea * (ea + 1.0) * (ea + 1.0)) / (9.0 * em1_3 * em1_3);
    }
    // log form, stable for large a
    const double log_plus = a + std::log1p(std::exp(-a));
    const double log_minus = a + std::log(-std::expm1(-a));
    return 64.0 / 9.0 * std::exp(2.0 * a + 2.0 * log_plus - 6.0 * log_minus);
}

LogScaled qfi_lower_bound(double a, int L, double J) {
    check_bound_args(a, L);
    if (!(J > 0.0)) throw InvalidArgument("qfi_lower_bound: J must be > 0");
    const double lp1 = L + 1.0;
    return {theta_factor(a, L) / (J * J * lp1 * lp1), 2.0 * a * lp1};
}

}  // namespace starkqfi
