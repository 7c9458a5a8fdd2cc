#include "starkqfi/equilibrium_qfi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <boost/math/tools/minima.hpp>

#include "starkqfi/errors.hpp"

namespace starkqfi {

std::string to_string(Method m) {
    switch (m) {
        case Method::EigenSum: return "eigen-sum";
        case Method::FidelityFD: return "fidelity-fd";
        case Method::Dynamic: return "dynamic";
    }
    return "?";
}

Method parse_method(const std::string& text) {
    if (text == "eigen-sum" || text == "eigensum") return Method::EigenSum;
    if (text == "fidelity-fd" || text == "fd") return Method::FidelityFD;
    if (text == "dynamic") return Method::Dynamic;
    throw InvalidArgument("unknown method '" + text + "' (eigen-sum | fidelity-fd)");
}

EigenSumResult qfi_eigen_sum(const EigenDecomposition& decomp, const Eigen::VectorXd& generator, Index l) {
    const Index n = decomp.dim();
    if (generator.size() != n) throw InvalidArgument("qfi_eigen_sum: generator size mismatch");
    if (l < 0 || l >= n) throw InvalidArgument("qfi_eigen_sum: state index out of range");
    const Eigen::VectorXd m = decomp.vectors.transpose() * generator.cwiseProduct(decomp.vectors.col(l));
    const double eps = decomp.degeneracy_tolerance();
    const double gmax = generator.size() ? generator.cwiseAbs().maxCoeff() : 0.0;
    const double El = decomp.energies(l);

    EigenSumResult r;
    std::vector<long> multiplet;
    double acc = 0.0;
    for (Index k = 0; k < n; ++k) {
        if (k == l) continue;
        const double w = decomp.energies(k) - El;
        if (std::abs(w) < eps) {
            if (std::abs(m(k)) > 1e-12 * (gmax + 1e-300)) multiplet.push_back(static_cast<long>(k));
            else ++r.excluded_pairs;
            continue;
        }
        acc += m(k) * m(k) / (w * w);
    }
    if (!multiplet.empty()) {
        multiplet.insert(multiplet.begin(), static_cast<long>(l));
        throw DegenerateStateError("qfi_eigen_sum: target state " + std::to_string(l) +
                                       " is degenerate with coupled partners",
                                   multiplet);
    }
    r.value = 4.0 * acc;
    return r;
}

double default_fd_step(double h) { return std::max(1e-6, 1e-4 * std::abs(h)); }

namespace {

// 2(1 - |<a|b>|)/dh^2, evaluated as ||a - s b||^2 / (2 dh)^2 * 4 without cancellation.
double fidelity_term(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double dh) {
    const double ov = a.dot(b);
    if (std::abs(ov) < 0.5)
        throw LevelCrossingError("fidelity overlap " + std::to_string(std::abs(ov)) +
                                 " < 0.5: level crossing inside the stencil, use a smaller dh");
    const double s = ov >= 0 ? 1.0 : -1.0;
    return (a - s * b).squaredNorm() / (dh * dh);
}

}  // namespace

FdResult qfi_fidelity_fd(const StateFunction& state_at, double h, std::optional<double> dh) {
    const double d = dh.value_or(default_fd_step(h));
    if (!(d > 0.0) || !std::isfinite(d)) throw InvalidArgument("qfi_fidelity_fd: dh must be positive");
    auto unit = [&](double x) {
        Eigen::VectorXd v = state_at(x);
        v.normalize();
        return v;
    };
    const Eigen::VectorXd m1 = unit(h - d), p1 = unit(h + d);
    const Eigen::VectorXd m2 = unit(h - d / 2), p2 = unit(h + d / 2);
    const double f1 = fidelity_term(m1, p1, d);
    const double f2 = fidelity_term(m2, p2, d / 2);
    if (std::abs(f1 - f2) > 1e-4 * std::abs(f2) + 1e-10)
        throw NumericalError("qfi_fidelity_fd: steps dh and dh/2 disagree (" + std::to_string(f1) + " vs " +
                             std::to_string(f2) + "), reduce dh");
    return {std::max(0.0, (4.0 * f2 - f1) / 3.0), d};
}

FdResult qfi_fidelity_fd(const HamiltonianBuilder& builder, double h, const StateSelector& which,
                         std::optional<double> dh) {
    auto state_at = [&](double x) -> Eigen::VectorXd {
        const EigenDecomposition dec = eigendecompose(builder(x));
        const Index i = which.resolve(dec.dim());
        const double eps = dec.degeneracy_tolerance();
        std::vector<long> multiplet;
        for (Index k = std::max<Index>(0, i - 1); k <= std::min<Index>(dec.dim() - 1, i + 1); ++k)
            if (k != i && std::abs(dec.energies(k) - dec.energies(i)) < eps) multiplet.push_back(long(k));
        if (!multiplet.empty()) {
            multiplet.insert(multiplet.begin(), long(i));
            throw DegenerateStateError("qfi_fidelity_fd: selected state degenerate at h=" + std::to_string(x),
                                       multiplet);
        }
        return dec.vectors.col(i);
    };
    return qfi_fidelity_fd(StateFunction(state_at), h, dh);
}

namespace {

double qfi_sp(const ProbeSpec& spec, const StateSelector& which, const QfiOptions& opts) {
    const Eigen::VectorXd gen = build_field_generator(spec);
    if (opts.method == Method::EigenSum) {
        const EigenDecomposition dec = eigendecompose(build_sp_hamiltonian(spec));
        return qfi_eigen_sum(dec, gen, which.resolve(dec.dim())).value;
    }
    HamiltonianBuilder b = [&](double x) { return build_sp_hamiltonian(spec.with_field(x)).dense(); };
    return qfi_fidelity_fd(b, spec.h, which, opts.dh).value;
}

double qfi_mb(const ProbeSpec& spec, const StateSelector& which, const QfiOptions& opts) {
    const SectorBasis basis(spec.L);
    const bool dense = opts.path == SolverPath::Dense || (opts.path == SolverPath::Auto && basis.size() <= kDenseLimit);
    if (opts.method == Method::EigenSum) {
        if (!dense) throw InvalidArgument("eigen-sum needs the full spectrum; use fidelity-fd above dim 4000");
        const EigenDecomposition dec = eigendecompose(build_mb_hamiltonian(spec, basis));
        return qfi_eigen_sum(dec, build_field_generator(spec, &basis), which.resolve(dec.dim())).value;
    }
    if (dense) {
        HamiltonianBuilder b = [&](double x) { return build_mb_hamiltonian(spec.with_field(x), basis); };
        return qfi_fidelity_fd(b, spec.h, which, opts.dh).value;
    }
    if (which.kind != StateSelector::Kind::Ground)
        throw InvalidArgument("iterative path only provides the ground state");
    auto warm = std::make_shared<Eigen::VectorXd>();
    StateFunction f = [&spec, &basis, warm](double x) -> Eigen::VectorXd {
        const SparseMatrix H = build_mb_sparse(spec.with_field(x), basis);
        const EigenDecomposition dec = lowest_eigenpairs(H, 2, {}, warm->size() ? warm.get() : nullptr);
        if (dec.energies(1) - dec.energies(0) < dec.degeneracy_tolerance())
            throw DegenerateStateError("ground state degenerate at h=" + std::to_string(x), {0, 1});
        *warm = dec.vectors.col(0);
        return dec.vectors.col(0);
    };
    return qfi_fidelity_fd(f, spec.h, opts.dh).value;
}

}  // namespace

double qfi_at(const ProbeSpec& spec, const StateSelector& which, const QfiOptions& opts) {
    spec.validate();
    if (opts.method == Method::Dynamic) throw InvalidArgument("qfi_at: dynamic QFI lives in dynamic_qfi");
    ProbeSpec s = spec;
    if (opts.method == Method::FidelityFD && s.h == 0.0) s.h = 1e-8;
    return s.probe == ProbeClass::SingleParticle ? qfi_sp(s, which, opts) : qfi_mb(s, which, opts);
}

QfiCurve sweep_equilibrium(const ProbeSpec& templ, std::vector<double> h_grid, const StateSelector& which,
                           const QfiOptions& opts, double field_sign) {
    if (h_grid.empty()) throw InvalidArgument("sweep_equilibrium: empty grid");
    for (std::size_t i = 0; i < h_grid.size(); ++i) {
        if (!(h_grid[i] >= 0.0)) throw InvalidArgument("sweep_equilibrium: grid must be non-negative");
        if (i && !(h_grid[i] > h_grid[i - 1])) throw InvalidArgument("sweep_equilibrium: grid must ascend");
    }
    QfiCurve c{templ, which, opts.method, field_sign, std::move(h_grid), {}};
    c.values.reserve(c.h_grid.size());
    for (double h : c.h_grid) {
        try {
            c.values.push_back(qfi_at(templ.with_field(field_sign * h), which, opts));
        } catch (const Error& e) {
            throw PointError(h, e.what());
        }
    }
    return c;
}

Index peak_index(std::span<const double> h, std::span<const double> values, PeakRule rule) {
    const Index n = static_cast<Index>(values.size());
    if (n != static_cast<Index>(h.size()) || n < 3) throw InvalidArgument("peak search needs >= 3 matching points");
    Index start = 0;
    if (rule == PeakRule::AfterFirstDip) {
        double running = values[0];
        start = -1;
        for (Index i = 1; i + 1 < n; ++i) {
            running = std::max(running, values[i]);
            if (values[i] <= values[i - 1] && values[i] <= values[i + 1] && values[i] < 0.99 * running) {
                start = i;
                break;
            }
        }
        if (start < 0) throw NoInteriorPeakError("no dip found before a secondary peak");
    }
    Index best = start;
    for (Index i = start + 1; i < n; ++i)
        if (values[i] > values[best]) best = i;  // strict: ties go to smaller h
    if (best == 0 || best == n - 1)
        throw NoInteriorPeakError("maximum sits on the grid boundary (h=" + std::to_string(h[best]) +
                                  "); widen the grid");
    return best;
}

double find_transition(const QfiCurve& curve, PeakRule rule) {
    const Index i = peak_index(curve.h_grid, curve.values, rule);
    const double x0 = std::log(curve.h_grid[i - 1]), x1 = std::log(curve.h_grid[i]), x2 = std::log(curve.h_grid[i + 1]);
    const double y0 = std::log(curve.values[i - 1]), y1 = std::log(curve.values[i]), y2 = std::log(curve.values[i + 1]);
    const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if (den == 0.0 || !std::isfinite(num / den)) return curve.h_grid[i];
    const double x = std::clamp(x1 - 0.5 * num / den, x0, x2);
    return std::exp(x);
}

TransitionPoint locate_transition(const std::function<double(double)>& f, std::span<const double> h_grid,
                                  PeakRule rule) {
    std::vector<double> v(h_grid.size());
    for (std::size_t i = 0; i < h_grid.size(); ++i) v[i] = f(h_grid[i]);
    return locate_transition(f, h_grid, v, rule);
}

TransitionPoint locate_transition(const std::function<double(double)>& f, std::span<const double> h_grid,
                                  std::span<const double> values, PeakRule rule) {
    const Index i = peak_index(h_grid, values, rule);
    auto neg_log = [&](double x) {
        const double v = f(std::exp(x));
        return v > 0.0 ? -std::log(v) : std::numeric_limits<double>::max();
    };
    std::uintmax_t iters = 100;
    const auto r = boost::math::tools::brent_find_minima(neg_log, std::log(h_grid[i - 1]), std::log(h_grid[i + 1]),
                                                         std::numeric_limits<double>::digits / 2, iters);
    TransitionPoint t{std::exp(r.first), std::exp(-r.second)};
    if (values[i] > t.value) t = {h_grid[i], values[i]};
    return t;
}

FitResult fit_localized_decay(const QfiCurve& curve, double h_max, double h_lo, double h_hi) {
    if (!(h_lo > h_max)) throw InvalidArgument("fit_localized_decay: window must lie above h_max");
    if (!(h_hi > h_lo)) throw InvalidArgument("fit_localized_decay: empty window");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < curve.h_grid.size(); ++i) {
        const double h = curve.h_grid[i];
        if (h < h_lo || h > h_hi) continue;
        if (!(curve.values[i] > 0.0)) throw InvalidArgument("fit_localized_decay: non-positive QFI in window");
        x.push_back(h - h_max);
        y.push_back(curve.values[i]);
    }
    if (x.size() < 5)
        throw InvalidArgument("fit_localized_decay: need >= 5 grid points in window, got " + std::to_string(x.size()));
    return fit_power_law(x, y);
}

std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw InvalidArgument("log_grid: need 0 < lo <= hi and n >= 1");
    if (n == 1) return {lo};
    std::vector<double> g(n);
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> linear_grid(double lo, double hi, int n) {
    if (!(hi >= lo) || n < 1) throw InvalidArgument("linear_grid: need lo <= hi and n >= 1");
    if (n == 1) return {lo};
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    g.back() = hi;
    return g;
}

}  // namespace starkqfi
