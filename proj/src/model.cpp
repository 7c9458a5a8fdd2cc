#include "starkqfi/model.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "starkqfi/errors.hpp"

namespace starkqfi {

PotentialProfile PotentialProfile::exponential(double a) {
    PotentialProfile p{ProfileKind::Exponential, a};
    p.validate();
    return p;
}

PotentialProfile PotentialProfile::power_law(double gamma) {
    PotentialProfile p{ProfileKind::PowerLaw, gamma};
    p.validate();
    return p;
}

void PotentialProfile::validate() const {
    if (!std::isfinite(parameter))
        throw InvalidArgument("profile parameter must be finite");
    // a = 0 (flat chain) is accepted; it is the reference point of several checks.
    if (kind == ProfileKind::Exponential && parameter < 0.0)
        throw InvalidArgument("exponential rate a must be >= 0");
    if (kind == ProfileKind::PowerLaw && parameter <= 0.0)
        throw InvalidArgument("power-law exponent must be > 0");
}

ProbeSpec ProbeSpec::single_particle(int L, double a, double h) {
    ProbeSpec s{ProbeClass::SingleParticle, L, 1.0, h, PotentialProfile::exponential(a)};
    s.validate();
    return s;
}

ProbeSpec ProbeSpec::many_body(int L, double a, double h) {
    ProbeSpec s{ProbeClass::ManyBody, L, 1.0, h, PotentialProfile::exponential(a)};
    s.validate();
    return s;
}

ProbeSpec ProbeSpec::with_field(double field) const {
    ProbeSpec s = *this;
    s.h = field;
    return s;
}

void ProbeSpec::validate() const {
    if (L < 2) throw InvalidArgument("L must be >= 2, got " + std::to_string(L));
    if (!(J > 0.0) || !std::isfinite(J)) throw InvalidArgument("J must be positive");
    if (!std::isfinite(h)) throw InvalidArgument("h must be finite");
    profile.validate();
    if (probe == ProbeClass::ManyBody) {
        if (L % 2 != 0) throw InvalidArgument("many-body probe needs even L, got " + std::to_string(L));
        if (L > 60) throw InvalidArgument("many-body L too large for 64-bit patterns");
    }
}

Eigen::VectorXd potential_values(const PotentialProfile& profile, int L) {
    if (L < 1) throw InvalidArgument("potential_values: L must be >= 1");
    profile.validate();
    Eigen::VectorXd v(L);
    for (int j = 1; j <= L; ++j) {
        v(j - 1) = profile.kind == ProfileKind::Exponential ? std::exp(profile.parameter * j)
                                                            : std::pow(double(j), profile.parameter);
    }
    return v;
}

Eigen::MatrixXd Tridiagonal::dense() const {
    const Index n = size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m.diagonal() = diagonal;
    for (Index i = 0; i + 1 < n; ++i) {
        m(i, i + 1) = off_diagonal(i);
        m(i + 1, i) = off_diagonal(i);
    }
    return m;
}

Tridiagonal build_sp_hamiltonian(const ProbeSpec& spec) {
    spec.validate();
    if (spec.probe != ProbeClass::SingleParticle)
        throw InvalidArgument("build_sp_hamiltonian: needs a single-particle spec");
    Tridiagonal t;
    t.diagonal = spec.h * potential_values(spec.profile, spec.L);
    t.off_diagonal = Eigen::VectorXd::Constant(spec.L - 1, -spec.J);
    return t;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * std::uint64_t(n - k + i) / std::uint64_t(i);
    return r;
}

SectorBasis::SectorBasis(int L) : L_(L) {
    if (L < 2 || L % 2 != 0) throw InvalidArgument("SectorBasis: L must be even and >= 2");
    if (L > 60) throw InvalidArgument("SectorBasis: L too large");
    const int k = L / 2;
    binom_.assign(L + 1, std::vector<std::uint64_t>(k + 2, 0));
    for (int n = 0; n <= L; ++n)
        for (int r = 0; r <= k + 1; ++r) binom_[n][r] = binomial(n, r);

    states_.reserve(binomial(L, k));
    // Gosper's hack walks same-popcount integers in ascending order.
    std::uint64_t x = (std::uint64_t(1) << k) - 1;
    const std::uint64_t limit = std::uint64_t(1) << L;
    while (x < limit) {
        states_.push_back(x);
        const std::uint64_t c = x & (~x + 1);
        const std::uint64_t r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
}

Index SectorBasis::index(std::uint64_t pattern) const {
    if (std::popcount(pattern) != n_up() || (L_ < 64 && (pattern >> L_) != 0))
        throw InvalidArgument("pattern outside the zero-magnetisation sector");
    std::uint64_t rank = 0;
    int seen = 0;
    for (int p = 0; p < L_; ++p) {
        if (pattern >> p & 1U) rank += binom_[p][++seen];
    }
    return static_cast<Index>(rank);
}

namespace {

void check_mb(const ProbeSpec& spec, const SectorBasis& basis) {
    spec.validate();
    if (spec.probe != ProbeClass::ManyBody) throw InvalidArgument("needs a many-body spec");
    if (basis.L() != spec.L) throw InvalidArgument("basis size does not match spec.L");
}

inline int spin(std::uint64_t s, int bit) { return (s >> bit & 1U) ? 1 : -1; }

// -sum s_j s_{j+1} + h sum V_j s_j
Eigen::VectorXd mb_diagonal(const ProbeSpec& spec, const SectorBasis& basis) {
    const Eigen::VectorXd gen = build_field_generator(spec, &basis);
    Eigen::VectorXd d(basis.size());
    for (Index i = 0; i < basis.size(); ++i) {
        const std::uint64_t s = basis.state(i);
        int zz = 0;
        for (int b = 0; b + 1 < spec.L; ++b) zz += spin(s, b) * spin(s, b + 1);
        d(i) = -spec.J * zz + spec.h * gen(i);
    }
    return d;
}

template <class Emit>
void for_each_hop(const SectorBasis& basis, Emit&& emit) {
    for (Index i = 0; i < basis.size(); ++i) {
        const std::uint64_t s = basis.state(i);
        for (int b = 0; b + 1 < basis.L(); ++b) {
            const std::uint64_t pair = std::uint64_t(3) << b;
            const std::uint64_t bits = s & pair;
            if (bits == 0 || bits == pair) continue;
            emit(i, basis.index(s ^ pair));
        }
    }
}

}  // namespace

Eigen::VectorXd build_field_generator(const ProbeSpec& spec, const SectorBasis* basis) {
    spec.validate();
    const Eigen::VectorXd v = potential_values(spec.profile, spec.L);
    if (spec.probe == ProbeClass::SingleParticle) return v;
    if (basis == nullptr) throw InvalidArgument("many-body generator needs a sector basis");
    if (basis->L() != spec.L) throw InvalidArgument("basis size does not match spec.L");
    Eigen::VectorXd g(basis->size());
    for (Index i = 0; i < basis->size(); ++i) {
        const std::uint64_t s = basis->state(i);
        double acc = 0.0;
        for (int b = 0; b < spec.L; ++b) acc += spin(s, b) * v(b);
        g(i) = acc;
    }
    return g;
}

Eigen::MatrixXd build_mb_hamiltonian(const ProbeSpec& spec, const SectorBasis& basis) {
    check_mb(spec, basis);
    const Index n = basis.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m.diagonal() = mb_diagonal(spec, basis);
    for_each_hop(basis, [&](Index i, Index j) { m(i, j) = -2.0 * spec.J; });
    return m;
}

SparseMatrix build_mb_sparse(const ProbeSpec& spec, const SectorBasis& basis) {
    check_mb(spec, basis);
    const Index n = basis.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(spec.L / 2 + 2));
    const Eigen::VectorXd d = mb_diagonal(spec, basis);
    for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, d(i));
    for_each_hop(basis, [&](Index i, Index j) { trip.emplace_back(i, j, -2.0 * spec.J); });
    SparseMatrix m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

}  // namespace starkqfi
