#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace starkqfi {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class ProfileKind { Exponential, PowerLaw };

/// Site potential V_j, j = 1..L: e^{a j} or j^gamma.
struct PotentialProfile {
    ProfileKind kind = ProfileKind::Exponential;
    double parameter = 0.0;  ///< a for Exponential, gamma for PowerLaw

    static PotentialProfile exponential(double a);
    static PotentialProfile power_law(double gamma);
    void validate() const;
};

enum class ProbeClass { SingleParticle, ManyBody };

/// Problem definition shared by every module. J = hbar = 1 units.
struct ProbeSpec {
    ProbeClass probe = ProbeClass::SingleParticle;
    int L = 2;
    double J = 1.0;
    double h = 0.0;
    PotentialProfile profile;

    static ProbeSpec single_particle(int L, double a, double h = 0.0);
    static ProbeSpec many_body(int L, double a, double h = 0.0);

    ProbeSpec with_field(double field) const;
    void validate() const;
};

Eigen::VectorXd potential_values(const PotentialProfile& profile, int L);

struct Tridiagonal {
    Eigen::VectorXd diagonal;
    Eigen::VectorXd off_diagonal;  ///< size n-1

    Index size() const { return diagonal.size(); }
    Eigen::MatrixXd dense() const;
};

/// Tight-binding chain, open ends: diagonal h V_j, hopping -J.
Tridiagonal build_sp_hamiltonian(const ProbeSpec& spec);

/// Zero-magnetisation sector of L spins-1/2. Site j lives in bit j-1,
/// bit set = up. States are kept in ascending integer order.
class SectorBasis {
public:
    explicit SectorBasis(int L);

    int L() const noexcept { return L_; }
    int n_up() const noexcept { return L_ / 2; }
    Index size() const noexcept { return static_cast<Index>(states_.size()); }
    std::uint64_t state(Index i) const { return states_.at(static_cast<std::size_t>(i)); }
    const std::vector<std::uint64_t>& states() const noexcept { return states_; }

    /// Ordinal of a pattern (combinadic rank). Throws if outside the sector.
    Index index(std::uint64_t pattern) const;

private:
    int L_;
    std::vector<std::uint64_t> states_;
    std::vector<std::vector<std::uint64_t>> binom_;
};

std::uint64_t binomial(int n, int k);

/// Diagonal of H_0 (the operator multiplying h). basis needed for ManyBody.
Eigen::VectorXd build_field_generator(const ProbeSpec& spec, const SectorBasis* basis = nullptr);

/// Heisenberg chain plus graded field, dense, restricted to the sector.
Eigen::MatrixXd build_mb_hamiltonian(const ProbeSpec& spec, const SectorBasis& basis);

/// Same operator in compressed row storage.
SparseMatrix build_mb_sparse(const ProbeSpec& spec, const SectorBasis& basis);

}  // namespace starkqfi
