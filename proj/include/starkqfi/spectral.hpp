#pragma once

#include <string>

#include <Eigen/Dense>

#include "starkqfi/model.hpp"

namespace starkqfi {

/// Ascending energies with orthonormal eigenvectors as columns. The largest
/// magnitude entry of each column is made positive.
struct EigenDecomposition {
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;

    Index dim() const { return energies.size(); }
    /// Energies closer than this are treated as degenerate.
    double degeneracy_tolerance() const;
};

EigenDecomposition eigendecompose(const Eigen::MatrixXd& H);
EigenDecomposition eigendecompose(const Tridiagonal& H);

/// Flip columns so the largest-magnitude component is positive (first one wins ties).
void fix_signs(Eigen::MatrixXd& vectors);

/// Pin the BLAS backend to one thread. Harness and tests call this once.
void use_single_threaded_blas();

struct StateSelector {
    enum class Kind { Ground, MidSpectrum, Index };
    Kind kind = Kind::Ground;
    Index k = 0;

    static StateSelector ground() { return {Kind::Ground, 0}; }
    static StateSelector mid_spectrum() { return {Kind::MidSpectrum, 0}; }
    static StateSelector index(Index k) { return {Kind::Index, k}; }

    /// Ground -> 0, MidSpectrum -> floor(dim/2), Index(k) -> k.
    Index resolve(Index dim) const;
    std::string label() const;
    static StateSelector parse(const std::string& text);
};

struct SelectedState {
    Index index;
    Eigen::VectorXd vector;
};

SelectedState select_state(const EigenDecomposition& decomp, const StateSelector& which);

struct GapResult {
    double value;
    bool degenerate;  ///< value < 1e-12 ||H||
};

GapResult energy_gap(const EigenDecomposition& decomp);

struct LanczosOptions {
    int krylov_dim = 100;
    int max_restarts = 400;
    double tolerance = 1e-11;  ///< residual relative to ||H||
};

/// Lowest `count` eigenpairs of a sparse symmetric matrix. Restarted Lanczos
/// with full reorthogonalisation; converged vectors are locked and deflated.
EigenDecomposition lowest_eigenpairs(const SparseMatrix& H, int count,
                                     const LanczosOptions& opts = {},
                                     const Eigen::VectorXd* start = nullptr);

}  // namespace starkqfi
