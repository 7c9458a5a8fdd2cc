#include "starkqfi/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <lapacke.h>

#include "starkqfi/errors.hpp"

extern "C" void openblas_set_num_threads(int);

namespace starkqfi {

double EigenDecomposition::degeneracy_tolerance() const {
    const double emax = energies.size() ? energies.cwiseAbs().maxCoeff() : 0.0;
    return 1e-12 * (emax + 1.0);
}

void use_single_threaded_blas() {
    static std::once_flag once;
    std::call_once(once, [] { openblas_set_num_threads(1); });
}

void fix_signs(Eigen::MatrixXd& vectors) {
    for (Index c = 0; c < vectors.cols(); ++c) {
        Index imax = 0;
        double best = -1.0;
        for (Index r = 0; r < vectors.rows(); ++r) {
            const double v = std::abs(vectors(r, c));
            if (v > best * (1.0 + 1e-12)) {
                best = v;
                imax = r;
            }
        }
        if (vectors(imax, c) < 0.0) vectors.col(c) *= -1.0;
    }
}

EigenDecomposition eigendecompose(const Eigen::MatrixXd& H) {
    if (H.rows() != H.cols() || H.rows() == 0) throw InvalidArgument("eigendecompose: need a non-empty square matrix");
    if (!H.allFinite()) throw InvalidArgument("eigendecompose: non-finite entries");
    const double scale = H.cwiseAbs().maxCoeff();
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-13 * std::max(scale, 1e-300))
        throw InvalidArgument("eigendecompose: matrix is not symmetric");

    EigenDecomposition d;
    d.vectors = H;
    d.energies.resize(H.rows());
    const lapack_int n = static_cast<lapack_int>(H.rows());
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, d.vectors.data(), n, d.energies.data());
    if (info > 0) throw ConvergenceError("dsyevd failed to converge", static_cast<int>(info));
    if (info < 0) throw InvalidArgument("dsyevd: bad argument " + std::to_string(-info));
    fix_signs(d.vectors);
    return d;
}

EigenDecomposition eigendecompose(const Tridiagonal& H) {
    const Index n = H.size();
    if (n == 0 || H.off_diagonal.size() != std::max<Index>(n - 1, 0))
        throw InvalidArgument("eigendecompose: malformed tridiagonal matrix");
    if (!H.diagonal.allFinite() || !H.off_diagonal.allFinite())
        throw InvalidArgument("eigendecompose: non-finite entries");
    EigenDecomposition d;
    d.energies = H.diagonal;
    Eigen::VectorXd e(std::max<Index>(n, 1));
    if (n > 1) e.head(n - 1) = H.off_diagonal;
    d.vectors.resize(n, n);
    const lapack_int info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', static_cast<lapack_int>(n), d.energies.data(),
                                           e.data(), d.vectors.data(), static_cast<lapack_int>(n));
    if (info > 0) throw ConvergenceError("dstevd failed to converge", static_cast<int>(info));
    if (info < 0) throw InvalidArgument("dstevd: bad argument " + std::to_string(-info));
    fix_signs(d.vectors);
    return d;
}

Index StateSelector::resolve(Index dim) const {
    if (dim <= 0) throw InvalidArgument("select_state: empty decomposition");
    switch (kind) {
        case Kind::Ground: return 0;
        case Kind::MidSpectrum: return dim / 2;
        case Kind::Index:
            if (k < 0 || k >= dim)
                throw InvalidArgument("select_state: index " + std::to_string(k) + " out of range for dim " +
                                      std::to_string(dim));
            return k;
    }
    return 0;
}

std::string StateSelector::label() const {
    switch (kind) {
        case Kind::Ground: return "ground";
        case Kind::MidSpectrum: return "mid";
        case Kind::Index: return "index:" + std::to_string(k);
    }
    return "?";
}

StateSelector StateSelector::parse(const std::string& text) {
    if (text == "ground" || text == "gs") return ground();
    if (text == "mid" || text == "mid-spectrum" || text == "ms") return mid_spectrum();
    if (text.rfind("index:", 0) == 0) {
        try {
            return index(std::stol(text.substr(6)));
        } catch (const std::exception&) {
        }
    }
    throw InvalidArgument("unknown state selector '" + text + "' (ground | mid | index:k)");
}

SelectedState select_state(const EigenDecomposition& decomp, const StateSelector& which) {
    const Index i = which.resolve(decomp.dim());
    return {i, decomp.vectors.col(i)};
}

GapResult energy_gap(const EigenDecomposition& decomp) {
    if (decomp.dim() < 2) throw InvalidArgument("energy_gap: need at least two levels");
    const double gap = decomp.energies(1) - decomp.energies(0);
    const double norm = decomp.energies.cwiseAbs().maxCoeff();
    return {gap, gap < 1e-12 * norm};
}

namespace {

// Project x out of the span of the columns of Q (first `cols`), twice.
void orthogonalize(Eigen::VectorXd& x, const Eigen::MatrixXd& Q, Index cols) {
    if (cols == 0) return;
    for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd c = Q.leftCols(cols).transpose() * x;
        x.noalias() -= Q.leftCols(cols) * c;
    }
}

}  // namespace

EigenDecomposition lowest_eigenpairs(const SparseMatrix& H, int count, const LanczosOptions& opts,
                                     const Eigen::VectorXd* start) {
    const Index n = H.rows();
    if (H.cols() != n || n == 0) throw InvalidArgument("lowest_eigenpairs: need a square matrix");
    if (count < 1 || count > n) throw InvalidArgument("lowest_eigenpairs: bad count");
    const int m = static_cast<int>(std::min<Index>(opts.krylov_dim, n));

    double hnorm = 0.0;  // infinity norm bounds the spectral norm
    for (Index r = 0; r < n; ++r) hnorm = std::max(hnorm, H.row(r).cwiseAbs().sum());
    hnorm = std::max(hnorm, 1e-300);

    Eigen::MatrixXd locked(n, count);
    Eigen::VectorXd locked_e(count);
    Index nlocked = 0;

    Eigen::VectorXd v;
    if (start != nullptr && start->size() == n && start->norm() > 0) {
        v = *start;
    } else {
        // Deterministic, generic start vector.
        v.resize(n);
        for (Index i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * std::sin(0.7 * double(i) + 0.3);
    }

    Eigen::MatrixXd Q(n, m);
    Eigen::VectorXd alpha(m), beta(m);
    int restarts = 0;
    while (nlocked < count) {
        if (nlocked > 0) orthogonalize(v, locked, nlocked);
        double nv = v.norm();
        if (nv < 1e-300) {
            v = Eigen::VectorXd::Unit(n, (restarts * 7919) % n);
            orthogonalize(v, locked, nlocked);
            nv = v.norm();
        }
        Q.col(0) = v / nv;
        int k = 0;
        for (; k < m; ++k) {
            Eigen::VectorXd w = H * Q.col(k);
            alpha(k) = Q.col(k).dot(w);
            orthogonalize(w, Q, k + 1);
            if (nlocked > 0) orthogonalize(w, locked, nlocked);
            beta(k) = w.norm();
            if (k + 1 < m) {
                if (beta(k) <= 1e-14 * hnorm) {
                    ++k;
                    break;  // invariant subspace
                }
                Q.col(k + 1) = w / beta(k);
            }
        }
        const int size = k;
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(size, size);
        for (int i = 0; i < size; ++i) {
            T(i, i) = alpha(i);
            if (i + 1 < size) T(i, i + 1) = T(i + 1, i) = beta(i);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(T);
        const Eigen::VectorXd s = small.eigenvectors().col(0);
        Eigen::VectorXd y = Q.leftCols(size) * s;
        y.normalize();
        const double theta = small.eigenvalues()(0);
        const double resid = (H * y - theta * y).norm();
        if (resid <= opts.tolerance * hnorm || size < m) {
            locked.col(nlocked) = y;
            locked_e(nlocked) = theta;
            ++nlocked;
            // Next start: the second Ritz vector is a good guess for the next level.
            if (size > 1) v = Q.leftCols(size) * small.eigenvectors().col(1);
            else v = Eigen::VectorXd::Unit(n, (nlocked * 7919) % n);
            continue;
        }
        if (++restarts > opts.max_restarts)
            throw ConvergenceError("Lanczos did not reach residual " + std::to_string(opts.tolerance) + "*||H||",
                                   opts.max_restarts);
        v = y;
    }

    // Order by energy (deflation may lock slightly out of order) and sign-fix.
    std::vector<Index> order(count);
    for (int i = 0; i < count; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return locked_e(a) < locked_e(b); });
    EigenDecomposition d;
    d.energies.resize(count);
    d.vectors.resize(n, count);
    for (int i = 0; i < count; ++i) {
        d.energies(i) = locked_e(order[i]);
        d.vectors.col(i) = locked.col(order[i]);
    }
    fix_signs(d.vectors);
    return d;
}

}  // namespace starkqfi
