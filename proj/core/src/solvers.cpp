#include "homlab/solvers.hpp"

#include "homlab/errors.hpp"
#include "homlab/fft.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace homlab {

namespace {

constexpr double pi = 3.14159265358979323846;

// Exact solver for the separable constant-coefficient system via DST-I.
// The 1D Dirichlet Q1 stiffness and mass matrices share the sine
// eigenvectors, so (K - lambda M) diagonalizes into q^d independent m x m
// complex blocks.
class DstCore {
public:
    DstCore(const DiscreteDomain& dom, int m, std::vector<Eigen::MatrixXd> blocks, cplx lambda)
        : d_(dom.d), m_(m), lambda_(lambda), blocks_(std::move(blocks)) {
        long total = 1;
        for (int k = 0; k < d_; ++k) {
            q_[k] = dom.n[k] - 1;
            total *= q_[k];
        }
        n_modes_ = total;
        for (int k = 0; k < d_; ++k) {
            t_[k].resize(q_[k]);
            mm_[k].resize(q_[k]);
            const double h = dom.h(k);
            for (int j = 0; j < q_[k]; ++j) {
                const double th = pi * (j + 1) / dom.n[k];
                t_[k][j] = (2.0 - 2.0 * std::cos(th)) / h;
                mm_[k][j] = h * (2.0 + std::cos(th)) / 3.0;
            }
        }
        // FFTW is row-major with the last dimension fastest; our dof index
        // is x-fastest, so pass axis extents in reverse.
        dims_.resize(d_);
        for (int k = 0; k < d_; ++k) dims_[k] = q_[d_ - 1 - k];
        norm_ = 1.0 / fft::dst1_norm(dims_);
    }

    Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const {
        const long n = n_modes_;
        std::vector<std::vector<double>> re(m_, std::vector<double>(n)), im(m_, std::vector<double>(n));
        for (int c = 0; c < m_; ++c)
            for (long p = 0; p < n; ++p) {
                re[c][p] = rhs[p * m_ + c].real();
                im[c][p] = rhs[p * m_ + c].imag();
            }
        for (int c = 0; c < m_; ++c) {
            fft::dst1(re[c].data(), dims_);
            fft::dst1(im[c].data(), dims_);
        }
        // per-mode block solves
        if (m_ == 1) {
            int kx[3];
            for (long p = 0; p < n; ++p) {
                decompose(p, kx);
                double stiff = 0.0, mass = 1.0;
                for (int k = 0; k < d_; ++k) mass *= mm_[k][kx[k]];
                for (int i = 0; i < d_; ++i) {
                    double s = blocks_[i](0, 0) * t_[i][kx[i]];
                    for (int l = 0; l < d_; ++l)
                        if (l != i) s *= mm_[l][kx[l]];
                    stiff += s;
                }
                const cplx diag = stiff - lambda_ * mass;
                const cplx v = cplx(re[0][p], im[0][p]) / diag;
                re[0][p] = v.real();
                im[0][p] = v.imag();
            }
        } else {
            Eigen::MatrixXcd S(m_, m_);
            Eigen::VectorXcd v(m_);
            int kx[3];
            for (long p = 0; p < n; ++p) {
                decompose(p, kx);
                double mass = 1.0;
                for (int k = 0; k < d_; ++k) mass *= mm_[k][kx[k]];
                S.setZero();
                for (int i = 0; i < d_; ++i) {
                    double s = t_[i][kx[i]];
                    for (int l = 0; l < d_; ++l)
                        if (l != i) s *= mm_[l][kx[l]];
                    S += s * blocks_[i];
                }
                S -= lambda_ * mass * Eigen::MatrixXcd::Identity(m_, m_);
                for (int c = 0; c < m_; ++c) v[c] = cplx(re[c][p], im[c][p]);
                v = S.partialPivLu().solve(v);
                for (int c = 0; c < m_; ++c) {
                    re[c][p] = v[c].real();
                    im[c][p] = v[c].imag();
                }
            }
        }
        for (int c = 0; c < m_; ++c) {
            fft::dst1(re[c].data(), dims_);
            fft::dst1(im[c].data(), dims_);
        }
        Eigen::VectorXcd out(rhs.size());
        for (int c = 0; c < m_; ++c)
            for (long p = 0; p < n; ++p)
                out[p * m_ + c] = cplx(re[c][p] * norm_, im[c][p] * norm_);
        return out;
    }

private:
    void decompose(long p, int* kx) const {
        for (int k = 0; k < d_; ++k) {
            kx[k] = static_cast<int>(p % q_[k]);
            p /= q_[k];
        }
    }

    int d_, m_;
    cplx lambda_;
    std::vector<Eigen::MatrixXd> blocks_;
    int q_[3] = {1, 1, 1};
    long n_modes_ = 0;
    std::vector<double> t_[3], mm_[3];
    std::vector<int> dims_;
    double norm_ = 1.0;
};

// Preconditioned BiCGSTAB for the complex-symmetric shifted system.
template <class Precond>
Eigen::VectorXcd bicgstab(const ShiftedOperator& A, const Eigen::VectorXcd& b,
                          const Precond& prec, double tol, int max_iter, SolveInfo* info) {
    const long n = b.size();
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        if (info) info->rel_residual = 0.0;
        return x;
    }
    Eigen::VectorXcd r = b, rhat = b;
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n), p = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd phat(n), shat(n), t(n), s(n);
    cplx rho(1.0, 0.0), alpha(1.0, 0.0), omega(1.0, 0.0);
    std::vector<double> history;
    for (int it = 1; it <= max_iter; ++it) {
        const cplx rho1 = rhat.dot(r);
        if (std::abs(rho1) < 1e-300) {  // breakdown: restart shadow residual
            rhat = r;
            rho = alpha = omega = cplx(1.0, 0.0);
            v.setZero();
            p.setZero();
            continue;
        }
        const cplx beta = (rho1 / rho) * (alpha / omega);
        p = r + beta * (p - omega * v);
        phat = prec(p);
        A.apply(phat, v);
        alpha = rho1 / rhat.dot(v);
        s = r - alpha * v;
        if (s.norm() / bnorm <= tol) {
            x += alpha * phat;
            history.push_back(s.norm() / bnorm);
            break;
        }
        shat = prec(s);
        A.apply(shat, t);
        omega = t.dot(s) / t.dot(t);
        x += alpha * phat + omega * shat;
        r = s - omega * t;
        rho = rho1;
        const double rel = r.norm() / bnorm;
        history.push_back(rel);
        if (rel <= tol) break;
        if (it == max_iter)
            throw SolverFailure("BiCGSTAB did not converge within " + std::to_string(max_iter) +
                                    " iterations (residual " + std::to_string(rel) + ")",
                                history);
    }
    // true residual check
    Eigen::VectorXcd Ax(n);
    A.apply(x, Ax);
    const double true_rel = (b - Ax).norm() / bnorm;
    if (true_rel > 50.0 * tol)
        throw SolverFailure("BiCGSTAB converged in recurrence only (true residual " +
                                std::to_string(true_rel) + ")",
                            history);
    if (info) {
        info->rel_residual = true_rel;
        info->iterations = static_cast<int>(history.size());
    }
    return x;
}

} // namespace

struct DirichletSolver::Impl {
    std::shared_ptr<const DiscreteOperator> parts;
    SpectralParameter lambda;
    SolverOptions opts;
    std::string strategy;

    std::unique_ptr<DstCore> dst;         // direct or preconditioner
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<cplx>>> lu;
    Eigen::SparseMatrix<cplx> lu_matrix;  // keeps the factorized matrix alive
    ShiftedOperator shifted;
};

DirichletSolver::DirichletSolver(std::shared_ptr<const DiscreteOperator> parts,
                                 SpectralParameter lambda, SolverOptions opts)
    : impl_(std::make_unique<Impl>()) {
    impl_->parts = parts;
    impl_->lambda = lambda;
    impl_->opts = opts;
    impl_->shifted = ShiftedOperator{parts, lambda};

    using Mode = SolverOptions::Mode;
    Mode mode = opts.mode;
    if (mode == Mode::automatic) {
        if (parts->separable_constant)
            mode = Mode::dst_direct;
        else if (parts->domain->d == 2 && parts->n_interior_dof() <= opts.direct_threshold)
            mode = Mode::sparse_lu;
        else
            mode = Mode::krylov;
    }
    switch (mode) {
        case Mode::dst_direct: {
            if (!parts->separable_constant)
                throw ConfigError("DirichletSolver: dst_direct needs separable constant coefficients");
            impl_->dst = std::make_unique<DstCore>(*parts->domain, parts->m, parts->const_blocks,
                                                   lambda.value);
            impl_->strategy = "dst_direct";
            break;
        }
        case Mode::sparse_lu: {
            impl_->lu_matrix = impl_->shifted.materialize();
            impl_->lu = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<cplx>>>();
            impl_->lu->compute(impl_->lu_matrix);
            if (impl_->lu->info() != Eigen::Success)
                throw SolverFailure("SparseLU factorization failed (lambda at a discrete "
                                    "eigenvalue is impossible in the closed sector; check inputs)",
                                    {});
            impl_->strategy = "sparse_lu";
            break;
        }
        case Mode::krylov: {
            impl_->dst =
                std::make_unique<DstCore>(*parts->domain, parts->m, parts->gbar, lambda.value);
            impl_->strategy = "krylov";
            break;
        }
        default:
            throw ConfigError("DirichletSolver: bad mode");
    }
}

DirichletSolver::~DirichletSolver() = default;
DirichletSolver::DirichletSolver(DirichletSolver&&) noexcept = default;

Eigen::VectorXcd DirichletSolver::solve(const Eigen::VectorXcd& rhs, SolveInfo* info) const {
    if (rhs.size() != impl_->parts->n_interior_dof())
        throw ConfigError("DirichletSolver: rhs has wrong size");
    if (impl_->strategy == "dst_direct") {
        Eigen::VectorXcd u = impl_->dst->solve(rhs);
        if (info) {
            Eigen::VectorXcd Au;
            impl_->shifted.apply(u, Au);
            const double bn = rhs.norm();
            info->rel_residual = bn == 0.0 ? 0.0 : (rhs - Au).norm() / bn;
            info->iterations = 1;
            info->strategy = impl_->strategy;
        }
        return u;
    }
    if (impl_->strategy == "sparse_lu") {
        Eigen::VectorXcd u = impl_->lu->solve(rhs);
        if (impl_->lu->info() != Eigen::Success)
            throw SolverFailure("SparseLU solve failed", {});
        if (info) {
            Eigen::VectorXcd Au;
            impl_->shifted.apply(u, Au);
            const double bn = rhs.norm();
            info->rel_residual = bn == 0.0 ? 0.0 : (rhs - Au).norm() / bn;
            info->iterations = 1;
            info->strategy = impl_->strategy;
        }
        return u;
    }
    SolveInfo local;
    Eigen::VectorXcd u = bicgstab(
        impl_->shifted, rhs, [this](const Eigen::VectorXcd& v) { return impl_->dst->solve(v); },
        impl_->opts.tol, impl_->opts.max_iter, &local);
    local.strategy = impl_->strategy;
    if (info) *info = local;
    return u;
}

const std::string& DirichletSolver::strategy() const { return impl_->strategy; }
const SpectralParameter& DirichletSolver::lambda() const { return impl_->lambda; }
const std::shared_ptr<const DiscreteOperator>& DirichletSolver::parts() const {
    return impl_->parts;
}

} // namespace homlab
