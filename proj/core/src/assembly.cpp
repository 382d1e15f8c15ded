#include "homlab/assembly.hpp"

#include "homlab/errors.hpp"
#include "q1_ref.hpp"

#include <cmath>

namespace homlab {

namespace {

inline double wrap01(double t) {
    double r = t - std::floor(t);
    return (r >= 1.0) ? 0.0 : r;
}

// Samples the coefficient tensor at a physical point x into `a`.
struct CoeffSampler {
    const Coefficients& coeffs;
    int d;
    void operator()(const double* x, Eigen::Ref<TensorValue> a) const {
        if (coeffs.is_oscillating()) {
            double y[3] = {0, 0, 0};
            for (int k = 0; k < d; ++k) y[k] = wrap01(x[k] / coeffs.epsilon);
            coeffs.field->sampler(y, a);
        } else {
            a = coeffs.constant_tensor;
        }
    }
};

} // namespace

Coefficients Coefficients::oscillating(const CoefficientField& f, double eps) {
    if (eps <= 0.0) throw ConfigError("Coefficients: epsilon must be > 0");
    Coefficients c;
    c.field = f;
    c.epsilon = eps;
    c.m = f.m;
    return c;
}

Coefficients Coefficients::homogenized(const Eigen::MatrixXd& tensor, int d, int m) {
    if (tensor.rows() != d * m || tensor.cols() != d * m)
        throw ConfigError("Coefficients: constant tensor must be (d*m) x (d*m)");
    Coefficients c;
    c.constant_tensor = tensor;
    c.m = m;
    return c;
}

std::shared_ptr<const DiscreteOperator> assemble_parts(
    std::shared_ptr<const DiscreteDomain> domain, const Coefficients& coeffs) {
    const int d = domain->d;
    const int m = coeffs.m;
    const detail::Q1Ref ref(d);

    if (coeffs.is_oscillating()) {
        if (coeffs.field->d != d)
            throw ConfigError("assemble_parts: field dimension does not match the domain");
        for (int k = 0; k < d; ++k)
            if (domain->h(k) > coeffs.epsilon / 16.0 * (1.0 + 1e-12))
                throw ConfigError(
                    "assemble_parts: resolution rule violated, need h <= eps/16 (axis " +
                    std::to_string(k) + ": h = " + std::to_string(domain->h(k)) +
                    ", eps/16 = " + std::to_string(coeffs.epsilon / 16.0) + ")");
    }

    auto op = std::make_shared<DiscreteOperator>();
    op->domain = domain;
    op->coeffs = coeffs;
    op->m = m;

    const long n_nodes = domain->num_nodes();
    op->interior_of_node.assign(n_nodes, -1);
    op->node_of_interior.clear();
    op->node_of_interior.reserve(domain->num_interior());
    for (long idx = 0; idx < n_nodes; ++idx) {
        if (!domain->is_boundary(idx)) {
            op->interior_of_node[idx] = static_cast<long>(op->node_of_interior.size());
            op->node_of_interior.push_back(idx);
        }
    }
    const long n_int = static_cast<long>(op->node_of_interior.size());

    std::vector<Eigen::Triplet<double>> kii, kib, mii, mib;
    kii.reserve(domain->num_elements() * ref.n_corners * ref.n_corners * m * m);
    mii.reserve(domain->num_elements() * ref.n_corners * ref.n_corners * m);

    op->gbar.assign(d, Eigen::MatrixXd::Zero(m, m));
    double vol = 1.0;
    for (int k = 0; k < d; ++k) vol *= domain->h(k);
    double domain_measure = 1.0;
    for (int k = 0; k < d; ++k) domain_measure *= domain->lengths[k];

    const CoeffSampler sample{coeffs, d};
    TensorValue a(d * m, d * m);
    double x[3];
    int ex[3] = {0, 0, 0};
    long nodes[8];
    long irow[8];

    // Local mass matrix is the same for every element on a uniform grid.
    const int nloc = ref.n_corners;
    std::vector<double> Mloc(nloc * nloc, 0.0);
    for (int q = 0; q < ref.n_quad; ++q)
        for (int ca = 0; ca < nloc; ++ca)
            for (int cb = 0; cb < nloc; ++cb)
                Mloc[ca * nloc + cb] += ref.qweight[q] * vol * ref.phi[q][ca] * ref.phi[q][cb];

    // Reference-gradient products with the mesh scaling folded in.
    // gg[q][ca][cb][i*d+k] = dphi_i(ca) dphi_k(cb) / (h_i h_k)
    std::vector<double> gg(static_cast<size_t>(ref.n_quad) * nloc * nloc * d * d);
    {
        size_t idx = 0;
        for (int q = 0; q < ref.n_quad; ++q)
            for (int ca = 0; ca < nloc; ++ca)
                for (int cb = 0; cb < nloc; ++cb)
                    for (int i = 0; i < d; ++i)
                        for (int k = 0; k < d; ++k)
                            gg[idx++] = ref.dphi[q][ca][i] * ref.dphi[q][cb][k] /
                                        (domain->h(i) * domain->h(k));
    }

    std::vector<double> Kloc(static_cast<size_t>(nloc) * nloc * m * m);
    const long n_elems = domain->num_elements();
    for (long e = 0; e < n_elems; ++e) {
        long rest = e;
        for (int k = 0; k < d; ++k) {
            ex[k] = static_cast<int>(rest % domain->n[k]);
            rest /= domain->n[k];
        }
        for (int c = 0; c < nloc; ++c) {
            int jx[3];
            for (int k = 0; k < d; ++k) jx[k] = ex[k] + ref.corner[c][k];
            nodes[c] = domain->node(jx);
            irow[c] = op->interior_of_node[nodes[c]];
        }
        std::fill(Kloc.begin(), Kloc.end(), 0.0);
        for (int q = 0; q < ref.n_quad; ++q) {
            for (int k = 0; k < d; ++k) x[k] = (ex[k] + ref.qpoint[q][k]) * domain->h(k);
            sample(x, a);
            const double w = ref.qweight[q] * vol;
            for (int i = 0; i < d; ++i)
                op->gbar[i] += (w / domain_measure) * a.block(i * m, i * m, m, m);
            const double* ggq = gg.data() + static_cast<size_t>(q) * nloc * nloc * d * d;
            for (int ca = 0; ca < nloc; ++ca)
                for (int cb = 0; cb < nloc; ++cb) {
                    const double* gpair = ggq + (static_cast<size_t>(ca) * nloc + cb) * d * d;
                    double* kdst = Kloc.data() + (static_cast<size_t>(ca) * nloc + cb) * m * m;
                    for (int al = 0; al < m; ++al)
                        for (int ga = 0; ga < m; ++ga) {
                            double acc = 0.0;
                            for (int i = 0; i < d; ++i)
                                for (int k = 0; k < d; ++k)
                                    acc += a(i * m + al, k * m + ga) * gpair[i * d + k];
                            kdst[al * m + ga] += w * acc;
                        }
                }
        }
        for (int ca = 0; ca < nloc; ++ca) {
            if (irow[ca] < 0) continue;
            for (int cb = 0; cb < nloc; ++cb) {
                const bool col_interior = irow[cb] >= 0;
                const double* ksrc = Kloc.data() + (static_cast<size_t>(ca) * nloc + cb) * m * m;
                for (int al = 0; al < m; ++al)
                    for (int ga = 0; ga < m; ++ga) {
                        const double kv = ksrc[al * m + ga];
                        if (kv != 0.0) {
                            if (col_interior)
                                kii.emplace_back(irow[ca] * m + al, irow[cb] * m + ga, kv);
                            else
                                kib.emplace_back(irow[ca] * m + al, nodes[cb] * m + ga, kv);
                        }
                    }
                const double mv = Mloc[ca * nloc + cb];
                for (int al = 0; al < m; ++al) {
                    if (col_interior)
                        mii.emplace_back(irow[ca] * m + al, irow[cb] * m + al, mv);
                    else
                        mib.emplace_back(irow[ca] * m + al, nodes[cb] * m + al, mv);
                }
            }
        }
    }

    op->K_ii.resize(n_int * m, n_int * m);
    op->K_ii.setFromTriplets(kii.begin(), kii.end());
    op->M_ii.resize(n_int * m, n_int * m);
    op->M_ii.setFromTriplets(mii.begin(), mii.end());
    op->K_ib.resize(n_int * m, n_nodes * m);
    op->K_ib.setFromTriplets(kib.begin(), kib.end());
    op->M_ib.resize(n_int * m, n_nodes * m);
    op->M_ib.setFromTriplets(mib.begin(), mib.end());

    if (!coeffs.is_oscillating()) {
        const auto& t = coeffs.constant_tensor;
        double off = 0.0, scale = t.cwiseAbs().maxCoeff();
        op->const_blocks.assign(d, Eigen::MatrixXd::Zero(m, m));
        for (int i = 0; i < d; ++i) {
            op->const_blocks[i] = t.block(i * m, i * m, m, m);
            for (int j = 0; j < d; ++j)
                if (i != j) off = std::max(off, t.block(i * m, j * m, m, m).cwiseAbs().maxCoeff());
        }
        op->separable_constant = off <= 1e-13 * std::max(scale, 1.0);
    }
    return op;
}

void ShiftedOperator::apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    const auto& K = parts->K_ii;
    const auto& M = parts->M_ii;
    const cplx lam = lambda.value;
    y.resize(x.size());
    const auto* kv = K.valuePtr();
    const auto* ki = K.innerIndexPtr();
    const auto* ko = K.outerIndexPtr();
    const auto* mv = M.valuePtr();
    const auto* mi = M.innerIndexPtr();
    const auto* mo = M.outerIndexPtr();
    const long rows = K.rows();
    for (long r = 0; r < rows; ++r) {
        cplx acc(0.0, 0.0);
        for (auto p = ko[r]; p < ko[r + 1]; ++p) acc += kv[p] * x[ki[p]];
        cplx macc(0.0, 0.0);
        for (auto p = mo[r]; p < mo[r + 1]; ++p) macc += mv[p] * x[mi[p]];
        y[r] = acc - lam * macc;
    }
}

Eigen::SparseMatrix<cplx> ShiftedOperator::materialize() const {
    Eigen::SparseMatrix<cplx> S =
        parts->K_ii.cast<cplx>() - lambda.value * parts->M_ii.cast<cplx>();
    S.makeCompressed();
    return S;
}

ShiftedOperator assemble_operator(std::shared_ptr<const DiscreteDomain> domain,
                                  const Coefficients& coeffs, const SpectralParameter& lambda) {
    ShiftedOperator s;
    s.parts = assemble_parts(std::move(domain), coeffs);
    s.lambda = lambda;
    return s;
}

Eigen::VectorXcd load_from_nodal(const DiscreteOperator& op, const Eigen::VectorXcd& F_full) {
    if (F_full.size() != op.domain->num_nodes() * op.m)
        throw ConfigError("load_from_nodal: size mismatch");
    Eigen::VectorXcd load = Eigen::VectorXcd::Zero(op.n_interior_dof());
    // interior columns
    Eigen::VectorXcd F_int(op.n_interior_dof());
    for (size_t i = 0; i < op.node_of_interior.size(); ++i)
        for (int c = 0; c < op.m; ++c)
            F_int[static_cast<long>(i) * op.m + c] = F_full[op.node_of_interior[i] * op.m + c];
    load = op.M_ii.cast<cplx>() * F_int + op.M_ib.cast<cplx>() * F_full;
    return load;
}

namespace {

template <class PointFn>
Eigen::VectorXcd quad_load(const DiscreteOperator& op, PointFn&& fn, bool flux) {
    const DiscreteDomain& dom = *op.domain;
    const detail::Q1Ref ref(dom.d);
    const int d = dom.d, m = op.m;
    Eigen::VectorXcd load = Eigen::VectorXcd::Zero(op.n_interior_dof());
    double vol = 1.0;
    for (int k = 0; k < d; ++k) vol *= dom.h(k);
    std::vector<cplx> val(flux ? d * m : m);
    int ex[3] = {0, 0, 0};
    long nodes[8], irow[8];
    double x[3];
    const long n_elems = dom.num_elements();
    for (long e = 0; e < n_elems; ++e) {
        long rest = e;
        for (int k = 0; k < d; ++k) {
            ex[k] = static_cast<int>(rest % dom.n[k]);
            rest /= dom.n[k];
        }
        for (int c = 0; c < ref.n_corners; ++c) {
            int jx[3];
            for (int k = 0; k < d; ++k) jx[k] = ex[k] + ref.corner[c][k];
            nodes[c] = dom.node(jx);
            irow[c] = op.interior_of_node[nodes[c]];
        }
        for (int q = 0; q < ref.n_quad; ++q) {
            for (int k = 0; k < d; ++k) x[k] = (ex[k] + ref.qpoint[q][k]) * dom.h(k);
            fn(x, val.data());
            const double w = ref.qweight[q] * vol;
            for (int ca = 0; ca < ref.n_corners; ++ca) {
                if (irow[ca] < 0) continue;
                for (int al = 0; al < m; ++al) {
                    if (!flux) {
                        load[irow[ca] * m + al] += w * ref.phi[q][ca] * val[al];
                    } else {
                        cplx acc(0.0, 0.0);
                        for (int i = 0; i < d; ++i)
                            acc += val[i * m + al] * ref.dphi[q][ca][i] / dom.h(i);
                        load[irow[ca] * m + al] -= w * acc;
                    }
                }
            }
        }
    }
    return load;
}

} // namespace

Eigen::VectorXcd load_from_function(const DiscreteOperator& op,
                                    const std::function<void(const double*, cplx*)>& F) {
    return quad_load(op, F, false);
}

Eigen::VectorXcd load_from_flux_function(const DiscreteOperator& op,
                                         const std::function<void(const double*, cplx*)>& f) {
    return quad_load(op, f, true);
}

void apply_boundary_lifting(const DiscreteOperator& op, const SpectralParameter& lambda,
                            const Eigen::VectorXcd& g_full, Eigen::VectorXcd& rhs) {
    rhs -= op.K_ib.cast<cplx>() * g_full;
    rhs += lambda.value * (op.M_ib.cast<cplx>() * g_full);
}

GridField scatter_to_field(const DiscreteOperator& op, const Eigen::VectorXcd& u_interior,
                           const Eigen::VectorXcd* g_full) {
    GridField f = GridField::zero(op.domain, op.m);
    if (g_full) f.values = *g_full;
    for (size_t i = 0; i < op.node_of_interior.size(); ++i) {
        const long node = op.node_of_interior[i];
        for (int c = 0; c < op.m; ++c)
            f.values[node * op.m + c] = u_interior[static_cast<long>(i) * op.m + c];
    }
    if (op.coeffs.is_oscillating()) f.oscillating_epsilon = op.coeffs.epsilon;
    return f;
}

cplx bilinear_form(const DiscreteDomain& dom, const Coefficients& coeffs,
                   const SpectralParameter& lambda, const GridField& u, const GridField& v) {
    if (!u.domain->same_grid(dom) || !v.domain->same_grid(dom))
        throw ConfigError("bilinear_form: field/domain mismatch");
    const detail::Q1Ref ref(dom.d);
    const int d = dom.d, m = coeffs.m;
    const CoeffSampler sample{coeffs, d};
    TensorValue a(d * m, d * m);
    double vol = 1.0;
    for (int k = 0; k < d; ++k) vol *= dom.h(k);
    cplx acc(0.0, 0.0);
    int ex[3] = {0, 0, 0};
    long nodes[8];
    double x[3];
    std::vector<cplx> gu(d * m), gv(d * m), uu(m), vv(m);
    const long n_elems = dom.num_elements();
    for (long e = 0; e < n_elems; ++e) {
        long rest = e;
        for (int k = 0; k < d; ++k) {
            ex[k] = static_cast<int>(rest % dom.n[k]);
            rest /= dom.n[k];
        }
        for (int c = 0; c < ref.n_corners; ++c) {
            int jx[3];
            for (int k = 0; k < d; ++k) jx[k] = ex[k] + ref.corner[c][k];
            nodes[c] = dom.node(jx);
        }
        for (int q = 0; q < ref.n_quad; ++q) {
            for (int k = 0; k < d; ++k) x[k] = (ex[k] + ref.qpoint[q][k]) * dom.h(k);
            sample(x, a);
            std::fill(gu.begin(), gu.end(), cplx(0, 0));
            std::fill(gv.begin(), gv.end(), cplx(0, 0));
            std::fill(uu.begin(), uu.end(), cplx(0, 0));
            std::fill(vv.begin(), vv.end(), cplx(0, 0));
            for (int cn = 0; cn < ref.n_corners; ++cn)
                for (int al = 0; al < m; ++al) {
                    const cplx uval = u.values[nodes[cn] * m + al];
                    const cplx vval = v.values[nodes[cn] * m + al];
                    uu[al] += ref.phi[q][cn] * uval;
                    vv[al] += ref.phi[q][cn] * vval;
                    for (int i = 0; i < d; ++i) {
                        gu[i * m + al] += ref.dphi[q][cn][i] / dom.h(i) * uval;
                        gv[i * m + al] += ref.dphi[q][cn][i] / dom.h(i) * vval;
                    }
                }
            const double w = ref.qweight[q] * vol;
            cplx term(0.0, 0.0);
            for (int i = 0; i < d; ++i)
                for (int al = 0; al < m; ++al)
                    for (int k = 0; k < d; ++k)
                        for (int ga = 0; ga < m; ++ga)
                            term += a(i * m + al, k * m + ga) * gu[k * m + ga] *
                                    std::conj(gv[i * m + al]);
            cplx mass(0.0, 0.0);
            for (int al = 0; al < m; ++al) mass += uu[al] * std::conj(vv[al]);
            acc += w * (term - lambda.value * mass);
        }
    }
    return acc;
}

} // namespace homlab
