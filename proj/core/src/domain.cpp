#include "homlab/domain.hpp"

#include "homlab/errors.hpp"
#include "q1_ref.hpp"

#include <cmath>

namespace homlab {

std::shared_ptr<const DiscreteDomain> DiscreteDomain::rectangle(int d,
                                                                std::array<double, 3> lengths,
                                                                std::array<int, 3> cells) {
    if (d < 2 || d > 3) throw ConfigError("DiscreteDomain: d must be 2 or 3");
    auto dom = std::make_shared<DiscreteDomain>();
    dom->d = d;
    dom->lengths = lengths;
    dom->n = cells;
    for (int k = 0; k < d; ++k) {
        if (cells[k] < 2) throw ConfigError("DiscreteDomain: need at least 2 cells per axis");
        if (lengths[k] <= 0.0) throw ConfigError("DiscreteDomain: lengths must be positive");
    }
    for (int k = d; k < 3; ++k) {
        dom->lengths[k] = 1.0;
        dom->n[k] = 0;
    }
    return dom;
}

double DiscreteDomain::h_max() const {
    double hm = 0.0;
    for (int k = 0; k < d; ++k) hm = std::max(hm, h(k));
    return hm;
}

long DiscreteDomain::num_nodes() const {
    long t = 1;
    for (int k = 0; k < d; ++k) t *= nodes_per_axis(k);
    return t;
}

long DiscreteDomain::num_elements() const {
    long t = 1;
    for (int k = 0; k < d; ++k) t *= n[k];
    return t;
}

long DiscreteDomain::num_interior() const {
    long t = 1;
    for (int k = 0; k < d; ++k) t *= (n[k] - 1);
    return t;
}

double DiscreteDomain::R0() const {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += lengths[k] * lengths[k];
    return std::sqrt(s);
}

long DiscreteDomain::node(const int* ix) const {
    long idx = 0;
    for (int k = d - 1; k >= 0; --k) idx = idx * nodes_per_axis(k) + ix[k];
    return idx;
}

void DiscreteDomain::node_coords(long idx, int* ix) const {
    for (int k = 0; k < d; ++k) {
        ix[k] = static_cast<int>(idx % nodes_per_axis(k));
        idx /= nodes_per_axis(k);
    }
}

void DiscreteDomain::node_position(long idx, double* x) const {
    int ix[3];
    node_coords(idx, ix);
    for (int k = 0; k < d; ++k) x[k] = ix[k] * h(k);
}

bool DiscreteDomain::is_boundary(const int* ix) const {
    for (int k = 0; k < d; ++k)
        if (ix[k] == 0 || ix[k] == n[k]) return true;
    return false;
}

bool DiscreteDomain::is_boundary(long idx) const {
    int ix[3];
    node_coords(idx, ix);
    return is_boundary(ix);
}

double DiscreteDomain::delta(const double* x) const {
    double dmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < d; ++k) dmin = std::min({dmin, x[k], lengths[k] - x[k]});
    return std::max(dmin, 0.0);
}

double DiscreteDomain::delta_node(long idx) const {
    double x[3];
    node_position(idx, x);
    return delta(x);
}

bool DiscreteDomain::same_grid(const DiscreteDomain& other) const {
    if (d != other.d) return false;
    for (int k = 0; k < d; ++k)
        if (n[k] != other.n[k] || lengths[k] != other.lengths[k]) return false;
    return true;
}

GridField GridField::zero(std::shared_ptr<const DiscreteDomain> domain, int m) {
    GridField f;
    f.m = m;
    f.values = Eigen::VectorXcd::Zero(domain->num_nodes() * m);
    f.domain = std::move(domain);
    return f;
}

double GridField::abs_at(long node) const {
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += std::norm(values[node * m + c]);
    return std::sqrt(s);
}

namespace {

// Iterates elements; cb(nodes[2^d], element volume).
template <class Cb>
void for_each_element(const DiscreteDomain& dom, const detail::Q1Ref& ref, Cb&& cb) {
    const int d = dom.d;
    long nodes[8];
    int ex[3] = {0, 0, 0};
    const long n_elems = dom.num_elements();
    double vol = 1.0;
    for (int k = 0; k < d; ++k) vol *= dom.h(k);
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
        cb(nodes, vol);
    }
}

double quad_lp_from_nodal(const DiscreteDomain& dom, int m, const Eigen::VectorXcd& vals,
                          double p) {
    const detail::Q1Ref ref(dom.d);
    double acc = 0.0;
    for_each_element(dom, ref, [&](const long* nodes, double vol) {
        for (int q = 0; q < ref.n_quad; ++q) {
            double a2 = 0.0;
            for (int c = 0; c < m; ++c) {
                cplx v(0.0, 0.0);
                for (int cn = 0; cn < ref.n_corners; ++cn)
                    v += ref.phi[q][cn] * vals[nodes[cn] * m + c];
                a2 += std::norm(v);
            }
            acc += ref.qweight[q] * vol * std::pow(a2, 0.5 * p);
        }
    });
    return std::pow(acc, 1.0 / p);
}

} // namespace

double lp_norm(const GridField& u, double p) {
    if (p <= 0.0) throw ConfigError("lp_norm: p must be positive");
    if (std::isinf(p)) return linf_norm(u);
    return quad_lp_from_nodal(*u.domain, u.m, u.values, p);
}

double linf_norm(const GridField& u) {
    double mx = 0.0;
    const long n = u.domain->num_nodes();
    for (long i = 0; i < n; ++i) mx = std::max(mx, u.abs_at(i));
    return mx;
}

double w1p_seminorm(const GridField& u, double p) {
    const DiscreteDomain& dom = *u.domain;
    const detail::Q1Ref ref(dom.d);
    const int d = dom.d, m = u.m;
    double acc = 0.0;
    for_each_element(dom, ref, [&](const long* nodes, double vol) {
        for (int q = 0; q < ref.n_quad; ++q) {
            double g2 = 0.0;
            for (int c = 0; c < m; ++c)
                for (int i = 0; i < d; ++i) {
                    cplx g(0.0, 0.0);
                    for (int cn = 0; cn < ref.n_corners; ++cn)
                        g += ref.dphi[q][cn][i] * u.values[nodes[cn] * m + c];
                    g /= dom.h(i);
                    g2 += std::norm(g);
                }
            acc += ref.qweight[q] * vol * std::pow(g2, 0.5 * p);
        }
    });
    return std::pow(acc, 1.0 / p);
}

double w1p_norm(const GridField& u, double p) {
    const double a = lp_norm(u, p), b = w1p_seminorm(u, p);
    return std::pow(std::pow(a, p) + std::pow(b, p), 1.0 / p);
}

double h2_seminorm(const GridField& u) {
    if (u.oscillating_epsilon > 0.0)
        throw ConfigError("h2_seminorm: refused for an oscillating solution (scale eps = " +
                          std::to_string(u.oscillating_epsilon) + ")");
    const DiscreteDomain& dom = *u.domain;
    const int d = dom.d, m = u.m;
    double vol = 1.0;
    for (int k = 0; k < d; ++k) vol *= dom.h(k);
    double acc = 0.0;
    const long n = dom.num_nodes();
    int ix[3];
    for (long idx = 0; idx < n; ++idx) {
        dom.node_coords(idx, ix);
        bool full_stencil = true;
        for (int k = 0; k < d; ++k)
            if (ix[k] == 0 || ix[k] == dom.n[k]) full_stencil = false;
        if (!full_stencil) continue;
        for (int c = 0; c < m; ++c) {
            auto val = [&](int dx, int dy, int dz) {
                int jx[3] = {ix[0] + dx, ix[1] + dy, ix[2] + dz};
                return u.values[dom.node(jx) * m + c];
            };
            const cplx u0 = val(0, 0, 0);
            for (int k = 0; k < d; ++k) {
                int e[3] = {0, 0, 0};
                e[k] = 1;
                const cplx dkk =
                    (val(e[0], e[1], e[2]) - 2.0 * u0 + val(-e[0], -e[1], -e[2])) /
                    (dom.h(k) * dom.h(k));
                acc += vol * std::norm(dkk);
            }
            for (int k = 0; k < d; ++k)
                for (int l = k + 1; l < d; ++l) {
                    int ek[3] = {0, 0, 0}, el[3] = {0, 0, 0};
                    ek[k] = 1;
                    el[l] = 1;
                    const cplx dkl = (val(ek[0] + el[0], ek[1] + el[1], ek[2] + el[2]) -
                                      val(ek[0] - el[0], ek[1] - el[1], ek[2] - el[2]) -
                                      val(el[0] - ek[0], el[1] - ek[1], el[2] - ek[2]) +
                                      val(-ek[0] - el[0], -ek[1] - el[1], -ek[2] - el[2])) /
                                     (4.0 * dom.h(k) * dom.h(l));
                    acc += 2.0 * vol * std::norm(dkl);
                }
        }
    }
    return std::sqrt(acc);
}

std::vector<Eigen::VectorXcd> recover_gradient(const GridField& u) {
    const DiscreteDomain& dom = *u.domain;
    const detail::Q1Ref ref(dom.d);
    const int d = dom.d, m = u.m;
    const long n = dom.num_nodes();
    std::vector<Eigen::VectorXcd> grad(d, Eigen::VectorXcd::Zero(n * m));
    Eigen::VectorXd weight = Eigen::VectorXd::Zero(n);
    for_each_element(dom, ref, [&](const long* nodes, double) {
        for (int c = 0; c < m; ++c)
            for (int i = 0; i < d; ++i) {
                cplx g(0.0, 0.0);
                for (int cn = 0; cn < ref.n_corners; ++cn)
                    g += ref.dphi_mean[cn][i] * u.values[nodes[cn] * m + c];
                g /= dom.h(i);
                for (int cn = 0; cn < ref.n_corners; ++cn) grad[i][nodes[cn] * m + c] += g;
            }
        for (int cn = 0; cn < ref.n_corners; ++cn) weight[nodes[cn]] += 1.0;
    });
    for (long idx = 0; idx < n; ++idx) {
        const double w = 1.0 / weight[idx];
        for (int c = 0; c < m; ++c)
            for (int i = 0; i < d; ++i) grad[i][idx * m + c] *= w;
    }
    return grad;
}

double lp_norm_of_gradient(const DiscreteDomain& dom, int m,
                           const std::vector<Eigen::VectorXcd>& grad, double p) {
    const detail::Q1Ref ref(dom.d);
    const int d = dom.d;
    double acc = 0.0;
    for_each_element(dom, ref, [&](const long* nodes, double vol) {
        for (int q = 0; q < ref.n_quad; ++q) {
            double g2 = 0.0;
            for (int c = 0; c < m; ++c)
                for (int i = 0; i < d; ++i) {
                    cplx g(0.0, 0.0);
                    for (int cn = 0; cn < ref.n_corners; ++cn)
                        g += ref.phi[q][cn] * grad[i][nodes[cn] * m + c];
                    g2 += std::norm(g);
                }
            acc += ref.qweight[q] * vol * std::pow(g2, 0.5 * p);
        }
    });
    return std::pow(acc, 1.0 / p);
}

double linf_norm_of_gradient(const DiscreteDomain& dom, int m,
                             const std::vector<Eigen::VectorXcd>& grad) {
    const long n = dom.num_nodes();
    const int d = dom.d;
    double mx = 0.0;
    for (long idx = 0; idx < n; ++idx) {
        double g2 = 0.0;
        for (int c = 0; c < m; ++c)
            for (int i = 0; i < d; ++i) g2 += std::norm(grad[i][idx * m + c]);
        mx = std::max(mx, std::sqrt(g2));
    }
    return mx;
}

cplx interpolate_nodal(const DiscreteDomain& dom, int m, const Eigen::VectorXcd& nodal,
                       const double* x, int comp) {
    const int d = dom.d;
    int ex[3] = {0, 0, 0};
    double xi[3] = {0, 0, 0};
    for (int k = 0; k < d; ++k) {
        double t = x[k] / dom.h(k);
        t = std::min(std::max(t, 0.0), static_cast<double>(dom.n[k]) - 1e-12);
        ex[k] = std::min(static_cast<int>(t), dom.n[k] - 1);
        xi[k] = t - ex[k];
    }
    cplx acc(0.0, 0.0);
    for (int c = 0; c < (1 << d); ++c) {
        double w = 1.0;
        int jx[3] = {0, 0, 0};
        for (int k = 0; k < d; ++k) {
            const int bit = (c >> k) & 1;
            w *= bit ? xi[k] : 1.0 - xi[k];
            jx[k] = ex[k] + bit;
        }
        acc += w * nodal[dom.node(jx) * m + comp];
    }
    return acc;
}

cplx interpolate(const GridField& u, const double* x, int comp) {
    return interpolate_nodal(*u.domain, u.m, u.values, x, comp);
}

std::map<std::string, double> norm_table(const GridField& u,
                                         const std::vector<std::string>& which) {
    std::map<std::string, double> out;
    for (const auto& token : which) {
        if (token == "linf") {
            out[token] = linf_norm(u);
        } else if (token == "h2") {
            out[token] = h2_seminorm(u);
        } else if (token.rfind("w1p:", 0) == 0) {
            out[token] = w1p_norm(u, std::stod(token.substr(4)));
        } else if (token.rfind("l", 0) == 0) {
            out[token] = lp_norm(u, std::stod(token.substr(1)));
        } else {
            throw ConfigError("norm_table: unknown norm token '" + token + "'");
        }
    }
    return out;
}

} // namespace homlab
