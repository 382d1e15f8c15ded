#include "homlab/tensor_field.hpp"
#include "homlab/errors.hpp"

#include <cmath>
#include <random>

namespace homlab {

namespace {

inline double wrap01(double t) {
    double r = t - std::floor(t);
    return (r >= 1.0) ? 0.0 : r;  // guard std::floor rounding at exact integers
}

constexpr double two_pi = 6.28318530717958647692;

} // namespace

TensorValue CoefficientField::sample(const double* y) const {
    double yr[3] = {0, 0, 0};
    for (int k = 0; k < d; ++k) yr[k] = wrap01(y[k]);
    TensorValue a(block_dim(), block_dim());
    sampler(yr, a);
    return a;
}

TensorValue CoefficientField::sample(std::initializer_list<double> y) const {
    return sample(y.begin());
}

std::vector<Eigen::MatrixXd> CoefficientField::mean_direction_blocks(int resolution) const {
    std::vector<Eigen::MatrixXd> blocks(d, Eigen::MatrixXd::Zero(m, m));
    const int n = resolution;
    double y[3] = {0, 0, 0};
    long count = 0;
    TensorValue a(block_dim(), block_dim());
    const long total = static_cast<long>(std::pow(n, d));
    for (long idx = 0; idx < total; ++idx) {
        long rest = idx;
        for (int k = 0; k < d; ++k) {
            y[k] = (rest % n + 0.5) / n;
            rest /= n;
        }
        sampler(y, a);
        for (int i = 0; i < d; ++i)
            blocks[i] += a.block(i * m, i * m, m, m);
        ++count;
    }
    for (auto& b : blocks) b /= static_cast<double>(count);
    return blocks;
}

ValidationReport validate(const CoefficientField& field, int resolution,
                          const ValidationTolerances& tol, unsigned seed) {
    if (resolution < 4) throw ConfigError("validate: resolution must be >= 4");
    const int d = field.d, m = field.m, n = resolution;
    const int bd = field.block_dim();

    // Direction set: canonical basis tensors plus 64 seeded random unit tensors.
    std::vector<Eigen::VectorXd> dirs;
    for (int k = 0; k < bd; ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(bd);
        e[k] = 1.0;
        dirs.push_back(e);
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < 64; ++k) {
        Eigen::VectorXd v(bd);
        for (int i = 0; i < bd; ++i) v[i] = gauss(rng);
        v.normalize();
        dirs.push_back(v);
    }

    ValidationReport rep;
    rep.mu_low = std::numeric_limits<double>::infinity();
    rep.mu_high = 0.0;

    TensorValue a(bd, bd), a2(bd, bd);
    double y[3] = {0, 0, 0};
    const long total = static_cast<long>(std::pow(n, d));
    for (long idx = 0; idx < total; ++idx) {
        long rest = idx;
        for (int k = 0; k < d; ++k) {
            y[k] = static_cast<double>(rest % n) / n;
            rest /= n;
        }
        field.sampler(y, a);
        rep.symmetry_defect = std::max(rep.symmetry_defect, (a - a.transpose()).cwiseAbs().maxCoeff());
        for (const auto& v : dirs) {
            const double q = v.dot(a * v);
            rep.mu_low = std::min(rep.mu_low, q);
            rep.mu_high = std::max(rep.mu_high, q);
        }
        // Periodicity: compare against the same point shifted by one period
        // in each coordinate, evaluated through the raw sampler.
        for (int k = 0; k < d; ++k) {
            double ys[3] = {y[0], y[1], y[2]};
            ys[k] = wrap01(ys[k] + 1.0);
            field.sampler(ys, a2);
            rep.periodicity_defect = std::max(rep.periodicity_defect, (a - a2).cwiseAbs().maxCoeff());
        }
    }

    if (field.holder) {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        double x[3], z[3];
        for (int trial = 0; trial < 512; ++trial) {
            for (int k = 0; k < d; ++k) { x[k] = uni(rng); z[k] = uni(rng); }
            double dist2 = 0;
            for (int k = 0; k < d; ++k) dist2 += (x[k] - z[k]) * (x[k] - z[k]);
            const double dist = std::sqrt(dist2);
            if (dist < 1e-8) continue;
            field.sampler(x, a);
            field.sampler(z, a2);
            const double q = (a - a2).cwiseAbs().maxCoeff() / std::pow(dist, field.holder->nu);
            rep.holder_quotient = std::max(rep.holder_quotient, q);
        }
    }

    rep.symmetry_ok = rep.symmetry_defect <= tol.symmetry;
    rep.periodicity_ok = rep.periodicity_defect <= tol.periodicity;
    rep.ellipticity_ok = rep.mu_low >= (1.0 - tol.ellipticity_slack) * field.mu &&
                         rep.mu_high <= (1.0 + tol.ellipticity_slack) / field.mu &&
                         rep.mu_low > 0.0;
    return rep;
}

CoefficientField constant_field(int d, const Eigen::MatrixXd& tensor, int m) {
    const int bd = d * m;
    if (tensor.rows() != bd || tensor.cols() != bd)
        throw ConfigError("constant_field: tensor must be (d*m) x (d*m)");
    if ((tensor - tensor.transpose()).cwiseAbs().maxCoeff() > 1e-14)
        throw ConfigError("constant_field: tensor must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tensor);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) throw ConfigError("constant_field: tensor not positive definite");
    CoefficientField f;
    f.d = d;
    f.m = m;
    f.family = "constant";
    f.mu = std::min(lo, 1.0 / hi);
    f.holder = HolderData{0.0, 0.5};
    Eigen::MatrixXd t = tensor;
    f.sampler = [t](const double*, Eigen::Ref<TensorValue> a) { a = t; };
    return f;
}

CoefficientField constant_scalar_field(int d, double value) {
    if (value <= 0.0) throw ConfigError("constant_scalar_field: value must be > 0");
    return constant_field(d, value * Eigen::MatrixXd::Identity(d, d), 1);
}

CoefficientField laminate_field(int d, double base, double amplitude) {
    const double lo = base - std::abs(amplitude);
    const double hi = base + std::abs(amplitude);
    if (lo <= 0.0) throw ConfigError("laminate_field: base - |amplitude| must be > 0");
    CoefficientField f;
    f.d = d;
    f.m = 1;
    f.family = "laminate";
    f.mu = std::min(lo, 1.0 / hi);
    f.holder = HolderData{std::abs(amplitude) * two_pi, 1.0 - 1e-9};
    f.sampler = [d, base, amplitude](const double* y, Eigen::Ref<TensorValue> a) {
        const double v = base + amplitude * std::sin(two_pi * y[0]);
        a.setZero();
        for (int i = 0; i < d; ++i) a(i, i) = v;
    };
    return f;
}

CoefficientField trig_field(int d, double c, double alpha) {
    const double lo = c - 2.0 * std::abs(alpha);
    const double hi = c + 2.0 * std::abs(alpha);
    if (lo <= 0.0) throw ConfigError("trig_field: ellipticity violated, need 2|alpha| < c");
    CoefficientField f;
    f.d = d;
    f.m = 1;
    f.family = "trig";
    f.mu = std::min(lo, 1.0 / hi);
    f.holder = HolderData{2.0 * std::abs(alpha) * two_pi, 1.0 - 1e-9};
    f.sampler = [d, c, alpha](const double* y, Eigen::Ref<TensorValue> a) {
        const double v = c + alpha * (std::sin(two_pi * y[0]) + std::sin(two_pi * y[1]));
        a.setZero();
        for (int i = 0; i < d; ++i) a(i, i) = v;
    };
    return f;
}

CoefficientField coupled_system_field(int d, double c, double kappa) {
    const double lo = c - std::abs(kappa);
    const double hi = c + std::abs(kappa);
    if (lo <= 0.0) throw ConfigError("coupled_system_field: need |kappa| < c");
    CoefficientField f;
    f.d = d;
    f.m = 2;
    f.family = "coupled-system";
    f.mu = std::min(lo, 1.0 / hi);
    f.holder = HolderData{std::abs(kappa) * two_pi, 1.0 - 1e-9};
    const int m = 2;
    f.sampler = [d, c, kappa, m](const double* y, Eigen::Ref<TensorValue> a) {
        const double s = kappa * std::sin(two_pi * y[0]);
        a.setZero();
        for (int i = 0; i < d; ++i) {
            a(i * m + 0, i * m + 0) = c;
            a(i * m + 1, i * m + 1) = c;
            a(i * m + 0, i * m + 1) = s;
            a(i * m + 1, i * m + 0) = s;
        }
    };
    return f;
}

} // namespace homlab
