#ifndef HOMLAB_Q1_REF_HPP
#define HOMLAB_Q1_REF_HPP

#include <array>
#include <cmath>
#include <vector>

namespace homlab::detail {

// Q1 reference element on [0,1]^d: corner offsets, tensor 2-point Gauss
// rule, shape values and reference gradients at the quadrature points.
struct Q1Ref {
    int d;
    int n_corners;
    int n_quad;
    std::vector<std::array<int, 3>> corner;
    std::vector<std::array<double, 3>> qpoint;
    std::vector<double> qweight;  // sum = 1 on the reference element
    std::vector<std::vector<double>> phi;
    std::vector<std::vector<std::array<double, 3>>> dphi;
    std::vector<std::vector<double>> dphi_mean;  // element-mean reference gradient

    explicit Q1Ref(int d_) : d(d_) {
        n_corners = 1 << d;
        n_quad = 1 << d;
        const double s = 0.5 / std::sqrt(3.0);
        const double gp[2] = {0.5 - s, 0.5 + s};
        corner.resize(n_corners);
        for (int c = 0; c < n_corners; ++c)
            for (int k = 0; k < 3; ++k) corner[c][k] = (k < d) ? ((c >> k) & 1) : 0;
        qpoint.resize(n_quad);
        qweight.assign(n_quad, 1.0 / n_quad);
        phi.assign(n_quad, std::vector<double>(n_corners));
        dphi.assign(n_quad, std::vector<std::array<double, 3>>(n_corners, {0, 0, 0}));
        for (int q = 0; q < n_quad; ++q) {
            for (int k = 0; k < 3; ++k) qpoint[q][k] = (k < d) ? gp[(q >> k) & 1] : 0.0;
            for (int c = 0; c < n_corners; ++c) {
                double v = 1.0;
                for (int k = 0; k < d; ++k) {
                    const double xk = qpoint[q][k];
                    v *= corner[c][k] ? xk : 1.0 - xk;
                }
                phi[q][c] = v;
                for (int i = 0; i < d; ++i) {
                    double g = corner[c][i] ? 1.0 : -1.0;
                    for (int k = 0; k < d; ++k) {
                        if (k == i) continue;
                        const double xk = qpoint[q][k];
                        g *= corner[c][k] ? xk : 1.0 - xk;
                    }
                    dphi[q][c][i] = g;
                }
            }
        }
        dphi_mean.assign(n_corners, std::vector<double>(d, 0.0));
        for (int c = 0; c < n_corners; ++c)
            for (int i = 0; i < d; ++i) {
                double acc = 0.0;
                for (int q = 0; q < n_quad; ++q) acc += qweight[q] * dphi[q][c][i];
                dphi_mean[c][i] = acc;
            }
    }
};

} // namespace homlab::detail

#endif
