#pragma once

// Independent reference implementations used to cross-check the library's
// linear algebra. Deliberately written with plain vectors and textbook
// algorithms (no Eigen) so a shared bug cannot hide in both sides.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat make_mat(std::size_t r, std::size_t c, double v = 0.0) {
    return Mat(r, Vec(c, v));
}

// Gaussian elimination with partial pivoting.
inline Vec gauss_solve(Mat a, Vec b) {
    const std::size_t n = a.size();
    if (n == 0 || a[0].size() != n || b.size() != n)
        throw std::invalid_argument("gauss_solve: bad shapes");
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(a[i][k]) > std::fabs(a[piv][k])) piv = i;
        if (std::fabs(a[piv][k]) < 1e-300)
            throw std::runtime_error("gauss_solve: singular matrix");
        std::swap(a[k], a[piv]);
        std::swap(b[k], b[piv]);
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = a[i][k] / a[k][k];
            for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
            b[i] -= f * b[k];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues sorted descending; eigenvectors[j] is the j-th (unit)
// eigenvector.
struct EigenResult {
    Vec values;
    Mat vectors; // vectors[j][i]: component i of eigenvector j
};

inline EigenResult jacobi_eigen(Mat a) {
    const std::size_t n = a.size();
    Mat v = make_mat(n, n);
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a[p][q]) < 1e-300) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (a[order[j]][order[j]] > a[order[i]][order[i]]) std::swap(order[i], order[j]);

    EigenResult res;
    res.values.resize(n);
    res.vectors = make_mat(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        res.values[j] = a[order[j]][order[j]];
        for (std::size_t i = 0; i < n; ++i) res.vectors[j][i] = v[i][order[j]];
    }
    return res;
}

inline double mean(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

inline double pop_std(const Vec& v) {
    double m = mean(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size()));
}

inline double pearson(const Vec& x, const Vec& y) {
    const std::size_t n = x.size();
    double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// Column-wise z-scoring with the population std, matching the library's
// Standardizer contract (constant columns get unit std).
inline Mat standardize(const Mat& x) {
    const std::size_t n = x.size(), t = x[0].size();
    Mat z = make_mat(n, t);
    for (std::size_t j = 0; j < t; ++j) {
        Vec col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = x[i][j];
        double m = mean(col), s = pop_std(col);
        if (s == 0.0) s = 1.0;
        for (std::size_t i = 0; i < n; ++i) z[i][j] = (x[i][j] - m) / s;
    }
    return z;
}

inline double rbf(const Vec& a, const Vec& b, double sigma) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
    return std::exp(-d2 / (2.0 * sigma * sigma));
}

// Ridge regression by explicit normal equations on standardized features
// with a centered target: w = (Z'Z + lambda I)^-1 Z'(y - ybar).
struct RidgeOracle {
    Vec weights;
    double bias = 0.0;
};

inline RidgeOracle ridge_fit(const Mat& x, const Vec& y, double lambda) {
    const std::size_t n = x.size(), t = x[0].size();
    Mat z = standardize(x);
    double ybar = mean(y);
    Mat g = make_mat(t, t);
    Vec rhs(t, 0.0);
    for (std::size_t a = 0; a < t; ++a) {
        for (std::size_t b = 0; b < t; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += z[i][a] * z[i][b];
            g[a][b] = s;
        }
        g[a][a] += lambda;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += z[i][a] * (y[i] - ybar);
        rhs[a] = s;
    }
    return {gauss_solve(g, rhs), ybar};
}

// Dual KRR coefficients: (K + lambda I) alpha = y - ybar on standardized
// inputs.
struct KrrOracle {
    Vec alpha;
    double bias = 0.0;
    Mat z; // standardized training inputs
};

inline KrrOracle krr_fit(const Mat& x, const Vec& y, double lambda, double sigma) {
    const std::size_t n = x.size();
    KrrOracle out;
    out.z = standardize(x);
    out.bias = mean(y);
    Mat k = make_mat(n, n);
    Vec rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i][j] = rbf(out.z[i], out.z[j], sigma);
        k[i][i] += lambda;
        rhs[i] = y[i] - out.bias;
    }
    out.alpha = gauss_solve(k, rhs);
    return out;
}

// Direct kernel-sum prediction for one standardized query point.
inline double krr_predict_one(const KrrOracle& m, const Vec& z_query, double sigma) {
    double s = m.bias;
    for (std::size_t i = 0; i < m.z.size(); ++i) s += m.alpha[i] * rbf(m.z[i], z_query, sigma);
    return s;
}

} // namespace oracle
