#include "pslab/singleparticle.hpp"

#include <cmath>

namespace pslab {

ModeBasis build_mode_basis(double m, double p_max, int n_modes) {
    if (!(m > 0.0)) throw ConfigError("mass must be positive");
    if (!(p_max > 0.0)) throw ConfigError("p_max must be positive");
    if (n_modes < 3 || n_modes % 2 == 0) throw ConfigError("n_modes must be odd and at least 3");
    ModeBasis b;
    b.m = m;
    b.n_modes = n_modes;
    b.dp = 2.0 * p_max / (n_modes - 1);
    b.p.resize(n_modes);
    b.omega.resize(n_modes);
    const int half = (n_modes - 1) / 2;
    for (int k = 0; k < n_modes; ++k) {
        // exact symmetry: p_{n-1-k} = -p_k bit for bit
        const int j = k - half;
        b.p(k) = j * b.dp;
        b.omega(k) = std::sqrt(b.p(k) * b.p(k) + m * m);
    }
    return b;
}

cd inner(const ModeBasis& basis, const Vec& f, const Vec& g) { return basis.dp * f.dot(g); }

double norm(const ModeBasis& basis, const Vec& f) { return std::sqrt(basis.dp) * f.norm(); }

Vec translate(const ModeBasis& basis, const Vec& f, double t, double x) {
    Vec out(f.size());
    for (Eigen::Index k = 0; k < f.size(); ++k) {
        const double phase = basis.omega(k) * t - basis.p(k) * x;
        out(k) = f(k) * cd(std::cos(phase), std::sin(phase));
    }
    return out;
}

Vec conjugate_J(const Vec& f) { return f.reverse().conjugate(); }

Vec j_plus(const Vec& f) { return 0.5 * (f + conjugate_J(f)); }

Vec j_minus(const Vec& f) { return (f - conjugate_J(f)) / cd(0.0, 2.0); }

Vec fourier(const ModeBasis& basis, const RVec& xs, const RVec& values) {
    const Eigen::Index nx = xs.size();
    RVec w = RVec::Constant(nx, nx > 1 ? xs(1) - xs(0) : 1.0);
    if (nx > 1) {
        w(0) *= 0.5;
        w(nx - 1) *= 0.5;
    }
    Vec out(basis.n_modes);
    const double c = 1.0 / std::sqrt(2.0 * M_PI);
    for (int k = 0; k < basis.n_modes; ++k) {
        cd s = 0.0;
        for (Eigen::Index i = 0; i < nx; ++i) {
            const double ph = -basis.p(k) * xs(i);
            s += w(i) * values(i) * cd(std::cos(ph), std::sin(ph));
        }
        out(k) = c * s;
    }
    return out;
}

Vec inverse_fourier(const ModeBasis& basis, const Vec& f, const RVec& xs) {
    Vec out(xs.size());
    const double c = basis.dp / std::sqrt(2.0 * M_PI);
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
        cd s = 0.0;
        for (int k = 0; k < basis.n_modes; ++k) {
            const double ph = basis.p(k) * xs(i);
            s += f(k) * cd(std::cos(ph), std::sin(ph));
        }
        out(i) = c * s;
    }
    return out;
}

double bump(double x, double r, int k) {
    const double u = x / r;
    if (std::abs(u) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - u * u)) * std::cos(k * M_PI * u);
}

namespace {

// Modified Gram-Schmidt (two passes) in the weighted inner product.
// Returns the number of columns kept before the first numerically dependent one.
int orthonormalize(const ModeBasis& basis, Mat& cols, double rel_tol) {
    for (Eigen::Index j = 0; j < cols.cols(); ++j) {
        const double start = norm(basis, cols.col(j));
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < j; ++i) {
                cols.col(j) -= inner(basis, cols.col(i), cols.col(j)) * cols.col(i);
            }
        }
        const double nrm = norm(basis, cols.col(j));
        if (!(nrm > rel_tol * start)) return static_cast<int>(j);
        cols.col(j) /= nrm;
    }
    return static_cast<int>(cols.cols());
}

}  // namespace

LocalizationFrame build_localization_frame(const ModeBasis& basis, double r, int n_test) {
    if (!(r > 0.0)) throw ConfigError("frame radius must be positive");
    if (n_test < 1) throw ConfigError("n_test must be at least 1");
    const double p_max = basis.p(basis.n_modes - 1);
    const double dx_target = M_PI / (8.0 * p_max);
    int nx = static_cast<int>(std::ceil(2.0 * r / dx_target)) + 1;
    if (nx % 2 == 0) ++nx;
    nx = std::max(nx, 65);
    const RVec xs = RVec::LinSpaced(nx, -r, r);

    LocalizationFrame fr;
    fr.basis = basis;
    fr.r = r;
    fr.n_test = n_test;
    fr.ell = M_PI / p_max;
    fr.plus.resize(basis.n_modes, n_test);
    fr.minus.resize(basis.n_modes, n_test);
    for (int k = 0; k < n_test; ++k) {
        RVec vals(nx);
        for (int i = 0; i < nx; ++i) vals(i) = bump(xs(i), r, k);
        const Vec ft = fourier(basis, xs, vals);
        for (int q = 0; q < basis.n_modes; ++q) {
            fr.plus(q, k) = ft(q) / std::sqrt(basis.omega(q));
            fr.minus(q, k) = ft(q) * std::sqrt(basis.omega(q));
        }
    }
    const int rp = orthonormalize(basis, fr.plus, 1e-8);
    const int rm = orthonormalize(basis, fr.minus, 1e-8);
    if (rp < n_test || rm < n_test) {
        const int achieved = std::min(rp, rm);
        throw FrameRankError("localization frame is numerically singular: rank " +
                                 std::to_string(achieved) + " of " + std::to_string(n_test),
                             achieved, n_test);
    }
    return fr;
}

Vec project_plus(const LocalizationFrame& frame, const Vec& f) {
    return frame.plus * (frame.basis.dp * (frame.plus.adjoint() * f));
}

Vec project_minus(const LocalizationFrame& frame, const Vec& f) {
    return frame.minus * (frame.basis.dp * (frame.minus.adjoint() * f));
}

Vec weyl_symbol(const LocalizationFrame& frame, const RVec& a, const RVec& b) {
    if (a.size() != frame.n_test || b.size() != frame.n_test) {
        throw ConfigError("weyl_symbol: coefficient length must equal n_test");
    }
    return frame.plus * a.cast<cd>() + I_ * (frame.minus * b.cast<cd>());
}

Mat j_symmetrize_cluster(const ModeBasis& basis, const Mat& v) {
    const Eigen::Index k = v.cols();
    Mat cand(v.rows(), 2 * k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const Vec jv = conjugate_J(v.col(c));
        cand.col(2 * c) = v.col(c) + jv;
        cand.col(2 * c + 1) = I_ * (v.col(c) - jv);
    }
    Mat out(v.rows(), k);
    Eigen::Index kept = 0;
    for (Eigen::Index c = 0; c < cand.cols() && kept < k; ++c) {
        Vec w = cand.col(c);
        const double start = norm(basis, w);
        if (start < 1e-12) continue;
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < kept; ++i) {
                // inner products of J-invariant vectors are real
                w -= inner(basis, out.col(i), w).real() * out.col(i);
            }
        }
        const double nrm = norm(basis, w);
        if (nrm < 1e-8 * start) continue;
        out.col(kept++) = w / nrm;
    }
    if (kept < k) throw NumericalError("J-symmetrization lost rank in a degenerate cluster");
    return out;
}

namespace {

RVec damping_diag(const ModeBasis& basis, double E, double kappa) {
    RVec d(basis.n_modes);
    for (int q = 0; q < basis.n_modes; ++q) {
        d(q) = (basis.omega(q) <= E ? 1.0 : 0.0) + std::exp(-std::pow(basis.omega(q), kappa));
    }
    return d;
}

double nuclear(const Mat& a) {
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues().sum();
}

}  // namespace

Vec T_squared_apply(const LocalizationFrame& frame, double E, double kappa, const Vec& f) {
    const RVec d = damping_diag(frame.basis, E, kappa);
    const Vec pp = project_plus(frame, f);
    const Vec pm = project_minus(frame, f);
    const Vec dp = (d.cast<cd>().array() * pp.array()).matrix();
    const Vec dm = (d.cast<cd>().array() * pm.array()).matrix();
    return project_plus(frame, dp) + project_minus(frame, dm);
}

TSpectrum build_T_spectrum(const LocalizationFrame& frame, double E, double kappa) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("kappa must lie in (0, 1)");
    if (!(E >= 0.0)) throw ConfigError("E must be non-negative");
    const ModeBasis& b = frame.basis;
    const double sq = std::sqrt(b.dp);
    const Mat vp = sq * frame.plus;
    const Mat vm = sq * frame.minus;
    const RVec d = damping_diag(b, E, kappa);

    TSpectrum sp;
    sp.E = E;
    sp.kappa = kappa;
    RVec qe(b.n_modes), hk(b.n_modes);
    for (int q = 0; q < b.n_modes; ++q) {
        qe(q) = b.omega(q) <= E ? 1.0 : 0.0;
        hk(q) = std::exp(-0.5 * std::pow(b.omega(q), kappa));
    }
    sp.parts[0] = nuclear(qe.cast<cd>().asDiagonal() * vp);
    sp.parts[1] = nuclear(qe.cast<cd>().asDiagonal() * vm);
    sp.parts[2] = nuclear(hk.cast<cd>().asDiagonal() * vp);
    sp.parts[3] = nuclear(hk.cast<cd>().asDiagonal() * vm);

    Mat joint(b.n_modes, vp.cols() + vm.cols());
    joint << vp, vm;
    Eigen::ColPivHouseholderQR<Mat> qr(joint);
    qr.setThreshold(1e-12);
    const Eigen::Index rank = qr.rank();
    const Mat q = Mat(qr.householderQ()).leftCols(rank);

    const Mat dvp = d.cast<cd>().asDiagonal() * vp;
    const Mat dvm = d.cast<cd>().asDiagonal() * vm;
    const Mat qp = q.adjoint() * vp;
    const Mat qm = q.adjoint() * vm;
    Mat k = qp * (vp.adjoint() * dvp) * qp.adjoint() + qm * (vm.adjoint() * dvm) * qm.adjoint();
    k = 0.5 * (k + k.adjoint()).eval();

    Eigen::SelfAdjointEigenSolver<Mat> es(k);
    if (es.info() != Eigen::Success) {
        throw NumericalError("T spectrum: eigendecomposition failed (rank " +
                             std::to_string(rank) + ")");
    }
    const Eigen::Index n = rank;
    RVec t(n);
    Mat e(b.n_modes, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index src = n - 1 - i;
        t(i) = std::sqrt(std::max(es.eigenvalues()(src), 0.0));
        e.col(i) = (q * es.eigenvectors().col(src)) / sq;
    }
    // J-invariant basis inside each degenerate cluster
    Eigen::Index start = 0;
    while (start < n) {
        Eigen::Index stop = start + 1;
        while (stop < n && std::abs(t(stop - 1) - t(stop)) < 1e-10) ++stop;
        e.middleCols(start, stop - start) = j_symmetrize_cluster(b, e.middleCols(start, stop - start));
        start = stop;
    }
    sp.t_all = t;
    sp.trace_norm = t.sum();
    Eigen::Index kept = 0;
    while (kept < n && t(kept) > 1e-6 * t(0)) ++kept;
    sp.t = t.head(kept);
    sp.e = e.leftCols(kept);
    sp.dropped = static_cast<int>(n - kept);
    sp.dropped_weight = t.tail(n - kept).sum();
    return sp;
}

Vec projected_eigenvector(const LocalizationFrame& frame, const TSpectrum& spec, int i, int sign) {
    return sign > 0 ? project_plus(frame, spec.e.col(i)) : project_minus(frame, spec.e.col(i));
}

cd two_point_correlation(const LocalizationFrame& frame, const TSpectrum& spec, int i, int j,
                         double x, double y, int sign) {
    const Vec a = translate(frame.basis, projected_eigenvector(frame, spec, i, sign), 0.0, x);
    const Vec b = translate(frame.basis, projected_eigenvector(frame, spec, j, sign), 0.0, y);
    return inner(frame.basis, a, b);
}

double measure_g(const LocalizationFrame& frame, const TSpectrum& spec, double delta, double d_step) {
    const ModeBasis& b = frame.basis;
    const double d_lo = 2.0 * frame.r + delta;
    const double d_hi = M_PI / b.dp;
    if (d_lo > d_hi) throw GeometryError("measure_g: separation exceeds the grid period");
    const int nd = static_cast<int>(std::floor((d_hi - d_lo) / d_step)) + 1;
    const Eigen::Index k = spec.t.size();

    Mat prods(b.n_modes, 2 * k * k);
    RVec scale(2 * k * k);
    int col = 0;
    for (int sign : {+1, -1}) {
        Mat pe(b.n_modes, k);
        for (Eigen::Index i = 0; i < k; ++i) pe.col(i) = projected_eigenvector(frame, spec, static_cast<int>(i), sign);
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) {
                prods.col(col) = (pe.col(i).conjugate().array() * pe.col(j).array()).matrix();
                scale(col) = spec.t(i) * spec.t(j);
                ++col;
            }
        }
    }
    Mat phases(nd, b.n_modes);
    for (int s = 0; s < nd; ++s) {
        const double d = d_lo + s * d_step;
        for (int q = 0; q < b.n_modes; ++q) {
            const double ph = b.p(q) * d;
            phases(s, q) = cd(std::cos(ph), std::sin(ph));
        }
    }
    const Mat corr = b.dp * (phases * prods);
    double g2 = 0.0;
    for (Eigen::Index c = 0; c < corr.cols(); ++c) {
        g2 = std::max(g2, corr.col(c).cwiseAbs().maxCoeff() / scale(c));
    }
    return std::sqrt(g2);
}

SlopeFit fit_log_slope(const RVec& d, const RVec& values) {
    const Eigen::Index n = d.size();
    Eigen::MatrixXd a(n, 2);
    RVec y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = d(i);
        a(i, 1) = 1.0;
        y(i) = std::log(values(i));
    }
    const RVec sol = a.colPivHouseholderQr().solve(y);
    return {sol(0), sol(1)};
}

}  // namespace pslab
