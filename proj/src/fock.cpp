#include "pslab/fock.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace pslab {

ModeSet grid_modes(const ModeBasis& basis, const std::vector<int>& indices) {
    ModeSet ms;
    ms.dp = basis.dp;
    ms.vectors = Mat::Zero(basis.n_modes, static_cast<Eigen::Index>(indices.size()));
    ms.energy.resize(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j) {
        ms.vectors(indices[j], static_cast<Eigen::Index>(j)) = 1.0 / std::sqrt(basis.dp);
        ms.energy(static_cast<Eigen::Index>(j)) = basis.omega(indices[j]);
    }
    ms.n_sharp = static_cast<int>(indices.size());
    ms.grid_index = indices;
    return ms;
}

ModeSet all_grid_modes(const ModeBasis& basis) {
    std::vector<int> idx(basis.n_modes);
    for (int k = 0; k < basis.n_modes; ++k) idx[k] = k;
    return grid_modes(basis, idx);
}

ModeSet window_modes(const ModeBasis& basis, double E) {
    std::vector<int> idx;
    for (int k = 0; k < basis.n_modes; ++k) {
        if (basis.omega(k) <= E) idx.push_back(k);
    }
    return grid_modes(basis, idx);
}

namespace {

// Appends the part of each f orthogonal to the columns already in `cols`.
void extend_orthonormal(const ModeBasis& basis, Mat& cols, const std::vector<Vec>& fs) {
    for (const Vec& f : fs) {
        Vec w = f;
        const double start = norm(basis, w);
        if (start == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass) {
            if (cols.cols() > 0) w -= cols * (basis.dp * (cols.adjoint() * w));
        }
        const double nrm = norm(basis, w);
        if (nrm <= 1e-10 * start) continue;
        cols.conservativeResize(Eigen::NoChange, cols.cols() + 1);
        cols.col(cols.cols() - 1) = w / nrm;
    }
}

}  // namespace

ModeSet augmented_modes(const ModeBasis& basis, double E, const std::vector<Vec>& fs) {
    ModeSet ms = window_modes(basis, E);
    const Eigen::Index n0 = ms.vectors.cols();
    extend_orthonormal(basis, ms.vectors, fs);
    const Eigen::Index n1 = ms.vectors.cols();
    ms.energy.conservativeResize(n1);
    for (Eigen::Index j = n0; j < n1; ++j) ms.energy(j) = std::numeric_limits<double>::infinity();
    return ms;
}

ModeSet span_modes(const ModeBasis& basis, const std::vector<Vec>& fs) {
    ModeSet ms;
    ms.dp = basis.dp;
    ms.vectors.resize(basis.n_modes, 0);
    extend_orthonormal(basis, ms.vectors, fs);
    ms.energy = RVec::Constant(ms.vectors.cols(), std::numeric_limits<double>::infinity());
    ms.n_sharp = 0;
    return ms;
}

Vec coords(const ModeSet& modes, const Vec& f) {
    Vec c(modes.vectors.cols());
    const double sq = std::sqrt(modes.dp);
    const Eigen::Index ns = static_cast<Eigen::Index>(modes.grid_index.size());
    for (Eigen::Index j = 0; j < ns; ++j) c(j) = sq * f(modes.grid_index[static_cast<std::size_t>(j)]);
    for (Eigen::Index j = ns; j < c.size(); ++j) c(j) = modes.dp * modes.vectors.col(j).dot(f);
    return c;
}

int FockBasis::index_of(const std::vector<std::uint8_t>& n) const {
    const auto it = lookup.find(std::string(n.begin(), n.end()));
    return it == lookup.end() ? -1 : it->second;
}

namespace {

struct Enumerator {
    const RVec& energy;
    double e_cut;
    int budget;
    int n_modes;
    std::vector<std::uint8_t> cur;
    FockBasis& fb;

    void emit(double e) {
        if (fb.dim >= budget) {
            throw SizeError("Fock dimension exceeds budget " + std::to_string(budget) +
                            "; reduce n_max or the number of modes");
        }
        fb.occ.insert(fb.occ.end(), cur.begin(), cur.end());
        fb.energy.conservativeResize(fb.dim + 1);
        fb.energy(fb.dim) = e;
        ++fb.dim;
    }

    void run(int mode, int remaining, double e) {
        if (mode == n_modes - 1) {
            double e_last = e;
            if (remaining > 0) e_last += remaining * energy(mode);
            if (e_last > e_cut) return;
            cur[mode] = static_cast<std::uint8_t>(remaining);
            emit(e_last);
            cur[mode] = 0;
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            const double e_next = v > 0 ? e + v * energy(mode) : e;
            if (e_next > e_cut) continue;
            cur[mode] = static_cast<std::uint8_t>(v);
            run(mode + 1, remaining - v, e_next);
        }
        cur[mode] = 0;
    }
};

}  // namespace

FockBasis build_fock(const ModeSet& modes, int n_max, double e_cut, int budget) {
    if (n_max < 0) throw ConfigError("n_max must be non-negative");
    if (n_max > 255) throw ConfigError("n_max too large");
    const int k = static_cast<int>(modes.vectors.cols());
    if (k == 0) throw ConfigError("empty mode set");
    FockBasis fb;
    fb.n_modes = k;
    fb.n_max = n_max;
    Enumerator en{modes.energy, e_cut, budget, k, std::vector<std::uint8_t>(k, 0), fb};
    for (int n = 0; n <= n_max; ++n) en.run(0, n, 0.0);

    fb.number.resize(fb.dim);
    fb.lookup.reserve(static_cast<std::size_t>(fb.dim) * 2);
    for (int s = 0; s < fb.dim; ++s) {
        const auto* row = &fb.occ[static_cast<std::size_t>(s) * k];
        int tot = 0;
        for (int j = 0; j < k; ++j) tot += row[j];
        fb.number(s) = tot;
        fb.lookup.emplace(std::string(row, row + k), s);
    }
    fb.lower.assign(static_cast<std::size_t>(fb.dim) * k, -1);
    std::vector<std::uint8_t> tmp(k);
    for (int s = 0; s < fb.dim; ++s) {
        const auto* row = &fb.occ[static_cast<std::size_t>(s) * k];
        for (int j = 0; j < k; ++j) {
            if (row[j] == 0) continue;
            tmp.assign(row, row + k);
            --tmp[j];
            fb.lower[static_cast<std::size_t>(s) * k + j] = fb.index_of(tmp);
        }
    }
    return fb;
}

FockBasis build_fock(const ModeBasis& basis, int n_max, int budget) {
    return build_fock(all_grid_modes(basis), n_max, std::numeric_limits<double>::infinity(), budget);
}

SpMat mode_annihilator(const FockBasis& fb, int k) {
    std::vector<Eigen::Triplet<cd>> trips;
    for (int s = 0; s < fb.dim; ++s) {
        const int l = fb.lower[static_cast<std::size_t>(s) * fb.n_modes + k];
        if (l >= 0) trips.emplace_back(l, s, std::sqrt(static_cast<double>(fb.occupation(s, k))));
    }
    SpMat a(fb.dim, fb.dim);
    a.setFromTriplets(trips.begin(), trips.end());
    return a;
}

SpMat annihilator(const FockBasis& fb, const Vec& c) {
    if (c.size() != fb.n_modes) throw ConfigError("annihilator: coordinate length mismatch");
    std::vector<Eigen::Triplet<cd>> trips;
    trips.reserve(static_cast<std::size_t>(fb.dim) * 2);
    for (int s = 0; s < fb.dim; ++s) {
        for (int k = 0; k < fb.n_modes; ++k) {
            if (c(k) == 0.0) continue;
            const int l = fb.lower[static_cast<std::size_t>(s) * fb.n_modes + k];
            if (l < 0) continue;
            trips.emplace_back(l, s, std::conj(c(k)) * std::sqrt(static_cast<double>(fb.occupation(s, k))));
        }
    }
    SpMat a(fb.dim, fb.dim);
    a.setFromTriplets(trips.begin(), trips.end());
    return a;
}

SpMat creator(const FockBasis& fb, const Vec& c) { return SpMat(annihilator(fb, c).adjoint()); }

SpMat hamiltonian(const FockBasis& fb) {
    if (!fb.energy.allFinite()) throw PreconditionError("hamiltonian needs energy-diagonal modes");
    SpMat h(fb.dim, fb.dim);
    std::vector<Eigen::Triplet<cd>> trips;
    for (int s = 0; s < fb.dim; ++s) trips.emplace_back(s, s, fb.energy(s));
    h.setFromTriplets(trips.begin(), trips.end());
    return h;
}

std::vector<int> energy_support(const FockBasis& fb, double E) {
    std::vector<int> idx;
    for (int s = 0; s < fb.dim; ++s) {
        if (fb.energy(s) <= E) idx.push_back(s);
    }
    return idx;
}

SpMat energy_projection(const FockBasis& fb, double E) {
    if (!(E >= 0.0)) throw ConfigError("E must be non-negative");
    SpMat p(fb.dim, fb.dim);
    std::vector<Eigen::Triplet<cd>> trips;
    for (int s : energy_support(fb, E)) trips.emplace_back(s, s, 1.0);
    p.setFromTriplets(trips.begin(), trips.end());
    return p;
}

namespace {

void check_dense(const FockBasis& fb) {
    if (fb.dim > 3000) throw SizeError("dense Fock operator above 3000 states");
}

void check_truncation(const FockBasis& fb, const Vec& c) {
    if (c.norm() > fb.n_max / 8.0) {
        throw TruncationRiskError("|f| exceeds the truncation-safety threshold n_max/8");
    }
}

}  // namespace

Mat weyl(const FockBasis& fb, const Vec& c) {
    check_dense(fb);
    check_truncation(fb, c);
    const SpMat a = annihilator(fb, c);
    const Mat phi = Mat(a) + Mat(a.adjoint());
    return Mat(I_ * phi).exp();
}

Vec weyl_apply(const FockBasis& fb, const Vec& c, const Vec& v) {
    check_truncation(fb, c);
    const SpMat a = annihilator(fb, c);
    const SpMat phi = a + SpMat(a.adjoint());
    const int steps = std::max(1, static_cast<int>(std::ceil(2.0 * c.norm() * std::sqrt(std::max(fb.n_max, 1)))));
    const cd h = I_ / static_cast<double>(steps);
    Vec out = v;
    for (int s = 0; s < steps; ++s) {
        Vec term = out;
        Vec acc = out;
        for (int k = 1; k < 400; ++k) {
            term = (h / static_cast<double>(k)) * (phi * term);
            acc += term;
            if (term.norm() <= 1e-18 * acc.norm()) break;
        }
        out = acc;
    }
    return out;
}

namespace {

Mat nilpotent_exp(const SpMat& x, int max_power) {
    const Eigen::Index d = x.rows();
    Mat acc = Mat::Identity(d, d);
    Mat term = Mat::Identity(d, d);
    for (int k = 1; k <= max_power; ++k) {
        term = (x * term) / static_cast<double>(k);
        acc += term;
    }
    return acc;
}

}  // namespace

Mat normal_ordered_weyl(const FockBasis& fb, const Vec& c) {
    check_dense(fb);
    check_truncation(fb, c);
    const SpMat a = annihilator(fb, c);
    const SpMat ia = I_ * a;
    const SpMat iad = I_ * SpMat(a.adjoint());
    return nilpotent_exp(iad, fb.n_max) * nilpotent_exp(ia, fb.n_max);
}

int max_particles(const FockBasis& fb, const std::vector<int>& states) {
    int n = 0;
    for (int s : states) n = std::max(n, static_cast<int>(fb.number(s)));
    return n;
}

namespace {

WeylCalculus weyl_calculus_once(const ModeBasis& basis, const Vec& f, const std::vector<Vec>& extra, int n_max,
                                int block_particles) {
    std::vector<Vec> span{f};
    span.insert(span.end(), extra.begin(), extra.end());
    const ModeSet ms = span_modes(basis, span);
    const FockBasis fb = build_fock(ms, n_max);
    const Vec c = coords(ms, f);
    const double damp = std::exp(-0.5 * basis.dp * f.squaredNorm());
    const SpMat ia = I_ * annihilator(fb, c);
    const SpMat iad = I_ * creator(fb, c);
    auto nilpotent_apply = [&](const SpMat& x, const Vec& v) {
        Vec acc = v, term = v;
        for (int k = 1; k <= fb.n_max && term.squaredNorm() > 0.0; ++k) {
            term = (x * term) / static_cast<double>(k);
            acc += term;
        }
        return acc;
    };
    std::vector<int> low;
    for (int s = 0; s < fb.dim; ++s)
        if (fb.number(s) <= block_particles) low.push_back(s);
    Mat diff(low.size(), low.size());
    cd vac = 0.0;
    for (std::size_t b = 0; b < low.size(); ++b) {
        Vec e = Vec::Zero(fb.dim);
        e(low[b]) = 1.0;
        const Vec w = weyl_apply(fb, c, e);
        const Vec nw = nilpotent_apply(iad, nilpotent_apply(ia, e));
        for (std::size_t a = 0; a < low.size(); ++a) diff(a, b) = w(low[a]) - damp * nw(low[a]);
        if (low[b] == 0) vac = w(0);
    }
    WeylCalculus out;
    out.vacuum_err = std::abs(vac - damp);
    out.normal_err = op_norm(diff);
    out.block_particles = block_particles;
    return out;
}

}  // namespace

WeylCalculus weyl_calculus_check(const ModeBasis& basis, const Vec& f, const std::vector<Vec>& extra, int n_max) {
    const int block = std::max(1, n_max / 4);
    const WeylCalculus a = weyl_calculus_once(basis, f, extra, n_max, block);
    WeylCalculus b = weyl_calculus_once(basis, f, extra, n_max + 4, block);
    b.eta = std::max(std::abs(a.vacuum_err - b.vacuum_err), std::abs(a.normal_err - b.normal_err));
    return b;
}

MMap::MMap(const FockBasis& fb, const ModeSet& modes, double E, double m, const Vec& f) {
    degree_ = static_cast<int>(std::floor(E / m));
    const SpMat p = energy_projection(fb, E);
    const SpMat ia = I_ * annihilator(fb, coords(modes, f));
    const SpMat iad = SpMat(ia.adjoint()) * cd(-1.0);  // (i a)^dagger = -i a*, so i a* = -(i a)^dagger
    SpMat right = p;
    SpMat term = p;
    for (int l = 1; l <= degree_; ++l) {
        term = (ia * term) / static_cast<double>(l);
        right += term;
    }
    SpMat left = p;
    term = p;
    for (int k = 1; k <= degree_; ++k) {
        term = (term * iad) / static_cast<double>(k);
        left += term;
    }
    right_ = right;
    left_ = left;
}

SpMat MMap::operator()(const SpMat& c) const { return left_ * c * right_; }

Mat EnergyFunctional::rho() const {
    const int d = dim();
    Mat r = Mat::Zero(d, d);
    for (std::size_t s = 0; s < vectors.size(); ++s) r += weights(static_cast<Eigen::Index>(s)) * vectors[s] * vectors[s].adjoint();
    return r;
}

cd EnergyFunctional::operator()(const Mat& block) const {
    cd acc = 0.0;
    for (std::size_t s = 0; s < vectors.size(); ++s) {
        acc += weights(static_cast<Eigen::Index>(s)) * vectors[s].dot(block * vectors[s]);
    }
    return acc;
}

namespace {

Vec haar_vector(Rng& rng, int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = complex_gaussian(rng);
    return v / v.norm();
}

}  // namespace

EnergyFunctional sample_energy_functional(int block_dim, double E, std::uint64_t seed, std::uint64_t index,
                                          SampleMode mode) {
    if (block_dim < 1) throw ConfigError("empty energy window");
    Rng rng = make_rng(seed, 0x7e11, index);
    EnergyFunctional phi;
    phi.E = E;
    bool pure = mode == SampleMode::Pure;
    if (mode == SampleMode::Auto) pure = uniform(rng) < 0.5;
    const int count = pure ? 1 : 2 + static_cast<int>(rng() % 4);
    phi.weights.resize(count);
    for (int s = 0; s < count; ++s) {
        phi.vectors.push_back(haar_vector(rng, block_dim));
        double u = uniform(rng);
        while (u <= 0.0) u = uniform(rng);
        phi.weights(s) = -std::log(u);
    }
    phi.weights /= phi.weights.sum();
    return phi;
}

EnergyFunctional vacuum_functional(int block_dim, double E) {
    EnergyFunctional phi;
    phi.E = E;
    Vec v = Vec::Zero(block_dim);
    v(0) = 1.0;
    phi.vectors.push_back(v);
    phi.weights = RVec::Ones(1);
    return phi;
}

Mat sample_signed_density(int block_dim, std::uint64_t seed, std::uint64_t index) {
    Rng rng = make_rng(seed, 0x51d, index);
    Mat parts[4];
    for (auto& p : parts) {
        const Vec v = haar_vector(rng, block_dim);
        p = v * v.adjoint();
    }
    return 0.25 * (parts[0] - parts[1] + I_ * (parts[2] - parts[3]));
}

EnergyWindow build_energy_window(const ModeBasis& basis, double E) {
    if (!(E >= 0.0)) throw ConfigError("E must be non-negative");
    EnergyWindow w;
    w.basis = basis;
    w.E = E;
    w.degree = static_cast<int>(std::floor(E / basis.m));
    w.modes = window_modes(basis, E);
    if (w.modes.vectors.cols() == 0) {
        // below the mass shell only the vacuum survives; keep one dummy mode that is never occupied
        w.modes = grid_modes(basis, {basis.n_modes / 2});
    }
    w.fb = build_fock(w.modes, w.degree, E);
    for (int s = 0; s < w.fb.dim; ++s) {
        for (int k = 0; k < w.fb.n_modes; ++k) {
            const int l = w.fb.lower[static_cast<std::size_t>(s) * w.fb.n_modes + k];
            if (l >= 0) w.lowering.push_back({l, s, k, std::sqrt(static_cast<double>(w.fb.occupation(s, k)))});
        }
    }
    return w;
}

Mat window_annihilator_coords(const EnergyWindow& w, const Vec& c) {
    if (c.size() != w.fb.n_modes) throw SizeError("window coordinates have the wrong length");
    Mat a = Mat::Zero(w.dim(), w.dim());
    for (const auto& e : w.lowering) a(e.row, e.col) += std::conj(c(e.mode)) * e.amp;
    return a;
}

Mat window_annihilator(const EnergyWindow& w, const Vec& h) {
    return window_annihilator_coords(w, coords(w.modes, h));
}

Mat window_exp_annihilator_coords(const EnergyWindow& w, const Vec& c) {
    const Mat ia = I_ * window_annihilator_coords(w, c);
    Mat acc = Mat::Identity(w.dim(), w.dim());
    Mat term = acc;
    for (int l = 1; l <= w.degree; ++l) {
        term = ia * term / static_cast<double>(l);
        acc += term;
    }
    return acc;
}

Mat window_exp_annihilator(const EnergyWindow& w, const Vec& h) {
    return window_exp_annihilator_coords(w, coords(w.modes, h));
}

Mat window_normal_weyl_coords(const EnergyWindow& w, const Vec& c) {
    return window_exp_annihilator_coords(w, -c).adjoint() * window_exp_annihilator_coords(w, c);
}

Mat window_normal_weyl(const EnergyWindow& w, const Vec& h) {
    return window_normal_weyl_coords(w, coords(w.modes, h));
}

Mat window_weyl(const EnergyWindow& w, const Vec& h) {
    const double n2 = w.basis.dp * h.squaredNorm();
    return std::exp(-0.5 * n2) * window_normal_weyl(w, h);
}

}  // namespace pslab
