#include "lps/model.hpp"

#include "lps/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <unordered_set>

namespace lps {

void Model::validate() const {
    if (n <= 0) throw ValidationError("model: vertex count must be positive");
    if (mu.size() != n) throw ValidationError("model: mu must have one entry per vertex");
    if (potential.size() != 0 && potential.size() != n)
        throw ValidationError("model: potential must be empty or have one entry per vertex");
    for (int i = 0; i < n; ++i) {
        if (!(mu[i] > 0.0)) throw ValidationError("model: mu must be strictly positive");
        if (potential.size() == n && !(potential[i] >= 0.0))
            throw ValidationError("model: potential must be nonnegative");
    }
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : edges) {
        if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
            throw ValidationError("model: edge endpoint out of range");
        if (e.u == e.v) throw ValidationError("model: self-loops are not allowed");
        if (!(e.w > 0.0)) throw ValidationError("model: edge weights must be strictly positive");
        auto key = std::minmax(e.u, e.v);
        if (!seen.insert(key).second) throw ValidationError("model: duplicate edge");
    }
    for (int v : dirichlet)
        if (v < 0 || v >= n) throw ValidationError("model: dirichlet vertex out of range");
    if (static_cast<int>(std::unordered_set<int>(dirichlet.begin(), dirichlet.end()).size()) >= n)
        throw ValidationError("model: interior vertex set is empty");
}

std::vector<int> Model::interior() const {
    std::unordered_set<int> killed(dirichlet.begin(), dirichlet.end());
    std::vector<int> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i)
        if (!killed.count(i)) out.push_back(i);
    if (out.empty()) throw ValidationError("model: interior vertex set is empty");
    return out;
}

bool Model::is_dirichlet(int v) const {
    return std::find(dirichlet.begin(), dirichlet.end(), v) != dirichlet.end();
}

std::vector<int> Model::disconnected_from_interior() const {
    // union-find over edges, then flag components without interior vertices
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (const Edge& e : edges) parent[find(e.u)] = find(e.v);

    std::vector<char> component_has_interior(n, 0);
    for (int i = 0; i < n; ++i)
        if (!is_dirichlet(i)) component_has_interior[find(i)] = 1;

    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (!component_has_interior[find(i)]) out.push_back(i);
    return out;
}

const char* to_string(GeneratorKind k) {
    switch (k) {
        case GeneratorKind::GraphLaplacian: return "graph-laplacian";
        case GeneratorKind::Schrodinger: return "schrodinger";
        case GeneratorKind::DivergenceForm: return "divergence-form";
    }
    return "?";
}

const char* to_string(CarreMode m) {
    switch (m) {
        case CarreMode::GradientOnly: return "gradient-only";
        case CarreMode::PotentialOnly: return "potential-only";
        case CarreMode::Full: return "full";
    }
    return "?";
}

CarreMode carre_mode_from_string(const std::string& s) {
    if (s == "gradient-only" || s == "gradient") return CarreMode::GradientOnly;
    if (s == "potential-only" || s == "potential") return CarreMode::PotentialOnly;
    if (s == "full" || s.empty()) return CarreMode::Full;
    throw ValidationError("unknown carre mode: " + s);
}

Generator Generator::from_matrix(Mat m, Vec mu, GeneratorKind kind) {
    Generator g;
    g.matrix = std::move(m);
    g.mu = std::move(mu);
    g.kind = kind;
    g.vertex_ids.resize(g.matrix.rows());
    for (int i = 0; i < g.matrix.rows(); ++i) g.vertex_ids[i] = i;
    return g;
}

double Generator::dirichlet_form(const Vec& f, const Vec& g) const {
    Vec lf = matrix * f;
    return kernels::wdot(lf.data(), g.data(), mu.data(), lf.size());
}

namespace {

// Interior index map: -1 for Dirichlet vertices.
std::vector<int> interior_index(const Model& m, const std::vector<int>& interior) {
    std::vector<int> idx(m.n, -1);
    for (int i = 0; i < static_cast<int>(interior.size()); ++i) idx[interior[i]] = i;
    return idx;
}

// Per-interior-vertex killing rate b(x) = sum_{y in boundary} w_xy / mu(x).
Vec killing_rates(const Model& m, const std::vector<int>& interior, const std::vector<int>& idx) {
    Vec b = Vec::Zero(interior.size());
    for (const Edge& e : m.edges) {
        const bool bu = idx[e.u] < 0, bv = idx[e.v] < 0;
        if (bu && !bv) b[idx[e.v]] += e.w / m.mu[e.v];
        if (bv && !bu) b[idx[e.u]] += e.w / m.mu[e.u];
    }
    return b;
}

} // namespace

Generator build_graph_laplacian(const Model& m) {
    m.validate();
    const auto interior = m.interior();
    const auto idx = interior_index(m, interior);
    const int ni = static_cast<int>(interior.size());

    Generator g;
    g.kind = GeneratorKind::GraphLaplacian;
    g.vertex_ids = interior;
    g.mu.resize(ni);
    for (int i = 0; i < ni; ++i) g.mu[i] = m.mu[interior[i]];

    g.matrix = Mat::Zero(ni, ni);
    for (const Edge& e : m.edges) {
        const int iu = idx[e.u], iv = idx[e.v];
        if (iu >= 0 && iv >= 0) {
            g.matrix(iu, iu) += e.w / m.mu[e.u];
            g.matrix(iv, iv) += e.w / m.mu[e.v];
            g.matrix(iu, iv) -= e.w / m.mu[e.u];
            g.matrix(iv, iu) -= e.w / m.mu[e.v];
        } else if (iu >= 0) {
            g.matrix(iu, iu) += e.w / m.mu[e.u];   // edge into the absorbed boundary
        } else if (iv >= 0) {
            g.matrix(iv, iv) += e.w / m.mu[e.v];
        }
    }
    if (m.potential.size() == m.n)
        for (int i = 0; i < ni; ++i) g.matrix(i, i) += m.potential[interior[i]];
    return g;
}

Generator build_schrodinger(const Model& m, const Vec& V) {
    if (V.size() != m.n) throw ValidationError("schrodinger: potential has wrong length");
    for (int i = 0; i < m.n; ++i)
        if (!(V[i] >= 0.0)) throw ValidationError("schrodinger: potential must be nonnegative");
    Model withV = m;
    withV.potential = V;
    Generator g = build_graph_laplacian(withV);
    g.kind = GeneratorKind::Schrodinger;
    return g;
}

Model grid_model(const GridSpec& g) {
    if (g.dims.empty() || g.dims.size() > 2)
        throw ValidationError("grid: dims must be {nx} or {nx, ny}");
    for (int d : g.dims)
        if (d < 1) throw ValidationError("grid: dimensions must be >= 1");
    if (!(g.h > 0.0)) throw ValidationError("grid: spacing must be positive");

    const int nx = g.dims[0];
    const int ny = g.dims.size() == 2 ? g.dims[1] : 1;

    Model m;
    m.n = nx * ny;
    m.mu = Vec::Ones(m.n);
    m.potential = Vec::Zero(m.n);

    auto vid = [nx](int ix, int iy) { return iy * nx + ix; };

    // x-direction edges row-major, then y-direction edges
    std::vector<std::pair<int, int>> pairs;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix + 1 < nx; ++ix) pairs.emplace_back(vid(ix, iy), vid(ix + 1, iy));
    for (int iy = 0; iy + 1 < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) pairs.emplace_back(vid(ix, iy), vid(ix, iy + 1));

    const int ne = static_cast<int>(pairs.size());
    if (g.coeff.size() != 0 && g.coeff.size() != ne)
        throw ValidationError("grid: coefficient field must have one entry per edge");

    const double inv_h2 = 1.0 / (g.h * g.h);
    for (int e = 0; e < ne; ++e) {
        const double a = g.coeff.size() ? g.coeff[e] : g.coeff_const;
        if (!(a > 0.0)) throw ValidationError("grid: coefficients must be strictly positive");
        m.edges.push_back({pairs[e].first, pairs[e].second, a * inv_h2});
    }

    if (g.dirichlet) {
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix)
                if (ix == 0 || ix == nx - 1 || (ny > 1 && (iy == 0 || iy == ny - 1)))
                    m.dirichlet.push_back(vid(ix, iy));
    }
    return m;
}

Generator build_divergence_form(const GridSpec& g) {
    Model m = grid_model(g);
    Generator gen = build_graph_laplacian(m);
    gen.kind = GeneratorKind::DivergenceForm;
    gen.ellipticity = g.coeff.size() ? g.coeff.minCoeff() : g.coeff_const;
    return gen;
}

CarreOperator make_carre(const Model& m, CarreMode mode) {
    m.validate();
    const auto interior = m.interior();
    const auto idx = interior_index(m, interior);
    const int ni = static_cast<int>(interior.size());
    const Vec b = killing_rates(m, interior, idx);

    // channels per interior vertex, gradient first then killing
    std::vector<std::vector<CarreChannel>> per_vertex(ni);
    if (mode != CarreMode::PotentialOnly) {
        for (const Edge& e : m.edges) {
            const int iu = idx[e.u], iv = idx[e.v];
            if (iu >= 0 && iv >= 0) {
                per_vertex[iu].push_back({iu, iv, std::sqrt(0.5 * e.w / m.mu[e.u])});
                per_vertex[iv].push_back({iv, iu, std::sqrt(0.5 * e.w / m.mu[e.v])});
            }
        }
    }
    if (mode != CarreMode::GradientOnly) {
        for (int i = 0; i < ni; ++i) {
            const double q = (m.potential.size() == m.n ? m.potential[interior[i]] : 0.0) + b[i];
            if (q > 0.0) per_vertex[i].push_back({i, -1, std::sqrt(q)});
        }
    }

    CarreOperator op;
    op.mode = mode;
    op.n = ni;
    op.vertex_offset.assign(ni + 1, 0);
    for (int i = 0; i < ni; ++i) {
        op.vertex_offset[i] = static_cast<int>(op.channels.size());
        for (const CarreChannel& c : per_vertex[i]) op.channels.push_back(c);
    }
    op.vertex_offset[ni] = static_cast<int>(op.channels.size());
    return op;
}

void CarreOperator::channel_values_into(const double* f, double* out) const {
    const std::size_t nc = channels.size();
    for (std::size_t c = 0; c < nc; ++c) {
        const CarreChannel& ch = channels[c];
        out[c] = ch.other < 0 ? ch.coeff * f[ch.vertex]
                              : ch.coeff * (f[ch.vertex] - f[ch.other]);
    }
}

std::vector<double> CarreOperator::channel_values(const Vec& f) const {
    if (f.size() != n) throw ValidationError("carre: vector length mismatch");
    std::vector<double> out(channels.size());
    channel_values_into(f.data(), out.data());
    return out;
}

Vec CarreOperator::group_modulus_sq(const double* vals) const {
    Vec msq = Vec::Zero(n);
    for (int x = 0; x < n; ++x) {
        double s = 0.0;
        for (int c = vertex_offset[x]; c < vertex_offset[x + 1]; ++c) s += vals[c] * vals[c];
        msq[x] = s;
    }
    return msq;
}

Vec CarreOperator::modulus_sq(const Vec& f) const {
    const auto vals = channel_values(f);
    return group_modulus_sq(vals.data());
}

Vec CarreOperator::modulus(const Vec& f) const { return modulus_sq(f).cwiseSqrt(); }

Mat CarreOperator::apply_to_columns(const Mat& U) const {
    Mat R(channels.size(), U.cols());
    for (int k = 0; k < U.cols(); ++k) {
        Vec col = U.col(k);
        std::vector<double> vals(channels.size());
        channel_values_into(col.data(), vals.data());
        for (std::size_t c = 0; c < vals.size(); ++c) R(static_cast<int>(c), k) = vals[c];
    }
    return R;
}

SubmarkovReport verify_submarkov(const Generator& g) {
    const Mat& L = g.matrix;
    const int n = g.n();
    SubmarkovReport r;

    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::fabs(g.mu[i] * L(i, j)));
    if (scale == 0.0) scale = 1.0;

    double worst_sym = 0.0, worst_off = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            worst_sym = std::max(worst_sym,
                                 std::fabs(g.mu[i] * L(i, j) - g.mu[j] * L(j, i)) / scale);
            worst_off = std::max(worst_off, L(i, j));
        }
    }
    r.worst_self_adjoint = worst_sym;
    r.mu_self_adjoint = worst_sym <= 1e-12;
    r.worst_offdiag = worst_off;
    r.offdiag_nonpositive = worst_off <= 1e-12 * scale;

    const Vec row_sums = L * Vec::Ones(n);
    r.worst_rowsum = row_sums.minCoeff();
    r.rowsum_nonnegative = r.worst_rowsum >= -1e-12 * scale;

    // Eigenvalues of the symmetrized matrix D^{1/2} L D^{-1/2}
    Mat B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            B(i, j) = std::sqrt(g.mu[i] / g.mu[j]) * L(i, j);
    Mat Bs = 0.5 * (B + B.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(Bs, Eigen::EigenvaluesOnly);
    r.min_eigenvalue = es.eigenvalues().minCoeff();
    r.max_eigenvalue = es.eigenvalues().maxCoeff();
    r.psd = r.min_eigenvalue >= -1e-10 * std::max(r.max_eigenvalue, 0.0) - 1e-300;
    return r;
}

AlphaMeasurement measure_alpha_p(const Generator& g, const CarreOperator& gamma, double p,
                                 const std::vector<Vec>& corpus) {
    if (!(p > 1.0 && p <= 2.0)) throw ValidationError("measure_alpha_p: p must lie in (1, 2]");
    if (corpus.empty()) throw ValidationError("measure_alpha_p: empty corpus");
    const int n = g.n();

    AlphaMeasurement out;
    out.alpha = std::numeric_limits<double>::infinity();

    // Rounding-noise scale of the numerator per vertex: evaluating L(f^p)
    // cancels terms of size ||f||_inf^p sum_y |L_xy|, so ratios whose
    // denominator sits near that floor are numerically meaningless and the
    // vertex counts as inactive (Gamma f indistinguishable from 0 there).
    const Vec rowabs = g.matrix.cwiseAbs() * Vec::Ones(n);

    for (std::size_t ci = 0; ci < corpus.size(); ++ci) {
        const Vec& f = corpus[ci];
        if (f.size() != n) throw ValidationError("measure_alpha_p: corpus vector length mismatch");
        for (int i = 0; i < n; ++i)
            if (!(f[i] > 0.0))
                throw ValidationError("measure_alpha_p: corpus vectors must be strictly positive");

        const Vec lf = g.matrix * f;
        const Vec fp = f.array().pow(p).matrix();
        const Vec lfp = g.matrix * fp;
        const Vec msq = gamma.modulus_sq(f);
        const double supf_p = std::pow(f.maxCoeff(), p);

        for (int x = 0; x < n; ++x) {
            const double denom = std::pow(f[x], p - 2.0) * msq[x];
            const double noise_floor = 1e9 * 2.3e-16 * supf_p * (rowabs[x] + 1e-300);
            if (!(denom > noise_floor)) continue;
            const double numer = p * std::pow(f[x], p - 1.0) * lf[x] - lfp[x];
            const double ratio = numer / denom;
            if (ratio < out.alpha) {
                out.alpha = ratio;
                out.witness_corpus_index = static_cast<int>(ci);
                out.witness_vertex = x;
            }
            out.any_active = true;
        }
    }
    if (!out.any_active) out.alpha = 0.0;
    return out;
}

double l_power_integral(const Generator& g, const Vec& f, double p) {
    if (f.size() != g.n()) throw ValidationError("l_power_integral: vector length mismatch");
    for (int i = 0; i < g.n(); ++i)
        if (!(f[i] >= 0.0)) throw ValidationError("l_power_integral: f must be nonnegative");
    const Vec fp = f.array().pow(p).matrix();
    const Vec lfp = g.matrix * fp;
    const Vec ones = Vec::Ones(g.n());
    return kernels::wdot(lfp.data(), ones.data(), g.mu.data(), g.n());
}

} // namespace lps
