#pragma once

#include "lps/common.hpp"

#include <string>
#include <vector>

namespace lps {

struct Edge {
    int u = 0;
    int v = 0;
    double w = 0.0;
};

/// Finite weighted graph with vertex measure, killing potential and an
/// optional set of Dirichlet-absorbed boundary vertices.
struct Model {
    int n = 0;
    Vec mu;                       // per-vertex measure, all > 0
    std::vector<Edge> edges;      // no self-loops, no duplicates, w > 0
    Vec potential;                // V(x) >= 0
    std::vector<int> dirichlet;   // absorbed vertices
    std::string name;             // id used in reports

    /// Throws ValidationError on any violated structural invariant.
    void validate() const;

    /// Sorted interior (non-Dirichlet) vertex ids; throws if empty.
    std::vector<int> interior() const;

    bool is_dirichlet(int v) const;

    /// Vertices whose edge component contains no interior vertex; they play
    /// no role in the generator and are surfaced in validation reports.
    std::vector<int> disconnected_from_interior() const;
};

enum class GeneratorKind { GraphLaplacian, Schrodinger, DivergenceForm };

const char* to_string(GeneratorKind k);

/// Matrix of the generator restricted to interior vertices, self-adjoint in
/// the mu-weighted inner product.
struct Generator {
    Mat matrix;                     // interior x interior
    Vec mu;                         // interior measure weights
    GeneratorKind kind = GeneratorKind::GraphLaplacian;
    std::vector<int> vertex_ids;    // interior index -> model vertex id
    double ellipticity = 0.0;       // recorded eta for divergence-form builds

    int n() const { return static_cast<int>(matrix.rows()); }

    /// Wraps an arbitrary matrix for inspection (verify_submarkov etc.);
    /// performs no checks itself.
    static Generator from_matrix(Mat m, Vec mu, GeneratorKind kind = GeneratorKind::GraphLaplacian);

    Vec apply(const Vec& f) const { return matrix * f; }

    /// <Lf, g>_mu
    double dirichlet_form(const Vec& f, const Vec& g) const;
};

enum class CarreMode { GradientOnly, PotentialOnly, Full };

const char* to_string(CarreMode m);
CarreMode carre_mode_from_string(const std::string& s);

/// One scalar channel of Gamma at a vertex. Gradient channels evaluate
/// coeff*(f[vertex]-f[other]); killing channels evaluate coeff*f[vertex].
struct CarreChannel {
    int vertex = 0;
    int other = -1;      // -1 for killing channels
    double coeff = 0.0;
};

/// Discrete carre-du-champ operator: per-vertex channel lists whose l2 norm
/// is |Gamma f|(x). Gradient channel for edge (x,y): sqrt(w_xy/(2 mu(x)))
/// (f(x)-f(y)); killing channel: sqrt(V(x)+b(x)) f(x) with b the Dirichlet
/// killing rate. With this normalization full mode satisfies
/// sum_x mu(x)|Gamma f|(x)^2 = <Lf,f>_mu exactly.
struct CarreOperator {
    CarreMode mode = CarreMode::Full;
    int n = 0;
    std::vector<CarreChannel> channels;   // sorted by vertex
    std::vector<int> vertex_offset;       // size n+1, channel range per vertex

    int channel_count() const { return static_cast<int>(channels.size()); }

    std::vector<double> channel_values(const Vec& f) const;
    void channel_values_into(const double* f, double* out) const;

    Vec modulus_sq(const Vec& f) const;   // |Gamma f|(x)^2
    Vec modulus(const Vec& f) const;      // |Gamma f|(x)

    /// Collapse a channel-indexed array to per-vertex squared modulus.
    Vec group_modulus_sq(const double* channel_vals) const;

    /// Dense matrix with rows = channels applied to the columns of U.
    Mat apply_to_columns(const Mat& U) const;
};

Generator build_graph_laplacian(const Model& m);

/// Graph Laplacian of `m` with potential replaced by V (V >= 0).
Generator build_schrodinger(const Model& m, const Vec& V);

/// 1D/2D finite-difference divergence-form operator on a regular grid.
struct GridSpec {
    std::vector<int> dims;   // {nx} or {nx, ny}, counts include boundary
    Vec coeff;               // per-edge coefficient A(e) (size = edge count), or
    double coeff_const = 1.0; // constant coefficient when coeff is empty
    double h = 1.0;          // grid spacing
    bool dirichlet = false;  // true: boundary ring absorbed; false: Neumann
};

/// Vertex/edge layout of a grid: vertices in row-major order; for 2D, all
/// x-direction edges first (row-major), then y-direction edges.
Model grid_model(const GridSpec& g);

Generator build_divergence_form(const GridSpec& g);

CarreOperator make_carre(const Model& m, CarreMode mode);

struct SubmarkovReport {
    bool mu_self_adjoint = false;
    bool offdiag_nonpositive = false;
    bool rowsum_nonnegative = false;
    bool psd = false;
    double worst_self_adjoint = 0.0; // relative asymmetry
    double worst_offdiag = 0.0;      // most positive off-diagonal entry
    double worst_rowsum = 0.0;       // most negative (L 1)(x)
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    bool pass() const {
        return mu_self_adjoint && offdiag_nonpositive && rowsum_nonnegative && psd;
    }
};

SubmarkovReport verify_submarkov(const Generator& g);

struct AlphaMeasurement {
    double alpha = 0.0;
    int witness_corpus_index = -1;
    int witness_vertex = -1;
    bool any_active = false;   // false: Gamma f vanished everywhere on the corpus
};

/// Largest alpha_p valid on the given corpus of strictly positive vectors:
/// inf over corpus and vertices of (p f^{p-1} Lf - L(f^p)) / (f^{p-2}|Gamma f|^2),
/// vertices with |Gamma f|(x) = 0 skipped.
AlphaMeasurement measure_alpha_p(const Generator& g, const CarreOperator& gamma, double p,
                                 const std::vector<Vec>& corpus);

/// sum_x mu(x) (L f^p)(x) for f >= 0; nonnegative for sub-Markovian L,
/// exactly zero for conservative generators.
double l_power_integral(const Generator& g, const Vec& f, double p);

} // namespace lps
