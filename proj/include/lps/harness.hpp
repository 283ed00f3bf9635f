#pragma once

#include "lps/common.hpp"
#include "lps/functionals.hpp"
#include "lps/model.hpp"
#include "lps/rng.hpp"
#include "lps/spectral.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace lps {

/// Enforces 1/p0 + 1/p1 = 2/p to 1e-12.
void validate_holder_triple(double p, double p0, double p1);

struct HarnessSearchSpec {
    int steps = 60;
    double fd_step = 1e-5;               // central-difference h = fd_step * ||f||
    double min_rel_improvement = 1e-10;  // stop threshold on the log objective
    int corpus_seeds = 5;                // top corpus entries used as ascent starts
    std::uint64_t seed = 1;
};

/// rho(f) = ||Gamma f||_p^2 / (||L^{1/2+eps} f||_p0 ||L^{1/2-eps} f||_p1),
/// evaluated on (I-P)f. Direct (vertex-space) route; the search uses the
/// cached coefficient-space evaluator below and the two must agree.
double riesz_ratio(const SpectralDecomposition& dec, const CarreOperator& gamma, const Vec& f,
                   double p, double p0, double p1, double eps);

/// Product-of-norms objective sum_i e_i log || group-moduli(A_i c) ||_{p_i,mu}
/// over coefficient vectors c, with incremental per-coordinate finite
/// differences (each field keeps its base image of c).
class ProductObjective {
public:
    struct Field {
        Mat A;                                 // rows x dim
        std::vector<int> group_offset;         // empty: entrywise field
        Vec mu;                                // one weight per group/entry
        double p = 2.0;
        double exponent = 1.0;
    };

    explicit ProductObjective(std::vector<Field> fields);

    int dim() const { return dim_; }
    bool admissible(const Vec& c) const;   // all norms strictly positive
    double eval(const Vec& c) const;       // log objective
    Vec fd_gradient(const Vec& c, double h) const;

private:
    double field_norm(const Field& f, const Vec& y) const;
    std::vector<Field> fields_;
    int dim_ = 0;
};

struct AscentTrace {
    int iterations = 0;
    int improvements = 0;
    bool converged = false;
};

/// Projected gradient ascent of `obj` over the unit sphere: central
/// finite-difference gradient, step halving on non-improvement, stop after
/// `steps` iterations or when the relative improvement drops below the
/// configured threshold. Returns (c*, log value); the value never decreases.
std::pair<Vec, double> extremal_search(const ProductObjective& obj, Vec c0,
                                       const HarnessSearchSpec& spec, AscentTrace* trace);

/// Coefficient-space evaluator of the multiplicative ratio for one
/// (decomposition, Gamma, p, p0, p1, eps) tuple.
class RatioEvaluator {
public:
    RatioEvaluator(const SpectralDecomposition& dec, const CarreOperator& gamma, double p,
                   double p0, double p1, double eps);

    int dim() const { return obj_->dim(); }
    const ProductObjective& objective() const { return *obj_; }

    /// Non-kernel coefficients of f.
    Vec to_coeffs(const Vec& f) const;
    Vec to_vertex(const Vec& c) const;

    double ratio_of_coeffs(const Vec& c) const;
    /// Throws DomainError when f is (numerically) in ker L.
    double ratio_of_vertex(const Vec& f) const;

private:
    const SpectralDecomposition* dec_;
    std::unique_ptr<ProductObjective> obj_;
};

struct InequalityReport {
    std::string model_id;
    double p = 2, p0 = 2, p1 = 2, eps = 0.5;
    double max_ratio = 0.0;
    Vec witness;
    double corpus_mean = 0.0, corpus_median = 0.0, corpus_max = 0.0;
    int corpus_admissible = 0;
    bool no_admissible_corpus = false;
    int search_iterations = 0;
    int search_improvements = 0;
    bool search_converged = false;
    std::uint64_t seed = 0;
};

/// Evaluates the ratio over the corpus, then ascends from the top corpus
/// seeds; max_ratio is a lower estimate of the sharp constant.
InequalityReport verify_multiplicative(const SpectralDecomposition& dec,
                                       const CarreOperator& gamma, double p, double p0, double p1,
                                       double eps, const std::vector<Vec>& corpus,
                                       const HarnessSearchSpec& spec);

struct SweepRow {
    double param = 0.0;   // eps or n
    InequalityReport report;
};

std::vector<SweepRow> epsilon_sweep(const SpectralDecomposition& dec, const CarreOperator& gamma,
                                    double p, double p0, double p1,
                                    const std::vector<double>& eps_list,
                                    const std::vector<Vec>& corpus,
                                    const HarnessSearchSpec& spec);

/// Default eps grid {0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01}.
const std::vector<double>& default_eps_grid();

struct ModelFamilySpec {
    std::string kind = "path";   // "path" | "grid2d"
    std::vector<int> sizes;      // total vertex counts (path) or side lengths (grid2d)
    bool dirichlet = false;
};

struct SizeSweepOptions {
    int corpus_count = 64;
    CarreMode mode = CarreMode::Full;
    /// Embed the previous size's witness as an extra ascent seed (nested search).
    bool nest_witnesses = true;
};

std::vector<SweepRow> size_sweep(const ModelFamilySpec& family, double p, double p0, double p1,
                                 double eps, const SizeSweepOptions& opts,
                                 const HarnessSearchSpec& spec);

struct OpNormEstimate {
    double value = 0.0;
    Vec witness;
    int iterations = 0;
    bool converged = false;
    std::uint64_t seed = 0;
};

/// Lower estimate of || Gamma L^{-alpha} e^{-L} ||_{p->p} (applied to
/// (I-P)f) by ascent over the unit p-sphere; alpha in [0, 1/2).
OpNormEstimate gamma_smoothing_opnorm(const SpectralDecomposition& dec,
                                      const CarreOperator& gamma, double alpha, double p,
                                      const HarnessSearchSpec& spec);

struct ChainCheck {
    double lhs = 0.0;     // ||H_Gamma(f)||_p
    double rhs = 0.0;     // alpha^{-1/2} ||M f||_p^{(2-p)/2} ||f||_p^{p/2}
    double margin = 0.0;  // rhs - lhs
};

struct ChainReport {
    double p = 2.0;
    double alpha_p = 0.0;
    std::vector<ChainCheck> checks;
    double worst_margin_rel = 0.0;   // min margin / rhs
    bool pass = false;               // all margins >= -1e-8 rhs
};

/// Per-f check of the H_Gamma maximal-function chain with a measured alpha_p
/// (> 0 required). Corpus must be strictly positive.
ChainReport verify_hgamma_chain(const SpectralDecomposition& dec, const CarreOperator& gamma,
                                double p, double alpha_p, const std::vector<Vec>& corpus,
                                const TimeGrid& maximal_grid = {},
                                const HGammaPlan* plan = nullptr);

/// Same chain for several p at once; H(f) and M(f) are computed once per
/// corpus entry. ps and alpha_ps run in lockstep.
std::vector<ChainReport> verify_hgamma_chain_multi(const SpectralDecomposition& dec,
                                                   const CarreOperator& gamma,
                                                   const std::vector<double>& ps,
                                                   const std::vector<double>& alpha_ps,
                                                   const std::vector<Vec>& corpus,
                                                   const TimeGrid& maximal_grid = {},
                                                   const HGammaPlan* plan = nullptr);

struct CorpusSpec {
    int count = 100;
    bool strictly_positive = false;
    std::uint64_t seed = 1;
};

/// Mixed corpus: Gaussian coefficients in the eigenbasis, heat-smoothed
/// vertex noise (tau in {0.01, 0.1, 1}), and sigmoid bump profiles; strictly
/// positive variants exponentiate the sup-normalized field.
std::vector<Vec> make_corpus(const SpectralDecomposition& dec, const CorpusSpec& spec);

/// corpus plus its semigroup orbit samples e^{-tL} f on a coarse log grid
/// (positivity is preserved), for measuring alpha_p along trajectories.
std::vector<Vec> orbit_augment(const SpectralDecomposition& dec, const std::vector<Vec>& corpus,
                               int per_decade = 8);

} // namespace lps
