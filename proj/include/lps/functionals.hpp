#pragma once

#include "lps/common.hpp"
#include "lps/model.hpp"
#include "lps/spectral.hpp"

#include <map>
#include <vector>

namespace lps {

/// Discretization of int_0^inf ... dt: Gauss-Legendre panels in log t over
/// [t_min, t_max] plus an exact head panel on [0, t_min]; the truncated tail
/// beyond t_max is bounded analytically from the symbol's declared decay and
/// reported in the error estimate.
struct QuadratureSpec {
    int nodes = 160;        // total log-panel node budget (>= 16)
    double t_min = 0.0;     // 0 = auto: 1e-3 / lambda_max
    double t_max = 0.0;     // 0 = auto: 1e+3 / lambda_min_pos
    void validate() const;
};

struct LpsResult {
    Vec values;                       // per-vertex H(f)(x) >= 0
    std::map<double, double> p_norms; // p -> mu-weighted p-norm of values
    double quadrature_error_estimate = 0.0;
    bool warning = false;             // error estimate above 1e-4 relative
};

/// Default report grid {1.1, 1.25, 1.5, 1.75, 2}.
const std::vector<double>& default_p_grid();

/// Reusable pieces for the closed-form H_Gamma evaluation on a fixed
/// (decomposition, Gamma) pair: channel images of the non-kernel eigenvectors
/// and the square root of the Cauchy matrix 1/(lambda_j + lambda_k).
class HGammaPlan {
public:
    HGammaPlan(const SpectralDecomposition& dec, const CarreOperator& gamma);

    /// H_Gamma(f)(x)^2 = sum_{j,k} c_j c_k <Gamma u_j, Gamma u_k>(x) / (lambda_j+lambda_k)
    LpsResult eval(const Vec& f) const;

    const Mat& channel_modes() const { return R_; }

private:
    const SpectralDecomposition* dec_;
    const CarreOperator* gamma_;
    Mat R_;       // channels x positive modes
    Mat sqrtM_;   // symmetric square root of the Cauchy matrix
};

/// Closed-form H_Gamma(f) (F = e^{-z}), no quadrature.
LpsResult h_gamma_exact(const SpectralDecomposition& dec, const CarreOperator& gamma,
                        const Vec& f);

/// Quadrature evaluation of H^F_Gamma(f) = (int_0^inf |Gamma F(tL) f|^2 dt)^{1/2}.
/// Refuses (DivergenceError) when F.delta_infinity <= 1/2.
LpsResult h_gamma_F(const SpectralDecomposition& dec, const CarreOperator& gamma,
                    const Symbol& F, const Vec& f, const QuadratureSpec& quad = {});

/// Log grid for sup_t sampling.
struct TimeGrid {
    double t_min = 0.0;          // 0 = auto
    double t_max = 0.0;          // 0 = auto
    int points_per_decade = 200;
    std::vector<double> points(const SpectralDecomposition& dec) const;
};

/// M(f)(x) = sup_t |e^{-tL} f|(x), sampled on the grid with the exact t -> 0
/// (|f|) and t -> inf (|Pf|) endpoints included.
Vec maximal_function(const SpectralDecomposition& dec, const Vec& f, const TimeGrid& grid = {});

/// Meyer's subordinated functional
/// S(f)(x) = (int_0^inf (e^{-tL} |Gamma e^{-tL} f|^2)(x) dt)^{1/2}.
LpsResult meyer_S(const SpectralDecomposition& dec, const CarreOperator& gamma, const Vec& f,
                  const QuadratureSpec& quad = {});

struct GradientBoundFit {
    double c_theta = 0.0;          // smallest empirical constant
    double witness_t = 0.0;
    int witness_vertex = -1;
    int witness_corpus_index = -1;
    bool growing_in_t = false;     // ratio still rising at the largest sampled t
};

/// Fit of |Gamma e^{-tL} f|^2 <= c_theta e^{-theta t L} |Gamma f|^2 over a
/// corpus and a t-grid (t = 0 included exactly); a fit, never an assertion.
GradientBoundFit fit_gradient_bound(const SpectralDecomposition& dec, const CarreOperator& gamma,
                                    double theta, const std::vector<Vec>& corpus,
                                    const TimeGrid& grid = {});

} // namespace lps
