#pragma once

#include "lps/common.hpp"
#include "lps/functionals.hpp"
#include "lps/model.hpp"
#include "lps/rng.hpp"
#include "lps/spectral.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lps {

enum class FamilyKind { SqrtTGammaSemigroup, SqrtTGammaResolvent, CustomSymbol };

/// Family {sqrt(t) Gamma g(tL), t > 0} with g = e^{-z}, (1+z)^{-delta} or a
/// custom symbol. Members map vertex vectors to channel fields.
struct OperatorFamily {
    FamilyKind kind = FamilyKind::SqrtTGammaSemigroup;
    double delta = 1.0;   // resolvent exponent (> 1/2 for the equivalence)
    Symbol custom;
    const SpectralDecomposition* dec = nullptr;
    const CarreOperator* gamma = nullptr;

    double member_gain(double t, double lambda) const;   // sqrt(t) g(t lambda)
    /// sqrt(t) Gamma(g(tL) f) as a channel field.
    std::vector<double> apply(double t, const Vec& f) const;

    static OperatorFamily semigroup_family(const SpectralDecomposition& d, const CarreOperator& g);
    static OperatorFamily resolvent_family(const SpectralDecomposition& d, const CarreOperator& g,
                                           double delta);
    static OperatorFamily custom_family(const SpectralDecomposition& d, const CarreOperator& g,
                                        Symbol F);
};

enum class RademacherMode { Exact, MonteCarlo };

struct RademacherEstimate {
    double value = 0.0;
    double std_error = 0.0;        // 0 in exact mode
    std::uint64_t evaluations = 0; // 2^m patterns or MC samples
};

/// mu-weighted p-norm of a raw field; grouped per vertex into l2 moduli when
/// `gamma` is set (channel fields), entrywise otherwise (vertex fields).
struct FieldNorm {
    const CarreOperator* gamma = nullptr;
    const Vec* mu = nullptr;
    double p = 2.0;
    double operator()(const double* data, std::size_t len) const;
};

/// E || sum_k r_k fields[k] ||_p over Rademacher signs r_k. Exact mode
/// enumerates all 2^m sign patterns (m <= 16); Monte Carlo averages
/// mc_samples (>= 1000) draws and reports the standard error of the mean.
RademacherEstimate rademacher_norm(const std::vector<std::vector<double>>& fields,
                                   const FieldNorm& norm, RademacherMode mode,
                                   int mc_samples = 100000,
                                   std::uint64_t seed = 1);

struct RboundSearchSpec {
    int restarts = 32;
    int steps = 100;
    std::uint64_t seed = 1;
    double t_min = 0.0;   // 0 = auto
    double t_max = 0.0;
};

struct RboundEstimate {
    double value = 0.0;               // best square-function ratio found
    std::vector<double> ts;           // witness member parameters
    std::vector<Vec> fs;              // witness vectors (vertex space)
    RademacherMode mode = RademacherMode::Exact;
    std::uint64_t seed = 0;
    int m = 0;
    double p = 2.0;
    std::vector<double> restart_best; // best-so-far after each restart
};

/// Lower estimate of the R-bound of `family` on L^p in the square-function
/// normalization ||(sum |T_k f_k|^2)^(1/2)||_p / ||(sum |f_k|^2)^(1/2)||_p,
/// via seeded random restarts + coordinate ascent over (t_k, f_k).
RboundEstimate estimate_rbound(const OperatorFamily& family, double p, int m,
                               const RboundSearchSpec& search);

/// Recompute the ratio of a stored witness (re-verification path).
double rbound_witness_ratio(const OperatorFamily& family, double p,
                            const std::vector<double>& ts, const std::vector<Vec>& fs);

/// Vertical square function (int_0^inf |G(tL) f|^2 dt/t)^(1/2) per vertex.
/// Needs G(0) = 0 with positive decay at 0 and decay at infinity; uses the
/// per-mode closed form when G carries one, else log-t quadrature.
LpsResult square_function(const SpectralDecomposition& dec, const Symbol& G, const Vec& f,
                          const QuadratureSpec& quad = {});

struct FamilyComparison {
    RboundEstimate semigroup;
    RboundEstimate resolvent;
    double ratio = 0.0;               // semigroup.value / resolvent.value
    bool semigroup_trending = false;  // estimate still growing across restarts
    bool resolvent_trending = false;
};

/// Paired estimates for {sqrt(t) Gamma e^{-tL}} and {sqrt(t) Gamma (1+tL)^{-delta}},
/// delta > 1/2.
FamilyComparison compare_families(const SpectralDecomposition& dec, const CarreOperator& gamma,
                                  double p, double delta, int m, const RboundSearchSpec& search);

} // namespace lps
