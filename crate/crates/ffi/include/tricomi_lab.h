#ifndef TRICOMI_LAB_H
#define TRICOMI_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Active branch of a max-of-two critical exponent.
 */
typedef enum TlCritBranch {
  TlBranchStrauss = 0,
  TlBranchFujita = 1,
  TlBranchP1 = 2,
  TlBranchP2 = 3,
} TlCritBranch;

/**
 * ν-selection branch of the admissibility rule.
 */
typedef enum TlNuBranch {
  TlNuEqualsP = 0,
  TlNuPlusOneThird = 1,
  TlNuCappedAtQBound = 2,
} TlNuBranch;

/**
 * Hypothesis flag of the inhomogeneous endpoint exponent.
 */
typedef enum TlQ0Hypothesis {
  TlQ0GlobalInTime = 0,
  TlQ0FiniteHorizon = 1,
  TlQ0Neither = 2,
} TlQ0Hypothesis;

/**
 * Regime labels of the 2-D classifier.
 */
typedef enum TlRegime {
  TlRegimeBlowupKnown = 0,
  TlRegimeGlobalThm11i = 1,
  TlRegimeGlobalThm11ii = 2,
  TlRegimeGlobalThm12 = 3,
  TlRegimeGlobalForthcoming = 4,
  TlRegimeMuEqualsOneOpen = 5,
  TlRegimeUnclassified = 6,
} TlRegime;

/**
 * Status codes returned by every fallible call.
 */
typedef enum TlStatus {
  TlStatusOk = 0,
  /**
   * Parameters outside the documented domain.
   */
  TlStatusDomain = 1,
  TlStatusNullPointer = 2,
  /**
   * Root bracketing failed.
   */
  TlStatusBracket = 3,
  /**
   * Constraint system infeasible for the requested substitution.
   */
  TlStatusInfeasible = 4,
  /**
   * Index out of range.
   */
  TlStatusRange = 5,
} TlStatus;

/**
 * Opaque admissibility result: a selected or checked `(q, ν)` pair with the
 * residuals of every constraint.
 */
typedef struct TlAdmissiblePair TlAdmissiblePair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static, NUL-terminated string.
 */
const char *tl_version(void);

/**
 * Strauss exponent `p_s(z)`, the positive root of `(z-1)p² - (z+1)p - 2`.
 */
enum TlStatus tl_strauss_exponent(double z, double *out);

/**
 * Fujita exponent `p_f(n) = 1 + 2/n`.
 */
enum TlStatus tl_fujita_exponent(uint32_t n, double *out);

/**
 * Strauss/Fujita crossover damping `μ̄(n)`.
 */
enum TlStatus tl_mu_bar(uint32_t n, double *out);

/**
 * `p_crit(n, μ) = max{p_s(n+μ), p_f(n)}` with the active branch.
 */
enum TlStatus tl_p_crit_damped(uint32_t n,
                               double mu,
                               double *out_value,
                               enum TlCritBranch *out_branch);

/**
 * `p_crit(2, m, α) = max{p₁, p₂}` with the active branch.
 */
enum TlStatus tl_p_crit_tricomi(double m,
                                double alpha,
                                double *out_value,
                                enum TlCritBranch *out_branch);

/**
 * Conformal exponent `p_conf(2, m, α) = (m + 2α + 5)/(m + 1)`.
 */
enum TlStatus tl_p_conf_tricomi(double m, double alpha, double *out);

/**
 * Conformal exponent `p_conf(2, μ) = (μ+5)/(μ+1)`, `μ ∈ (0,1)∪(1,2)`.
 */
enum TlStatus tl_p_conf_damped(double mu, double *out);

/**
 * Endpoint exponent `q₀ = 2(m+3+α)/(m+1)` and its hypothesis flag.
 */
enum TlStatus tl_q0_endpoint(double m,
                             double alpha,
                             double *out_q0,
                             enum TlQ0Hypothesis *out_hypothesis);

/**
 * Homogeneous endpoint `q̃₀ = (2m+6)/(m+1-2β)` for `0 < β <= m/4`.
 */
enum TlStatus tl_q_tilde0(double m, double beta, double *out);

/**
 * Weight-exponent window: `gamma_lo < γ < gamma_hi`, δ bound at the γ
 * midpoint, and an emptiness flag (nonempty iff `p > p₂(m, α)`).
 */
enum TlStatus tl_gamma_delta_ranges(double m,
                                    double alpha,
                                    double p,
                                    double *out_gamma_lo,
                                    double *out_gamma_hi,
                                    double *out_delta_hi,
                                    int32_t *out_empty);

/**
 * Threshold constants recovered by root finding: μ₁, m₁, and the
 * `p₁(m) = m+2` crossover.
 */
enum TlStatus tl_threshold_constants(double *out_mu1, double *out_m1, double *out_m_p1_crossover);

/**
 * Classify `(n, μ, p)`; `out_nu_choice` is NaN when the regime carries none.
 */
enum TlStatus tl_classify_damped(uint32_t n,
                                 double mu,
                                 double p,
                                 enum TlRegime *out_regime,
                                 double *out_nu_choice);

/**
 * `(μ, p) -> (m, α, amplitude power)` for `μ ∈ (0,1)∪(1,2)`.
 */
enum TlStatus tl_damped_to_tricomi(double mu,
                                   double p,
                                   double *out_m,
                                   double *out_alpha,
                                   double *out_amplitude_power);

/**
 * `(m, α, p) -> (μ, amplitude power, residual forcing power)`.
 */
enum TlStatus tl_tricomi_to_damped(double m,
                                   double alpha,
                                   double p,
                                   double *out_mu,
                                   double *out_amplitude_power,
                                   double *out_residual_forcing_power);

/**
 * Degenerate characteristic `φ_m(t)`.
 */
double tl_phi_m(double m, double t);

/**
 * Damped-side light-cone radius `ψ_μ(t)` (NaN at μ = 1).
 */
double tl_psi_mu(double mu, double t);

/**
 * Decay power `θ(μ, p)` (domain error outside `(0,1)∪(1,2)`).
 */
enum TlStatus tl_theta_exponent(double mu, double p, double *out);

/**
 * Run the ν-selection rule at `(m, p)` and verify the full restriction
 * system. On success the caller owns the returned handle and must release
 * it with `tl_admissible_free`.
 */
enum TlStatus tl_admissible_select(double m, double p, struct TlAdmissiblePair **out);

/**
 * Evaluate the restriction system on an explicit `(q, ν)` pair.
 */
enum TlStatus tl_admissible_check(double m,
                                  double p,
                                  double q,
                                  double nu,
                                  struct TlAdmissiblePair **out);

/**
 * q of the pair.
 */
enum TlStatus tl_admissible_q(const struct TlAdmissiblePair *h, double *out);

/**
 * ν of the pair.
 */
enum TlStatus tl_admissible_nu(const struct TlAdmissiblePair *h, double *out);

/**
 * 1 when every constraint is satisfied within tolerance.
 */
enum TlStatus tl_admissible_feasible(const struct TlAdmissiblePair *h, int32_t *out);

/**
 * Selection branch; `TlStatusRange` for handles from an explicit check.
 */
enum TlStatus tl_admissible_branch(const struct TlAdmissiblePair *h, enum TlNuBranch *out);

/**
 * Number of recorded constraint residuals.
 */
enum TlStatus tl_admissible_residual_count(const struct TlAdmissiblePair *h, uintptr_t *out);

/**
 * Residual value by index; `kind` is 0 equality, 1 inequality slack,
 * 2 strict slack.
 */
enum TlStatus tl_admissible_residual(const struct TlAdmissiblePair *h,
                                     uintptr_t index,
                                     double *out_value,
                                     int32_t *out_kind);

/**
 * Static name of the residual at `index` (NUL-terminated, borrowed).
 */
const char *tl_admissible_residual_name(const struct TlAdmissiblePair *h, uintptr_t index);

/**
 * Release a handle from `tl_admissible_select`/`tl_admissible_check`.
 *
 * # Safety
 * `h` must be a pointer returned by those constructors, not yet freed;
 * null is a no-op.
 */
void tl_admissible_free(struct TlAdmissiblePair *h);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TRICOMI_LAB_H */
