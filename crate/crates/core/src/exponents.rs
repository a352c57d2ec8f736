//! Critical, conformal, and threshold exponents for the damped wave equation
//! `u_tt - Δu + (μ/t) u_t = |u|^p` and the generalized Tricomi equation
//! `u_tt - t^m Δu = t^α |u|^p`, together with a regime classifier for the
//! known global-existence and blowup ranges (2-D).

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Serialize;

use crate::rootfind::{bisect_newton, quadratic_positive_root, BracketError};

pub const SQRT2_MINUS_1: f64 = std::f64::consts::SQRT_2 - 1.0;
/// Lower end of the mixed-norm theorem's μ-range, `2√2 - 1`.
pub const TWO_SQRT2_MINUS_1: f64 = 2.0 * std::f64::consts::SQRT_2 - 1.0;

#[derive(Debug, thiserror::Error)]
pub enum ExponentError {
    #[error("strauss exponent needs z > 1, got z = {0}")]
    StraussDomain(f64),
    #[error("damping coefficient must satisfy mu > 0, got mu = {0}")]
    MuNonPositive(f64),
    #[error("tricomi degeneracy must satisfy m > 0, got m = {0}")]
    MNonPositive(f64),
    #[error("forcing weight must satisfy alpha > -2, got alpha = {0}")]
    AlphaTooSmall(f64),
    #[error("conformal exponent is undefined at mu = 1 (Klein-Gordon case); mu in (0,1)∪(1,2) required, got mu = {0}")]
    MuOutsideConformalRange(f64),
    #[error("beta must satisfy 0 < beta <= m/4, got beta = {beta} with m = {m}")]
    BetaOutOfRange { m: f64, beta: f64 },
    #[error("nonlinearity power must satisfy p > 1, got p = {0}")]
    PTooSmall(f64),
    #[error("dimension must satisfy n >= 1, got n = {0}")]
    BadDimension(u32),
    #[error(transparent)]
    Bracket(#[from] BracketError),
    #[error("parameter tuple is inconsistent: {0}")]
    InconsistentParams(String),
}

/// Which equation the parameter tuple describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ModelForm {
    DampedWave,
    Tricomi,
}

/// One semilinear problem: `(n, μ, p)` in damped form or `(m, α, p)` in
/// Tricomi form. Exactly one of `mu` or `(m, alpha)` is authoritative,
/// selected by `form`.
#[derive(Clone, Debug, Serialize)]
pub struct ModelParams {
    pub n: u32,
    pub form: ModelForm,
    pub mu: Option<f64>,
    pub m: Option<f64>,
    pub alpha: Option<f64>,
    pub p: f64,
}

impl ModelParams {
    pub fn damped(n: u32, mu: f64, p: f64) -> Result<ModelParams, ExponentError> {
        if n < 1 {
            return Err(ExponentError::BadDimension(n));
        }
        if mu <= 0.0 {
            return Err(ExponentError::MuNonPositive(mu));
        }
        if p <= 1.0 {
            return Err(ExponentError::PTooSmall(p));
        }
        Ok(ModelParams {
            n,
            form: ModelForm::DampedWave,
            mu: Some(mu),
            m: None,
            alpha: None,
            p,
        })
    }

    pub fn tricomi(m: f64, alpha: f64, p: f64) -> Result<ModelParams, ExponentError> {
        if m <= 0.0 {
            return Err(ExponentError::MNonPositive(m));
        }
        if p <= 1.0 {
            return Err(ExponentError::PTooSmall(p));
        }
        Ok(ModelParams {
            n: 2,
            form: ModelForm::Tricomi,
            mu: None,
            m: Some(m),
            alpha: Some(alpha),
            p,
        })
    }
}

/// Strauss exponent `p_s(z)`: positive root of `(z-1)p² - (z+1)p - 2 = 0`.
pub fn strauss_exponent(z: f64) -> Result<f64, ExponentError> {
    if z <= 1.0 {
        return Err(ExponentError::StraussDomain(z));
    }
    let p = (z + 1.0 + (z * z + 10.0 * z - 7.0).sqrt()) / (2.0 * (z - 1.0));
    debug_assert!(strauss_residual(z, p).abs() <= 1e-12 * (1.0 + p * p));
    Ok(p)
}

/// Residual of the Strauss quadratic at `p`.
pub fn strauss_residual(z: f64, p: f64) -> f64 {
    (z - 1.0) * p * p - (z + 1.0) * p - 2.0
}

/// Fujita exponent `p_f(n) = 1 + 2/n`.
pub fn fujita_exponent(n: u32) -> Result<f64, ExponentError> {
    if n < 1 {
        return Err(ExponentError::BadDimension(n));
    }
    Ok(1.0 + 2.0 / n as f64)
}

/// Strauss/Fujita crossover damping `μ̄(n) = (n² + n + 2)/(n + 2)`.
pub fn mu_bar(n: u32) -> Result<f64, ExponentError> {
    if n < 1 {
        return Err(ExponentError::BadDimension(n));
    }
    let n = n as f64;
    Ok((n * n + n + 2.0) / (n + 2.0))
}

/// Which branch of a max-of-two critical exponent is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CritBranch {
    Strauss,
    Fujita,
    P1,
    P2,
}

/// A critical exponent together with the active branch.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CritExponent {
    pub value: f64,
    pub branch: CritBranch,
}

/// `p_crit(n, μ) = max{p_s(n+μ), p_f(n)}`; the Strauss branch is active
/// exactly for `μ <= μ̄(n)`.
pub fn p_crit_damped(n: u32, mu: f64) -> Result<CritExponent, ExponentError> {
    if mu <= 0.0 {
        return Err(ExponentError::MuNonPositive(mu));
    }
    let ps = strauss_exponent(n as f64 + mu)?;
    let pf = fujita_exponent(n)?;
    Ok(if ps >= pf {
        CritExponent {
            value: ps,
            branch: CritBranch::Strauss,
        }
    } else {
        CritExponent {
            value: pf,
            branch: CritBranch::Fujita,
        }
    })
}

/// `p₁(2, m, α) = 1 + (2+α)/(m+1)`.
pub fn p1_tricomi(m: f64, alpha: f64) -> f64 {
    1.0 + (2.0 + alpha) / (m + 1.0)
}

/// `p₂(2, m, α)`: positive root of `(m+1)p² - (3+2α)p - (m+2) = 0`.
pub fn p2_tricomi(m: f64, alpha: f64) -> f64 {
    quadratic_positive_root(m + 1.0, -(3.0 + 2.0 * alpha), -(m + 2.0))
}

/// `p_crit(2, m, α) = max{p₁, p₂}`. The `p₂` branch is active for `α > -1`,
/// the `p₁` branch for `-2 < α <= -1`; consistency of the max with the
/// predicted branch is asserted.
pub fn p_crit_tricomi(m: f64, alpha: f64) -> Result<CritExponent, ExponentError> {
    if m < 0.0 {
        return Err(ExponentError::MNonPositive(m));
    }
    if alpha <= -2.0 {
        return Err(ExponentError::AlphaTooSmall(alpha));
    }
    let p1 = p1_tricomi(m, alpha);
    let p2 = p2_tricomi(m, alpha);
    let (value, branch) = if p2 >= p1 {
        (p2, CritBranch::P2)
    } else {
        (p1, CritBranch::P1)
    };
    let predicted = if alpha > -1.0 {
        CritBranch::P2
    } else {
        CritBranch::P1
    };
    // At alpha = -1 the branches coincide; allow either side of a tie.
    if branch != predicted && (p1 - p2).abs() > 1e-9 * (1.0 + value) {
        return Err(ExponentError::InconsistentParams(format!(
            "branch prediction failed at m={m}, alpha={alpha}: p1={p1}, p2={p2}"
        )));
    }
    Ok(CritExponent { value, branch })
}

/// Conformal exponent `p_conf(2, m, α) = (m + 2α + 5)/(m + 1)`.
pub fn p_conf_tricomi(m: f64, alpha: f64) -> Result<f64, ExponentError> {
    if m < 0.0 {
        return Err(ExponentError::MNonPositive(m));
    }
    Ok((m + 2.0 * alpha + 5.0) / (m + 1.0))
}

/// Conformal exponent `p_conf(2, μ) = (μ + 5)/(μ + 1)` for `μ ∈ (0,1)∪(1,2)`.
pub fn p_conf_damped(mu: f64) -> Result<f64, ExponentError> {
    if mu <= 0.0 || mu >= 2.0 || mu == 1.0 {
        return Err(ExponentError::MuOutsideConformalRange(mu));
    }
    Ok((mu + 5.0) / (mu + 1.0))
}

/// Hypothesis satisfied by `(m, α)` at the inhomogeneous endpoint `q₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Q0Hypothesis {
    /// `0 < α <= m(m+3)/(m+2)`: the global-in-time endpoint estimate.
    GlobalInTime,
    /// `-1 < α < 0`: the finite-horizon variant.
    FiniteHorizon,
    Neither,
}

/// Endpoint exponent `q₀ = 2(m + 3 + α)/(m + 1)` with the hypothesis flag.
pub fn q0_endpoint(m: f64, alpha: f64) -> Result<(f64, Q0Hypothesis), ExponentError> {
    if m < 0.0 {
        return Err(ExponentError::MNonPositive(m));
    }
    let q0 = 2.0 * (m + 3.0 + alpha) / (m + 1.0);
    let flag = if alpha > 0.0 && alpha <= m * (m + 3.0) / (m + 2.0) {
        Q0Hypothesis::GlobalInTime
    } else if alpha > -1.0 && alpha < 0.0 {
        Q0Hypothesis::FiniteHorizon
    } else {
        Q0Hypothesis::Neither
    };
    Ok((q0, flag))
}

/// Homogeneous endpoint `q̃₀ = (2m + 6)/(m + 1 - 2β)` for `0 < β <= m/4`.
pub fn q_tilde0(m: f64, beta: f64) -> Result<f64, ExponentError> {
    if m <= 0.0 {
        return Err(ExponentError::MNonPositive(m));
    }
    if beta <= 0.0 || beta > m / 4.0 || m + 1.0 - 2.0 * beta <= 0.0 {
        return Err(ExponentError::BetaOutOfRange { m, beta });
    }
    let q = (2.0 * m + 6.0) / (m + 1.0 - 2.0 * beta);
    debug_assert!(q > 2.0);
    Ok(q)
}

/// Admissible weight-exponent window for the space-time weighted estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GammaDeltaRange {
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    /// Upper bound for δ evaluated at γ = midpoint of the γ-window
    /// (meaningful only when the window is nonempty).
    pub delta_hi: f64,
    pub empty: bool,
}

/// Open window `1/(p(p+1)) < γ < ((m+1)p - (2α+3))/((m+2)(p+1))` and the
/// companion bound `δ < (m+1)/(m+2) - γ - 1/(p+1)` at the γ-midpoint.
/// The window is nonempty exactly when `p > p₂(m, α)`.
pub fn gamma_delta_ranges(m: f64, alpha: f64, p: f64) -> Result<GammaDeltaRange, ExponentError> {
    if m <= 0.0 {
        return Err(ExponentError::MNonPositive(m));
    }
    if p <= 1.0 {
        return Err(ExponentError::PTooSmall(p));
    }
    let gamma_lo = 1.0 / (p * (p + 1.0));
    let gamma_hi = ((m + 1.0) * p - (2.0 * alpha + 3.0)) / ((m + 2.0) * (p + 1.0));
    let empty = gamma_hi <= gamma_lo;
    let gamma_mid = 0.5 * (gamma_lo + gamma_hi);
    let delta_hi = (m + 1.0) / (m + 2.0) - gamma_mid - 1.0 / (p + 1.0);
    Ok(GammaDeltaRange {
        gamma_lo,
        gamma_hi,
        delta_hi,
        empty,
    })
}

/// Cubic `G_m(p) = (3m+9)p³ - (2m+3)p² - (11m+25)p - (6m+13)`, whose positive
/// root `p̄*(m)` drives the ν-selection case analysis.
pub fn g_cubic(m: f64, p: f64) -> f64 {
    ((3.0 * m + 9.0) * p - (2.0 * m + 3.0)) * p * p - (11.0 * m + 25.0) * p - (6.0 * m + 13.0)
}

/// `p₁(m)`: positive root of `(2m+5)p² - (4m+8)p - (2m+5) = 0`.
pub fn p1_threshold(m: f64) -> f64 {
    quadratic_positive_root(2.0 * m + 5.0, -(4.0 * m + 8.0), -(2.0 * m + 5.0))
}

/// `p̄*(m)`: positive root of `G_m(p) = 0`, bracketed on `(1, 10)`.
pub fn pbar_star(m: f64) -> Result<f64, ExponentError> {
    let root = bisect_newton(|p| g_cubic(m, p), 1.0, 10.0)?;
    Ok(root)
}

/// `p*(μ)`: positive root of `3(μ+1)p² - 2(μ+4)p - (μ+11) = 0`.
pub fn p_star(mu: f64) -> f64 {
    quadratic_positive_root(3.0 * (mu + 1.0), -2.0 * (mu + 4.0), -(mu + 11.0))
}

/// Threshold constants of the ν-selection analysis, recovered by root finding.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ThresholdConstants {
    /// Root of `μ³ + 13μ² - 21μ - 17 = 0` in `(1, 2)`.
    pub mu1: f64,
    /// Root of `G_m(m+2) = 0` in `(0, 0.2)`.
    pub m1: f64,
    /// Root of `p₁(m) - (m+2) = 0` in `(0, 0.2)`.
    pub m_p1_crossover: f64,
}

/// Compute (and cache) the threshold constants. All residuals `<= 1e-10`.
pub fn threshold_constants() -> ThresholdConstants {
    static CACHE: OnceLock<ThresholdConstants> = OnceLock::new();
    *CACHE.get_or_init(|| {
        let mu1 = bisect_newton(|mu| ((mu + 13.0) * mu - 21.0) * mu - 17.0, 1.0, 2.0)
            .expect("mu1 cubic changes sign on (1,2)");
        let m1 = bisect_newton(|m| g_cubic(m, m + 2.0), 0.0, 0.2)
            .expect("G_m(m+2) changes sign on (0,0.2)");
        let m_p1_crossover = bisect_newton(|m| p1_threshold(m) - (m + 2.0), 0.0, 0.2)
            .expect("p1(m)-(m+2) changes sign on (0,0.2)");
        ThresholdConstants {
            mu1,
            m1,
            m_p1_crossover,
        }
    })
}

/// Regime labels for the 2-D damped problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RegimeLabel {
    /// `1 < p <= p_crit`: finite-time blowup for suitable data.
    BlowupKnown,
    /// Global existence, weighted `L^{p+1}` branch.
    GlobalThm11i,
    /// Global existence, weighted `L^{p+1}` branch, `μ ∈ [2√2-1, 2)`.
    GlobalThm11ii,
    /// Global existence, mixed-norm branch with an explicit ν choice.
    GlobalThm12,
    /// Global existence expected, deferred elsewhere (`p >= p_conf` or `μ >= 2`).
    GlobalForthcoming,
    /// `μ = 1` reduces to a time-dependent Klein-Gordon problem; open.
    MuEqualsOneOpen,
    Unclassified,
}

#[derive(Clone, Debug, Serialize)]
pub struct Regime {
    pub label: RegimeLabel,
    pub nu_choice: Option<f64>,
    pub citations: Vec<&'static str>,
}

/// Classify `(n, μ, p)` (or a Tricomi tuple with a recognizable damped
/// counterpart) into the known global/blowup regimes.
pub fn classify_regime(params: &ModelParams) -> Result<Regime, ExponentError> {
    let p = params.p;
    match params.form {
        ModelForm::DampedWave => {
            let mu = params
                .mu
                .ok_or_else(|| ExponentError::InconsistentParams("damped form without mu".into()))?;
            classify_damped(params.n, mu, p)
        }
        ModelForm::Tricomi => {
            let m = params
                .m
                .ok_or_else(|| ExponentError::InconsistentParams("tricomi form without m".into()))?;
            let alpha = params.alpha.ok_or_else(|| {
                ExponentError::InconsistentParams("tricomi form without alpha".into())
            })?;
            // Recognize the two damped-equivalent patterns.
            if (alpha - m).abs() <= 1e-12 * (1.0 + m.abs()) {
                return classify_damped(2, m / (m + 2.0), p);
            }
            if (alpha - (1.0 + m - p)).abs() <= 1e-12 * (1.0 + m.abs() + p) {
                return classify_damped(2, (m + 4.0) / (m + 2.0), p);
            }
            if alpha > -2.0 {
                let crit = p_crit_tricomi(m, alpha)?;
                if p <= crit.value {
                    return Ok(Regime {
                        label: RegimeLabel::BlowupKnown,
                        nu_choice: None,
                        citations: vec!["blowup: 1 < p <= p_crit(2,m,alpha)"],
                    });
                }
            }
            Ok(Regime {
                label: RegimeLabel::Unclassified,
                nu_choice: None,
                citations: vec![],
            })
        }
    }
}

fn classify_damped(n: u32, mu: f64, p: f64) -> Result<Regime, ExponentError> {
    if mu <= 0.0 {
        return Err(ExponentError::MuNonPositive(mu));
    }
    let crit = p_crit_damped(n, mu)?;
    if p <= crit.value {
        return Ok(Regime {
            label: RegimeLabel::BlowupKnown,
            nu_choice: None,
            citations: vec!["blowup: 1 < p <= p_crit(n,mu)"],
        });
    }
    if n != 2 {
        return Ok(Regime {
            label: RegimeLabel::Unclassified,
            nu_choice: None,
            citations: vec![],
        });
    }
    if mu == 1.0 {
        return Ok(Regime {
            label: RegimeLabel::MuEqualsOneOpen,
            nu_choice: None,
            citations: vec!["mu=1: Klein-Gordon reduction, open"],
        });
    }
    if mu >= 2.0 {
        return Ok(Regime {
            label: RegimeLabel::GlobalForthcoming,
            nu_choice: None,
            citations: vec!["mu >= 2, p > p_f(2)"],
        });
    }
    let p_conf = p_conf_damped(mu)?;
    if p >= p_conf {
        return Ok(Regime {
            label: RegimeLabel::GlobalForthcoming,
            nu_choice: None,
            citations: vec!["p >= p_conf(2,mu)"],
        });
    }
    // p_s(2+mu) < p < p_conf(2,mu) from here on.
    if mu < TWO_SQRT2_MINUS_1 {
        return Ok(Regime {
            label: RegimeLabel::GlobalThm11i,
            nu_choice: None,
            citations: vec!["thm1.1(i)"],
        });
    }
    if p < 2.0 / (mu - 1.0) {
        return Ok(Regime {
            label: RegimeLabel::GlobalThm11ii,
            nu_choice: None,
            citations: vec!["thm1.1(ii)"],
        });
    }
    let consts = threshold_constants();
    let nu = if mu < consts.mu1 {
        p + 1.0 / 3.0
    } else if p < p_star(mu) {
        p
    } else {
        p + 1.0 / 3.0
    };
    Ok(Regime {
        label: RegimeLabel::GlobalThm12,
        nu_choice: Some(nu),
        citations: vec!["thm1.2"],
    })
}

/// Bundle of every exponent the lab computes for one parameter tuple, with
/// residuals of the defining polynomials at the returned roots.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentReport {
    pub p_strauss: Option<f64>,
    pub p_fujita: f64,
    pub p_crit: f64,
    pub p_crit_branch: CritBranch,
    pub p_conf: Option<f64>,
    pub mu_bar: f64,
    pub q0: Option<f64>,
    pub residuals: BTreeMap<String, f64>,
}

impl ExponentReport {
    pub fn for_params(params: &ModelParams) -> Result<ExponentReport, ExponentError> {
        let mut residuals = BTreeMap::new();
        match params.form {
            ModelForm::DampedWave => {
                let mu = params.mu.ok_or_else(|| {
                    ExponentError::InconsistentParams("damped form without mu".into())
                })?;
                let z = params.n as f64 + mu;
                let ps = strauss_exponent(z)?;
                residuals.insert("strauss".into(), strauss_residual(z, ps));
                let crit = p_crit_damped(params.n, mu)?;
                let p_conf = if params.n == 2 {
                    p_conf_damped(mu).ok()
                } else {
                    None
                };
                // The damped-side q0 comes through the Tricomi reformulation.
                let q0 = if params.n == 2 && mu > 0.0 && mu < 2.0 && mu != 1.0 {
                    let (m, alpha) = if mu < 1.0 {
                        let m = 2.0 * mu / (1.0 - mu);
                        (m, m)
                    } else {
                        let m = 2.0 * (2.0 - mu) / (mu - 1.0);
                        (m, 1.0 + m - params.p)
                    };
                    q0_endpoint(m, alpha).ok().map(|(q, _)| q)
                } else {
                    None
                };
                Ok(ExponentReport {
                    p_strauss: Some(ps),
                    p_fujita: fujita_exponent(params.n)?,
                    p_crit: crit.value,
                    p_crit_branch: crit.branch,
                    p_conf,
                    mu_bar: mu_bar(params.n)?,
                    q0,
                    residuals,
                })
            }
            ModelForm::Tricomi => {
                let m = params.m.ok_or_else(|| {
                    ExponentError::InconsistentParams("tricomi form without m".into())
                })?;
                let alpha = params.alpha.ok_or_else(|| {
                    ExponentError::InconsistentParams("tricomi form without alpha".into())
                })?;
                let crit = p_crit_tricomi(m, alpha)?;
                let p2 = p2_tricomi(m, alpha);
                residuals.insert(
                    "p2_tricomi".into(),
                    (m + 1.0) * p2 * p2 - (3.0 + 2.0 * alpha) * p2 - (m + 2.0),
                );
                let (q0, _) = q0_endpoint(m, alpha)?;
                Ok(ExponentReport {
                    p_strauss: None,
                    p_fujita: fujita_exponent(2)?,
                    p_crit: crit.value,
                    p_crit_branch: crit.branch,
                    p_conf: Some(p_conf_tricomi(m, alpha)?),
                    mu_bar: mu_bar(2)?,
                    q0: Some(q0),
                    residuals,
                })
            }
        }
    }
}
