//! Strichartz index constraint systems for the mixed-norm estimates: the
//! `(q, ν)` restriction system of the `t^{m-p+1}|u|^p` problem, its μ-variable
//! rewriting, the ν-selection rule, and grid scans of the feasible region.

use serde::Serialize;

use crate::exponents::{self, threshold_constants, ExponentError, SQRT2_MINUS_1, TWO_SQRT2_MINUS_1};

/// Tolerance under which an equality constraint counts as satisfied and an
/// inequality slack may dip negative.
pub const CONSTRAINT_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum AdmissibilityError {
    #[error("(m, p) outside the admissible rectangle 0 < m <= sqrt(2)-1, m+2 <= p < (3m+7)/(m+3): m = {m}, p = {p}")]
    OutsideRectangle { m: f64, p: f64 },
    #[error("(mu, p) outside the region 2*sqrt(2)-1 <= mu < 2, 2/(mu-1) <= p < (mu+5)/(mu+1): mu = {mu}, p = {p}")]
    OutsideMuRegion { mu: f64, p: f64 },
    #[error("equality constraint leaves no positive 1/q: right side {0}")]
    InfeasibleQ(f64),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConstraintKind {
    Equality,
    /// Slack of a non-strict inequality; feasible when `>= -CONSTRAINT_TOL`.
    InequalitySlack,
    /// Slack of a strict inequality; feasible when `> CONSTRAINT_TOL`.
    StrictSlack,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintResidual {
    pub name: &'static str,
    pub value: f64,
    pub kind: ConstraintKind,
}

impl ConstraintResidual {
    fn ok(&self) -> bool {
        match self.kind {
            ConstraintKind::Equality => self.value.abs() <= CONSTRAINT_TOL,
            ConstraintKind::InequalitySlack => self.value >= -CONSTRAINT_TOL,
            ConstraintKind::StrictSlack => self.value > CONSTRAINT_TOL,
        }
    }
}

/// A Strichartz index tuple with the residuals of every constraint checked.
/// Dual indices satisfy `1/q̃ + 1/q̃' = 1` and `1/ν̃ + 1/ν̃' = 1` by
/// construction wherever a dual pair participates.
#[derive(Clone, Debug, Serialize)]
pub struct AdmissiblePair {
    pub q: f64,
    pub nu: f64,
    pub q_tilde: Option<f64>,
    pub nu_tilde: Option<f64>,
    /// Sobolev index of the data space, where the system determines one.
    pub s: Option<f64>,
    pub residuals: Vec<ConstraintResidual>,
    pub feasible: bool,
}

impl AdmissiblePair {
    fn from_residuals(
        q: f64,
        nu: f64,
        q_tilde: Option<f64>,
        nu_tilde: Option<f64>,
        s: Option<f64>,
        residuals: Vec<ConstraintResidual>,
    ) -> AdmissiblePair {
        let feasible = residuals.iter().all(ConstraintResidual::ok);
        AdmissiblePair {
            q,
            nu,
            q_tilde,
            nu_tilde,
            s,
            residuals,
            feasible,
        }
    }

    /// Residual value by constraint name (for tests and reports).
    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.value)
    }
}

/// Upper end of the admissible p-interval, `(3m+7)/(m+3)`.
pub fn p_upper(m: f64) -> f64 {
    (3.0 * m + 7.0) / (m + 3.0)
}

fn check_rectangle(m: f64, p: f64) -> Result<(), AdmissibilityError> {
    // A hair of tolerance at the closed ends; the p-upper end stays open.
    if m <= 0.0 || m > SQRT2_MINUS_1 + 1e-12 || p < m + 2.0 - 1e-12 || p >= p_upper(m) {
        return Err(AdmissibilityError::OutsideRectangle { m, p });
    }
    Ok(())
}

/// Right side of the scaling equality: `(m-p+3)/(p-1) - (m-p+1)/(p+1)`.
fn equality_rhs(m: f64, p: f64) -> f64 {
    (m - p + 3.0) / (p - 1.0) - (m - p + 1.0) / (p + 1.0)
}

/// Evaluate the five-line restriction system on `(q, ν)`:
/// bounds `2 <= q, ν <= 2p`; strict positivity
/// `1/ν + (m-p+1)/((m+2)(p+1)) > 0`; the scaling equality
/// `1/q + (m+2)/ν = (m-p+3)/(p-1) - (m-p+1)/(p+1)`; and the two-sided
/// inequality `3/(2p) + (m-p+1)/((p+1)p) <= 1/q + (m+2)/(2ν)
/// <= (m+1)/2 - (m-p+1)/(p+1)`.
pub fn check_ugly_system(
    m: f64,
    p: f64,
    q: f64,
    nu: f64,
) -> Result<AdmissiblePair, AdmissibilityError> {
    check_rectangle(m, p)?;
    let half = 1.0 / q + (m + 2.0) / (2.0 * nu);
    let residuals = vec![
        ConstraintResidual {
            name: "q_lower",
            value: q - 2.0,
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "q_upper",
            value: 2.0 * p - q,
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "nu_lower",
            value: nu - 2.0,
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "nu_upper",
            value: 2.0 * p - nu,
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "nu_positivity",
            value: 1.0 / nu + (m - p + 1.0) / ((m + 2.0) * (p + 1.0)),
            kind: ConstraintKind::StrictSlack,
        },
        ConstraintResidual {
            name: "scaling_equality",
            value: 1.0 / q + (m + 2.0) / nu - equality_rhs(m, p),
            kind: ConstraintKind::Equality,
        },
        ConstraintResidual {
            name: "upper_halfline",
            value: (m + 1.0) / 2.0 - (m - p + 1.0) / (p + 1.0) - half,
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "lower_halfline",
            value: half - 3.0 / (2.0 * p) - (m - p + 1.0) / ((p + 1.0) * p),
            kind: ConstraintKind::InequalitySlack,
        },
    ];
    Ok(AdmissiblePair::from_residuals(
        q, nu, None, None, None, residuals,
    ))
}

/// Solve the scaling equality for `q` given `ν`.
pub fn q_from_nu(m: f64, p: f64, nu: f64) -> Result<f64, AdmissibilityError> {
    let inv_q = equality_rhs(m, p) - (m + 2.0) / nu;
    if inv_q <= 0.0 {
        return Err(AdmissibilityError::InfeasibleQ(inv_q));
    }
    Ok(1.0 / inv_q)
}

/// Closed form for `q` when `ν = p`.
pub fn q_case_nu_equals_p(m: f64, p: f64) -> f64 {
    p * (p - 1.0) * (p + 1.0) / ((p + 1.0) * (m + 2.0 - m * p) + 2.0 * p * (m - p + 1.0))
}

/// Closed form for `q` when `ν = p + 1/3`.
pub fn q_case_nu_plus_third(m: f64, p: f64) -> f64 {
    (p - 1.0) * (p + 1.0) * (3.0 * p + 1.0) / ((m + 2.0) * (-3.0 * p * p + 6.0 * p + 5.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NuBranch {
    EqualsP,
    PlusOneThird,
    /// `ν = p + 1/3` would force `q > 2p` through the scaling equality (a
    /// corner band near the conformal edge); ν is raised to the `q = 2p`
    /// feasibility boundary instead.
    CappedAtQBound,
}

/// The ν that puts `q` exactly at its cap `2p` on the scaling equality.
fn nu_at_q_cap(m: f64, p: f64) -> f64 {
    (m + 2.0) / (equality_rhs(m, p) - 1.0 / (2.0 * p))
}

/// The ν-selection rule: for `m₁ < m <= √2-1` take `ν = p + 1/3`; for
/// `0 < m < m₁` take `ν = p` below `p̄*(m)` and `ν = p + 1/3` from `p̄*(m)`
/// on. In the corner band where `ν = p + 1/3` drives `q` above `2p`
/// (the cap `q <= 2p` fails there for the rule as stated), ν is raised to
/// the `q = 2p` boundary, which keeps the full system satisfied.
pub fn select_nu(m: f64, p: f64) -> Result<(f64, NuBranch), AdmissibilityError> {
    check_rectangle(m, p)?;
    let c = threshold_constants();
    if m < c.m1 {
        let pbar = exponents::pbar_star(m)?;
        if p < pbar {
            return Ok((p, NuBranch::EqualsP));
        }
    }
    let nu = p + 1.0 / 3.0;
    let q = q_from_nu(m, p, nu)?;
    if q > 2.0 * p {
        return Ok((nu_at_q_cap(m, p), NuBranch::CappedAtQBound));
    }
    Ok((nu, NuBranch::PlusOneThird))
}

/// Select ν, derive q from the scaling equality, and verify the full system.
pub fn select_pair(m: f64, p: f64) -> Result<(AdmissiblePair, NuBranch), AdmissibilityError> {
    let (nu, branch) = select_nu(m, p)?;
    let q = q_from_nu(m, p, nu)?;
    let pair = check_ugly_system(m, p, q, nu)?;
    Ok((pair, branch))
}

/// Sobolev index of the closure case, `s = 1 - (2(m-p+1)+4)/((m+2)(p-1))`.
pub fn closure_sobolev_index(m: f64, p: f64) -> f64 {
    1.0 - (2.0 * (m - p + 1.0) + 4.0) / ((m + 2.0) * (p - 1.0))
}

/// Evaluate the general mixed-norm restriction set on `(q, ν, q̃, ν̃)`:
/// the admissibility inequality `1/q <= (m+1)/2 - (m+2)/(2ν) - (m-p+1)/(p+1)`
/// for both pairs, the scaling equality linking the pair to the dual pair,
/// and strict radial positivity for ν. When `closure` is set, the nonlinear
/// closure relations `q = p·q̃'` and `ν = p·ν̃'` are checked too and `s` is
/// derived.
pub fn mixed_norm_constraints(
    m: f64,
    p: f64,
    q: f64,
    nu: f64,
    q_tilde: f64,
    nu_tilde: f64,
    closure: bool,
) -> AdmissiblePair {
    let qt_dual = q_tilde / (q_tilde - 1.0);
    let nt_dual = nu_tilde / (nu_tilde - 1.0);
    let w = (m - p + 1.0) / (p + 1.0);
    let admissible = |qq: f64, nn: f64| (m + 1.0) / 2.0 - (m + 2.0) / (2.0 * nn) - w - 1.0 / qq;
    let mut residuals = vec![
        ConstraintResidual {
            name: "pair_admissible",
            value: admissible(q, nu),
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "dual_pair_admissible",
            value: admissible(q_tilde, nu_tilde),
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "nu_positivity",
            value: 1.0 / nu + w / (m + 2.0),
            kind: ConstraintKind::StrictSlack,
        },
        // Scaling equality between the solution pair and the forcing pair:
        // (m-p+1)/(p+1) + 1/q + (m+2)/ν = 1/q̃' + (m+2)/ν̃' + (p-m-1)/(p+1) - 2.
        ConstraintResidual {
            name: "scaling_equality",
            value: w + 1.0 / q + (m + 2.0) / nu - (1.0 / qt_dual + (m + 2.0) / nt_dual - w - 2.0),
            kind: ConstraintKind::Equality,
        },
    ];
    for (name, v) in [
        ("q_lower", q - 2.0),
        ("nu_lower", nu - 2.0),
        ("q_tilde_lower", q_tilde - 2.0),
        ("nu_tilde_lower", nu_tilde - 2.0),
    ] {
        residuals.push(ConstraintResidual {
            name,
            value: v,
            kind: ConstraintKind::InequalitySlack,
        });
    }
    let s = if closure {
        residuals.push(ConstraintResidual {
            name: "closure_q",
            value: q - p * qt_dual,
            kind: ConstraintKind::Equality,
        });
        residuals.push(ConstraintResidual {
            name: "closure_nu",
            value: nu - p * nt_dual,
            kind: ConstraintKind::Equality,
        });
        Some(closure_sobolev_index(m, p))
    } else {
        None
    };
    AdmissiblePair::from_residuals(q, nu, Some(q_tilde), Some(nu_tilde), s, residuals)
}

/// One cell of a feasibility scan.
#[derive(Clone, Debug, Serialize)]
pub struct ScanCell {
    pub m: f64,
    pub p: f64,
    pub nu: f64,
    pub q: f64,
    pub branch: NuBranch,
    pub feasible: bool,
    pub worst_equality: f64,
    pub worst_slack: f64,
}

/// Scan the selection rule over an `(m, p)` grid; cells outside the
/// documented rectangle are skipped. Deterministic given the grids.
pub fn feasible_region_scan(m_grid: &[f64], p_grid: &[f64]) -> Vec<ScanCell> {
    let mut cells = Vec::new();
    for &m in m_grid {
        for &p in p_grid {
            let Ok((pair, branch)) = select_pair(m, p) else {
                continue;
            };
            let worst_equality = pair
                .residuals
                .iter()
                .filter(|r| r.kind == ConstraintKind::Equality)
                .map(|r| r.value.abs())
                .fold(0.0, f64::max);
            let worst_slack = pair
                .residuals
                .iter()
                .filter(|r| r.kind != ConstraintKind::Equality)
                .map(|r| r.value)
                .fold(f64::INFINITY, f64::min);
            cells.push(ScanCell {
                m,
                p,
                nu: pair.nu,
                q: pair.q,
                branch,
                feasible: pair.feasible,
                worst_equality,
                worst_slack,
            });
        }
    }
    cells
}

/// Evaluate the μ-variable rewriting of the restriction system on `(q, ν)`.
/// Must agree with [`check_ugly_system`] under `m = 2(2-μ)/(μ-1)`.
pub fn ws_system_check(
    mu: f64,
    p: f64,
    q: f64,
    nu: f64,
) -> Result<AdmissiblePair, AdmissibilityError> {
    if !(TWO_SQRT2_MINUS_1 - 1e-12..2.0).contains(&mu)
        || p < 2.0 / (mu - 1.0) - 1e-12
        || p >= (mu + 5.0) / (mu + 1.0)
    {
        return Err(AdmissibilityError::OutsideMuRegion { mu, p });
    }
    let w = (3.0 - mu - p * (mu - 1.0)) / (p + 1.0);
    let residuals = vec![
        ConstraintResidual {
            name: "nu_positivity",
            value: 1.0 / nu + w / 2.0,
            kind: ConstraintKind::StrictSlack,
        },
        ConstraintResidual {
            name: "scaling_equality",
            value: 1.0 / q + 2.0 / (nu * (mu - 1.0))
                - ((mu + 1.0 - p * (mu - 1.0)) / ((p - 1.0) * (mu - 1.0)) - w / (mu - 1.0)),
            kind: ConstraintKind::Equality,
        },
        ConstraintResidual {
            name: "upper_halfline",
            value: (3.0 - mu) / (2.0 * (mu - 1.0))
                - w / (mu - 1.0)
                - (1.0 / q + 1.0 / (nu * (mu - 1.0))),
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "q_lower",
            value: q - 2.0,
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "q_upper",
            value: 2.0 * p - q,
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "nu_lower",
            value: nu - 2.0,
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "nu_upper",
            value: 2.0 * p - nu,
            kind: ConstraintKind::InequalitySlack,
        },
        ConstraintResidual {
            name: "lower_halfline",
            value: 1.0 / q + 1.0 / (nu * (mu - 1.0))
                - 3.0 / (2.0 * p)
                - w / (p * (p + 1.0) * (mu - 1.0)),
            kind: ConstraintKind::InequalitySlack,
        },
    ];
    Ok(AdmissiblePair::from_residuals(
        q, nu, None, None, None, residuals,
    ))
}
