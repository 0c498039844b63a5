//! The structural life-cycle model: preferences, learning technology, war
//! shocks, and the equilibrium solvers.
//!
//! An individual chooses schooling `s` and retirement age `R` to maximize
//! discounted lifetime utility of consumption net of an age-increasing
//! disutility of work, subject to a lifetime budget constraint. With the
//! interest rate equal to the discount rate, consumption is flat over the
//! life cycle and the optimum is characterized by two conditions: the
//! marginal cost of schooling equals its discounted marginal benefit
//! (`eq1_residual`), and the disutility of work at retirement equals the
//! marginal consumption value of working (`eq2_residual`).
//!
//! Shocks enter as a disutility multiplier (injury), a stretch of the
//! working span lost to captivity, or a wage cut / wealth loss arriving at
//! a given age (displacement). `solve_ex_ante` re-optimizes both margins;
//! `solve_ex_post` treats schooling as sunk and re-optimizes retirement
//! only; `solve_post_displacement_retirement` handles a wage cut arriving
//! mid-career, where consumption already consumed cannot be undone.

use crate::numerics::{self, Bracket, NumericsError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Margin kept away from the end of life when bracketing retirement, since
/// the disutility of work diverges there.
const LIFESPAN_MARGIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("no interior solution: {0}")]
    NoInteriorSolution(String),
    #[error("post-displacement consumption is not positive ({value})")]
    NegativeConsumption { value: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Utility {
    Log,
}

/// Discounting and lifespan. The subjective discount rate is maintained
/// equal to the interest rate, which is what makes consumption flat.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Preferences {
    pub rho: f64,
    pub r: f64,
    pub lifespan: f64,
    pub utility: Utility,
}

impl Preferences {
    pub fn new(r: f64, lifespan: f64) -> Result<Self, ModelError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(ModelError::Domain(format!("interest rate must be positive, got {r}")));
        }
        if !(lifespan > 0.0 && lifespan.is_finite()) {
            return Err(ModelError::Domain(format!(
                "lifespan must be positive, got {lifespan}"
            )));
        }
        Ok(Self {
            rho: r,
            r,
            lifespan,
            utility: Utility::Log,
        })
    }

    /// The illustrative configuration: log utility, `T = r = 1`.
    pub fn figure_baseline() -> Self {
        Self::new(1.0, 1.0).expect("valid baseline preferences")
    }

    fn marginal_utility(&self, c: f64) -> f64 {
        match self.utility {
            Utility::Log => 1.0 / c,
        }
    }

    fn utility_of(&self, c: f64) -> f64 {
        match self.utility {
            Utility::Log => c.ln(),
        }
    }
}

/// Log wage as a function of schooling.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum LogWage {
    Linear { slope: f64 },
}

impl LogWage {
    pub fn theta(&self, s: f64) -> f64 {
        match *self {
            LogWage::Linear { slope } => slope * s,
        }
    }

    pub fn theta_prime(&self, _s: f64) -> f64 {
        match *self {
            LogWage::Linear { slope } => slope,
        }
    }
}

/// Learning speed and disutility of work. The disutility is hyperbolic,
/// `f(t) = scale / (T - t)`, so it diverges at the end of life.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Technology {
    pub log_wage: LogWage,
    pub disutility_scale: f64,
}

impl Technology {
    pub fn new(log_wage: LogWage, disutility_scale: f64) -> Result<Self, ModelError> {
        let positive_slope = match log_wage {
            LogWage::Linear { slope } => slope > 0.0 && slope.is_finite(),
        };
        if !positive_slope {
            return Err(ModelError::Domain("log-wage slope must be positive".into()));
        }
        if !(disutility_scale >= 1.0 && disutility_scale.is_finite()) {
            return Err(ModelError::Domain(format!(
                "disutility scale must be >= 1, got {disutility_scale}"
            )));
        }
        Ok(Self {
            log_wage,
            disutility_scale,
        })
    }

    /// The illustrative configuration: `theta(s) = s / 0.3`, `f(t) = 1/(1-t)`.
    pub fn figure_baseline() -> Self {
        Self::new(LogWage::Linear { slope: 1.0 / 0.3 }, 1.0).expect("valid baseline technology")
    }

    pub fn wage(&self, s: f64) -> f64 {
        self.log_wage.theta(s).exp()
    }

    pub fn disutility(&self, t: f64, lifespan: f64) -> f64 {
        self.disutility_scale / (lifespan - t)
    }
}

/// A war-related shock to the life-cycle problem.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shock {
    /// Scales the disutility of work by `kappa > 1`.
    Injury { kappa: f64 },
    /// Removes `duration` years from the productive working span.
    Captivity { duration: f64 },
    /// Cuts the wage by factor `wage_factor` and destroys `wealth_loss`
    /// units of wealth at age `age`.
    Displacement {
        wage_factor: f64,
        wealth_loss: f64,
        age: f64,
    },
}

impl Shock {
    pub fn validate(&self, prefs: &Preferences) -> Result<(), ModelError> {
        match *self {
            Shock::Injury { kappa } => {
                if !(kappa >= 1.0 && kappa.is_finite()) {
                    return Err(ModelError::Domain(format!(
                        "injury kappa must be at least 1, got {kappa}"
                    )));
                }
            }
            Shock::Captivity { duration } => {
                if !(duration >= 0.0 && duration < prefs.lifespan) {
                    return Err(ModelError::Domain(format!(
                        "captivity duration must lie in [0, lifespan), got {duration}"
                    )));
                }
            }
            Shock::Displacement {
                wage_factor,
                wealth_loss,
                age,
            } => {
                if !(wage_factor > 0.0 && wage_factor <= 1.0) {
                    return Err(ModelError::Domain(format!(
                        "wage factor must lie in (0, 1], got {wage_factor}"
                    )));
                }
                if !(wealth_loss >= 0.0 && wealth_loss.is_finite()) {
                    return Err(ModelError::Domain(format!(
                        "wealth loss must be non-negative, got {wealth_loss}"
                    )));
                }
                if !(0.0..prefs.lifespan).contains(&age) {
                    return Err(ModelError::Domain(format!(
                        "displacement age must lie in [0, lifespan), got {age}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Which corner was hit when no interior retirement root exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Corner {
    /// Disutility exceeds the marginal benefit of working at every age.
    NeverWork,
}

/// A solved life-cycle plan.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LifeCyclePlan {
    pub schooling: f64,
    pub retirement: f64,
    pub consumption: f64,
    pub value: f64,
    pub corner: Option<Corner>,
}

/// Outcome of re-optimizing retirement after a mid-career displacement.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PostDisplacementOutcome {
    pub consumption: f64,
    pub retirement: f64,
    pub immediate_exit: bool,
}

/// Shock-neutral parameterization used internally: a disutility multiplier
/// on top of the technology's own scale, a captivity stretch, a wage factor
/// applied from career start, and a flat consumption decrement from an
/// annuitized wealth loss.
#[derive(Clone, Copy, Debug)]
struct Adjustment {
    kappa: f64,
    captivity: f64,
    wage_factor: f64,
    annuity: f64,
}

impl Adjustment {
    fn none() -> Self {
        Self {
            kappa: 1.0,
            captivity: 0.0,
            wage_factor: 1.0,
            annuity: 0.0,
        }
    }
}

/// Flat consumption decrement from spreading a wealth loss of `delta`
/// (valued at age `d`) over `[d, T]` at rate `r`.
fn annuitized_loss(prefs: &Preferences, delta: f64, d: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let r = prefs.r;
    delta * r * (-r * d).exp() / ((-r * d).exp() - (-r * prefs.lifespan).exp())
}

fn adjustment_for(prefs: &Preferences, shock: &Shock) -> Adjustment {
    match *shock {
        Shock::Injury { kappa } => Adjustment {
            kappa,
            ..Adjustment::none()
        },
        Shock::Captivity { duration } => Adjustment {
            captivity: duration,
            ..Adjustment::none()
        },
        Shock::Displacement {
            wage_factor,
            wealth_loss,
            age,
        } => Adjustment {
            wage_factor,
            annuity: annuitized_loss(prefs, wealth_loss, age),
            ..Adjustment::none()
        },
    }
}

/// Flat consumption financed by working `[s + x, R]` at the (possibly
/// wage-cut) wage, net of any annuitized wealth loss. No domain checks.
fn consumption_raw(prefs: &Preferences, tech: &Technology, s: f64, big_r: f64, adj: &Adjustment) -> f64 {
    let r = prefs.r;
    let gross = adj.wage_factor
        * tech.wage(s)
        * ((-r * (s + adj.captivity)).exp() - (-r * big_r).exp())
        / (1.0 - (-r * prefs.lifespan).exp());
    gross - adj.annuity
}

/// Flat lifetime consumption from working `[s, R]` at wage `e^{theta(s)}`.
/// Zero when `s = R`.
pub fn consumption(
    prefs: &Preferences,
    tech: &Technology,
    s: f64,
    big_r: f64,
) -> Result<f64, ModelError> {
    if !(0.0..=big_r).contains(&s) {
        return Err(ModelError::Domain(format!(
            "need 0 <= s <= R, got s = {s}, R = {big_r}"
        )));
    }
    if big_r > prefs.lifespan {
        return Err(ModelError::Domain(format!(
            "retirement {big_r} exceeds lifespan {}",
            prefs.lifespan
        )));
    }
    Ok(consumption_raw(prefs, tech, s, big_r, &Adjustment::none()))
}

fn lifetime_utility_adjusted(
    prefs: &Preferences,
    tech: &Technology,
    s: f64,
    big_r: f64,
    adj: &Adjustment,
) -> Result<f64, ModelError> {
    if !(0.0 <= s && s + adj.captivity <= big_r && big_r < prefs.lifespan) {
        return Err(ModelError::Domain(format!(
            "need 0 <= s, s + x <= R < lifespan, got s = {s}, x = {}, R = {big_r}",
            adj.captivity
        )));
    }
    let c = consumption_raw(prefs, tech, s, big_r, adj);
    if c <= 0.0 {
        return Err(ModelError::NonFinite(format!(
            "consumption {c} is not positive, utility undefined"
        )));
    }
    let r = prefs.r;
    let t_max = prefs.lifespan;
    let consumption_term = prefs.utility_of(c) * (1.0 - (-r * t_max).exp()) / r;
    let kappa = adj.kappa;
    let disutility_term = numerics::integrate(
        |t| (-prefs.rho * t).exp() * kappa * tech.disutility(t, t_max),
        0.0,
        big_r,
        numerics::DEFAULT_QUAD_TOL * 1e-2,
    )?;
    Ok(consumption_term - disutility_term)
}

/// Discounted lifetime utility of the plan `(s, R)`: flat-consumption
/// utility over `[0, T]` minus the discounted disutility of work over
/// `[0, R]` (the latter evaluated by quadrature).
pub fn lifetime_utility(
    prefs: &Preferences,
    tech: &Technology,
    s: f64,
    big_r: f64,
) -> Result<f64, ModelError> {
    lifetime_utility_adjusted(prefs, tech, s, big_r, &Adjustment::none())
}

/// Residual of the schooling condition: `1/theta'(s)` minus the discounted
/// value of the working span `[s + x, R]`, where `x` is time lost to
/// captivity. Zero at optimal schooling.
pub fn eq1_residual(
    prefs: &Preferences,
    tech: &Technology,
    s: f64,
    big_r: f64,
    captivity: f64,
) -> Result<f64, ModelError> {
    if s < 0.0 || big_r <= s + captivity {
        return Err(ModelError::Domain(format!(
            "need s >= 0 and R > s + x, got s = {s}, x = {captivity}, R = {big_r}"
        )));
    }
    let r = prefs.r;
    Ok(1.0 / tech.log_wage.theta_prime(s) - (1.0 - (-r * (big_r - captivity - s)).exp()) / r)
}

fn eq2_residual_adjusted(
    prefs: &Preferences,
    tech: &Technology,
    s: f64,
    big_r: f64,
    adj: &Adjustment,
) -> f64 {
    let c = consumption_raw(prefs, tech, s, big_r, adj);
    if c <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let wage = adj.wage_factor * tech.wage(s);
    adj.kappa * tech.disutility(big_r, prefs.lifespan) - prefs.marginal_utility(c) * wage
}

/// Residual of the retirement condition: disutility of work at `R` minus
/// the marginal consumption value of working. Zero at optimal retirement.
/// Under log utility the marginal-value term reduces to
/// `(1 - e^{-rT}) / (e^{-rs} - e^{-rR})`, independent of the wage level.
pub fn eq2_residual(
    prefs: &Preferences,
    tech: &Technology,
    s: f64,
    big_r: f64,
) -> Result<f64, ModelError> {
    if !(0.0 <= s && s <= big_r && big_r < prefs.lifespan) {
        return Err(ModelError::Domain(format!(
            "need 0 <= s <= R < lifespan, got s = {s}, R = {big_r}"
        )));
    }
    let v = eq2_residual_adjusted(prefs, tech, s, big_r, &Adjustment::none());
    if v == f64::NEG_INFINITY {
        return Err(ModelError::NonFinite(
            "consumption is zero at s = R, marginal utility undefined".into(),
        ));
    }
    Ok(v)
}

/// Retirement age implied by the schooling condition for a given `s`, or
/// `None` when the marginal benefit of schooling cannot cover its cost.
fn eq1_retirement(prefs: &Preferences, tech: &Technology, s: f64, captivity: f64) -> Option<f64> {
    let r = prefs.r;
    let inner = 1.0 - r / tech.log_wage.theta_prime(s);
    if inner <= 0.0 {
        return None;
    }
    Some(s + captivity - inner.ln() / r)
}

/// Solves the retirement condition alone, schooling fixed. Returns the
/// smallest interior root, or the never-work corner when the disutility of
/// work exceeds the marginal benefit at every admissible age.
fn solve_retirement(
    prefs: &Preferences,
    tech: &Technology,
    s: f64,
    adj: &Adjustment,
) -> Result<(f64, Option<Corner>), ModelError> {
    let lo = s + adj.captivity;
    let hi = prefs.lifespan - LIFESPAN_MARGIN;
    if lo >= hi {
        return Err(ModelError::Domain(format!(
            "no admissible retirement window: s + x = {lo} >= lifespan"
        )));
    }
    let g = |big_r: f64| eq2_residual_adjusted(prefs, tech, s, big_r, adj);
    match Bracket::scan(g, lo, hi) {
        Ok(bracket) => {
            let root = numerics::find_root(g, bracket, numerics::DEFAULT_ROOT_TOL)?;
            Ok((root, None))
        }
        Err(NumericsError::NoSignChange { .. }) => {
            // feasible nodes all on one side; f -> inf at T, so a missing
            // sign change means the disutility dominates everywhere
            Ok((s, Some(Corner::NeverWork)))
        }
        Err(e) => Err(e.into()),
    }
}

/// Jointly solves the schooling and retirement conditions, optionally under
/// a shock known before any decision is made (for displacement this means
/// the wage cut applies to the whole career). Returns the interior plan
/// with consumption and lifetime utility filled in.
pub fn solve_ex_ante(
    prefs: &Preferences,
    tech: &Technology,
    shock: Option<&Shock>,
) -> Result<LifeCyclePlan, ModelError> {
    if let Some(shock) = shock {
        shock.validate(prefs)?;
    }
    let adj = shock.map_or(Adjustment::none(), |s| adjustment_for(prefs, s));
    let hi = prefs.lifespan - LIFESPAN_MARGIN;
    let phi = |s: f64| match eq1_retirement(prefs, tech, s, adj.captivity) {
        Some(big_r) if big_r < hi => eq2_residual_adjusted(prefs, tech, s, big_r, &adj),
        _ => f64::NAN, // outside the admissible region; skipped by the scan
    };
    let s_hi = (prefs.lifespan - adj.captivity - LIFESPAN_MARGIN).max(LIFESPAN_MARGIN);
    let bracket = Bracket::scan(phi, 0.0, s_hi).map_err(|e| match e {
        NumericsError::NoSignChange { .. } => ModelError::NoInteriorSolution(format!(
            "schooling condition admits no interior optimum on [0, {s_hi}]: \
             retirement residual does not change sign along the schooling locus \
             (corner diagnosis: {})",
            if phi(LIFESPAN_MARGIN).is_sign_positive() {
                "disutility of work dominates, never-work corner"
            } else {
                "marginal benefit of working dominates, full-career corner"
            }
        )),
        other => ModelError::Numerics(other),
    })?;
    let s_star = numerics::find_root(phi, bracket, numerics::DEFAULT_ROOT_TOL)?;
    let r_star = eq1_retirement(prefs, tech, s_star, adj.captivity)
        .ok_or_else(|| ModelError::NoInteriorSolution("schooling locus vanished at root".into()))?;
    let c = consumption_raw(prefs, tech, s_star, r_star, &adj);
    let value = lifetime_utility_adjusted(prefs, tech, s_star, r_star, &adj)?;
    Ok(LifeCyclePlan {
        schooling: s_star,
        retirement: r_star,
        consumption: c,
        value,
        corner: None,
    })
}

/// Re-optimizes retirement with schooling sunk at `s_fixed`, under a shock.
/// Captivity shifts the working span; injury scales the disutility; a
/// displacement at or before the end of schooling cuts the wage for the
/// whole career (plus any annuitized wealth loss), while a mid-career
/// displacement is delegated to [`solve_post_displacement_retirement`]
/// against the unshocked plan.
pub fn solve_ex_post(
    prefs: &Preferences,
    tech: &Technology,
    shock: &Shock,
    s_fixed: f64,
) -> Result<LifeCyclePlan, ModelError> {
    shock.validate(prefs)?;
    if !(0.0..prefs.lifespan).contains(&s_fixed) {
        return Err(ModelError::Domain(format!(
            "fixed schooling must lie in [0, lifespan), got {s_fixed}"
        )));
    }
    if let Shock::Displacement {
        wage_factor,
        wealth_loss,
        age,
    } = *shock
    {
        if age > s_fixed {
            // displacement strikes mid-career: solve the unshocked plan
            // first, then re-optimize retirement against it
            let baseline = solve_with_schooling_sunk(prefs, tech, s_fixed, &Adjustment::none())?;
            if age >= baseline.retirement {
                return Ok(baseline); // already retired when the shock hits
            }
            let outcome = solve_post_displacement_retirement(
                prefs,
                tech,
                &baseline,
                wage_factor,
                wealth_loss,
                age,
            )?;
            let value = post_displacement_value(prefs, tech, &baseline, &outcome, age)?;
            return Ok(LifeCyclePlan {
                schooling: s_fixed,
                retirement: outcome.retirement,
                consumption: outcome.consumption,
                value,
                corner: None,
            });
        }
    }
    let adj = adjustment_for(prefs, shock);
    solve_with_schooling_sunk(prefs, tech, s_fixed, &adj)
}

fn solve_with_schooling_sunk(
    prefs: &Preferences,
    tech: &Technology,
    s_fixed: f64,
    adj: &Adjustment,
) -> Result<LifeCyclePlan, ModelError> {
    let (big_r, corner) = solve_retirement(prefs, tech, s_fixed, adj)?;
    if corner.is_some() {
        return Ok(LifeCyclePlan {
            schooling: s_fixed,
            retirement: s_fixed,
            consumption: 0.0,
            value: f64::NEG_INFINITY,
            corner,
        });
    }
    let c = consumption_raw(prefs, tech, s_fixed, big_r, adj);
    let value = lifetime_utility_adjusted(prefs, tech, s_fixed, big_r, adj)?;
    Ok(LifeCyclePlan {
        schooling: s_fixed,
        retirement: big_r,
        consumption: c,
        value,
        corner: None,
    })
}

/// Post-displacement flat consumption, no validation. Derived from the
/// displaced budget constraint: pre-displacement history is fixed (wage
/// `e^{theta}` from `s` to `d`, consumption `c` from 0 to `d`), earnings
/// after `d` accrue at the cut wage until the revised retirement age, and
/// the new flat level is paid over `[d, T]`.
#[allow(clippy::too_many_arguments)]
fn post_displacement_consumption_raw(
    prefs: &Preferences,
    tech: &Technology,
    s: f64,
    c: f64,
    r_planned: f64,
    wage_factor: f64,
    wealth_loss: f64,
    d: f64,
    r_d: f64,
) -> f64 {
    let r = prefs.r;
    let w = tech.wage(s);
    let w_d = wage_factor * w;
    let denom = (-r * d).exp() - (-r * prefs.lifespan).exp();
    c + (w_d - w) * ((-r * d).exp() - (-r * r_planned).exp()) / denom
        + ((-r * r_planned).exp() - (-r * r_d).exp()) * w_d / denom
        - annuitized_loss(prefs, wealth_loss, d)
}

/// Post-displacement flat consumption for a worker displaced at age `d`
/// with sunk schooling `s`, planned retirement `r_planned`, and revised
/// retirement `r_d`. Errors rather than clipping when the implied
/// consumption is not positive.
#[allow(clippy::too_many_arguments)]
pub fn post_displacement_consumption(
    prefs: &Preferences,
    tech: &Technology,
    s: f64,
    r_planned: f64,
    wage_factor: f64,
    wealth_loss: f64,
    d: f64,
    r_d: f64,
) -> Result<f64, ModelError> {
    if !(s <= d && d < r_planned && r_planned <= prefs.lifespan) {
        return Err(ModelError::Domain(format!(
            "need s <= d < R_planned <= lifespan, got s = {s}, d = {d}, R_planned = {r_planned}"
        )));
    }
    if !(d <= r_d && r_d <= prefs.lifespan) {
        return Err(ModelError::Domain(format!(
            "need d <= R_d <= lifespan, got d = {d}, R_d = {r_d}"
        )));
    }
    let c = consumption(prefs, tech, s, r_planned)?;
    let c_d = post_displacement_consumption_raw(
        prefs,
        tech,
        s,
        c,
        r_planned,
        wage_factor,
        wealth_loss,
        d,
        r_d,
    );
    if c_d <= 0.0 {
        return Err(ModelError::NegativeConsumption { value: c_d });
    }
    Ok(c_d)
}

/// Re-optimizes retirement after a displacement at age `d` against an
/// existing plan. If the marginal benefit of working at `d` already falls
/// below the disutility of work (and quitting is affordable), the worker
/// exits immediately; otherwise the revised retirement age solves the
/// retirement condition at the cut wage, with consumption adjusting through
/// the displaced budget constraint.
pub fn solve_post_displacement_retirement(
    prefs: &Preferences,
    tech: &Technology,
    plan: &LifeCyclePlan,
    wage_factor: f64,
    wealth_loss: f64,
    d: f64,
) -> Result<PostDisplacementOutcome, ModelError> {
    if !(plan.schooling <= d && d < plan.retirement) {
        return Err(ModelError::Domain(format!(
            "displacement age must lie in [s, R_planned), got d = {d} with s = {}, R_planned = {}",
            plan.schooling, plan.retirement
        )));
    }
    let w_d = wage_factor * tech.wage(plan.schooling);
    let c_d_at = |r_d: f64| {
        post_displacement_consumption_raw(
            prefs,
            tech,
            plan.schooling,
            plan.consumption,
            plan.retirement,
            wage_factor,
            wealth_loss,
            d,
            r_d,
        )
    };
    let c_exit = c_d_at(d);
    if c_exit > 0.0
        && tech.disutility(d, prefs.lifespan) >= prefs.marginal_utility(c_exit) * w_d
    {
        return Ok(PostDisplacementOutcome {
            consumption: c_exit,
            retirement: d,
            immediate_exit: true,
        });
    }
    let hi = prefs.lifespan - LIFESPAN_MARGIN;
    // quitting at d may be unaffordable (negative consumption); bracket the
    // root from the first age at which retiring is feasible
    let lo = if c_exit > 0.0 {
        d
    } else {
        let feasibility = Bracket::scan(c_d_at, d, hi).map_err(|_| {
            ModelError::NoInteriorSolution(
                "post-displacement consumption never turns positive before end of life".into(),
            )
        })?;
        numerics::find_root(c_d_at, feasibility, numerics::DEFAULT_ROOT_TOL)?
    };
    let g = |r_d: f64| {
        let c_d = c_d_at(r_d);
        if c_d <= 0.0 {
            return f64::NEG_INFINITY;
        }
        tech.disutility(r_d, prefs.lifespan) - prefs.marginal_utility(c_d) * w_d
    };
    let bracket = Bracket::scan(g, lo, hi).map_err(|e| match e {
        NumericsError::NoSignChange { .. } => ModelError::NoInteriorSolution(
            "revised retirement condition has no root after displacement".into(),
        ),
        other => ModelError::Numerics(other),
    })?;
    let r_d = numerics::find_root(g, bracket, numerics::DEFAULT_ROOT_TOL)?;
    let c_d = c_d_at(r_d);
    if c_d <= 0.0 {
        return Err(ModelError::NegativeConsumption { value: c_d });
    }
    Ok(PostDisplacementOutcome {
        consumption: c_d,
        retirement: r_d,
        immediate_exit: false,
    })
}

/// Sunk-schooling solve under a combination of shocks, for simulated agents
/// who can hold several at once. Injury is expressed through the
/// technology's own `disutility_scale`; captivity stretches the career
/// start to `s + captivity`; a displacement `(wage_factor, wealth_loss,
/// age)` either cuts the wage for the whole career (when it arrives before
/// the career starts) or triggers the mid-career re-optimization.
pub fn solve_ex_post_combined(
    prefs: &Preferences,
    tech: &Technology,
    s_fixed: f64,
    captivity: f64,
    displacement: Option<(f64, f64, f64)>,
) -> Result<LifeCyclePlan, ModelError> {
    if !(0.0..prefs.lifespan).contains(&s_fixed) {
        return Err(ModelError::Domain(format!(
            "fixed schooling must lie in [0, lifespan), got {s_fixed}"
        )));
    }
    if !(0.0..prefs.lifespan).contains(&captivity) {
        return Err(ModelError::Domain(format!(
            "captivity duration must lie in [0, lifespan), got {captivity}"
        )));
    }
    let base = Adjustment {
        captivity,
        ..Adjustment::none()
    };
    let Some((wage_factor, wealth_loss, d)) = displacement else {
        return solve_with_schooling_sunk(prefs, tech, s_fixed, &base);
    };
    Shock::Displacement {
        wage_factor,
        wealth_loss,
        age: d.max(0.0),
    }
    .validate(prefs)?;
    let d = d.max(0.0);
    if d <= s_fixed + captivity {
        // struck before the career starts: the cut applies throughout
        let adj = Adjustment {
            captivity,
            wage_factor,
            annuity: annuitized_loss(prefs, wealth_loss, d),
            ..Adjustment::none()
        };
        return solve_with_schooling_sunk(prefs, tech, s_fixed, &adj);
    }
    let planned = solve_with_schooling_sunk(prefs, tech, s_fixed, &base)?;
    if planned.corner.is_some() || d >= planned.retirement {
        return Ok(planned); // already out of the labor force when struck
    }
    let outcome =
        solve_post_displacement_retirement(prefs, tech, &planned, wage_factor, wealth_loss, d)?;
    let value = post_displacement_value(prefs, tech, &planned, &outcome, d)?;
    Ok(LifeCyclePlan {
        schooling: s_fixed,
        retirement: outcome.retirement,
        consumption: outcome.consumption,
        value,
        corner: None,
    })
}

/// Lifetime utility of a displaced life: planned consumption to `d`,
/// post-displacement consumption afterwards, work disutility to the revised
/// retirement age.
fn post_displacement_value(
    prefs: &Preferences,
    tech: &Technology,
    plan: &LifeCyclePlan,
    outcome: &PostDisplacementOutcome,
    d: f64,
) -> Result<f64, ModelError> {
    if plan.consumption <= 0.0 || outcome.consumption <= 0.0 {
        return Err(ModelError::NonFinite(
            "consumption not positive, utility undefined".into(),
        ));
    }
    let r = prefs.r;
    let t_max = prefs.lifespan;
    let pre = prefs.utility_of(plan.consumption) * (1.0 - (-r * d).exp()) / r;
    let post =
        prefs.utility_of(outcome.consumption) * ((-r * d).exp() - (-r * t_max).exp()) / r;
    let disutility = numerics::integrate(
        |t| (-prefs.rho * t).exp() * tech.disutility(t, t_max),
        0.0,
        outcome.retirement,
        numerics::DEFAULT_QUAD_TOL * 1e-2,
    )?;
    Ok(pre + post - disutility)
}
