//! Scalar root finding, brute-force grid optimization, and adaptive
//! quadrature.
//!
//! Everything here is a pure function of its inputs and deterministic for
//! identical inputs, so the structural solvers built on top can be compared
//! bit-for-bit across runs and across worker threads.

use thiserror::Error;

/// Default absolute tolerance for [`find_root`].
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;
/// Default absolute tolerance for [`integrate`].
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
/// Iteration cap for [`find_root`].
pub const DEFAULT_MAX_ITER: usize = 200;
/// Number of equal subintervals scanned by [`Bracket::scan`].
pub const BRACKET_SCAN_POINTS: usize = 512;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("root finder did not converge within {max_iter} iterations (best x = {best})")]
    MaxIterations { max_iter: usize, best: f64 },
    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error("every grid node evaluated to -inf")]
    AllInfeasible,
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid interval: a = {a} exceeds b = {b}")]
    InvalidInterval { a: f64, b: f64 },
}

/// A sign-changing interval for a scalar function.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    /// Builds a bracket from pre-evaluated endpoints, checking the sign
    /// invariant (`f_lo` and `f_hi` of strictly opposite sign, or one zero).
    pub fn new(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self, NumericsError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(NumericsError::InvalidBracket(format!(
                "endpoints must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        if !(f_lo.is_finite() && f_hi.is_finite()) {
            return Err(NumericsError::InvalidBracket(format!(
                "endpoint values must be finite, got f(lo)={f_lo}, f(hi)={f_hi}"
            )));
        }
        if f_lo * f_hi > 0.0 {
            return Err(NumericsError::NoSignChange { lo, hi, f_lo, f_hi });
        }
        Ok(Self { lo, hi, f_lo, f_hi })
    }

    /// Evaluates `g` at both endpoints and builds the bracket.
    pub fn evaluate(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Self, NumericsError> {
        Self::new(lo, hi, g(lo), g(hi))
    }

    /// Scans [`BRACKET_SCAN_POINTS`] equal subintervals of `[lo, hi]` and
    /// returns the first (leftmost) sign-changing subinterval. Nodes where
    /// `g` is non-finite are skipped, so the scan tolerates functions that
    /// are only defined on part of the interval.
    pub fn scan(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Self, NumericsError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(NumericsError::InvalidBracket(format!(
                "scan interval must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        let n = BRACKET_SCAN_POINTS;
        let step = (hi - lo) / n as f64;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=n {
            let x = if i == n { hi } else { lo + i as f64 * step };
            let fx = g(x);
            if !fx.is_finite() {
                continue;
            }
            if let Some((px, pfx)) = prev {
                if pfx * fx <= 0.0 {
                    return Bracket::new(px, x, pfx, fx);
                }
            }
            prev = Some((x, fx));
        }
        Err(NumericsError::NoSignChange {
            lo,
            hi,
            f_lo: g(lo),
            f_hi: g(hi),
        })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Finds a root of `g` inside `bracket` by Brent's method (bisection with
/// secant / inverse-quadratic acceleration). Converges when `|g(x)| <= tol`
/// or the bracket width shrinks below `tol`.
pub fn find_root(
    g: impl Fn(f64) -> f64,
    bracket: Bracket,
    tol: f64,
) -> Result<f64, NumericsError> {
    find_root_capped(g, bracket, tol, DEFAULT_MAX_ITER)
}

/// [`find_root`] with an explicit iteration cap.
pub fn find_root_capped(
    g: impl Fn(f64) -> f64,
    bracket: Bracket,
    tol: f64,
    max_iter: usize,
) -> Result<f64, NumericsError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (bracket.f_lo, bracket.f_hi);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(NumericsError::NoSignChange {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = b - a;
    for _ in 0..max_iter {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 || fb.abs() <= tol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // secant / inverse quadratic step
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let q2 = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * q2 * (q2 - r) - (b - a) * (r - 1.0));
                q = (q2 - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = g(b);
    }
    Err(NumericsError::MaxIterations { max_iter, best: b })
}

/// A rectangular evaluation grid, one `(lo, hi, n_points)` triple per
/// dimension with `n_points >= 2` equally spaced nodes including endpoints.
#[derive(Debug, Clone)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n_points: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n_points: Vec<usize>) -> Result<Self, NumericsError> {
        if lo.is_empty() || lo.len() != hi.len() || lo.len() != n_points.len() {
            return Err(NumericsError::InvalidGrid(
                "dimension mismatch between lo, hi and n_points".into(),
            ));
        }
        for i in 0..lo.len() {
            if !(lo[i].is_finite() && hi[i].is_finite() && lo[i] < hi[i]) {
                return Err(NumericsError::InvalidGrid(format!(
                    "dimension {i}: need finite lo < hi, got [{}, {}]",
                    lo[i], hi[i]
                )));
            }
            if n_points[i] < 2 {
                return Err(NumericsError::InvalidGrid(format!(
                    "dimension {i}: need at least 2 points, got {}",
                    n_points[i]
                )));
            }
        }
        Ok(Self { lo, hi, n_points })
    }

    /// Square 2-D grid helper.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self, NumericsError> {
        Self::new(vec![lo, lo], vec![hi, hi], vec![n, n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Grid spacing along dimension `i`.
    pub fn step(&self, i: usize) -> f64 {
        (self.hi[i] - self.lo[i]) / (self.n_points[i] - 1) as f64
    }

    fn node(&self, idx: &[usize], out: &mut [f64]) {
        for i in 0..self.dim() {
            out[i] = self.lo[i] + idx[i] as f64 * self.step(i);
        }
    }
}

/// Exhaustive maximization of `h` over all grid nodes. Ties are broken in
/// favour of the lexicographically smallest coordinates; nodes evaluating
/// to `-inf` or NaN are treated as infeasible.
pub fn grid_argmax(
    h: impl Fn(&[f64]) -> f64,
    grid: &GridSpec,
) -> Result<(Vec<f64>, f64), NumericsError> {
    let dim = grid.dim();
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut best: Option<(Vec<f64>, f64)> = None;
    loop {
        grid.node(&idx, &mut point);
        let v = h(&point);
        // strict improvement keeps the first (lexicographically smallest) node
        if v.is_finite() && best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((point.clone(), v));
        }
        // odometer increment, last dimension fastest
        let mut i = dim;
        loop {
            if i == 0 {
                return best.ok_or(NumericsError::AllInfeasible);
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < grid.n_points[i] {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// Adaptive-Simpson quadrature of `g` over `[a, b]` to absolute tolerance
/// `tol`. Returns 0 for an empty interval.
pub fn integrate(
    g: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, NumericsError> {
    if a > b {
        return Err(NumericsError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    let eval = |x: f64| -> Result<f64, NumericsError> {
        let v = g(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NumericsError::NonFiniteIntegrand { x })
        }
    };
    let m = 0.5 * (a + b);
    let fa = eval(a)?;
    let fb = eval(b)?;
    let fm = eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&eval, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    eval: &impl Fn(f64) -> Result<f64, NumericsError>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64, NumericsError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    let half = 0.5 * tol;
    Ok(
        adaptive_simpson(eval, a, m, fa, flm, fm, left, half, depth - 1)?
            + adaptive_simpson(eval, m, b, fm, frm, fb, right, half, depth - 1)?,
    )
}
