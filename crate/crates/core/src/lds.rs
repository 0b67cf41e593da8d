//! Spectral large-deviation toolkit.
//!
//! `θ(s)` is the largest real eigenvalue of the tilted generator. Under the
//! secular generator the populations close on themselves, so the top
//! eigenpair lives in the population block and is found with
//! [`perron_pair`]. Derivatives come from eigenvector perturbation theory:
//!
//! * `θ' = ⟨l| W' |r⟩` with `⟨l|r⟩ = 1`,
//! * `θ'' = ⟨l| W'' |r⟩ + 2 ⟨l| W' |r'⟩`, where `r'` solves
//!   `(W − θ) r' = −(W' − θ') r` with `⟨l|r'⟩ = 0`.
//!
//! Because counted entries scale as `e^{−s}`, `W'' = −W'` and the Mandel
//! parameter reduces to `Q = −2 ⟨l|W'|r'⟩ / θ'` without cancellation.

use alloc::{format, string::String, vec::Vec};
use core::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::generator::{CountingGenerator, TiltedGenerator};
use crate::linalg::{complex_eigenvalues, perron_pair, solve_bordered, LinalgError, PerronPair};

/// Below this `|θ'|` the Mandel parameter is undefined.
pub const ACTIVITY_FLOOR: f64 = 1e-14;

/// Step for the finite-difference cross-checks.
pub const FD_STEP: f64 = 1e-4;

/// Errors of the spectral pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdsError {
    /// Eigen-solver failure.
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    /// The top eigenvalue has a nonzero imaginary part.
    #[error("top eigenvalue {re} + {im}i is not real")]
    ComplexTop {
        /// Real part.
        re: f64,
        /// Imaginary part.
        im: f64,
    },
    /// Several complex eigenvalues share the largest real part.
    #[error("ambiguous top eigenvalue: {0} complex eigenvalues share real part {1}")]
    AmbiguousTop(usize, f64),
    /// `θ'(s)` vanishes.
    #[error("Mandel parameter undefined at s = {0}: vanishing activity")]
    UndefinedMandel(f64),
    /// Bad `s` grid.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    /// A model family member could not be built.
    #[error("parameter family failed at {parameter}: {message}")]
    Family {
        /// Parameter value.
        parameter: f64,
        /// Underlying error.
        message: String,
    },
}

/// Uniform grid of `points` values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SGrid {
    /// First value.
    pub min: f64,
    /// Last value.
    pub max: f64,
    /// Number of points, at least 2.
    pub points: usize,
}

impl Default for SGrid {
    fn default() -> Self {
        Self {
            min: -2.0,
            max: 12.0,
            points: 281,
        }
    }
}

impl SGrid {
    /// Validated grid.
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self, LdsError> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(LdsError::InvalidGrid(format!(
                "need finite min < max, got [{min}, {max}]"
            )));
        }
        if points < 2 {
            return Err(LdsError::InvalidGrid(format!(
                "need at least 2 points, got {points}"
            )));
        }
        Ok(Self { min, max, points })
    }

    /// `i`-th grid value.
    pub fn value(&self, i: usize) -> f64 {
        self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64
    }

    /// All grid values.
    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }
}

/// `θ(s)` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaDerivatives {
    /// `θ(s)`.
    pub theta: f64,
    /// `θ'(s)`.
    pub first: f64,
    /// `θ''(s)`.
    pub second: f64,
    /// `Q(s)`, when the activity does not vanish.
    pub mandel: Option<f64>,
}

/// One row of a `θ(s)` scan.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ScanPoint {
    /// Counting field.
    pub s: f64,
    /// `θ(s)` in cm⁻¹.
    pub theta: f64,
    /// `−θ'(s)` in cm⁻¹.
    pub activity: f64,
    /// `−θ''(s)/θ'(s) − 1`; `None` where the activity vanishes.
    pub mandel: Option<f64>,
}

/// `θ(s)` from the population block.
pub fn theta<G: CountingGenerator + ?Sized>(generator: &G, s: f64) -> Result<f64, LdsError> {
    Ok(perron_pair(&generator.population_block(s))?.value)
}

/// `θ(s)` from the spectrum of the full `N²`-dimensional `W_s`.
pub fn theta_full(generator: &TiltedGenerator, s: f64) -> Result<f64, LdsError> {
    top_real_eigenvalue(complex_eigenvalues(generator.assemble(s)))
}

/// Largest-real-part eigenvalue, which must be real.
pub fn top_real_eigenvalue(eigenvalues: Vec<Complex64>) -> Result<f64, LdsError> {
    let max_re = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<&Complex64> = eigenvalues
        .iter()
        .filter(|z| z.re >= max_re - 1e-12)
        .collect();
    if let Some(real) = top
        .iter()
        .filter(|z| z.im.abs() < 1e-9)
        .map(|z| z.re)
        .reduce(f64::max)
    {
        return Ok(real);
    }
    match top.as_slice() {
        [z] => Err(LdsError::ComplexTop { re: z.re, im: z.im }),
        many => Err(LdsError::AmbiguousTop(many.len(), max_re)),
    }
}

fn first_from_pair<G: CountingGenerator + ?Sized>(g: &G, pair: &PerronPair, s: f64) -> f64 {
    let d = g.population_block_derivative(s);
    pair.left.dot(&(d * &pair.right))
}

/// `θ`, `θ'`, `θ''` and `Q` at `s`.
///
/// `θ'` uses the eigenvector identity; `θ''` the reduced-resolvent formula.
/// When the bordered system is singular (a transition-free generator),
/// `θ''` falls back to [`second_derivative_fd`].
pub fn theta_derivatives<G: CountingGenerator + ?Sized>(
    generator: &G,
    s: f64,
) -> Result<ThetaDerivatives, LdsError> {
    let w = generator.population_block(s);
    let pair = perron_pair(&w)?;
    let d1 = generator.population_block_derivative(s);
    let d1r = &d1 * &pair.right;
    let first = pair.left.dot(&d1r);

    let n = w.nrows();
    let mut shifted = w.clone();
    for i in 0..n {
        shifted[(i, i)] -= pair.value;
    }
    let rhs: DVector<f64> = -(d1r - &pair.right * first);
    let cross = match solve_bordered(&shifted, &pair.right, &pair.left, &rhs) {
        Ok(dr) if dr.iter().all(|v| v.is_finite()) => Some(pair.left.dot(&(&d1 * dr))),
        _ => None,
    };

    let (second, mandel) = match cross {
        Some(x) => {
            // W'' = −W' for e^{−s} tilts
            let second = -first + 2.0 * x;
            let q = (first.abs() >= ACTIVITY_FLOOR).then(|| -2.0 * x / first);
            (second, q)
        }
        None => {
            let second = second_derivative_fd(generator, s)?;
            let q = (first.abs() >= ACTIVITY_FLOOR).then(|| -second / first - 1.0);
            (second, q)
        }
    };
    Ok(ThetaDerivatives {
        theta: pair.value,
        first,
        second,
        mandel,
    })
}

/// `θ'(s)` from the eigenvector identity alone.
pub fn theta_prime<G: CountingGenerator + ?Sized>(generator: &G, s: f64) -> Result<f64, LdsError> {
    let pair = perron_pair(&generator.population_block(s))?;
    Ok(first_from_pair(generator, &pair, s))
}

fn richardson(f: impl Fn(f64) -> Result<f64, LdsError>, s: f64, h: f64) -> Result<f64, LdsError> {
    let central = |h: f64| -> Result<f64, LdsError> { Ok((f(s + h)? - f(s - h)?) / (2.0 * h)) };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `θ'(s)` by Richardson-refined central differences of [`theta`].
pub fn first_derivative_fd<G: CountingGenerator + ?Sized>(
    generator: &G,
    s: f64,
) -> Result<f64, LdsError> {
    richardson(|x| theta(generator, x), s, FD_STEP)
}

/// `θ''(s)` by Richardson-refined central differences of [`theta_prime`]
/// with step `h = 1e-4`.
pub fn second_derivative_fd<G: CountingGenerator + ?Sized>(
    generator: &G,
    s: f64,
) -> Result<f64, LdsError> {
    richardson(|x| theta_prime(generator, x), s, FD_STEP)
}

/// `Q(s) = −θ''(s)/θ'(s) − 1`.
pub fn mandel<G: CountingGenerator + ?Sized>(generator: &G, s: f64) -> Result<f64, LdsError> {
    theta_derivatives(generator, s)?
        .mandel
        .ok_or(LdsError::UndefinedMandel(s))
}

/// One scan row at `s`.
pub fn scan_point<G: CountingGenerator + ?Sized>(
    generator: &G,
    s: f64,
) -> Result<ScanPoint, LdsError> {
    let d = theta_derivatives(generator, s)?;
    Ok(ScanPoint {
        s,
        theta: d.theta,
        activity: (-d.first).max(0.0),
        mandel: d.mandel,
    })
}

/// `θ`, activity and `Q` over `grid`.
pub fn scan<G: CountingGenerator + ?Sized>(
    generator: &G,
    grid: &SGrid,
) -> Result<Vec<ScanPoint>, LdsError> {
    grid.values()
        .into_iter()
        .map(|s| scan_point(generator, s))
        .collect()
}

/// One sample of the rate function.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RateFunctionPoint {
    /// Jump rate `k = K/t` in cm⁻¹.
    pub k: f64,
    /// `φ(k)` in cm⁻¹.
    pub phi: f64,
}

/// Rate function sampled at the activities of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    /// `(k, φ(k))`, one per scan point, in scan order.
    pub points: Vec<RateFunctionPoint>,
    /// Second differences of `θ` were all ≥ −1e-9.
    pub convex: bool,
    /// Largest gap between the grid Legendre transform and the parametric
    /// form `−θ(s) − s k(s)`.
    pub max_discrepancy: f64,
}

/// Tolerance on second differences of `θ` for the convexity check.
pub const CONVEXITY_TOLERANCE: f64 = 1e-9;

/// `φ(k) = −min_s [θ(s) + k s]` over the scanned `s`, evaluated at each
/// scanned activity `k(s) = −θ'(s)`.
///
/// Values are cross-checked against `−θ(s) − s k(s)`. Negative values from
/// rounding (`θ(0)` is zero only to machine precision) are clamped to 0.
pub fn rate_function(scan: &[ScanPoint]) -> Result<RateFunction, LdsError> {
    if scan.len() < 3 {
        return Err(LdsError::InvalidGrid(String::from(
            "rate function needs at least 3 scan points",
        )));
    }
    if scan.windows(2).any(|w| w[1].s <= w[0].s) {
        return Err(LdsError::InvalidGrid(String::from(
            "scan must be sorted by increasing s",
        )));
    }
    let convex = scan
        .windows(3)
        .all(|w| w[0].theta - 2.0 * w[1].theta + w[2].theta >= -CONVEXITY_TOLERANCE);
    if !convex {
        log::warn!("theta(s) is not convex on the scan grid; rate function flagged");
    }
    let mut max_discrepancy = 0.0f64;
    let points = scan
        .iter()
        .map(|p| {
            let k = p.activity;
            let min = scan
                .iter()
                .map(|q| q.theta + k * q.s)
                .fold(f64::INFINITY, f64::min);
            let phi = -min;
            let parametric = -p.theta - p.s * k;
            max_discrepancy = max_discrepancy.max((phi - parametric).abs());
            RateFunctionPoint {
                k,
                phi: phi.max(0.0),
            }
        })
        .collect();
    Ok(RateFunction {
        points,
        convex,
        max_discrepancy,
    })
}

/// `θ̂(s) = −min_k [φ(k) + k s]` over sampled rate-function points.
pub fn legendre_theta(points: &[RateFunctionPoint], s: f64) -> f64 {
    -points
        .iter()
        .map(|p| p.phi + p.k * s)
        .fold(f64::INFINITY, f64::min)
}

/// Refined location and height of a local maximum of `Q(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LocalMax {
    /// Location.
    pub s: f64,
    /// `Q` at the maximum.
    pub q: f64,
}

/// Sign change and local maximum of `Q(s)` on a scan range.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CrossoverReport {
    /// First `s` (increasing) where `Q` changes sign.
    pub s_star: Option<f64>,
    /// `Q(0)`, when defined.
    pub q_at_zero: Option<f64>,
    /// Highest interior local maximum of `Q`.
    pub local_max: Option<LocalMax>,
}

/// Bisection tolerance on `s*`.
pub const CROSSOVER_TOLERANCE: f64 = 1e-6;

/// Locates the first sign change of `Q(s)` on `grid` (bisected to
/// `|Δs| < 1e-6`) and the highest interior local maximum of `Q`.
pub fn find_crossover<G: CountingGenerator + ?Sized>(
    generator: &G,
    grid: &SGrid,
) -> Result<CrossoverReport, LdsError> {
    if grid.points < 32 {
        return Err(LdsError::InvalidGrid(format!(
            "crossover search needs at least 32 points, got {}",
            grid.points
        )));
    }
    let s_values = grid.values();
    let q: Vec<Option<f64>> = s_values
        .iter()
        .map(|&s| theta_derivatives(generator, s).map(|d| d.mandel))
        .collect::<Result<_, _>>()?;

    let mut s_star = None;
    for i in 0..s_values.len() - 1 {
        let (Some(qa), Some(qb)) = (q[i], q[i + 1]) else {
            continue;
        };
        if qa == 0.0 {
            s_star = Some(s_values[i]);
            break;
        }
        if qa * qb < 0.0 {
            s_star = Some(bisect_sign_change(
                generator,
                s_values[i],
                s_values[i + 1],
                qa,
            )?);
            break;
        }
    }

    let mut best: Option<usize> = None;
    for i in 1..s_values.len() - 1 {
        if let (Some(a), Some(b), Some(c)) = (q[i - 1], q[i], q[i + 1]) {
            if b > a && b >= c && best.map_or(true, |j| q[j].unwrap() < b) {
                best = Some(i);
            }
        }
    }
    let local_max = match best {
        Some(i) => Some(golden_max(generator, s_values[i - 1], s_values[i + 1])?),
        None => None,
    };

    let q_at_zero = theta_derivatives(generator, 0.0)?.mandel;
    Ok(CrossoverReport {
        s_star,
        q_at_zero,
        local_max,
    })
}

fn bisect_sign_change<G: CountingGenerator + ?Sized>(
    g: &G,
    mut lo: f64,
    mut hi: f64,
    q_lo: f64,
) -> Result<f64, LdsError> {
    let lo_negative = q_lo < 0.0;
    while hi - lo >= CROSSOVER_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        match theta_derivatives(g, mid)?.mandel {
            Some(0.0) => return Ok(mid),
            Some(q) if (q < 0.0) == lo_negative => lo = mid,
            Some(_) => hi = mid,
            None => return Err(LdsError::UndefinedMandel(mid)),
        }
    }
    Ok(0.5 * (lo + hi))
}

fn golden_max<G: CountingGenerator + ?Sized>(
    g: &G,
    mut a: f64,
    mut b: f64,
) -> Result<LocalMax, LdsError> {
    let inv_phi = 0.5 * (libm::sqrt(5.0) - 1.0);
    let q = |s: f64| mandel(g, s);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut qc, mut qd) = (q(c)?, q(d)?);
    while b - a > CROSSOVER_TOLERANCE {
        if qc > qd {
            b = d;
            d = c;
            qd = qc;
            c = b - inv_phi * (b - a);
            qc = q(c)?;
        } else {
            a = c;
            c = d;
            qc = qd;
            d = a + inv_phi * (b - a);
            qd = q(d)?;
        }
    }
    let s = 0.5 * (a + b);
    Ok(LocalMax { s, q: q(s)? })
}

/// `Q(0)` across a family of generators indexed by an external parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterScan {
    /// `(F, Q(0))` per grid value.
    pub rows: Vec<(f64, f64)>,
    /// Interior local maxima of `Q(0)` over `F`.
    pub local_maxima: Vec<(f64, f64)>,
}

/// `Q(0)` for each member of `family` over `parameters`.
pub fn scan_mandel_vs_parameter<G, E, F>(
    family: F,
    parameters: &[f64],
) -> Result<ParameterScan, LdsError>
where
    G: CountingGenerator,
    E: fmt::Display,
    F: Fn(f64) -> Result<G, E>,
{
    let rows: Vec<(f64, f64)> = parameters
        .iter()
        .map(|&p| {
            let g = family(p).map_err(|e| LdsError::Family {
                parameter: p,
                message: format!("{e}"),
            })?;
            Ok((p, mandel(&g, 0.0)?))
        })
        .collect::<Result<_, LdsError>>()?;
    let local_maxima = rows
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1)
        .map(|w| w[1])
        .collect();
    Ok(ParameterScan { rows, local_maxima })
}

/// Largest real eigenvalue of a dense real matrix via its full spectrum.
pub fn dense_top_eigenvalue(m: &DMatrix<f64>) -> Result<f64, LdsError> {
    top_real_eigenvalue(crate::linalg::real_matrix_eigenvalues(m))
}
