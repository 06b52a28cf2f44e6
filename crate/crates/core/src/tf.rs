//! Rational transfer functions in the shift operator `z` and their
//! deterministic fixed-step simulation.
//!
//! Every dynamic block in the system — desired behavior, participation
//! factors, plant models, the equivalent grid — is a proper rational
//! function of `z` with a fixed sample time. Coefficients are stored in
//! **descending powers of z**, matching the printed polynomial convention,
//! so `num = [b2, b1, b0]` means `b2 z^2 + b1 z + b0`.
//!
//! Three distinct evaluation routes are provided and cross-checked by the
//! test suite:
//! * [`LtiSimState::step`] — stateful difference-equation simulation
//!   (direct form II transposed), bit-reproducible for identical inputs;
//! * [`RationalZ::impulse_series`] — power-series long division of
//!   `num/den`, an independent coefficient recursion;
//! * [`RationalZ::eval`] — pointwise complex evaluation on the unit circle.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this absolute value of `den(1)`, a dc gain is never reported as a
/// number: the block is an integrator up to rounding.
pub const DC_HARD_THRESHOLD: f64 = 1e-9;

/// Relative cancellation level of `den(1)` against the largest denominator
/// coefficient that marks a suspicious steady-state evaluation. Cascades of
/// slow low-passes legitimately reach this level, so the flag also requires
/// the quotient itself to blow up (`NEAR_INTEGRATOR_DC`).
pub const NEAR_INTEGRATOR_REL: f64 = 1e-3;

/// Quotient magnitude above which a cancelled denominator is reported as a
/// near-integrator instead of a number. The published wind plant sits at
/// |num(1)/den(1)| ~ 1.5e3 with den(1) ~ 1e-4 out of coefficients of
/// order 27: that value is printed-rounding noise, not model structure.
pub const NEAR_INTEGRATOR_DC: f64 = 100.0;

/// Poles within this distance of the unit circle are classified marginal.
pub const STABILITY_TOL: f64 = 1e-9;

/// Proper rational function of `z` with a fixed sample time.
///
/// Invariants established at construction:
/// * the leading denominator coefficient is nonzero,
/// * `deg(num) <= deg(den)`,
/// * all coefficients and the sample time are finite, `sample_time > 0`.
///
/// [`RationalZ::new`] normalizes the denominator to monic form, and every
/// algebra operation returns a monic result. [`discretize_first_order`]
/// instead keeps a scaled denominator whose coefficients sum to exactly 1.0
/// so that the dc gain of a first-order block is preserved bit-exactly;
/// monic rescaling would round it by a few ulp.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalZ {
    num: Vec<f64>,
    den: Vec<f64>,
    sample_time: f64,
}

/// One point of a frequency response, evaluated at `z = e^{j omega T}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPoint {
    /// Angular frequency, rad/s.
    pub omega: f64,
    /// Complex response `num(z)/den(z)` on the unit circle.
    pub response: Complex64,
}

impl FrequencyPoint {
    pub fn magnitude(&self) -> f64 {
        self.response.norm()
    }

    pub fn phase(&self) -> f64 {
        self.response.arg()
    }
}

/// Steady-state gain of a block, or the reason it has none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DcGain {
    Value(f64),
    /// `den(1)` vanishes (or nearly vanishes relative to the coefficient
    /// scale): the quotient `num(1)/den(1)` would be dominated by the
    /// rounding of the printed coefficients, so it is reported distinctly
    /// instead of returned as a number.
    NearIntegrator {
        num_at_one: f64,
        den_at_one: f64,
    },
}

impl DcGain {
    pub fn value(&self) -> Option<f64> {
        match self {
            DcGain::Value(v) => Some(*v),
            DcGain::NearIntegrator { .. } => None,
        }
    }

    pub fn is_near_integrator(&self) -> bool {
        matches!(self, DcGain::NearIntegrator { .. })
    }
}

/// Stability classification against the open unit disc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    /// At least one pole within `STABILITY_TOL` of the unit circle and none
    /// strictly outside.
    Marginal,
    Unstable,
}

/// Denominator roots together with their unit-circle classification.
#[derive(Debug, Clone)]
pub struct PoleAnalysis {
    pub poles: Vec<Complex64>,
    pub stability: Stability,
}

impl PoleAnalysis {
    pub fn is_stable(&self) -> bool {
        self.stability == Stability::Stable
    }

    pub fn spectral_radius(&self) -> f64 {
        self.poles.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite { what, value: v });
        }
    }
    Ok(())
}

fn check_sample_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidSampleTime(t));
    }
    Ok(())
}

/// Strips exactly-zero leading coefficients; keeps at least one entry.
fn trim_leading_zeros(mut coeffs: Vec<f64>) -> Vec<f64> {
    while coeffs.len() > 1 && coeffs[0] == 0.0 {
        coeffs.remove(0);
    }
    coeffs
}

fn polymul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Adds polynomials aligned at the constant term (descending storage).
fn polyadd(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().enumerate() {
        out[n - a.len() + i] += x;
    }
    for (i, &x) in b.iter().enumerate() {
        out[n - b.len() + i] += x;
    }
    out
}

fn polysub(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().enumerate() {
        out[n - a.len() + i] += x;
    }
    for (i, &x) in b.iter().enumerate() {
        out[n - b.len() + i] -= x;
    }
    out
}

/// Horner evaluation of a descending-coefficient polynomial.
fn polyval(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        acc = acc * z + c;
    }
    acc
}

fn polyval_real(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs {
        acc = acc * x + c;
    }
    acc
}

impl RationalZ {
    /// Builds a proper rational function, normalizing the denominator to
    /// monic form. Exactly-zero leading coefficients are stripped first.
    pub fn new(num: Vec<f64>, den: Vec<f64>, sample_time: f64) -> Result<Self> {
        check_sample_time(sample_time)?;
        check_finite("numerator coefficient", &num)?;
        check_finite("denominator coefficient", &den)?;
        let num = if num.is_empty() { vec![0.0] } else { num };
        let mut num = trim_leading_zeros(num);
        let den = trim_leading_zeros(den);
        if den.iter().all(|&c| c == 0.0) {
            return Err(Error::ZeroDenominator);
        }
        if num.len() > den.len() {
            return Err(Error::Improper {
                num_deg: num.len() - 1,
                den_deg: den.len() - 1,
            });
        }
        let lead = den[0];
        let den: Vec<f64> = den.iter().map(|c| c / lead).collect();
        for c in &mut num {
            *c /= lead;
        }
        Ok(Self {
            num,
            den,
            sample_time,
        })
    }

    /// Same invariants as [`RationalZ::new`] but keeps the denominator
    /// scaling chosen by the caller.
    pub(crate) fn from_raw(num: Vec<f64>, den: Vec<f64>, sample_time: f64) -> Result<Self> {
        check_sample_time(sample_time)?;
        check_finite("numerator coefficient", &num)?;
        check_finite("denominator coefficient", &den)?;
        let num = trim_leading_zeros(if num.is_empty() { vec![0.0] } else { num });
        let den = trim_leading_zeros(den);
        if den[0] == 0.0 {
            return Err(Error::ZeroDenominator);
        }
        if num.len() > den.len() {
            return Err(Error::Improper {
                num_deg: num.len() - 1,
                den_deg: den.len() - 1,
            });
        }
        Ok(Self {
            num,
            den,
            sample_time,
        })
    }

    /// A constant (degree-zero) block.
    pub fn constant(gain: f64, sample_time: f64) -> Result<Self> {
        Self::from_raw(vec![gain], vec![1.0], sample_time)
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    pub fn num_degree(&self) -> usize {
        self.num.len() - 1
    }

    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    /// Nyquist angular frequency `pi / T`, rad/s.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.sample_time
    }

    /// Returns an equivalent block with a monic denominator.
    pub fn to_monic(&self) -> Self {
        let lead = self.den[0];
        Self {
            num: self.num.iter().map(|c| c / lead).collect(),
            den: self.den.iter().map(|c| c / lead).collect(),
            sample_time: self.sample_time,
        }
    }

    fn require_same_rate(&self, other: &Self) -> Result<()> {
        if self.sample_time != other.sample_time {
            return Err(Error::SampleTimeMismatch {
                a: self.sample_time,
                b: other.sample_time,
            });
        }
        Ok(())
    }

    /// Series product. The result is proper with a monic denominator.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.require_same_rate(other)?;
        Self::new(
            polymul(&self.num, &other.num),
            polymul(&self.den, &other.den),
            self.sample_time,
        )
    }

    /// Parallel sum over the common denominator. No pole-zero cancellation
    /// is attempted; a constructed residual stays a literal difference.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.require_same_rate(other)?;
        let num = polyadd(
            &polymul(&self.num, &other.den),
            &polymul(&other.num, &self.den),
        );
        Self::new(num, polymul(&self.den, &other.den), self.sample_time)
    }

    pub fn subtract(&self, other: &Self) -> Result<Self> {
        self.require_same_rate(other)?;
        let num = polysub(
            &polymul(&self.num, &other.den),
            &polymul(&other.num, &self.den),
        );
        Self::new(num, polymul(&self.den, &other.den), self.sample_time)
    }

    /// Pointwise evaluation of `num(z)/den(z)`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        polyval(&self.num, z) / polyval(&self.den, z)
    }

    /// Steady-state gain `num(1)/den(1)`, or the near-integrator report when
    /// `den(1)` is too small for the quotient to mean anything: below the
    /// hard threshold outright, or cancelled to `NEAR_INTEGRATOR_REL` of the
    /// coefficient scale while the quotient exceeds `NEAR_INTEGRATOR_DC`.
    pub fn dc_gain(&self) -> DcGain {
        let num_at_one = polyval_real(&self.num, 1.0);
        let den_at_one = polyval_real(&self.den, 1.0);
        let scale = self.den.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let cancelled = den_at_one.abs() < NEAR_INTEGRATOR_REL * scale;
        let blown_up = num_at_one.abs() > NEAR_INTEGRATOR_DC * den_at_one.abs();
        if den_at_one.abs() <= DC_HARD_THRESHOLD || (cancelled && blown_up) {
            DcGain::NearIntegrator {
                num_at_one,
                den_at_one,
            }
        } else {
            DcGain::Value(num_at_one / den_at_one)
        }
    }

    /// Frequency response on the unit circle at the given angular
    /// frequencies. Each `omega` must lie in `[0, pi/T)`.
    pub fn freq_response(&self, omegas: &[f64]) -> Result<Vec<FrequencyPoint>> {
        let nyquist = self.nyquist();
        let mut out = Vec::with_capacity(omegas.len());
        for &omega in omegas {
            if !omega.is_finite() || omega < 0.0 || omega >= nyquist {
                return Err(Error::FrequencyOutOfRange { omega, nyquist });
            }
            let z = Complex64::from_polar(1.0, omega * self.sample_time);
            out.push(FrequencyPoint {
                omega,
                response: self.eval(z),
            });
        }
        Ok(out)
    }

    /// Denominator roots via the companion-matrix eigenvalue problem,
    /// classified against the unit circle. A degree-zero denominator has no
    /// poles and is stable.
    pub fn poles(&self) -> PoleAnalysis {
        let monic = self.to_monic();
        let n = monic.den.len() - 1;
        if n == 0 {
            return PoleAnalysis {
                poles: Vec::new(),
                stability: Stability::Stable,
            };
        }
        let mut companion = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            companion[(i, n - 1)] = -monic.den[n - i];
        }
        let eigen = companion.complex_eigenvalues();
        let mut poles: Vec<Complex64> = eigen.iter().map(|e| Complex64::new(e.re, e.im)).collect();
        poles.sort_by(|a, b| {
            a.norm()
                .partial_cmp(&b.norm())
                .unwrap()
                .then(a.re.partial_cmp(&b.re).unwrap())
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        let radius = poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let stability = if radius < 1.0 - STABILITY_TOL {
            Stability::Stable
        } else if radius <= 1.0 + STABILITY_TOL {
            Stability::Marginal
        } else {
            Stability::Unstable
        };
        PoleAnalysis { poles, stability }
    }

    /// First `n` samples of the impulse response by power-series long
    /// division of `num/den`. This is an independent route from
    /// [`LtiSimState::step`] and backs the engine cross-checks.
    pub fn impulse_series(&self, n: usize) -> Vec<f64> {
        let pad = self.den.len() - self.num.len();
        let mut h = Vec::with_capacity(n);
        for k in 0..n {
            let b = if k >= pad && k - pad < self.num.len() {
                self.num[k - pad]
            } else {
                0.0
            };
            let mut acc = b;
            for j in 1..self.den.len().min(k + 1) {
                acc -= self.den[j] * h[k - j];
            }
            h.push(acc / self.den[0]);
        }
        h
    }

    /// True when `self` and `other` represent the same rational function:
    /// cross-multiplied numerators agree coefficient-wise within `tol`.
    /// Both sides are brought to monic denominators first so the comparison
    /// does not depend on scaling.
    pub fn equals_as_rational(&self, other: &Self, tol: f64) -> bool {
        if self.sample_time != other.sample_time {
            return false;
        }
        let a = self.to_monic();
        let b = other.to_monic();
        let lhs = polymul(&a.num, &b.den);
        let rhs = polymul(&b.num, &a.den);
        let diff = polysub(&lhs, &rhs);
        diff.iter().all(|c| c.abs() <= tol)
    }
}

/// Forward-Euler discretization of the first-order lag `mu / (tau s + 1)`:
/// substituting `s -> (z - 1)/T` gives `mu T / (tau z + (T - tau))`.
///
/// `tau = 0` collapses to the constant `mu`. The returned denominator is
/// scaled as `[tau/T, 1 - tau/T]` with the second coefficient corrected so
/// the pair sums to exactly 1.0; `dc_gain` of the result is therefore `mu`
/// bit-exactly.
pub fn discretize_first_order(dc_gain: f64, tau: f64, sample_time: f64) -> Result<RationalZ> {
    check_sample_time(sample_time)?;
    if !dc_gain.is_finite() {
        return Err(Error::NonFinite {
            what: "dc gain",
            value: dc_gain,
        });
    }
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
        });
    }
    if tau == 0.0 {
        return RationalZ::constant(dc_gain, sample_time);
    }
    let mut d0 = tau / sample_time;
    let d1 = 1.0 - d0;
    // Re-derive d0 so that d0 + d1 == 1.0 holds exactly; the subtraction
    // 1 - d1 is exact by Sterbenz whenever d1 is within a binade of 1.
    d0 = 1.0 - d1;
    RationalZ::from_raw(vec![dc_gain], vec![d0, d1], sample_time)
}

/// Difference-equation simulation state for one [`RationalZ`].
///
/// Direct form II transposed with `deg(den)` delay slots. The all-zero
/// state reproduces the zero-input response identically zero, and the same
/// input sequence always reproduces the same output sequence bit for bit.
/// One state is owned by exactly one stepping context; independent
/// simulations may run on separate threads freely.
#[derive(Debug, Clone)]
pub struct LtiSimState {
    tf: RationalZ,
    /// Numerator padded to denominator length, divided by the leading
    /// denominator coefficient.
    b: Vec<f64>,
    /// Monic denominator.
    a: Vec<f64>,
    s: Vec<f64>,
}

impl LtiSimState {
    pub fn new(tf: &RationalZ) -> Self {
        let lead = tf.den[0];
        let n = tf.den.len();
        let mut b = vec![0.0; n];
        let pad = n - tf.num.len();
        for (i, &c) in tf.num.iter().enumerate() {
            b[pad + i] = c / lead;
        }
        let a: Vec<f64> = tf.den.iter().map(|c| c / lead).collect();
        LtiSimState {
            tf: tf.clone(),
            b,
            a,
            s: vec![0.0; n - 1],
        }
    }

    pub fn tf(&self) -> &RationalZ {
        &self.tf
    }

    pub fn state(&self) -> &[f64] {
        &self.s
    }

    /// Advances one sample: consumes `u(k)`, returns `y(k)`.
    pub fn step(&mut self, input: f64) -> f64 {
        let n = self.s.len();
        if n == 0 {
            return self.b[0] * input;
        }
        let y = self.b[0] * input + self.s[0];
        for i in 0..n - 1 {
            self.s[i] = self.b[i + 1] * input - self.a[i + 1] * y + self.s[i + 1];
        }
        self.s[n - 1] = self.b[n] * input - self.a[n] * y;
        y
    }

    /// Resets the delay line to the all-zero state.
    pub fn reset(&mut self) {
        self.s.iter_mut().for_each(|v| *v = 0.0);
    }
}
