//! Feedback electronics `K(ω) = g · Π(iω − z) / Π(iω − p) · e^(−iωτ)`.

use num_complex::Complex;
use thiserror::Error;

use crate::poly::Poly;
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("filter parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("{kind} {value} has no complex-conjugate partner")]
    NotConjugateClosed { kind: &'static str, value: String },
    #[error("improper filter: {zeros} zeros but only {poles} poles")]
    Improper { zeros: usize, poles: usize },
    #[error("filter pole {0} is not strictly in the left half-plane")]
    UnstablePole(String),
    #[error("delay must be non-negative, got {0}")]
    NegativeDelay(f64),
}

/// Proper, stable, real-impulse-response loop filter with optional pure
/// delay.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopFilter<T> {
    gain: T,
    zeros: Vec<Complex<T>>,
    poles: Vec<Complex<T>>,
    delay: T,
}

/// Controllable-canonical realization of the rational part of `K`:
/// `ẋ = A x + B e`, `u = C x + D e` with `A` in companion form and
/// `B = [0, …, 0, 1]ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace<T> {
    /// Last row of the companion matrix, `−a₀ … −aₙ₋₁`.
    pub feedback_row: Vec<T>,
    pub output: Vec<T>,
    pub feedthrough: T,
}

impl<T: Scalar> StateSpace<T> {
    pub fn order(&self) -> usize {
        self.feedback_row.len()
    }
}

impl<T: Scalar> LoopFilter<T> {
    pub fn new(
        gain: T,
        zeros: Vec<Complex<T>>,
        poles: Vec<Complex<T>>,
        delay: T,
    ) -> Result<Self, FilterError> {
        if !gain.is_finite() {
            return Err(FilterError::NonFinite("gain"));
        }
        if !delay.is_finite() {
            return Err(FilterError::NonFinite("delay"));
        }
        if zeros.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(FilterError::NonFinite("zeros"));
        }
        if poles.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(FilterError::NonFinite("poles"));
        }
        if delay < T::zero() {
            return Err(FilterError::NegativeDelay(to_f64(delay)));
        }
        if zeros.len() > poles.len() {
            return Err(FilterError::Improper {
                zeros: zeros.len(),
                poles: poles.len(),
            });
        }
        check_conjugate_closed(&zeros, "zero")?;
        check_conjugate_closed(&poles, "pole")?;
        if let Some(p) = poles.iter().find(|p| p.re >= T::zero()) {
            return Err(FilterError::UnstablePole(format!("{p}")));
        }
        Ok(Self {
            gain,
            zeros,
            poles,
            delay,
        })
    }

    /// Frequency-independent gain, no delay.
    pub fn flat(gain: T) -> Self {
        Self {
            gain,
            zeros: Vec::new(),
            poles: Vec::new(),
            delay: T::zero(),
        }
    }

    /// Flat gain followed by a pure delay.
    pub fn flat_with_delay(gain: T, delay: T) -> Result<Self, FilterError> {
        Self::new(gain, Vec::new(), Vec::new(), delay)
    }

    /// `K ≡ 0`: the loop is open.
    pub fn open() -> Self {
        Self::flat(T::zero())
    }

    pub fn gain(&self) -> T {
        self.gain
    }

    pub fn zeros(&self) -> &[Complex<T>] {
        &self.zeros
    }

    pub fn poles(&self) -> &[Complex<T>] {
        &self.poles
    }

    pub fn delay(&self) -> T {
        self.delay
    }

    pub fn is_zero(&self) -> bool {
        self.gain == T::zero()
    }

    pub fn has_delay(&self) -> bool {
        self.delay > T::zero()
    }

    /// Same filter with a different overall gain.
    pub fn with_gain(&self, gain: T) -> Self {
        Self {
            gain,
            ..self.clone()
        }
    }

    /// `K(ω)`.
    pub fn response(&self, omega: T) -> Complex<T> {
        let s = Complex::new(T::zero(), omega);
        let num = self
            .zeros
            .iter()
            .fold(Complex::new(self.gain, T::zero()), |acc, z| acc * (s - z));
        let den = self
            .poles
            .iter()
            .fold(Complex::new(T::one(), T::zero()), |acc, p| acc * (s - p));
        let delay = Complex::from_polar(T::one(), -omega * self.delay);
        num / den * delay
    }

    /// Monic numerator `Π(s − z)` (gain not included).
    pub fn numerator(&self) -> Poly<T> {
        Poly::from_roots(&self.zeros)
    }

    /// Monic denominator `Π(s − p)`.
    pub fn denominator(&self) -> Poly<T> {
        Poly::from_roots(&self.poles)
    }

    /// State-space form of the rational part (the delay is not included).
    pub fn state_space(&self) -> StateSpace<T> {
        let den = self.denominator();
        let num = self.numerator().scale(self.gain);
        let n = den.degree();
        let feedthrough = if num.degree() == n && n == self.zeros.len() {
            num.leading()
        } else {
            T::zero()
        };
        // strictly proper remainder: g·N − d·D, degree < n
        let rem = num.add(&den.scale(-feedthrough));
        let mut output = rem.coeffs().to_vec();
        output.resize(n, T::zero());
        let feedback_row = den.coeffs()[..n].iter().map(|&a| -a).collect();
        StateSpace {
            feedback_row,
            output,
            feedthrough,
        }
    }

    /// Largest finite pole/zero magnitude, or zero for a flat filter.
    pub(crate) fn max_corner(&self) -> T {
        self.zeros
            .iter()
            .chain(&self.poles)
            .map(|c| c.norm())
            .fold(T::zero(), T::max)
    }

    /// Smallest nonzero pole/zero magnitude.
    pub(crate) fn min_corner(&self) -> Option<T> {
        self.zeros
            .iter()
            .chain(&self.poles)
            .map(|c| c.norm())
            .filter(|&m| m > T::zero())
            .fold(None, |acc: Option<T>, m| Some(acc.map_or(m, |a| a.min(m))))
    }
}

fn check_conjugate_closed<T: Scalar>(
    roots: &[Complex<T>],
    kind: &'static str,
) -> Result<(), FilterError> {
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let r = roots[i];
        let tol = lit::<T>(1e-9) * T::one().max(r.norm());
        if r.im.abs() <= tol {
            used[i] = true;
            continue;
        }
        let partner = (0..roots.len())
            .find(|&j| j != i && !used[j] && (roots[j] - r.conj()).norm() <= tol);
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => {
                return Err(FilterError::NotConjugateClosed {
                    kind,
                    value: format!("{r}"),
                })
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn flat_response() {
        let k = LoopFilter::flat(3.0);
        assert_eq!(k.response(7.0), c(3.0, 0.0));
        assert!(LoopFilter::<f64>::open().is_zero());
    }

    #[test]
    fn delay_rotates_phase() {
        let k = LoopFilter::flat_with_delay(2.0, 0.5).unwrap();
        let r = k.response(std::f64::consts::PI);
        assert_relative_eq!(r.norm(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(r.arg(), -std::f64::consts::FRAC_PI_2, max_relative = 1e-12);
    }

    #[test]
    fn validation() {
        assert!(matches!(
            LoopFilter::new(1.0, vec![], vec![c(-1.0, 1.0)], 0.0),
            Err(FilterError::NotConjugateClosed { kind: "pole", .. })
        ));
        assert!(matches!(
            LoopFilter::new(1.0, vec![c(-1.0, 0.0)], vec![], 0.0),
            Err(FilterError::Improper { zeros: 1, poles: 0 })
        ));
        assert!(matches!(
            LoopFilter::new(1.0, vec![], vec![c(0.0, 0.0)], 0.0),
            Err(FilterError::UnstablePole(_))
        ));
        assert!(matches!(
            LoopFilter::flat_with_delay(1.0, -1.0),
            Err(FilterError::NegativeDelay(_))
        ));
        assert!(LoopFilter::new(1.0, vec![c(2.0, 0.0)], vec![c(-1.0, 3.0), c(-1.0, -3.0)], 0.1).is_ok());
    }

    #[test]
    fn state_space_matches_transfer_function() {
        let k = LoopFilter::new(
            5.0,
            vec![c(-3.0, 0.0), c(1.0, 0.0)],
            vec![c(-1.0, 2.0), c(-1.0, -2.0), c(-0.5, 0.0)],
            0.0,
        )
        .unwrap();
        check_realization(&k);

        let biproper = LoopFilter::new(2.0, vec![c(-10.0, 0.0)], vec![c(-1.0, 0.0)], 0.0).unwrap();
        assert_eq!(biproper.state_space().feedthrough, 2.0);
        check_realization(&biproper);

        let flat = LoopFilter::flat(4.0).state_space();
        assert_eq!(flat.order(), 0);
        assert_eq!(flat.feedthrough, 4.0);
    }

    /// `C (sI − A)⁻¹ B + D` for the companion form is `b(s)/D(s) + d`.
    fn check_realization(k: &LoopFilter<f64>) {
        let ss = k.state_space();
        let mut den = ss.feedback_row.iter().map(|a| -a).collect::<Vec<_>>();
        den.push(1.0);
        let den = Poly::new(den);
        let num = Poly::new(ss.output.clone());
        for w in [0.0, 0.3, 1.0, 4.0, 100.0] {
            let s = c(0.0, w);
            let h = num.eval(s) / den.eval(s) + ss.feedthrough;
            let want = k.response(w);
            assert!((h - want).norm() <= 1e-10 * want.norm().max(1.0), "{h} vs {want}");
        }
    }
}
