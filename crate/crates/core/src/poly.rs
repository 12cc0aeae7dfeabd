//! Real polynomials in ascending-coefficient form and a simultaneous
//! (Aberth–Ehrlich) root finder.

use num_complex::Complex;

use crate::scalar::{from_usize, lit, Scalar};

/// `c[0] + c[1] s + … + c[n] sⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == T::zero() {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(T::zero());
        }
        Self { coeffs }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// Monic polynomial `Π (s − r)`. The roots must be closed under
    /// conjugation; the imaginary residue of the expansion is dropped.
    pub fn from_roots(roots: &[Complex<T>]) -> Self {
        let mut acc = vec![Complex::new(T::one(), T::zero())];
        for r in roots {
            let mut next = vec![Complex::new(T::zero(), T::zero()); acc.len() + 1];
            for (i, a) in acc.iter().enumerate() {
                next[i + 1] += *a;
                next[i] -= *a * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> T {
        self.coeffs[self.coeffs.len() - 1]
    }

    pub fn scale(&self, k: T) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Self, i: usize| p.coeffs.get(i).copied().unwrap_or_else(T::zero);
        Self::new((0..n).map(|i| get(self, i) + get(other, i)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * s + c)
    }

    /// Value and first derivative by Horner's scheme.
    fn eval_with_derivative(&self, s: Complex<T>) -> (Complex<T>, Complex<T>) {
        let zero = Complex::new(T::zero(), T::zero());
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * s + p;
            p = p * s + c;
        }
        (p, dp)
    }

    /// All complex roots.
    ///
    /// Returns the largest relative residual `|p(r)| / Σ|cᵢ||r|ⁱ` alongside
    /// the failure if the iteration does not converge.
    pub fn roots(&self) -> Result<Vec<Complex<T>>, RootFailure> {
        let n = self.degree();
        match n {
            0 => return Ok(Vec::new()),
            1 => {
                return Ok(vec![Complex::new(
                    -self.coeffs[0] / self.coeffs[1],
                    T::zero(),
                )])
            }
            _ => {}
        }

        let lead = self.leading();
        let monic = self.scale(lead.recip());
        // Cauchy bound on root magnitudes sets the initial circle.
        let radius = T::one()
            + monic.coeffs[..n]
                .iter()
                .fold(T::zero(), |m, &c| m.max(c.abs()));
        let mut z: Vec<Complex<T>> = (0..n)
            .map(|k| {
                let angle = lit::<T>(2.0) * T::PI() * from_usize::<T>(k) / from_usize::<T>(n)
                    + lit(0.4);
                Complex::from_polar(radius, angle)
            })
            .collect();

        let tol = T::epsilon() * lit(16.0);
        const MAX_ITER: usize = 500;
        let mut converged = false;
        for _ in 0..MAX_ITER {
            let mut max_step = T::zero();
            for i in 0..n {
                let (p, dp) = monic.eval_with_derivative(z[i]);
                if p.norm() == T::zero() {
                    continue;
                }
                let ratio = p / dp;
                let mut repulsion = Complex::new(T::zero(), T::zero());
                for j in 0..n {
                    if j != i {
                        let d = z[i] - z[j];
                        if d.norm() > T::zero() {
                            repulsion += d.inv();
                        }
                    }
                }
                let denom = Complex::new(T::one(), T::zero()) - ratio * repulsion;
                let step = if denom.norm() > T::zero() {
                    ratio / denom
                } else {
                    ratio
                };
                if step.re.is_nan() || step.im.is_nan() {
                    continue;
                }
                z[i] -= step;
                max_step = max_step.max(step.norm() / T::one().max(z[i].norm()));
            }
            if max_step <= tol {
                converged = true;
                break;
            }
        }

        let residual = z
            .iter()
            .map(|&r| monic.relative_residual(r))
            .fold(T::zero(), |m, x| m.max(x));
        let accept = lit::<T>(1e-6);
        if !converged && !(residual <= accept) {
            return Err(RootFailure {
                residual: residual.to_f64().unwrap_or(f64::NAN),
                iterations: MAX_ITER,
            });
        }

        // Snap numerically-real roots onto the axis.
        for r in z.iter_mut() {
            if r.im.abs() <= lit::<T>(1e3) * T::epsilon() * T::one().max(r.norm()) {
                r.im = T::zero();
            }
        }
        z.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
        });
        Ok(z)
    }

    fn relative_residual(&self, r: Complex<T>) -> T {
        let p = self.eval(r);
        let scale = self
            .coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * r.norm() + c.abs());
        if scale == T::zero() {
            T::zero()
        } else {
            p.norm() / scale
        }
    }
}

/// Root iteration did not reach the requested accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct RootFailure {
    pub residual: f64,
    pub iterations: usize,
}
