//! Chi-square tail bounds and a noncentral chi-square sampler.
//!
//! For `Z ~ chi2(k, mu)` and any `x > 0`,
//!
//! ```text
//! P(Z > mu + k + 2 sqrt((k + 2 mu) x) + 2x) <= exp(-x)
//! P(Z < mu + k - 2 sqrt((k + 2 mu) x))      <= exp(-x)
//! ```
//!
//! Both points are returned exactly as the closed form gives them, even when
//! the lower point is negative (a vacuous bound). Callers clamp.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degrees of freedom and noncentrality of a chi-square law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSqParams {
    dof: u32,
    noncentrality: f64,
}

impl ChiSqParams {
    pub fn new(dof: u32, noncentrality: f64) -> Result<Self> {
        if dof == 0 {
            return Err(Error::domain("chi-square degrees of freedom must be >= 1"));
        }
        if !(noncentrality >= 0.0) || !noncentrality.is_finite() {
            return Err(Error::domain(format!(
                "noncentrality must be finite and >= 0, got {noncentrality}"
            )));
        }
        Ok(Self { dof, noncentrality })
    }

    pub fn central(dof: u32) -> Result<Self> {
        Self::new(dof, 0.0)
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn noncentrality(&self) -> f64 {
        self.noncentrality
    }

    /// Expectation `k + mu`.
    pub fn mean(&self) -> f64 {
        f64::from(self.dof) + self.noncentrality
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

/// Point above which a `chi2(k, mu)` variable falls with probability at most `exp(-x)`.
pub fn upper_tail_point(params: ChiSqParams, x: f64) -> Result<f64> {
    check_positive("x", x)?;
    let k = f64::from(params.dof);
    let mu = params.noncentrality;
    Ok(mu + k + 2.0 * ((k + 2.0 * mu) * x).sqrt() + 2.0 * x)
}

/// Point below which a `chi2(k, mu)` variable falls with probability at most `exp(-x)`.
pub fn lower_tail_point(params: ChiSqParams, x: f64) -> Result<f64> {
    check_positive("x", x)?;
    let k = f64::from(params.dof);
    let mu = params.noncentrality;
    Ok(mu + k - 2.0 * ((k + 2.0 * mu) * x).sqrt())
}

/// Deviation level `2a sqrt(x) + bx` for a variable whose log-MGF is bounded
/// by `(a s)^2 / (1 - b s)` on `0 < s < 1/b`; it is exceeded with probability
/// at most `exp(-x)`.
pub fn subexp_deviation_point(a: f64, b: f64, x: f64) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    check_positive("x", x)?;
    Ok(2.0 * a * x.sqrt() + b * x)
}

/// Sampler for `chi2(k, mu)` built as `(Z + sqrt(mu))^2 + chi2(k - 1)`.
#[derive(Debug, Clone, Copy)]
pub struct NoncentralChiSq {
    shift: f64,
    rest: Option<ChiSquared<f64>>,
}

impl NoncentralChiSq {
    pub fn new(params: ChiSqParams) -> Self {
        let rest = (params.dof > 1).then(|| {
            ChiSquared::new(f64::from(params.dof - 1)).expect("positive degrees of freedom")
        });
        Self {
            shift: params.noncentrality.sqrt(),
            rest,
        }
    }
}

impl Distribution<f64> for NoncentralChiSq {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        let head = (z + self.shift) * (z + self.shift);
        match &self.rest {
            Some(rest) => head + rest.sample(rng),
            None => head,
        }
    }
}

/// One draw from `chi2(k, mu)`.
pub fn sample_noncentral_chisq<R: Rng + ?Sized>(params: ChiSqParams, rng: &mut R) -> f64 {
    NoncentralChiSq::new(params).sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(k: u32, mu: f64) -> ChiSqParams {
        ChiSqParams::new(k, mu).unwrap()
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ChiSqParams::new(0, 0.0).is_err());
        assert!(ChiSqParams::new(3, -0.1).is_err());
        assert!(ChiSqParams::new(3, f64::NAN).is_err());
    }

    #[test]
    fn upper_point_examples() {
        assert_relative_eq!(
            upper_tail_point(params(2, 0.0), 1e-14).unwrap(),
            2.0,
            epsilon = 1e-6
        );
        assert_relative_eq!(
            upper_tail_point(params(1, 0.0), 1.0).unwrap(),
            5.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            upper_tail_point(params(5, 3.0), 2.0).unwrap(),
            21.38083151964686,
            epsilon = 1e-12
        );
    }

    #[test]
    fn lower_point_examples() {
        assert_relative_eq!(
            lower_tail_point(params(2, 0.0), 1e-14).unwrap(),
            2.0,
            epsilon = 1e-6
        );
        assert_relative_eq!(
            lower_tail_point(params(1, 0.0), 1.0).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            lower_tail_point(params(5, 3.0), 2.0).unwrap(),
            -1.3808315196468595,
            epsilon = 1e-12
        );
    }

    #[test]
    fn non_positive_x_is_domain_error() {
        assert!(matches!(
            upper_tail_point(params(2, 0.0), 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            lower_tail_point(params(2, 0.0), -1.0),
            Err(Error::Domain(_))
        ));
        assert!(subexp_deviation_point(1.0, 0.0, 1.0).is_err());
        assert!(subexp_deviation_point(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn subexp_examples() {
        assert_relative_eq!(subexp_deviation_point(1.0, 1.0, 1.0).unwrap(), 3.0);
        assert_relative_eq!(subexp_deviation_point(0.5, 2.0, 4.0).unwrap(), 10.0);
        assert_relative_eq!(
            subexp_deviation_point(1e-15, 1.0, 1.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sampler_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let d = NoncentralChiSq::new(params(1, 0.0));
        let m: f64 = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 0.02, "mean {m}");

        let d = NoncentralChiSq::new(params(3, 4.0));
        let m: f64 = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((m - 7.0).abs() < 0.05, "mean {m}");
    }

    #[test]
    fn sampler_respects_upper_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = params(2, 0.0);
        let point = upper_tail_point(p, 2.0).unwrap();
        let n = 1_000_000;
        let d = NoncentralChiSq::new(p);
        let hits = (0..n).filter(|_| d.sample(&mut rng) > point).count();
        assert!((hits as f64 / n as f64) <= (-2.0f64).exp());
    }

    #[test]
    fn sampler_is_reproducible() {
        let p = params(4, 2.5);
        let a: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            (0..16)
                .map(|_| sample_noncentral_chisq(p, &mut rng))
                .collect()
        };
        let b: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            (0..16)
                .map(|_| sample_noncentral_chisq(p, &mut rng))
                .collect()
        };
        assert_eq!(a, b);
    }

    proptest::proptest! {
        #[test]
        fn bound_points_bracket_the_mean(k in 1u32..200, mu in 0.0f64..100.0, x in 1e-6f64..50.0) {
            let p = params(k, mu);
            let lo = lower_tail_point(p, x).unwrap();
            let hi = upper_tail_point(p, x).unwrap();
            proptest::prop_assert!(lo < p.mean());
            proptest::prop_assert!(p.mean() < hi);
        }

        #[test]
        fn upper_point_increasing(k in 1u32..200, mu in 0.0f64..100.0, x in 1e-3f64..50.0) {
            let base = upper_tail_point(params(k, mu), x).unwrap();
            proptest::prop_assert!(upper_tail_point(params(k + 1, mu), x).unwrap() > base);
            proptest::prop_assert!(upper_tail_point(params(k, mu + 0.5), x).unwrap() > base);
            proptest::prop_assert!(upper_tail_point(params(k, mu), x * 1.01).unwrap() > base);
        }
    }
}
