//! The Lerch transcendent `Φ(θ, s, x) = Σ_{n≥0} θ^n / (n + x)^s`.
//!
//! Evaluated by direct summation. Terms are held relative to the first term
//! `x^{-s}` so large `s` with small `x` cannot overflow, and the loop stops on
//! an analytic geometric bound of the remaining tail.

use crate::error::{Error, Result};

/// Hard cap on the number of series terms.
pub const TERM_CAP: usize = 10_000_000;

/// Stop once the tail bound falls below this fraction of the accumulated
/// absolute sum.
const REL_TOL: f64 = 1e-17;

/// A value represented as `mantissa * exp(log_scale)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn value(self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }
}

fn check_domain(theta: f64, s: f64, x: f64) -> Result<()> {
    if !(theta.is_finite() && (0.0..1.0).contains(&theta)) {
        return Err(Error::invalid(format!("theta must lie in [0, 1), got {theta}")));
    }
    if !s.is_finite() {
        return Err(Error::invalid(format!("s must be finite, got {s}")));
    }
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid(format!("x must be positive, got {x}")));
    }
    Ok(())
}

/// `Σ θ^n ln(n+x)^log_power / (n+x)^s` for `log_power ∈ {0, 1}`.
pub(crate) fn lerch_series(theta: f64, s: f64, x: f64, log_power: u8) -> Result<Scaled> {
    check_domain(theta, s, x)?;
    debug_assert!(log_power <= 1);
    let log_scale = -s * x.ln();
    let weight = |n: usize| -> f64 {
        if log_power == 1 {
            (n as f64 + x).ln()
        } else {
            1.0
        }
    };
    if theta == 0.0 {
        return Ok(Scaled {
            mantissa: weight(0),
            log_scale,
        });
    }
    let ln_theta = theta.ln();
    let rel_term = |n: usize| -> f64 {
        let nf = n as f64;
        (nf * ln_theta - s * (nf / x).ln_1p()).exp() * weight(n)
    };

    // Neumaier compensated summation.
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut abs_sum = 0.0_f64;
    let add = |t: f64, sum: &mut f64, comp: &mut f64| {
        let next = *sum + t;
        if sum.abs() >= t.abs() {
            *comp += (*sum - next) + t;
        } else {
            *comp += (t - next) + *sum;
        }
        *sum = next;
    };

    let mut term = rel_term(0);
    let mut n = 0usize;
    let mut bound = f64::INFINITY;
    while n < TERM_CAP {
        add(term, &mut sum, &mut comp);
        abs_sum += term.abs();
        let next = rel_term(n + 1);
        // Sup of term ratios t_{m+1}/t_m over m >= n + 1.
        let m = (n + 1) as f64;
        let power_factor = if s >= 0.0 {
            1.0
        } else {
            ((m + 1.0 + x) / (m + x)).powf(-s)
        };
        let log_factor = if log_power == 1 {
            (m + 1.0 + x).ln() / (m + x).ln()
        } else {
            1.0
        };
        let rho = theta * power_factor * log_factor;
        if rho < 1.0 {
            bound = next.abs() / (1.0 - rho);
            if bound <= REL_TOL * abs_sum || next == 0.0 {
                add(next, &mut sum, &mut comp);
                return Ok(Scaled {
                    mantissa: sum + comp,
                    log_scale,
                });
            }
        }
        term = next;
        n += 1;
    }
    let partial = Scaled {
        mantissa: sum + comp,
        log_scale,
    };
    Err(Error::NonConvergence {
        terms: n,
        partial_sum: partial.value(),
        tail_bound: bound * log_scale.exp(),
    })
}

/// `Φ(θ, s, x) = Σ_{n≥0} θ^n / (n + x)^s` for `0 ≤ θ < 1`, `x > 0`.
pub fn phi(theta: f64, s: f64, x: f64) -> Result<f64> {
    lerch_series(theta, s, x, 0).map(Scaled::value)
}

/// `ln Φ(θ, s, x)`, safe where `Φ` itself would overflow.
pub fn ln_phi(theta: f64, s: f64, x: f64) -> Result<f64> {
    let v = lerch_series(theta, s, x, 0)?;
    Ok(v.mantissa.ln() + v.log_scale)
}

/// `Σ θ^n ln(n+x) (n+x)^{-s} / Φ(θ, s, x)`.
///
/// With `x = a + 1` this is `E[ln(a + X)]` under the Lerch law.
pub fn log_weighted_mean(theta: f64, s: f64, x: f64) -> Result<f64> {
    let num = lerch_series(theta, s, x, 1)?;
    let den = lerch_series(theta, s, x, 0)?;
    Ok(num.mantissa / den.mantissa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn geometric_series() {
        assert_relative_eq!(phi(0.5, 0.0, 1.0).unwrap(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_theta_keeps_first_term() {
        assert_eq!(phi(0.0, 2.0, 4.0).unwrap(), 0.0625);
        assert_relative_eq!(phi(0.0, -1.5, 3.0).unwrap(), 3.0_f64.powf(1.5), max_relative = 1e-15);
    }

    #[test]
    fn log_identity() {
        // Φ(θ, 1, 1) = -ln(1-θ)/θ
        let v = phi(0.5, 1.0, 1.0).unwrap();
        assert_relative_eq!(v, 1.3862944, max_relative = 1e-7);
        for &t in &[0.1, 0.5, 0.9, 0.99] {
            let v = phi(t, 1.0, 1.0).unwrap();
            assert_relative_eq!(v, -(-t).ln_1p() / t, max_relative = 1e-13);
        }
    }

    #[test]
    fn negative_s_converges() {
        // Σ θ^n (n+1) = 1/(1-θ)^2
        let v = phi(0.5, -1.0, 1.0).unwrap();
        assert_relative_eq!(v, 4.0, max_relative = 1e-14);
    }

    #[test]
    fn large_s_does_not_overflow() {
        let l = ln_phi(0.9, 400.0, 0.01).unwrap();
        assert_relative_eq!(l, -400.0 * 0.01_f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(phi(1.0, 1.0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(phi(0.5, 1.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(phi(-0.1, 1.0, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn term_cap_reports_partial_sum() {
        match phi(1.0 - 1e-12, 0.0, 1.0) {
            Err(Error::NonConvergence { terms, partial_sum, tail_bound }) => {
                assert_eq!(terms, TERM_CAP);
                assert!(partial_sum > 0.0 && tail_bound > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn log_weighted_mean_single_term() {
        assert_relative_eq!(log_weighted_mean(0.0, 1.0, 2.0).unwrap(), 2.0_f64.ln());
    }
}
