use serde::Serialize;

use super::{lemma32_bound, Estimate, PsiSequence, STDERR_SLACK};
use crate::coefficients::CoefficientSet;
use crate::error::{Result, SvieError};
use crate::grid::TimeGrid;
use crate::modulus::Modulus;
use crate::solver::{map_paths, DiscretePath, PicardIterates};

/// Constants of the Cauchy-difference envelope `C₃·t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyConstants {
    /// Uniform second-moment bound on the iterates.
    pub c1: f64,
    /// `12·T̃·λ`.
    pub c2: f64,
    /// `C₂·κ(4·C₁)`.
    pub c3: f64,
}

impl CauchyConstants {
    pub fn derive(
        growth_constant: f64,
        modulus: &Modulus,
        horizon: f64,
        phi_terminal_sq: f64,
    ) -> Result<Self> {
        let c1 = lemma32_bound(growth_constant, horizon, phi_terminal_sq)?;
        let c2 = 12.0 * horizon.max(1.0) * modulus.scale();
        let c3 = if c2 == 0.0 {
            0.0
        } else {
            c2 * modulus.kappa(4.0 * c1)
        };
        Ok(Self { c1, c2, c3 })
    }
}

/// Which iterates to compare and how many Picard steps are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyOrders {
    pub k: usize,
    pub m: usize,
    pub k_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyReport {
    pub k: usize,
    pub m: usize,
    pub times: Vec<f64>,
    /// Monte Carlo `E[sup_{s ≤ t} |x^{k+m}(s) − x^k(s)|²]` per grid time.
    pub estimates: Vec<Estimate>,
    pub constants: CauchyConstants,
    /// `estimate − 4·stderr ≤ C₃·t` per time.
    pub pass: Vec<bool>,
    pub paths_used: usize,
    pub failed_paths: usize,
}

impl CauchyReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }

    /// The ordering `ψ_{k,m} ≤ ψ_k` (within 4 standard errors) at every grid
    /// time inside the ψ horizon. `ψ_k` is linearly interpolated.
    pub fn dominated_by(&self, psi: &PsiSequence) -> Result<Vec<bool>> {
        self.times
            .iter()
            .zip(&self.estimates)
            .filter(|(t, _)| **t <= psi.horizon())
            .map(|(&t, e)| Ok(e.mean - STDERR_SLACK * e.stderr <= psi.value_at(self.k, t)?))
            .collect()
    }

    /// `C₃·t_i`, taken as zero at `t = 0` even when `C₃` overflowed.
    pub fn line(&self, i: usize) -> f64 {
        envelope(self.constants.c3, self.times[i])
    }
}

fn envelope(c3: f64, t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        c3 * t
    }
}

fn running_sup_sq(a: &DiscretePath, b: &DiscretePath) -> Vec<f64> {
    let mut acc = 0.0f64;
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| {
            acc = acc.max((x - y).powi(2));
            acc
        })
        .collect()
}

fn iterate_pair(
    coeffs: &CoefficientSet,
    noise: &crate::noise::NoisePath,
    k: usize,
    m: usize,
) -> Result<Vec<f64>> {
    let mut it = PicardIterates::new(coeffs, noise);
    let mut kth = None;
    let mut last = None;
    for step in 1..=k + m {
        let x = it.next().expect("Picard iterates are unbounded")?;
        if step == k {
            kth = Some(x.clone());
        }
        last = Some(x);
    }
    let kth = kth.expect("k ≥ 1");
    Ok(running_sup_sq(&last.expect("k ≥ 1"), &kth))
}

/// Runs Picard iterates up to `k + m` on lineages `(master_seed, 0…n_paths−1)`
/// and estimates the running-sup second moment of `x^{k+m} − x^k`.
pub fn cauchy_diff(
    coeffs: &CoefficientSet,
    grid: &TimeGrid,
    n_paths: usize,
    master_seed: u64,
    orders: CauchyOrders,
    constants: CauchyConstants,
) -> Result<CauchyReport> {
    let CauchyOrders { k, m, k_max } = orders;
    if k == 0 {
        return Err(SvieError::Config("Cauchy difference needs k ≥ 1".into()));
    }
    if k + m > k_max {
        return Err(SvieError::Config(format!(
            "k + m = {} exceeds k_max = {k_max}",
            k + m
        )));
    }
    if n_paths == 0 {
        return Err(SvieError::Config(
            "Cauchy difference needs at least one path".into(),
        ));
    }
    let curves = map_paths(coeffs, grid, n_paths, master_seed, |_, noise| {
        if m == 0 {
            Ok(vec![0.0; grid.len()])
        } else {
            iterate_pair(coeffs, noise, k, m)
        }
    });
    let ok: Vec<Vec<f64>> = curves
        .iter()
        .filter_map(|c| c.as_ref().ok().cloned())
        .collect();
    let failed_paths = curves.len() - ok.len();
    if ok.is_empty() {
        return Err(SvieError::Analysis(
            "every path failed during Picard iteration".into(),
        ));
    }
    let mut column = vec![0.0; ok.len()];
    let estimates: Vec<Estimate> = (0..grid.len())
        .map(|i| {
            for (slot, c) in column.iter_mut().zip(&ok) {
                *slot = c[i];
            }
            Estimate::from_samples(&column)
        })
        .collect();
    let times = grid.points();
    let pass = times
        .iter()
        .zip(&estimates)
        .map(|(&t, e)| e.mean - STDERR_SLACK * e.stderr <= envelope(constants.c3, t) + 1e-12)
        .collect();
    Ok(CauchyReport {
        k,
        m,
        times,
        estimates,
        constants,
        pass,
        paths_used: ok.len(),
        failed_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{example_coefficients, zero_coefficients};

    fn orders(k: usize, m: usize) -> CauchyOrders {
        CauchyOrders { k, m, k_max: 10 }
    }

    #[test]
    fn m_zero_is_identically_zero() {
        let ex = example_coefficients(0.1, 2.0).unwrap();
        let g = TimeGrid::new(0.25, 8).unwrap();
        let c = CauchyConstants {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        };
        let r = cauchy_diff(&ex, &g, 20, 3, orders(2, 0), c).unwrap();
        assert!(r.estimates.iter().all(|e| e.mean == 0.0));
    }

    #[test]
    fn zero_coefficients_are_identically_zero() {
        let z = zero_coefficients();
        let g = TimeGrid::new(1.0, 8).unwrap();
        let c = CauchyConstants::derive(0.0, &z.modulus().unwrap(), 1.0, 1.0).unwrap();
        assert_eq!(c.c3, 0.0);
        for (k, m) in [(1, 1), (2, 3), (1, 5)] {
            let r = cauchy_diff(&z, &g, 5, 1, orders(k, m), c).unwrap();
            assert!(r.estimates.iter().all(|e| e.mean == 0.0));
            assert!(r.all_pass());
        }
    }

    #[test]
    fn order_errors() {
        let z = zero_coefficients();
        let g = TimeGrid::new(1.0, 4).unwrap();
        let c = CauchyConstants {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        };
        assert!(matches!(
            cauchy_diff(&z, &g, 5, 1, orders(0, 1), c),
            Err(SvieError::Config(_))
        ));
        assert!(matches!(
            cauchy_diff(&z, &g, 5, 1, orders(6, 5), c),
            Err(SvieError::Config(_))
        ));
    }

    #[test]
    fn constants_follow_definition() {
        let m = Modulus::linear(2.0).unwrap();
        let c = CauchyConstants::derive(0.0, &m, 0.5, 1.0).unwrap();
        assert_eq!(c.c1, 8.0);
        assert_eq!(c.c2, 24.0);
        assert_eq!(c.c3, 24.0 * 32.0);
    }
}
