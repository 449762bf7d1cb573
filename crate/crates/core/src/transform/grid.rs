use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::QueueParams;

/// Output length above which [`grid_convolve`] fans out over rayon.
const PARALLEL_THRESHOLD: usize = 512;

/// Uniform time grid `0, h, 2h, …, n·h` with `n·h ≈ t_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    step: f64,
    t_max: f64,
}

impl GridSpec {
    pub fn new(step: f64, t_max: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        Ok(GridSpec { step, t_max })
    }

    /// `h = min(0.005/λ, α/200)` out to twelve busy-period means.
    pub fn default_for(params: &QueueParams) -> Self {
        let step = (0.005 / params.lambda()).min(params.alpha() / 200.0);
        let t_max = 12.0 * params.exp_rho_minus_one() / params.lambda();
        GridSpec { step, t_max }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Number of grid points, endpoints included.
    pub fn len(&self) -> usize {
        (self.t_max / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        self.step * i as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }

    /// Samples `f` at every grid point.
    pub fn sample<F: Fn(f64) -> f64>(&self, kind: GridKind, f: F) -> GridFunction {
        GridFunction {
            step: self.step,
            values: self.times().map(f).collect(),
            kind,
        }
    }
}

/// Whether grid samples are a density (integrated by convolution) or a
/// CDF-like function (evaluated pointwise).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Density,
    Cdf,
}

/// A function sampled on a uniform grid starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    step: f64,
    values: Vec<f64>,
    kind: GridKind,
}

impl GridFunction {
    pub fn new(step: f64, values: Vec<f64>, kind: GridKind) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidGrid("no samples".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite sample {v}")));
        }
        Ok(GridFunction { step, values, kind })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.step * i as f64
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Linear interpolation; 0 before the origin, the last sample past the end.
    pub fn interpolate(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let x = t / self.step;
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().expect("nonempty");
        }
        let w = x - i as f64;
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    /// True when no sample drops below an earlier one by more than
    /// `tol·(1 + |value|)`.
    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        let mut running_max = f64::NEG_INFINITY;
        for &v in &self.values {
            if v < running_max - tol * (1.0 + v.abs()) {
                return false;
            }
            running_max = running_max.max(v);
        }
        true
    }

    /// `max_i |self(t_i) - f(t_i)|`.
    pub fn sup_distance<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - f(self.time(i))).abs())
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b_reversed: impl Iterator<Item = f64>) -> f64 {
    // Four accumulators in fixed order, so the result does not depend on
    // how output indices are scheduled.
    let mut acc = [0.0f64; 4];
    for (j, (x, y)) in a.iter().zip(b_reversed).enumerate() {
        acc[j & 3] += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Trapezoidal convolution `(a*b)(kh) = h Σ' a(jh) b((k-j)h)` with half
/// weights on the two endpoint terms.
///
/// The result has the shorter input's length. It is CDF-like when either
/// input is, a density otherwise.
pub fn grid_convolve(a: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
    if a.step != b.step {
        return Err(Error::StepMismatch(a.step, b.step));
    }
    let n = a.len().min(b.len());
    let h = a.step;
    let (av, bv) = (&a.values[..n], &b.values[..n]);
    let cell = |k: usize| -> f64 {
        if k == 0 {
            return 0.0;
        }
        let full = dot(&av[..=k], bv[..=k].iter().rev().copied());
        h * (full - 0.5 * (av[0] * bv[k] + av[k] * bv[0]))
    };
    let values: Vec<f64> = if n >= PARALLEL_THRESHOLD {
        (0..n).into_par_iter().map(cell).collect()
    } else {
        (0..n).map(cell).collect()
    };
    let kind = if a.kind == GridKind::Cdf || b.kind == GridKind::Cdf {
        GridKind::Cdf
    } else {
        GridKind::Density
    };
    Ok(GridFunction {
        step: h,
        values,
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn box_self_convolution_peaks_at_one() {
        let grid = GridSpec::new(0.01, 2.0).unwrap();
        let unit_box = grid.sample(
            GridKind::Density,
            |t| if t <= 1.0 + 1e-12 { 1.0 } else { 0.0 },
        );
        let tri = grid_convolve(&unit_box, &unit_box).unwrap();
        assert_relative_eq!(tri.values()[100], 1.0, max_relative = 1e-12);
        assert_relative_eq!(tri.values()[50], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn exponential_self_convolution_is_gamma2() {
        let grid = GridSpec::new(1e-3, 5.0).unwrap();
        let e = grid.sample(GridKind::Density, |t| (-t).exp());
        let c = grid_convolve(&e, &e).unwrap();
        // t e^{-t} at t = 1 is e^{-1}; trapezoid error is O(h²).
        assert!((c.values()[1000] - (-1.0f64).exp()).abs() < 1e-6);
        assert!(c.sup_distance(|t| t * (-t).exp()) < 1e-6);
    }

    #[test]
    fn step_mismatch() {
        let a = GridSpec::new(0.1, 1.0)
            .unwrap()
            .sample(GridKind::Density, |_| 1.0);
        let b = GridSpec::new(0.2, 1.0)
            .unwrap()
            .sample(GridKind::Density, |_| 1.0);
        assert_eq!(grid_convolve(&a, &b), Err(Error::StepMismatch(0.1, 0.2)));
    }

    #[test]
    fn grid_spec_validation_and_defaults() {
        assert!(GridSpec::new(0.0, 1.0).is_err());
        assert!(GridSpec::new(0.1, -1.0).is_err());
        let g = GridSpec::new(0.1, 10.0).unwrap();
        assert_eq!(g.len(), 101);
        let p = QueueParams::new(2.0, 0.5).unwrap();
        let d = GridSpec::default_for(&p);
        assert_relative_eq!(d.step(), 0.25 / 200.0, max_relative = 1e-15);
        assert_relative_eq!(d.t_max(), 6.0 * 0.5f64.exp_m1(), max_relative = 1e-15);
    }

    #[test]
    fn interpolation_and_monotonicity() {
        let f = GridFunction::new(0.5, vec![0.0, 0.5, 0.75, 0.7], GridKind::Cdf).unwrap();
        assert_eq!(f.interpolate(-1.0), 0.0);
        assert_relative_eq!(f.interpolate(0.25), 0.25);
        assert_eq!(f.interpolate(10.0), 0.7);
        assert!(!f.is_nondecreasing(1e-10));
        assert!(f.is_nondecreasing(0.1));
        assert!(GridFunction::new(0.5, vec![f64::NAN], GridKind::Cdf).is_err());
    }

    #[test]
    fn parallel_and_serial_paths_agree_bitwise() {
        let grid = GridSpec::new(0.01, 8.0).unwrap();
        let a = grid.sample(GridKind::Density, |t| (-1.3 * t).exp() * (1.0 + t.sin()));
        let b = grid.sample(GridKind::Cdf, |t| 1.0 - (-0.4 * t).exp());
        let par = grid_convolve(&a, &b).unwrap();
        let n = a.len();
        for k in [1, 17, n / 2, n - 1] {
            let head_a =
                GridFunction::new(0.01, a.values()[..=k].to_vec(), GridKind::Density).unwrap();
            let head_b = GridFunction::new(0.01, b.values()[..=k].to_vec(), GridKind::Cdf).unwrap();
            let serial = grid_convolve(&head_a, &head_b).unwrap();
            assert_eq!(serial.values()[k].to_bits(), par.values()[k].to_bits());
        }
        assert_eq!(par.kind(), GridKind::Cdf);
    }

    proptest! {
        #[test]
        fn convolution_commutes(xs in proptest::collection::vec(0.0f64..2.0, 2..60), ys in proptest::collection::vec(0.0f64..2.0, 2..60)) {
            let a = GridFunction::new(0.1, xs, GridKind::Density).unwrap();
            let b = GridFunction::new(0.1, ys, GridKind::Density).unwrap();
            let ab = grid_convolve(&a, &b).unwrap();
            let ba = grid_convolve(&b, &a).unwrap();
            for (x, y) in ab.values().iter().zip(ba.values()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}
