//! Test functions for linear statistics and their Dirichlet energy on a grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};

/// A real test function on the plane with declared support and Lipschitz budget.
pub trait TestFunction: Sync {
    fn eval(&self, w: Complex64) -> f64;

    /// Radius outside of which the function vanishes.
    fn support_radius(&self) -> f64;

    /// Lipschitz constant, so that `ω(φ; δ) ≤ lipschitz · δ`.
    fn lipschitz(&self) -> f64;

    /// Modulus of continuity bound.
    fn modulus(&self, delta: f64) -> f64 {
        self.lipschitz() * delta
    }

    /// Mean of `φ` over the circle `|w| = s`.
    fn circle_mean(&self, s: f64) -> f64 {
        crate::quad::circle_mean(|th| self.eval(Complex64::from_polar(s, th)), 64)
    }
}

/// `(1 - ((|w| - center)/width)²)³` on `| |w| - center | < width`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBump {
    pub center: f64,
    pub width: f64,
    pub height: f64,
}

impl RadialBump {
    pub fn new(center: f64, width: f64) -> Self {
        RadialBump { center, width, height: 1.0 }
    }

    pub fn profile(&self, s: f64) -> f64 {
        let x = (s - self.center) / self.width;
        if x.abs() >= 1.0 {
            0.0
        } else {
            self.height * (1.0 - x * x).powi(3)
        }
    }
}

impl TestFunction for RadialBump {
    fn eval(&self, w: Complex64) -> f64 {
        self.profile(w.norm())
    }

    fn support_radius(&self) -> f64 {
        self.center + self.width
    }

    fn lipschitz(&self) -> f64 {
        // max of 6x(1-x²)² on [0,1], at x = 1/√5
        self.height.abs() * 96.0 / (25.0 * 5f64.sqrt()) / self.width
    }

    fn circle_mean(&self, s: f64) -> f64 {
        self.profile(s)
    }
}

/// Smooth indicator of the unit disk: 1 on `|w| ≤ 1 - δ`, 0 on `|w| ≥ 1 + δ`,
/// with a C² quintic step across the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothDisk {
    pub band: f64,
}

impl SmoothDisk {
    pub fn profile(&self, s: f64) -> f64 {
        let x = (s - (1.0 - self.band)) / (2.0 * self.band);
        if x <= 0.0 {
            1.0
        } else if x >= 1.0 {
            0.0
        } else {
            1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
        }
    }
}

impl TestFunction for SmoothDisk {
    fn eval(&self, w: Complex64) -> f64 {
        self.profile(w.norm())
    }

    fn support_radius(&self) -> f64 {
        1.0 + self.band
    }

    fn lipschitz(&self) -> f64 {
        // the quintic step has slope at most 15/8 per unit of x
        15.0 / 8.0 / (2.0 * self.band)
    }

    fn circle_mean(&self, s: f64) -> f64 {
        self.profile(s)
    }
}

/// `exp(-|w|²)`, treated as supported in `|w| ≤ 6`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gaussian;

impl TestFunction for Gaussian {
    fn eval(&self, w: Complex64) -> f64 {
        (-w.norm_sqr()).exp()
    }

    fn support_radius(&self) -> f64 {
        6.0
    }

    fn lipschitz(&self) -> f64 {
        (2.0f64 / std::f64::consts::E).sqrt()
    }

    fn circle_mean(&self, s: f64) -> f64 {
        (-s * s).exp()
    }
}

/// Sum of test functions.
pub struct Sum<'a>(pub Vec<&'a dyn TestFunction>);

impl TestFunction for Sum<'_> {
    fn eval(&self, w: Complex64) -> f64 {
        self.0.iter().map(|f| f.eval(w)).sum()
    }

    fn support_radius(&self) -> f64 {
        self.0.iter().map(|f| f.support_radius()).fold(0.0, f64::max)
    }

    fn lipschitz(&self) -> f64 {
        self.0.iter().map(|f| f.lipschitz()).sum()
    }

    fn circle_mean(&self, s: f64) -> f64 {
        self.0.iter().map(|f| f.circle_mean(s)).sum()
    }
}

/// Values of a function on the nodes of a uniform square grid
/// `[-half_width, half_width]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
    /// nodes per side
    pub n: usize,
    pub h: f64,
    pub half_width: f64,
}

impl GridFunction {
    pub fn sample<F: TestFunction + ?Sized>(phi: &F, half_width: f64, cells_per_unit: usize) -> Result<Self> {
        if cells_per_unit < 8 {
            return arg_err("the grid needs at least 8 cells per unit length");
        }
        let cells = (2.0 * half_width * cells_per_unit as f64).ceil() as usize;
        let n = cells + 1;
        let h = 2.0 * half_width / cells as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let y = -half_width + i as f64 * h;
            for j in 0..n {
                let x = -half_width + j as f64 * h;
                values.push(phi.eval(Complex64::new(x, y)));
            }
        }
        Ok(GridFunction { values, n, h, half_width })
    }

    /// A grid just covering the declared support of `phi`.
    pub fn covering<F: TestFunction + ?Sized>(phi: &F, cells_per_unit: usize) -> Result<Self> {
        Self::sample(phi, phi.support_radius() * 1.05 + 2.0 / cells_per_unit as f64, cells_per_unit)
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn boundary_max(&self) -> f64 {
        let n = self.n;
        (0..n)
            .flat_map(|k| [self.at(0, k), self.at(n - 1, k), self.at(k, 0), self.at(k, n - 1)])
            .map(f64::abs)
            .fold(0.0, f64::max)
    }
}

/// `∫ |∇φ|² dm` by central differences and the trapezoid rule, without the
/// support check.
pub fn gradient_energy(g: &GridFunction) -> f64 {
    let n = g.n;
    let mut sum = 0.0;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let fx = (g.at(i, j + 1) - g.at(i, j - 1)) / (2.0 * g.h);
            let fy = (g.at(i + 1, j) - g.at(i - 1, j)) / (2.0 * g.h);
            sum += fx * fx + fy * fy;
        }
    }
    sum * g.h * g.h
}

/// Dirichlet energy `𝔇(φ) = ‖∇φ‖²_{L²(m)}` of a gridded test function.
pub fn dirichlet_energy(g: &GridFunction) -> Result<f64> {
    let b = g.boundary_max();
    if b > 1e-12 {
        return Err(Error::SupportTruncation(b));
    }
    Ok(gradient_energy(g))
}
