//! Manufactured problems with closed-form solutions, used by the
//! convergence studies and the oracle tests.

use std::f64::consts::PI;

use crate::error::{HdgError, Result};
use crate::hdg_core::ProblemData;

/// A problem with known exact solution on the unit square.
///
/// `SineDiffusion` (preset name "paper"): u = sin(pi x) sin(pi y) with the
/// variable diffusion weight w = 1 + x^2 y^2, c = w I, sigma = grad u / w,
/// homogeneous boundary values. `Linear` (preset name "linear"): c = I,
/// u = x + y, zero load; reproduced exactly by every discretization degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManufacturedProblem {
    SineDiffusion,
    Linear,
}

impl ManufacturedProblem {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(ManufacturedProblem::SineDiffusion),
            "linear" => Ok(ManufacturedProblem::Linear),
            other => Err(HdgError::UnknownProblem(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ManufacturedProblem::SineDiffusion => "paper",
            ManufacturedProblem::Linear => "linear",
        }
    }

    pub fn u(&self, x: f64, y: f64) -> f64 {
        match self {
            ManufacturedProblem::SineDiffusion => (PI * x).sin() * (PI * y).sin(),
            ManufacturedProblem::Linear => x + y,
        }
    }

    pub fn grad_u(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            ManufacturedProblem::SineDiffusion => [
                PI * (PI * x).cos() * (PI * y).sin(),
                PI * (PI * x).sin() * (PI * y).cos(),
            ],
            ManufacturedProblem::Linear => [1.0, 1.0],
        }
    }

    pub fn sigma(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            ManufacturedProblem::SineDiffusion => {
                let w = 1.0 + x * x * y * y;
                let g = self.grad_u(x, y);
                [g[0] / w, g[1] / w]
            }
            ManufacturedProblem::Linear => [1.0, 1.0],
        }
    }

    /// Analytic divergence of sigma; equals -f.
    pub fn div_sigma(&self, x: f64, y: f64) -> f64 {
        -ProblemData::f(self, x, y)
    }
}

impl ProblemData for ManufacturedProblem {
    fn c(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        match self {
            ManufacturedProblem::SineDiffusion => {
                let w = 1.0 + x * x * y * y;
                [[w, 0.0], [0.0, w]]
            }
            ManufacturedProblem::Linear => [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    fn f(&self, x: f64, y: f64) -> f64 {
        match self {
            ManufacturedProblem::SineDiffusion => {
                // f = -div(grad u / w) = 2 pi^2 u / w + (grad w . grad u) / w^2.
                let w = 1.0 + x * x * y * y;
                let u = self.u(x, y);
                let g = self.grad_u(x, y);
                let gw = [2.0 * x * y * y, 2.0 * x * x * y];
                2.0 * PI * PI * u / w + (gw[0] * g[0] + gw[1] * g[1]) / (w * w)
            }
            ManufacturedProblem::Linear => 0.0,
        }
    }

    fn g(&self, x: f64, y: f64) -> f64 {
        match self {
            ManufacturedProblem::SineDiffusion => 0.0,
            ManufacturedProblem::Linear => x + y,
        }
    }
}
