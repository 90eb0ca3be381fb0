use std::fmt;

use crate::{Error, Result};

/// Uniform grid with nodes at half-integer multiples of the spacing.
///
/// Nodes are `x_j = (j + 1/2)·h` for `j = -N … N-1`, so the grid is symmetric
/// about the origin and never contains `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    half_points: usize,
    spacing: f64,
}

/// Build the half-offset grid covering `(-L, L)` with `2N` nodes.
pub fn make_grid(half_width: f64, half_points: usize) -> Result<GridSpec> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "grid half-width must be positive, got {half_width}"
        )));
    }
    if half_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 2 half-points, got {half_points}"
        )));
    }
    Ok(GridSpec {
        half_points,
        spacing: half_width / half_points as f64,
    })
}

impl GridSpec {
    pub fn half_points(&self) -> usize {
        self.half_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn half_width(&self) -> f64 {
        self.spacing * self.half_points as f64
    }

    /// Total node count `2N`.
    pub fn len(&self) -> usize {
        2 * self.half_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, index: usize) -> f64 {
        (index as f64 - self.half_points as f64 + 0.5) * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    /// Same domain, twice the resolution.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            half_points: 2 * self.half_points,
            spacing: self.spacing / 2.0,
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "grid(L={}, N={})", self.half_width(), self.half_points)
    }
}

/// Truncated basis of oscillator eigenfunctions ψₙ of `p² + ω²x²`, `n < size`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    size: usize,
    omega: f64,
}

impl BasisSpec {
    pub fn new(size: usize, omega: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("basis size must be positive".into()));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "basis frequency must be positive, got {omega}"
            )));
        }
        Ok(BasisSpec { size, omega })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn doubled(&self) -> BasisSpec {
        BasisSpec {
            size: 2 * self.size,
            omega: self.omega,
        }
    }
}

impl fmt::Display for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "basis(M={}, omega={})", self.size, self.omega)
    }
}

/// Where a matrix lives: nodal values on a grid or coefficients in the oscillator basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Representation {
    Grid(GridSpec),
    Basis(BasisSpec),
}

impl Representation {
    pub fn dim(&self) -> usize {
        match self {
            Representation::Grid(g) => g.len(),
            Representation::Basis(b) => b.size(),
        }
    }
}

impl From<GridSpec> for Representation {
    fn from(g: GridSpec) -> Self {
        Representation::Grid(g)
    }
}

impl From<BasisSpec> for Representation {
    fn from(b: BasisSpec) -> Self {
        Representation::Basis(b)
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Grid(g) => g.fmt(f),
            Representation::Basis(b) => b.fmt(f),
        }
    }
}
