//! Closed-form objects of the stationary phi^6 model.
//!
//! The field equation is `-u'' + 2u - 8u^3 + 6u^5 = 0`; its non-constant
//! finite-energy solutions are the kinks
//!
//! ```text
//! H01(x)  =  e^{sqrt2 x} / (1 + e^{2 sqrt2 x})^{1/2}      (0 -> 1)
//! Hm10(x) = -e^{-sqrt2 x} / (1 + e^{-2 sqrt2 x})^{1/2}    (-1 -> 0)
//! ```
//!
//! A [`KinkPair`] carries the two translations `(y1, y2)` of the superposition
//! `u(x) = H01(x + y1) + Hm10(x + y2)`. With separation `s = y2 - y1 > 0` the
//! `Hm10` transition sits at `x = -y2` (left) and the `H01` transition at
//! `x = -y1` (right), so the profile runs -1 -> 0 -> +1.
//!
//! All evaluators use algebraic rewrites that stay finite for arguments far
//! beyond the sampled windows (|x| up to ~700).

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Default minimum separation for operations that assume weak interaction.
/// Below this the asymptotic normalizations and the modulation fit degrade;
/// the toolkit reports rather than hides that regime, but refuses inputs that
/// start inside it.
pub const A_MIN_DEFAULT: f64 = 4.0;

/// The kink `H01`, increasing from 0 at -inf to 1 at +inf, `H01(0) = 1/sqrt2`.
pub fn kink_01(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-2.0 * SQRT2 * x).exp()).sqrt()
    } else {
        let e = (SQRT2 * x).exp();
        e / (1.0 + e * e).sqrt()
    }
}

/// The kink `Hm10`, increasing from -1 at -inf to 0 at +inf; mirror image
/// `Hm10(x) = -H01(-x)`.
pub fn kink_m10(x: f64) -> f64 {
    if x <= 0.0 {
        -1.0 / (1.0 + (2.0 * SQRT2 * x).exp()).sqrt()
    } else {
        let e = (-SQRT2 * x).exp();
        -e / (1.0 + e * e).sqrt()
    }
}

/// Derivative of `H01`: strictly positive, maximal value 1/2 at x = 0,
/// decaying like `e^{-sqrt2 |x|}` on both sides.
pub fn kink_01_prime(x: f64) -> f64 {
    if x >= 0.0 {
        let t = (-2.0 * SQRT2 * x).exp();
        SQRT2 * t / (1.0 + t).powf(1.5)
    } else {
        let e = (SQRT2 * x).exp();
        SQRT2 * e / (1.0 + e * e).powf(1.5)
    }
}

/// Derivative of `Hm10`; equals `kink_01_prime(-x)`.
pub fn kink_m10_prime(x: f64) -> f64 {
    kink_01_prime(-x)
}

/// Second derivative of either kink, via the stationary equation
/// `phi'' = 2 phi - 8 phi^3 + 6 phi^5` (exact, no differencing).
pub fn kink_second_from_value(phi: f64) -> f64 {
    let p2 = phi * phi;
    phi * (2.0 + p2 * (-8.0 + 6.0 * p2))
}

pub fn kink_01_second(x: f64) -> f64 {
    kink_second_from_value(kink_01(x))
}

pub fn kink_m10_second(x: f64) -> f64 {
    kink_second_from_value(kink_m10(x))
}

/// Ordered translation pair `(y1, y2)` for `H01(. + y1) + Hm10(. + y2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkPair {
    y1: f64,
    y2: f64,
}

impl KinkPair {
    pub fn new(y1: f64, y2: f64) -> Result<Self> {
        if !y1.is_finite() || !y2.is_finite() || y2 <= y1 {
            return Err(Error::InvalidPair { y1, y2 });
        }
        Ok(Self { y1, y2 })
    }

    /// Symmetric pair `(-s/2, s/2)`; transitions at `-s/2` and `+s/2`.
    pub fn from_separation(s: f64) -> Result<Self> {
        Self::new(-0.5 * s, 0.5 * s)
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn separation(&self) -> f64 {
        self.y2 - self.y1
    }

    /// Position of the left (`Hm10`) transition.
    pub fn left_center(&self) -> f64 {
        -self.y2
    }

    /// Position of the right (`H01`) transition.
    pub fn right_center(&self) -> f64 {
        -self.y1
    }

    /// Grid covering both transitions with `pad` on each side and spacing
    /// at most `h_max`. All model functions decay like `e^{-sqrt2 d}` away
    /// from the transitions, so `pad = 25` puts the truncation error below
    /// double precision.
    pub fn window(&self, pad: f64, h_max: f64) -> Result<Grid> {
        Grid::with_max_spacing(self.left_center() - pad, self.right_center() + pad, h_max)
    }

    pub fn h1(&self, x: f64) -> f64 {
        kink_01(x + self.y1)
    }

    pub fn h2(&self, x: f64) -> f64 {
        kink_m10(x + self.y2)
    }

    pub fn h1_prime(&self, x: f64) -> f64 {
        kink_01_prime(x + self.y1)
    }

    pub fn h2_prime(&self, x: f64) -> f64 {
        kink_m10_prime(x + self.y2)
    }

    /// The superposition `H1 + H2` sampled on `grid`.
    pub fn sample_sum(&self, grid: Grid) -> GridFunction {
        let values = grid.nodes().map(|x| self.h1(x) + self.h2(x)).collect();
        GridFunction::from_values_unchecked(grid, values)
    }

    pub fn sample_h1_prime(&self, grid: Grid) -> GridFunction {
        let values = grid.nodes().map(|x| self.h1_prime(x)).collect();
        GridFunction::from_values_unchecked(grid, values)
    }

    pub fn sample_h2_prime(&self, grid: Grid) -> GridFunction {
        let values = grid.nodes().map(|x| self.h2_prime(x)).collect();
        GridFunction::from_values_unchecked(grid, values)
    }
}

/// Residual of the stationary equation, `F(u) = u'' - 2u + 8u^3 - 6u^5`,
/// with `u''` by 4th-order differences. Vanishes (to discretization error)
/// exactly on stationary solutions.
pub fn residual(u: &GridFunction) -> Result<GridFunction> {
    let upp = u.second_derivative()?;
    upp.zip_with(u, |d2, v| {
        let v2 = v * v;
        d2 + v * (-2.0 + v2 * (8.0 - 6.0 * v2))
    })
}

/// Two-kink potential `V(x) = -24 S^2 + 30 S^4` with `S = H1 + H2`.
/// Tends to +6 outside the pair (S -> +-1) and to 0 between the transitions.
pub fn potential_v(pair: &KinkPair, grid: Grid) -> GridFunction {
    let values = grid
        .nodes()
        .map(|x| {
            let s = pair.h1(x) + pair.h2(x);
            let s2 = s * s;
            s2 * (-24.0 + 30.0 * s2)
        })
        .collect();
    GridFunction::from_values_unchecked(grid, values)
}

fn h_term(h1: f64, h2: f64) -> f64 {
    let s = h1 + h2;
    8.0 * (s * s * s - h1 * h1 * h1 - h2 * h2 * h2) + 6.0 * (h1.powi(5) + h2.powi(5) - s.powi(5))
}

/// Interaction term of the two-kink decomposition,
/// `h = 8(H1+H2)^3 - 8H1^3 - 8H2^3 + 6H1^5 + 6H2^5 - 6(H1+H2)^5`,
/// evaluated exactly as written (no re-expansion), so the decomposition
/// identity below cross-checks it against `residual`, `potential_v` and
/// `nonlinear_n`. Identity in exact arithmetic: `F(H1 + H2) = h`.
pub fn interaction_h(pair: &KinkPair, grid: Grid) -> GridFunction {
    let values = grid
        .nodes()
        .map(|x| h_term(pair.h1(x), pair.h2(x)))
        .collect();
    GridFunction::from_values_unchecked(grid, values)
}

/// Nonlinear remainder term
/// `N(g) = 24 S g^2 - 60 S^3 g^2 + 8 g^3 - 60 S^2 g^3 - 30 S g^4 - 6 g^5`
/// with `S = H1 + H2` sampled on the grid of `g`.
pub fn nonlinear_n(pair: &KinkPair, g: &GridFunction) -> GridFunction {
    let grid = g.grid();
    let values = grid
        .nodes()
        .zip(g.values())
        .map(|(x, &gv)| {
            let s = pair.h1(x) + pair.h2(x);
            let g2 = gv * gv;
            24.0 * s * g2 - 60.0 * s * s * s * g2 + 8.0 * g2 * gv
                - 60.0 * s * s * g2 * gv
                - 30.0 * s * g2 * g2
                - 6.0 * g2 * g2 * gv
        })
        .collect();
    GridFunction::from_values_unchecked(grid, values)
}

/// Linearized operator about the pair applied with the same finite
/// differences as [`residual`]: `L g = -g'' + 2 g + V g`.
pub fn apply_linearized(pair: &KinkPair, g: &GridFunction) -> Result<GridFunction> {
    let gpp = g.second_derivative()?;
    let v = potential_v(pair, g.grid());
    let values = g
        .values()
        .iter()
        .zip(gpp.values())
        .zip(v.values())
        .map(|((&gv, &d2), &vv)| -d2 + (2.0 + vv) * gv)
        .collect();
    Ok(GridFunction::from_values_unchecked(g.grid(), values))
}

/// Potential energy `E(u) = 1/2 int u'^2 + int u^2 (1 - u^2)^2`.
/// Zero exactly on the vacua 0, +-1; equals `int H'^2 = sqrt2/4` on a kink.
pub fn energy_pot(u: &GridFunction) -> Result<f64> {
    let du = u.derivative()?;
    let kinetic = 0.5 * du.map(|v| v * v)?.quadrature();
    let well = u
        .map(|v| {
            let w = 1.0 - v * v;
            v * v * w * w
        })?
        .quadrature();
    Ok(kinetic + well)
}
