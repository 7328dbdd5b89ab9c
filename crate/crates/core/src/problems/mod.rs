//! Test matrices: banded matrices with geometrically decaying bands and a 1D
//! reaction-diffusion discretization, plus Matrix Market file I/O.

mod matrix_market;

use nalgebra::DVector;

pub use matrix_market::{load_matrix_market, read_matrix_market, write_matrix_market};

use crate::error::{Error, Result};
use crate::linop::SymmetricOperator;

/// How the off-diagonal bands of [`gen_banded`] are filled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BandWeights {
    /// `A_ij = eps^|i-j|`: band `d` carries `eps^d`.
    #[default]
    Geometric,
    /// `A_ij = eps^q` on every band `1..=q`.
    Constant,
}

/// `A_ii = i` (1-based) and off-diagonal bands `1..=q` per [`BandWeights`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandedSpec {
    pub n: usize,
    pub q: usize,
    pub eps: f64,
    pub weights: BandWeights,
}

impl BandedSpec {
    pub fn new(n: usize, q: usize, eps: f64) -> Self {
        Self {
            n,
            q,
            eps,
            weights: BandWeights::Geometric,
        }
    }

    pub fn with_weights(mut self, weights: BandWeights) -> Self {
        self.weights = weights;
        self
    }

    fn band_value(&self, distance: usize) -> f64 {
        match self.weights {
            BandWeights::Geometric => self.eps.powi(distance as i32),
            BandWeights::Constant => self.eps.powi(self.q as i32),
        }
    }
}

pub fn gen_banded(spec: &BandedSpec) -> Result<SymmetricOperator> {
    let BandedSpec { n, q, eps, .. } = *spec;
    if n < 2 || q < 1 || q > n - 1 {
        return Err(Error::invalid(format!(
            "half-bandwidth q={q} must satisfy 1 <= q <= n-1 (n={n})"
        )));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid(format!("eps={eps} must lie in [0, 1]")));
    }
    let mut triplets = Vec::with_capacity(n * (q + 1));
    for i in 0..n {
        triplets.push((i, i, (i + 1) as f64));
        for d in 1..=q.min(i) {
            let v = spec.band_value(d);
            if v != 0.0 {
                triplets.push((i, i - d, v));
            }
        }
    }
    SymmetricOperator::sparse(n, &triplets)
}

/// `(eps^(q0+1) - eps^(q+1)) / (1 - eps) * sqrt(n)`: how far an eigenvalue of
/// the band-cut matrix can sit from the spectrum of the full banded matrix.
pub fn bandcut_eig_bound(eps: f64, q0: usize, q: usize, n: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::invalid(format!("eps={eps} must satisfy 0 <= eps < 1")));
    }
    if q0 >= q || q + 1 > n {
        return Err(Error::invalid(format!("need 0 <= q0 < q <= n-1, got q0={q0} q={q} n={n}")));
    }
    let geometric = (eps.powi(q0 as i32 + 1) - eps.powi(q as i32 + 1)) / (1.0 - eps);
    Ok(geometric * (n as f64).sqrt())
}

/// Interior grid `x_i = i h`, `h = 1/(n+1)`, for `-eps u'' + c u` with
/// Dirichlet ends and `eps = h^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReactionDiffusionSpec {
    pub n: usize,
}

impl Default for ReactionDiffusionSpec {
    fn default() -> Self {
        Self { n: 32 }
    }
}

impl ReactionDiffusionSpec {
    pub fn h(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }
}

/// Reaction coefficient `c(x) = x (1 - x) e^(3x)`.
pub fn reaction_coefficient(x: f64) -> f64 {
    x * (1.0 - x) * (3.0 * x).exp()
}

/// `A = D + R` together with its two parts.
#[derive(Debug, Clone)]
pub struct ReactionDiffusion {
    pub a: SymmetricOperator,
    pub diffusion: SymmetricOperator,
    pub reaction: SymmetricOperator,
}

pub fn gen_reaction_diffusion_1d(spec: &ReactionDiffusionSpec) -> Result<ReactionDiffusion> {
    let n = spec.n;
    if n < 2 {
        return Err(Error::invalid("reaction-diffusion grid needs n >= 2"));
    }
    let h = spec.h();
    let c = DVector::from_fn(n, |i, _| reaction_coefficient((i + 1) as f64 * h));

    // eps / h^2 = 1, so the scaled stencil is exactly tridiag(-1, 2, -1).
    let mut d_trip = Vec::with_capacity(2 * n);
    let mut a_trip = Vec::with_capacity(2 * n);
    for i in 0..n {
        d_trip.push((i, i, 2.0));
        a_trip.push((i, i, 2.0 + c[i]));
        if i > 0 {
            d_trip.push((i, i - 1, -1.0));
            a_trip.push((i, i - 1, -1.0));
        }
    }
    Ok(ReactionDiffusion {
        a: SymmetricOperator::sparse(n, &a_trip)?,
        diffusion: SymmetricOperator::sparse(n, &d_trip)?,
        reaction: SymmetricOperator::diagonal(c)?,
    })
}
