//! Fixed-step MinRES for symmetric, possibly indefinite systems.
//!
//! The iteration always starts from the zero vector, so after `l` steps the
//! iterate is the minimum-residual solution over
//! `span{b, Op b, ..., Op^(l-1) b}`. In particular a single step returns a
//! multiple of the right-hand side, which is what makes SPAM(1, 1) expand along
//! the outer residual exactly like Lanczos.
//!
//! The Lanczos vectors are kept and fully reorthogonalized. The inner solves
//! here are short (or sized to the problem for exactness checks), so the extra
//! storage is bounded by `l` vectors and buys exact finite termination.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linop::{LinearMap, Tally};

/// Relative size of a new Lanczos vector below which MinRES stops.
pub const LANCZOS_BREAKDOWN: f64 = 1e-14;

/// The bordered map `[[base - shift I, u], [u^T, 0]]` of dimension `n + 1`.
pub struct AugmentedOperator<B> {
    base: B,
    shift: f64,
    border: DVector<f64>,
}

impl<B: LinearMap> AugmentedOperator<B> {
    /// `border` must have unit length.
    pub fn new(base: B, shift: f64, border: DVector<f64>) -> Result<Self> {
        if border.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: border.len(),
            });
        }
        let norm = border.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("border vector must be unit length, got {norm}")));
        }
        Ok(Self {
            base,
            shift,
            border,
        })
    }

    pub fn base(&self) -> &B {
        &self.base
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn border(&self) -> &DVector<f64> {
        &self.border
    }
}

impl<B: LinearMap> LinearMap for AugmentedOperator<B> {
    fn dim(&self) -> usize {
        self.base.dim() + 1
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64], tally: Tally) {
        let n = self.base.dim();
        let (xs, xi) = x.split_at(n);
        let (ys, yi) = y.split_at_mut(n);
        self.base.apply_into(xs, ys, tally);
        let u = self.border.as_slice();
        let mut dot = 0.0;
        for ((yj, xj), uj) in ys.iter_mut().zip(xs).zip(u) {
            *yj += -self.shift * xj + xi[0] * uj;
            dot += uj * xj;
        }
        yi[0] = dot;
    }
}

#[derive(Debug, Clone)]
pub struct MinresOutcome {
    pub solution: DVector<f64>,
    /// `|rhs - Op solution|`, recomputed with an uncounted application.
    pub resnorm: f64,
    pub steps: usize,
    /// Residual norm estimate from the Givens recurrence, starting with
    /// `|rhs|` before the first step. Nonincreasing by construction.
    pub history: Vec<f64>,
    /// The Krylov space became invariant (or the projected tridiagonal
    /// matrix singular) before `steps` were taken.
    pub breakdown: bool,
}

pub fn default_abstol(rhs: &DVector<f64>) -> f64 {
    1e-13 * rhs.norm()
}

/// At most `steps` MinRES iterations on `op x = rhs` from `x = 0`, returning
/// early once the residual estimate drops to `abstol`.
pub fn minres_fixed<M: LinearMap + ?Sized>(
    op: &M,
    rhs: &DVector<f64>,
    steps: usize,
    abstol: f64,
) -> Result<MinresOutcome> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    if steps == 0 {
        return Err(Error::invalid("MinRES needs at least one step"));
    }
    let beta1 = rhs.norm();
    let mut x = DVector::zeros(n);
    if beta1 == 0.0 {
        return Ok(MinresOutcome {
            solution: x,
            resnorm: 0.0,
            steps: 0,
            history: vec![0.0],
            breakdown: false,
        });
    }

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
    basis.push(rhs / beta1);
    let mut beta = 0.0; // coupling between v_{k-1} and v_k
    let (mut c1, mut s1) = (1.0_f64, 0.0_f64); // G_{k-1}
    let (mut c2, mut s2) = (1.0_f64, 0.0_f64); // G_{k-2}
    let mut d1 = DVector::zeros(n);
    let mut d2 = DVector::zeros(n);
    let mut phibar = beta1;
    let mut history = vec![beta1];
    let mut breakdown = false;
    let mut taken = 0;
    let mut w = DVector::zeros(n);

    for k in 0..steps {
        let v = &basis[k];
        op.apply_into(v.as_slice(), w.as_mut_slice(), Tally::Count);
        if k > 0 {
            w.axpy(-beta, &basis[k - 1], 1.0);
        }
        let alpha = v.dot(&w);
        w.axpy(-alpha, v, 1.0);
        for q in &basis {
            let c = q.dot(&w);
            w.axpy(-c, q, 1.0);
        }
        let beta_next = w.norm();

        let eps = s2 * beta;
        let delta_bar = c2 * beta;
        let delta = c1 * delta_bar + s1 * alpha;
        let gamma_bar = -s1 * delta_bar + c1 * alpha;
        let gamma = gamma_bar.hypot(beta_next);
        taken = k + 1;
        if gamma == 0.0 {
            breakdown = true;
            break;
        }
        let c = gamma_bar / gamma;
        let s = beta_next / gamma;
        let phi = c * phibar;
        phibar *= -s;

        let mut d = basis[k].clone();
        d.axpy(-delta, &d1, 1.0);
        d.axpy(-eps, &d2, 1.0);
        d /= gamma;
        x.axpy(phi, &d, 1.0);
        history.push(phibar.abs());

        d2 = std::mem::replace(&mut d1, d);
        c2 = c1;
        s2 = s1;
        c1 = c;
        s1 = s;
        beta = beta_next;

        if phibar.abs() <= abstol {
            break;
        }
        if beta_next < LANCZOS_BREAKDOWN * beta1 {
            breakdown = k + 1 < steps;
            break;
        }
        if k + 1 < steps {
            basis.push(&w / beta_next);
        }
    }

    let mut ax = vec![0.0; n];
    op.apply_into(x.as_slice(), &mut ax, Tally::Skip);
    let resnorm = rhs
        .iter()
        .zip(&ax)
        .map(|(b, a)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt();
    Ok(MinresOutcome {
        solution: x,
        resnorm,
        steps: taken,
        history,
        breakdown,
    })
}
