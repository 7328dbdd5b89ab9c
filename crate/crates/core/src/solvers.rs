//! The outer Rayleigh-Ritz iteration and its expansion strategies.
//!
//! Each outer step extracts a Ritz pair from the search space, stops if its
//! residual is small enough, and otherwise asks the configured strategy for an
//! expansion vector, which is orthonormalized against the basis and appended.
//! Smallest eigenvalues are computed as the largest ones of `alpha I - A`;
//! reported values are mapped back to the spectrum of `A`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linop::{densify, orthonormalize_against, sym_eig, LinearMap, SymmetricOperator, Tally};
use crate::minres::{default_abstol, minres_fixed, AugmentedOperator};
use crate::random::{random_unit_vector, rng};
use crate::spamop::{SearchState, SpamOperator};

/// Largest dimension for which `A_k` is densified for an exact inner solve.
pub const FULL_SPAM_CAP: usize = 1024;

/// Relative residual norm below which a residual expansion is a breakdown.
pub const RESIDUAL_BREAKDOWN: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Largest,
    /// 1-based, counted from the top.
    PthLargest(usize),
    /// Solve with `alpha I - A`, whose largest eigenvalue is `alpha - lambda_min(A)`.
    SmallestViaShift(f64),
}

impl Target {
    /// The descending index selected in the problem actually iterated on.
    pub fn rank(&self) -> usize {
        match self {
            Target::PthLargest(p) => *p,
            _ => 1,
        }
    }

    pub fn shift(&self) -> Option<f64> {
        match self {
            Target::SmallestViaShift(alpha) => Some(*alpha),
            _ => None,
        }
    }

    /// Map an eigenvalue of the iterated problem back to the spectrum of `A`.
    pub fn to_original(&self, value: f64) -> f64 {
        match self {
            Target::SmallestViaShift(alpha) => alpha - value,
            _ => value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Lanczos,
    FullSpam,
    Spam1,
    Spam1L(usize),
    JdL(usize),
    Jd1L(usize),
}

impl Strategy {
    pub fn name(&self) -> String {
        match self {
            Strategy::Lanczos => "lanczos".into(),
            Strategy::FullSpam => "fullspam".into(),
            Strategy::Spam1 => "spam1".into(),
            Strategy::Spam1L(l) => format!("spam1l:{l}"),
            Strategy::JdL(l) => format!("jd:{l}"),
            Strategy::Jd1L(l) => format!("jd1:{l}"),
        }
    }

    fn inner_steps(&self) -> Option<usize> {
        match self {
            Strategy::Spam1L(l) | Strategy::JdL(l) | Strategy::Jd1L(l) => Some(*l),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StartVector {
    Random(u64),
    /// Eigenvector of `A0` for the target index.
    EigvecOfA0,
    Given(DVector<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub strategy: Strategy,
    pub target: Target,
    /// Converged when `resnorm <= tol * max(1, |A|_1)`.
    pub tol: f64,
    /// Largest search space dimension; `None` means `n`.
    pub max_outer: Option<usize>,
    pub start: StartVector,
}

impl SolverConfig {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            target: Target::Largest,
            tol: 1e-10,
            max_outer: None,
            start: StartVector::Random(0),
        }
    }

    pub fn target(mut self, target: Target) -> Self {
        self.target = target;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_outer(mut self, max_outer: usize) -> Self {
        self.max_outer = Some(max_outer);
        self
    }

    pub fn start(mut self, start: StartVector) -> Self {
        self.start = start;
        self
    }

    fn validate(&self) -> Result<()> {
        if let Some(0) = self.strategy.inner_steps() {
            return Err(Error::invalid("inner MinRES step count must be at least 1"));
        }
        if let Target::PthLargest(0) = self.target {
            return Err(Error::invalid("target index p is 1-based"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid(format!("tolerance must be nonnegative, got {}", self.tol)));
        }
        if let Some(0) = self.max_outer {
            return Err(Error::invalid("max_outer must be at least 1"));
        }
        Ok(())
    }
}

/// A Ritz pair of the iterated problem.
#[derive(Clone, Debug)]
pub struct RitzPair {
    pub value: f64,
    pub coeffs: DVector<f64>,
    pub vector: DVector<f64>,
    /// `A u - value u`, from the cached images.
    pub residual: DVector<f64>,
    pub resnorm: f64,
}

/// The Ritz pair with descending index `p` (1-based).
pub fn rayleigh_ritz(state: &SearchState, p: usize) -> Result<RitzPair> {
    let k = state.len();
    if k == 0 {
        return Err(Error::invalid("Rayleigh-Ritz needs a nonempty search space"));
    }
    if p == 0 || p > k {
        return Err(Error::invalid(format!("target index {p} exceeds subspace dimension {k}")));
    }
    let eig = sym_eig(state.projected())?;
    let (value, coeffs) = eig.pth_largest(p).expect("index checked");
    let vector = state.basis() * &coeffs;
    let residual = state.images() * &coeffs - &vector * value;
    let resnorm = residual.norm();
    Ok(RitzPair {
        value,
        coeffs,
        vector,
        residual,
        resnorm,
    })
}

/// The residual of `pair`, or `None` if it is below `threshold`.
pub fn expand_lanczos(pair: &RitzPair, threshold: f64) -> Option<DVector<f64>> {
    (pair.resnorm > threshold).then(|| pair.residual.clone())
}

/// Eigenvector of the densified `A_k` with descending index `p`.
pub fn expand_full_spam(state: &SearchState, a0: &SymmetricOperator, p: usize) -> Result<DVector<f64>> {
    let n = state.dim();
    if n > FULL_SPAM_CAP {
        return Err(Error::DensifyCap {
            dim: n,
            cap: FULL_SPAM_CAP,
        });
    }
    let ak = SpamOperator::new(state, a0)?.to_dense_with(&a0.to_dense_with_cap(FULL_SPAM_CAP)?);
    let eig = sym_eig(&ak)?;
    let (_, vector) = eig
        .pth_largest(p)
        .ok_or_else(|| Error::invalid(format!("target index {p} exceeds n = {n}")))?;
    Ok(vector)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerSolve {
    /// Dense LU of the bordered matrix.
    Exact,
    Minres(usize),
}

/// Solution of a correction equation.
#[derive(Clone, Debug)]
pub struct Correction {
    pub t: DVector<f64>,
    /// The shift had to be perturbed to make the bordered matrix nonsingular.
    pub perturbed: bool,
}

fn bordered_rhs(pair: &RitzPair) -> DVector<f64> {
    let n = pair.residual.len();
    let mut rhs = DVector::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from(&(-&pair.residual));
    rhs
}

fn dense_bordered_solve(base: &DMatrix<f64>, mu: f64, u: &DVector<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let n = base.nrows();
    let mut big = DMatrix::zeros(n + 1, n + 1);
    big.view_mut((0, 0), (n, n)).copy_from(base);
    for i in 0..n {
        big[(i, i)] -= mu;
        big[(i, n)] = u[i];
        big[(n, i)] = u[i];
    }
    let sol = big.lu().solve(rhs)?;
    let scale = rhs.norm().max(f64::MIN_POSITIVE);
    // tiny pivots show up as huge but finite solutions
    if sol.iter().all(|v| v.is_finite()) && sol.norm() <= 1e14 * scale {
        Some(sol.rows(0, n).into_owned())
    } else {
        None
    }
}

fn solve_correction<B: LinearMap + ?Sized>(
    base: &B,
    dense: Option<&DMatrix<f64>>,
    pair: &RitzPair,
    inner: InnerSolve,
    perturbation: f64,
) -> Result<Correction> {
    let rhs = bordered_rhs(pair);
    let n = base.dim();
    let attempt = |mu: f64| -> Result<Option<DVector<f64>>> {
        match inner {
            InnerSolve::Exact => Ok(dense_bordered_solve(dense.expect("dense base for exact solve"), mu, &pair.vector, &rhs)),
            InnerSolve::Minres(steps) => {
                let aug = AugmentedOperator::new(base, mu, pair.vector.clone())?;
                let out = minres_fixed(&aug, &rhs, steps, default_abstol(&rhs))?;
                let t = out.solution.rows(0, n).into_owned();
                Ok(t.iter().all(|v| v.is_finite()).then_some(t))
            }
        }
    };
    if let Some(t) = attempt(pair.value)? {
        return Ok(Correction { t, perturbed: false });
    }
    if let Some(t) = attempt(pair.value + perturbation)? {
        return Ok(Correction { t, perturbed: true });
    }
    Err(Error::Singular("bordered correction system is singular".into()))
}

/// One correction step for `A_k`:
/// `[[A_k - mu I, u], [u^T, 0]] [t; eps] = [-r; 0]`.
///
/// `perturbation` is added to `mu` for a single retry when the system is
/// singular.
pub fn expand_spam1(
    state: &SearchState,
    a0: &SymmetricOperator,
    pair: &RitzPair,
    inner: InnerSolve,
    perturbation: f64,
) -> Result<Correction> {
    let op = SpamOperator::new(state, a0)?;
    let dense = match inner {
        InnerSolve::Exact => {
            if state.dim() > FULL_SPAM_CAP {
                return Err(Error::DensifyCap {
                    dim: state.dim(),
                    cap: FULL_SPAM_CAP,
                });
            }
            Some(op.to_dense_with(&a0.to_dense_with_cap(FULL_SPAM_CAP)?))
        }
        InnerSolve::Minres(_) => None,
    };
    solve_correction(&op, dense.as_ref(), pair, inner, perturbation)
}

/// The Jacobi-Davidson correction with `base` in place of `A`:
/// `[[base - mu I, u], [u^T, 0]] [t; eps] = [-r; 0]`.
pub fn expand_jd<B: LinearMap + ?Sized>(
    base: &B,
    pair: &RitzPair,
    inner: InnerSolve,
    perturbation: f64,
) -> Result<Correction> {
    let dense = match inner {
        InnerSolve::Exact => {
            if base.dim() > FULL_SPAM_CAP {
                return Err(Error::DensifyCap {
                    dim: base.dim(),
                    cap: FULL_SPAM_CAP,
                });
            }
            Some(densify(base)?)
        }
        InnerSolve::Minres(_) => None,
    };
    solve_correction(base, dense.as_ref(), pair, inner, perturbation)
}

/// `alpha I - inner`, charging products to `inner`.
struct ShiftedView<'a> {
    alpha: f64,
    inner: &'a SymmetricOperator,
}

impl LinearMap for ShiftedView<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64], tally: Tally) {
        self.inner.apply_into(x, y, tally);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.alpha * xi - *yi;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    /// Search space dimension.
    pub k: usize,
    /// Selected Ritz value, as an eigenvalue estimate of `A`.
    pub ritz_value: f64,
    /// Distance to the reference eigenvalue, when one is known.
    pub abs_error: Option<f64>,
    pub resnorm: f64,
    /// Products with `A` since the run started.
    pub a_matvecs: u64,
    /// Products with `A0` (each `A_k` product costs one) since the run started.
    pub inner_matvecs: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxOuter,
    /// No new direction could be found.
    Breakdown,
    /// The search space is the whole space.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fallback {
    pub k: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<ConvergenceRecord>,
    pub status: RunStatus,
    /// Target eigenvalue of `A` from a dense solve.
    pub reference: Option<f64>,
    pub seed: Option<u64>,
    pub fallbacks: Vec<Fallback>,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    /// First dimension `k` at which the error drops to `threshold`.
    pub fn first_within(&self, threshold: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.abs_error.is_some_and(|e| e <= threshold))
            .map(|r| r.k)
    }
}

/// Step-by-step driver behind [`run_outer`], exposing the search state.
pub struct OuterSolver<'a> {
    a: &'a SymmetricOperator,
    iterated: Box<dyn LinearMap + 'a>,
    a0: &'a SymmetricOperator,
    config: SolverConfig,
    state: SearchState,
    scale: f64,
    max_dim: usize,
    a_start: u64,
    a0_start: u64,
    records: Vec<ConvergenceRecord>,
    fallbacks: Vec<Fallback>,
    reference: Option<f64>,
    status: Option<RunStatus>,
}

impl<'a> OuterSolver<'a> {
    /// Prepares the run and expands the search space with the start vector.
    /// For a smallest-eigenvalue target `a0` must approximate `alpha I - A`.
    pub fn new(a: &'a SymmetricOperator, a0: &'a SymmetricOperator, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let n = a.dim();
        if a0.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a0.dim(),
            });
        }
        let iterated: Box<dyn LinearMap + 'a> = match config.target.shift() {
            Some(alpha) => Box::new(ShiftedView { alpha, inner: a }),
            None => Box::new(a),
        };
        let p = config.target.rank();
        if p > n {
            return Err(Error::invalid(format!("target index {p} exceeds n = {n}")));
        }
        let reference = if n <= FULL_SPAM_CAP {
            let eig = sym_eig(&a.to_dense_with_cap(FULL_SPAM_CAP)?)?;
            Some(match config.target {
                Target::SmallestViaShift(_) => eig.values[0],
                _ => eig.values[n - p],
            })
        } else {
            None
        };
        let start = match &config.start {
            StartVector::Random(seed) => random_unit_vector(&mut rng(*seed), n),
            StartVector::EigvecOfA0 => {
                let eig = sym_eig(&a0.to_dense_with_cap(FULL_SPAM_CAP)?)?;
                eig.pth_largest(p).expect("index checked").1
            }
            StartVector::Given(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: v.len(),
                    });
                }
                let norm = v.norm();
                if !(norm > 0.0) {
                    return Err(Error::invalid("start vector must be nonzero"));
                }
                v / norm
            }
        };
        let scale = a.norm1_estimate().max(1.0);
        let max_dim = config.max_outer.unwrap_or(n).min(n);
        let mut solver = Self {
            a,
            iterated,
            a0,
            config,
            state: SearchState::new(n),
            scale,
            max_dim,
            a_start: a.matvecs(),
            a0_start: a0.matvecs(),
            records: Vec::new(),
            fallbacks: Vec::new(),
            reference,
            status: None,
        };
        solver.state.expand(&start, &*solver.iterated)?;
        Ok(solver)
    }

    pub fn state(&self) -> &SearchState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn records(&self) -> &[ConvergenceRecord] {
        &self.records
    }

    pub fn status(&self) -> Option<RunStatus> {
        self.status
    }

    /// The operator actually iterated on (`A` or `alpha I - A`).
    pub fn iterated(&self) -> &dyn LinearMap {
        &*self.iterated
    }

    /// Rayleigh-Ritz on the current space and a record for it. Returns the
    /// pair unless the run has finished.
    pub fn observe(&mut self) -> Result<Option<RitzPair>> {
        if self.status.is_some() {
            return Ok(None);
        }
        let k = self.state.len();
        let pair = rayleigh_ritz(&self.state, self.config.target.rank().min(k))?;
        let ritz_value = self.config.target.to_original(pair.value);
        self.records.push(ConvergenceRecord {
            k,
            ritz_value,
            abs_error: self.reference.map(|r| (ritz_value - r).abs()),
            resnorm: pair.resnorm,
            a_matvecs: self.a.matvecs() - self.a_start,
            inner_matvecs: self.a0.matvecs() - self.a0_start,
        });
        if pair.resnorm <= self.config.tol * self.scale && k >= self.config.target.rank() {
            self.status = Some(RunStatus::Converged);
        } else if k >= self.state.dim() {
            self.status = Some(RunStatus::Exhausted);
        } else if k >= self.max_dim {
            self.status = Some(RunStatus::MaxOuter);
        }
        if self.status.is_some() {
            return Ok(None);
        }
        Ok(Some(pair))
    }

    fn fallback(&mut self, reason: impl Into<String>) {
        self.fallbacks.push(Fallback {
            k: self.state.len(),
            reason: reason.into(),
        });
    }

    fn propose(&mut self, pair: &RitzPair) -> Result<Option<DVector<f64>>> {
        let p = self.config.target.rank().min(self.state.len());
        let perturbation = 1e-12 * self.scale;
        let proposal = match self.config.strategy {
            Strategy::Lanczos => return Ok(None),
            Strategy::FullSpam => expand_full_spam(&self.state, self.a0, p).map(|v| (v, false)),
            Strategy::Spam1 => {
                expand_spam1(&self.state, self.a0, pair, InnerSolve::Exact, perturbation).map(|c| (c.t, c.perturbed))
            }
            Strategy::Spam1L(l) => expand_spam1(&self.state, self.a0, pair, InnerSolve::Minres(l), perturbation)
                .map(|c| (c.t, c.perturbed)),
            Strategy::JdL(l) => {
                expand_jd(&*self.iterated, pair, InnerSolve::Minres(l), perturbation).map(|c| (c.t, c.perturbed))
            }
            Strategy::Jd1L(l) => {
                expand_jd(self.a0, pair, InnerSolve::Minres(l), perturbation).map(|c| (c.t, c.perturbed))
            }
        };
        match proposal {
            Ok((v, perturbed)) => {
                if perturbed {
                    self.fallback("shift perturbed to regularize the correction equation");
                }
                Ok(Some(v))
            }
            Err(Error::Singular(msg)) => {
                self.fallback(format!("{msg}; expanding with the residual"));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    /// Expand the search space for `pair`, as returned by [`Self::observe`].
    pub fn expand(&mut self, pair: &RitzPair) -> Result<()> {
        if let Some(v) = self.propose(pair)? {
            let q = orthonormalize_against(&v, self.state.basis());
            if !q.lost {
                return self.state.expand(&q.vector, &*self.iterated);
            }
            self.fallback("expansion vector lies in the search space; expanding with the residual");
        }
        match expand_lanczos(pair, RESIDUAL_BREAKDOWN * self.scale) {
            Some(r) => {
                let q = orthonormalize_against(&r, self.state.basis());
                if q.lost {
                    self.status = Some(RunStatus::Breakdown);
                    Ok(())
                } else {
                    self.state.expand(&q.vector, &*self.iterated)
                }
            }
            None => {
                self.status = Some(RunStatus::Breakdown);
                Ok(())
            }
        }
    }

    /// One outer iteration. Returns `false` once the run has finished.
    pub fn step(&mut self) -> Result<bool> {
        match self.observe()? {
            Some(pair) => {
                self.expand(&pair)?;
                Ok(self.status.is_none())
            }
            None => Ok(false),
        }
    }

    pub fn finish(self) -> RunOutcome {
        let seed = match self.config.start {
            StartVector::Random(seed) => Some(seed),
            _ => None,
        };
        RunOutcome {
            records: self.records,
            status: self.status.unwrap_or(RunStatus::MaxOuter),
            reference: self.reference,
            seed,
            fallbacks: self.fallbacks,
        }
    }
}

pub fn run_outer(a: &SymmetricOperator, a0: &SymmetricOperator, config: &SolverConfig) -> Result<RunOutcome> {
    let mut solver = OuterSolver::new(a, a0, config.clone())?;
    while solver.step()? {}
    Ok(solver.finish())
}
