use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use spam_core::approx::{build_approx, negated_shift, ApproxSpec, IndexSelection};
use spam_core::problems::{
    gen_banded, gen_reaction_diffusion_1d, load_matrix_market, BandedSpec, ReactionDiffusionSpec,
};
use spam_core::solvers::{StartVector, Strategy, Target};
use spam_core::{Error as CoreError, SymmetricOperator};

/// Implements `Display`, `FromStr` and string-valued serde for a flag type.
macro_rules! flag_type {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

fn num<T: FromStr>(text: &str, what: &str) -> anyhow::Result<T>
where
    T::Err: fmt::Display,
{
    text.trim()
        .parse()
        .map_err(|e| anyhow!("bad {what} `{text}`: {e}"))
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixSource {
    Banded { n: usize, q: usize, eps: f64 },
    Rd1d { n: usize },
    File(PathBuf),
}

impl FromStr for MatrixSource {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        if let Some(rest) = s.strip_prefix("builtin:banded:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 3 {
                bail!("expected builtin:banded:n,q,eps, got `{s}`");
            }
            return Ok(MatrixSource::Banded {
                n: num(parts[0], "n")?,
                q: num(parts[1], "q")?,
                eps: num(parts[2], "eps")?,
            });
        }
        if let Some(rest) = s.strip_prefix("builtin:rd1d:") {
            return Ok(MatrixSource::Rd1d { n: num(rest, "n")? });
        }
        if s.starts_with("builtin:") {
            bail!("unknown builtin matrix `{s}`");
        }
        Ok(MatrixSource::File(PathBuf::from(s)))
    }
}

impl fmt::Display for MatrixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixSource::Banded { n, q, eps } => write!(f, "builtin:banded:{n},{q},{eps}"),
            MatrixSource::Rd1d { n } => write!(f, "builtin:rd1d:{n}"),
            MatrixSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

flag_type!(MatrixSource);

/// A loaded matrix, plus its reaction part for reaction-diffusion problems.
pub struct Problem {
    pub a: SymmetricOperator,
    pub reaction: Option<SymmetricOperator>,
}

impl MatrixSource {
    pub fn load(&self) -> spam_core::Result<Problem> {
        Ok(match self {
            MatrixSource::Banded { n, q, eps } => Problem {
                a: gen_banded(&BandedSpec::new(*n, *q, *eps))?,
                reaction: None,
            },
            MatrixSource::Rd1d { n } => {
                let rd = gen_reaction_diffusion_1d(&ReactionDiffusionSpec { n: *n })?;
                Problem {
                    a: rd.a,
                    reaction: Some(rd.reaction),
                }
            }
            MatrixSource::File(p) => Problem {
                a: load_matrix_market(p)?,
                reaction: None,
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ApproxArg {
    Zero,
    AlphaI(f64),
    Diag,
    Band(usize),
    /// Algebraic from below, keeping the `m` largest diagonal entries.
    LowRank(usize),
    NaturalReaction,
}

impl FromStr for ApproxArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "zero" => ApproxArg::Zero,
            "diag" => ApproxArg::Diag,
            "natural-reaction" => ApproxArg::NaturalReaction,
            _ => {
                if let Some(v) = s.strip_prefix("alphaI:") {
                    ApproxArg::AlphaI(num(v, "alpha")?)
                } else if let Some(v) = s.strip_prefix("band:") {
                    ApproxArg::Band(num(v, "q0")?)
                } else if let Some(v) = s.strip_prefix("lowrank:") {
                    ApproxArg::LowRank(num(v, "m")?)
                } else {
                    bail!("unknown approximation `{s}`")
                }
            }
        })
    }
}

impl fmt::Display for ApproxArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxArg::Zero => write!(f, "zero"),
            ApproxArg::AlphaI(a) => write!(f, "alphaI:{a}"),
            ApproxArg::Diag => write!(f, "diag"),
            ApproxArg::Band(q) => write!(f, "band:{q}"),
            ApproxArg::LowRank(m) => write!(f, "lowrank:{m}"),
            ApproxArg::NaturalReaction => write!(f, "natural-reaction"),
        }
    }
}

flag_type!(ApproxArg);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodArg(pub Strategy);

impl FromStr for MethodArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let steps = |v: &str| -> anyhow::Result<usize> {
            let l: usize = num(v, "step count")?;
            if l == 0 {
                bail!("step count must be at least 1");
            }
            Ok(l)
        };
        Ok(MethodArg(match s {
            "lanczos" => Strategy::Lanczos,
            "fullspam" => Strategy::FullSpam,
            "spam1" => Strategy::Spam1,
            _ => {
                if let Some(v) = s.strip_prefix("spam1l:") {
                    Strategy::Spam1L(steps(v)?)
                } else if let Some(v) = s.strip_prefix("jd1:") {
                    Strategy::Jd1L(steps(v)?)
                } else if let Some(v) = s.strip_prefix("jd:") {
                    Strategy::JdL(steps(v)?)
                } else {
                    bail!("unknown method `{s}`")
                }
            }
        }))
    }
}

impl fmt::Display for MethodArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.name())
    }
}

flag_type!(MethodArg);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetArg(pub Target);

impl FromStr for TargetArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(TargetArg(if s == "largest" {
            Target::Largest
        } else if let Some(v) = s.strip_prefix("p:") {
            let p: usize = num(v, "index")?;
            if p == 0 {
                bail!("target index is 1-based");
            }
            Target::PthLargest(p)
        } else if let Some(v) = s.strip_prefix("smallest:") {
            Target::SmallestViaShift(num(v, "shift")?)
        } else {
            bail!("unknown target `{s}`")
        }))
    }
}

impl fmt::Display for TargetArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Target::Largest => write!(f, "largest"),
            Target::PthLargest(p) => write!(f, "p:{p}"),
            Target::SmallestViaShift(a) => write!(f, "smallest:{a}"),
        }
    }
}

flag_type!(TargetArg);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StartArg {
    Random(u64),
    Eigvec,
}

impl StartArg {
    pub fn to_core(self) -> StartVector {
        match self {
            StartArg::Random(seed) => StartVector::Random(seed),
            StartArg::Eigvec => StartVector::EigvecOfA0,
        }
    }
}

impl FromStr for StartArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        if s == "eigvec" {
            Ok(StartArg::Eigvec)
        } else if let Some(v) = s.strip_prefix("random:") {
            Ok(StartArg::Random(num(v, "seed")?))
        } else {
            bail!("unknown start `{s}`")
        }
    }
}

impl fmt::Display for StartArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartArg::Random(seed) => write!(f, "random:{seed}"),
            StartArg::Eigvec => write!(f, "eigvec"),
        }
    }
}

flag_type!(StartArg);

/// Everything needed to reproduce a run; embedded in every CSV header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub matrix: MatrixSource,
    pub approx: ApproxArg,
    pub methods: Vec<MethodArg>,
    pub target: TargetArg,
    pub tol: f64,
    pub max_outer: Option<usize>,
    pub start: StartArg,
    pub out: PathBuf,
}

impl RunSpec {
    pub fn from_csv_header(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let line = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix("# runspec: "))
            .ok_or_else(|| anyhow!("{} has no runspec header", path.display()))?;
        Ok(serde_json::from_str(line)?)
    }

    /// The approximation of the operator actually iterated on: `A`, or
    /// `alpha I - A` for a smallest-eigenvalue target.
    pub fn build_approx(&self, problem: &Problem) -> spam_core::Result<SymmetricOperator> {
        let shift = self.target.0.shift();
        if self.approx == ApproxArg::NaturalReaction {
            let r = problem.reaction.as_ref().ok_or_else(|| {
                CoreError::InvalidArgument("natural-reaction is only available for builtin:rd1d matrices".into())
            })?;
            return match shift {
                Some(alpha) => negated_shift(alpha, r),
                None => Ok(r.clone()),
            };
        }
        let shifted;
        let base = match shift {
            Some(alpha) => {
                shifted = negated_shift(alpha, &problem.a)?;
                &shifted
            }
            None => &problem.a,
        };
        let kind = match &self.approx {
            ApproxArg::Zero => ApproxSpec::Zero,
            ApproxArg::AlphaI(a) => ApproxSpec::ScaledIdentity(*a),
            ApproxArg::Diag => ApproxSpec::DiagonalPart,
            ApproxArg::Band(q) => ApproxSpec::BandCutoff(*q),
            ApproxArg::LowRank(m) => ApproxSpec::AlgebraicFromBelow(IndexSelection::SmallestDiagonal { retained: *m }),
            ApproxArg::NaturalReaction => unreachable!("handled above"),
        };
        build_approx(base, &kind)
    }
}
