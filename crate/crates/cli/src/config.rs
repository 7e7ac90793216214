//! Run configuration: one JSON document per invocation. All tensor and axis
//! indices are 1-based.

use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use polyga::algebra::{builtin, AlgebraDocument, BUILTIN_NAMES};
use polyga::fields::{
    compose_pair, coordinate_monomial, gamma_from_prescribed, identity_field, linear_field, ExpFn, IdentityFn,
    PolyFunction, PolynomialFn, PowerFn, RandomField, ReciprocalFn,
};
use polyga::geodesics::IntegratorConfig;
use polyga::h4::{family_field, family_pair, FinslerConfig, H4FamilySpec, Orientation};
use polyga::{DiffConfig, GAPair, Grid, Path, StructureConstants, VectorField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::Format;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

impl From<polyga::Error> for ConfigError {
    fn from(e: polyga::Error) -> Self {
        Self::Invalid(e.to_string())
    }
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

fn invalid<T>(msg: impl Into<String>) -> ConfigResult<T> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algebra: Option<AlgebraRef>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub diff: Option<DiffSpec>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub pairs: Vec<PairSpec>,
    pub ops: Option<Vec<PairOp>>,
    /// `(α, β)` for the linear combination `α·P₁ + β·P₂`.
    pub combine: Option<[f64; 2]>,
    pub outer: Option<OuterSpec>,
    #[serde(default)]
    pub paths: Vec<PathSpec>,
    pub metric: Option<MetricSpec>,
    pub start: Option<StartSpec>,
    pub integrator: Option<IntegratorConfig>,
    #[serde(default)]
    pub cross_check: bool,
    pub family: Option<H4FamilySpec>,
    pub output: Option<OutputSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum AlgebraRef {
    Builtin(String),
    File { file: PathBuf },
    Inline(AlgebraDocument),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffSpec {
    pub h: Option<f64>,
    #[serde(default)]
    pub scheme: SchemeSpec,
    pub quadrature_segments: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeSpec {
    #[default]
    Central2,
    Central4,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: Bound,
    pub max: Bound,
    pub points: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant {
        value: Vec<f64>,
    },
    Linear {
        matrix: Vec<Vec<f64>>,
        offset: Option<Vec<f64>>,
    },
    Identity,
    /// `X^m` in the algebra.
    Power {
        exponent: u32,
    },
    /// The algebra exponential `exp X`.
    Exp,
    /// `Σ c_m X^m` with poly-number coefficients.
    Polynomial {
        coeffs: Vec<Vec<f64>>,
    },
    Reciprocal,
    CoordinateMonomial {
        component: usize,
        variable: usize,
        exponent: u32,
        coeff: Option<f64>,
    },
    /// Smooth random field drawn from the run seed.
    Random,
    H4Family(H4FamilySpec),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaSpec {
    /// The natural gamma of the field kind: zero, or the family's own.
    #[default]
    Auto,
    Zero,
    /// `γ = −J + p·f'` for the given derivative field `f'`.
    Prescribed(FieldSpec),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub f: FieldSpec,
    #[serde(default)]
    pub gamma: GammaSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairOp {
    Sum,
    Product,
    Quotient,
    Compose,
}

impl PairOp {
    pub const ALL: [PairOp; 4] = [PairOp::Sum, PairOp::Product, PairOp::Quotient, PairOp::Compose];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sum => "sum",
            Self::Product => "product",
            Self::Quotient => "quotient",
            Self::Compose => "compose",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OuterSpec {
    Identity,
    Power { exponent: u32 },
    Exp,
    Polynomial { coeffs: Vec<Vec<f64>> },
    Reciprocal,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PathSpec {
    Straight {
        from: Vec<f64>,
        to: Vec<f64>,
    },
    /// One axis at a time, in `order`.
    Axis {
        from: Vec<f64>,
        to: Vec<f64>,
        order: Vec<usize>,
    },
    Polyline {
        points: Vec<Vec<f64>>,
    },
    Rectangle {
        corner: Vec<f64>,
        axes: [usize; 2],
        sides: [f64; 2],
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricModel {
    Constant {
        kappa: f64,
        lambda: f64,
    },
    Gaussian {
        kappa0: f64,
        #[serde(default = "one")]
        lambda0: f64,
    },
    Family(H4FamilySpec),
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
pub struct MetricSpec {
    #[serde(flatten)]
    pub model: MetricModel,
    pub sigma0: Option<f64>,
    pub orientation: Option<Orientation>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub xi: Vec<f64>,
    /// Velocity for the second-order form.
    pub v: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    /// A cone direction `dξ`; momenta follow from the metric.
    pub direction: Option<Vec<f64>>,
    #[serde(default)]
    pub tau: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub file: Option<PathBuf>,
    pub format: Option<Format>,
}

/// A parsed configuration together with the directory relative file
/// references resolve against.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub raw: serde_json::Value,
    pub config: RunConfig,
    pub base: PathBuf,
}

fn read(path: &FsPath) -> ConfigResult<String> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

pub fn load(path: &FsPath) -> ConfigResult<Loaded> {
    let raw: serde_json::Value = serde_json::from_str(&read(path)?)?;
    let config = RunConfig::deserialize(&raw)?;
    let base = path.parent().map(FsPath::to_path_buf).unwrap_or_default();
    Ok(Loaded { raw, config, base })
}

impl Loaded {
    pub fn algebra(&self) -> ConfigResult<Arc<StructureConstants>> {
        let s = match &self.config.algebra {
            None => return invalid("missing `algebra`"),
            Some(AlgebraRef::Builtin(name)) => match builtin(name) {
                Some(s) => s,
                None => return invalid(format!("unknown algebra `{name}`; built-ins are {BUILTIN_NAMES:?}")),
            },
            Some(AlgebraRef::File { file }) => AlgebraDocument::from_json(&read(&self.base.join(file))?)?.build()?,
            Some(AlgebraRef::Inline(doc)) => doc.build()?,
        };
        Ok(Arc::new(s))
    }

    pub fn diff(&self) -> ConfigResult<DiffConfig> {
        let mut cfg = match self.config.diff.as_ref().map(|d| d.scheme) {
            Some(SchemeSpec::Central4) => DiffConfig::central4(),
            _ => DiffConfig::default(),
        };
        if let Some(d) = &self.config.diff {
            if let Some(h) = d.h {
                cfg.h = h;
            }
            if let Some(q) = d.quadrature_segments {
                cfg.quadrature_segments = q;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self, n: usize, default: impl FnOnce() -> Grid) -> ConfigResult<Grid> {
        let Some(g) = &self.config.grid else {
            return Ok(default());
        };
        let expand = |b: &Bound| match b {
            Bound::Scalar(v) => vec![*v; n],
            Bound::Vector(v) => v.clone(),
        };
        let grid = Grid::new(expand(&g.min), expand(&g.max), g.points)?;
        if grid.dim() != n {
            return invalid(format!("grid has dimension {}, algebra has {n}", grid.dim()));
        }
        Ok(grid)
    }

    pub fn integrator(&self) -> ConfigResult<IntegratorConfig> {
        let cfg = self.config.integrator.unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Hands out independent, reproducible random streams.
pub struct Seeder {
    seed: u64,
    next: u64,
}

impl Seeder {
    pub fn new(seed: u64) -> Self {
        Self { seed, next: 0 }
    }

    pub fn rng(&mut self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.next);
        self.next += 1;
        rng
    }
}

fn check_len(what: &str, v: &[f64], n: usize) -> ConfigResult<()> {
    if v.len() != n {
        return invalid(format!("{what} has {} components, expected {n}", v.len()));
    }
    Ok(())
}

fn one_based(what: &str, i: usize, n: usize) -> ConfigResult<usize> {
    if i == 0 || i > n {
        return invalid(format!("{what} = {i} is outside 1..={n}"));
    }
    Ok(i - 1)
}

pub fn outer_function(spec: &OuterSpec, n: usize) -> ConfigResult<Arc<dyn PolyFunction>> {
    Ok(match spec {
        OuterSpec::Identity => Arc::new(IdentityFn),
        OuterSpec::Power { exponent } => Arc::new(PowerFn(*exponent)),
        OuterSpec::Exp => Arc::new(ExpFn::default()),
        OuterSpec::Polynomial { coeffs } => {
            for c in coeffs {
                check_len("polynomial coefficient", c, n)?;
            }
            Arc::new(PolynomialFn(coeffs.clone()))
        }
        OuterSpec::Reciprocal => Arc::new(ReciprocalFn),
    })
}

fn as_outer(spec: &FieldSpec) -> Option<OuterSpec> {
    Some(match spec {
        FieldSpec::Power { exponent } => OuterSpec::Power { exponent: *exponent },
        FieldSpec::Exp => OuterSpec::Exp,
        FieldSpec::Polynomial { coeffs } => OuterSpec::Polynomial { coeffs: coeffs.clone() },
        FieldSpec::Reciprocal => OuterSpec::Reciprocal,
        _ => return None,
    })
}

/// A field of the catalog; analytic functions of `X` come with their pair.
pub fn build_field(spec: &FieldSpec, s: &Arc<StructureConstants>, seeder: &mut Seeder) -> ConfigResult<VectorField> {
    Ok(build_pair_parts(spec, s, seeder)?.0)
}

fn build_pair_parts(
    spec: &FieldSpec,
    s: &Arc<StructureConstants>,
    seeder: &mut Seeder,
) -> ConfigResult<(VectorField, Option<GAPair>)> {
    let n = s.n();
    if let Some(outer) = as_outer(spec) {
        let inner = GAPair::analytic(identity_field(n), s.clone())?;
        let pair = compose_pair(outer_function(&outer, n)?, &inner)?;
        return Ok((pair.f.clone(), Some(pair)));
    }
    let field = match spec {
        FieldSpec::Constant { value } => {
            check_len("constant value", value, n)?;
            polyga::fields::constant_field(value.clone())
        }
        FieldSpec::Linear { matrix, offset } => {
            if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                return invalid(format!("linear matrix must be {n}×{n}"));
            }
            let a = DMatrix::from_fn(n, n, |i, k| matrix[i][k]);
            let b = offset.clone().unwrap_or_else(|| vec![0.0; n]);
            check_len("linear offset", &b, n)?;
            linear_field(a, b)
        }
        FieldSpec::Identity => identity_field(n),
        FieldSpec::CoordinateMonomial { component, variable, exponent, coeff } => coordinate_monomial(
            n,
            one_based("component", *component, n)?,
            one_based("variable", *variable, n)?,
            *exponent,
            coeff.unwrap_or(1.0),
        ),
        FieldSpec::Random => RandomField::sample(n, &mut seeder.rng()).field(),
        FieldSpec::H4Family(family) => {
            if n != 4 || s.unit_index().is_some() {
                return invalid("h4-family fields live in the h4-psi algebra");
            }
            family.validate()?;
            let pair = family_pair(family)?;
            return Ok((family_field(family, family.convention), Some(pair)));
        }
        FieldSpec::Power { .. } | FieldSpec::Exp | FieldSpec::Polynomial { .. } | FieldSpec::Reciprocal => {
            unreachable!("handled as analytic functions above")
        }
    };
    Ok((field, None))
}

pub fn build_pair(spec: &PairSpec, s: &Arc<StructureConstants>, seeder: &mut Seeder) -> ConfigResult<GAPair> {
    let (f, natural) = build_pair_parts(&spec.f, s, seeder)?;
    Ok(match &spec.gamma {
        GammaSpec::Auto => match natural {
            Some(p) => p,
            None => GAPair::analytic(f, s.clone())?,
        },
        GammaSpec::Zero => GAPair::analytic(f, s.clone())?,
        GammaSpec::Prescribed(d) => {
            let fp = build_field(d, s, seeder)?;
            gamma_from_prescribed(&f, &fp, s.clone())?
        }
    })
}

pub fn build_path(spec: &PathSpec, n: usize) -> ConfigResult<Path> {
    Ok(match spec {
        PathSpec::Straight { from, to } => {
            check_len("path start", from, n)?;
            Path::straight(from.clone(), to.clone())?
        }
        PathSpec::Axis { from, to, order } => {
            check_len("path start", from, n)?;
            let order = order.iter().map(|&k| one_based("axis", k, n)).collect::<ConfigResult<Vec<_>>>()?;
            Path::axis_polyline(from.clone(), to, &order)?
        }
        PathSpec::Polyline { points } => {
            if let Some(p) = points.first() {
                check_len("path point", p, n)?;
            }
            Path::polyline(points.clone())?
        }
        PathSpec::Rectangle { corner, axes, sides } => {
            check_len("rectangle corner", corner, n)?;
            Path::rectangle_loop(
                corner.clone(),
                one_based("axis", axes[0], n)?,
                one_based("axis", axes[1], n)?,
                sides[0],
                sides[1],
            )?
        }
    })
}

pub fn build_metric(spec: &MetricSpec) -> ConfigResult<FinslerConfig> {
    let mut m = match &spec.model {
        MetricModel::Constant { kappa, lambda } => FinslerConfig::constant(*kappa, *lambda),
        MetricModel::Gaussian { kappa0, lambda0 } => FinslerConfig::gaussian(*kappa0, *lambda0),
        MetricModel::Family(f) => {
            f.validate()?;
            f.metric()
        }
    };
    if let Some(s0) = spec.sigma0 {
        m = m.with_sigma0(s0);
    }
    m.validate()?;
    Ok(m)
}
