use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serializable description of a transform, as it appears in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FunctionSpec {
    Identity,
    Inverse,
    Power { p: f64 },
    Threshold { sigma0: f64 },
    Table { path: String },
}

/// Piecewise-linear `f` and `f'` read from a `x,f,fprime` table.
///
/// Between knots both columns are interpolated linearly. Outside the table
/// the end values are held constant, except that `f(0) = 0` always.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub fprime: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct TableRow {
    x: f64,
    f: f64,
    fprime: f64,
}

impl Table {
    pub fn new(x: Vec<f64>, f: Vec<f64>, fprime: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != f.len() || x.len() != fprime.len() {
            return Err(Error::Parse("function table needs at least two rows of x,f,fprime".into()));
        }
        if x.iter().chain(&f).chain(&fprime).any(|v| !v.is_finite()) {
            return Err(Error::Parse("function table has non-finite values".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) || x[0] < 0.0 {
            return Err(Error::Parse("function table x must be non-negative and strictly increasing".into()));
        }
        Ok(Self { x, f, fprime })
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let (mut x, mut f, mut fp) = (Vec::new(), Vec::new(), Vec::new());
        for row in rdr.deserialize() {
            let r: TableRow = row?;
            x.push(r.x);
            f.push(r.f);
            fp.push(r.fprime);
        }
        Self::new(x, f, fp)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    fn interp(&self, ys: &[f64], t: f64) -> f64 {
        let (lo, hi) = self.span();
        if t <= lo {
            return ys[0];
        }
        if t >= hi {
            return *ys.last().unwrap();
        }
        let k = self.x.partition_point(|&v| v <= t);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let w = (t - x0) / (x1 - x0);
        ys[k - 1] * (1.0 - w) + ys[k] * w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionKind {
    Identity,
    Inverse,
    /// `x^p`, `p > 0`.
    Power(f64),
    /// `x` for `x >= sigma0`, else 0.
    Threshold(f64),
    Table(Arc<Table>),
    /// `h(s) = f(sqrt s) / sqrt s`, `h(0) = 0`.
    Induced(Arc<SpectralFunction>),
}

/// A transform `f: [0, inf) -> R` with `f(0) = 0` and its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    kind: FunctionKind,
}

impl SpectralFunction {
    pub fn identity() -> Self {
        Self { kind: FunctionKind::Identity }
    }

    pub fn inverse() -> Self {
        Self { kind: FunctionKind::Inverse }
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter(format!("power exponent must be positive, got {p}")));
        }
        Ok(Self { kind: FunctionKind::Power(p) })
    }

    pub fn threshold(sigma0: f64) -> Result<Self> {
        if !(sigma0.is_finite() && sigma0 >= 0.0) {
            return Err(Error::InvalidParameter(format!("threshold must be non-negative, got {sigma0}")));
        }
        Ok(Self { kind: FunctionKind::Threshold(sigma0) })
    }

    pub fn table(t: Table) -> Self {
        Self { kind: FunctionKind::Table(Arc::new(t)) }
    }

    pub fn from_spec(spec: &FunctionSpec) -> Result<Self> {
        match spec {
            FunctionSpec::Identity => Ok(Self::identity()),
            FunctionSpec::Inverse => Ok(Self::inverse()),
            FunctionSpec::Power { p } => Self::power(*p),
            FunctionSpec::Threshold { sigma0 } => Self::threshold(*sigma0),
            FunctionSpec::Table { path } => Ok(Self::table(Table::from_csv(Path::new(path))?)),
        }
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            FunctionKind::Identity => "identity".into(),
            FunctionKind::Inverse => "inverse".into(),
            FunctionKind::Power(p) => format!("power({p})"),
            FunctionKind::Threshold(s) => format!("threshold({s})"),
            FunctionKind::Table(_) => "table".into(),
            FunctionKind::Induced(f) => format!("induced({})", f.name()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            FunctionKind::Identity => x,
            FunctionKind::Inverse => 1.0 / x,
            FunctionKind::Power(p) => x.powf(*p),
            FunctionKind::Threshold(s) => {
                if x >= *s {
                    x
                } else {
                    0.0
                }
            }
            FunctionKind::Table(t) => t.interp(&t.f, x),
            FunctionKind::Induced(f) => {
                let r = x.sqrt();
                f.eval(r) / r
            }
        }
    }

    /// Derivative for `x > 0`. At a threshold jump the right derivative is
    /// returned.
    pub fn deriv(&self, x: f64) -> f64 {
        match &self.kind {
            FunctionKind::Identity => 1.0,
            FunctionKind::Inverse => -1.0 / (x * x),
            FunctionKind::Power(p) => p * x.powf(p - 1.0),
            FunctionKind::Threshold(s) => {
                if x >= *s {
                    1.0
                } else {
                    0.0
                }
            }
            FunctionKind::Table(t) => t.interp(&t.fprime, x),
            FunctionKind::Induced(f) => {
                let r = x.sqrt();
                (r * f.deriv(r) - f.eval(r)) / (2.0 * x * r)
            }
        }
    }

    /// The induced function `h(s) = f(sqrt s) / sqrt s`.
    pub fn induced(&self) -> Self {
        Self { kind: FunctionKind::Induced(Arc::new(self.clone())) }
    }
}

/// Convenience alias for [`SpectralFunction::induced`].
pub fn h_of(f: &SpectralFunction) -> SpectralFunction {
    f.induced()
}
