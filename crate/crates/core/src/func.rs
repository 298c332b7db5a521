//! Scalar functions applied spectrally, `f(A) = Q f(Λ) Qᵀ`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone)]
pub enum MatrixFunction {
    Identity,
    Log,
    Exp,
    /// `λ^k`.
    Power(u32),
    /// Coefficients in ascending degree: `c0 + c1 λ + c2 λ² + ...`.
    Polynomial(Vec<f64>),
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl MatrixFunction {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        MatrixFunction::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// Evaluates at a (Ritz or eigen) value; `Log` rejects nonpositive input.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let y = match self {
            MatrixFunction::Identity => x,
            MatrixFunction::Log => {
                if x <= 0.0 || x.is_nan() {
                    return Err(Error::UndefinedAtRitzValue { value: x });
                }
                x.ln()
            }
            MatrixFunction::Exp => x.exp(),
            MatrixFunction::Power(k) => x.powi(*k as i32),
            MatrixFunction::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
            MatrixFunction::Custom { f, .. } => f(x),
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::UndefinedAtRitzValue { value: x })
        }
    }

    /// Polynomial degree when `f` is a polynomial, `None` otherwise.
    pub fn polynomial_degree(&self) -> Option<usize> {
        match self {
            MatrixFunction::Identity => Some(1),
            MatrixFunction::Power(k) => Some(*k as usize),
            MatrixFunction::Polynomial(c) => Some(c.len().saturating_sub(1)),
            _ => None,
        }
    }

    /// Ascending coefficients when `f` is a polynomial.
    pub fn coefficients(&self) -> Option<Vec<f64>> {
        match self {
            MatrixFunction::Identity => Some(vec![0.0, 1.0]),
            MatrixFunction::Power(k) => {
                let mut c = vec![0.0; *k as usize + 1];
                c[*k as usize] = 1.0;
                Some(c)
            }
            MatrixFunction::Polynomial(c) => Some(c.clone()),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            MatrixFunction::Identity => "identity".into(),
            MatrixFunction::Log => "log".into(),
            MatrixFunction::Exp => "exp".into(),
            MatrixFunction::Power(k) => format!("power{k}"),
            MatrixFunction::Polynomial(c) => format!("poly{}", c.len().saturating_sub(1)),
            MatrixFunction::Custom { name, .. } => name.clone(),
        }
    }
}

impl fmt::Debug for MatrixFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatrixFunction({})", self.name())
    }
}

impl std::str::FromStr for MatrixFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "id" => Ok(MatrixFunction::Identity),
            "log" => Ok(MatrixFunction::Log),
            "exp" => Ok(MatrixFunction::Exp),
            "square" => Ok(MatrixFunction::Power(2)),
            "cube" => Ok(MatrixFunction::Power(3)),
            other => {
                if let Some(k) = other.strip_prefix("power") {
                    let k: u32 = k.parse().map_err(|_| Error::invalid(format!("bad power '{other}'")))?;
                    return Ok(MatrixFunction::Power(k));
                }
                Err(Error::invalid(format!("unknown function '{other}'")))
            }
        }
    }
}
