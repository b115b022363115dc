//! Smooth test functions on the flag manifold F(n, p+1).
//!
//! Measures are determined by their integrals against smooth functions, so
//! Borel test sets are replaced throughout by an expression tree over three
//! generators: constants, ⟨v,u⟩^d, and tr(Π_E·A)^e. A tree with no
//! `proj_trace` node factors through the projection (v,E) ↦ v and therefore
//! doubles as a test function on the sphere.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TestFunction {
    Const {
        c: f64,
    },
    /// ⟨v, u⟩^d for a unit vector u.
    DirPoly {
        u: Vec<f64>,
        d: u32,
    },
    /// tr(Π_E · A)^e for a symmetric matrix A.
    ProjTrace {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        e: u32,
    },
    Product {
        factors: Vec<TestFunction>,
    },
    Sum {
        terms: Vec<TestFunction>,
    },
}

impl TestFunction {
    pub fn constant(c: f64) -> Self {
        TestFunction::Const { c }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn dir_poly(u: &DVector<f64>, d: u32) -> Self {
        TestFunction::DirPoly {
            u: u.iter().copied().collect(),
            d,
        }
    }

    pub fn proj_trace(a: &DMatrix<f64>, e: u32) -> Self {
        TestFunction::ProjTrace {
            a: (0..a.nrows())
                .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
                .collect(),
            e,
        }
    }

    pub fn product(factors: Vec<TestFunction>) -> Self {
        TestFunction::Product { factors }
    }

    pub fn sum(terms: Vec<TestFunction>) -> Self {
        TestFunction::Sum { terms }
    }

    /// f², which is nonnegative by construction.
    pub fn squared(&self) -> Self {
        TestFunction::Product {
            factors: vec![self.clone(), self.clone()],
        }
    }

    pub fn has_proj_trace(&self) -> bool {
        match self {
            TestFunction::Const { .. } | TestFunction::DirPoly { .. } => false,
            TestFunction::ProjTrace { .. } => true,
            TestFunction::Product { factors } => factors.iter().any(|f| f.has_proj_trace()),
            TestFunction::Sum { terms } => terms.iter().any(|f| f.has_proj_trace()),
        }
    }

    /// f ∘ g for an orthogonal g, i.e. (v,E) ↦ f(g·v, g·E): pulls u back to
    /// gᵀu and A back to gᵀ·A·g, staying inside the same family.
    pub fn rotate(&self, g: &DMatrix<f64>) -> Self {
        match self {
            TestFunction::Const { c } => TestFunction::Const { c: *c },
            TestFunction::DirPoly { u, d } => {
                let gu = g.transpose() * DVector::from_column_slice(u);
                TestFunction::dir_poly(&gu, *d)
            }
            TestFunction::ProjTrace { a, e } => {
                let n = a.len();
                let am = DMatrix::from_fn(n, n, |i, j| a[i][j]);
                let ga = g.transpose() * am * g;
                TestFunction::proj_trace(&ga, *e)
            }
            TestFunction::Product { factors } => TestFunction::Product {
                factors: factors.iter().map(|f| f.rotate(g)).collect(),
            },
            TestFunction::Sum { terms } => TestFunction::Sum {
                terms: terms.iter().map(|f| f.rotate(g)).collect(),
            },
        }
    }

    /// Validates dimensions, unit directions, and symmetry, and converts the
    /// tree into the evaluator used by the engines.
    pub fn compile(&self, n: usize) -> Result<CompiledFn> {
        match self {
            TestFunction::Const { c } => {
                if !c.is_finite() {
                    return Err(Error::invalid("non-finite constant"));
                }
                Ok(CompiledFn::Const(*c))
            }
            TestFunction::DirPoly { u, d } => {
                if u.len() != n {
                    return Err(Error::invalid(format!(
                        "dir_poly direction has dimension {}, body has {n}",
                        u.len()
                    )));
                }
                let v = DVector::from_column_slice(u);
                if (v.norm() - 1.0).abs() > 1e-8 {
                    return Err(Error::invalid("dir_poly direction must be a unit vector"));
                }
                Ok(CompiledFn::Dir(v, *d))
            }
            TestFunction::ProjTrace { a, e } => {
                if a.len() != n || a.iter().any(|r| r.len() != n) {
                    return Err(Error::invalid("proj_trace matrix does not match the dimension"));
                }
                let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
                let sym_err = (&m - m.transpose()).abs().max();
                if sym_err > 1e-9 * m.abs().max().max(1.0) {
                    return Err(Error::invalid("proj_trace matrix must be symmetric"));
                }
                Ok(CompiledFn::Proj(m, *e))
            }
            TestFunction::Product { factors } => Ok(CompiledFn::Product(
                factors.iter().map(|f| f.compile(n)).collect::<Result<_>>()?,
            )),
            TestFunction::Sum { terms } => Ok(CompiledFn::Sum(
                terms.iter().map(|f| f.compile(n)).collect::<Result<_>>()?,
            )),
        }
    }

    /// One-shot evaluation at a flag (v, E). Engines compile once instead.
    pub fn eval(&self, v: &DVector<f64>, e_frame: &DMatrix<f64>) -> Result<f64> {
        Ok(self.compile(v.len())?.eval(v, Some(e_frame)))
    }

    pub fn from_json(s: &str) -> Result<TestFunction> {
        serde_json::from_str(s)
            .map_err(|e| Error::invalid(format!("malformed test-function JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// Validated evaluator form of a [`TestFunction`].
#[derive(Clone, Debug)]
pub enum CompiledFn {
    Const(f64),
    Dir(DVector<f64>, u32),
    Proj(DMatrix<f64>, u32),
    Product(Vec<CompiledFn>),
    Sum(Vec<CompiledFn>),
}

impl CompiledFn {
    /// Evaluates at a flag; `e_frame` may be omitted for sphere functions
    /// (trees without `proj_trace` nodes).
    pub fn eval(&self, v: &DVector<f64>, e_frame: Option<&DMatrix<f64>>) -> f64 {
        match self {
            CompiledFn::Const(c) => *c,
            CompiledFn::Dir(u, d) => v.dot(u).powi(*d as i32),
            CompiledFn::Proj(a, e) => {
                let frame = e_frame.expect("proj_trace needs the plane E");
                let mut tr = 0.0;
                for c in 0..frame.ncols() {
                    let col = frame.column(c);
                    tr += col.dot(&(a * col));
                }
                tr.powi(*e as i32)
            }
            CompiledFn::Product(fs) => fs.iter().map(|f| f.eval(v, e_frame)).product(),
            CompiledFn::Sum(fs) => fs.iter().map(|f| f.eval(v, e_frame)).sum(),
        }
    }
}
