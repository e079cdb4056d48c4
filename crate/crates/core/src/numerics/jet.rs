//! Second-order forward-mode jets.
//!
//! A [`Jet2`] carries a value together with its exact gradient and Hessian
//! with respect to a fixed set of chart parameters.  Propagating jets through
//! a chart map yields first and second derivatives of the immersion without
//! any finite differencing.  The supported elementary operations form a
//! closed set; anything outside it is rejected at compile time simply by not
//! existing.

use crate::error::{Error, Result};

/// Value, gradient and (symmetric) Hessian with respect to `dim` parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    dim: usize,
    value: f64,
    grad: Vec<f64>,
    // Row-major dim x dim, kept exactly symmetric by construction.
    hess: Vec<f64>,
}

impl Jet2 {
    /// Constant: value `c`, vanishing derivatives.
    pub fn constant(c: f64, dim: usize) -> Self {
        assert!(dim >= 1, "jets need at least one parameter");
        Jet2 {
            dim,
            value: c,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    /// Seed for the `index`-th parameter: gradient is the matching unit
    /// vector, Hessian vanishes.
    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        assert!(index < dim, "variable index out of range");
        let mut jet = Jet2::constant(value, dim);
        jet.value = value;
        jet.grad[index] = 1.0;
        jet
    }

    /// Assembles a jet from externally computed derivative data (used when a
    /// coordinate function is known through an ODE solution rather than a
    /// formula).  The Hessian is symmetrized on write.
    pub fn from_parts(value: f64, grad: Vec<f64>, hess: Vec<f64>) -> Result<Self> {
        let dim = grad.len();
        if dim == 0 || hess.len() != dim * dim {
            return Err(Error::Domain {
                op: "from_parts",
                detail: format!("gradient length {} and Hessian length {} mismatch", dim, hess.len()),
            });
        }
        let mut jet = Jet2 { dim, value, grad, hess };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let s = 0.5 * (jet.hess[i * dim + j] + jet.hess[j * dim + i]);
                jet.hess[i * dim + j] = s;
                jet.hess[j * dim + i] = s;
            }
        }
        if !jet.is_finite() {
            return Err(Error::Domain {
                op: "from_parts",
                detail: "non-finite entry".to_string(),
            });
        }
        Ok(jet)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_at(&self, i: usize) -> f64 {
        self.grad[i]
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim + j]
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    fn same_dim(&self, other: &Jet2) -> usize {
        assert_eq!(self.dim, other.dim, "jet parameter counts differ");
        self.dim
    }

    /// f(a) with f' and f'' supplied: value f, grad f'·a_i,
    /// hess f''·a_i·a_j + f'·a_ij.
    fn chain_unary(&self, f: f64, fp: f64, fpp: f64) -> Jet2 {
        let n = self.dim;
        let mut out = Jet2::constant(f, n);
        for i in 0..n {
            out.grad[i] = fp * self.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let v = fpp * self.grad[i] * self.grad[j] + fp * self.hess[i * n + j];
                out.hess[i * n + j] = v;
                out.hess[j * n + i] = v;
            }
        }
        out
    }

    pub fn add(&self, rhs: &Jet2) -> Jet2 {
        let n = self.same_dim(rhs);
        let mut out = self.clone();
        out.value += rhs.value;
        for i in 0..n {
            out.grad[i] += rhs.grad[i];
        }
        for k in 0..n * n {
            out.hess[k] += rhs.hess[k];
        }
        out
    }

    pub fn sub(&self, rhs: &Jet2) -> Jet2 {
        let n = self.same_dim(rhs);
        let mut out = self.clone();
        out.value -= rhs.value;
        for i in 0..n {
            out.grad[i] -= rhs.grad[i];
        }
        for k in 0..n * n {
            out.hess[k] -= rhs.hess[k];
        }
        out
    }

    /// Product rule through second order:
    /// (ab)'' = a''b + a'b' + b'a' + ab''.
    pub fn mul(&self, rhs: &Jet2) -> Jet2 {
        let n = self.same_dim(rhs);
        let mut out = Jet2::constant(self.value * rhs.value, n);
        for i in 0..n {
            out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let v = self.hess[i * n + j] * rhs.value
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i]
                    + self.value * rhs.hess[i * n + j];
                out.hess[i * n + j] = v;
                out.hess[j * n + i] = v;
            }
        }
        out
    }

    /// Quotient: writes a = c·b and solves for the derivatives of c, which
    /// avoids a separate reciprocal pass.
    pub fn div(&self, rhs: &Jet2) -> Result<Jet2> {
        let n = self.same_dim(rhs);
        if rhs.value.abs() < 1e-300 {
            return Err(Error::Domain {
                op: "div",
                detail: format!("denominator {:e} within 1e-300 of zero", rhs.value),
            });
        }
        let c = self.value / rhs.value;
        let mut out = Jet2::constant(c, n);
        for i in 0..n {
            out.grad[i] = (self.grad[i] - c * rhs.grad[i]) / rhs.value;
        }
        for i in 0..n {
            for j in i..n {
                let v = (self.hess[i * n + j]
                    - out.grad[i] * rhs.grad[j]
                    - out.grad[j] * rhs.grad[i]
                    - c * rhs.hess[i * n + j])
                    / rhs.value;
                out.hess[i * n + j] = v;
                out.hess[j * n + i] = v;
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> Jet2 {
        self.scale(-1.0)
    }

    pub fn scale(&self, k: f64) -> Jet2 {
        let mut out = self.clone();
        out.value *= k;
        for g in &mut out.grad {
            *g *= k;
        }
        for h in &mut out.hess {
            *h *= k;
        }
        out
    }

    pub fn add_scalar(&self, k: f64) -> Jet2 {
        let mut out = self.clone();
        out.value += k;
        out
    }

    pub fn sqrt(&self) -> Result<Jet2> {
        if self.value <= 0.0 {
            return Err(Error::Domain {
                op: "sqrt",
                detail: format!("argument {} is not positive", self.value),
            });
        }
        let r = self.value.sqrt();
        Ok(self.chain_unary(r, 0.5 / r, -0.25 / (self.value * r)))
    }

    pub fn ln(&self) -> Result<Jet2> {
        if self.value <= 0.0 {
            return Err(Error::Domain {
                op: "log",
                detail: format!("argument {} is not positive", self.value),
            });
        }
        Ok(self.chain_unary(
            self.value.ln(),
            1.0 / self.value,
            -1.0 / (self.value * self.value),
        ))
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.chain_unary(e, e, e)
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain_unary(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain_unary(c, -s, -c)
    }

    /// Integer power; `v^0` is the constant 1 even at v = 0.
    pub fn powi(&self, k: i32) -> Result<Jet2> {
        match k {
            0 => Ok(Jet2::constant(1.0, self.dim)),
            1 => Ok(self.clone()),
            _ => {
                if self.value == 0.0 && k < 2 {
                    return Err(Error::Domain {
                        op: "pow",
                        detail: format!("zero base with exponent {k}"),
                    });
                }
                let f = self.value.powi(k);
                let fp = f64::from(k) * self.value.powi(k - 1);
                let fpp = f64::from(k) * f64::from(k - 1) * self.value.powi(k - 2);
                Ok(self.chain_unary(f, fp, fpp))
            }
        }
    }

    /// Real power; non-integer exponents require a positive base.
    pub fn powf(&self, p: f64) -> Result<Jet2> {
        let is_int = p.fract() == 0.0 && p.abs() < 2_147_483_648.0;
        if is_int {
            return self.powi(p as i32);
        }
        if self.value <= 0.0 {
            return Err(Error::Domain {
                op: "pow",
                detail: format!("base {} with non-integer exponent {}", self.value, p),
            });
        }
        let f = self.value.powf(p);
        let fp = p * self.value.powf(p - 1.0);
        let fpp = p * (p - 1.0) * self.value.powf(p - 2.0);
        Ok(self.chain_unary(f, fp, fpp))
    }

    /// Two-argument arctangent of `self` (the ordinate) and `x` (the
    /// abscissa), smooth away from the origin.
    pub fn atan2(&self, x: &Jet2) -> Result<Jet2> {
        let n = self.same_dim(x);
        let (yv, xv) = (self.value, x.value);
        let d = xv * xv + yv * yv;
        if d < 1e-300 {
            return Err(Error::Domain {
                op: "atan2",
                detail: "both arguments vanish".to_string(),
            });
        }
        let mut out = Jet2::constant(yv.atan2(xv), n);
        for i in 0..n {
            out.grad[i] = (xv * self.grad[i] - yv * x.grad[i]) / d;
        }
        for i in 0..n {
            for j in 0..n {
                let num_j = x.grad[j] * self.grad[i] + xv * self.hess[i * n + j]
                    - self.grad[j] * x.grad[i]
                    - yv * x.hess[i * n + j];
                let d_j = 2.0 * (xv * x.grad[j] + yv * self.grad[j]);
                out.hess[i * n + j] =
                    num_j / d - (xv * self.grad[i] - yv * x.grad[i]) * d_j / (d * d);
            }
        }
        // The two loop orders agree analytically; enforce exact symmetry.
        for i in 0..n {
            for j in (i + 1)..n {
                let s = 0.5 * (out.hess[i * n + j] + out.hess[j * n + i]);
                out.hess[i * n + j] = s;
                out.hess[j * n + i] = s;
            }
        }
        Ok(out)
    }
}

/// Tags for the closed elementary-operation set, mainly useful for driving
/// the whole set through one test harness.
#[derive(Clone, Debug, PartialEq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
    Atan2,
    Pow { exponent: f64 },
    Const { value: f64, dim: usize },
    Var { index: usize, value: f64, dim: usize },
}

/// Applies one elementary operation to already-built jets.
pub fn jet_elementary(op: &JetOp, args: &[Jet2]) -> Result<Jet2> {
    fn unary(args: &[Jet2]) -> &Jet2 {
        assert_eq!(args.len(), 1, "unary op expects one argument");
        &args[0]
    }
    fn binary(args: &[Jet2]) -> (&Jet2, &Jet2) {
        assert_eq!(args.len(), 2, "binary op expects two arguments");
        (&args[0], &args[1])
    }
    match op {
        JetOp::Add => {
            let (a, b) = binary(args);
            Ok(a.add(b))
        }
        JetOp::Sub => {
            let (a, b) = binary(args);
            Ok(a.sub(b))
        }
        JetOp::Mul => {
            let (a, b) = binary(args);
            Ok(a.mul(b))
        }
        JetOp::Div => {
            let (a, b) = binary(args);
            a.div(b)
        }
        JetOp::Neg => Ok(unary(args).neg()),
        JetOp::Sqrt => unary(args).sqrt(),
        JetOp::Sin => Ok(unary(args).sin()),
        JetOp::Cos => Ok(unary(args).cos()),
        JetOp::Exp => Ok(unary(args).exp()),
        JetOp::Log => unary(args).ln(),
        JetOp::Atan2 => {
            let (y, x) = binary(args);
            y.atan2(x)
        }
        JetOp::Pow { exponent } => unary(args).powf(*exponent),
        JetOp::Const { value, dim } => Ok(Jet2::constant(*value, *dim)),
        JetOp::Var { index, value, dim } => Ok(Jet2::variable(*value, *index, *dim)),
    }
}
