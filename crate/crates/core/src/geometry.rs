//! Pointwise extrinsic geometry of a parametric immersion.
//!
//! An [`Immersion`] is a chart map from a box in parameter space into
//! Euclidean space, evaluated through second-order jets.  From one jet
//! evaluation [`Immersion::evaluate_frame`] derives the tangent vectors, the
//! induced metric, an orthonormal tangent frame, the second fundamental
//! form, the mean curvature vector, and the tangential/normal split of the
//! position vector.  The interesting scalar is the residual
//! `<H, x> + 1`: it vanishes exactly where the tangential position field is
//! divergence free.
//!
//! Degenerate charts (rank loss, non-positive metric) are hard errors that
//! name the offending point; no NaN ever leaves this module.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::jet::Jet2;
use crate::numerics::linalg::{dot, gram_schmidt, norm, SquareMat};

/// One parameter axis of a chart domain.  `periodic` asserts that the map
/// repeats with period `hi - lo`; the flag is trusted, never detected.
#[derive(Clone, Copy, Debug)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, periodic: bool) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter {
                name: "axis",
                detail: format!("invalid interval [{lo}, {hi}]"),
            });
        }
        Ok(Axis { lo, hi, periodic })
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }
}

type ChartMap = dyn Fn(&[Jet2]) -> Result<Vec<Jet2>> + Send + Sync;

/// A parametric chart u -> x(u) from an n-box into Euclidean m-space,
/// with 1 <= n < m <= 8.  The map receives one variable jet per parameter
/// and must return exactly `ambient_dim` coordinate jets.
#[derive(Clone)]
pub struct Immersion {
    intrinsic_dim: usize,
    ambient_dim: usize,
    axes: Vec<Axis>,
    map: Arc<ChartMap>,
}

impl Immersion {
    pub fn new<F>(intrinsic_dim: usize, ambient_dim: usize, axes: Vec<Axis>, map: F) -> Result<Self>
    where
        F: Fn(&[Jet2]) -> Result<Vec<Jet2>> + Send + Sync + 'static,
    {
        if intrinsic_dim == 0 || intrinsic_dim >= ambient_dim || ambient_dim > 8 {
            return Err(Error::InvalidParameter {
                name: "dimensions",
                detail: format!(
                    "need 1 <= n < m <= 8, got n = {intrinsic_dim}, m = {ambient_dim}"
                ),
            });
        }
        if axes.len() != intrinsic_dim {
            return Err(Error::InvalidParameter {
                name: "axes",
                detail: format!("expected {} axes, got {}", intrinsic_dim, axes.len()),
            });
        }
        Ok(Immersion {
            intrinsic_dim,
            ambient_dim,
            axes,
            map: Arc::new(map),
        })
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Wraps periodic coordinates into their fundamental interval and
    /// rejects points outside non-periodic axes.
    fn canonicalize(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.intrinsic_dim {
            return Err(Error::InvalidParameter {
                name: "u",
                detail: format!("expected {} coordinates, got {}", self.intrinsic_dim, u.len()),
            });
        }
        let mut out = u.to_vec();
        for (axis_index, axis) in self.axes.iter().enumerate() {
            let v = out[axis_index];
            if axis.periodic {
                out[axis_index] = axis.lo + (v - axis.lo).rem_euclid(axis.span());
            } else if v < axis.lo || v > axis.hi {
                return Err(Error::OutsideDomain { u: u.to_vec(), axis: axis_index });
            }
        }
        Ok(out)
    }

    /// Evaluates the chart, returning one jet per ambient coordinate.
    pub fn eval_jets(&self, u: &[f64]) -> Result<Vec<Jet2>> {
        let n = self.intrinsic_dim;
        let point = self.canonicalize(u)?;
        let seeds: Vec<Jet2> = point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet2::variable(v, i, n))
            .collect();
        let jets = (self.map)(&seeds)?;
        if jets.len() != self.ambient_dim {
            return Err(Error::InvalidParameter {
                name: "map",
                detail: format!(
                    "chart returned {} coordinates, expected {}",
                    jets.len(),
                    self.ambient_dim
                ),
            });
        }
        for jet in &jets {
            if jet.dim() != n || !jet.is_finite() {
                return Err(Error::Domain {
                    op: "chart",
                    detail: format!("non-finite or mis-sized jet at u = {point:?}"),
                });
            }
        }
        Ok(jets)
    }

    /// Full pointwise frame: tangents, metric, orthonormal basis, second
    /// fundamental form, mean curvature, and the split of the position
    /// vector.
    pub fn evaluate_frame(&self, u: &[f64]) -> Result<GeometryFrame> {
        let n = self.intrinsic_dim;
        let m = self.ambient_dim;
        let jets = self.eval_jets(u)?;
        let degenerate = |e: Error| Error::DegenerateChart { u: u.to_vec(), source: Box::new(e) };

        let position: Vec<f64> = jets.iter().map(|j| j.value()).collect();
        let tangents: Vec<Vec<f64>> =
            (0..n).map(|k| jets.iter().map(|j| j.grad_at(k)).collect()).collect();
        let metric = SquareMat::from_fn(n, |i, j| dot(&tangents[i], &tangents[j]));
        let frame = gram_schmidt(&tangents).map_err(degenerate)?;
        let chol = metric.cholesky().map_err(degenerate)?;

        let second_partials: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|i| (0..n).map(|j| jets.iter().map(|jet| jet.hess_at(i, j)).collect()).collect())
            .collect();

        // Coordinates of each frame vector in the tangent basis: solve
        // g c_i = (<e_i, t_k>)_k.
        let coeffs: Vec<Vec<f64>> = frame
            .iter()
            .map(|e| {
                let rhs: Vec<f64> = tangents.iter().map(|t| dot(e, t)).collect();
                chol.solve(&rhs)
            })
            .collect();

        // Second fundamental form h(e_i, e_j): push the coordinate second
        // derivatives through the frame coefficients, then project off the
        // tangent space.
        let mut second_fundamental = vec![vec![vec![0.0; m]; n]; n];
        for i in 0..n {
            for j in i..n {
                let mut amb = vec![0.0; m];
                for k in 0..n {
                    for l in 0..n {
                        let c = coeffs[i][k] * coeffs[j][l];
                        if c != 0.0 {
                            for a in 0..m {
                                amb[a] += c * second_partials[k][l][a];
                            }
                        }
                    }
                }
                for e in &frame {
                    let proj = dot(&amb, e);
                    for a in 0..m {
                        amb[a] -= proj * e[a];
                    }
                }
                second_fundamental[i][j] = amb.clone();
                second_fundamental[j][i] = amb;
            }
        }

        let mut mean_curvature = vec![0.0; m];
        for i in 0..n {
            for a in 0..m {
                mean_curvature[a] += second_fundamental[i][i][a] / n as f64;
            }
        }

        let mut tangential = vec![0.0; m];
        for e in &frame {
            let c = dot(&position, e);
            for a in 0..m {
                tangential[a] += c * e[a];
            }
        }
        let normal: Vec<f64> =
            position.iter().zip(&tangential).map(|(x, t)| x - t).collect();

        let potential = 0.5 * dot(&position, &position);
        let residual = dot(&mean_curvature, &position) + 1.0;

        Ok(GeometryFrame {
            u: u.to_vec(),
            position,
            tangents,
            metric,
            frame,
            second_partials,
            second_fundamental,
            mean_curvature,
            tangential,
            normal,
            potential,
            residual,
        })
    }

    /// Intrinsic gradient of the potential f = |x|^2 / 2, expanded in ambient
    /// coordinates: the chart gradient of f is raised with the inverse metric
    /// and contracted with the tangent vectors.  For any immersion this
    /// equals the tangential part of the position vector.
    pub fn intrinsic_gradient_potential(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.intrinsic_dim;
        let m = self.ambient_dim;
        let jets = self.eval_jets(u)?;
        let mut f = Jet2::constant(0.0, n);
        for jet in &jets {
            f = f.add(&jet.mul(jet));
        }
        let f = f.scale(0.5);

        let tangents: Vec<Vec<f64>> =
            (0..n).map(|k| jets.iter().map(|j| j.grad_at(k)).collect()).collect();
        let metric = SquareMat::from_fn(n, |i, j| dot(&tangents[i], &tangents[j]));
        let chol = metric
            .cholesky()
            .map_err(|e| Error::DegenerateChart { u: u.to_vec(), source: Box::new(e) })?;
        let raised = chol.solve(f.grad());

        let mut out = vec![0.0; m];
        for k in 0..n {
            for a in 0..m {
                out[a] += raised[k] * tangents[k][a];
            }
        }
        Ok(out)
    }

    /// Divergence of the tangential position field computed directly:
    /// the field u -> x^T(u) is differentiated through the chart (via the
    /// jet data for the tangents and the metric) and traced against the
    /// orthonormal frame.  Independent of the closed form
    /// n (1 + <H, x>), which it must reproduce.
    pub fn divergence_direct(&self, u: &[f64]) -> Result<f64> {
        let n = self.intrinsic_dim;
        let m = self.ambient_dim;
        let jets = self.eval_jets(u)?;
        let degenerate = |e: Error| Error::DegenerateChart { u: u.to_vec(), source: Box::new(e) };

        let position: Vec<f64> = jets.iter().map(|j| j.value()).collect();
        let tangents: Vec<Vec<f64>> =
            (0..n).map(|k| jets.iter().map(|j| j.grad_at(k)).collect()).collect();
        let second_partials: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|i| (0..n).map(|j| jets.iter().map(|jet| jet.hess_at(i, j)).collect()).collect())
            .collect();
        let metric = SquareMat::from_fn(n, |i, j| dot(&tangents[i], &tangents[j]));
        let frame = gram_schmidt(&tangents).map_err(degenerate)?;
        let chol = metric.cholesky().map_err(degenerate)?;

        // x^T = V^k t_k with g V = p, p_l = <x, t_l>.
        let p: Vec<f64> = tangents.iter().map(|t| dot(&position, t)).collect();
        let v = chol.solve(&p);

        // d_m of the ingredients, all exact from the jets.
        let mut d_w = vec![vec![0.0; m]; n];
        for mi in 0..n {
            let dg: Vec<Vec<f64>> = (0..n)
                .map(|k| {
                    (0..n)
                        .map(|l| {
                            dot(&second_partials[mi][k], &tangents[l])
                                + dot(&tangents[k], &second_partials[mi][l])
                        })
                        .collect()
                })
                .collect();
            let dp: Vec<f64> = (0..n)
                .map(|l| metric.get(mi, l) + dot(&position, &second_partials[mi][l]))
                .collect();
            // g dV = dp - (d_m g) V
            let rhs: Vec<f64> =
                (0..n).map(|l| dp[l] - (0..n).map(|k| dg[l][k] * v[k]).sum::<f64>()).collect();
            let dv = chol.solve(&rhs);
            for k in 0..n {
                for a in 0..m {
                    d_w[mi][a] += dv[k] * tangents[k][a] + v[k] * second_partials[mi][k][a];
                }
            }
        }

        // Trace of the ambient derivative over the orthonormal frame.
        let mut div = 0.0;
        for e in &frame {
            let rhs: Vec<f64> = tangents.iter().map(|t| dot(e, t)).collect();
            let c = chol.solve(&rhs);
            for a in 0..m {
                let de_w: f64 = (0..n).map(|mi| c[mi] * d_w[mi][a]).sum();
                div += de_w * e[a];
            }
        }
        Ok(div)
    }

    /// Laplacian of the position vector, with the sign convention that makes
    /// it equal minus the dimension times the mean curvature vector.
    ///
    /// The inner quantity sqrt(det g) g^{ij} d_j x is exact from jets; only
    /// the outermost coordinate derivative uses central differences with the
    /// given step, so the error is O(fd_step^2).
    pub fn laplace_position(&self, u: &[f64], fd_step: f64) -> Result<Vec<f64>> {
        if !(1e-6..=1e-2).contains(&fd_step) {
            return Err(Error::InvalidParameter {
                name: "fd_step",
                detail: format!("{fd_step:e} outside [1e-6, 1e-2]"),
            });
        }
        let n = self.intrinsic_dim;
        let m = self.ambient_dim;
        let point = self.canonicalize(u)?;
        for (axis_index, axis) in self.axes.iter().enumerate() {
            if !axis.periodic {
                let v = point[axis_index];
                if v - 2.0 * fd_step < axis.lo || v + 2.0 * fd_step > axis.hi {
                    return Err(Error::NearBoundary { axis: axis_index, width: 2.0 * fd_step });
                }
            }
        }

        // F_i^a(u) = sqrt(det g) (g^{-1} grad x^a)_i, exact at any point.
        let flux = |w: &[f64]| -> Result<Vec<Vec<f64>>> {
            let jets = self.eval_jets(w)?;
            let tangents: Vec<Vec<f64>> =
                (0..n).map(|k| jets.iter().map(|j| j.grad_at(k)).collect()).collect();
            let metric = SquareMat::from_fn(n, |i, j| dot(&tangents[i], &tangents[j]));
            let chol = metric
                .cholesky()
                .map_err(|e| Error::DegenerateChart { u: w.to_vec(), source: Box::new(e) })?;
            let sg = chol.sqrt_det();
            let mut f = vec![vec![0.0; m]; n];
            for a in 0..m {
                let col: Vec<f64> = (0..n).map(|k| tangents[k][a]).collect();
                let raised = chol.solve(&col);
                for i in 0..n {
                    f[i][a] = sg * raised[i];
                }
            }
            Ok(f)
        };

        let jets = self.eval_jets(&point)?;
        let tangents: Vec<Vec<f64>> =
            (0..n).map(|k| jets.iter().map(|j| j.grad_at(k)).collect()).collect();
        let metric = SquareMat::from_fn(n, |i, j| dot(&tangents[i], &tangents[j]));
        let sg0 = metric
            .cholesky()
            .map_err(|e| Error::DegenerateChart { u: point.clone(), source: Box::new(e) })?
            .sqrt_det();

        let mut laplacian = vec![0.0; m];
        for i in 0..n {
            let mut up = point.clone();
            up[i] += fd_step;
            let mut down = point.clone();
            down[i] -= fd_step;
            let f_up = flux(&up)?;
            let f_down = flux(&down)?;
            for a in 0..m {
                laplacian[a] -= (f_up[i][a] - f_down[i][a]) / (2.0 * fd_step * sg0);
            }
        }
        Ok(laplacian)
    }

    /// Pairing of the position vector with its Laplacian, plus the residual
    /// of the identity <x, Lx> = -n <H, x> that must hold for every
    /// immersion.  Where the tangential field is divergence free the pairing
    /// equals the intrinsic dimension.
    pub fn verify_beltrami_pairing(&self, u: &[f64], fd_step: f64) -> Result<BeltramiCheck> {
        let frame = self.evaluate_frame(u)?;
        let laplacian = self.laplace_position(u, fd_step)?;
        let pairing = dot(&frame.position, &laplacian);
        let cross_residual = pairing
            + self.intrinsic_dim as f64 * dot(&frame.mean_curvature, &frame.position);
        Ok(BeltramiCheck { pairing, cross_residual })
    }

    /// Deterministic uniform samples from the domain box, inset from every
    /// boundary by `inset` times the axis span.
    pub fn sample_interior(&self, count: usize, seed: u64, inset: f64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.axes
                    .iter()
                    .map(|axis| {
                        let pad = inset * axis.span();
                        rng.gen_range(axis.lo + pad..=axis.hi - pad)
                    })
                    .collect()
            })
            .collect()
    }

    /// The image of this chart under an orthogonal ambient transformation.
    pub fn rotated(&self, rotation: &[Vec<f64>]) -> Result<Immersion> {
        let m = self.ambient_dim;
        if rotation.len() != m || rotation.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidParameter {
                name: "rotation",
                detail: format!("expected a {m} x {m} matrix"),
            });
        }
        for i in 0..m {
            for j in 0..m {
                let g: f64 = dot(&rotation[i], &rotation[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                if (g - target).abs() > 1e-10 {
                    return Err(Error::InvalidParameter {
                        name: "rotation",
                        detail: format!("rows {i}, {j} are not orthonormal"),
                    });
                }
            }
        }
        let rotation = rotation.to_vec();
        let inner = Arc::clone(&self.map);
        Immersion::new(self.intrinsic_dim, m, self.axes.clone(), move |u| {
            let x = inner(u)?;
            let n = u[0].dim();
            Ok(rotation
                .iter()
                .map(|row| {
                    let mut acc = Jet2::constant(0.0, n);
                    for (c, xj) in row.iter().zip(&x) {
                        if *c != 0.0 {
                            acc = acc.add(&xj.scale(*c));
                        }
                    }
                    acc
                })
                .collect())
        })
    }

    /// The image of this chart translated by an ambient offset.
    pub fn translated(&self, offset: &[f64]) -> Result<Immersion> {
        let m = self.ambient_dim;
        if offset.len() != m {
            return Err(Error::InvalidParameter {
                name: "offset",
                detail: format!("expected {m} components"),
            });
        }
        let offset = offset.to_vec();
        let inner = Arc::clone(&self.map);
        Immersion::new(self.intrinsic_dim, m, self.axes.clone(), move |u| {
            let x = inner(u)?;
            Ok(x.iter().zip(&offset).map(|(xj, o)| xj.add_scalar(*o)).collect())
        })
    }
}

/// Everything the pipeline knows about one point of an immersion.
#[derive(Clone, Debug)]
pub struct GeometryFrame {
    pub u: Vec<f64>,
    /// Position x in ambient coordinates.
    pub position: Vec<f64>,
    /// Coordinate tangent vectors d x / d u^k.
    pub tangents: Vec<Vec<f64>>,
    /// Induced metric g_ij = <t_i, t_j>.
    pub metric: SquareMat,
    /// Orthonormal tangent frame from Gram-Schmidt in index order.
    pub frame: Vec<Vec<f64>>,
    /// Coordinate second derivatives d^2 x / d u^i d u^j.
    pub second_partials: Vec<Vec<Vec<f64>>>,
    /// Second fundamental form h(e_i, e_j), normal valued.
    pub second_fundamental: Vec<Vec<Vec<f64>>>,
    /// Mean curvature vector H = trace(h) / n.
    pub mean_curvature: Vec<f64>,
    /// Tangential part of the position vector.
    pub tangential: Vec<f64>,
    /// Normal part of the position vector.
    pub normal: Vec<f64>,
    /// Potential f = |x|^2 / 2 of the tangential field.
    pub potential: f64,
    /// <H, x> + 1; zero exactly where the tangential field is
    /// divergence free.
    pub residual: f64,
}

impl GeometryFrame {
    /// Tangential and normal parts of the position vector.
    pub fn canonical_split(&self) -> (&[f64], &[f64]) {
        (&self.tangential, &self.normal)
    }

    /// div x^T = n (1 + <H, x>).
    pub fn divergence_closed_form(&self) -> f64 {
        self.u.len() as f64 * self.residual
    }

    /// <H, x> + 1.
    pub fn incompressibility_residual(&self) -> f64 {
        self.residual
    }

    /// Shape operator A_xi in the orthonormal tangent frame:
    /// (A_xi)_ij = <h(e_i, e_j), xi>.  `xi` must be normal to the tangent
    /// space within 1e-8 (scaled by its length).
    pub fn shape_operator(&self, xi: &[f64]) -> Result<SquareMat> {
        let n = self.frame.len();
        let scale = 1.0_f64.max(norm(xi));
        for (index, e) in self.frame.iter().enumerate() {
            let d = dot(xi, e);
            if d.abs() > 1e-8 * scale {
                return Err(Error::NotNormal { index, dot: d });
            }
        }
        Ok(SquareMat::from_fn(n, |i, j| dot(&self.second_fundamental[i][j], xi)))
    }
}

/// Result of [`Immersion::verify_beltrami_pairing`].
#[derive(Clone, Copy, Debug)]
pub struct BeltramiCheck {
    /// <x, Lx>, which equals n where the tangential field is
    /// divergence free.
    pub pairing: f64,
    /// <x, Lx> + n <H, x>; must vanish for every immersion.
    pub cross_residual: f64,
}
