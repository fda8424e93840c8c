//! Transfer functions `G(z) = φ(C)·(zI − φ(A))⁻¹·φ(B)` and grid-based H∞
//! estimates on the unit circle.

use std::f64::consts::PI;

use faer::Mat;
use nalgebra::{DMatrix, DVector};
use std::cell::RefCell;

use super::{LinearModel, Lti};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};

pub const DEFAULT_GRID: usize = 512;
/// Pivot-ratio condition estimate above which the resolvent counts as
/// singular.
const POLE_COND: f64 = 1e13;
const GOLDEN_ITERS: usize = 60;

/// A state-space model prepared for repeated complex evaluation: `A` is
/// reduced once to Hessenberg form `H = QᵀAQ`, so each frequency costs an
/// O(n²) elimination plus one triangular solve.
struct FreqModel {
    h: DMatrix<f64>,
    b: Mat<C64>,
    c: Mat<C64>,
}

impl FreqModel {
    fn new(l: &Lti) -> Self {
        if l.states() == 0 {
            return FreqModel {
                h: l.a.clone(),
                b: linalg::to_faer_c(&l.b),
                c: linalg::to_faer_c(&l.c),
            };
        }
        let (q, h) = l.a.clone().hessenberg().unpack();
        FreqModel {
            h,
            b: linalg::to_faer_c(&(q.transpose() * &l.b)),
            c: linalg::to_faer_c(&(&l.c * q)),
        }
    }

    /// `C̃·(zI − H)⁻¹·B̃`. Gaussian elimination on the Hessenberg matrix
    /// pivots between adjacent rows; the pivot-magnitude ratio serves as
    /// the condition estimate for pole detection.
    fn eval(&self, z: C64) -> Result<Mat<C64>> {
        let n = self.h.nrows();
        if n == 0 {
            return Ok(Mat::zeros(self.c.nrows(), self.b.ncols()));
        }
        let m = self.b.ncols();
        let zero = C64::new(0.0, 0.0);
        let mut u = Mat::from_fn(n, n, |i, j| {
            if i > j + 1 {
                zero
            } else if i == j {
                z - self.h[(i, j)]
            } else {
                C64::new(-self.h[(i, j)], 0.0)
            }
        });
        let mut x = self.b.clone();
        for k in 0..n - 1 {
            if u[(k + 1, k)].norm() > u[(k, k)].norm() {
                for j in k..n {
                    let t = u[(k, j)];
                    u[(k, j)] = u[(k + 1, j)];
                    u[(k + 1, j)] = t;
                }
                for j in 0..m {
                    let t = x[(k, j)];
                    x[(k, j)] = x[(k + 1, j)];
                    x[(k + 1, j)] = t;
                }
            }
            let piv = u[(k, k)];
            let below = u[(k + 1, k)];
            if piv == zero || below == zero {
                continue;
            }
            let l = below / piv;
            for j in k + 1..n {
                let d = l * u[(k, j)];
                u[(k + 1, j)] -= d;
            }
            u[(k + 1, k)] = zero;
            for j in 0..m {
                let d = l * x[(k, j)];
                x[(k + 1, j)] -= d;
            }
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = u[(i, i)].norm();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let cond = if lo == 0.0 { f64::INFINITY } else { hi / lo };
        if !(cond <= POLE_COND) {
            return Err(Error::Pole { re: z.re, im: z.im, condition: cond });
        }
        faer::linalg::triangular_solve::solve_upper_triangular_in_place(u.as_ref(), x.as_mut(), faer::Par::Seq);
        Ok(&self.c * &x)
    }
}

/// σmax evaluations along a frequency sweep, each Lanczos run started from
/// the previous top vector.
#[derive(Default)]
struct Tracker(RefCell<Option<DVector<C64>>>);

impl Tracker {
    fn sigma(&self, g: &Mat<C64>) -> f64 {
        let prev = self.0.borrow_mut().take();
        let (v, vec) = linalg::sigma_max_from(g.as_ref(), prev.as_ref());
        *self.0.borrow_mut() = vec;
        v
    }
}

fn unit(omega: f64) -> C64 {
    C64::new(omega.cos(), omega.sin())
}

/// The unfolded transfer matrix at `z`. Fails with a pole error when
/// `zI − φ(A)` is numerically singular.
pub fn transfer_eval(s: &impl LinearModel, z: C64) -> Result<CMatrix> {
    let g = FreqModel::new(&s.lti()).eval(z)?;
    Ok(linalg::from_faer_c(g.as_ref()))
}

/// Grid estimate of a peak gain.
#[derive(Debug, Clone, PartialEq)]
pub struct HinfEstimate {
    pub value: f64,
    /// Frequency in `[0, π]` where the estimate peaks.
    pub omega: f64,
    /// Grid points moved off a pole.
    pub warnings: Vec<String>,
}

fn grid_omegas(grid: usize) -> Result<Vec<f64>> {
    if grid < 2 {
        return Err(Error::domain(format!("frequency grid needs at least 2 points, got {grid}")));
    }
    Ok((0..grid).map(|k| PI * k as f64 / (grid - 1) as f64).collect())
}

/// Evaluates `f` on the grid, nudging any point that hits a pole by half a
/// step. Returns the (possibly moved) frequencies and values.
fn scan<const K: usize>(
    grid: usize,
    f: &impl Fn(f64) -> Result<[f64; K]>,
    warnings: &mut Vec<String>,
) -> Result<(Vec<f64>, Vec<[f64; K]>)> {
    let mut omegas = grid_omegas(grid)?;
    let half = PI / (grid - 1) as f64 / 2.0;
    let mut values = Vec::with_capacity(grid);
    for w in omegas.iter_mut() {
        let v = match f(*w) {
            Ok(v) => v,
            Err(Error::Pole { .. }) => {
                let moved = if *w + half <= PI { *w + half } else { *w - half };
                let msg = format!("pole at ω = {w:.6}; evaluated at ω = {moved:.6} instead");
                log::warn!("{msg}");
                warnings.push(msg);
                *w = moved;
                f(moved)?
            }
            Err(e) => return Err(e),
        };
        values.push(v);
    }
    Ok((omegas, values))
}

/// Golden-section maximization of `f` on the grid bracket around `best`.
fn refine(f: &impl Fn(f64) -> Result<f64>, omegas: &[f64], best: usize, value: f64) -> (f64, f64) {
    let mut lo = omegas[best.saturating_sub(1)];
    let mut hi = omegas[(best + 1).min(omegas.len() - 1)];
    let mut top = (value, omegas[best]);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (Ok(mut f1), Ok(mut f2)) = (f(x1), f(x2)) else {
        return top;
    };
    for _ in 0..GOLDEN_ITERS {
        if hi - lo <= 1e-9 {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            match f(x1) {
                Ok(v) => f1 = v,
                Err(_) => break,
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            match f(x2) {
                Ok(v) => f2 = v,
                Err(_) => break,
            }
        }
        for (v, x) in [(f1, x1), (f2, x2)] {
            if v > top.0 {
                top = (v, x);
            }
        }
    }
    top
}

fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) })
}

fn peak(omegas: &[f64], values: &[f64], f: &impl Fn(f64) -> Result<f64>) -> (f64, f64) {
    let (best, v) = argmax(values.iter().copied());
    refine(f, omegas, best, v)
}

/// `max_ω σmax(G(e^{iω}))`: uniform grid of `grid` points on `[0, π]` plus
/// golden-section refinement in the bracket around the best grid point.
/// An estimate; narrow resonances between grid points can be missed.
pub fn hinf_norm(s: &impl LinearModel, grid: usize) -> Result<HinfEstimate> {
    let m = FreqModel::new(&s.lti());
    let tr = Tracker::default();
    let f = |w: f64| -> Result<f64> { Ok(tr.sigma(&m.eval(unit(w))?)) };
    let mut warnings = Vec::new();
    let (omegas, values) = scan(grid, &|w| Ok([f(w)?]), &mut warnings)?;
    let vals: Vec<f64> = values.iter().map(|v| v[0]).collect();
    let (value, omega) = peak(&omegas, &vals, &f);
    Ok(HinfEstimate { value, omega, warnings })
}

fn warn_if_unstable(l: &Lti, which: &str) {
    if let Ok(r) = linalg::spectral_radius(&l.a) {
        if r >= 1.0 {
            log::warn!("{which} model has spectral radius {r:.6}; H∞ estimate is not a system norm");
        }
    }
}

/// `‖G_full − G_reduced‖∞ / ‖G_full‖∞`, both estimated as in
/// [`hinf_norm`]. Zero when both transfer functions vanish.
pub fn hinf_relative_error(full: &impl LinearModel, reduced: &impl LinearModel, grid: usize) -> Result<f64> {
    let (lf, lr) = (full.lti(), reduced.lti());
    if lf.inputs() != lr.inputs() || lf.outputs() != lr.outputs() {
        return Err(Error::domain(format!(
            "transfer shapes differ: {}×{} against {}×{}",
            lf.outputs(),
            lf.inputs(),
            lr.outputs(),
            lr.inputs()
        )));
    }
    warn_if_unstable(&lf, "full");
    warn_if_unstable(&lr, "reduced");
    let (mf, mr) = (FreqModel::new(&lf), FreqModel::new(&lr));
    let (tf, td) = (Tracker::default(), Tracker::default());
    let gf = |w: f64| -> Result<f64> { Ok(tf.sigma(&mf.eval(unit(w))?)) };
    let gd = |w: f64| -> Result<f64> {
        let z = unit(w);
        Ok(td.sigma(&(mf.eval(z)? - mr.eval(z)?)))
    };
    let both = |w: f64| -> Result<[f64; 2]> {
        let z = unit(w);
        let a = mf.eval(z)?;
        let b = mr.eval(z)?;
        Ok([tf.sigma(&a), td.sigma(&(&a - &b))])
    };
    let mut warnings = Vec::new();
    let (omegas, values) = scan(grid, &both, &mut warnings)?;
    let nf: Vec<f64> = values.iter().map(|v| v[0]).collect();
    let nd: Vec<f64> = values.iter().map(|v| v[1]).collect();
    let (diff, _) = peak(&omegas, &nd, &gd);
    if diff == 0.0 {
        return Ok(0.0);
    }
    let (norm, _) = peak(&omegas, &nf, &gf);
    Ok(if norm == 0.0 { f64::INFINITY } else { diff / norm })
}

/// `(ω, σmax(G(e^{iω})))` at `points` frequencies uniform on `[0, π]`.
pub fn bode_magnitudes(s: &impl LinearModel, points: usize) -> Result<Vec<(f64, f64)>> {
    let m = FreqModel::new(&s.lti());
    let tr = Tracker::default();
    let omegas: Vec<f64> = match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => grid_omegas(points)?,
    };
    omegas
        .into_iter()
        .map(|w| Ok((w, tr.sigma(&m.eval(unit(w))?))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::einstein::{u_identity, EvenPairedTensor};
    use crate::random::rng;
    use crate::system::{random_system, small_siso_tucker, tucker_to_einstein, unfold_to_lti, Construction, MltiSystem, SystemSpec};
    use crate::tensor::Shape;

    fn passthrough(dims: &[usize]) -> MltiSystem {
        let id = u_identity(&Shape::new(dims.to_vec()).unwrap());
        MltiSystem::new(EvenPairedTensor::zeros(id.pshape().clone()), id.clone(), id).unwrap()
    }

    #[test]
    fn zero_state_tensor_gives_one_over_z() {
        let s = passthrough(&[2, 2]);
        let z = C64::new(0.3, 0.7);
        let g = transfer_eval(&s, z).unwrap();
        let expect = CMatrix::identity(4, 4) * (C64::new(1.0, 0.0) / z);
        assert!((g - expect).norm() < 1e-14);
        let far = transfer_eval(&s, C64::new(1e8, 0.0)).unwrap();
        assert!(far.norm() < 1e-7);
        let bode = bode_magnitudes(&s, 4).unwrap();
        assert_eq!(bode.len(), 4);
        assert!(bode.iter().all(|&(_, m)| (m - 1.0).abs() < 1e-14));
    }

    #[test]
    fn matches_unfolded_scalar_transfer() {
        let s = tucker_to_einstein(&small_siso_tucker()).unwrap();
        let z = unit(0.3);
        let g = transfer_eval(&s, z).unwrap();
        let l = unfold_to_lti(&s);
        // explicit inverse on the 6×6 unfolding as the oracle
        let m = CMatrix::identity(6, 6) * z - linalg::to_complex(&l.a);
        let inv = m.try_inverse().unwrap();
        let expect = linalg::to_complex(&l.c) * inv * linalg::to_complex(&l.b);
        assert_eq!(g.shape(), (1, 1));
        assert!((g[(0, 0)] - expect[(0, 0)]).norm() < 1e-12 * expect[(0, 0)].norm());
    }

    #[test]
    fn pole_is_reported() {
        let s = passthrough(&[2]);
        let ident = s.with_a(u_identity(&Shape::new(vec![2]).unwrap())).unwrap();
        assert!(matches!(transfer_eval(&ident, C64::new(1.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn relative_error_edge_cases() {
        let mut g = rng(271);
        let s = random_system(&mut g, &SystemSpec::new(&[2, 3], &[1, 2], &[2, 1], Construction::Dense).stable(0.9))
            .unwrap();
        assert!(hinf_relative_error(&s, &s, 64).unwrap() <= 1e-14);
        let l = unfold_to_lti(&s);
        let zero = Lti::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, 2), DMatrix::zeros(2, 0)).unwrap();
        assert!((hinf_relative_error(&l, &zero, 64).unwrap() - 1.0).abs() < 1e-14);
        assert!(hinf_relative_error(&zero, &zero, 8).unwrap() == 0.0);
        let wrong = Lti::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, 1), DMatrix::zeros(2, 0)).unwrap();
        assert!(hinf_relative_error(&l, &wrong, 8).is_err());
    }

    #[test]
    fn refinement_finds_the_resonance() {
        // lightly damped pole pair at angle 1.0 between grid points
        let r: f64 = 0.99;
        let th: f64 = 1.0;
        let a = DMatrix::from_row_slice(2, 2, &[r * th.cos(), -r * th.sin(), r * th.sin(), r * th.cos()]);
        let l = Lti::new(a.clone(), DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), DMatrix::from_row_slice(1, 2, &[1.0, 0.0])).unwrap();
        let coarse = hinf_norm(&l, 8).unwrap();
        let fine = (0..200_001)
            .map(|k| {
                let g = transfer_eval(&l, unit(PI * k as f64 / 200_000.0)).unwrap();
                g[(0, 0)].norm()
            })
            .fold(0.0f64, f64::max);
        assert!((coarse.value - fine).abs() <= 1e-6 * fine, "{} vs {fine}", coarse.value);
        assert!((coarse.omega - th).abs() < 0.05);
    }
}
