//! Seeded test systems.

use nalgebra::DMatrix;
use rand::Rng;

use super::{MltiSystem, TuckerSystem};
use crate::decomp::{gen_ttd_to_full, GenTtCores};
use crate::einstein::{paired_outer, phi, EvenPairedTensor, PairedShape};
use crate::error::{Error, Result};
use crate::linalg;
use crate::random::{randn_matrix, randn_tensor, sparse_tensor};

/// The SISO Tucker system with 3×2 states used as the worked reachability
/// and observability example: `ρ(A1)·ρ(A2) ≈ 0.9207`.
pub fn small_siso_tucker() -> TuckerSystem {
    let a1 = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.2, 0.5, 0.8]);
    let a2 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
    let b1 = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]);
    let b2 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
    let c1 = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
    let c2 = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    TuckerSystem::new(vec![a1, a2], vec![b1, b2], vec![c1, c2]).expect("conformable")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    /// Standard normal entries.
    Dense,
    /// Bernoulli(fill)·Normal entries.
    Sparse(f64),
    /// Interleaved outer products of normal matrices (Kronecker rank 1).
    Tucker,
    /// Generalized TT form with the given internal ranks `(R1..R_{N−1})`
    /// for each of `A`, `B` and `C`.
    PlantedTt(Vec<usize>),
    /// Weakly symmetric `A` (`A = Aᵀ` under the U-transpose).
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub state: Vec<usize>,
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    pub construction: Construction,
    /// Rescale `A` so that `ρ(φ(A))` equals this value.
    pub spectral_radius: Option<f64>,
}

impl SystemSpec {
    pub fn new(state: &[usize], input: &[usize], output: &[usize], construction: Construction) -> Self {
        SystemSpec {
            state: state.to_vec(),
            input: input.to_vec(),
            output: output.to_vec(),
            construction,
            spectral_radius: None,
        }
    }

    pub fn stable(mut self, rho: f64) -> Self {
        self.spectral_radius = Some(rho);
        self
    }
}

/// Random generalized TT cores with internal ranks `(R1..R_{N−1})`;
/// `fill` makes the cores Bernoulli(fill)·Normal instead of Normal.
pub fn random_gen_tt(rng: &mut impl Rng, pshape: &PairedShape, internal: &[usize], fill: Option<f64>) -> Result<GenTtCores> {
    let n = pshape.order();
    if internal.len() + 1 != n {
        return Err(Error::domain(format!(
            "{} internal TT ranks for order {n}",
            internal.len()
        )));
    }
    let mut ranks = vec![1];
    ranks.extend_from_slice(internal);
    ranks.push(1);
    let cores = pshape
        .pairs()
        .iter()
        .enumerate()
        .map(|(k, &(j, i))| {
            let dims = [ranks[k], j, i, ranks[k + 1]];
            match fill {
                Some(f) => sparse_tensor(rng, &dims, f),
                None => randn_tensor(rng, &dims),
            }
        })
        .collect();
    GenTtCores::new(pshape.clone(), cores)
}

fn draw(rng: &mut impl Rng, pshape: &PairedShape, how: &Construction) -> Result<EvenPairedTensor> {
    match how {
        Construction::Dense | Construction::Symmetric => {
            EvenPairedTensor::new(pshape.clone(), randn_tensor(rng, &pshape.interleaved()))
        }
        Construction::Sparse(fill) => {
            EvenPairedTensor::new(pshape.clone(), sparse_tensor(rng, &pshape.interleaved(), *fill))
        }
        Construction::Tucker => {
            let mats: Vec<DMatrix<f64>> = pshape.pairs().iter().map(|&(j, i)| randn_matrix(rng, j, i)).collect();
            paired_outer(&mats)
        }
        Construction::PlantedTt(r) => Ok(gen_ttd_to_full(&random_gen_tt(rng, pshape, r, None)?)),
    }
}

/// Scales `a` so that `ρ(φ(a)) = rho` (unchanged when `ρ(φ(a)) = 0`).
pub(crate) fn rescale_to_radius(a: &EvenPairedTensor, rho: f64) -> Result<EvenPairedTensor> {
    let r = linalg::spectral_radius(&phi(a))?;
    Ok(if r > 0.0 { a.scale(rho / r) } else { a.clone() })
}

pub fn random_system(rng: &mut impl Rng, spec: &SystemSpec) -> Result<MltiSystem> {
    let sq = PairedShape::square(&spec.state)?;
    let mut a = draw(rng, &sq, &spec.construction)?;
    if spec.construction == Construction::Symmetric {
        a = a.add(&crate::einstein::u_transpose(&a))?.scale(0.5);
    }
    if let Some(rho) = spec.spectral_radius {
        a = rescale_to_radius(&a, rho)?;
    }
    let b = draw(rng, &PairedShape::from_row_col(&spec.state, &spec.input)?, &spec.construction)?;
    let c = draw(rng, &PairedShape::from_row_col(&spec.output, &spec.state)?, &spec.construction)?;
    MltiSystem::new(a, b, c)
}

/// Random Tucker system; with `rho`, each `An` is scaled to spectral radius
/// `rho^{1/N}` so that the Kronecker spectrum has radius `rho`.
pub fn random_tucker(
    rng: &mut impl Rng,
    state: &[usize],
    input: &[usize],
    output: &[usize],
    rho: Option<f64>,
) -> Result<TuckerSystem> {
    if state.len() != input.len() || state.len() != output.len() {
        return Err(Error::domain("state, input and output orders differ"));
    }
    let n = state.len();
    let mut a = Vec::with_capacity(n);
    for &j in state {
        let mut m = randn_matrix(rng, j, j);
        if let Some(rho) = rho {
            let r = linalg::spectral_radius(&m)?;
            if r > 0.0 {
                m *= rho.powf(1.0 / n as f64) / r;
            }
        }
        a.push(m);
    }
    let b = state.iter().zip(input).map(|(&j, &k)| randn_matrix(rng, j, k)).collect();
    let c = output.iter().zip(state).map(|(&i, &j)| randn_matrix(rng, i, j)).collect();
    TuckerSystem::new(a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{generalized_ttd, Truncation};
    use crate::einstein::is_weakly_symmetric;
    use crate::random::rng;

    #[test]
    fn fixture_spectral_product() {
        let s = small_siso_tucker();
        let p = linalg::spectral_radius(&s.a[0]).unwrap() * linalg::spectral_radius(&s.a[1]).unwrap();
        assert!((p - 0.9207).abs() < 1e-3, "{p}");
    }

    #[test]
    fn constructions_have_requested_structure() {
        let mut g = rng(211);
        let spec = SystemSpec::new(&[2, 3, 2], &[2, 3, 2], &[2, 3, 2], Construction::PlantedTt(vec![2, 3])).stable(0.8);
        let s = random_system(&mut g, &spec).unwrap();
        let r = linalg::spectral_radius(&phi(s.a())).unwrap();
        assert!((r - 0.8).abs() < 1e-10);
        assert_eq!(generalized_ttd(s.a(), &Truncation::exact()).unwrap().ranks(), vec![1, 2, 3, 1]);
        assert_eq!(generalized_ttd(s.b(), &Truncation::exact()).unwrap().ranks(), vec![1, 2, 3, 1]);

        let s = random_system(&mut g, &SystemSpec::new(&[2, 2], &[1, 1], &[1, 1], Construction::Symmetric)).unwrap();
        assert!(is_weakly_symmetric(s.a(), 1e-14));

        let t = random_tucker(&mut g, &[3, 2], &[1, 1], &[1, 1], Some(0.9)).unwrap();
        let rho: f64 = t.a.iter().map(|m| linalg::spectral_radius(m).unwrap()).product();
        assert!((rho - 0.9).abs() < 1e-10);
        assert!(random_system(&mut g, &SystemSpec::new(&[2, 2], &[1, 1], &[1, 1], Construction::PlantedTt(vec![])))
            .is_err());
    }
}
