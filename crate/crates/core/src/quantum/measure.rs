//! Projective measurements on a designated register.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use statrs::distribution::Normal;

use crate::error::{Error, Result};
use crate::tolerance::{PROBABILITY_TOL, ZERO_BRANCH_TOL};

use super::dist::OutcomeDistribution;
use super::subspace::Subspace;
use super::StateVector;

/// A complete family of pairwise orthogonal subspaces of one register's
/// state space. Measuring against the family projects the register and
/// leaves every other register untouched.
#[derive(Debug, Clone)]
pub struct ProjectorFamily {
    register: String,
    subspaces: Vec<Subspace>,
}

impl ProjectorFamily {
    /// Validates pairwise orthogonality and completeness: dimensions must
    /// sum to the register dimension.
    pub fn new(register: impl Into<String>, subspaces: Vec<Subspace>) -> Result<Self> {
        if subspaces.is_empty() {
            return Err(Error::IncompleteFamily { got: 0, want: 1 });
        }
        let ambient = subspaces[0].ambient();
        for s in &subspaces {
            if s.ambient() != ambient {
                return Err(Error::DimensionMismatch(
                    "family members live in different dimensions".into(),
                ));
            }
        }
        for i in 0..subspaces.len() {
            for j in i + 1..subspaces.len() {
                let overlap = subspaces[i].basis().adjoint() * subspaces[j].basis();
                if overlap.iter().any(|x| x.norm() > PROBABILITY_TOL) {
                    return Err(Error::NonOrthogonalFamily);
                }
            }
        }
        let got: usize = subspaces.iter().map(Subspace::dim).sum();
        if got != ambient {
            return Err(Error::IncompleteFamily { got, want: ambient });
        }
        Ok(ProjectorFamily { register: register.into(), subspaces })
    }

    /// The computational-basis measurement: one rank-1 subspace per value.
    pub fn computational(register: impl Into<String>, width: usize) -> Self {
        let d = 1usize << width;
        let subspaces = (0..d)
            .map(|i| Subspace::computational(d, &[i]).expect("basis vector in range"))
            .collect();
        ProjectorFamily { register: register.into(), subspaces }
    }

    /// A random complete rank-one family on `register`: the columns of
    /// an orthonormalized complex Gaussian matrix, one line each. A
    /// rank-deficient draw fails validation and is redrawn.
    pub fn random_rank_one<R: Rng + ?Sized>(
        register: impl Into<String>,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::IncompleteFamily { got: 0, want: 1 });
        }
        let register = register.into();
        let normal = Normal::new(0.0, 1.0).expect("unit normal parameters are valid");
        loop {
            let m = DMatrix::from_fn(dim, dim, |_, _| {
                Complex64::new(rng.sample(normal), rng.sample(normal))
            });
            let q = m.qr().q();
            let lines = (0..dim)
                .map(|j| Subspace::line(&q.column(j).into_owned()))
                .collect::<Result<Vec<Subspace>>>();
            let Ok(lines) = lines else { continue };
            if let Ok(family) = ProjectorFamily::new(register.clone(), lines) {
                return Ok(family);
            }
        }
    }

    pub fn register(&self) -> &str {
        &self.register
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }
}

/// One reachable measurement branch. `post_state` has its global phase
/// canonicalized; outcomes with probability below 1e-12 are omitted.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub index: usize,
    pub probability: f64,
    pub post_state: StateVector,
}

/// Measures `state`'s register against the family. Returns the Born-rule
/// distribution over outcome indices together with the post-measurement
/// state of every reachable outcome.
// The stride loops below index by register value on purpose.
#[allow(clippy::needless_range_loop)]
pub fn measure_projective(
    state: &StateVector,
    family: &ProjectorFamily,
) -> Result<(OutcomeDistribution, Vec<MeasurementOutcome>)> {
    let (low, width) = state.register_span(&family.register)?;
    let reg_dim = 1usize << width;
    if family.subspaces[0].ambient() != reg_dim {
        return Err(Error::DimensionMismatch(format!(
            "family acts on dimension {}, register `{}` has dimension {}",
            family.subspaces[0].ambient(),
            family.register,
            reg_dim
        )));
    }
    let low_dim = 1usize << low;
    let high_dim = state.dim() / (reg_dim * low_dim);

    let mut outcomes = Vec::new();
    let mut weighted = Vec::with_capacity(family.len());
    for (index, subspace) in family.subspaces.iter().enumerate() {
        let mut amps = vec![Complex64::ZERO; state.dim()];
        let mut probability = 0.0f64;
        if subspace.dim() > 0 {
            let basis = subspace.basis();
            let k = subspace.dim();
            let mut slice = vec![Complex64::ZERO; reg_dim];
            for high in 0..high_dim {
                for lo in 0..low_dim {
                    let base = high * reg_dim * low_dim + lo;
                    for v in 0..reg_dim {
                        slice[v] = state.amplitude(base + v * low_dim);
                    }
                    // project the register slice: basis (basis^† slice)
                    for col in 0..k {
                        let mut coeff = Complex64::ZERO;
                        for v in 0..reg_dim {
                            coeff += basis[(v, col)].conj() * slice[v];
                        }
                        if coeff.norm_sqr() > 0.0 {
                            for v in 0..reg_dim {
                                amps[base + v * low_dim] += basis[(v, col)] * coeff;
                            }
                        }
                    }
                }
            }
            probability = amps.iter().map(|a| a.norm_sqr()).sum();
        }
        weighted.push((index.to_string(), probability));
        if probability > ZERO_BRANCH_TOL {
            let scale = Complex64::new(1.0 / probability.sqrt(), 0.0);
            for a in &mut amps {
                *a *= scale;
            }
            let post_state = StateVector {
                registers: state.registers().to_vec(),
                amps,
            }
            .canonicalize_global_phase();
            outcomes.push(MeasurementOutcome { index, probability, post_state });
        }
    }
    let distribution = OutcomeDistribution::from_weighted(weighted);
    distribution.validate(PROBABILITY_TOL)?;
    Ok((distribution, outcomes))
}
