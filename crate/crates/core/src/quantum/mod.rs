//! Pure-state simulation over named qubit registers.
//!
//! States are immutable: every operation returns a fresh `StateVector`.
//! Basis indices read registers left to right, most significant first,
//! and bits within a register the same way.

mod dist;
mod measure;
mod subspace;
mod teleport;

pub use dist::{distributions_match, OutcomeDistribution};
pub use measure::{measure_projective, MeasurementOutcome, ProjectorFamily};
pub use subspace::Subspace;
pub use teleport::{teleport_branches, teleport_qubit, TeleportBranch, TeleportOutcome};

use num_complex::Complex64;
use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::tolerance::{FIDELITY_TOL, PROBABILITY_TOL};

/// A named group of qubits inside a state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub width: usize,
}

impl Register {
    pub fn new(name: impl Into<String>, width: usize) -> Self {
        Register { name: name.into(), width }
    }
}

/// A normalized pure state over an ordered list of named registers.
#[derive(Debug, Clone)]
pub struct StateVector {
    registers: Vec<Register>,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Builds a state, checking the amplitude count and normalization
    /// (within 1e-9). Register names must be distinct.
    pub fn new(registers: Vec<Register>, amps: Vec<Complex64>) -> Result<Self> {
        let total: usize = registers.iter().map(|r| r.width).sum();
        assert!(total <= 26, "state too large to simulate");
        for (i, r) in registers.iter().enumerate() {
            if registers[..i].iter().any(|s| s.name == r.name) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate register name `{}`",
                    r.name
                )));
            }
        }
        if amps.len() != 1 << total {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {} qubits",
                amps.len(),
                total
            )));
        }
        let state = StateVector { registers, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// The computational basis state with each register set to the given
    /// value.
    pub fn basis(registers: Vec<Register>, values: &[usize]) -> Result<Self> {
        if values.len() != registers.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} registers",
                values.len(),
                registers.len()
            )));
        }
        let total: usize = registers.iter().map(|r| r.width).sum();
        let mut index = 0usize;
        for (r, &v) in registers.iter().zip(values) {
            if v >= 1 << r.width {
                return Err(Error::InvalidArgument(format!(
                    "value {v} does not fit in register `{}` of width {}",
                    r.name, r.width
                )));
            }
            index = (index << r.width) | v;
        }
        let mut amps = vec![Complex64::ZERO; 1 << total];
        amps[index] = Complex64::ONE;
        StateVector::new(registers, amps)
    }

    /// A Haar-ish random state: amplitudes drawn from the complex normal
    /// distribution and normalized.
    pub fn random<R: Rng + ?Sized>(registers: Vec<Register>, rng: &mut R) -> Self {
        let total: usize = registers.iter().map(|r| r.width).sum();
        let mut amps: Vec<Complex64> = (0..1usize << total)
            .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector { registers, amps }
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total_qubits(&self) -> usize {
        self.registers.iter().map(|r| r.width).sum()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Position of a register: `(low_bits, width)` where `low_bits` counts
    /// qubits less significant than the register.
    pub(crate) fn register_span(&self, name: &str) -> Result<(usize, usize)> {
        let idx = self
            .registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))?;
        let low: usize = self.registers[idx + 1..].iter().map(|r| r.width).sum();
        Ok((low, self.registers[idx].width))
    }

    pub fn register_width(&self, name: &str) -> Result<usize> {
        self.register_span(name).map(|(_, w)| w)
    }

    /// Kronecker product; `self`'s registers become the most significant.
    /// Register names must stay distinct across both operands.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        for r in &other.registers {
            assert!(
                self.registers.iter().all(|s| s.name != r.name),
                "register name `{}` appears on both sides of a tensor product",
                r.name
            );
        }
        let mut registers = self.registers.clone();
        registers.extend(other.registers.iter().cloned());
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateVector { registers, amps }
    }

    /// Flips the sign of every branch whose register value `i` has
    /// `flags[i]` set. Flags shorter than the register leave the higher
    /// values untouched; more flags than basis states is an error.
    pub fn apply_phase_flags(&self, register: &str, flags: &BitString) -> Result<StateVector> {
        let (low, width) = self.register_span(register)?;
        let reg_dim = 1usize << width;
        if flags.len() > reg_dim {
            return Err(Error::FlagLength { flags: flags.len(), width });
        }
        let low_dim = 1usize << low;
        let mut amps = self.amps.clone();
        for value in 0..reg_dim.min(flags.len()) {
            if !flags.get(value) {
                continue;
            }
            let base = value * low_dim;
            let stride = reg_dim * low_dim;
            let mut offset = base;
            while offset < amps.len() {
                for a in &mut amps[offset..offset + low_dim] {
                    *a = -*a;
                }
                offset += stride;
            }
        }
        Ok(StateVector { registers: self.registers.clone(), amps })
    }

    /// The `width`-fold Hadamard on one register.
    pub fn apply_hadamard(&self, register: &str) -> Result<StateVector> {
        let (low, width) = self.register_span(register)?;
        let reg_dim = 1usize << width;
        let low_dim = 1usize << low;
        let high_dim = self.amps.len() / (reg_dim * low_dim);
        let scale = 1.0 / (reg_dim as f64).sqrt();
        let mut amps = self.amps.clone();
        let mut slice = vec![Complex64::ZERO; reg_dim];
        for high in 0..high_dim {
            for lo in 0..low_dim {
                let base = high * reg_dim * low_dim + lo;
                for v in 0..reg_dim {
                    slice[v] = amps[base + v * low_dim];
                }
                walsh_hadamard(&mut slice);
                for v in 0..reg_dim {
                    amps[base + v * low_dim] = slice[v] * scale;
                }
            }
        }
        Ok(StateVector { registers: self.registers.clone(), amps })
    }

    /// `<self|other>`. Layouts must agree as width sequences; register
    /// names are not compared.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        let widths: Vec<usize> = self.registers.iter().map(|r| r.width).collect();
        let other_widths: Vec<usize> = other.registers.iter().map(|r| r.width).collect();
        if widths != other_widths {
            return Err(Error::LayoutMismatch(format!(
                "{widths:?} vs {other_widths:?}"
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|`, which ignores global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        self.inner_product(other).map(|ip| ip.norm())
    }

    /// Multiplies by the global phase that makes the first amplitude of
    /// magnitude above 1e-12 real and positive.
    pub fn canonicalize_global_phase(&self) -> StateVector {
        let lead = self.amps.iter().find(|a| a.norm() > FIDELITY_TOL);
        let amps = match lead {
            Some(a) => {
                let phase = a.conj() / a.norm();
                self.amps.iter().map(|x| x * phase).collect()
            }
            None => self.amps.clone(),
        };
        StateVector { registers: self.registers.clone(), amps }
    }

    /// Splits off a register that is in a definite computational basis
    /// state, returning its value and the state of the remaining
    /// registers. Errors when the register is entangled with the rest or
    /// not in a basis state.
    // The mass loop indexes by register value on purpose.
    #[allow(clippy::needless_range_loop)]
    pub fn factor_basis_register(&self, register: &str) -> Result<(usize, StateVector)> {
        let (low, width) = self.register_span(register)?;
        let reg_dim = 1usize << width;
        let low_dim = 1usize << low;
        let high_dim = self.amps.len() / (reg_dim * low_dim);

        let mut mass = vec![0.0f64; reg_dim];
        for high in 0..high_dim {
            for v in 0..reg_dim {
                let base = (high * reg_dim + v) * low_dim;
                for lo in 0..low_dim {
                    mass[v] += self.amps[base + lo].norm_sqr();
                }
            }
        }
        let (value, &m) = mass
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("register has at least one basis state");
        if (m - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "register `{register}` is not in a definite basis state (mass {m})"
            )));
        }

        let registers: Vec<Register> = self
            .registers
            .iter()
            .filter(|r| r.name != register)
            .cloned()
            .collect();
        let mut amps = Vec::with_capacity(high_dim * low_dim);
        for high in 0..high_dim {
            let base = (high * reg_dim + value) * low_dim;
            amps.extend_from_slice(&self.amps[base..base + low_dim]);
        }
        Ok((value, StateVector { registers, amps }))
    }
}

/// In-place Walsh-Hadamard butterfly, without normalization.
fn walsh_hadamard(v: &mut [Complex64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let x = v[j];
                let y = v[j + h];
                v[j] = x + y;
                v[j + h] = x - y;
            }
            i += h * 2;
        }
        h *= 2;
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; avoids ln(0) by nudging the uniform sample away from 0.
    let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// The maximally entangled state `sum_i |i>|i> / 2^(t/2)` over registers
/// `A` and `B` of `t` qubits each.
pub fn epr_state(t: usize) -> Result<StateVector> {
    if t == 0 {
        return Err(Error::InvalidArgument("epr_state needs at least one pair".into()));
    }
    let d = 1usize << t;
    let scale = 1.0 / (d as f64).sqrt();
    let mut amps = vec![Complex64::ZERO; d * d];
    for i in 0..d {
        amps[i * d + i] = Complex64::new(scale, 0.0);
    }
    StateVector::new(vec![Register::new("A", t), Register::new("B", t)], amps)
}

/// Acceptance probability of the swap test on `u` and `v`:
/// `(1 + |<u|v>|^2) / 2`. Both states must be normalized with matching
/// layouts.
pub fn swap_test_accept_prob(u: &StateVector, v: &StateVector) -> Result<f64> {
    for s in [u, v] {
        let norm = s.norm();
        if (norm - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::NotNormalized(norm));
        }
    }
    let overlap = u.fidelity(v)?;
    Ok((1.0 + overlap * overlap) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use crate::rng::stream_rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_unnormalized() {
        let err = StateVector::new(
            vec![Register::new("q", 1)],
            vec![c(1.0, 0.0), c(1.0, 0.0)],
        );
        assert!(matches!(err, Err(Error::NotNormalized(_))));
    }

    #[test]
    fn rejects_wrong_amplitude_count() {
        let err = StateVector::new(vec![Register::new("q", 2)], vec![c(1.0, 0.0)]);
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn zero_width_register_is_a_scalar_factor() {
        let s = StateVector::basis(
            vec![Register::new("empty", 0), Register::new("q", 1)],
            &[0, 1],
        )
        .unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.amplitude(1), Complex64::ONE);
        // Hadamard on a zero-width register is the identity.
        let h = s.apply_hadamard("empty").unwrap();
        assert_eq!(h.amplitudes(), s.amplitudes());
    }

    #[test]
    fn tensor_concatenates_layouts() {
        let a = StateVector::basis(vec![Register::new("a", 1)], &[1]).unwrap();
        let b = StateVector::basis(vec![Register::new("b", 2)], &[2]).unwrap();
        let t = a.tensor(&b);
        assert_eq!(t.dim(), 8);
        // index = a:1 << 2 | b:2
        assert_eq!(t.amplitude(6), Complex64::ONE);
    }

    #[test]
    #[should_panic(expected = "both sides")]
    fn tensor_rejects_duplicate_names() {
        let a = StateVector::basis(vec![Register::new("a", 1)], &[0]).unwrap();
        let b = StateVector::basis(vec![Register::new("a", 1)], &[0]).unwrap();
        let _ = a.tensor(&b);
    }

    #[test]
    fn phase_flags_hit_selected_values() {
        // |+>|0> layout: registers q (2 qubits), r (1 qubit)
        let amps = vec![
            c(0.5, 0.0), c(0.0, 0.0),
            c(0.5, 0.0), c(0.0, 0.0),
            c(0.5, 0.0), c(0.0, 0.0),
            c(0.5, 0.0), c(0.0, 0.0),
        ];
        let s = StateVector::new(
            vec![Register::new("q", 2), Register::new("r", 1)],
            amps,
        )
        .unwrap();
        let flags = BitString::parse("0110").unwrap();
        let flipped = s.apply_phase_flags("q", &flags).unwrap();
        let expect = [0.5, -0.5, -0.5, 0.5];
        for (v, e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(flipped.amplitude(v * 2).re, e, epsilon = 1e-15);
        }
        // flags shorter than the register leave the tail alone
        let short = BitString::parse("01").unwrap();
        let partial = s.apply_phase_flags("q", &short).unwrap();
        assert_abs_diff_eq!(partial.amplitude(2).re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(partial.amplitude(4).re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn phase_flags_too_long_is_an_error() {
        let s = StateVector::basis(vec![Register::new("q", 1)], &[0]).unwrap();
        let flags = BitString::parse("011").unwrap();
        assert!(matches!(
            s.apply_phase_flags("q", &flags),
            Err(Error::FlagLength { .. })
        ));
    }

    #[test]
    fn unknown_register_is_an_error() {
        let s = StateVector::basis(vec![Register::new("q", 1)], &[0]).unwrap();
        assert!(matches!(
            s.apply_hadamard("nope"),
            Err(Error::UnknownRegister(_))
        ));
    }

    #[test]
    fn hadamard_of_basis_is_uniform_with_signs() {
        let s = StateVector::basis(vec![Register::new("q", 2)], &[3]).unwrap();
        let h = s.apply_hadamard("q").unwrap();
        // H|3> has amplitude (-1)^(3.j)/2 at |j>
        let expect = [0.5, -0.5, -0.5, 0.5];
        for (j, e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(h.amplitude(j).re, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn epr_state_amplitudes() {
        let s = epr_state(2).unwrap();
        assert_eq!(s.dim(), 16);
        for i in 0..4 {
            for j in 0..4 {
                let a = s.amplitude(i * 4 + j);
                if i == j {
                    assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
                } else {
                    assert_eq!(a, Complex64::ZERO);
                }
            }
        }
        assert!(epr_state(0).is_err());
    }

    #[test]
    fn swap_test_bounds() {
        let mut rng = stream_rng(11, 0, 0);
        let u = StateVector::random(vec![Register::new("q", 2)], &mut rng);
        // identical states accept with probability 1
        assert_abs_diff_eq!(swap_test_accept_prob(&u, &u).unwrap(), 1.0, epsilon = 1e-12);
        // orthogonal states accept with probability 1/2
        let a = StateVector::basis(vec![Register::new("q", 1)], &[0]).unwrap();
        let b = StateVector::basis(vec![Register::new("q", 1)], &[1]).unwrap();
        assert_abs_diff_eq!(swap_test_accept_prob(&a, &b).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn canonical_phase_makes_leading_amplitude_positive() {
        let amps = vec![c(0.0, 0.6), c(0.0, -0.8)];
        let s = StateVector::new(vec![Register::new("q", 1)], amps).unwrap();
        let canon = s.canonicalize_global_phase();
        assert_abs_diff_eq!(canon.amplitude(0).re, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(canon.amplitude(0).im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(canon.amplitude(1).re, -0.8, epsilon = 1e-15);
    }

    #[test]
    fn factor_basis_register_splits_product_states() {
        let m = StateVector::basis(vec![Register::new("m", 1)], &[1]).unwrap();
        let mut rng = stream_rng(3, 0, 0);
        let q = StateVector::random(vec![Register::new("q", 2)], &mut rng);
        let joint = m.tensor(&q);
        let (value, rest) = joint.factor_basis_register("m").unwrap();
        assert_eq!(value, 1);
        assert_abs_diff_eq!(rest.fidelity(&q).unwrap(), 1.0, epsilon = 1e-12);

        // entangled register refuses to factor
        let pair = epr_state(1).unwrap();
        assert!(pair.factor_basis_register("A").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn unitaries_preserve_norm(seed in 0u64..1024) {
            let mut rng = stream_rng(seed, 1, 0);
            let s = StateVector::random(
                vec![Register::new("a", 2), Register::new("b", 1)],
                &mut rng,
            );
            let flags = BitString::random(3, &mut rng);
            let flipped = s.apply_phase_flags("a", &flags).unwrap();
            prop_assert!((flipped.norm() - 1.0).abs() < 1e-12);
            let h = flipped.apply_hadamard("a").unwrap();
            prop_assert!((h.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn hadamard_is_involutive(seed in 0u64..1024) {
            let mut rng = stream_rng(seed, 2, 0);
            let s = StateVector::random(vec![Register::new("q", 3)], &mut rng);
            let twice = s.apply_hadamard("q").unwrap().apply_hadamard("q").unwrap();
            prop_assert!(twice.fidelity(&s).unwrap() > 1.0 - 1e-12);
        }

        #[test]
        fn phase_flags_are_involutive(seed in 0u64..1024) {
            let mut rng = stream_rng(seed, 3, 0);
            let s = StateVector::random(vec![Register::new("q", 2)], &mut rng);
            let flags = BitString::random(4, &mut rng);
            let twice = s
                .apply_phase_flags("q", &flags).unwrap()
                .apply_phase_flags("q", &flags).unwrap();
            for (a, b) in twice.amplitudes().iter().zip(s.amplitudes()) {
                prop_assert!((a - b).norm() < 1e-14);
            }
        }
    }
}
