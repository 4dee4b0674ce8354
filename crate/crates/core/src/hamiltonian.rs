//! Parameterised Hamiltonians and the generator of their parameter derivative.
//!
//! For `U(φ) = e^{−itH(φ)}` the derivative is `∂_j U = −i U Y_j` with
//! `Y_j = ∫₀ᵗ e^{isH} [∂_j H] e^{−isH} ds`. [`exact_yj`] evaluates that
//! integral by composite Simpson quadrature; [`closed_form_yphi`] is the
//! analytic result for the single-qubit field-angle model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{
    collective_pauli, expm_hermitian, CMatrix, CVector, HermitianOperator, Pauli, PauliWord,
    StateVector, UnitaryOperator, C64,
};

/// Common interface of the Hamiltonian families.
pub trait Model: Send + Sync {
    fn dim(&self) -> usize;

    fn n_params(&self) -> usize;

    fn param_names(&self) -> Vec<String>;

    /// `H(φ)`.
    fn assemble(&self, phi: &[f64]) -> Result<HermitianOperator>;

    /// `∂H/∂φ_j` evaluated at `phi`.
    fn deriv_generator(&self, j: usize, phi: &[f64]) -> Result<HermitianOperator>;

    /// `e^{−itH(φ)}`. Negative `t` gives the inverse evolution.
    fn unitary(&self, t: f64, phi: &[f64]) -> Result<UnitaryOperator> {
        Ok(expm_hermitian(&self.assemble(phi)?, t))
    }

    fn check_params(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.n_params() {
            return Err(Error::ParameterLength {
                expected: self.n_params(),
                found: phi.len(),
            });
        }
        Ok(())
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.n_params() {
            return Err(Error::ParameterIndex {
                index: j,
                count: self.n_params(),
            });
        }
        Ok(())
    }
}

/// Linear model `H(φ) = Σ_j φ_j H_j` with possibly non-commuting generators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamHamiltonian {
    generators: Vec<HermitianOperator>,
    names: Vec<String>,
}

impl ParamHamiltonian {
    pub fn new(generators: Vec<HermitianOperator>, names: Vec<String>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidArgument("model needs at least one generator".into()));
        }
        if generators.len() != names.len() {
            return Err(Error::InvalidArgument(format!(
                "{} generators but {} names",
                generators.len(),
                names.len()
            )));
        }
        let dim = generators[0].dim();
        if let Some(g) = generators.iter().find(|g| g.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g.dim(),
            });
        }
        Ok(Self { generators, names })
    }

    /// Generators named `x1, x2, …`.
    pub fn unnamed(generators: Vec<HermitianOperator>) -> Result<Self> {
        let names = (1..=generators.len()).map(|i| format!("x{i}")).collect();
        Self::new(generators, names)
    }

    /// `H(φ) = φ_x J_x + φ_y J_y + φ_z J_z` on `n` qubits.
    pub fn collective_field(n_qubits: usize) -> Result<Self> {
        let generators = [crate::qcore::Axis::X, crate::qcore::Axis::Y, crate::qcore::Axis::Z]
            .into_iter()
            .map(|a| collective_pauli(a, n_qubits))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            generators,
            vec!["phi_x".into(), "phi_y".into(), "phi_z".into()],
        )
    }

    pub fn generators(&self) -> &[HermitianOperator] {
        &self.generators
    }
}

impl Model for ParamHamiltonian {
    fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    fn n_params(&self) -> usize {
        self.generators.len()
    }

    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn assemble(&self, phi: &[f64]) -> Result<HermitianOperator> {
        self.check_params(phi)?;
        let dim = self.dim();
        let sum = self
            .generators
            .iter()
            .zip(phi)
            .fold(CMatrix::zeros(dim, dim), |acc, (g, &p)| acc + g.matrix().scale(p));
        Ok(HermitianOperator::from_raw(sum))
    }

    fn deriv_generator(&self, j: usize, _phi: &[f64]) -> Result<HermitianOperator> {
        self.check_index(j)?;
        Ok(self.generators[j].clone())
    }
}

/// Single qubit in a unit field at angle `φ`: `H(φ) = cos φ σx + sin φ σz`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldAngleModel;

impl FieldAngleModel {
    fn angle(&self, phi: &[f64]) -> Result<f64> {
        self.check_params(phi)?;
        Ok(phi[0])
    }
}

impl Model for FieldAngleModel {
    fn dim(&self) -> usize {
        2
    }

    fn n_params(&self) -> usize {
        1
    }

    fn param_names(&self) -> Vec<String> {
        vec!["phi".into()]
    }

    fn assemble(&self, phi: &[f64]) -> Result<HermitianOperator> {
        let a = self.angle(phi)?;
        Ok(HermitianOperator::from_raw(
            Pauli::X.matrix().scale(a.cos()) + Pauli::Z.matrix().scale(a.sin()),
        ))
    }

    /// `−sin φ σx + cos φ σz`, which squares to the identity.
    fn deriv_generator(&self, j: usize, phi: &[f64]) -> Result<HermitianOperator> {
        self.check_index(j)?;
        let a = self.angle(phi)?;
        Ok(HermitianOperator::from_raw(
            Pauli::X.matrix().scale(-a.sin()) + Pauli::Z.matrix().scale(a.cos()),
        ))
    }
}

/// Default number of quadrature points for [`exact_yj`].
pub const DEFAULT_QUAD_STEPS: usize = 2001;

/// `Y_j = ∫₀ᵗ e^{isH} [∂_j H] e^{−isH} ds` by composite Simpson quadrature
/// over `quad_steps` equally spaced points.
///
/// Odd point counts use Simpson's 1/3 rule throughout; even counts close the
/// last three intervals with the 3/8 rule, and two points fall back to the
/// trapezoid.
pub fn exact_yj(
    model: &dyn Model,
    t: f64,
    phi: &[f64],
    j: usize,
    quad_steps: usize,
) -> Result<HermitianOperator> {
    if quad_steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs at least 2 points, got {quad_steps}"
        )));
    }
    let dh = model.deriv_generator(j, phi)?;
    let spectrum = model.assemble(phi)?.spectrum();
    // integrand in the eigenbasis of H: A_ab e^{is(λa − λb)}
    let v = &spectrum.vectors;
    let a = v.adjoint() * dh.matrix() * v;
    let dim = a.nrows();
    let weights = quadrature_weights(quad_steps, t);
    let h = t / (quad_steps - 1) as f64;

    let mut acc = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            let gap = spectrum.values[r] - spectrum.values[c];
            let mut sum = C64::new(0.0, 0.0);
            for (k, w) in weights.iter().enumerate() {
                let s = k as f64 * h;
                sum += C64::from_polar(*w, s * gap);
            }
            acc[(r, c)] = a[(r, c)] * sum;
        }
    }
    Ok(HermitianOperator::from_raw(v * acc * v.adjoint()))
}

fn quadrature_weights(points: usize, t: f64) -> Vec<f64> {
    let h = t / (points - 1) as f64;
    let mut w = vec![0.0; points];
    if points == 2 {
        w[0] = h / 2.0;
        w[1] = h / 2.0;
        return w;
    }
    let simpson_end = if points % 2 == 1 { points - 1 } else { points - 4 };
    let mut i = 0;
    while i < simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if points.is_multiple_of(2) {
        let base = points - 4;
        for (k, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
            w[base + k] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

/// Analytic `Y_φ` of [`FieldAngleModel`]:
/// `½ [[sin2t cosφ, −sin2t sinφ − 2i sin²t], [−sin2t sinφ + 2i sin²t, −sin2t cosφ]]`.
pub fn closed_form_yphi(t: f64, phi: f64) -> HermitianOperator {
    let s2 = (2.0 * t).sin();
    let sq = t.sin().powi(2);
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(s2 * phi.cos(), 0.0),
            C64::new(-s2 * phi.sin(), -2.0 * sq),
            C64::new(-s2 * phi.sin(), 2.0 * sq),
            C64::new(-s2 * phi.cos(), 0.0),
        ],
    );
    HermitianOperator::from_raw(m.scale(0.5))
}

/// `4 sin²t (1 − cos²t sin²φ)`: quantum Fisher information of the
/// field-angle model with probe `|+⟩`.
pub fn field_angle_qfi(t: f64, phi: f64) -> f64 {
    4.0 * t.sin().powi(2) * (1.0 - t.cos().powi(2) * phi.sin().powi(2))
}

/// Textual generator description used in experiment configs.
///
/// Accepted forms: `pauli:<axis>:<qubit>`, `collective:<axis>` and
/// `projector:<a0>,<a1>,…` where each amplitude is a real or complex literal
/// such as `1`, `-0.5`, `1j` or `0.5-0.5j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GeneratorSpec {
    Pauli { axis: crate::qcore::Axis, qubit: usize },
    Collective { axis: crate::qcore::Axis },
    Projector { amplitudes: Vec<C64> },
}

impl GeneratorSpec {
    pub fn build(&self, n_qubits: usize) -> Result<HermitianOperator> {
        match self {
            GeneratorSpec::Pauli { axis, qubit } => {
                if *qubit >= n_qubits {
                    return Err(Error::InvalidArgument(format!(
                        "qubit {qubit} out of range for {n_qubits} qubits"
                    )));
                }
                HermitianOperator::new(PauliWord::single(*axis, *qubit, n_qubits).matrix())
            }
            GeneratorSpec::Collective { axis } => collective_pauli(*axis, n_qubits),
            GeneratorSpec::Projector { amplitudes } => {
                let psi = StateVector::normalized(CVector::from_column_slice(amplitudes))?;
                if psi.n_qubits() != n_qubits {
                    return Err(Error::DimensionMismatch {
                        expected: 1 << n_qubits,
                        found: psi.dim(),
                    });
                }
                HermitianOperator::new(psi.projector())
            }
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("generator '{s}' lacks a kind prefix")))?;
        match kind {
            "pauli" => {
                let (axis, qubit) = rest.split_once(':').ok_or_else(|| {
                    Error::InvalidArgument(format!("'{s}': expected pauli:<axis>:<qubit>"))
                })?;
                let qubit = qubit
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("'{s}': bad qubit index")))?;
                Ok(GeneratorSpec::Pauli {
                    axis: axis.parse()?,
                    qubit,
                })
            }
            "collective" => Ok(GeneratorSpec::Collective { axis: rest.parse()? }),
            "projector" => {
                let amplitudes = rest
                    .split(',')
                    .map(parse_complex)
                    .collect::<Result<Vec<_>>>()?;
                Ok(GeneratorSpec::Projector { amplitudes })
            }
            other => Err(Error::InvalidArgument(format!("unknown generator kind '{other}'"))),
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::Pauli { axis, qubit } => write!(f, "pauli:{axis}:{qubit}"),
            GeneratorSpec::Collective { axis } => write!(f, "collective:{axis}"),
            GeneratorSpec::Projector { amplitudes } => {
                write!(f, "projector:")?;
                for (i, a) in amplitudes.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}{:+}j", a.re, a.im)?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `a`, `bj`, `a+bj` or `a-bj`.
fn parse_complex(s: &str) -> Result<C64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidArgument(format!("bad complex literal '{s}'"));
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('j').or_else(|| s.strip_suffix('i')) else {
        return s.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not an exponent sign or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let parse_im = |txt: &str| -> Result<f64> {
        match txt {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => txt.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            Ok(C64::new(re, parse_im(&body[k..])?))
        }
        None => Ok(C64::new(0.0, parse_im(body)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{max_abs, Axis};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn assemble_linear_model() {
        let sx = HermitianOperator::new(Pauli::X.matrix()).unwrap();
        let sz = HermitianOperator::new(Pauli::Z.matrix()).unwrap();
        let model = ParamHamiltonian::unnamed(vec![sx.clone(), sz]).unwrap();
        assert_eq!(model.assemble(&[1.0, 0.0]).unwrap(), sx);
        assert!(max_abs(model.assemble(&[0.0, 0.0]).unwrap().matrix()) == 0.0);
        assert!(matches!(
            model.assemble(&[1.0]),
            Err(Error::ParameterLength { expected: 2, found: 1 })
        ));

        let field = ParamHamiltonian::collective_field(3).unwrap();
        let a = 0.37;
        let sum = Axis::ALL
            .iter()
            .map(|&ax| collective_pauli(ax, 3).unwrap().scale(a))
            .fold(HermitianOperator::zeros(8), |acc, g| &acc + &g);
        let h = field.assemble(&[a, a, a]).unwrap();
        assert!(max_abs(&(h.matrix() - sum.matrix())) < 1e-15);
    }

    #[test]
    fn derivative_generators() {
        let field = ParamHamiltonian::collective_field(3).unwrap();
        assert_eq!(
            field.deriv_generator(1, &[0.1, 0.2, 0.3]).unwrap(),
            collective_pauli(Axis::Y, 3).unwrap()
        );
        assert!(matches!(
            field.deriv_generator(3, &[0.0; 3]),
            Err(Error::ParameterIndex { index: 3, count: 3 })
        ));

        let m = FieldAngleModel;
        let at_zero = m.deriv_generator(0, &[0.0]).unwrap();
        assert!(max_abs(&(at_zero.matrix() - Pauli::Z.matrix())) < 1e-15);
        let at_half_pi = m.deriv_generator(0, &[FRAC_PI_2]).unwrap();
        assert!(max_abs(&(at_half_pi.matrix() + Pauli::X.matrix())) < 1e-15);
        assert!(at_half_pi.involution_residual() < 1e-15);
    }

    #[test]
    fn unitary_group_property() {
        let m = FieldAngleModel;
        assert!(max_abs(&(m.unitary(0.0, &[0.3]).unwrap().matrix() - CMatrix::identity(2, 2))) < 1e-15);
        let u = m.unitary(1.3, &[0.3]).unwrap();
        let v = m.unitary(-1.3, &[0.3]).unwrap();
        assert!(max_abs(&((&u * &v).matrix() - CMatrix::identity(2, 2))) < 1e-14);

        let t = 0.8;
        let z = m.unitary(t, &[FRAC_PI_2]).unwrap();
        let expected = expm_hermitian(&HermitianOperator::new(Pauli::Z.matrix()).unwrap(), t);
        assert!(max_abs(&(z.matrix() - expected.matrix())) < 1e-15);
    }

    #[test]
    fn closed_form_reference_points() {
        let y = closed_form_yphi(FRAC_PI_2, 0.0);
        assert!(max_abs(&(y.matrix() - Pauli::Y.matrix())) < 1e-15);
        assert!(max_abs(closed_form_yphi(0.0, 1.1).matrix()) == 0.0);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let y = exact_yj(&FieldAngleModel, FRAC_PI_2, &[0.0], 0, DEFAULT_QUAD_STEPS).unwrap();
        assert!(max_abs(&(y.matrix() - Pauli::Y.matrix())) < 1e-8);

        let y0 = exact_yj(&FieldAngleModel, 0.0, &[0.4], 0, 11).unwrap();
        assert!(max_abs(y0.matrix()) == 0.0);

        for it in 0..10 {
            for ip in 0..10 {
                let t = PI * (it as f64 + 0.5) / 10.0;
                let phi = 2.0 * PI * ip as f64 / 10.0 - PI;
                let quad = exact_yj(&FieldAngleModel, t, &[phi], 0, DEFAULT_QUAD_STEPS).unwrap();
                let closed = closed_form_yphi(t, phi);
                assert!(
                    max_abs(&(quad.matrix() - closed.matrix())) < 1e-8,
                    "t={t} phi={phi}"
                );
            }
        }
    }

    #[test]
    fn quadrature_even_point_counts() {
        let closed = closed_form_yphi(1.2, 0.5);
        for points in [2000, 2001] {
            let quad = exact_yj(&FieldAngleModel, 1.2, &[0.5], 0, points).unwrap();
            assert!(max_abs(&(quad.matrix() - closed.matrix())) < 1e-8, "{points}");
        }
        let w = quadrature_weights(2, 1.0);
        assert_eq!(w, vec![0.5, 0.5]);
        assert!(exact_yj(&FieldAngleModel, 1.0, &[0.0], 0, 1).is_err());
    }

    #[test]
    fn finite_difference_of_unitary_matches_generator() {
        // (U(φ+ε) − U(φ−ε))/2ε ≈ −i U Y
        let eps = 1e-5;
        for (t, phi) in [(0.7, 0.2), (2.1, -1.0), (PI, 0.9)] {
            let m = FieldAngleModel;
            let up = m.unitary(t, &[phi + eps]).unwrap();
            let dn = m.unitary(t, &[phi - eps]).unwrap();
            let fd = (up.matrix() - dn.matrix()).unscale(2.0 * eps);
            let y = exact_yj(&m, t, &[phi], 0, DEFAULT_QUAD_STEPS).unwrap();
            let analytic = m.unitary(t, &[phi]).unwrap().matrix() * y.matrix() * C64::new(0.0, -1.0);
            assert!(max_abs(&(fd - analytic)) < 1e-6);
        }
    }

    #[test]
    fn generator_spec_parsing() {
        let g: GeneratorSpec = "projector:1,1j".parse().unwrap();
        assert_eq!(
            g,
            GeneratorSpec::Projector {
                amplitudes: vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]
            }
        );
        let round: GeneratorSpec = g.to_string().parse().unwrap();
        assert_eq!(round, g);
        assert_eq!(
            "pauli:z:2".parse::<GeneratorSpec>().unwrap(),
            GeneratorSpec::Pauli { axis: Axis::Z, qubit: 2 }
        );
        assert_eq!(parse_complex("0.5-0.25j").unwrap(), C64::new(0.5, -0.25));
        assert_eq!(parse_complex("-1e-3+2j").unwrap(), C64::new(-1e-3, 2.0));
        assert_eq!(parse_complex("-j").unwrap(), C64::new(0.0, -1.0));
        assert!("spin:x".parse::<GeneratorSpec>().is_err());

        let p = g.build(1).unwrap();
        assert!((p.matrix()[(0, 1)] - C64::new(0.0, -0.5)).norm() < 1e-15);
        assert!(GeneratorSpec::Pauli { axis: Axis::X, qubit: 1 }.build(1).is_err());
    }
}
