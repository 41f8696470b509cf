//! Monodromy matrices of symmetric orbits and their reduction to the four
//! nontrivial multipliers.

use crate::error::{Error, Result};
use crate::orbit::OrbitRecord;
use crate::regularization::{involution, symplectic_form};
use nalgebra::{DMatrix, Matrix6};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Band around the unit circle, the real axis and `+-1` used when classifying.
pub const CLASSIFICATION_TOL: f64 = 1e-7;

/// Relative size below which the discriminant of the `rho` quadratic is treated
/// as zero, so that double multipliers stay on the unit circle.
const DOUBLE_ROOT_TOL: f64 = 1e-9;

/// Largest accepted distance of the trivial multiplier pair from 1.
pub const TRIVIAL_PAIR_LIMIT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityClass {
    EllipticElliptic,
    EllipticNegHyperbolic,
    HyperbolicNegHyperbolic,
    /// At least one positive hyperbolic pair, the other pair elliptic or
    /// positive hyperbolic.
    PositiveHyperbolicPair,
    /// Two negative hyperbolic pairs.
    NegHyperbolicPair,
    ComplexHyperbolic,
    Degenerate,
}

impl StabilityClass {
    pub fn label(self) -> &'static str {
        match self {
            Self::EllipticElliptic => "elliptic-elliptic",
            Self::EllipticNegHyperbolic => "elliptic-neg-hyperbolic",
            Self::HyperbolicNegHyperbolic => "hyperbolic-neg-hyperbolic",
            Self::PositiveHyperbolicPair => "positive-hyperbolic",
            Self::NegHyperbolicPair => "neg-hyperbolic-pair",
            Self::ComplexHyperbolic => "complex-hyperbolic",
            Self::Degenerate => "degenerate",
        }
    }

    pub fn is_linearly_stable(self) -> bool {
        self == Self::EllipticElliptic
    }
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctions {
    /// Vanishes when a multiplier equals 1.
    pub degeneracy: f64,
    /// Vanishes when a multiplier equals -1.
    pub period_doubling: f64,
    /// Discriminant of the `rho` quadratic; vanishes at a collision of pairs.
    pub krein: f64,
}

pub fn test_functions(s1: f64, s2: f64) -> TestFunctions {
    TestFunctions {
        degeneracy: s2 - 2.0 * s1 + 2.0,
        period_doubling: s2 + 2.0 * s1 + 2.0,
        krein: s1 * s1 - 4.0 * s2 + 8.0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonodromySpectrum {
    pub s1: f64,
    pub s2: f64,
    /// Cubic coefficient of the deflated quartic; equals `s1` for a symplectic matrix.
    pub s3: f64,
    /// Constant coefficient of the deflated quartic; equals 1.
    pub s4: f64,
    pub det: f64,
    pub eigenvalues: [Complex64; 4],
    pub class: StabilityClass,
    pub period_doubling: bool,
    /// Distance from 1 of the two multipliers of the full matrix closest to 1.
    pub trivial_pair_error: f64,
    /// `max |lambda_i - 1 / lambda_j|` over the best matching of the remaining
    /// multipliers of the full matrix.
    pub reciprocity_residual: f64,
}

impl MonodromySpectrum {
    pub fn tests(&self) -> TestFunctions {
        test_functions(self.s1, self.s2)
    }
}

/// Full-period monodromy from the half-period fundamental matrix `A`:
/// `R A^{-1} R A`, with the inverse taken in symplectic form.
pub fn monodromy_from_half(a: &Matrix6<f64>) -> Matrix6<f64> {
    let r = involution();
    let j = symplectic_form();
    let a_inv = -j * a.transpose() * j;
    r * a_inv * r * a
}

pub fn monodromy(record: &OrbitRecord) -> Matrix6<f64> {
    monodromy_from_half(&record.half_stm)
}

/// Sums of principal minors `e_1..e_6`, the coefficients of the characteristic
/// polynomial up to sign.
fn principal_minor_sums(m: &Matrix6<f64>) -> [f64; 7] {
    let mut e = [0.0; 7];
    e[0] = 1.0;
    for mask in 1u32..64 {
        let idx: Vec<usize> = (0..6).filter(|i| mask & (1 << i) != 0).collect();
        let k = idx.len();
        let sub = DMatrix::from_fn(k, k, |r, c| m[(idx[r], idx[c])]);
        e[k] += sub.determinant();
    }
    e
}

pub fn reduce_spectrum(m: &Matrix6<f64>) -> Result<MonodromySpectrum> {
    let direct: Vec<Complex64> = m
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    let mut by_distance: Vec<(f64, usize)> = direct
        .iter()
        .enumerate()
        .map(|(i, z)| ((z - 1.0).norm(), i))
        .collect();
    by_distance.sort_by(|a, b| a.0.total_cmp(&b.0));
    let trivial_pair_error = by_distance[1].0;
    if !(trivial_pair_error <= TRIVIAL_PAIR_LIMIT) {
        return Err(Error::Reduction {
            distance: trivial_pair_error,
        });
    }
    let rest: Vec<Complex64> = by_distance[2..].iter().map(|&(_, i)| direct[i]).collect();

    let e = principal_minor_sums(m);
    let s1 = e[1] - 2.0;
    let s2 = e[2] - 2.0 * s1 - 1.0;
    let s3 = e[3] - 2.0 * s2 - s1;
    let s4 = e[6];
    let eigenvalues = quartic_roots(s1, s2);
    let (class, period_doubling) = classify(&eigenvalues, CLASSIFICATION_TOL);

    Ok(MonodromySpectrum {
        s1,
        s2,
        s3,
        s4,
        det: m.determinant(),
        eigenvalues,
        class,
        period_doubling,
        trivial_pair_error,
        reciprocity_residual: reciprocity_residual(&rest),
    })
}

/// Roots of `x^4 - s1 x^3 + s2 x^2 - s1 x + 1` through `rho = x + 1/x`.
pub fn quartic_roots(s1: f64, s2: f64) -> [Complex64; 4] {
    let mut disc = s1 * s1 - 4.0 * (s2 - 2.0);
    if disc.abs() <= DOUBLE_ROOT_TOL * (1.0 + s1 * s1) {
        disc = 0.0;
    }
    let root = Complex64::new(disc, 0.0).sqrt();
    let rho = [(s1 + root) * 0.5, (s1 - root) * 0.5];
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (k, r) in rho.iter().enumerate() {
        let mut d = r * r - 4.0;
        if d.im == 0.0 && d.re.abs() <= DOUBLE_ROOT_TOL {
            d = Complex64::new(0.0, 0.0);
        }
        let sq = d.sqrt();
        let big = if (r + sq).norm() >= (r - sq).norm() { (r + sq) * 0.5 } else { (r - sq) * 0.5 };
        // the product of the pair is exactly 1
        out[2 * k] = big;
        out[2 * k + 1] = if big.norm() > 0.0 { big.inv() } else { big };
    }
    out
}

fn reciprocity_residual(lams: &[Complex64]) -> f64 {
    // best pairing of each multiplier with the reciprocal of another
    let n = lams.len();
    let mut best = f64::INFINITY;
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p| {
        let worst = (0..n)
            .map(|i| (lams[i] - lams[p[i]].inv()).norm())
            .fold(0.0, f64::max);
        best = best.min(worst);
    });
    best
}

fn permutations(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, f);
        v.swap(k, i);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PairKind {
    Elliptic,
    PositiveHyperbolic,
    NegativeHyperbolic,
    Complex,
}

fn pair_kind(lam: Complex64, tol: f64) -> PairKind {
    let on_circle = (lam.norm() - 1.0).abs() <= tol;
    let real = lam.im.abs() <= tol;
    match (on_circle, real) {
        (true, _) => PairKind::Elliptic,
        (false, true) if lam.re > 0.0 => PairKind::PositiveHyperbolic,
        (false, true) => PairKind::NegativeHyperbolic,
        (false, false) => PairKind::Complex,
    }
}

/// Stability class of four multipliers given as two reciprocal pairs
/// `(l0, l1), (l2, l3)`, and whether a multiplier sits at -1.
pub fn classify(lams: &[Complex64; 4], tol: f64) -> (StabilityClass, bool) {
    use PairKind::*;
    let pd = lams.iter().any(|z| (z + 1.0).norm() <= tol);
    if lams.iter().any(|z| (z - 1.0).norm() <= tol) {
        return (StabilityClass::Degenerate, pd);
    }
    let a = pair_kind(lams[0], tol);
    let b = pair_kind(lams[2], tol);
    let class = match (a, b) {
        (Complex, _) | (_, Complex) => StabilityClass::ComplexHyperbolic,
        (Elliptic, Elliptic) => StabilityClass::EllipticElliptic,
        (Elliptic, NegativeHyperbolic) | (NegativeHyperbolic, Elliptic) => {
            StabilityClass::EllipticNegHyperbolic
        }
        (PositiveHyperbolic, NegativeHyperbolic) | (NegativeHyperbolic, PositiveHyperbolic) => {
            StabilityClass::HyperbolicNegHyperbolic
        }
        (NegativeHyperbolic, NegativeHyperbolic) => StabilityClass::NegHyperbolicPair,
        _ => StabilityClass::PositiveHyperbolicPair,
    };
    (class, pd)
}

/// Energies at which the collision orbit of the rotating Kepler problem has
/// period `2 pi k`, from the rectilinear period law `T = 2 pi (2 |E|)^{-3/2}`.
pub fn rotating_kepler_degeneracies(k_max: usize) -> Vec<f64> {
    (1..=k_max)
        .map(|k| -0.5 * (k as f64).powf(-2.0 / 3.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix2;

    /// Symplectic matrix with multipliers `{1, 1, a, 1/a, e^{i theta}, e^{-i theta}}`,
    /// hidden by a random symplectic change of basis.
    fn synthetic(a: f64, theta: f64) -> Matrix6<f64> {
        let mut d = Matrix6::zeros();
        // trivial Jordan block in (q1, p1)
        d[(0, 0)] = 1.0;
        d[(0, 3)] = 0.3;
        d[(3, 3)] = 1.0;
        // hyperbolic pair in (q2, p2)
        d[(1, 1)] = a;
        d[(4, 4)] = 1.0 / a;
        // rotation in (q3, p3)
        let rot = Matrix2::new(theta.cos(), theta.sin(), -theta.sin(), theta.cos());
        d[(2, 2)] = rot[(0, 0)];
        d[(2, 5)] = rot[(0, 1)];
        d[(5, 2)] = rot[(1, 0)];
        d[(5, 5)] = rot[(1, 1)];
        // symplectic conjugator: a shear [[I, S], [0, I]] with S symmetric
        let mut s = Matrix6::identity();
        let sym = [[0.4, -0.2, 0.1], [-0.2, 0.7, 0.3], [0.1, 0.3, -0.5]];
        for i in 0..3 {
            for j in 0..3 {
                s[(i, j + 3)] = sym[i][j];
            }
        }
        let s_inv = -symplectic_form() * s.transpose() * symplectic_form();
        s * d * s_inv
    }

    #[test]
    fn identity_is_degenerate() {
        let sp = reduce_spectrum(&Matrix6::identity()).unwrap();
        assert_abs_diff_eq!(sp.s1, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sp.s2, 6.0, epsilon = 1e-14);
        assert_eq!(sp.class, StabilityClass::Degenerate);
        for z in sp.eigenvalues {
            assert_abs_diff_eq!((z - 1.0).norm(), 0.0, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(sp.tests().degeneracy, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn synthetic_spectrum() {
        let theta = std::f64::consts::PI / 3.0;
        let m = synthetic(2.0, theta);
        let lams = [2.0, 0.5];
        // symmetric functions of {2, 1/2, e^{i theta}, e^{-i theta}}
        let s1 = lams[0] + lams[1] + 2.0 * theta.cos();
        let s2 = lams[0] * lams[1] + 1.0 + (lams[0] + lams[1]) * 2.0 * theta.cos();
        let sp = reduce_spectrum(&m).unwrap();
        assert_abs_diff_eq!(sp.s1, s1, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.s2, s2, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.s1, 3.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.s2, 4.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.s3, sp.s1, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.s4, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.det, 1.0, epsilon = 1e-12);
        assert_eq!(sp.class, StabilityClass::PositiveHyperbolicPair);
        assert!(sp.reciprocity_residual < 1e-12);
    }

    #[test]
    fn classes_of_synthetic_configurations() {
        let z = |re: f64, im: f64| Complex64::new(re, im);
        let e = |t: f64| [z(t.cos(), t.sin()), z(t.cos(), -t.sin())];
        let pair = |a: f64| [z(a, 0.0), z(1.0 / a, 0.0)];
        let cat = |a: [Complex64; 2], b: [Complex64; 2]| [a[0], a[1], b[0], b[1]];
        let tol = CLASSIFICATION_TOL;
        assert_eq!(classify(&cat(e(0.3), e(1.2)), tol).0, StabilityClass::EllipticElliptic);
        assert_eq!(classify(&cat(e(0.3), pair(-3.0)), tol).0, StabilityClass::EllipticNegHyperbolic);
        assert_eq!(classify(&cat(pair(4.0), pair(-3.0)), tol).0, StabilityClass::HyperbolicNegHyperbolic);
        assert_eq!(classify(&cat(pair(4.0), pair(2.0)), tol).0, StabilityClass::PositiveHyperbolicPair);
        assert_eq!(classify(&cat(pair(-4.0), pair(-2.0)), tol).0, StabilityClass::NegHyperbolicPair);
        let w = z(1.5, 0.8);
        let quad = [w, w.inv(), w.conj(), w.conj().inv()];
        assert_eq!(classify(&quad, tol).0, StabilityClass::ComplexHyperbolic);
        let (_, pd) = classify(&cat(e(std::f64::consts::PI), e(1.0)), tol);
        assert!(pd);
    }

    #[test]
    fn period_doubling_test_function_vanishes_at_minus_one() {
        // multipliers {-1, -1, e^{i theta}, e^{-i theta}}
        let theta: f64 = 0.7;
        let c = theta.cos();
        let s1 = -2.0 + 2.0 * c;
        let s2 = 1.0 - 4.0 * c + 1.0;
        assert_abs_diff_eq!(test_functions(s1, s2).period_doubling, 0.0, epsilon = 1e-15);
        let roots = quartic_roots(s1, s2);
        assert!(roots.iter().any(|z| (z + 1.0).norm() < 1e-7));
    }

    #[test]
    fn double_elliptic_multipliers_stay_on_circle() {
        let t: f64 = 2.0;
        let c = t.cos();
        // (x^2 - 2 c x + 1)^2
        let s1 = 4.0 * c;
        let s2 = 2.0 + 4.0 * c * c;
        for z in quartic_roots(s1 + 1e-13, s2) {
            assert!((z.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn kepler_degeneracies() {
        let e = rotating_kepler_degeneracies(3);
        assert_abs_diff_eq!(e[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e[1], -0.31498, epsilon = 1e-5);
        // period 2 pi k means semi-major axis k^{2/3}
        for (k, &en) in e.iter().enumerate() {
            let a = 1.0 / (2.0 * en.abs());
            assert_abs_diff_eq!(a.powf(1.5), (k + 1) as f64, epsilon = 1e-12);
        }
    }
}
