//! Constructors for the two-qubit resource states and the noise channels that
//! degrade them.
//!
//! Basis convention: |b0 b1> with the left qubit most significant, so the
//! computational basis of a pair is ordered |00>, |01>, |10>, |11>.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{kron, CMat, DensityMatrix, Ket};

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, constraint: &'static str) -> Result<()> {
    if !(value >= lo && value <= hi) || value.is_nan() {
        return Err(Error::InvalidParameter {
            name,
            value,
            constraint,
        });
    }
    Ok(())
}

/// Map a Schmidt weight into [1/2, 1) by swapping branches when needed.
/// Returns the normalized weight and whether a swap happened.
pub fn schmidt_normalized(alpha: f64) -> (f64, bool) {
    if alpha < 0.5 {
        (1.0 - alpha, true)
    } else {
        (alpha, false)
    }
}

// ---------------------------------------------------------------------------
// Pure resources
// ---------------------------------------------------------------------------

/// Non-maximally entangled pair sqrt(a)|00> + sqrt(1-a)|11> as a ket.
///
/// Weights below 1/2 are mirrored into [1/2, 1] (the two labelings are
/// equivalent up to local bit flips); alpha = 1 degenerates to |00>.
pub fn nmes_ket(alpha: f64) -> Result<Ket> {
    check_range("alpha", alpha, 0.0, 1.0, "(0, 1]")?;
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            constraint: "(0, 1]",
        });
    }
    let (a, _) = schmidt_normalized(alpha);
    Ok(Ket::new(vec![
        re(a.sqrt()),
        re(0.0),
        re(0.0),
        re((1.0 - a).sqrt()),
    ]))
}

/// Non-maximally entangled pair as a density matrix.
pub fn nmes(alpha: f64) -> Result<DensityMatrix> {
    Ok(DensityMatrix::pure(&nmes_ket(alpha)?))
}

/// Entangled branch sqrt(d)|00> + sqrt(1-d)|11> of the one-parameter family.
pub fn family_entangled_ket(delta: f64) -> Result<Ket> {
    check_range("delta", delta, 0.5, 1.0, "[1/2, 1)")?;
    if delta >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            constraint: "[1/2, 1)",
        });
    }
    Ok(Ket::new(vec![
        re(delta.sqrt()),
        re(0.0),
        re(0.0),
        re((1.0 - delta).sqrt()),
    ]))
}

/// Bell states ordered {Phi+, Psi+, Phi-, Psi-}.
pub fn bell_ket(index: usize) -> Result<Ket> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let data = match index {
        0 => [h, 0.0, 0.0, h],
        1 => [0.0, h, h, 0.0],
        2 => [h, 0.0, 0.0, -h],
        3 => [0.0, h, -h, 0.0],
        _ => {
            return Err(Error::InvalidParameter {
                name: "index",
                value: index as f64,
                constraint: "{0, 1, 2, 3}",
            })
        }
    };
    Ok(Ket::from_reals(&data))
}

/// Bell projector, same ordering as `bell_ket`.
pub fn bell(index: usize) -> Result<DensityMatrix> {
    Ok(DensityMatrix::pure(&bell_ket(index)?))
}

// ---------------------------------------------------------------------------
// Mixed resources
// ---------------------------------------------------------------------------

/// Rank-two mixture p |01><01| + (1-p) |zeta(delta)><zeta(delta)|.
pub fn family_state(p: f64, delta: f64) -> Result<DensityMatrix> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let zeta = family_entangled_ket(delta)?;
    let product = Ket::basis(4, 0b01);
    let mat = product
        .outer()
        .scale(re(p))
        .add(&zeta.outer().scale(re(1.0 - p)));
    DensityMatrix::new(mat)
}

/// Werner state: singlet fraction F on Psi-, the rest spread evenly over the
/// other three Bell projectors.
pub fn werner(fidelity: f64) -> Result<DensityMatrix> {
    check_range("fidelity", fidelity, 0.0, 1.0, "[0, 1]")?;
    let rest = (1.0 - fidelity) / 3.0;
    let mut mat = bell_ket(3)?.outer().scale(re(fidelity));
    for idx in [0, 1, 2] {
        mat = mat.add(&bell_ket(idx)?.outer().scale(re(rest)));
    }
    DensityMatrix::new(mat)
}

// ---------------------------------------------------------------------------
// Noise channels
// ---------------------------------------------------------------------------

/// Amplitude damping with loss probability p on one qubit of a register.
pub fn adc_apply(rho: &DensityMatrix, p: f64, qubit: usize) -> Result<DensityMatrix> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let n = rho.n_qubits();
    if qubit >= n {
        return Err(Error::DimensionMismatch(format!(
            "qubit {qubit} out of range for {n}-qubit state"
        )));
    }
    let mut k0 = CMat::identity(2);
    k0[(1, 1)] = re((1.0 - p).sqrt());
    let mut k1 = CMat::zeros(2);
    k1[(0, 1)] = re(p.sqrt());

    let embed = |k: &CMat| -> CMat {
        let mut full = CMat::identity(1);
        for q in 0..n {
            let factor = if q == qubit { k.clone() } else { CMat::identity(2) };
            full = kron(&full, &factor);
        }
        full
    };
    let k0f = embed(&k0);
    let k1f = embed(&k1);
    let mut out = k0f.matmul(rho.mat()).matmul(&k0f.dagger());
    out = out.add(&k1f.matmul(rho.mat()).matmul(&k1f.dagger()));
    DensityMatrix::new(out)
}

/// Photon-loss resource: amplitude damping (loss p) applied to the second
/// qubit of sqrt(w)|01> + sqrt(1-w)|10>. The surviving entangled branch is
/// sqrt(w(1-p))|01> + sqrt(1-w)|10> with weight 1-pw, while weight pw is
/// shifted onto |00>.
pub fn photon_loss_state(p: f64, omega: f64) -> Result<DensityMatrix> {
    check_range("omega", omega, 0.0, 1.0, "(0, 1)")?;
    if omega <= 0.0 || omega >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "omega",
            value: omega,
            constraint: "(0, 1)",
        });
    }
    let psi = Ket::new(vec![
        re(0.0),
        re(omega.sqrt()),
        re((1.0 - omega).sqrt()),
        re(0.0),
    ]);
    adc_apply(&DensityMatrix::pure(&psi), p, 1)
}

/// Convex mix with white noise: (1-q) rho + q I/d.
pub fn white_noise_mix(rho: &DensityMatrix, q: f64) -> Result<DensityMatrix> {
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    let d = rho.dim();
    let mat = rho
        .mat()
        .scale(re(1.0 - q))
        .add(&CMat::identity(d).scale(re(q / d as f64)));
    DensityMatrix::new(mat)
}

/// Convex mix with vacuum: (1-q) rho + q |0..0><0..0|.
pub fn photon_loss_mix(rho: &DensityMatrix, q: f64) -> Result<DensityMatrix> {
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    let vacuum = Ket::basis(rho.dim(), 0);
    let mat = rho
        .mat()
        .scale(re(1.0 - q))
        .add(&vacuum.outer().scale(re(q)));
    DensityMatrix::new(mat)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{herm_eigs, is_density, partial_trace, trace_distance, Ket};

    #[test]
    fn nmes_is_pure_and_balanced_at_half() {
        let rho = nmes(0.5).unwrap();
        let bell0 = bell(0).unwrap();
        assert!(trace_distance(&rho, &bell0) < 1e-14);
        let eigs = nmes(0.75).unwrap().eigenvalues();
        assert!((eigs[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nmes_mirrors_small_weights() {
        let a = nmes(0.3).unwrap();
        let b = nmes(0.7).unwrap();
        assert!(trace_distance(&a, &b) < 1e-14);
        assert_eq!(schmidt_normalized(0.3), (0.7, true));
        assert_eq!(schmidt_normalized(0.6), (0.6, false));
    }

    #[test]
    fn nmes_accepts_product_limit_and_rejects_out_of_range() {
        let prod = nmes(1.0).unwrap();
        assert!(trace_distance(&prod, &DensityMatrix::pure(&Ket::basis(4, 0))) < 1e-14);
        assert!(nmes(0.0).is_err());
        assert!(nmes(-0.1).is_err());
        assert!(nmes(1.1).is_err());
    }

    #[test]
    fn family_state_spectrum_is_the_mixing_weights() {
        let rho = family_state(0.4, 0.6).unwrap();
        let eigs = rho.eigenvalues();
        assert!((eigs[0] - 0.6).abs() < 1e-12);
        assert!((eigs[1] - 0.4).abs() < 1e-12);
        assert!(eigs[2].abs() < 1e-12);
        assert!(eigs[3].abs() < 1e-12);
        assert!(is_density(rho.mat(), 1e-10));
    }

    #[test]
    fn family_state_rejects_delta_below_half() {
        assert!(family_state(0.2, 0.3).is_err());
        assert!(family_state(0.2, 1.0).is_err());
        assert!(family_state(1.2, 0.7).is_err());
    }

    #[test]
    fn bell_states_are_orthonormal() {
        for i in 0..4 {
            for j in 0..4 {
                let overlap = bell_ket(i).unwrap().dot(&bell_ket(j).unwrap()).norm();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((overlap - expect).abs() < 1e-14);
            }
        }
        assert!(bell_ket(4).is_err());
    }

    #[test]
    fn werner_is_bell_diagonal_with_expected_weights() {
        let w = werner(0.8161).unwrap();
        let eigs = w.eigenvalues();
        assert!((eigs[0] - 0.8161).abs() < 1e-12);
        for k in 1..4 {
            assert!((eigs[k] - (1.0 - 0.8161) / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn photon_loss_state_matches_direct_kraus_form() {
        // Explicit rank-two form: weight 1-pw on the damped entangled branch
        // sqrt(w(1-p))|01> + sqrt(1-w)|10>, weight pw on |00><00|.
        let (p, w) = (0.35, 0.75);
        let got = photon_loss_state(p, w).unwrap();
        let branch = Ket::new(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new((w * (1.0 - p)).sqrt(), 0.0),
            Complex64::new((1.0 - w).sqrt(), 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let surv = 1.0 - p * w;
        let expect = branch
            .normalized()
            .outer()
            .scale(Complex64::new(surv, 0.0))
            .add(&Ket::basis(4, 0).outer().scale(Complex64::new(p * w, 0.0)));
        let expect = DensityMatrix::new(expect).unwrap();
        assert!(trace_distance(&got, &expect) < 1e-12);
    }

    #[test]
    fn photon_loss_state_limits() {
        // p -> 0 leaves the pure pair; p -> 1 empties the |01> component into
        // vacuum, leaving (1-w)|10><10| + w|00><00|.
        let w: f64 = 0.75;
        let psi = Ket::new(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(w.sqrt(), 0.0),
            Complex64::new((1.0 - w).sqrt(), 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let lo = photon_loss_state(0.0, w).unwrap();
        assert!(trace_distance(&lo, &DensityMatrix::pure(&psi)) < 1e-12);
        let hi = photon_loss_state(1.0, w).unwrap();
        let expect = Ket::basis(4, 2)
            .outer()
            .scale(Complex64::new(1.0 - w, 0.0))
            .add(&Ket::basis(4, 0).outer().scale(Complex64::new(w, 0.0)));
        assert!(trace_distance(&hi, &DensityMatrix::new(expect).unwrap()) < 1e-12);
    }

    #[test]
    fn white_noise_mix_shifts_eigenvalues_affinely() {
        let rho = family_state(0.4, 0.6).unwrap();
        let q = 0.12;
        let mixed = white_noise_mix(&rho, q).unwrap();
        let eigs = mixed.eigenvalues();
        let base = rho.eigenvalues();
        for k in 0..4 {
            assert!((eigs[k] - ((1.0 - q) * base[k] + q / 4.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn photon_loss_mix_adds_vacuum_weight() {
        let rho = nmes(0.75).unwrap();
        let mixed = photon_loss_mix(&rho, 0.2).unwrap();
        assert!((mixed.mat()[(0, 0)].re - (0.8 * 0.75 + 0.2)).abs() < 1e-12);
        assert!(is_density(mixed.mat(), 1e-10));
    }

    #[test]
    fn adc_is_trace_preserving_and_completely_positive() {
        // Choi matrix of the two-qubit channel extension (damping on qubit 1):
        // PSD and Tr_out J = I/4 certify CP and TP.
        let p = 0.3;
        let d = 4usize;
        let mut choi = CMat::zeros(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut basis_ij = CMat::zeros(d);
                basis_ij[(i, j)] = Complex64::new(1.0, 0.0);
                // The channel is linear; feed the (i,j) matrix unit through the
                // Kraus pair directly.
                let mut k0 = CMat::identity(2);
                k0[(1, 1)] = Complex64::new((1.0f64 - p).sqrt(), 0.0);
                let mut k1 = CMat::zeros(2);
                k1[(0, 1)] = Complex64::new(p.sqrt(), 0.0);
                let k0f = kron(&CMat::identity(2), &k0);
                let k1f = kron(&CMat::identity(2), &k1);
                let out = k0f
                    .matmul(&basis_ij)
                    .matmul(&k0f.dagger())
                    .add(&k1f.matmul(&basis_ij).matmul(&k1f.dagger()));
                for a in 0..d {
                    for b in 0..d {
                        choi[(i * d + a, j * d + b)] = out[(a, b)] / d as f64;
                    }
                }
            }
        }
        let (eigs, _) = herm_eigs(&choi).unwrap();
        assert!(eigs.iter().all(|&l| l >= -1e-12), "Choi not PSD: {eigs:?}");
        let marginal = partial_trace(&choi, &[d, d], &[0]).unwrap();
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j { 1.0 / d as f64 } else { 0.0 };
                assert!((marginal[(i, j)] - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn adc_matches_manual_application_on_plus_state() {
        let plus = Ket::from_reals(&[0.5, 0.5, 0.5, 0.5]);
        let rho = DensityMatrix::pure(&plus);
        let out = adc_apply(&rho, 1.0, 1).unwrap();
        // Full damping on qubit 1 sends |x1> -> |x0>.
        assert!((out.mat()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((out.mat()[(2, 2)].re - 0.5).abs() < 1e-12);
        assert!(out.mat()[(1, 1)].norm() < 1e-12);
    }
}
