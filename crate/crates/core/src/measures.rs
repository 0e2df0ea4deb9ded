//! Entanglement and teleportation-quality measures for two-qubit states.
//!
//! `fef` is the best overlap with any maximally entangled state without
//! processing; `ofef_*` quantify the best overlap achievable after local
//! filtering; `otf_from_fef` converts overlap to average teleportation
//! fidelity. `teleport_avg_fidelity_mc` simulates the actual protocol.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    column, herm_eigs, kron, magic_basis, magic_basis_transform, pauli, singular_values, CMat,
    DensityMatrix, Ket,
};

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Bundle of measures for one two-qubit state. `otf` is converted from
/// `fef` (the filter-free overlap), so it lower-bounds what filtering
/// could achieve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub concurrence: f64,
    pub negativity: f64,
    pub fef: f64,
    pub ofef_upper: f64,
    pub otf: f64,
}

/// Evaluate every measure in `MeasureReport` on one state.
pub fn measure_report(rho: &DensityMatrix) -> Result<MeasureReport> {
    let c = concurrence(rho)?;
    let f = fef(rho)?;
    Ok(MeasureReport {
        concurrence: c,
        negativity: negativity(rho)?,
        fef: f,
        ofef_upper: ofef_upper_from_concurrence(c),
        otf: otf_from_fef(f),
    })
}

fn require_two_qubits(rho: &DensityMatrix, what: &str) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "{what} expects a two-qubit state, got dimension {}",
            rho.dim()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Entanglement monotones
// ---------------------------------------------------------------------------

/// Concurrence of a two-qubit state: max(0, m1 - m2 - m3 - m4) where the m_i
/// are, in decreasing order, the square roots of the eigenvalues of
/// rho (Y(x)Y rho* Y(x)Y).
///
/// Factoring rho = Psi Psi^dagger turns the m_i into the singular values of
/// Psi^T (Y(x)Y) Psi, which avoids taking square roots of a nearly singular
/// spectrum and keeps the result accurate to machine precision.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    require_two_qubits(rho, "concurrence")?;
    let (eigs, vecs) = herm_eigs(rho.mat())?;
    let mut psi = CMat::zeros(4);
    for k in 0..4 {
        let w = re(eigs[k].max(0.0).sqrt());
        for i in 0..4 {
            psi[(i, k)] = vecs[(i, k)] * w;
        }
    }
    let yy = kron(&pauli(2), &pauli(2));
    let a = psi.transpose().matmul(&yy).matmul(&psi);
    let mu = singular_values(&a);
    Ok((mu[0] - mu[1] - mu[2] - mu[3]).max(0.0))
}

/// Closed-form concurrence 2 sqrt(d(1-d)) (1-p) of the mixture of |01><01|
/// (weight p) with sqrt(d)|00> + sqrt(1-d)|11>.
pub fn concurrence_family(p: f64, delta: f64) -> f64 {
    2.0 * (delta * (1.0 - delta)).sqrt() * (1.0 - p)
}

/// Closed-form concurrence 2 sqrt(a(1-a)) of the pure pair
/// sqrt(a)|00> + sqrt(1-a)|11>.
pub fn concurrence_nmes(alpha: f64) -> f64 {
    2.0 * (alpha * (1.0 - alpha)).sqrt()
}

/// Negativity normalized so pure two-qubit states satisfy N = C:
/// -2 min(0, lambda_min of the partial transpose).
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    require_two_qubits(rho, "negativity")?;
    let pt = crate::linalg::partial_transpose(rho.mat(), 1)?;
    let (eigs, _) = herm_eigs(&pt)?;
    let min = eigs.last().copied().unwrap_or(0.0);
    Ok((-2.0 * min.min(0.0)).max(0.0))
}

// ---------------------------------------------------------------------------
// Fully entangled fraction and optimal variants
// ---------------------------------------------------------------------------

/// Fully entangled fraction: the largest overlap of `rho` with any maximally
/// entangled two-qubit state, computed as the top eigenvalue of the real part
/// of rho expressed in the magic basis.
pub fn fef(rho: &DensityMatrix) -> Result<f64> {
    Ok(fef_with_maximizer(rho)?.0)
}

/// FEF together with the maximally entangled state achieving it.
pub fn fef_with_maximizer(rho: &DensityMatrix) -> Result<(f64, Ket)> {
    require_two_qubits(rho, "fef")?;
    let m = magic_basis_transform(rho.mat())?;
    // Only the real part survives because magic-basis components of
    // maximally entangled states are real vectors.
    let mut real = CMat::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            real[(i, j)] = re(0.5 * (m[(i, j)].re + m[(j, i)].re));
        }
    }
    let (eigs, vecs) = herm_eigs(&real)?;
    let r = column(&vecs, 0);
    let u = magic_basis();
    let mut maximizer = vec![Complex64::new(0.0, 0.0); 4];
    for row in 0..4 {
        for k in 0..4 {
            maximizer[row] += u[(row, k)] * r.data()[k];
        }
    }
    Ok((eigs[0], Ket::new(maximizer).normalized()))
}

/// FEF estimated by sampling maximally entangled states (U (x) I applied to
/// the uniform Bell state, U drawn from SU(2)) and keeping the best overlap.
/// The first part of the budget samples Haar-uniformly; the remainder
/// resamples in shrinking neighborhoods of the incumbent best, so the
/// estimate converges to `fef` from below as the sample count grows.
pub fn sampled_fef(rho: &DensityMatrix, samples: usize, seed: u64) -> Result<f64> {
    require_two_qubits(rho, "sampled_fef")?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let overlap_of = |quat: &[f64; 4]| -> f64 {
        let u = su2_from_quaternion(quat);
        // (U (x) I) applied to (|00>+|11>)/sqrt2 has coefficient matrix
        // U/sqrt2: entry (i,j) multiplies |ij>.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = Ket::new(vec![
            u[(0, 0)] * h,
            u[(0, 1)] * h,
            u[(1, 0)] * h,
            u[(1, 1)] * h,
        ]);
        phi.expectation(rho.mat()).re
    };
    let mut best_quat = [1.0, 0.0, 0.0, 0.0];
    let mut best = overlap_of(&best_quat);
    let global = samples * 3 / 5;
    for _ in 0..global {
        let quat = random_unit_quaternion(&mut rng);
        let value = overlap_of(&quat);
        if value > best {
            best = value;
            best_quat = quat;
        }
    }
    let scales = [0.2, 0.05, 0.01, 0.002];
    let per_stage = (samples - global) / scales.len();
    for &eps in &scales {
        for _ in 0..per_stage {
            let mut quat = best_quat;
            for component in &mut quat {
                *component += eps * gaussian(&mut rng);
            }
            let n = quat.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-12 {
                continue;
            }
            for component in &mut quat {
                *component /= n;
            }
            let value = overlap_of(&quat);
            if value > best {
                best = value;
                best_quat = quat;
            }
        }
    }
    Ok(best)
}

/// Haar-uniform point on the unit quaternion sphere.
fn random_unit_quaternion<R: Rng>(rng: &mut R) -> [f64; 4] {
    loop {
        let q: [f64; 4] = [
            gaussian(rng),
            gaussian(rng),
            gaussian(rng),
            gaussian(rng),
        ];
        let n = (q.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if n < 1e-12 {
            continue;
        }
        return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    }
}

/// SU(2) element corresponding to a unit quaternion (a, b, c, d).
fn su2_from_quaternion(q: &[f64; 4]) -> CMat {
    let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
    CMat::from_rows(&[
        vec![Complex64::new(a, b), Complex64::new(c, d)],
        vec![Complex64::new(-c, d), Complex64::new(a, -b)],
    ])
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; uniform open intervals avoid log(0).
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Best post-filter overlap with a maximally entangled state for the
/// rank-two mixture of |01> with sqrt(d)|00>+sqrt(1-d)|11>, as a closed form
/// in the mixing weight p and concurrence C = 2 sqrt(d(1-d)) (1-p):
/// (1 + C - p)/2 when C > 2p, else (1 + C^2/(4p))/2.
pub fn ofef_family(p: f64, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            constraint: "[0, 1]",
        });
    }
    if !(0.5..1.0).contains(&delta) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            constraint: "[1/2, 1)",
        });
    }
    let c = 2.0 * (delta * (1.0 - delta)).sqrt() * (1.0 - p);
    Ok(if c > 2.0 * p {
        (1.0 + c - p) / 2.0
    } else {
        (1.0 + c * c / (4.0 * p)) / 2.0
    })
}

/// Upper bound (1 + C)/2 on any post-filter overlap with a maximally
/// entangled state, from the concurrence C of the state.
pub fn ofef_upper(rho: &DensityMatrix) -> Result<f64> {
    Ok(ofef_upper_from_concurrence(concurrence(rho)?))
}

/// Same bound stated directly in terms of the concurrence.
pub fn ofef_upper_from_concurrence(c: f64) -> f64 {
    (1.0 + c) / 2.0
}

/// Average teleportation fidelity achievable with a resource of fully
/// entangled fraction f: (2f + 1)/3.
pub fn otf_from_fef(f: f64) -> f64 {
    (2.0 * f + 1.0) / 3.0
}

// ---------------------------------------------------------------------------
// Entropy
// ---------------------------------------------------------------------------

/// Entanglement entropy (base 2) of a pure two-qubit pair with Schmidt
/// weights {alpha, 1 - alpha}: the binary entropy of alpha.
///
/// Returns 0 exactly at alpha in {0, 1}.
pub fn von_neumann_entropy_marginal(alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            constraint: "[0, 1]",
        });
    }
    if alpha == 0.0 || alpha == 1.0 {
        return Ok(0.0);
    }
    Ok(-alpha * alpha.log2() - (1.0 - alpha) * (1.0 - alpha).log2())
}

/// Von Neumann entropy (base 2) of the reduced state on one qubit,
/// computed spectrally. Cross-check for the closed form above.
pub fn entropy_of_marginal(rho: &DensityMatrix, qubit: usize) -> Result<f64> {
    if qubit >= rho.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "qubit {qubit} out of range for {}-qubit state",
            rho.n_qubits()
        )));
    }
    let marginal = rho.partial_trace_qubits(&[qubit])?;
    let (eigs, _) = herm_eigs(marginal.mat())?;
    let mut s = 0.0;
    for &l in &eigs {
        if l > 1e-15 {
            s -= l * l.log2();
        }
    }
    Ok(s.max(0.0))
}

// ---------------------------------------------------------------------------
// Teleportation simulation
// ---------------------------------------------------------------------------

/// Average fidelity of teleportation through `rho`, estimated by Monte Carlo
/// over Haar-random input qubits.
///
/// The resource is first aligned so its best maximally entangled overlap sits
/// on the uniform Bell state; the sender measures in the Bell basis and the
/// receiver applies the matching Pauli correction. The estimate converges to
/// (2 FEF + 1)/3.
pub fn teleport_avg_fidelity_mc(
    rho: &DensityMatrix,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    require_two_qubits(rho, "teleport_avg_fidelity_mc")?;
    if samples == 0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: 0.0,
            constraint: ">= 1",
        });
    }
    let (_, phi_star) = fef_with_maximizer(rho)?;
    // phi_star = (I (x) U_B)|Bell0> with U_B = sqrt2 * M^T, M the coefficient
    // matrix of phi_star. Undo U_B on the second qubit so the best overlap
    // lands on |Bell0> itself.
    let s2 = std::f64::consts::SQRT_2;
    let m = phi_star.data();
    let u_b = CMat::from_rows(&[
        vec![m[0] * s2, m[2] * s2],
        vec![m[1] * s2, m[3] * s2],
    ]);
    let align = kron(&CMat::identity(2), &u_b.dagger());
    let aligned = align.matmul(rho.mat()).matmul(&align.dagger());

    // Bell-basis elements (sigma_k (x) I)|Bell0> on the (input, sender) pair,
    // written as 2x2 coefficient matrices beta[c][a].
    // The coefficient matrix of (sigma_k (x) I)|Bell0> is sigma_k/sqrt2.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let betas: Vec<CMat> = (0..4).map(|k| pauli(k).scale(re(h))).collect();

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..samples {
        let chi = random_qubit(&mut rng);
        let mut f_input = 0.0;
        for k in 0..4 {
            let beta = &betas[k];
            // v[a] = sum_c conj(beta[c][a]) chi[c]
            let v = [
                beta[(0, 0)].conj() * chi[0] + beta[(1, 0)].conj() * chi[1],
                beta[(0, 1)].conj() * chi[0] + beta[(1, 1)].conj() * chi[1],
            ];
            // Unnormalized receiver state after outcome k:
            // out[b][b'] = sum_{a,a'} v[a] conj(v[a']) rho[(a,b),(a',b')]
            let mut out = CMat::zeros(2);
            for a in 0..2 {
                for ap in 0..2 {
                    let w = v[a] * v[ap].conj();
                    for b in 0..2 {
                        for bp in 0..2 {
                            out[(b, bp)] += w * aligned[(2 * a + b, 2 * ap + bp)];
                        }
                    }
                }
            }
            let corr = pauli(k);
            let fixed = corr.matmul(&out).matmul(&corr.dagger());
            // <chi| fixed |chi>
            let mut val = Complex64::new(0.0, 0.0);
            for b in 0..2 {
                for bp in 0..2 {
                    val += chi[b].conj() * fixed[(b, bp)] * chi[bp];
                }
            }
            f_input += val.re;
        }
        total += f_input;
    }
    Ok(total / samples as f64)
}

fn random_qubit<R: Rng>(rng: &mut R) -> [Complex64; 2] {
    loop {
        let g = [
            gaussian(rng),
            gaussian(rng),
            gaussian(rng),
            gaussian(rng),
        ];
        let n = (g.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if n < 1e-12 {
            continue;
        }
        return [
            Complex64::new(g[0] / n, g[1] / n),
            Complex64::new(g[2] / n, g[3] / n),
        ];
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bell, family_state, nmes, nmes_ket, werner};

    #[test]
    fn concurrence_of_pure_pair_is_two_sqrt_weight_product() {
        for &a in &[0.5, 0.6, 0.75, 0.9, 0.99] {
            let c = concurrence(&nmes(a).unwrap()).unwrap();
            let expect = 2.0 * (a * (1.0 - a)).sqrt();
            assert!((c - expect).abs() < 1e-10, "alpha={a}: {c} vs {expect}");
        }
    }

    #[test]
    fn concurrence_of_rank_two_mixture_scales_linearly_in_weight() {
        for &(p, d) in &[(0.0, 0.6), (0.2, 0.5), (0.4, 0.6), (0.7, 0.9), (1.0, 0.7)] {
            let c = concurrence(&family_state(p, d).unwrap()).unwrap();
            let expect = 2.0 * (d * (1.0 - d)).sqrt() * (1.0 - p);
            assert!((c - expect).abs() < 1e-10, "p={p} d={d}: {c} vs {expect}");
        }
    }

    #[test]
    fn concurrence_of_werner_state() {
        for &f in &[0.3, 0.5, 0.7, 0.8161, 1.0] {
            let c = concurrence(&werner(f).unwrap()).unwrap();
            let expect = (2.0 * f - 1.0).max(0.0);
            assert!((c - expect).abs() < 1e-10, "F={f}: {c} vs {expect}");
        }
    }

    #[test]
    fn negativity_equals_concurrence_on_pure_states() {
        for &a in &[0.5, 0.65, 0.8, 0.95] {
            let rho = nmes(a).unwrap();
            let n = negativity(&rho).unwrap();
            let c = concurrence(&rho).unwrap();
            assert!((n - c).abs() < 1e-10, "alpha={a}: N={n} C={c}");
        }
    }

    #[test]
    fn negativity_never_exceeds_concurrence_on_the_mixture() {
        for &(p, d) in &[(0.1, 0.6), (0.3, 0.75), (0.6, 0.9), (0.9, 0.55)] {
            let rho = family_state(p, d).unwrap();
            let n = negativity(&rho).unwrap();
            let c = concurrence(&rho).unwrap();
            assert!(n <= c + 1e-10, "p={p} d={d}: N={n} C={c}");
        }
    }

    #[test]
    fn fef_of_bell_and_werner_states() {
        for k in 0..4 {
            assert!((fef(&bell(k).unwrap()).unwrap() - 1.0).abs() < 1e-10);
        }
        for &f in &[0.3, 0.5, 0.8161, 1.0] {
            let got = fef(&werner(f).unwrap()).unwrap();
            let expect = f.max((1.0 - f) / 3.0);
            assert!((got - expect).abs() < 1e-10, "F={f}: {got} vs {expect}");
        }
    }

    #[test]
    fn fef_of_pure_pair_matches_half_plus_half_concurrence() {
        for &a in &[0.5, 0.7, 0.85, 0.99] {
            let rho = nmes(a).unwrap();
            let got = fef(&rho).unwrap();
            let expect = 0.5 * (1.0 + 2.0 * (a * (1.0 - a)).sqrt());
            assert!((got - expect).abs() < 1e-10, "alpha={a}: {got} vs {expect}");
        }
    }

    #[test]
    fn fef_maximizer_is_maximally_entangled_and_achieves_the_value() {
        let rho = family_state(0.3, 0.7).unwrap();
        let (f, phi) = fef_with_maximizer(&rho).unwrap();
        let overlap = phi.expectation(rho.mat()).re;
        assert!((overlap - f).abs() < 1e-10);
        // Maximal entanglement: both marginals of phi are I/2.
        let pure = DensityMatrix::pure(&phi);
        let marg = pure.partial_trace_qubits(&[0]).unwrap();
        assert!((marg.mat()[(0, 0)].re - 0.5).abs() < 1e-10);
        assert!(marg.mat()[(0, 1)].norm() < 1e-10);
    }

    #[test]
    fn filter_bound_ordering_holds_on_a_grid() {
        // fef <= ofef_family <= (1+C)/2 across the mixture family.
        for &p in &[0.05, 0.2, 0.4, 0.6, 0.8] {
            for &d in &[0.5, 0.6, 0.75, 0.9] {
                let rho = family_state(p, d).unwrap();
                let f = fef(&rho).unwrap();
                let o = ofef_family(p, d).unwrap();
                let upper = ofef_upper(&rho).unwrap();
                assert!(f <= o + 1e-10, "p={p} d={d}: fef={f} ofef={o}");
                assert!(o <= upper + 1e-10, "p={p} d={d}: ofef={o} upper={upper}");
            }
        }
    }

    #[test]
    fn ofef_family_branches_agree_at_the_crossover() {
        // At C = 2p both closed-form branches coincide at (1+p)/2.
        let d = 0.75f64;
        let s = 2.0 * (d * (1.0 - d)).sqrt();
        let p = s / (2.0 + s);
        let got = ofef_family(p, d).unwrap();
        assert!((got - (1.0 + p) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn otf_endpoints() {
        assert!((otf_from_fef(1.0) - 1.0).abs() < 1e-15);
        assert!((otf_from_fef(0.5) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn marginal_entropy_matches_spectral_computation() {
        for &a in &[0.5, 0.7, 0.9] {
            let closed = von_neumann_entropy_marginal(a).unwrap();
            let rho = nmes(a).unwrap();
            for qubit in 0..2 {
                let spectral = entropy_of_marginal(&rho, qubit).unwrap();
                assert!(
                    (closed - spectral).abs() < 1e-10,
                    "alpha={a} qubit={qubit}: {closed} vs {spectral}"
                );
            }
        }
        assert_eq!(von_neumann_entropy_marginal(0.0).unwrap(), 0.0);
        assert_eq!(von_neumann_entropy_marginal(1.0).unwrap(), 0.0);
        assert!((von_neumann_entropy_marginal(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(von_neumann_entropy_marginal(1.2).is_err());
        let prod = DensityMatrix::pure(&Ket::basis(4, 1));
        assert!(entropy_of_marginal(&prod, 0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sampled_fef_lower_bounds_and_approaches_fef() {
        let rho = family_state(0.3, 0.7).unwrap();
        let exact = fef(&rho).unwrap();
        let sampled = sampled_fef(&rho, 10_000, 7).unwrap();
        assert!(sampled <= exact + 1e-10);
        assert!(exact - sampled < 1e-3, "sampled {sampled} vs exact {exact}");
    }

    #[test]
    fn teleportation_through_perfect_resource_is_exact() {
        let f = teleport_avg_fidelity_mc(&bell(0).unwrap(), 200, 11).unwrap();
        assert!((f - 1.0).abs() < 1e-10, "got {f}");
    }

    #[test]
    fn teleportation_matches_fidelity_conversion_within_mc_error() {
        for &(p, d) in &[(0.2, 0.75), (0.5, 0.6)] {
            let rho = family_state(p, d).unwrap();
            let expect = otf_from_fef(fef(&rho).unwrap());
            let got = teleport_avg_fidelity_mc(&rho, 20_000, 3).unwrap();
            assert!(
                (got - expect).abs() < 5e-3,
                "p={p} d={d}: mc {got} vs analytic {expect}"
            );
        }
    }

    #[test]
    fn teleportation_through_rotated_resource_still_optimal() {
        // Local rotation on the receiver side must not change the average
        // fidelity: the protocol re-aligns via the best entangled overlap.
        let base = nmes_ket(0.8).unwrap();
        let u = CMat::from_rows(&[
            vec![
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.8),
            ],
            vec![
                Complex64::new(0.0, 0.8),
                Complex64::new(0.6, 0.0),
            ],
        ]);
        let full = kron(&CMat::identity(2), &u);
        let rotated = DensityMatrix::new(
            full.matmul(&base.outer()).matmul(&full.dagger()),
        )
        .unwrap();
        let f_rot = teleport_avg_fidelity_mc(&rotated, 20_000, 5).unwrap();
        let expect = otf_from_fef(fef(&DensityMatrix::pure(&base)).unwrap());
        assert!((f_rot - expect).abs() < 5e-3, "{f_rot} vs {expect}");
    }
}
