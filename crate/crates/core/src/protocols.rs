//! Entanglement swapping on repeater chains with one noisy link.
//!
//! The building blocks are a tilted projective basis and a noisy Bell POVM,
//! a generic Born-rule engine (`measure_node`), closed forms for the
//! single-node post-measurement ensemble, feasibility regions for recovering
//! the noisy link's best fidelity, and reductions that fold a chain of pure
//! pairs into one or two effective resources.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    column, herm_eigs, kron, partial_trace, trace_distance, CMat, DensityMatrix, Ket,
};
use crate::measures::{concurrence_family, concurrence_nmes, ofef_family};
use crate::scenario::{ChainScenario, NodeSpec};
use crate::states::{bell_ket, family_state, nmes_ket};

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, constraint: &'static str) -> Result<()> {
    if !(lo..=hi).contains(&value) || value.is_nan() {
        return Err(Error::InvalidParameter {
            name,
            value,
            constraint,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Measurement bases
// ---------------------------------------------------------------------------

/// Projective basis of four entangled vectors tilted by a Schmidt weight
/// beta: {sqrt(b)|00> + sqrt(1-b)|11>, sqrt(1-b)|00> - sqrt(b)|11>,
/// sqrt(b)|01> + sqrt(1-b)|10>, sqrt(1-b)|01> - sqrt(b)|10>}.
#[derive(Debug, Clone)]
pub struct PvmBasis {
    beta: f64,
    vectors: [Ket; 4],
}

impl PvmBasis {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn vectors(&self) -> &[Ket; 4] {
        &self.vectors
    }
}

/// Build the tilted projective basis for beta in [1/2, 1). At beta = 1/2 it
/// is the Bell basis up to signs and ordering.
pub fn pvm_basis(beta: f64) -> Result<PvmBasis> {
    if !(0.5..1.0).contains(&beta) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            constraint: "[1/2, 1)",
        });
    }
    let b = beta.sqrt();
    let c = (1.0 - beta).sqrt();
    let vec4 = |a0: f64, a1: f64, a2: f64, a3: f64| Ket::from_reals(&[a0, a1, a2, a3]);
    Ok(PvmBasis {
        beta,
        vectors: [
            vec4(b, 0.0, 0.0, c),
            vec4(c, 0.0, 0.0, -b),
            vec4(0.0, b, c, 0.0),
            vec4(0.0, c, -b, 0.0),
        ],
    })
}

/// Bell measurement whose two classical outcome bits each flip independently
/// with probability eta. Element i mixes the Bell projectors with weights
/// eta^k (1-eta)^(2-k), k = number of bits in which i and j differ.
#[derive(Debug, Clone)]
pub struct NoisyBellPovm {
    eta: f64,
    elements: [CMat; 4],
}

impl NoisyBellPovm {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn elements(&self) -> &[CMat; 4] {
        &self.elements
    }
}

/// Build the noisy Bell POVM for eta in [0, 1/2].
pub fn noisy_bell_povm(eta: f64) -> Result<NoisyBellPovm> {
    check_range("eta", eta, 0.0, 0.5, "[0, 1/2]")?;
    let projectors: Vec<CMat> = (0..4).map(|j| bell_ket(j).unwrap().outer()).collect();
    let weight = |x: usize| {
        let k = (x & 1) + ((x >> 1) & 1);
        eta.powi(k as i32) * (1.0 - eta).powi(2 - k as i32)
    };
    let mut elements = Vec::with_capacity(4);
    for i in 0..4 {
        let mut e = CMat::zeros(4);
        for (j, proj) in projectors.iter().enumerate() {
            e = e.add(&proj.scale(re(weight(i ^ j))));
        }
        elements.push(e);
    }
    Ok(NoisyBellPovm {
        eta,
        elements: elements.try_into().unwrap(),
    })
}

/// Either measurement a node can perform.
#[derive(Debug, Clone)]
pub enum NodeMeasurement {
    Pvm(PvmBasis),
    NoisyBell(NoisyBellPovm),
}

impl NodeMeasurement {
    /// The four effect operators, in outcome order.
    pub fn effects(&self) -> Vec<CMat> {
        match self {
            NodeMeasurement::Pvm(basis) => basis.vectors.iter().map(Ket::outer).collect(),
            NodeMeasurement::NoisyBell(povm) => povm.elements.to_vec(),
        }
    }
}

impl From<PvmBasis> for NodeMeasurement {
    fn from(basis: PvmBasis) -> Self {
        NodeMeasurement::Pvm(basis)
    }
}

impl From<NoisyBellPovm> for NodeMeasurement {
    fn from(povm: NoisyBellPovm) -> Self {
        NodeMeasurement::NoisyBell(povm)
    }
}

/// Materialize a scenario node description into a measurement.
pub fn node_measurement(spec: &NodeSpec) -> Result<NodeMeasurement> {
    match spec {
        NodeSpec::Pvm { beta } => Ok(pvm_basis(*beta)?.into()),
        NodeSpec::NoisyBell { eta } => Ok(noisy_bell_povm(*eta)?.into()),
    }
}

// ---------------------------------------------------------------------------
// Born-rule engine
// ---------------------------------------------------------------------------

/// One measurement outcome: its label, probability, and the state left on
/// the unmeasured qubits (omitted when the probability vanishes).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub label: usize,
    pub probability: f64,
    pub state: Option<DensityMatrix>,
}

/// The full outcome ensemble of one node measurement.
#[derive(Debug, Clone)]
pub struct OutcomeEnsemble {
    pub outcomes: Vec<Outcome>,
}

impl OutcomeEnsemble {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    /// Probability-weighted average of a per-state score, skipping
    /// zero-probability outcomes.
    pub fn average<F>(&self, mut score: F) -> Result<f64>
    where
        F: FnMut(&DensityMatrix) -> Result<f64>,
    {
        let mut acc = 0.0;
        for outcome in &self.outcomes {
            if outcome.probability <= 0.0 {
                continue;
            }
            let state = outcome.state.as_ref().ok_or_else(|| {
                Error::InvalidScenario(format!(
                    "outcome {} has positive probability but no state",
                    outcome.label
                ))
            })?;
            acc += outcome.probability * score(state)?;
        }
        Ok(acc)
    }
}

const ZERO_PROB: f64 = 1e-12;

fn embed_pair_operator(op: &CMat, first: usize, n_qubits: usize) -> CMat {
    let left = CMat::identity(1 << first);
    let right = CMat::identity(1 << (n_qubits - first - 2));
    kron(&kron(&left, op), &right)
}

/// Measure the adjacent qubit pair `node_qubits` of a chain state. Outcome i
/// has probability Tr[(M_i (x) I) rho]; its state is the normalized partial
/// trace of (M_i (x) I) rho over the measured pair, which for a mixed POVM
/// element is the corresponding weighted mixture of projector outcomes.
pub fn measure_node(
    state: &DensityMatrix,
    node_qubits: (usize, usize),
    measurement: &NodeMeasurement,
) -> Result<OutcomeEnsemble> {
    let n = state.n_qubits();
    let (a, b) = node_qubits;
    if b != a + 1 || b >= n {
        return Err(Error::DimensionMismatch(format!(
            "node qubits ({a}, {b}) are not an adjacent pair inside {n} qubits"
        )));
    }
    if n < 3 {
        return Err(Error::DimensionMismatch(format!(
            "measuring qubits ({a}, {b}) of a {n}-qubit state leaves nothing"
        )));
    }
    let dims = vec![2usize; n];
    let keep: Vec<usize> = (0..n).filter(|q| *q != a && *q != b).collect();
    let mut outcomes = Vec::with_capacity(4);
    for (label, effect) in measurement.effects().into_iter().enumerate() {
        let embedded = embed_pair_operator(&effect, a, n);
        let probability = embedded.trace_product(state.mat()).re;
        if probability <= ZERO_PROB {
            outcomes.push(Outcome {
                label,
                probability: 0.0,
                state: None,
            });
            continue;
        }
        let product = embedded.matmul(state.mat());
        let mut reduced = partial_trace(&product, &dims, &keep)?;
        reduced = reduced.scale(re(1.0 / probability));
        reduced.hermitize();
        outcomes.push(Outcome {
            label,
            probability,
            state: Some(DensityMatrix::new(reduced)?),
        });
    }
    Ok(OutcomeEnsemble { outcomes })
}

// ---------------------------------------------------------------------------
// Single-node closed forms
// ---------------------------------------------------------------------------

/// Post-measurement ensemble of the single-node swap in closed form.
///
/// Setup: the noisy mixture rho(p, delta) on qubits (0,1), the pure resource
/// pair psi(alpha) on (2,3), and the tilted projective measurement (weight
/// beta) on the middle pair (1,2). Each outcome on the end pair is again a
/// mixture of one entangled pure state with an orthogonal basis product.
pub fn post_states_closed_form(
    p: f64,
    delta: f64,
    alpha: f64,
    beta: f64,
) -> Result<OutcomeEnsemble> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    if !(0.5..1.0).contains(&delta) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            constraint: "[1/2, 1)",
        });
    }
    if !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            constraint: "(0, 1]",
        });
    }
    if !(0.5..1.0).contains(&beta) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            constraint: "[1/2, 1)",
        });
    }
    let (a, b, d) = (alpha, beta, delta);
    // Entangled-component weights, their |00>/|11> or |01>/|10> amplitudes,
    // and the product component for each of the four outcomes.
    let entangled: [([f64; 2], [usize; 2]); 4] = [
        ([a * b * d, (1.0 - a) * (1.0 - b) * (1.0 - d)], [0, 3]),
        ([a * (1.0 - b) * d, -((1.0 - a) * b * (1.0 - d))], [0, 3]),
        ([(1.0 - a) * b * d, a * (1.0 - b) * (1.0 - d)], [1, 2]),
        ([(1.0 - a) * (1.0 - b) * d, -(a * b * (1.0 - d))], [1, 2]),
    ];
    let product_weight = [
        (1.0 - a) * (1.0 - b),
        (1.0 - a) * b,
        a * (1.0 - b),
        a * b,
    ];
    let product_index = [1usize, 1, 0, 0];
    let mut outcomes = Vec::with_capacity(4);
    for i in 0..4 {
        let ([w0, w1], [i0, i1]) = entangled[i];
        let weight = w0.abs() + w1.abs();
        let probability = (1.0 - p) * weight + p * product_weight[i];
        if probability <= ZERO_PROB {
            outcomes.push(Outcome {
                label: i,
                probability: 0.0,
                state: None,
            });
            continue;
        }
        let mut data = vec![Complex64::new(0.0, 0.0); 4];
        data[i0] = re(w0.abs().sqrt());
        data[i1] = re(w1.signum() * w1.abs().sqrt());
        let kappa = Ket::new(data).normalized();
        let mat = kappa
            .outer()
            .scale(re((1.0 - p) * weight / probability))
            .add(
                &Ket::basis(4, product_index[i])
                    .outer()
                    .scale(re(p * product_weight[i] / probability)),
            );
        outcomes.push(Outcome {
            label: i,
            probability,
            state: Some(DensityMatrix::new(mat)?),
        });
    }
    Ok(OutcomeEnsemble { outcomes })
}

// ---------------------------------------------------------------------------
// Family-form extraction
// ---------------------------------------------------------------------------

/// Local change of basis taking a state to the canonical mixture of
/// |01><01| with sqrt(d)|00> + sqrt(1-d)|11>: apply unitary_a (x) unitary_b,
/// then swap the two qubits if `swapped` is set.
#[derive(Debug, Clone)]
pub struct LocalFrame {
    pub unitary_a: CMat,
    pub unitary_b: CMat,
    pub swapped: bool,
}

fn swap_gate() -> CMat {
    let mut s = CMat::zeros(4);
    s[(0, 0)] = re(1.0);
    s[(1, 2)] = re(1.0);
    s[(2, 1)] = re(1.0);
    s[(3, 3)] = re(1.0);
    s
}

impl LocalFrame {
    /// Conjugate a two-qubit state into the canonical frame.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let u = kron(&self.unitary_a, &self.unitary_b);
        let mut m = u.matmul(rho.mat()).matmul(&u.dagger());
        if self.swapped {
            let s = swap_gate();
            m = s.matmul(&m).matmul(&s);
        }
        m.hermitize();
        DensityMatrix::new(m)
    }
}

/// Canonical parameters of a state that is, up to local bases, a mixture of
/// a basis product with an orthogonal entangled pure pair.
#[derive(Debug, Clone)]
pub struct FamilyParams {
    pub p_eff: f64,
    pub delta_eff: f64,
    pub frame: LocalFrame,
}

const FORM_TOL: f64 = 1e-9;

/// 2x2 coefficient matrix of a two-qubit ket: m[i][j] = <ij|k>.
fn ket_matrix(k: &Ket) -> CMat {
    let mut m = CMat::zeros(2);
    m[(0, 0)] = k.data()[0];
    m[(0, 1)] = k.data()[1];
    m[(1, 0)] = k.data()[2];
    m[(1, 1)] = k.data()[3];
    m
}

fn det2(m: &CMat) -> Complex64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// z-linear coefficient of det(m1 + z m2).
fn mixed_det(m1: &CMat, m2: &CMat) -> Complex64 {
    m1[(0, 0)] * m2[(1, 1)] + m2[(0, 0)] * m1[(1, 1)]
        - m1[(0, 1)] * m2[(1, 0)]
        - m2[(0, 1)] * m1[(1, 0)]
}

/// Single-qubit vector orthogonal to k.
fn perp2(k: &[Complex64; 2]) -> [Complex64; 2] {
    [-k[1].conj(), k[0].conj()]
}

/// <x (x) y | w> for single-qubit vectors x, y and a two-qubit w with
/// coefficient matrix wm.
fn product_overlap(x: &[Complex64; 2], y: &[Complex64; 2], wm: &CMat) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += x[i].conj() * y[j].conj() * wm[(i, j)];
        }
    }
    acc
}

/// Split a product ket into its single-qubit factors.
fn product_factors(u: &Ket) -> ([Complex64; 2], [Complex64; 2]) {
    let mu = ket_matrix(u);
    let gram = mu.matmul(&mu.dagger());
    let (_, vecs) = herm_eigs(&gram).expect("2x2 Hermitian");
    let x = [vecs[(0, 0)], vecs[(1, 0)]];
    // y = (x^dag mu) recovers the second factor including its phase.
    let mut y = [Complex64::new(0.0, 0.0); 2];
    for j in 0..2 {
        for i in 0..2 {
            y[j] += x[i].conj() * mu[(i, j)];
        }
    }
    let norm = (y[0].norm_sqr() + y[1].norm_sqr()).sqrt();
    ([x[0], x[1]], [y[0] / norm, y[1] / norm])
}

fn row_matrix(r0: &[Complex64; 2], r1: &[Complex64; 2]) -> CMat {
    let mut m = CMat::zeros(2);
    m[(0, 0)] = r0[0];
    m[(0, 1)] = r0[1];
    m[(1, 0)] = r1[0];
    m[(1, 1)] = r1[1];
    m
}

fn conj2(v: &[Complex64; 2]) -> [Complex64; 2] {
    [v[0].conj(), v[1].conj()]
}

fn scale2(v: &[Complex64; 2], s: Complex64) -> [Complex64; 2] {
    [v[0] * s, v[1] * s]
}

/// Align a product direction u and an entangled partner w into the canonical
/// frame. Returns the frame and the larger Schmidt weight of w.
fn align_family_frame(u: &Ket, w: &Ket) -> Result<(LocalFrame, f64)> {
    let (x, y) = product_factors(u);
    let xp = perp2(&x);
    let yp = perp2(&y);
    let wm = ket_matrix(w);
    let s01 = product_overlap(&x, &yp, &wm);
    let s10 = product_overlap(&xp, &y, &wm);
    let resid = product_overlap(&xp, &yp, &wm).norm() + product_overlap(&x, &y, &wm).norm();
    if resid > FORM_TOL {
        return Err(Error::NotFamilyForm {
            reason: format!(
                "entangled part is not supported on the product part's complement (residual {resid:.2e})"
            ),
        });
    }
    let (d0, d1) = (s01.norm_sqr(), s10.norm_sqr());
    let total = d0 + d1;
    if total < FORM_TOL {
        return Err(Error::NotFamilyForm {
            reason: "entangled component vanishes".into(),
        });
    }
    let phase = |z: Complex64| {
        if z.norm() < 1e-15 {
            re(1.0)
        } else {
            (z / z.norm()).conj()
        }
    };
    // Send the product part to |01> (or to |10> when the larger Schmidt
    // weight sits on the crossed pattern; a final swap restores |01>).
    if d0 >= d1 {
        let ua = row_matrix(&scale2(&conj2(&x), phase(s01)), &scale2(&conj2(&xp), phase(s10)));
        let ub = row_matrix(&conj2(&yp), &conj2(&y));
        Ok((
            LocalFrame {
                unitary_a: ua,
                unitary_b: ub,
                swapped: false,
            },
            d0 / total,
        ))
    } else {
        let ua = row_matrix(&scale2(&conj2(&xp), phase(s10)), &scale2(&conj2(&x), phase(s01)));
        let ub = row_matrix(&conj2(&y), &conj2(&yp));
        Ok((
            LocalFrame {
                unitary_a: ua,
                unitary_b: ub,
                swapped: true,
            },
            d1 / total,
        ))
    }
}

/// Extract (p_eff, delta_eff, frame) from a rank <= 2 state consisting of an
/// entangled pure component plus an orthogonal basis product in some local
/// frame. p_eff is the product weight, delta_eff the larger Schmidt weight
/// of the entangled component, and frame maps the state onto the canonical
/// mixture of |01><01| with sqrt(d)|00> + sqrt(1-d)|11>.
pub fn family_params_extract(rho: &DensityMatrix) -> Result<FamilyParams> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "family extraction expects a two-qubit state, got dimension {}",
            rho.dim()
        )));
    }
    let (eigs, vecs) = herm_eigs(rho.mat())?;
    if eigs[2] > FORM_TOL {
        return Err(Error::NotFamilyForm {
            reason: format!("rank exceeds 2 (third eigenvalue {:.2e})", eigs[2]),
        });
    }
    let v1 = column(&vecs, 0);
    let v2 = column(&vecs, 1);

    if eigs[1] <= FORM_TOL {
        // Pure state: either a lone product (p_eff = 1) or a lone entangled
        // pair (p_eff = 0).
        let m = ket_matrix(&v1);
        if det2(&m).norm() * 2.0 <= FORM_TOL {
            let (x, y) = product_factors(&v1);
            let ua = row_matrix(&conj2(&x), &conj2(&perp2(&x)));
            let ub = row_matrix(&conj2(&perp2(&y)), &conj2(&y));
            return Ok(FamilyParams {
                p_eff: 1.0,
                delta_eff: 0.5,
                frame: LocalFrame {
                    unitary_a: ua,
                    unitary_b: ub,
                    swapped: false,
                },
            });
        }
        let (frame, delta_eff) = schmidt_frame(&v1)?;
        return Ok(FamilyParams {
            p_eff: 0.0,
            delta_eff,
            frame,
        });
    }

    // Rank 2: find the product direction(s) u = v1 + z v2 in the support by
    // solving det(M1 + z M2) = 0, then test the orthogonal partner.
    let m1 = ket_matrix(&v1);
    let m2 = ket_matrix(&v2);
    let a = det2(&m2);
    let b = mixed_det(&m1, &m2);
    let c = det2(&m1);
    let mut candidates: Vec<Ket> = Vec::new();
    if a.norm() > 1e-13 {
        let disc = (b * b - a * c * re(4.0)).sqrt();
        for z in [(-b + disc) / (a * re(2.0)), (-b - disc) / (a * re(2.0))] {
            candidates.push(v1.add(&v2.scale(z)).normalized());
        }
    } else {
        if b.norm() > 1e-13 {
            candidates.push(v1.add(&v2.scale(-c / b)).normalized());
        }
        // Degree drop: v2 itself is a product direction.
        candidates.push(v2.clone());
        if c.norm() <= 1e-13 {
            candidates.push(v1.clone());
        }
    }

    let mut separable_only = false;
    for u in &candidates {
        if det2(&ket_matrix(u)).norm() * 2.0 > 1e-8 {
            continue;
        }
        // Orthonormal partner inside the support.
        let mut w = v1.add(&u.scale(-u.dot(&v1)));
        if w.norm() < 1e-6 {
            w = v2.add(&u.scale(-u.dot(&v2)));
        }
        let w = w.normalized();
        let cross = u.dot(&w.apply(rho.mat()));
        if cross.norm() > FORM_TOL {
            continue;
        }
        if det2(&ket_matrix(&w)).norm() * 2.0 <= FORM_TOL {
            separable_only = true;
            continue;
        }
        let p_eff = u.expectation(rho.mat()).re.clamp(0.0, 1.0);
        let (frame, delta_eff) = align_family_frame(u, &w)?;
        let params = FamilyParams {
            p_eff,
            delta_eff,
            frame,
        };
        // Final acceptance: the frame must reproduce the canonical mixture.
        let canonical = canonical_family(p_eff, delta_eff)?;
        if trace_distance(&params.frame.apply(rho)?, &canonical) <= 10.0 * FORM_TOL {
            return Ok(params);
        }
    }
    Err(Error::NotFamilyForm {
        reason: if separable_only {
            "support contains no entangled component".into()
        } else {
            "support does not split into an orthogonal product and entangled pair".into()
        },
    })
}

/// Canonical mixture p |01><01| + (1-p) |z(d)><z(d)| without the domain
/// restrictions of the public constructor (extraction can hit p = 1 paired
/// with any d, and d arbitrarily close to 1).
fn canonical_family(p: f64, delta: f64) -> Result<DensityMatrix> {
    let mut zeta = vec![Complex64::new(0.0, 0.0); 4];
    zeta[0] = re(delta.sqrt());
    zeta[3] = re((1.0 - delta).sqrt());
    let zeta = Ket::new(zeta);
    let mat = Ket::basis(4, 1)
        .outer()
        .scale(re(p))
        .add(&zeta.outer().scale(re(1.0 - p)));
    DensityMatrix::new(mat)
}

/// Schmidt frame of a pure entangled two-qubit ket: returns the local frame
/// sending it to sqrt(d)|00> + sqrt(1-d)|11> and the larger weight d.
fn schmidt_frame(w: &Ket) -> Result<(LocalFrame, f64)> {
    let wm = ket_matrix(w);
    let gram = wm.matmul(&wm.dagger());
    let (_, vecs) = herm_eigs(&gram)?;
    let mut rows_a = Vec::with_capacity(2);
    let mut rows_b = Vec::with_capacity(2);
    let mut weights = [0.0f64; 2];
    for k in 0..2 {
        let xk = [vecs[(0, k)], vecs[(1, k)]];
        let mut yk = [Complex64::new(0.0, 0.0); 2];
        for j in 0..2 {
            for i in 0..2 {
                yk[j] += xk[i].conj() * wm[(i, j)];
            }
        }
        let s = (yk[0].norm_sqr() + yk[1].norm_sqr()).sqrt();
        weights[k] = s * s;
        if s < 1e-12 {
            // Fill the defective row with the orthogonal complement.
            let prev: [Complex64; 2] = [rows_b[0], rows_b[1]];
            let p = perp2(&conj2(&[prev[0].conj(), prev[1].conj()]));
            yk = [p[0], p[1]];
            rows_b.extend_from_slice(&conj2(&yk));
        } else {
            rows_b.extend_from_slice(&conj2(&[yk[0] / s, yk[1] / s]));
        }
        rows_a.extend_from_slice(&conj2(&xk));
    }
    let ua = row_matrix(&[rows_a[0], rows_a[1]], &[rows_a[2], rows_a[3]]);
    let ub = row_matrix(&[rows_b[0], rows_b[1]], &[rows_b[2], rows_b[3]]);
    let total = weights[0] + weights[1];
    Ok((
        LocalFrame {
            unitary_a: ua,
            unitary_b: ub,
            swapped: false,
        },
        weights[0] / total,
    ))
}

// ---------------------------------------------------------------------------
// Feasibility
// ---------------------------------------------------------------------------

/// Largest resource weight alpha for which the single-node protocol can
/// recover the noisy link's best fidelity: p^2 / (p^2 + d(1-d)(1-p)^2).
pub fn max_feasible_alpha(p: f64, delta: f64) -> f64 {
    let k = delta * (1.0 - delta);
    p * p / (p * p + k * (1.0 - p) * (1.0 - p))
}

/// Largest measurement weight beta compatible with a given alpha:
/// (1-a) p^2 / ((1-a) p^2 + a d(1-d)(1-p)^2).
pub fn max_feasible_beta(p: f64, delta: f64, alpha: f64) -> f64 {
    let k = delta * (1.0 - delta);
    let num = (1.0 - alpha) * p * p;
    num / (num + alpha * k * (1.0 - p) * (1.0 - p))
}

/// Per-outcome and overall feasibility of recovering the noisy link's best
/// fidelity with one swap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Outcome-by-outcome condition: the post-measurement state's
    /// concurrence stays within twice its product weight.
    pub outcome_feasible: [bool; 4],
    /// All four outcome conditions hold.
    pub feasible: bool,
    /// p <= 1/3, where feasibility additionally needs delta above a floor.
    pub small_p_branch: bool,
    /// The delta floor active in the small-p branch.
    pub delta_floor: Option<f64>,
    /// Largest feasible alpha at (p, delta).
    pub alpha_bound: f64,
    /// Largest feasible beta at (p, delta, alpha).
    pub beta_bound: f64,
}

/// Evaluate the four outcome conditions of the single-node swap, all taken
/// non-strictly, together with the consolidated thresholds.
pub fn feasibility_single_node(
    p: f64,
    delta: f64,
    alpha: f64,
    beta: f64,
) -> Result<FeasibilityReport> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    if !(0.5..1.0).contains(&delta) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            constraint: "[1/2, 1)",
        });
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            constraint: "(0, 1)",
        });
    }
    if !(0.0 < beta && beta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            constraint: "(0, 1)",
        });
    }
    let (a, b) = (alpha, beta);
    let lhs = delta * (1.0 - delta) * (1.0 - p) * (1.0 - p);
    let rhs = p * p;
    // Outcome i is feasible when its entangled weight product times
    // d(1-d)(1-p)^2 stays below its product weights times p^2.
    let outcome_feasible = [
        a * b * lhs <= (1.0 - a) * (1.0 - b) * rhs,
        a * (1.0 - b) * lhs <= (1.0 - a) * b * rhs,
        (1.0 - a) * b * lhs <= a * (1.0 - b) * rhs,
        (1.0 - a) * (1.0 - b) * lhs <= a * b * rhs,
    ];
    let small_p_branch = p <= 1.0 / 3.0;
    let delta_floor = if small_p_branch && p < 1.0 {
        let t = 1.0 - 4.0 * p * p / ((1.0 - p) * (1.0 - p));
        Some(0.5 * (1.0 + t.max(0.0).sqrt()))
    } else {
        None
    };
    Ok(FeasibilityReport {
        outcome_feasible,
        feasible: outcome_feasible.iter().all(|&ok| ok),
        small_p_branch,
        delta_floor,
        alpha_bound: max_feasible_alpha(p, delta),
        beta_bound: max_feasible_beta(p, delta, alpha),
    })
}

/// Probability-weighted best post-filter fidelity over the four outcomes of
/// the single-node swap. When the feasibility conditions hold this equals
/// the noisy link's own best fidelity (1 + d(1-d)(1-p)^2/p)/2; otherwise it
/// falls below it.
pub fn average_ofef_single_node(p: f64, delta: f64, alpha: f64, beta: f64) -> Result<f64> {
    let ensemble = post_states_closed_form(p, delta, alpha, beta)?;
    ensemble.average(|state| match family_params_extract(state) {
        Ok(params) => best_family_fidelity(params.p_eff, params.delta_eff),
        Err(Error::NotFamilyForm { .. })
            if crate::measures::concurrence(state)? <= FORM_TOL =>
        {
            // Separable support: the best overlap with any maximally
            // entangled state after filtering is exactly 1/2.
            Ok(0.5)
        }
        Err(e) => Err(e),
    })
}

/// Best post-filter fidelity of the canonical mixture, valid for any
/// delta in [1/2, 1] (the public closed form stops at delta < 1).
fn best_family_fidelity(p: f64, delta: f64) -> Result<f64> {
    if delta >= 1.0 {
        return Ok(0.5);
    }
    ofef_family(p, delta.max(0.5))
}

// ---------------------------------------------------------------------------
// Chain folding
// ---------------------------------------------------------------------------

/// Swap two pure pairs into one: the output pair's concurrence is the
/// product of the input concurrences, giving Schmidt weight
/// (1 + sqrt(1 - C1^2 C2^2))/2.
pub fn rpbes_combine(alpha1: f64, alpha2: f64) -> Result<f64> {
    check_range("alpha1", alpha1, 0.5, 1.0, "[1/2, 1]")?;
    check_range("alpha2", alpha2, 0.5, 1.0, "[1/2, 1]")?;
    let c = concurrence_nmes(alpha1) * concurrence_nmes(alpha2);
    Ok(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()))
}

/// Fold a run of pure pairs into one effective pair. The empty run folds to
/// the maximally entangled weight 1/2, the neutral element.
pub fn fold_alphas(alphas: &[f64]) -> Result<f64> {
    let mut c = 1.0;
    for &alpha in alphas {
        if !(0.0 < alpha && alpha <= 1.0) || alpha.is_nan() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                constraint: "(0, 1]",
            });
        }
        c *= concurrence_nmes(alpha);
    }
    Ok(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()))
}

/// Result of folding a chain whose noisy link sits at an end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndReduction {
    /// Effective Schmidt weight of the folded free segments.
    pub alpha_prime: f64,
    pub p: f64,
    pub delta: f64,
    /// Largest alpha_prime that can still recover the noisy link's best
    /// fidelity.
    pub alpha_threshold: f64,
    pub feasible: bool,
}

/// Fold all free segments of a chain with the noisy link at either end into
/// one effective pair and test it against the single-swap threshold.
pub fn reduce_chain_end_noise(scenario: &ChainScenario) -> Result<EndReduction> {
    scenario.validate()?;
    scenario.require_bell_nodes()?;
    let last = scenario.segments.len();
    if scenario.noisy_index != 1 && scenario.noisy_index != last {
        return Err(Error::InvalidScenario(format!(
            "noisy segment at interior position {}; use the two-node reduction",
            scenario.noisy_index
        )));
    }
    let (p, delta) = scenario.noisy_family_params()?;
    let (left, right) = scenario.split_free_alphas()?;
    let free = if scenario.noisy_index == 1 { right } else { left };
    let alpha_prime = fold_alphas(&free)?;
    let alpha_threshold = max_feasible_alpha(p, delta);
    Ok(EndReduction {
        alpha_prime,
        p,
        delta,
        alpha_threshold,
        feasible: alpha_prime <= alpha_threshold,
    })
}

/// Can two effective pairs flanking the noisy link recover its best
/// fidelity? Cross-multiplied form of
/// a_l a_r / ((1-a_l)(1-a_r)) <= p^2 / (d(1-d)(1-p)^2), symmetric in the
/// two weights and safe at the boundary weights 1/2 and 1.
pub fn two_node_feasibility(p: f64, delta: f64, alpha_l: f64, alpha_r: f64) -> Result<bool> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    if !(0.5..1.0).contains(&delta) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            constraint: "[1/2, 1)",
        });
    }
    check_range("alpha_l", alpha_l, 0.5, 1.0, "[1/2, 1]")?;
    check_range("alpha_r", alpha_r, 0.5, 1.0, "[1/2, 1]")?;
    let k = delta * (1.0 - delta);
    Ok(alpha_l * alpha_r * k * (1.0 - p) * (1.0 - p)
        <= (1.0 - alpha_l) * (1.0 - alpha_r) * p * p)
}

/// Result of folding a chain with an interior noisy link down to two
/// effective pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoNodeReduction {
    pub alpha_left: f64,
    pub alpha_right: f64,
    pub p: f64,
    pub delta: f64,
    pub feasible: bool,
}

/// Fold the free segments on each side of the noisy link independently.
/// An end position leaves one side as the neutral weight 1/2, recovering
/// the end-noise reduction.
pub fn reduce_chain_mid_noise(scenario: &ChainScenario) -> Result<TwoNodeReduction> {
    scenario.validate()?;
    scenario.require_bell_nodes()?;
    let (p, delta) = scenario.noisy_family_params()?;
    let (left, right) = scenario.split_free_alphas()?;
    let alpha_left = fold_alphas(&left)?;
    let alpha_right = fold_alphas(&right)?;
    Ok(TwoNodeReduction {
        alpha_left,
        alpha_right,
        p,
        delta,
        feasible: two_node_feasibility(p, delta, alpha_left, alpha_right)?,
    })
}

// ---------------------------------------------------------------------------
// Two-node cascade
// ---------------------------------------------------------------------------

/// One joint outcome of the two-measurement cascade: the labels of the first
/// and second node measurements, the joint probability, and the end-to-end
/// state (omitted when the probability vanishes).
#[derive(Debug, Clone)]
pub struct CascadeOutcome {
    pub first: usize,
    pub second: usize,
    pub probability: f64,
    pub state: Option<DensityMatrix>,
}

/// Run the reduced three-segment protocol end to end: psi(alpha_l) on the
/// left, the noisy mixture rho(p, delta) in the middle, psi(alpha_r) on the
/// right. A Bell measurement first joins the noisy link to the right
/// segment, a second one then joins the left segment to that result,
/// leaving sixteen joint outcomes on the end pair.
pub fn two_node_cascade(
    p: f64,
    delta: f64,
    alpha_l: f64,
    alpha_r: f64,
) -> Result<Vec<CascadeOutcome>> {
    let left = nmes_ket(alpha_l)?;
    let right = nmes_ket(alpha_r)?;
    let mid = family_state(p, delta)?;
    let total = DensityMatrix::new(kron(
        &kron(&left.outer(), mid.mat()),
        &right.outer(),
    ))?;
    let bell_node = NodeMeasurement::from(pvm_basis(0.5)?);
    let first = measure_node(&total, (3, 4), &bell_node)?;
    let mut outcomes = Vec::with_capacity(16);
    for o1 in &first.outcomes {
        match &o1.state {
            None => {
                for second in 0..4 {
                    outcomes.push(CascadeOutcome {
                        first: o1.label,
                        second,
                        probability: 0.0,
                        state: None,
                    });
                }
            }
            Some(mid_state) => {
                let ensemble = measure_node(mid_state, (1, 2), &bell_node)?;
                for o2 in ensemble.outcomes {
                    outcomes.push(CascadeOutcome {
                        first: o1.label,
                        second: o2.label,
                        probability: o1.probability * o2.probability,
                        state: o2.state,
                    });
                }
            }
        }
    }
    Ok(outcomes)
}

/// Closed forms of the four cascade outcomes whose second label is 0, used
/// as spot checks on `two_node_cascade`. Entry i is the joint probability
/// and state of outcome (i, 0): a rank-two mixture of one entangled vector
/// with one basis product, normalized by the probability times four.
pub fn cascade_closed_forms(
    p: f64,
    delta: f64,
    alpha_l: f64,
    alpha_r: f64,
) -> Result<[(f64, DensityMatrix); 4]> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    if !(0.5..1.0).contains(&delta) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            constraint: "[1/2, 1)",
        });
    }
    check_range("alpha_l", alpha_l, 0.5, 1.0, "[1/2, 1]")?;
    check_range("alpha_r", alpha_r, 0.5, 1.0, "[1/2, 1]")?;
    let (al, ar, d) = (alpha_l, alpha_r, delta);
    let (bl, br, e) = (1.0 - alpha_l, 1.0 - alpha_r, 1.0 - delta);
    let ket2 = |c0: (usize, f64), c1: (usize, f64)| {
        let mut amps = [Complex64::new(0.0, 0.0); 4];
        amps[c0.0] = re(c0.1);
        amps[c1.0] = re(c1.1);
        Ket::new(amps.to_vec())
    };
    // Even-parity outcomes 0 and 1: entangled part over {|00>, |11>},
    // product part |01>. Outcome 1 flips the relative sign.
    let even = |sign: f64| -> Result<(f64, DensityMatrix)> {
        let w_ent = (ar * al * d + br * bl * e) * (1.0 - p);
        let w_prod = br * al * p;
        let norm = (ar * al * d + br * bl * e).sqrt();
        let zeta = ket2(
            (0, (ar * al * d).sqrt() / norm),
            (3, sign * (br * bl * e).sqrt() / norm),
        );
        mix_outcome(w_ent, &zeta, w_prod, 1)
    };
    // Odd-parity outcomes 2 and 3: entangled part over {|01>, |10>},
    // product part |00>.
    let odd = |sign: f64| -> Result<(f64, DensityMatrix)> {
        let w_ent = (br * al * d + ar * bl * e) * (1.0 - p);
        let w_prod = ar * al * p;
        let norm = (br * al * d + ar * bl * e).sqrt();
        let zeta = ket2(
            (1, (br * al * d).sqrt() / norm),
            (2, sign * (ar * bl * e).sqrt() / norm),
        );
        mix_outcome(w_ent, &zeta, w_prod, 0)
    };
    Ok([even(1.0)?, even(-1.0)?, odd(1.0)?, odd(-1.0)?])
}

fn mix_outcome(
    w_ent: f64,
    zeta: &Ket,
    w_prod: f64,
    prod_index: usize,
) -> Result<(f64, DensityMatrix)> {
    let total = w_ent + w_prod;
    if total <= ZERO_PROB {
        return Err(Error::InvalidScenario(
            "cascade outcome has vanishing probability".into(),
        ));
    }
    let mut m = zeta.outer().scale(re(w_ent / total));
    m[(prod_index, prod_index)] += re(w_prod / total);
    Ok((0.25 * total, DensityMatrix::new(m)?))
}

// ---------------------------------------------------------------------------
// Fidelity windows and bounds
// ---------------------------------------------------------------------------

fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if (fmid >= 0.0) == (flo >= 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Window of mixing weights p where a second identical noisy link cannot
/// reproduce the noisy link's best fidelity (the two-noisy ceiling
/// (1 + C^2)/2 falls short) while one noisy link plus the pure resource
/// psi(alpha) still can. Returns (p_low, p_high); an empty window is the
/// degenerate interval (p_low, p_low).
pub fn two_noisy_window(delta: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(0.5..1.0).contains(&delta) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            constraint: "[1/2, 1)",
        });
    }
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            constraint: "[1/2, 1)",
        });
    }
    // Feasibility onset of the single-noisy protocol: alpha-threshold grows
    // monotonically with p.
    let p_low = bisect(|p| max_feasible_alpha(p, delta) - alpha, 0.0, 1.0);
    // Gap between the one-noisy optimum and the two-noisy ceiling.
    let gap = |p: f64| {
        let c = concurrence_family(p, delta);
        ofef_family(p, delta).expect("in-domain") - 0.5 * (1.0 + c * c)
    };
    if gap(p_low) <= 0.0 {
        return Ok((p_low, p_low));
    }
    let p_high = bisect(gap, p_low, 1.0 - 1e-12);
    Ok((p_low, p_high))
}

/// Ceiling (1 + C1 C2)/2 on the end-to-end fidelity across two segments
/// with concurrences C1 and C2.
pub fn lemma1_bound_check(c1: f64, c2: f64) -> Result<f64> {
    check_range("c1", c1, 0.0, 1.0, "[0, 1]")?;
    check_range("c2", c2, 0.0, 1.0, "[0, 1]")?;
    Ok(0.5 * (1.0 + c1 * c2))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
