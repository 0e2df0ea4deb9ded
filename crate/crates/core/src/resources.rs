//! Resource accounting for chains that trade maximal entanglement for
//! cheaper non-maximal pairs.
//!
//! Spending a pure pair with concurrence C instead of a Bell pair saves
//! 1 - C ebits; across n free segments the total saving R_v = n(1 - C).
//! How far C can be lowered is capped by the feasibility threshold of the
//! noisy link, which yields a closed-form bound on R_v, its n -> infinity
//! limit, and the copies-of-Werner-state arithmetic for preparing the free
//! resources by entanglement distillation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::von_neumann_entropy_marginal;

fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    constraint: &'static str,
) -> Result<()> {
    if !(value >= lo && value <= hi) || value.is_nan() {
        return Err(Error::InvalidParameter {
            name,
            value,
            constraint,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Saved resource and its feasibility-capped bound
// ---------------------------------------------------------------------------

/// Ebits saved by running n free segments at concurrence C instead of 1:
/// R_v = n(1 - C).
pub fn saved_resource(n: usize, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            constraint: "n >= 1",
        });
    }
    check_range("c", c, 0.0, 1.0, "[0, 1]")?;
    Ok(n as f64 * (1.0 - c))
}

/// Contrast kappa = (p^2 - d(1-d)(1-p)^2) / (p^2 + d(1-d)(1-p)^2) between the
/// product and entangled weights of the noisy link. The feasibility threshold
/// for the folded free resource is alpha = (1 + kappa)/2.
pub fn kappa(p: f64, delta: f64) -> Result<f64> {
    check_range("p", p, 0.0, 1.0, "(0, 1)")?;
    check_range("delta", delta, 0.0, 1.0, "(0, 1)")?;
    if p <= 0.0 || p >= 1.0 || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::InvalidParameter {
            name: if p <= 0.0 || p >= 1.0 { "p" } else { "delta" },
            value: if p <= 0.0 || p >= 1.0 { p } else { delta },
            constraint: "interior of (0, 1)",
        });
    }
    let a = p * p;
    let b = delta * (1.0 - delta) * (1.0 - p) * (1.0 - p);
    Ok((a - b) / (a + b))
}

/// Largest number of free segments that can all run at concurrence C while
/// the folded pair stays feasible against the noisy link: |ln(1-k^2)| / (2|ln C|).
/// C = 1 never exhausts the budget, reported as infinity.
pub fn max_nodes(p: f64, delta: f64, c: f64) -> Result<f64> {
    check_range("c", c, 0.0, 1.0, "(0, 1]")?;
    if c <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            constraint: "(0, 1]",
        });
    }
    let k = kappa(p, delta)?;
    if c == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 - k * k).ln().abs() / (2.0 * c.ln().abs()))
}

/// Largest saving n segments can realize; concurrence per segment sits at the
/// threshold (1-k^2)^(1/2n), so R_v <= n - n(1-k^2)^(1/2n).
pub fn saved_resource_bound(n: usize, p: f64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            constraint: "n >= 1",
        });
    }
    let k = kappa(p, delta)?;
    let n = n as f64;
    // n - n x^(1/2n) = -n expm1(ln x / 2n), stable for large n.
    Ok(-n * f64::exp_m1((1.0 - k * k).ln() / (2.0 * n)))
}

/// n -> infinity limit of the saving bound: -(1/2) ln(1 - k^2), in nats.
pub fn saved_resource_limit(p: f64, delta: f64) -> Result<f64> {
    let k = kappa(p, delta)?;
    Ok(-0.5 * (1.0 - k * k).ln())
}

/// Largest saving of a chain with n free segments at one common concurrence
/// and the noisy link inserted at position m (1-based, so m-1 free segments
/// sit to its left and n-m+1 to its right).
///
/// Each side folds to an effective pair; both consume part of the noisy
/// link's feasibility budget through
/// h(m-1) h(n-m+1) <= (1+k)/(1-k),  h(j) = (1+sqrt(1-C^2j))/(1-sqrt(1-C^2j)),
/// and the bound is n(1 - C*) at the equality root C*. An end position
/// (m = 1 or m = n+1) reduces exactly to `saved_resource_bound`. The saving
/// is smallest when the noisy link sits in the middle, where the split is
/// balanced and the constraint is tightest.
pub fn saved_resource_at_position(n: usize, m: usize, p: f64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            constraint: "n >= 1",
        });
    }
    if m == 0 || m > n + 1 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: m as f64,
            constraint: "1 <= m <= n + 1",
        });
    }
    let k = kappa(p, delta)?;
    if k <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            constraint: "product weight must dominate: kappa(p, delta) > 0",
        });
    }
    let budget = ((1.0 + k) / (1.0 - k)).ln();
    let (left, right) = ((m - 1) as f64, (n + 1 - m) as f64);
    // ln h(j) = 2 ln(1 + sqrt(1 - C^2j)) - 2j ln C, stable near C = 1.
    let ln_h = |j: f64, c: f64| {
        if j == 0.0 {
            return 0.0;
        }
        let s = (1.0 - c.powf(2.0 * j)).max(0.0).sqrt();
        2.0 * (1.0 + s).ln() - 2.0 * j * c.ln()
    };
    // The constraint excess is decreasing in C: bisect for the root.
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-15);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_h(left, mid) + ln_h(right, mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    saved_resource(n, 0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// Distillation arithmetic
// ---------------------------------------------------------------------------

/// Bell pairs distillable per Werner copy of fidelity F by hashing:
/// 1 + F log2 F + (1-F) log2((1-F)/3). Non-positive rates are clamped to 0
/// with the flag set false.
pub fn hashing_rate(fidelity: f64) -> Result<(f64, bool)> {
    check_range("fidelity", fidelity, 0.5, 1.0, "(1/2, 1]")?;
    if fidelity <= 0.5 {
        return Err(Error::InvalidParameter {
            name: "fidelity",
            value: fidelity,
            constraint: "(1/2, 1]",
        });
    }
    let f = fidelity;
    let mut rate = 1.0 + f * f.log2();
    if f < 1.0 {
        rate += (1.0 - f) * ((1.0 - f) / 3.0).log2();
    }
    if rate > 0.0 {
        Ok((rate, true))
    } else {
        Ok((0.0, false))
    }
}

/// Schmidt weight of the cheapest free pair that keeps a balanced-branch
/// noisy link feasible under a Bell-basis node: alpha = 4p^2 / (5p^2 - 2p + 1).
/// Values outside [1/2, 1] are clamped, with the flag reporting whether the
/// raw value was already in range.
pub fn alpha_for_noise(p: f64) -> Result<(f64, bool)> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let raw = 4.0 * p * p / (5.0 * p * p - 2.0 * p + 1.0);
    let in_range = (0.5..=1.0).contains(&raw);
    Ok((raw.clamp(0.5, 1.0), in_range))
}

/// Werner copies needed to distill the free resources of an n-segment chain:
/// n S(alpha(p)) / hashing_rate(F). Errors when the rate is not positive.
pub fn copies_required(n: usize, p: f64, fidelity: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            constraint: "n >= 1",
        });
    }
    let (alpha, _) = alpha_for_noise(p)?;
    let entropy = von_neumann_entropy_marginal(alpha)?;
    let (rate, positive) = hashing_rate(fidelity)?;
    if !positive {
        return Err(Error::NonPositiveRate { fidelity });
    }
    Ok(n as f64 * entropy / rate)
}

/// Marginal entropy of the per-segment pair implied by a total saving rv over
/// n segments: invert rv = n(1 - C) to alpha = (1 + sqrt(1 - (1 - rv/n)^2))/2.
pub fn entropy_from_rv(rv: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            constraint: "n >= 1",
        });
    }
    check_range("rv", rv, 0.0, n as f64, "[0, n]")?;
    let c = 1.0 - rv / n as f64;
    let alpha = 0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt());
    von_neumann_entropy_marginal(alpha)
}

// ---------------------------------------------------------------------------
// Combined report
// ---------------------------------------------------------------------------

/// Resource summary for n free segments against one noisy link, with the
/// per-segment concurrence sitting at the feasibility threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    /// Number of free segments.
    pub n: usize,
    /// Threshold concurrence (1-k^2)^(1/2n) each segment runs at.
    pub concurrence_per_segment: f64,
    /// Realized saving n(1 - C) at the threshold.
    pub rv: f64,
    /// Closed-form cap n - n(1-k^2)^(1/2n); equals `rv` at the threshold.
    pub rv_upper: f64,
    /// n -> infinity limit of the cap, in nats.
    pub rv_limit: f64,
    /// Werner copies (fidelity F) to distill the free resources, real-valued.
    pub copies_required: f64,
}

/// Evaluate the full resource report at the feasibility threshold.
/// The copies arithmetic uses the balanced-branch scenario, so it depends on
/// (n, p, F) but not on delta.
pub fn resource_report(n: usize, p: f64, delta: f64, fidelity: f64) -> Result<ResourceReport> {
    let k = kappa(p, delta)?;
    let n_f = n as f64;
    let bound = saved_resource_bound(n, p, delta)?;
    let c_threshold = (1.0 - k * k).powf(1.0 / (2.0 * n_f));
    Ok(ResourceReport {
        n,
        concurrence_per_segment: c_threshold,
        rv: saved_resource(n, c_threshold)?,
        rv_upper: bound,
        rv_limit: saved_resource_limit(p, delta)?,
        copies_required: copies_required(n, p, fidelity)?,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::concurrence_nmes;
    use crate::protocols::max_feasible_alpha;

    const TOL: f64 = 1e-12;

    #[test]
    fn saved_resource_arithmetic() {
        assert_eq!(saved_resource(7, 1.0).unwrap(), 0.0);
        assert_eq!(saved_resource(7, 0.0).unwrap(), 7.0);
        assert!((saved_resource(10, 0.75).unwrap() - 2.5).abs() < TOL);
        assert!(saved_resource(0, 0.5).is_err());
        assert!(saved_resource(3, 1.5).is_err());
    }

    #[test]
    fn max_nodes_diverges_at_unit_concurrence() {
        assert!(max_nodes(0.6, 0.6, 1.0).unwrap().is_infinite());
        assert!(max_nodes(0.6, 0.6, 0.0).is_err());
    }

    #[test]
    fn max_nodes_grows_with_noise_weight() {
        // Monotone once the product weight dominates the entangled branch
        // (K > 0, i.e. p/(1-p) > sqrt(d(1-d)); K changes sign below that).
        let onset: f64 = {
            let s = (0.6f64 * 0.4).sqrt();
            s / (1.0 + s)
        };
        let mut last = 0.0;
        for i in 0..10 {
            let p = onset + 1e-3 + (1.0 - onset - 2e-3) * i as f64 / 9.0;
            let n = max_nodes(p, 0.6, 0.75).unwrap();
            assert!(n > last, "max_nodes not increasing at p = {p}");
            last = n;
        }
    }

    #[test]
    fn position_dependent_saving_has_end_maxima_and_midpoint_minimum() {
        let (n, p, delta) = (9usize, 0.9, 0.6);
        // An end position folds everything to one side: exactly the bound.
        let end = saved_resource_at_position(n, 1, p, delta).unwrap();
        let bound = saved_resource_bound(n, p, delta).unwrap();
        assert!((end - bound).abs() < 1e-9, "{end} vs {bound}");
        // Mirror symmetry of the two sides.
        for m in 1..=(n + 1) {
            let a = saved_resource_at_position(n, m, p, delta).unwrap();
            let b = saved_resource_at_position(n, n + 2 - m, p, delta).unwrap();
            assert!((a - b).abs() < 1e-9, "asymmetric at m = {m}");
        }
        // Decreasing toward the balanced middle.
        let values: Vec<f64> = (1..=(n / 2 + 1))
            .map(|m| saved_resource_at_position(n, m, p, delta).unwrap())
            .collect();
        for w in values.windows(2) {
            assert!(w[1] < w[0] + 1e-12, "not decreasing toward middle: {values:?}");
        }
        assert!(values.iter().all(|&v| v > 0.0));

        assert!(saved_resource_at_position(9, 0, p, delta).is_err());
        assert!(saved_resource_at_position(9, 11, p, delta).is_err());
        assert!(saved_resource_at_position(9, 3, 0.2, 0.6).is_err());
    }

    #[test]
    fn max_nodes_closes_the_feasibility_loop() {
        // Folding max_nodes segments at concurrence C lands the combined pair
        // exactly on the feasibility threshold of the noisy link.
        for &(p, delta, c) in &[
            (0.6, 0.6, 0.75),
            (0.52, 0.5, 0.9),
            (0.8, 0.7, 0.6),
            (0.35, 0.55, 0.95),
        ] {
            let n = max_nodes(p, delta, c).unwrap();
            let folded_c = c.powf(n);
            let folded_alpha = 0.5 * (1.0 + (1.0 - folded_c * folded_c).sqrt());
            let threshold = max_feasible_alpha(p, delta);
            assert!(
                (folded_alpha - threshold).abs() < 1e-6,
                "loop open at ({p}, {delta}, {c}): {folded_alpha} vs {threshold}"
            );
        }
        let k = kappa(0.6, 0.6).unwrap();
        assert!((0.5 * (1.0 + k) - max_feasible_alpha(0.6, 0.6)).abs() < TOL);
    }

    #[test]
    fn bound_starts_at_single_segment_value_and_saturates() {
        let (p, delta) = (0.6, 0.6);
        let k = kappa(p, delta).unwrap();
        let expect = 1.0 - (1.0 - k * k).sqrt();
        assert!((saved_resource_bound(1, p, delta).unwrap() - expect).abs() < TOL);

        let mut last = 0.0;
        for n in [1, 2, 4, 8, 32, 128, 1024] {
            let b = saved_resource_bound(n, p, delta).unwrap();
            assert!(b >= last - TOL, "bound decreased at n = {n}");
            assert!(b <= n as f64);
            last = b;
        }

        let limit = saved_resource_limit(p, delta).unwrap();
        assert!((saved_resource_bound(1_000_000, p, delta).unwrap() - limit).abs() < 1e-3);
    }

    #[test]
    fn limit_grows_with_noise_and_is_branch_symmetric() {
        assert!(
            saved_resource_limit(0.9, 0.6).unwrap() > saved_resource_limit(0.5, 0.6).unwrap()
        );
        let a = saved_resource_limit(0.7, 0.65).unwrap();
        let b = saved_resource_limit(0.7, 0.35).unwrap();
        assert!((a - b).abs() < TOL);
        assert!(saved_resource_limit(0.0, 0.6).is_err());
        assert!(saved_resource_limit(1.0, 0.6).is_err());
    }

    #[test]
    fn hashing_rate_reference_points() {
        assert!((hashing_rate(1.0).unwrap().0 - 1.0).abs() < TOL);

        let (rate, positive) = hashing_rate(0.8161).unwrap();
        assert!(positive);
        assert!((0.0195..=0.0205).contains(&rate), "rate = {rate}");
        let copies_per_pair = 1.0 / rate;
        assert!((copies_per_pair - 50.3).abs() < 0.5, "1/rate = {copies_per_pair}");

        let mut last = hashing_rate(0.82).unwrap().0;
        for i in 1..=18 {
            let f = 0.82 + 0.01 * i as f64;
            let r = hashing_rate(f).unwrap().0;
            assert!(r > last, "rate not increasing at F = {f}");
            last = r;
        }

        let (zero, positive) = hashing_rate(0.7).unwrap();
        assert_eq!(zero, 0.0);
        assert!(!positive);
        assert!(hashing_rate(0.5).is_err());
    }

    #[test]
    fn alpha_for_noise_reference_points() {
        let (alpha, ok) = alpha_for_noise(1.0).unwrap();
        assert!((alpha - 1.0).abs() < TOL && ok);

        let (alpha, ok) = alpha_for_noise(0.6).unwrap();
        assert!((alpha - 0.9).abs() < TOL && ok);

        // The raw expression crosses 1/2 exactly at p = 1/3.
        let (alpha, ok) = alpha_for_noise(1.0 / 3.0).unwrap();
        assert!((alpha - 0.5).abs() < 1e-12 && ok);
        let (alpha, ok) = alpha_for_noise(0.2).unwrap();
        assert_eq!(alpha, 0.5);
        assert!(!ok);
    }

    #[test]
    fn copies_arithmetic() {
        // At p = 1/3 the free pair is a Bell pair (S = 1): cost is n / rate.
        let rate = hashing_rate(0.8161).unwrap().0;
        let esswap_cost = copies_required(4, 1.0 / 3.0, 0.8161).unwrap();
        assert!((esswap_cost - 4.0 / rate).abs() < 1e-9);

        // Strictly decreasing in p at fixed (n, F).
        let mut last = f64::INFINITY;
        for i in 0..=10 {
            let p = 0.4 + 0.055 * i as f64;
            let c = copies_required(1, p, 0.8161).unwrap();
            assert!(c < last, "copies not decreasing at p = {p}");
            last = c;
        }

        // Frozen chained evaluation: alpha(0.9) = 3.24/3.25, S ~ 0.030108,
        // rate ~ 0.019949, so a single segment needs ~1.509 copies.
        let copies = copies_required(1, 0.9, 0.8161).unwrap();
        assert!((copies - 1.509).abs() < 0.005, "copies = {copies}");

        assert!(matches!(
            copies_required(1, 0.9, 0.7),
            Err(Error::NonPositiveRate { .. })
        ));
    }

    #[test]
    fn entropy_inverts_saving() {
        assert!(entropy_from_rv(5.0, 5).unwrap().abs() < TOL);
        assert!((entropy_from_rv(0.0, 5).unwrap() - 1.0).abs() < TOL);
        assert!(entropy_from_rv(5.1, 5).is_err());
        assert!(entropy_from_rv(-0.1, 5).is_err());

        for i in 0..=10 {
            let alpha = 0.5 + 0.049 * i as f64;
            let direct = von_neumann_entropy_marginal(alpha).unwrap();
            let n = 7;
            let rv = saved_resource(n, concurrence_nmes(alpha)).unwrap();
            let via_rv = entropy_from_rv(rv, n).unwrap();
            assert!(
                (direct - via_rv).abs() < 1e-12,
                "round trip broken at alpha = {alpha}"
            );
        }
    }

    #[test]
    fn report_is_internally_consistent() {
        let report = resource_report(10, 0.6, 0.6, 0.8161).unwrap();
        assert_eq!(report.n, 10);
        assert!(report.rv >= 0.0 && report.rv <= 10.0);
        assert!((report.rv - report.rv_upper).abs() < TOL);
        assert!(report.rv_limit.is_finite());
        assert!(report.copies_required > 0.0);
        let per_segment = saved_resource(1, report.concurrence_per_segment).unwrap();
        assert!((per_segment * 10.0 - report.rv).abs() < TOL);
    }
}
