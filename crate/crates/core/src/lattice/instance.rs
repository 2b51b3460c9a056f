use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    is_lll_reduced, lattice_points_in_ball, lll_reduce, norm_sq, parallel, Basis, LatticeError, LllReduction,
    ShortVector,
};
use crate::rng::SimRng;

/// A unique-SVP instance. `gap` is a certified lower bound on λ₂/λ₁.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeInstance {
    pub n: usize,
    pub basis: Basis,
    pub planted_u: Option<Vec<i64>>,
    #[serde(with = "ratio_string")]
    pub gap: Ratio<i64>,
}

mod ratio_string {
    use num_rational::Ratio;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<i64>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<i64>, D::Error> {
        let s = String::deserialize(d)?;
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s.trim(), "1"),
        };
        let p: i64 = p.parse().map_err(D::Error::custom)?;
        let q: i64 = q.parse().map_err(D::Error::custom)?;
        if q == 0 {
            return Err(D::Error::custom("zero denominator in gap"));
        }
        Ok(Ratio::new(p, q))
    }
}

/// Exact λ₁ and the shortest non-parallel length found inside the certification ball.
#[derive(Clone, Debug, PartialEq)]
pub struct GapCertificate {
    pub shortest: ShortVector,
    /// Squared length of the shortest vector not parallel to `shortest`, if
    /// the lattice has one (n ≥ 2).
    pub second_norm_sq: Option<i128>,
}

impl GapCertificate {
    pub fn gap(&self) -> Option<f64> {
        self.second_norm_sq
            .map(|s| (s as f64 / self.shortest.norm_sq as f64).sqrt())
    }

    /// The gap rounded down to three decimals, as an exact rational.
    pub fn gap_lower_bound(&self) -> Option<Ratio<i64>> {
        self.second_norm_sq
            .map(|s| floor_thousandths_sqrt(s, self.shortest.norm_sq))
    }
}

/// ⌊1000·√(num/den)⌋/1000, exactly.
fn floor_thousandths_sqrt(num: i128, den: i128) -> Ratio<i64> {
    let target = num * 1_000_000;
    let mut k = ((num as f64 / den as f64).sqrt() * 1000.0) as i128;
    while k > 0 && k * k * den > target {
        k -= 1;
    }
    while (k + 1) * (k + 1) * den <= target {
        k += 1;
    }
    Ratio::new(k as i64, 1000)
}

/// Computes λ₁ and λ₂ exactly by ball enumeration.
///
/// λ₁ ≤ ‖b₁‖ and λ₂ ≤ max_i ‖b_i‖, so enumerating the ball of the larger
/// radius sees both minima; the result does not depend on a coefficient box.
pub fn certify_gap(basis: &Basis) -> Result<GapCertificate, LatticeError> {
    let red = lll_reduce(basis)?;
    let b = &red.basis;
    let n = b.dim();
    let radius_sq = b.rows().iter().map(|r| norm_sq(r)).max().unwrap_or(0);
    let radius = (radius_sq as f64).sqrt() * (1.0 + 1e-9);
    let zero = vec![0.0; n];
    let pts = lattice_points_in_ball(b, &zero, radius)?;
    let mut shortest: Option<(i128, Vec<i64>)> = None;
    for (_, v) in &pts {
        let ns = norm_sq(v);
        if ns == 0 {
            continue;
        }
        let canonical = canonical_sign(v);
        let better = match &shortest {
            None => true,
            Some((bn, bv)) => ns < *bn || (ns == *bn && canonical < *bv),
        };
        if better {
            shortest = Some((ns, canonical));
        }
    }
    let (s_norm, s_vec) = shortest.ok_or(LatticeError::Degenerate)?;
    let second = pts
        .iter()
        .map(|(_, v)| v)
        .filter(|v| !parallel(v, &s_vec))
        .map(|v| norm_sq(v))
        .min();
    let coeffs = basis.coefficients_of(&s_vec)?;
    Ok(GapCertificate {
        shortest: ShortVector {
            coeffs,
            vector: s_vec,
            norm_sq: s_norm,
        },
        second_norm_sq: second,
    })
}

fn canonical_sign(v: &[i64]) -> Vec<i64> {
    match v.iter().find(|&&x| x != 0) {
        Some(&x) if x < 0 => v.iter().map(|y| -y).collect(),
        _ => v.to_vec(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub gap_target: f64,
    /// Largest |entry| allowed after mixing.
    pub coeff_budget: i64,
    /// Upper end of the diagonal range for the long rows.
    pub max_entry: i64,
    pub retries: usize,
}

impl GenConfig {
    pub fn new(n: usize, gap_target: f64) -> Self {
        GenConfig {
            n,
            gap_target,
            coeff_budget: 1 << 12,
            max_entry: 64,
            retries: 200,
        }
    }
}

/// Builds a lattice containing a planted unit vector whose uniqueness gap is
/// certified to be at least `gap_target`.
///
/// The unmixed basis is e_k plus upper-triangular rows on the remaining axes
/// with diagonal entries in [⌈gap⌉, max_entry]; random unimodular row
/// operations then hide the structure.
pub fn gen_unique_lattice(cfg: &GenConfig, rng: &mut SimRng) -> Result<LatticeInstance, LatticeError> {
    let n = cfg.n;
    if n == 0 {
        return Err(LatticeError::Invalid("dimension must be positive".into()));
    }
    if !(cfg.gap_target.is_finite() && cfg.gap_target >= 1.0) {
        return Err(LatticeError::Invalid("gap target must be a finite value ≥ 1".into()));
    }
    if n == 1 {
        // Every nonzero vector is parallel to the generator: any gap holds vacuously.
        return Ok(LatticeInstance {
            n: 1,
            basis: Basis::identity(1),
            planted_u: Some(vec![1]),
            gap: Ratio::new((cfg.gap_target * 1000.0).floor() as i64, 1000),
        });
    }
    let lo = cfg.gap_target.ceil() as i64;
    if lo > cfg.max_entry {
        return Err(LatticeError::RetriesExhausted {
            attempts: 0,
            reason: format!(
                "gap target {} exceeds the diagonal range ≤ {}",
                cfg.gap_target, cfg.max_entry
            ),
        });
    }
    let mut last_reason = String::from("no attempts made");
    for _ in 0..cfg.retries.max(1) {
        let axis = rng.random_range(0..n);
        let others: Vec<usize> = (0..n).filter(|&i| i != axis).collect();
        let mut rows = vec![vec![0i64; n]; n];
        rows[0][axis] = 1;
        for (r, &col) in others.iter().enumerate() {
            let row = &mut rows[r + 1];
            let diag = rng.random_range(lo..=cfg.max_entry);
            row[col] = diag;
            for &later in &others[r + 1..] {
                row[later] = rng.random_range(0..diag);
            }
            row[axis] = rng.random_range(-diag..=diag);
        }
        let mixed = match mix_unimodular(rows, cfg.coeff_budget, rng) {
            Some(m) => m,
            None => {
                last_reason = "mixing exceeded the entry budget".into();
                continue;
            }
        };
        let basis = Basis::new(mixed)?;
        let cert = certify_gap(&basis)?;
        let (Some(gap), Some(bound)) = (cert.gap(), cert.gap_lower_bound()) else {
            continue;
        };
        if cert.shortest.norm_sq != 1 || gap < cfg.gap_target {
            last_reason = format!("certified gap {gap:.3} below target {}", cfg.gap_target);
            continue;
        }
        let u = canonical_sign(&cert.shortest.coeffs);
        return Ok(LatticeInstance {
            n,
            basis,
            planted_u: Some(u),
            gap: bound,
        });
    }
    Err(LatticeError::RetriesExhausted {
        attempts: cfg.retries.max(1),
        reason: last_reason,
    })
}

fn mix_unimodular(mut rows: Vec<Vec<i64>>, limit: i64, rng: &mut SimRng) -> Option<Vec<Vec<i64>>> {
    let n = rows.len();
    let steps = 3 * n;
    for _ in 0..steps {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            rows.swap(i, (i + 1) % n);
            continue;
        }
        let c: i64 = if rng.random_bool(0.5) { 1 } else { -1 } * rng.random_range(1..=2);
        let src = rows[j].clone();
        for (x, y) in rows[i].iter_mut().zip(&src) {
            *x += c * y;
        }
    }
    let fits = rows.iter().flatten().all(|x| x.abs() <= limit);
    fits.then_some(rows)
}

impl LatticeInstance {
    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.basis.dim() != self.n {
            return Err(LatticeError::Invalid(format!(
                "n = {} but basis has dimension {}",
                self.n,
                self.basis.dim()
            )));
        }
        if num_traits::Zero::is_zero(&self.basis.determinant()) {
            return Err(LatticeError::Degenerate);
        }
        if let Some(u) = &self.planted_u {
            if u.len() != self.n || u.iter().all(|&x| x == 0) {
                return Err(LatticeError::Invalid(
                    "planted_u must be a nonzero length-n vector".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn planted_vector(&self) -> Option<Vec<i64>> {
        self.planted_u.as_ref().and_then(|u| self.basis.combine(u).ok())
    }

    /// Re-derives the gap certificate and checks it against the stored fields.
    pub fn verify(&self) -> Result<GapCertificate, LatticeError> {
        self.validate()?;
        let cert = certify_gap(&self.basis)?;
        if let Some(v) = self.planted_vector() {
            if norm_sq(&v) != cert.shortest.norm_sq {
                return Err(LatticeError::Invalid("planted vector is not a shortest vector".into()));
            }
        }
        if let Some(bound) = cert.gap_lower_bound() {
            if bound < self.gap {
                return Err(LatticeError::Invalid(format!(
                    "stored gap {} exceeds certified {}",
                    self.gap, bound
                )));
            }
        }
        Ok(cert)
    }

    /// LLL-reduces the basis and re-expresses `planted_u` in it.
    pub fn reduced(&self) -> Result<(LatticeInstance, LllReduction), LatticeError> {
        let red = lll_reduce(&self.basis)?;
        let planted_u = match &self.planted_u {
            Some(u) => Some(red.coefficients_in_reduced(u)?),
            None => None,
        };
        Ok((
            LatticeInstance {
                n: self.n,
                basis: red.basis.clone(),
                planted_u,
                gap: self.gap,
            },
            red,
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LatticeError> {
        let inst: LatticeInstance = serde_json::from_str(s).map_err(|e| LatticeError::Invalid(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }
}

/// Checks |u_i| ≤ 2^{2n} for the planted coefficients; the basis must already be LLL-reduced.
pub fn check_coeff_bound(instance: &LatticeInstance) -> Result<bool, LatticeError> {
    let u = instance.planted_u.as_ref().ok_or(LatticeError::NoPlantedVector)?;
    if !is_lll_reduced(&instance.basis)? {
        return Err(LatticeError::NotLllReduced);
    }
    let bound: u128 = 1u128 << (2 * instance.n).min(126);
    Ok(u.iter().all(|&x| u128::from(x.unsigned_abs()) <= bound))
}
