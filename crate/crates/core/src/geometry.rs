//! Balls, grids and the amplitude-tree preparation of a uniform ball-grid state.
//!
//! Grid points of (1/L)Zⁿ are stored as the integer vectors z = L·x.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::qsim::{trace_distance_pure, QState, QsimError};

pub const GRID_BUDGET: u128 = 10_000_000;
/// Largest register the state preparation will build.
pub const MAX_QUBITS: usize = 22;

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("enumeration needs {needed} points, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("accuracy {target} unreachable within {budget} samples per node")]
    AccuracyUnreachable { target: f64, budget: u64 },
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallGridSpec {
    pub n: usize,
    pub radius: f64,
    /// Grid denominator L.
    pub l: u64,
    /// Centre of the ball, in real coordinates.
    pub center: Vec<f64>,
}

impl BallGridSpec {
    pub fn centered(n: usize, radius: f64, l: u64) -> Self {
        BallGridSpec {
            n,
            radius,
            l,
            center: vec![0.0; n],
        }
    }

    fn validate(&self) -> Result<(), GeometryError> {
        if self.n == 0 || self.l == 0 || !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(GeometryError::Invalid(format!(
                "need n ≥ 1, L ≥ 1 and a positive radius, got n={}, L={}, R={}",
                self.n, self.l, self.radius
            )));
        }
        if self.center.len() != self.n {
            return Err(GeometryError::Invalid("centre has the wrong dimension".into()));
        }
        Ok(())
    }

    /// ⌊(L·R)²⌋, the squared radius in grid units (up to rounding noise in R).
    fn scaled_radius_sq(&self) -> i128 {
        let s = self.l as f64 * self.radius;
        (s * s + 1e-9).floor() as i128
    }

    fn is_centered(&self) -> bool {
        self.center.iter().all(|&c| c == 0.0)
    }

    fn contains(&self, z: &[i64]) -> bool {
        if self.is_centered() {
            return z.iter().map(|&x| (x as i128) * (x as i128)).sum::<i128>() <= self.scaled_radius_sq();
        }
        let l = self.l as f64;
        let d: f64 = z
            .iter()
            .zip(&self.center)
            .map(|(&x, &c)| (x as f64 - c * l).powi(2))
            .sum();
        d <= (self.radius * l).powi(2) * (1.0 + 1e-12)
    }
}

/// The grid points of a ball, as scaled integer vectors.
#[derive(Clone, Debug)]
pub struct BallGrid {
    pub spec: BallGridSpec,
    pub points: Vec<Vec<i64>>,
}

impl BallGrid {
    pub fn count(&self) -> usize {
        self.points.len()
    }
}

fn bounding_box(spec: &BallGridSpec) -> Vec<(i64, i64)> {
    let l = spec.l as f64;
    spec.center
        .iter()
        .map(|&c| {
            (
                ((c - spec.radius) * l).ceil() as i64,
                ((c + spec.radius) * l).floor() as i64,
            )
        })
        .collect()
}

/// All points of (1/L)Zⁿ in the ball, by bounding-box scan.
pub fn grid_points_in_ball(spec: &BallGridSpec) -> Result<BallGrid, GeometryError> {
    spec.validate()?;
    let bbox = bounding_box(spec);
    let needed = bbox
        .iter()
        .fold(1u128, |acc, (lo, hi)| acc.saturating_mul((hi - lo + 1).max(0) as u128));
    // The ball fills at least a (π/4)^{n/2}/n!-ish share of its box; the box
    // bound keeps the scan itself finite.
    if needed > GRID_BUDGET.saturating_mul(100) {
        return Err(GeometryError::BudgetExceeded {
            needed,
            budget: GRID_BUDGET,
        });
    }
    let mut points = Vec::new();
    let mut z: Vec<i64> = bbox.iter().map(|b| b.0).collect();
    if bbox.iter().any(|(lo, hi)| lo > hi) {
        return Ok(BallGrid {
            spec: spec.clone(),
            points,
        });
    }
    loop {
        if spec.contains(&z) {
            if points.len() as u128 >= GRID_BUDGET {
                return Err(GeometryError::BudgetExceeded {
                    needed: GRID_BUDGET + 1,
                    budget: GRID_BUDGET,
                });
            }
            points.push(z.clone());
        }
        let mut i = spec.n;
        loop {
            if i == 0 {
                return Ok(BallGrid {
                    spec: spec.clone(),
                    points,
                });
            }
            i -= 1;
            if z[i] < bbox[i].1 {
                z[i] += 1;
                break;
            }
            z[i] = bbox[i].0;
        }
    }
}

/// Uniform draws from the grid points of an origin-centred ball, by rejection
/// from the bounding cube.
#[derive(Clone, Debug)]
pub struct BallGridSampler {
    n: usize,
    l: u64,
    half: i64,
    radius_sq: i128,
}

impl BallGridSampler {
    pub fn new(n: usize, radius: f64, l: u64) -> Result<Self, GeometryError> {
        let spec = BallGridSpec::centered(n, radius, l);
        spec.validate()?;
        Ok(BallGridSampler {
            n,
            l,
            half: (radius * l as f64).floor() as i64,
            radius_sq: spec.scaled_radius_sq(),
        })
    }

    pub fn grid_scale(&self) -> u64 {
        self.l
    }

    /// ⌊(L·R)²⌋.
    pub fn radius_sq(&self) -> i128 {
        self.radius_sq
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        loop {
            let z: Vec<i64> = (0..self.n).map(|_| rng.random_range(-self.half..=self.half)).collect();
            if z.iter().map(|&x| (x as i128) * (x as i128)).sum::<i128>() <= self.radius_sq {
                return z;
            }
        }
    }
}

/// Volume of the n-ball of radius R.
pub fn ball_volume(n: usize, radius: f64) -> f64 {
    let mut v = [1.0, 2.0 * radius];
    if n < 2 {
        return v[n];
    }
    for k in 2..=n {
        let next = v[k % 2] * 2.0 * PI * radius * radius / k as f64;
        v[k % 2] = next;
    }
    v[n % 2]
}

/// Area of the intersection of two discs of radius R whose centres are `dist` apart.
pub fn lens_area(radius: f64, dist: f64) -> f64 {
    if dist >= 2.0 * radius {
        return 0.0;
    }
    let r2 = radius * radius;
    2.0 * r2 * (dist / (2.0 * radius)).acos() - 0.5 * dist * (4.0 * r2 - dist * dist).sqrt()
}

/// vol(B ∩ (B + d̄)) / vol(B) from the cap-free cylinder argument:
/// 1 − ‖d̄‖·vol(B_{n−1})/vol(B_n).
pub fn cylinder_lower_bound(n: usize, radius: f64, dist: f64) -> f64 {
    1.0 - dist * ball_volume(n - 1, radius) / ball_volume(n, radius)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntersectionRatio {
    pub n: usize,
    pub radius: f64,
    pub dist: f64,
    /// Closed form, available for n ≤ 2.
    pub exact: Option<f64>,
    pub monte_carlo: Option<f64>,
    pub std_err: Option<f64>,
    pub lower_bound: f64,
}

impl IntersectionRatio {
    pub fn value(&self) -> f64 {
        self.exact.or(self.monte_carlo).unwrap_or(f64::NAN)
    }
}

/// A uniform point of the n-ball of radius R.
pub fn sample_in_ball<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = radius * rng.random::<f64>().powf(1.0 / n as f64) / norm;
    g.into_iter().map(|x| x * scale).collect()
}

/// vol(B ∩ (B + d̄)) / vol(B) for an origin ball of radius R.
///
/// Exact for n ≤ 2; Monte Carlo with `samples` draws otherwise.
pub fn ball_intersection_ratio<R: Rng + ?Sized>(
    n: usize,
    radius: f64,
    d: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<IntersectionRatio, GeometryError> {
    if n == 0 || d.len() != n || !(radius > 0.0) {
        return Err(GeometryError::Invalid("need n ≥ 1, |d̄| = n and R > 0".into()));
    }
    let dist = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if dist > 2.0 * radius {
        return Err(GeometryError::Invalid(format!("‖d̄‖ = {dist} exceeds 2R")));
    }
    let exact = match n {
        1 => Some((2.0 * radius - dist) / (2.0 * radius)),
        2 => Some(lens_area(radius, dist) / (PI * radius * radius)),
        _ => None,
    };
    let (monte_carlo, std_err) = if exact.is_none() && samples > 0 {
        let r2 = radius * radius;
        let hits = (0..samples)
            .filter(|_| {
                let x = sample_in_ball(n, radius, rng);
                x.iter().zip(d).map(|(a, b)| (a - b).powi(2)).sum::<f64>() <= r2
            })
            .count();
        let p = hits as f64 / samples as f64;
        (Some(p), Some((p * (1.0 - p) / samples as f64).sqrt()))
    } else {
        (None, None)
    };
    Ok(IntersectionRatio {
        n,
        radius,
        dist,
        exact,
        monte_carlo,
        std_err,
        lower_bound: cylinder_lower_bound(n, radius, dist).max(0.0),
    })
}

/// |grid ∩ B ∩ (B + d̄)| / |grid ∩ B| for an integer shift d̄.
pub fn grid_intersection_ratio(spec: &BallGridSpec, d: &[i64]) -> Result<f64, GeometryError> {
    if d.len() != spec.n {
        return Err(GeometryError::Invalid("shift has the wrong dimension".into()));
    }
    let grid = grid_points_in_ball(spec)?;
    if grid.count() == 0 {
        return Err(GeometryError::Invalid("ball contains no grid points".into()));
    }
    let l = spec.l as i64;
    let both = grid
        .points
        .iter()
        .filter(|z| {
            let shifted: Vec<i64> = z.iter().zip(d).map(|(a, b)| a - b * l).collect();
            spec.contains(&shifted)
        })
        .count();
    Ok(both as f64 / grid.count() as f64)
}

/// count/(Lⁿ·vol) − 1 and the tolerance 2n^{1.5}/(R·L), which applies when R·L ≥ n^{1.5}.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeCheck {
    pub count: usize,
    pub expected: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub applies: bool,
}

impl VolumeCheck {
    pub fn holds(&self) -> bool {
        !self.applies || self.relative_error.abs() <= self.tolerance
    }
}

pub fn grid_volume_check(spec: &BallGridSpec) -> Result<VolumeCheck, GeometryError> {
    let grid = grid_points_in_ball(spec)?;
    let n = spec.n as f64;
    let rl = spec.radius * spec.l as f64;
    let expected = (spec.l as f64).powi(spec.n as i32) * ball_volume(spec.n, spec.radius);
    Ok(VolumeCheck {
        count: grid.count(),
        expected,
        relative_error: grid.count() as f64 / expected - 1.0,
        tolerance: 2.0 * n.powf(1.5) / rl,
        applies: rl >= n.powf(1.5),
    })
}

/// Share of grid points within √n/L of the sphere, against 2·(1 − (1 − √n/(RL))ⁿ).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryLayer {
    pub fraction: f64,
    pub bound: f64,
}

pub fn boundary_layer(spec: &BallGridSpec) -> Result<BoundaryLayer, GeometryError> {
    let grid = grid_points_in_ball(spec)?;
    let l = spec.l as f64;
    let inner = spec.radius - (spec.n as f64).sqrt() / l;
    let inner_sq = (inner.max(0.0) * l).powi(2);
    let outer = grid
        .points
        .iter()
        .filter(|z| {
            let d: f64 = z
                .iter()
                .zip(&spec.center)
                .map(|(&x, &c)| (x as f64 - c * l).powi(2))
                .sum();
            d > inner_sq
        })
        .count();
    let shell = 1.0
        - (1.0 - (spec.n as f64).sqrt() / (spec.radius * l))
            .max(0.0)
            .powi(spec.n as i32);
    Ok(BoundaryLayer {
        fraction: outer as f64 / grid.count().max(1) as f64,
        bound: 2.0 * shell,
    })
}

/// Area of {x² + y² ≤ R²} ∩ [x0, x1] × [y0, y1].
pub fn disc_rectangle_area(radius: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let r = radius;
    let (a, b) = (x0.max(-r), x1.min(r));
    if a >= b || y0 >= y1 {
        return 0.0;
    }
    // Piecewise on the x where the circle crosses y = y0 or y = y1.
    let mut cuts = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < r {
            let x = (r * r - y * y).sqrt();
            for c in [-x, x] {
                if c > a && c < b {
                    cuts.push(c);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let h = |x: f64| (r * r - x * x).max(0.0).sqrt();
    // ∫ h = ½(x·h(x) + R²·asin(x/R)).
    let int_h = |x: f64| 0.5 * (x * h(x) + r * r * (x / r).clamp(-1.0, 1.0).asin());
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let hm = h(mid);
        let top_is_circle = hm < y1;
        let bottom_is_circle = -hm > y0;
        let top = if top_is_circle { hm } else { y1 };
        let bottom = if bottom_is_circle { -hm } else { y0 };
        if top <= bottom {
            continue;
        }
        let hh = int_h(hi) - int_h(lo);
        let width = hi - lo;
        area += match (top_is_circle, bottom_is_circle) {
            (true, true) => 2.0 * hh,
            (true, false) => hh - y0 * width,
            (false, true) => y1 * width + hh,
            (false, false) => (y1 - y0) * width,
        };
    }
    area
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepareConfig {
    /// Per-step relative accuracy for the conditional masses.
    pub target_accuracy: f64,
    /// Monte Carlo draws allowed per tree node (n ≥ 3).
    pub sample_budget: u64,
    pub seed: u64,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        PrepareConfig {
            target_accuracy: 1e-3,
            sample_budget: 1 << 22,
            seed: 0,
        }
    }
}

/// Conditional masses of the preparation, one node per bit prefix.
#[derive(Clone, Debug, Serialize)]
pub struct AmplitudeTree {
    pub n: usize,
    pub l: u64,
    /// Cube exponent: the ball sits in [−2^m, 2^m]ⁿ.
    pub m: u32,
    pub bits_per_coordinate: usize,
    pub qubits: usize,
    /// s̃(prefix·0) at each internal node, heap order (root = 1, children 2i, 2i+1).
    pub split: Vec<f64>,
    /// Largest |s̃ − s|/s over nodes where s is known exactly.
    pub max_relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PreparationCertificate {
    /// Trace distance to the uniform superposition over grid points in the ball.
    pub trace_distance_uniform_grid: f64,
    /// Trace distance to the volume-weighted discretization, when computable exactly.
    pub trace_distance_volume_state: Option<f64>,
    pub first_split: (f64, f64),
    /// (1 − ε)^K with ε the per-step accuracy.
    pub inner_product_bound: f64,
    pub inner_product_volume_state: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct PreparedState {
    pub tree: AmplitudeTree,
    /// Real amplitudes indexed by the K-bit label, coordinate-major, most significant bit first.
    pub amplitudes: Vec<f64>,
    pub certificate: PreparationCertificate,
}

/// Volume of B ∩ cuboid, exactly for n ≤ 2 and by Monte Carlo otherwise.
struct MassOracle {
    n: usize,
    radius: f64,
    rng: crate::rng::SimRng,
    samples_per_node: u64,
}

impl MassOracle {
    fn mass(&mut self, lo: &[f64], hi: &[f64]) -> (f64, bool) {
        let r2 = self.radius * self.radius;
        let far: f64 = lo.iter().zip(hi).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum();
        let near: f64 = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| {
                if *a > 0.0 {
                    a * a
                } else if *b < 0.0 {
                    b * b
                } else {
                    0.0
                }
            })
            .sum();
        let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
        if far <= r2 {
            return (vol, true);
        }
        if near >= r2 {
            return (0.0, true);
        }
        match self.n {
            1 => ((hi[0].min(self.radius) - lo[0].max(-self.radius)).max(0.0), true),
            2 => (disc_rectangle_area(self.radius, lo[0], hi[0], lo[1], hi[1]), true),
            _ => {
                let s = self.samples_per_node;
                let hits = (0..s)
                    .filter(|_| {
                        let d: f64 = lo
                            .iter()
                            .zip(hi)
                            .map(|(a, b)| self.rng.random_range(*a..*b).powi(2))
                            .sum();
                        d <= r2
                    })
                    .count();
                (vol * hits as f64 / s as f64, false)
            }
        }
    }
}

/// Builds the uniform ball-grid superposition one qubit at a time.
///
/// Each coordinate gets m + 1 + log₂L bits covering [−2^m, 2^m) in steps of
/// 1/L; a leaf stands for the cell [z/L, (z+1)/L)ⁿ. The amplitude on a leaf is
/// the square root of the product of the conditional masses s̃ along its path,
/// where a node's mass is the volume of the ball inside its cuboid.
pub fn grover_rudolph_prepare(spec: &BallGridSpec, config: &PrepareConfig) -> Result<PreparedState, GeometryError> {
    spec.validate()?;
    if !spec.is_centered() {
        return Err(GeometryError::Invalid(
            "preparation expects an origin-centred ball".into(),
        ));
    }
    if spec.radius < 1.0 {
        return Err(GeometryError::Invalid(format!(
            "preparation needs R ≥ 1, got {}",
            spec.radius
        )));
    }
    if !spec.l.is_power_of_two() {
        return Err(GeometryError::Invalid(format!(
            "L must be a power of two, got {}",
            spec.l
        )));
    }
    if !(config.target_accuracy > 0.0 && config.target_accuracy < 1.0) {
        return Err(GeometryError::Invalid("target accuracy must lie in (0, 1)".into()));
    }
    let n = spec.n;
    let m = spec.radius.log2().ceil().max(0.0) as u32;
    let bits = m as usize + 1 + spec.l.trailing_zeros() as usize;
    let k = n * bits;
    if k > MAX_QUBITS {
        return Err(GeometryError::Invalid(format!(
            "{k} qubits exceed the limit of {MAX_QUBITS}"
        )));
    }
    // Hoeffding: relative error ε on a mass needs ln(2/δ)/(2ε²) draws at δ = 1e-3.
    let samples_per_node = ((2.0f64 / 1e-3).ln() / (2.0 * config.target_accuracy.powi(2))).ceil() as u64;
    if n >= 3 && samples_per_node > config.sample_budget {
        return Err(GeometryError::AccuracyUnreachable {
            target: config.target_accuracy,
            budget: config.sample_budget,
        });
    }
    let mut oracle = MassOracle {
        n,
        radius: spec.radius,
        rng: crate::rng::stream(config.seed, "grover-rudolph"),
        samples_per_node,
    };

    let cells_per_coord: i64 = 1 << bits;
    let offset = (1i64 << m) * spec.l as i64;
    let l = spec.l as f64;
    let to_real = |idx: i64| (idx - offset) as f64 / l;

    let mut split = vec![f64::NAN; 1 << k];
    let mut amplitudes = vec![0.0; 1 << k];
    let mut max_relative_error: f64 = 0.0;

    // Depth-first over prefixes; each frame carries the cuboid in index units.
    struct Frame {
        node: usize,
        depth: usize,
        lo: Vec<i64>,
        hi: Vec<i64>,
        weight: f64,
        mass: f64,
    }
    let root_lo = vec![0i64; n];
    let root_hi = vec![cells_per_coord; n];
    let real = |lo: &[i64], hi: &[i64]| -> (Vec<f64>, Vec<f64>) {
        (
            lo.iter().map(|&i| to_real(i)).collect(),
            hi.iter().map(|&i| to_real(i)).collect(),
        )
    };
    let (rl, rh) = real(&root_lo, &root_hi);
    let root_mass = oracle.mass(&rl, &rh).0;
    let mut stack = vec![Frame {
        node: 1,
        depth: 0,
        lo: root_lo,
        hi: root_hi,
        weight: 1.0,
        mass: root_mass,
    }];
    while let Some(f) = stack.pop() {
        if f.weight == 0.0 {
            continue;
        }
        if f.depth == k {
            let leaf = f.node - (1 << k);
            amplitudes[leaf] = f.weight.sqrt();
            continue;
        }
        let c = f.depth / bits;
        let mid = (f.lo[c] + f.hi[c]) / 2;
        let mut lo1 = f.lo.clone();
        lo1[c] = mid;
        let mut hi0 = f.hi.clone();
        hi0[c] = mid;
        let (a0, b0) = real(&f.lo, &hi0);
        let (a1, b1) = real(&lo1, &f.hi);
        let (q0, exact0) = oracle.mass(&a0, &b0);
        let (q1, exact1) = oracle.mass(&a1, &b1);
        let total = q0 + q1;
        let s0 = if total > 0.0 { q0 / total } else { 0.5 };
        if exact0 && exact1 && f.mass > 0.0 {
            let s_exact = q0 / f.mass;
            if s_exact > 0.0 {
                max_relative_error = max_relative_error.max((s0 - s_exact).abs() / s_exact);
            }
        }
        split[f.node] = s0;
        stack.push(Frame {
            node: 2 * f.node + 1,
            depth: f.depth + 1,
            lo: lo1,
            hi: f.hi,
            weight: f.weight * (1.0 - s0),
            mass: q1,
        });
        stack.push(Frame {
            node: 2 * f.node,
            depth: f.depth + 1,
            lo: f.lo,
            hi: hi0,
            weight: f.weight * s0,
            mass: q0,
        });
    }
    split.truncate(1 << k);

    let dims = vec![2usize; k];
    let label = |mut idx: usize| -> Vec<usize> {
        let mut v = vec![0usize; k];
        for slot in v.iter_mut().rev() {
            *slot = idx & 1;
            idx >>= 1;
        }
        v
    };
    let leaf_index = |z: &[i64]| -> usize { z.iter().fold(0usize, |acc, &zi| (acc << bits) | (zi + offset) as usize) };
    let state = |amps: &[(usize, f64)]| -> Result<QState, GeometryError> {
        let entries: Vec<(Vec<usize>, Complex64)> = amps
            .iter()
            .filter(|(_, a)| *a != 0.0)
            .map(|&(i, a)| (label(i), Complex64::new(a, 0.0)))
            .collect();
        Ok(QState::from_amplitudes(&dims, &entries)?.normalize()?)
    };
    let prepared = state(&amplitudes.iter().copied().enumerate().collect::<Vec<_>>())?;

    let grid = grid_points_in_ball(spec)?;
    let uniform: Vec<(usize, f64)> = grid.points.iter().map(|z| (leaf_index(z), 1.0)).collect();
    let uniform = state(&uniform)?;
    let trace_distance_uniform_grid = trace_distance_pure(&prepared, &uniform)?;

    let (trace_distance_volume_state, inner_product_volume_state) = if n <= 2 {
        let mut exact = MassOracle {
            n,
            radius: spec.radius,
            rng: crate::rng::stream(config.seed, "grover-rudolph-check"),
            samples_per_node: 1,
        };
        let mut leaves = Vec::new();
        for (i, _) in amplitudes.iter().enumerate() {
            let mut rest = i;
            let mut idx = vec![0i64; n];
            for slot in idx.iter_mut().rev() {
                *slot = (rest & ((1 << bits) - 1)) as i64;
                rest >>= bits;
            }
            let lo: Vec<f64> = idx.iter().map(|&j| to_real(j)).collect();
            let hi: Vec<f64> = idx.iter().map(|&j| to_real(j + 1)).collect();
            let v = exact.mass(&lo, &hi).0;
            if v > 0.0 {
                leaves.push((i, v.sqrt()));
            }
        }
        let volume_state = state(&leaves)?;
        let inner = prepared.inner(&volume_state)?.norm();
        (Some(trace_distance_pure(&prepared, &volume_state)?), Some(inner))
    } else {
        (None, None)
    };

    let first_split = (split[1], 1.0 - split[1]);
    let eps = if n <= 2 {
        max_relative_error
    } else {
        config.target_accuracy
    };
    Ok(PreparedState {
        tree: AmplitudeTree {
            n,
            l: spec.l,
            m,
            bits_per_coordinate: bits,
            qubits: k,
            split,
            max_relative_error,
        },
        amplitudes,
        certificate: PreparationCertificate {
            trace_distance_uniform_grid,
            trace_distance_volume_state,
            first_split,
            inner_product_bound: (1.0 - eps).powi(k as i32),
            inner_product_volume_state,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub radius: f64,
    pub l: u64,
    pub dist: f64,
    pub ratio: f64,
    pub bound: f64,
}

pub fn write_ratio_csv<W: Write>(out: W, rows: &[RatioRow]) -> Result<(), GeometryError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| GeometryError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| GeometryError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn grid_counts() {
        assert_eq!(
            grid_points_in_ball(&BallGridSpec::centered(2, 1.0, 2)).unwrap().count(),
            13
        );
        let g = grid_points_in_ball(&BallGridSpec::centered(1, 1.0, 1)).unwrap();
        assert_eq!(g.points, vec![vec![-1], vec![0], vec![1]]);
    }

    #[test]
    fn volumes() {
        assert!((ball_volume(2, 2.0) - 4.0 * PI).abs() < 1e-12);
        assert!((ball_volume(3, 1.0) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert_eq!(ball_volume(1, 3.0), 6.0);
        assert!((lens_area(2.0, 1.0) - 8.6084).abs() < 1e-3);
        assert!((lens_area(2.0, 0.0) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn disc_rectangle_against_quadrature() {
        let r = 3.0;
        let cases = [
            (-4.0, 4.0, -4.0, 4.0),
            (0.0, 4.0, 0.0, 4.0),
            (-1.0, 2.5, 0.5, 2.9),
            (2.0, 2.5, -0.2, 2.0),
            (-3.0, -2.5, -1.0, 1.0),
        ];
        for (x0, x1, y0, y1) in cases {
            let steps = 4000;
            let dx = (x1 - x0) / steps as f64;
            let mut quad = 0.0;
            for i in 0..steps {
                let x: f64 = x0 + (i as f64 + 0.5) * dx;
                let h = (r * r - x * x).max(0.0).sqrt();
                quad += (h.min(y1) - (-h).max(y0)).max(0.0) * dx;
            }
            let got = disc_rectangle_area(r, x0, x1, y0, y1);
            assert!((got - quad).abs() < 1e-3, "{got} vs {quad}");
        }
        assert!((disc_rectangle_area(r, -5.0, 5.0, -5.0, 5.0) - PI * 9.0).abs() < 1e-12);
    }

    #[test]
    fn intersection_ratio_examples() {
        let mut rng = stream(1, "t");
        let r = ball_intersection_ratio(2, 2.0, &[1.0, 0.0], 0, &mut rng).unwrap();
        assert!((r.value() - 0.6850).abs() < 1e-3);
        assert!(r.value() >= r.lower_bound);
        let z = ball_intersection_ratio(3, 2.0, &[0.0, 0.0, 0.0], 1000, &mut rng).unwrap();
        assert_eq!(z.value(), 1.0);
        assert_eq!(
            grid_intersection_ratio(&BallGridSpec::centered(2, 4.0, 8), &[0, 0]).unwrap(),
            1.0
        );
        assert_eq!(
            grid_intersection_ratio(&BallGridSpec::centered(2, 2.0, 4), &[5, 0]).unwrap(),
            0.0
        );
        let g = grid_intersection_ratio(&BallGridSpec::centered(2, 4.0, 8), &[1, 0]).unwrap();
        assert!((g - lens_area(4.0, 1.0) / (16.0 * PI)).abs() < 0.02);
    }

    #[test]
    fn sampler_is_uniform_on_grid() {
        let s = BallGridSampler::new(2, 1.0, 2).unwrap();
        let mut rng = stream(2, "t");
        let mut counts = std::collections::BTreeMap::new();
        let trials = 13_000;
        for _ in 0..trials {
            *counts.entry(s.sample(&mut rng)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 13);
        for c in counts.values() {
            assert!((*c as f64 - 1000.0).abs() < 4.0 * 1000f64.sqrt());
        }
    }

    #[test]
    fn preparation_structure() {
        let spec = BallGridSpec::centered(2, 3.0, 8);
        let p = grover_rudolph_prepare(&spec, &PrepareConfig::default()).unwrap();
        assert_eq!(p.tree.m, 2);
        assert_eq!(p.tree.qubits, 12);
        assert_eq!(p.certificate.first_split, (0.5, 0.5));
        let norm: f64 = p.amplitudes.iter().map(|a| a * a).sum();
        assert!((norm - 1.0).abs() < 1e-9);
        assert!(p.certificate.trace_distance_volume_state.unwrap() < 1e-6);
        let p1 = grover_rudolph_prepare(&BallGridSpec::centered(1, 2.0, 4), &PrepareConfig::default()).unwrap();
        assert_eq!(p1.certificate.first_split, (0.5, 0.5));
    }
}
