//! Exact state-vector simulation over mixed-radix labels.
//!
//! A state lives on a register with component dimensions `dims`; a basis label
//! is one value per component. Labels are flattened with the first component
//! most significant. Small spaces are stored densely, larger ones as a sparse
//! map, and every operation returns a new state.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

/// Spaces up to this many basis states are stored densely.
pub const DENSE_LIMIT: u64 = 1 << 22;

const ZERO_CUTOFF: f64 = 1e-30;
const NORM_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QsimError {
    #[error("label {label:?} out of range for dims {dims:?}")]
    LabelOutOfRange { label: Vec<usize>, dims: Vec<usize> },
    #[error("component {component} out of range (state has {count} components)")]
    NoSuchComponent { component: usize, count: usize },
    #[error("component {component} has dimension {actual}, expected {expected}")]
    WrongDimension {
        component: usize,
        expected: usize,
        actual: usize,
    },
    #[error("label function is not injective: {first:?} and {second:?} both map to {image:?}")]
    NonReversible {
        first: Vec<usize>,
        second: Vec<usize>,
        image: Vec<usize>,
    },
    #[error("state is not normalized (squared norm {0})")]
    Unnormalized(f64),
    #[error("state space too large: {0}")]
    TooLarge(String),
    #[error("states live on different spaces")]
    DimsMismatch,
}

/// e(k/n) = exp(2πi·k/n), with k reduced mod n before forming the angle.
pub fn e_frac(k: i128, n: u64) -> Complex64 {
    let n = n as i128;
    let r = k.rem_euclid(n);
    Complex64::from_polar(1.0, 2.0 * PI * (r as f64) / (n as f64))
}

/// e(x) = exp(2πi·x).
pub fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

#[derive(Clone, Debug, PartialEq)]
enum Amps {
    Dense(Vec<Complex64>),
    Sparse(BTreeMap<u64, Complex64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    dims: Vec<usize>,
    amps: Amps,
}

/// Result of a projective measurement on some components.
#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    pub components: Vec<usize>,
    pub outcome: Vec<usize>,
    pub probability: f64,
    pub collapsed: QState,
}

#[derive(Serialize)]
struct DumpEntry {
    label: Vec<usize>,
    re: f64,
    im: f64,
}

fn space_size(dims: &[usize]) -> Result<u64, QsimError> {
    dims.iter().try_fold(1u64, |acc, &d| {
        if d == 0 {
            return Err(QsimError::TooLarge("zero-dimensional component".into()));
        }
        acc.checked_mul(d as u64)
            .ok_or_else(|| QsimError::TooLarge(format!("{dims:?}")))
    })
}

impl QState {
    fn from_entries<I>(dims: Vec<usize>, entries: I) -> Result<Self, QsimError>
    where
        I: IntoIterator<Item = (u64, Complex64)>,
    {
        let size = space_size(&dims)?;
        let amps = if size <= DENSE_LIMIT {
            let mut v = vec![Complex64::new(0.0, 0.0); size as usize];
            for (i, a) in entries {
                v[i as usize] += a;
            }
            Amps::Dense(v)
        } else {
            let mut m: BTreeMap<u64, Complex64> = BTreeMap::new();
            for (i, a) in entries {
                *m.entry(i).or_default() += a;
            }
            m.retain(|_, a| a.norm_sqr() > ZERO_CUTOFF);
            Amps::Sparse(m)
        };
        Ok(QState { dims, amps })
    }

    /// Nonzero (flat index, amplitude) pairs in increasing index order.
    fn entries(&self) -> Vec<(u64, Complex64)> {
        match &self.amps {
            Amps::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() > ZERO_CUTOFF)
                .map(|(i, a)| (i as u64, *a))
                .collect(),
            Amps::Sparse(m) => m.iter().map(|(i, a)| (*i, *a)).collect(),
        }
    }

    fn index_of(&self, label: &[usize]) -> Result<u64, QsimError> {
        if label.len() != self.dims.len() || label.iter().zip(&self.dims).any(|(l, d)| l >= d) {
            return Err(QsimError::LabelOutOfRange {
                label: label.to_vec(),
                dims: self.dims.clone(),
            });
        }
        Ok(label
            .iter()
            .zip(&self.dims)
            .fold(0u64, |acc, (&l, &d)| acc * d as u64 + l as u64))
    }

    fn label_of(&self, mut index: u64) -> Vec<usize> {
        let mut label = vec![0; self.dims.len()];
        for (slot, &d) in label.iter_mut().zip(&self.dims).rev() {
            *slot = (index % d as u64) as usize;
            index /= d as u64;
        }
        label
    }

    fn check_component(&self, c: usize) -> Result<(), QsimError> {
        if c >= self.dims.len() {
            return Err(QsimError::NoSuchComponent {
                component: c,
                count: self.dims.len(),
            });
        }
        Ok(())
    }

    fn stride(&self, c: usize) -> u64 {
        self.dims[c + 1..].iter().map(|&d| d as u64).product()
    }

    /// The basis state |label⟩.
    pub fn basis(dims: &[usize], label: &[usize]) -> Result<Self, QsimError> {
        let probe = QState {
            dims: dims.to_vec(),
            amps: Amps::Sparse(BTreeMap::new()),
        };
        let i = probe.index_of(label)?;
        Self::from_entries(dims.to_vec(), [(i, Complex64::new(1.0, 0.0))])
    }

    /// Builds a state from labelled amplitudes (repeated labels add) without normalizing.
    pub fn from_amplitudes(dims: &[usize], amps: &[(Vec<usize>, Complex64)]) -> Result<Self, QsimError> {
        let probe = QState {
            dims: dims.to_vec(),
            amps: Amps::Sparse(BTreeMap::new()),
        };
        let entries = amps
            .iter()
            .map(|(l, a)| probe.index_of(l).map(|i| (i, *a)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_entries(dims.to_vec(), entries)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.amps, Amps::Dense(_))
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries().iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalize(&self) -> Result<Self, QsimError> {
        let n = self.norm_sq();
        if n <= ZERO_CUTOFF {
            return Err(QsimError::Unnormalized(n));
        }
        let s = 1.0 / n.sqrt();
        self.map_entries(|a| a * s)
    }

    fn map_entries<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Result<Self, QsimError> {
        Self::from_entries(self.dims.clone(), self.entries().into_iter().map(|(i, a)| (i, f(a))))
    }

    pub fn amplitude(&self, label: &[usize]) -> Result<Complex64, QsimError> {
        let i = self.index_of(label)?;
        Ok(match &self.amps {
            Amps::Dense(v) => v[i as usize],
            Amps::Sparse(m) => m.get(&i).copied().unwrap_or_default(),
        })
    }

    /// Labels with nonzero amplitude.
    pub fn support(&self) -> Vec<(Vec<usize>, Complex64)> {
        self.entries().into_iter().map(|(i, a)| (self.label_of(i), a)).collect()
    }

    /// Tensor product, `self`'s components first.
    pub fn tensor(&self, other: &QState) -> Result<Self, QsimError> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let width = space_size(&other.dims)?;
        space_size(&dims)?;
        let b = other.entries();
        let entries: Vec<(u64, Complex64)> = self
            .entries()
            .into_iter()
            .flat_map(|(i, a)| b.iter().map(move |(j, c)| (i * width + j, a * c)))
            .collect();
        Self::from_entries(dims, entries)
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &QState) -> Result<Complex64, QsimError> {
        if self.dims != other.dims {
            return Err(QsimError::DimsMismatch);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        match (&self.amps, &other.amps) {
            (Amps::Dense(a), Amps::Dense(b)) => {
                for (x, y) in a.iter().zip(b) {
                    acc += x.conj() * y;
                }
            }
            _ => {
                let b: HashMap<u64, Complex64> = other.entries().into_iter().collect();
                for (i, x) in self.entries() {
                    if let Some(y) = b.get(&i) {
                        acc += x.conj() * y;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// ‖self − other‖₂.
    pub fn l2_distance(&self, other: &QState) -> Result<f64, QsimError> {
        if self.dims != other.dims {
            return Err(QsimError::DimsMismatch);
        }
        let mut diff: HashMap<u64, Complex64> = self.entries().into_iter().collect();
        for (i, b) in other.entries() {
            *diff.entry(i).or_default() -= b;
        }
        Ok(diff.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt())
    }

    /// Born probabilities of the outcomes on `components`.
    pub fn marginal(&self, components: &[usize]) -> Result<BTreeMap<Vec<usize>, f64>, QsimError> {
        for &c in components {
            self.check_component(c)?;
        }
        let mut out: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (i, a) in self.entries() {
            let label = self.label_of(i);
            let key: Vec<usize> = components.iter().map(|&c| label[c]).collect();
            *out.entry(key).or_default() += a.norm_sqr();
        }
        Ok(out)
    }

    /// Projective measurement of `components` in the computational basis.
    pub fn measure<R: Rng + ?Sized>(&self, components: &[usize], rng: &mut R) -> Result<MeasurementRecord, QsimError> {
        let marg = self.marginal(components)?;
        let total: f64 = marg.values().sum();
        if total <= ZERO_CUTOFF {
            return Err(QsimError::Unnormalized(total));
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (k, p) in &marg {
            acc += p;
            if u < acc {
                chosen = Some((k.clone(), *p));
                break;
            }
        }
        let (outcome, p) = chosen.unwrap_or_else(|| {
            let (k, p) = marg.iter().next_back().expect("nonempty marginal");
            (k.clone(), *p)
        });
        let kept: Vec<(u64, Complex64)> = self
            .entries()
            .into_iter()
            .filter(|(i, _)| {
                let l = self.label_of(*i);
                components.iter().zip(&outcome).all(|(&c, &o)| l[c] == o)
            })
            .collect();
        let collapsed = Self::from_entries(self.dims.clone(), kept)?.normalize()?;
        Ok(MeasurementRecord {
            components: components.to_vec(),
            outcome,
            probability: p / total,
            collapsed,
        })
    }

    fn transform_component<F>(&self, c: usize, kernel: F) -> Result<Self, QsimError>
    where
        F: Fn(usize, usize) -> Complex64,
    {
        // Applies out[..i..] = Σ_x kernel(i, x) · in[..x..] on component c, fibre by fibre.
        self.check_component(c)?;
        let d = self.dims[c] as u64;
        let stride = self.stride(c);
        let mut fibres: BTreeMap<u64, Vec<(usize, Complex64)>> = BTreeMap::new();
        for (i, a) in self.entries() {
            let digit = (i / stride) % d;
            let base = i - digit * stride;
            fibres.entry(base).or_default().push((digit as usize, a));
        }
        let mut out = Vec::new();
        for (base, support) in fibres {
            for k in 0..d as usize {
                let v: Complex64 = support.iter().map(|&(x, a)| kernel(k, x) * a).sum();
                if v.norm_sqr() > ZERO_CUTOFF {
                    out.push((base + k as u64 * stride, v));
                }
            }
        }
        Self::from_entries(self.dims.clone(), out)
    }

    /// |x⟩ ↦ (1/√N) Σ_i e(ix/N) |i⟩ on `component`.
    pub fn fourier_mod(&self, component: usize) -> Result<Self, QsimError> {
        self.check_component(component)?;
        let n = self.dims[component] as u64;
        let table: Vec<Complex64> = (0..n).map(|k| e_frac(k as i128, n)).collect();
        let s = 1.0 / (n as f64).sqrt();
        self.transform_component(component, |i, x| table[(i as u64 * x as u64 % n) as usize] * s)
    }

    pub fn inverse_fourier_mod(&self, component: usize) -> Result<Self, QsimError> {
        self.check_component(component)?;
        let n = self.dims[component] as u64;
        let table: Vec<Complex64> = (0..n).map(|k| e_frac(-(k as i128), n)).collect();
        let s = 1.0 / (n as f64).sqrt();
        self.transform_component(component, |i, x| table[(i as u64 * x as u64 % n) as usize] * s)
    }

    fn qubit(&self, component: usize) -> Result<(), QsimError> {
        self.check_component(component)?;
        if self.dims[component] != 2 {
            return Err(QsimError::WrongDimension {
                component,
                expected: 2,
                actual: self.dims[component],
            });
        }
        Ok(())
    }

    pub fn hadamard(&self, component: usize) -> Result<Self, QsimError> {
        self.qubit(component)?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        self.transform_component(component, |i, x| {
            let sign = if i == 1 && x == 1 { -1.0 } else { 1.0 };
            Complex64::new(sign * h, 0.0)
        })
    }

    /// diag(1, i).
    pub fn phase_i(&self, component: usize) -> Result<Self, QsimError> {
        self.qubit(component)?;
        self.transform_component(component, |i, x| match (i, x) {
            (0, 0) => Complex64::new(1.0, 0.0),
            (1, 1) => Complex64::new(0.0, 1.0),
            _ => Complex64::new(0.0, 0.0),
        })
    }

    /// Permutes basis labels by `f`; fails if two support labels collide or a
    /// label leaves the space.
    pub fn apply_label_fn<F>(&self, f: F) -> Result<Self, QsimError>
    where
        F: Fn(&[usize]) -> Vec<usize>,
    {
        let mut seen: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut out = Vec::new();
        for (i, a) in self.entries() {
            let src = self.label_of(i);
            let img = f(&src);
            let j = self.index_of(&img)?;
            if let Some(prev) = seen.insert(j, src.clone()) {
                return Err(QsimError::NonReversible {
                    first: prev,
                    second: src,
                    image: img,
                });
            }
            out.push((j, a));
        }
        Self::from_entries(self.dims.clone(), out)
    }

    /// JSON array of {label, re, im} over the support.
    pub fn to_json(&self) -> String {
        let dump: Vec<DumpEntry> = self
            .support()
            .into_iter()
            .map(|(label, a)| DumpEntry {
                label,
                re: a.re,
                im: a.im,
            })
            .collect();
        serde_json::to_string(&dump).expect("state dump serializes")
    }
}

/// √(1 − |⟨ψ1|ψ2⟩|²) for normalized pure states.
pub fn trace_distance_pure(a: &QState, b: &QState) -> Result<f64, QsimError> {
    for s in [a, b] {
        if !s.is_normalized() {
            return Err(QsimError::Unnormalized(s.norm_sq()));
        }
    }
    let overlap = a.inner(b)?.norm_sqr().min(1.0);
    let d = (1.0 - overlap).sqrt();
    let l2 = a.l2_distance(b)?;
    // d carries √ε rounding noise near overlap 1.
    assert!(d <= l2 + 1e-6, "trace distance {d} exceeds l2 distance {l2}");
    Ok(d)
}

/// Trace distance of two product states from their factors' overlaps.
pub fn trace_distance_product(a: &[QState], b: &[QState]) -> Result<f64, QsimError> {
    if a.len() != b.len() {
        return Err(QsimError::DimsMismatch);
    }
    let mut overlap = 1.0;
    for (x, y) in a.iter().zip(b) {
        if !x.is_normalized() || !y.is_normalized() {
            return Err(QsimError::Unnormalized(x.norm_sq().max(y.norm_sq())));
        }
        overlap *= x.inner(y)?.norm_sqr().min(1.0);
    }
    Ok((1.0 - overlap).sqrt())
}
