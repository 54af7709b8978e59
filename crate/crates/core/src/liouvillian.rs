//! Master equation on the dressed-atom ⊗ Fock space.
//!
//! In the frame rotating at the lasing frequency, with the cavity tuned to
//! the lower Mollow sideband and only the resonant coupling kept,
//!
//! ```text
//! d rho/dt = -g1 [a^+ R21 - R12 a, rho]
//!          + gamma0 D[R3] + gamma_+ D[R12] + gamma_- D[R21] + kappa D[a],
//! D[c] rho = c rho c^+ - (c^+ c rho + rho c^+ c) / 2,
//! ```
//!
//! where `R12 = |1~><2~|` pumps the upper lasing level `|1~>` and
//! `R3 = |1~><1~| - |2~><2~|`.
//!
//! Every term conserves the excitation index `q = n - [atom in |2~>]` up to
//! a common shift on both sides of `rho`, so the superoperator is block
//! diagonal in the sector `q(i) - q(j)`. The steady state lives in sector 0
//! and the regression vector `a rho` in sector -1; each sector has about
//! `4 (N + 1)` elements and is banded when ordered by `q`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::banded::BandedLu;
use crate::dressed::DressedRates;
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Default ceiling on the superoperator dimension `dim^2`.
pub const DEFAULT_MEMORY_CAP: usize = 250_000;
/// Largest sector handled by the dense cross-check.
pub const DENSE_CHECK_MAX: usize = 1200;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const NULL_RESIDUAL_TOL: f64 = 1e-10;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Real sparse operator as `(row, col, value)` triplets.
pub type Operator = Vec<(usize, usize, f64)>;

/// Atom index of the upper lasing level `|1~>`.
pub const UPPER: usize = 0;
/// Atom index of the lower lasing level `|2~>`.
pub const LOWER: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockAtomSpace {
    n_max: usize,
}

impl FockAtomSpace {
    pub fn new(n_max: usize) -> Result<FockAtomSpace> {
        if n_max < 2 {
            return Err(Error::InvalidParameter("truncation N must be at least 2"));
        }
        Ok(FockAtomSpace { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    pub fn index(&self, atom: usize, n: usize) -> usize {
        atom * (self.n_max + 1) + n
    }

    pub fn atom(&self, i: usize) -> usize {
        i / (self.n_max + 1)
    }

    pub fn photons(&self, i: usize) -> usize {
        i % (self.n_max + 1)
    }

    /// Excitation index `n - [atom in |2~>]`.
    pub fn charge(&self, i: usize) -> i64 {
        self.photons(i) as i64 - (self.atom(i) == LOWER) as i64
    }

    pub fn annihilation(&self) -> Operator {
        let mut op = Vec::new();
        for atom in [UPPER, LOWER] {
            for n in 1..=self.n_max {
                op.push((self.index(atom, n - 1), self.index(atom, n), libm::sqrt(n as f64)));
            }
        }
        op
    }

    /// `|1~><2~|`.
    pub fn r12(&self) -> Operator {
        (0..=self.n_max).map(|n| (self.index(UPPER, n), self.index(LOWER, n), 1.0)).collect()
    }

    /// `|2~><1~|`.
    pub fn r21(&self) -> Operator {
        (0..=self.n_max).map(|n| (self.index(LOWER, n), self.index(UPPER, n), 1.0)).collect()
    }

    /// `|1~><1~| - |2~><2~|`.
    pub fn r3(&self) -> Operator {
        (0..=self.n_max)
            .flat_map(|n| [(self.index(UPPER, n), self.index(UPPER, n), 1.0), (self.index(LOWER, n), self.index(LOWER, n), -1.0)])
            .collect()
    }

    /// `a^+ R21 - R12 a`.
    pub fn coupling(&self) -> Operator {
        let mut op = Vec::new();
        for n in 0..self.n_max {
            let s = libm::sqrt((n + 1) as f64);
            op.push((self.index(LOWER, n + 1), self.index(UPPER, n), s));
            op.push((self.index(UPPER, n), self.index(LOWER, n + 1), -s));
        }
        op
    }
}

fn product(a: &Operator, b: &Operator) -> Operator {
    let mut by_row: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for &(k, j, v) in b {
        by_row.entry(k).or_default().push((j, v));
    }
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(i, k, u) in a {
        if let Some(row) = by_row.get(&k) {
            for &(j, v) in row {
                *acc.entry((i, j)).or_insert(0.0) += u * v;
            }
        }
    }
    acc.into_iter().filter(|&(_, v)| v != 0.0).map(|((i, j), v)| (i, j, v)).collect()
}

fn transpose(a: &Operator) -> Operator {
    a.iter().map(|&(i, j, v)| (j, i, v)).collect()
}

/// Superoperator acting on `vec(rho)` with row-major index `i * dim + j`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    space: FockAtomSpace,
    matrix: CsrMatrix,
}

/// A block of the superoperator on pairs `(i, j)` with fixed
/// `q(i) - q(j)`, ordered so that the block is banded.
#[derive(Debug, Clone)]
pub struct Sector {
    pub charge: i64,
    /// `(i, j)` for each sector coordinate.
    pub pairs: Vec<(usize, usize)>,
    pub matrix: CsrMatrix,
}

impl Liouvillian {
    pub fn build(rates: &DressedRates, kappa: f64, n_max: usize) -> Result<Liouvillian> {
        Liouvillian::build_with_cap(rates, kappa, n_max, DEFAULT_MEMORY_CAP)
    }

    pub fn build_with_cap(rates: &DressedRates, kappa: f64, n_max: usize, cap: usize) -> Result<Liouvillian> {
        rates.validate()?;
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter("kappa must be non-negative and finite"));
        }
        let space = FockAtomSpace::new(n_max)?;
        let d = space.dim();
        if d * d > cap {
            return Err(Error::MemoryCap { dim: d * d, cap });
        }
        let mut b = TripletBuilder::new(d * d);
        let left = |b: &mut TripletBuilder, op: &Operator, s: f64| {
            for &(i, k, v) in op {
                for j in 0..d {
                    b.push(i * d + j, k * d + j, re(s * v));
                }
            }
        };
        let right = |b: &mut TripletBuilder, op: &Operator, s: f64| {
            for &(k, j, v) in op {
                for i in 0..d {
                    b.push(i * d + j, i * d + k, re(s * v));
                }
            }
        };
        if rates.g1 != 0.0 {
            let k = space.coupling();
            left(&mut b, &k, -rates.g1);
            right(&mut b, &k, rates.g1);
        }
        let channels = [
            (rates.gamma0, space.r3()),
            (rates.gamma_plus, space.r12()),
            (rates.gamma_minus, space.r21()),
            (kappa, space.annihilation()),
        ];
        for (rate, c) in channels.iter() {
            if *rate == 0.0 {
                continue;
            }
            for &(i, k, u) in c {
                for &(j, l, v) in c {
                    b.push(i * d + j, k * d + l, re(rate * u * v));
                }
            }
            let cdc = product(&transpose(c), c);
            left(&mut b, &cdc, -0.5 * rate);
            right(&mut b, &cdc, -0.5 * rate);
        }
        Ok(Liouvillian { space, matrix: b.build() })
    }

    pub fn space(&self) -> FockAtomSpace {
        self.space
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// `L[rho]` for a dense density matrix.
    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix { space: self.space, entries: self.matrix.mul_vec(&rho.entries) }
    }

    pub fn sector(&self, charge: i64) -> Sector {
        let sp = self.space;
        let d = sp.dim();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for i in 0..d {
            for j in 0..d {
                if sp.charge(i) - sp.charge(j) == charge {
                    pairs.push((i, j));
                }
            }
        }
        pairs.sort_by_key(|&(i, j)| (sp.charge(i), i, j));
        let idx: Vec<usize> = pairs.iter().map(|&(i, j)| i * d + j).collect();
        Sector { charge, matrix: self.matrix.principal_submatrix(&idx), pairs }
    }

    /// Fixed-step RK4 propagation of `rho` over `t`.
    pub fn evolve(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        let radius = self.matrix.gershgorin_radius();
        let steps = if radius == 0.0 { 1 } else { libm::ceil(t * radius).max(1.0) as usize };
        let h = t / steps as f64;
        let mut x = rho.entries.clone();
        let mut w = Rk4::new(x.len());
        for s in 0..steps {
            w.step(&self.matrix, &mut x, h);
            if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::PropagationUnstable { tau: (s + 1) as f64 * h });
            }
        }
        Ok(DensityMatrix { space: self.space, entries: x })
    }
}

struct Rk4 {
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(n: usize) -> Rk4 {
        Rk4 { k: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]], tmp: vec![ZERO; n] }
    }

    fn step(&mut self, m: &CsrMatrix, x: &mut [Complex64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        m.mul_vec_into(x, k1);
        for ((t, xi), d) in tmp.iter_mut().zip(x.iter()).zip(k1.iter()) {
            *t = xi + d * (0.5 * h);
        }
        m.mul_vec_into(tmp, k2);
        for ((t, xi), d) in tmp.iter_mut().zip(x.iter()).zip(k2.iter()) {
            *t = xi + d * (0.5 * h);
        }
        m.mul_vec_into(tmp, k3);
        for ((t, xi), d) in tmp.iter_mut().zip(x.iter()).zip(k3.iter()) {
            *t = xi + d * h;
        }
        m.mul_vec_into(tmp, k4);
        for i in 0..x.len() {
            x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
}

/// Dense density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: FockAtomSpace,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(space: FockAtomSpace) -> DensityMatrix {
        DensityMatrix { space, entries: vec![ZERO; space.dim() * space.dim()] }
    }

    pub fn from_entries(space: FockAtomSpace, entries: Vec<Complex64>) -> Result<DensityMatrix> {
        if entries.len() != space.dim() * space.dim() {
            return Err(Error::InvalidParameter("entry count must be dim^2"));
        }
        Ok(DensityMatrix { space, entries })
    }

    pub fn space(&self) -> FockAtomSpace {
        self.space
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.space.dim() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let d = self.space.dim();
        self.entries[i * d + j] = v;
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.space.dim()).map(|i| self.get(i, i)).sum()
    }

    /// `max |rho - rho^+|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.space.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Partial trace over the atom: `P_n = <1~,n|rho|1~,n> + <2~,n|rho|2~,n>`.
    pub fn photon_distribution(&self) -> Vec<f64> {
        let sp = self.space;
        (0..=sp.n_max())
            .map(|n| {
                let (u, l) = (sp.index(UPPER, n), sp.index(LOWER, n));
                self.get(u, u).re + self.get(l, l).re
            })
            .collect()
    }

    pub fn mean_photons(&self) -> f64 {
        self.photon_distribution().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Smallest eigenvalue, from Jacobi sweeps on the real-symmetric
    /// embedding of each connected block of the sparsity pattern.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.space.dim();
        let mut parent: Vec<usize> = (0..d).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for i in 0..d {
            for j in 0..d {
                if i != j && self.get(i, j) != ZERO {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..d {
            let r = find(&mut parent, i);
            blocks.entry(r).or_default().push(i);
        }
        let mut lowest = f64::INFINITY;
        for members in blocks.values() {
            let m = members.len();
            let mut h = vec![0.0; 4 * m * m];
            let w = 2 * m;
            for (a, &i) in members.iter().enumerate() {
                for (b, &j) in members.iter().enumerate() {
                    // Hermitian part only; anti-Hermitian noise is reported separately.
                    let v = (self.get(i, j) + self.get(j, i).conj()) * 0.5;
                    h[a * w + b] = v.re;
                    h[(a + m) * w + b + m] = v.re;
                    h[(a + m) * w + b] = v.im;
                    h[a * w + b + m] = -v.im;
                }
            }
            lowest = lowest.min(symmetric_eigenvalues(&mut h, w).into_iter().fold(f64::INFINITY, f64::min));
        }
        lowest
    }
}

/// Cyclic Jacobi eigenvalues of a real symmetric `n x n` matrix.
fn symmetric_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    for _ in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a[i * n + i] * a[i * n + i];
            for j in 0..n {
                if i != j {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
        }
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

fn sector_to_density(space: FockAtomSpace, sector: &Sector, x: &[Complex64]) -> DensityMatrix {
    let mut rho = DensityMatrix::zeros(space);
    for (&(i, j), &v) in sector.pairs.iter().zip(x) {
        rho.set(i, j, v);
    }
    rho
}

fn sector_trace(sector: &Sector, x: &[Complex64]) -> Complex64 {
    sector.pairs.iter().zip(x).filter(|((i, j), _)| i == j).map(|(_, &v)| v).sum()
}

fn relative_residual(m: &CsrMatrix, x: &[Complex64]) -> f64 {
    let r = m.mul_vec(x);
    let worst = r.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    let size = x.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    let denom = m.max_row_norm() * size;
    if denom == 0.0 {
        0.0
    } else {
        worst / denom
    }
}

/// Null vector of the sector-0 block by shifted inverse iteration.
fn inverse_iteration(lu: &BandedLu, m: &CsrMatrix, sector: &Sector, start: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let mut x = start;
    let mut residual = f64::INFINITY;
    for _ in 0..60 {
        lu.solve_in_place(&mut x);
        let size = x.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
        if !(size > 0.0) || !size.is_finite() {
            return Err(Error::NullSpaceNonConvergence { residual });
        }
        x.iter_mut().for_each(|v| *v /= size);
        residual = relative_residual(m, &x);
        if residual <= 0.1 * NULL_RESIDUAL_TOL {
            break;
        }
    }
    if !(residual <= NULL_RESIDUAL_TOL) {
        return Err(Error::NullSpaceNonConvergence { residual });
    }
    let tr = sector_trace(sector, &x);
    if tr.norm() < 1e-12 {
        // A traceless stationary vector only exists when the null space is degenerate.
        return Err(Error::DegenerateNullSpace);
    }
    x.iter_mut().for_each(|v| *v /= tr);
    Ok(x)
}

/// Stationary density matrix, normalized to unit trace.
///
/// Two inverse iterations from unrelated starts must land on the same state;
/// otherwise the null space is degenerate and [`Error::DegenerateNullSpace`]
/// is returned.
pub fn steady_state_density(l: &Liouvillian) -> Result<DensityMatrix> {
    let sector = l.sector(0);
    let m = &sector.matrix;
    let scale = m.max_row_norm();
    if scale == 0.0 {
        return Err(Error::DegenerateNullSpace);
    }
    let lu = BandedLu::factor(m, re(1e-10 * scale))?;
    let mixed: Vec<Complex64> = sector.pairs.iter().map(|&(i, j)| if i == j { re(1.0) } else { ZERO }).collect();
    let skewed: Vec<Complex64> = sector
        .pairs
        .iter()
        .map(|&(i, j)| if i == j { re(1.0 / (1.0 + i as f64)) } else { Complex64::new(0.0, 1e-3) })
        .collect();
    let x = inverse_iteration(&lu, m, &sector, mixed)?;
    let y = inverse_iteration(&lu, m, &sector, skewed)?;
    let gap = x.iter().zip(&y).fold(0.0_f64, |a, (u, v)| a.max((u - v).norm()));
    if gap > 1e-6 {
        return Err(Error::DegenerateNullSpace);
    }
    Ok(sector_to_density(l.space, &sector, &x))
}

/// Dense cross-check of [`steady_state_density`]: Gaussian elimination with
/// complete pivoting on sector 0, one equation replaced by `Tr rho = 1`.
pub fn steady_state_density_dense(l: &Liouvillian) -> Result<DensityMatrix> {
    let sector = l.sector(0);
    let n = sector.pairs.len();
    if n > DENSE_CHECK_MAX {
        return Err(Error::MemoryCap { dim: n, cap: DENSE_CHECK_MAX });
    }
    let mut a = vec![ZERO; n * n];
    for i in 0..n {
        for (c, v) in sector.matrix.row(i) {
            a[i * n + c] = v;
        }
    }
    // The trace row replaces the equation of the first diagonal element.
    let replaced = sector.pairs.iter().position(|&(i, j)| i == j).ok_or(Error::Singular)?;
    let mut rhs = vec![ZERO; n];
    for (k, &(i, j)) in sector.pairs.iter().enumerate() {
        a[replaced * n + k] = if i == j { re(1.0) } else { ZERO };
    }
    rhs[replaced] = re(1.0);
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let mut cols: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for r in k..n {
            for c in k..n {
                let v = a[r * n + c].norm();
                if v > best {
                    best = v;
                    pr = r;
                    pc = c;
                }
            }
        }
        if best <= 1e-13 * scale {
            return Err(Error::Singular);
        }
        if pr != k {
            for c in 0..n {
                a.swap(k * n + c, pr * n + c);
            }
            rhs.swap(k, pr);
        }
        if pc != k {
            for r in 0..n {
                a.swap(r * n + k, r * n + pc);
            }
            cols.swap(k, pc);
        }
        let p = a[k * n + k];
        for r in k + 1..n {
            let f = a[r * n + k] / p;
            if f != ZERO {
                for c in k..n {
                    let v = a[k * n + c];
                    a[r * n + c] -= f * v;
                }
                let v = rhs[k];
                rhs[r] -= f * v;
            }
        }
    }
    let mut y = vec![ZERO; n];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for c in k + 1..n {
            acc -= a[k * n + c] * y[c];
        }
        y[k] = acc / a[k * n + k];
    }
    let mut x = vec![ZERO; n];
    for k in 0..n {
        x[cols[k]] = y[k];
    }
    Ok(sector_to_density(l.space, &sector, &x))
}

/// Populations `(rho_{1~1~}, rho_{2~2~})` traced over the field.
pub fn dressed_populations(rho: &DensityMatrix) -> (f64, f64) {
    let sp = rho.space();
    let mut p = (0.0, 0.0);
    for n in 0..=sp.n_max() {
        let (u, l) = (sp.index(UPPER, n), sp.index(LOWER, n));
        p.0 += rho.get(u, u).re;
        p.1 += rho.get(l, l).re;
    }
    p
}

/// Stationary field correlation `g(tau) = <a^+(t + tau) a(t)>` sampled on
/// `tau_k = k dtau`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub dtau: f64,
    pub g: Vec<Complex64>,
}

impl Correlation {
    pub fn horizon(&self) -> f64 {
        self.dtau * (self.g.len() - 1) as f64
    }

    /// `|g(T)| / |g(0)|`; zero when `g` vanishes identically.
    pub fn decay_ratio(&self) -> f64 {
        let g0 = self.g[0].norm();
        if g0 == 0.0 {
            0.0
        } else {
            self.g[self.g.len() - 1].norm() / g0
        }
    }
}

/// Required decay `|g(T)| / |g(0)|` at the horizon.
pub const DECAY_TARGET: f64 = 1e-3;

/// How far to propagate the regression vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Fixed(f64),
    /// Start at `start`, double until the decay target is met or `max` is passed.
    Auto { start: f64, max: f64 },
}

struct Regression {
    sector: Sector,
    x: Vec<Complex64>,
    weights: Vec<Complex64>,
}

impl Regression {
    fn new(l: &Liouvillian, rho: &DensityMatrix) -> Regression {
        let sp = l.space;
        let sector = l.sector(-1);
        let nm = sp.n_max();
        let mut x = vec![ZERO; sector.pairs.len()];
        let mut weights = vec![ZERO; sector.pairs.len()];
        for (k, &(i, j)) in sector.pairs.iter().enumerate() {
            // (a rho)_{ij} = sqrt(n_i + 1) rho_{i+1, j}
            let ni = sp.photons(i);
            if ni < nm {
                x[k] = rho.get(i + 1, j) * libm::sqrt((ni + 1) as f64);
            }
            // Tr(a^+ X) = sum a_{ij} X_{ij}
            if sp.atom(i) == sp.atom(j) && sp.photons(j) == ni + 1 {
                weights[k] = re(libm::sqrt((ni + 1) as f64));
            }
        }
        Regression { sector, x, weights }
    }

    fn observe(&self) -> Complex64 {
        self.weights.iter().zip(&self.x).map(|(w, v)| w * v).sum()
    }
}

/// Regression-theorem correlation by RK4 in the `q(i) - q(j) = -1` sector.
///
/// The internal step is `dtau` divided until it is below the inverse
/// Gershgorin bound of the sector.
pub fn correlation(l: &Liouvillian, rho: &DensityMatrix, dtau: f64, horizon: Horizon) -> Result<Correlation> {
    if !(dtau > 0.0 && dtau.is_finite()) {
        return Err(Error::InvalidGrid("dtau must be positive"));
    }
    let (first, max) = match horizon {
        Horizon::Fixed(t) => (t, t),
        Horizon::Auto { start, max } => (start, max),
    };
    if !(first >= dtau && max >= first && max.is_finite()) {
        return Err(Error::InvalidGrid("horizon must cover at least one step"));
    }
    let mut reg = Regression::new(l, rho);
    let m = reg.sector.matrix.clone();
    let radius = m.gershgorin_radius();
    let sub = libm::ceil(dtau * radius).max(1.0) as usize;
    let h = dtau / sub as f64;
    let mut rk = Rk4::new(reg.x.len());
    let mut g = vec![reg.observe()];
    let bound = 10.0 * reg.x.iter().fold(0.0_f64, |a, v| a.max(v.norm())).max(1e-300);
    let mut target = first;
    loop {
        let samples = libm::round(target / dtau) as usize;
        while g.len() <= samples {
            for _ in 0..sub {
                rk.step(&m, &mut reg.x, h);
            }
            let worst = reg.x.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
            if !(worst <= bound) {
                return Err(Error::PropagationUnstable { tau: g.len() as f64 * dtau });
            }
            g.push(reg.observe());
        }
        let corr = Correlation { dtau, g: g.clone() };
        if corr.decay_ratio() <= DECAY_TARGET || 2.0 * target > max {
            return Ok(corr);
        }
        target *= 2.0;
    }
}

/// `S(nu) = 2 Re int_0^inf e^{i nu tau} g(tau) d tau`, evaluated exactly
/// from the resolvent: `-2 Re Tr(a^+ (L + i nu)^{-1} a rho)`.
pub fn spectrum_resolvent(l: &Liouvillian, rho: &DensityMatrix, omega: &[f64]) -> Result<Vec<f64>> {
    let reg = Regression::new(l, rho);
    omega
        .iter()
        .map(|&nu| {
            let lu = BandedLu::factor(&reg.sector.matrix, Complex64::new(0.0, nu))?;
            let mut y = reg.x.clone();
            lu.solve_in_place(&mut y);
            let t: Complex64 = reg.weights.iter().zip(&y).map(|(w, v)| w * v).sum();
            Ok(-2.0 * t.re)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressed::GapFlags;
    use crate::ladder;

    fn rates(c: f64, g: f64, gap: GapFlags) -> DressedRates {
        DressedRates::from_mixing(1.0, g, c, gap)
    }

    #[test]
    fn operators_have_expected_structure() {
        let sp = FockAtomSpace::new(3).unwrap();
        assert_eq!(sp.dim(), 8);
        assert_eq!(sp.index(LOWER, 2), 6);
        assert_eq!(sp.charge(sp.index(LOWER, 0)), -1);
        let a = sp.annihilation();
        let n = product(&transpose(&a), &a);
        for &(i, j, v) in &n {
            assert_eq!(i, j);
            assert!((v - sp.photons(i) as f64).abs() < 1e-14);
        }
        assert!(FockAtomSpace::new(1).is_err());
    }

    #[test]
    fn zero_rates_give_zero_map() {
        let r = DressedRates { cos2phi: 1.0, omega2: None, gamma0: 0.0, gamma_plus: 0.0, gamma_minus: 0.0, g1: 0.0 };
        let l = Liouvillian::build(&r, 0.0, 4).unwrap();
        assert_eq!(l.matrix().nnz(), 0);
        assert_eq!(steady_state_density(&l), Err(Error::DegenerateNullSpace));
    }

    #[test]
    fn trace_is_annihilated() {
        let l = Liouvillian::build(&rates(0.4, 3.0, GapFlags::OPEN), 0.3, 6).unwrap();
        let d = l.space().dim();
        let id: Vec<Complex64> = (0..d * d).map(|k| if k / d == k % d { re(1.0) } else { ZERO }).collect();
        let left = l.matrix().left_mul_vec(&id);
        assert!(left.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn memory_cap_is_enforced() {
        let r = rates(0.4, 3.0, GapFlags::OPEN);
        assert!(matches!(Liouvillian::build_with_cap(&r, 0.3, 10, 100), Err(Error::MemoryCap { dim: 484, cap: 100 })));
    }

    #[test]
    fn decoupled_atom_balances_flip_rates() {
        let r = DressedRates { g1: 0.0, ..rates(0.7, 3.0, GapFlags::OPEN) };
        let l = Liouvillian::build(&r, 0.5, 5).unwrap();
        let rho = steady_state_density(&l).unwrap();
        let (p1, p2) = dressed_populations(&rho);
        assert!((p1 / p2 - r.gamma_plus / r.gamma_minus).abs() < 1e-9);
        assert!((p1 + p2 - 1.0).abs() < 1e-9);
        let p = rho.photon_distribution();
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_pump_leaves_field_empty() {
        let r = DressedRates { gamma_plus: 0.0, ..rates(0.3, 3.0, GapFlags::OPEN) };
        let l = Liouvillian::build(&r, 0.5, 5).unwrap();
        let rho = steady_state_density(&l).unwrap();
        assert!(rho.mean_photons().abs() < 1e-12);
        let c = correlation(&l, &rho, 0.1, Horizon::Fixed(5.0)).unwrap();
        assert!(c.g.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn inverse_iteration_matches_dense_and_ladder() {
        for (c, g, gap, kappa, n) in [
            (0.6, 2.0, GapFlags::LASING_LINE_BLOCKED, 0.2, 20),
            (0.35, 1.0, GapFlags::OPEN, 0.05, 25),
        ] {
            let r = rates(c, g, gap);
            let l = Liouvillian::build(&r, kappa, n).unwrap();
            let rho = steady_state_density(&l).unwrap();
            let dense = steady_state_density_dense(&l).unwrap();
            for (u, v) in rho.entries().iter().zip(dense.entries()) {
                assert!((u - v).norm() < 1e-10);
            }
            assert!(rho.hermiticity_error() < 1e-10);
            assert!((rho.trace() - re(1.0)).norm() < 1e-9);
            assert!(rho.min_eigenvalue() > -1e-8);
            let lad = ladder::steady_state(&r, kappa, n, f64::INFINITY).unwrap();
            for (u, v) in rho.photon_distribution().iter().zip(&lad.p1) {
                assert!((u - v).abs() < 1e-8, "{u} vs {v}");
            }
            let (p1, p2) = dressed_populations(&rho);
            let diff: f64 = lad.p2.iter().sum();
            assert!((p2 - p1 - diff).abs() < 1e-8);
        }
    }

    #[test]
    fn correlation_starts_at_mean_photon_number() {
        let r = rates(0.6, 2.0, GapFlags::LASING_LINE_BLOCKED);
        let l = Liouvillian::build(&r, 0.2, 20).unwrap();
        let rho = steady_state_density(&l).unwrap();
        let c = correlation(&l, &rho, 0.05, Horizon::Auto { start: 10.0, max: 2000.0 }).unwrap();
        assert!((c.g[0] - re(rho.mean_photons())).norm() < 1e-9);
        assert!(c.decay_ratio() <= DECAY_TARGET);
        assert!(c.g.iter().all(|v| v.norm() <= c.g[0].norm() * (1.0 + 1e-9)));
    }

    #[test]
    fn evolution_preserves_trace_and_hermiticity() {
        let r = rates(0.5, 2.0, GapFlags::OPEN);
        let l = Liouvillian::build(&r, 0.3, 8).unwrap();
        let sp = l.space();
        let mut rho = DensityMatrix::zeros(sp);
        let d = sp.dim();
        for i in 0..d {
            rho.set(i, i, re(1.0 / d as f64));
        }
        rho.set(0, 3, Complex64::new(0.01, 0.02));
        rho.set(3, 0, Complex64::new(0.01, -0.02));
        let out = l.evolve(&rho, 3.0).unwrap();
        assert!((out.trace() - re(1.0)).norm() < 1e-9 * 3.0);
        assert!(out.hermiticity_error() < 1e-10);
    }

    #[test]
    fn jacobi_eigenvalues() {
        let mut a = vec![2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, -1.0];
        let mut e = symmetric_eigenvalues(&mut a, 3);
        e.sort_by(f64::total_cmp);
        assert!((e[0] + 1.0).abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12 && (e[2] - 3.0).abs() < 1e-12);
    }
}
