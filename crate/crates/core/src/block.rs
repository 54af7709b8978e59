//! Block-tridiagonal systems with 4x4 real blocks.
//!
//! Row block `n` reads `sub[n] x[n-1] + diag[n] x[n] + sup[n] x[n+1]`;
//! `sub[0]` and `sup[last]` are ignored.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub type Block = [[f64; 4]; 4];
pub type Vec4 = [f64; 4];

pub const ZERO: Block = [[0.0; 4]; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal {
    pub sub: Vec<Block>,
    pub diag: Vec<Block>,
    pub sup: Vec<Block>,
}

fn mat_vec(m: &Block, x: &Vec4) -> Vec4 {
    let mut y = [0.0; 4];
    for (yi, row) in y.iter_mut().zip(m) {
        *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
    y
}

fn mat_mul(a: &Block, b: &Block) -> Block {
    let mut c = ZERO;
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..4 {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
    }
    c
}

fn mat_add(a: &Block, b: &Block) -> Block {
    let mut c = *a;
    for (ci, bi) in c.iter_mut().zip(b) {
        for (cij, bij) in ci.iter_mut().zip(bi) {
            *cij += bij;
        }
    }
    c
}

fn max_abs(m: &Block) -> f64 {
    m.iter().flatten().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// `-m^{-1} rhs` by Gaussian elimination with partial pivoting.
fn neg_solve(m: &Block, rhs: &Block) -> Result<Block> {
    let scale = max_abs(m);
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    let mut a = *m;
    let mut b = *rhs;
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[piv][col].abs() <= 1e-14 * scale {
            return Err(Error::Singular);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..4 {
                    a[row][k] -= f * a[col][k];
                }
                for k in 0..4 {
                    b[row][k] -= f * b[col][k];
                }
            }
        }
    }
    let mut x = ZERO;
    for row in (0..4).rev() {
        for j in 0..4 {
            let mut s = b[row][j];
            for k in row + 1..4 {
                s -= a[row][k] * x[k][j];
            }
            x[row][j] = s / a[row][row];
        }
    }
    for v in x.iter_mut().flatten() {
        *v = -*v;
    }
    Ok(x)
}

/// Null vector of a rank-3 block, by elimination with complete pivoting.
fn null_vector4(m: &Block) -> Result<Vec4> {
    let scale = max_abs(m);
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    let mut a = *m;
    let mut cols = [0usize, 1, 2, 3];
    for step in 0..3 {
        let (mut pr, mut pc, mut best) = (step, step, -1.0);
        for (r, row) in a.iter().enumerate().skip(step) {
            for (c, v) in row.iter().enumerate().skip(step) {
                if v.abs() > best {
                    best = v.abs();
                    pr = r;
                    pc = c;
                }
            }
        }
        // A second vanishing pivot means the null space is not one-dimensional.
        if best <= 1e-13 * scale {
            return Err(Error::Singular);
        }
        a.swap(step, pr);
        for row in a.iter_mut() {
            row.swap(step, pc);
        }
        cols.swap(step, pc);
        for r in step + 1..4 {
            let f = a[r][step] / a[step][step];
            for c in step..4 {
                a[r][c] -= f * a[step][c];
            }
        }
    }
    let mut y = [0.0, 0.0, 0.0, 1.0];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..4).map(|c| a[r][c] * y[c]).sum();
        y[r] = -s / a[r][r];
    }
    let mut x = [0.0; 4];
    for (k, &c) in cols.iter().enumerate() {
        x[c] = y[k];
    }
    Ok(x)
}

const RESCALE_ABOVE: f64 = 1e200;

impl BlockTridiagonal {
    pub fn zeros(blocks: usize) -> Self {
        BlockTridiagonal {
            sub: vec![ZERO; blocks],
            diag: vec![ZERO; blocks],
            sup: vec![ZERO; blocks],
        }
    }

    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[Vec4]) -> Vec<Vec4> {
        let n = self.blocks();
        let mut y = vec![[0.0; 4]; n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[Vec4], y: &mut [Vec4]) {
        let n = self.blocks();
        for k in 0..n {
            let mut acc = mat_vec(&self.diag[k], &x[k]);
            if k > 0 {
                let s = mat_vec(&self.sub[k], &x[k - 1]);
                for i in 0..4 {
                    acc[i] += s[i];
                }
            }
            if k + 1 < n {
                let s = mat_vec(&self.sup[k], &x[k + 1]);
                for i in 0..4 {
                    acc[i] += s[i];
                }
            }
            y[k] = acc;
        }
    }

    /// Largest absolute row sum.
    pub fn max_row_norm(&self) -> f64 {
        let n = self.blocks();
        let mut best = 0.0_f64;
        for k in 0..n {
            for i in 0..4 {
                let mut s: f64 = self.diag[k][i].iter().map(|v| v.abs()).sum();
                if k > 0 {
                    s += self.sub[k][i].iter().map(|v| v.abs()).sum::<f64>();
                }
                if k + 1 < n {
                    s += self.sup[k][i].iter().map(|v| v.abs()).sum::<f64>();
                }
                best = best.max(s);
            }
        }
        best
    }

    /// The (one-dimensional) null space of a singular system, with the
    /// elimination meeting at block 0.
    pub fn null_vector(&self) -> Result<Vec<Vec4>> {
        self.null_vector_from(0)
    }

    /// The null space, eliminating towards block `pivot` from both ends.
    ///
    /// Above the pivot `x[k] = U[k] x[k-1]`, below it `x[k] = D[k] x[k+1]`;
    /// each ratio recurrence is stable in the direction where the solution
    /// decays, so `pivot` should sit near the largest block of the solution.
    /// The meeting 4x4 Schur complement is rank-deficient and supplies
    /// `x[pivot]`. The result is scaled to a largest entry of one; entries
    /// far below the peak may underflow to zero.
    pub fn null_vector_from(&self, pivot: usize) -> Result<Vec<Vec4>> {
        let n = self.blocks();
        if n == 0 {
            return Err(Error::InvalidParameter("empty block system"));
        }
        if pivot >= n {
            return Err(Error::InvalidParameter("pivot block out of range"));
        }
        let mut up = vec![ZERO; n];
        let mut schur = self.diag[n - 1];
        for k in (pivot + 1..n).rev() {
            up[k] = neg_solve(&schur, &self.sub[k])?;
            schur = mat_add(&self.diag[k - 1], &mat_mul(&self.sup[k - 1], &up[k]));
        }
        let mut down = vec![ZERO; n];
        if pivot > 0 {
            let mut lower = self.diag[0];
            for k in 0..pivot {
                down[k] = neg_solve(&lower, &self.sup[k])?;
                lower = mat_add(&self.diag[k + 1], &mat_mul(&self.sub[k + 1], &down[k]));
            }
            // Both eliminations touched diag[pivot]; count it once.
            schur = mat_add(&schur, &mat_mul(&self.sub[pivot], &down[pivot - 1]));
        }
        let mut x = vec![[0.0; 4]; n];
        x[pivot] = null_vector4(&schur)?;
        let upper_scale = propagate(&mut x, pivot + 1..n, |k, x| mat_vec(&up[k], &x[k - 1]));
        let lower_scale = propagate(&mut x, (0..pivot).rev(), |k, x| mat_vec(&down[k], &x[k + 1]));
        // Bring both halves to the smaller common scale, then normalize.
        let common = upper_scale.min(lower_scale);
        let (fu, fl) = (common / upper_scale, common / lower_scale);
        for (k, v) in x.iter_mut().enumerate() {
            let f = if k > pivot { fu } else if k < pivot { fl } else { common };
            v.iter_mut().for_each(|e| *e *= f);
        }
        let peak = x.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !(peak > 0.0) || !peak.is_finite() {
            return Err(Error::Singular);
        }
        x.iter_mut().flatten().for_each(|v| *v /= peak);
        Ok(x)
    }
}

/// Fills `x[k]` for `k` in `order`, shrinking everything written so far
/// (including the pivot) when entries exceed [`RESCALE_ABOVE`]. Returns the
/// cumulative factor applied, relative to the pivot block's original scale.
fn propagate(
    x: &mut [Vec4],
    order: impl Iterator<Item = usize>,
    step: impl Fn(usize, &[Vec4]) -> Vec4,
) -> f64 {
    let mut scale = 1.0;
    let mut written: Vec<usize> = Vec::new();
    for k in order {
        let next = step(k, x);
        x[k] = next;
        written.push(k);
        let size = next.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if size > RESCALE_ABOVE {
            let f = 1.0 / size;
            for &j in &written {
                x[j].iter_mut().for_each(|v| *v *= f);
            }
            scale *= f;
        }
    }
    scale
}
