//! Sparse matrices and direct solvers.
//!
//! Coupled systems are solved by sparse LU after eliminating prescribed
//! unknowns; the row paired with each prescribed unknown is dropped.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Compressed sparse rows with sorted, summed column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, f64)]) -> Self {
        let mut count = vec![0usize; nrows + 1];
        for &(i, _, _) in trips {
            count[i + 1] += 1;
        }
        for i in 0..nrows {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut cols = vec![0usize; trips.len()];
        let mut vals = vec![0.0; trips.len()];
        for &(i, j, v) in trips {
            debug_assert!(j < ncols);
            cols[fill[i]] = j;
            vals[fill[i]] = v;
            fill[i] += 1;
        }
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut data = Vec::with_capacity(trips.len());
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((count[i]..count[i + 1]).map(|k| (cols[k], vals[k])));
            // stable sort keeps the summation order fixed
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == c {
                    s += row[k].1;
                    k += 1;
                }
                if s != 0.0 {
                    indices.push(c);
                    data.push(s);
                }
            }
            indptr[i + 1] = indices.len();
        }
        Self { nrows, ncols, indptr, indices, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |k| (self.indices[k], self.data[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        r.binary_search(&j).map(|k| self.data[self.indptr[i] + k]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        (0..self.nrows).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol * scale))
    }

    /// xᵀ A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.nrows).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push(Triplet::new(i, j, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t).map_err(|e| Error::Solver(format!("{e:?}")))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[i][j] = v;
            }
        }
        d
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

fn to_col(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn check_finite(a: &CsrMatrix, b: &[f64]) -> Result<()> {
    if a.data.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite matrix or right-hand side entry".into()));
    }
    Ok(())
}

/// Relative residual ‖b − Ax‖ / (1 + ‖b‖), recomputed from scratch.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    norm(&residual(a, x, b)) / (1.0 + norm(b))
}

/// Symmetric diagonal scaling s_i = 1 / sqrt(max_j |a_ij|), so that rows of
/// very different magnitude (momentum against constraint rows) are solved to
/// comparable relative accuracy.
fn equilibrate(a: &CsrMatrix) -> (CsrMatrix, Vec<f64>) {
    let s: Vec<f64> = (0..a.nrows)
        .map(|i| {
            let m = a.row(i).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            if m > 0.0 { 1.0 / m.sqrt() } else { 1.0 }
        })
        .collect();
    let mut scaled = a.clone();
    for i in 0..a.nrows {
        for k in a.indptr[i]..a.indptr[i + 1] {
            scaled.data[k] *= s[i] * s[a.indices[k]];
        }
    }
    (scaled, s)
}

/// Sparse LU factors of a square matrix.
struct SparseLu(faer::sparse::linalg::solvers::Lu<usize, f64>);

impl SparseLu {
    fn new(a: &CsrMatrix) -> Result<Self> {
        a.to_faer()?.sp_lu().map(Self).map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let x = self.0.solve(&to_col(b));
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }
}

/// LU with the dense rows and columns split off: the sparse block A₀ is
/// factored and the few dense unknowns go through their Schur complement.
/// A single dense row (the enriched pressure couples to every cut element)
/// would otherwise make the symbolic fill of the whole factor dense.
struct BorderedLu {
    lu0: SparseLu,
    /// position of each unknown in A₀, or usize::MAX for a dense one
    map: Vec<usize>,
    dense: Vec<usize>,
    /// A₀⁻¹ A₀D, one column per dense unknown
    z: Vec<Vec<f64>>,
    /// rows of A_D0 in A₀ numbering
    rows: Vec<Vec<(usize, f64)>>,
    schur: PartialPivLu<f64>,
}

impl BorderedLu {
    fn new(a: &CsrMatrix, dense: Vec<usize>) -> Result<Self> {
        let n = a.nrows;
        let mut map = vec![usize::MAX; n];
        let mut n0 = 0;
        for (i, m) in map.iter_mut().enumerate() {
            if dense.binary_search(&i).is_err() {
                *m = n0;
                n0 += 1;
            }
        }
        let k = dense.len();
        let mut trips = Vec::with_capacity(a.nnz());
        let mut cols = vec![vec![0.0; n0]; k];
        for i in 0..n {
            if map[i] == usize::MAX {
                continue;
            }
            for (j, v) in a.row(i) {
                match dense.binary_search(&j) {
                    Ok(c) => cols[c][map[i]] = v,
                    Err(_) => trips.push((map[i], map[j], v)),
                }
            }
        }
        let lu0 = SparseLu::new(&CsrMatrix::from_triplets(n0, n0, &trips))?;
        let z: Vec<Vec<f64>> = cols.iter().map(|c| lu0.solve(c)).collect();
        if z.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Solver("singular sparse block".into()));
        }
        let rows: Vec<Vec<(usize, f64)>> =
            dense.iter().map(|&d| a.row(d).filter(|&(j, _)| map[j] != usize::MAX).map(|(j, v)| (map[j], v)).collect()).collect();
        let s = Mat::from_fn(k, k, |r, c| {
            a.get(dense[r], dense[c]) - rows[r].iter().map(|&(j, v)| v * z[c][j]).sum::<f64>()
        });
        let schur = s.partial_piv_lu();
        Ok(Self { lu0, map, dense, z, rows, schur })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let b0: Vec<f64> = (0..b.len()).filter(|&i| self.map[i] != usize::MAX).map(|i| b[i]).collect();
        let mut y = self.lu0.solve(&b0);
        let rhs = Mat::from_fn(self.dense.len(), 1, |r, _| b[self.dense[r]] - self.rows[r].iter().map(|&(j, v)| v * y[j]).sum::<f64>());
        let xd = self.schur.solve(&rhs);
        for (c, zc) in self.z.iter().enumerate() {
            for (yi, zi) in y.iter_mut().zip(zc) {
                *yi -= xd[(c, 0)] * zi;
            }
        }
        let mut x = vec![0.0; b.len()];
        for (i, &m) in self.map.iter().enumerate() {
            if m != usize::MAX {
                x[i] = y[m];
            }
        }
        for (c, &d) in self.dense.iter().enumerate() {
            x[d] = xd[(c, 0)];
        }
        x
    }
}

enum Factors {
    Plain(SparseLu),
    Bordered(BorderedLu),
}

impl Factors {
    fn new(a: &CsrMatrix) -> Result<Self> {
        let dense = dense_unknowns(a);
        if dense.is_empty() {
            return SparseLu::new(a).map(Factors::Plain);
        }
        // a singular sparse block leaves only the plain factorization
        match BorderedLu::new(a, dense) {
            Ok(f) => Ok(Factors::Bordered(f)),
            Err(_) => SparseLu::new(a).map(Factors::Plain),
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Factors::Plain(f) => f.solve(b),
            Factors::Bordered(f) => f.solve(b),
        }
    }
}

/// Unknowns whose row or column holds many more entries than a finite
/// element stencil: more than 10·sqrt(n), and at least 200.
fn dense_unknowns(a: &CsrMatrix) -> Vec<usize> {
    let limit = (10.0 * (a.nrows as f64).sqrt()).max(200.0) as usize;
    let mut col = vec![0usize; a.ncols];
    for &j in &a.indices {
        col[j] += 1;
    }
    let d: Vec<usize> = (0..a.nrows).filter(|&i| a.indptr[i + 1] - a.indptr[i] > limit || col[i] > limit).collect();
    // too many to border cheaply
    if d.len() > 8 { Vec::new() } else { d }
}

/// Square system by sparse LU on the equilibrated matrix, with iterative
/// refinement while the scaled residual keeps dropping.
pub fn solve_lu(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    check_finite(a, b)?;
    if a.nrows == 0 {
        return Ok(Vec::new());
    }
    let (sa, s) = equilibrate(a);
    let sb: Vec<f64> = b.iter().zip(&s).map(|(v, si)| v * si).collect();
    let lu = Factors::new(&sa)?;
    let mut y = lu.solve(&sb);
    let mut rn = norm(&residual(&sa, &y, &sb));
    for _ in 0..4 {
        if rn == 0.0 {
            break;
        }
        let d = lu.solve(&residual(&sa, &y, &sb));
        let trial: Vec<f64> = y.iter().zip(&d).map(|(yi, di)| yi + di).collect();
        let tn = norm(&residual(&sa, &trial, &sb));
        if !(tn < 0.5 * rn) {
            if tn < rn {
                y = trial;
            }
            break;
        }
        y = trial;
        rn = tn;
    }
    let x: Vec<f64> = y.iter().zip(&s).map(|(v, si)| v * si).collect();
    let rel = relative_residual(a, &x, b);
    if !rel.is_finite() || rel > tol {
        return Err(Error::Solver(format!("relative residual {rel:.3e} exceeds {tol:.1e}")));
    }
    Ok(x)
}

/// Symmetric positive definite system by sparse Cholesky.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    check_finite(a, b)?;
    if a.nrows == 0 {
        return Ok(Vec::new());
    }
    let llt = a
        .to_faer()?
        .sp_cholesky(faer::Side::Lower)
        .map_err(|e| Error::Solver(format!("Cholesky factorization failed: {e:?}")))?;
    let sol = llt.solve(&to_col(b));
    let mut x: Vec<f64> = (0..a.nrows).map(|i| sol[(i, 0)]).collect();
    let r = residual(a, &x, b);
    if norm(&r) / (1.0 + norm(b)) > tol * 1e-2 {
        let d = llt.solve(&to_col(&r));
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += d[(i, 0)];
        }
    }
    let rel = relative_residual(a, &x, b);
    if !rel.is_finite() || rel > tol {
        return Err(Error::Solver(format!("relative residual {rel:.3e} exceeds {tol:.1e}")));
    }
    Ok(x)
}

/// Solve A x = b where `fixed[i] = Some(v)` prescribes x_i = v and drops row i.
/// Returns the solution and the relative residual over the kept rows.
pub fn solve_constrained(a: &CsrMatrix, b: &[f64], fixed: &[Option<f64>], tol: f64) -> Result<(Vec<f64>, f64)> {
    let n = a.nrows;
    let mut map = vec![usize::MAX; n];
    let mut free = Vec::new();
    for i in 0..n {
        if fixed[i].is_none() {
            map[i] = free.len();
            free.push(i);
        }
    }
    let mut trips = Vec::with_capacity(a.nnz());
    let mut rhs = Vec::with_capacity(free.len());
    for (ri, &i) in free.iter().enumerate() {
        let mut s = b[i];
        for (j, v) in a.row(i) {
            match fixed[j] {
                Some(x) => s -= v * x,
                None => trips.push((ri, map[j], v)),
            }
        }
        rhs.push(s);
    }
    let ar = CsrMatrix::from_triplets(free.len(), free.len(), &trips);
    let xr = solve_lu(&ar, &rhs, tol)?;
    let mut x: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    for (ri, &i) in free.iter().enumerate() {
        x[i] = xr[ri];
    }
    let full = residual(a, &x, b);
    let kept: Vec<f64> = free.iter().map(|&i| full[i]).collect();
    let bk: Vec<f64> = free.iter().map(|&i| b[i]).collect();
    Ok((x, norm(&kept) / (1.0 + norm(&bk))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 1.0), (0, 1, -1.0), (0, 1, 1.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(solve_spd(&CsrMatrix::identity(3), &b, 1e-12).unwrap(), b);
        assert_eq!(solve_lu(&CsrMatrix::identity(3), &b, 1e-12).unwrap(), b);
    }

    #[test]
    fn diagonal_is_division() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (1, 1, 4.0), (2, 2, 0.5)]);
        let x = solve_spd(&a, &[1.0, 1.0, 1.0], 1e-12).unwrap();
        for (a, b) in x.iter().zip([0.5, 0.25, 2.0]) {
            assert!((a - b).abs() <= 2.0 * f64::EPSILON * b);
        }
    }

    #[test]
    fn constrained_elimination() {
        // x0 prescribed, x1 solves 2 x1 + x0 = 5
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        let (x, r) = solve_constrained(&a, &[0.0, 5.0], &[Some(1.0), None], 1e-12).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        assert!(r < 1e-15);
    }

    #[test]
    fn singular_is_an_error() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(solve_lu(&a, &[1.0, 0.0], 1e-10).is_err());
    }

    fn bordered(n: usize, corner: f64, skip_last_diag: bool) -> CsrMatrix {
        // tridiagonal block with one dense last row and column
        let mut t = Vec::new();
        for i in 0..n - 1 {
            if !(skip_last_diag && i == n - 2) {
                t.push((i, i, 4.0 + (i % 3) as f64));
            }
            if i + 1 < n - 1 {
                t.push((i, i + 1, -1.0));
                if !(skip_last_diag && i + 1 == n - 2) {
                    t.push((i + 1, i, -1.5));
                }
            }
            t.push((i, n - 1, 1.0 + (i % 7) as f64 * 0.1));
            t.push((n - 1, i, 0.5 - (i % 5) as f64 * 0.2));
        }
        t.push((n - 1, n - 1, corner));
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn dense_border_is_split_off() {
        let a = bordered(600, 0.0, false);
        assert_eq!(dense_unknowns(&a), vec![599]);
        let x: Vec<f64> = (0..600).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.matvec(&x);
        let y = solve_lu(&a, &b, 1e-12).unwrap();
        let err = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err:e}");
    }

    #[test]
    fn singular_sparse_block_falls_back_to_plain_lu() {
        // without its dense border the block has an empty row
        let a = bordered(600, 2.0, true);
        assert!(BorderedLu::new(&a, vec![599]).is_err());
        let x: Vec<f64> = (0..600).map(|i| 1.0 + (i as f64 * 0.11).cos()).collect();
        let b = a.matvec(&x);
        let y = solve_lu(&a, &b, 1e-10).unwrap();
        assert!(relative_residual(&a, &y, &b) < 1e-12);
    }
}
