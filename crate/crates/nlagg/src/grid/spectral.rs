//! Exact tensor-product eigensolvers for the constant-coefficient operators
//! on the staggered grid. Each admissible boundary treatment diagonalizes in
//! a discrete sine/cosine family, so (sigma - Laplacian) inverts by two 1D
//! basis changes per axis. Used directly for the Neumann/Stokes inverses and
//! as the preconditioner for variable-coefficient CG solves.

/// Boundary treatment of a 1D second-difference operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Cell centers, reflection ghost (homogeneous Neumann): cos(k pi (i+1/2)/n).
    Neumann,
    /// Face nodes with pinned zero endpoints: sin(k pi i / n), dofs i = 1..n-1.
    DirichletNode,
    /// Cell-offset points with anti-reflection ghost (tangential no-slip):
    /// sin(k pi (i+1/2)/n).
    DirichletCell,
}

/// Orthogonal 1D eigenbasis of minus the second difference with spacing `h`.
#[derive(Debug, Clone)]
pub struct Basis1d {
    pub kind: BasisKind,
    /// Number of degrees of freedom along the axis.
    pub m: usize,
    /// Eigenvalues of -d2/dx2, ascending, length m.
    pub eig: Vec<f64>,
    /// Analysis matrix, row-major m x m: coef[k] = sum_i fwd[k*m+i] f[i].
    fwd: Vec<f64>,
    /// Synthesis matrix, row-major m x m: f[i] = sum_k inv[i*m+k] coef[k].
    inv: Vec<f64>,
}

impl Basis1d {
    /// `n` is the cell count of the axis; the dof count is n for cell-based
    /// kinds and n-1 for `DirichletNode`.
    pub fn new(kind: BasisKind, n: usize, h: f64) -> Basis1d {
        let pi = std::f64::consts::PI;
        let (m, modes): (usize, Vec<f64>) = match kind {
            BasisKind::Neumann => (n, (0..n).map(|k| k as f64).collect()),
            BasisKind::DirichletNode => (n - 1, (1..n).map(|k| k as f64).collect()),
            BasisKind::DirichletCell => (n, (1..=n).map(|k| k as f64).collect()),
        };
        let mut inv = vec![0.0; m * m];
        let mut fwd = vec![0.0; m * m];
        let mut eig = Vec::with_capacity(m);
        for (col, &k) in modes.iter().enumerate() {
            let a = k * pi / n as f64;
            let s = (a / 2.0).sin();
            eig.push(4.0 / (h * h) * s * s);
            let mut norm_sq = 0.0;
            for i in 0..m {
                let v = match kind {
                    BasisKind::Neumann => (a * (i as f64 + 0.5)).cos(),
                    BasisKind::DirichletNode => (a * (i as f64 + 1.0)).sin(),
                    BasisKind::DirichletCell => (a * (i as f64 + 0.5)).sin(),
                };
                inv[i * m + col] = v;
                norm_sq += v * v;
            }
            for i in 0..m {
                fwd[col * m + i] = inv[i * m + col] / norm_sq;
            }
        }
        Basis1d {
            kind,
            m,
            eig,
            fwd,
            inv,
        }
    }
}

/// Direct solver for (sigma - Laplacian) on a 2D tensor grid, given the 1D
/// eigenbases of both axes. Layout: row-major with x fastest, i.e.
/// `f[j * mx + i]`.
#[derive(Debug, Clone)]
pub struct Tensor2Solver {
    pub bx: Basis1d,
    pub by: Basis1d,
}

impl Tensor2Solver {
    pub fn new(bx: Basis1d, by: Basis1d) -> Tensor2Solver {
        Tensor2Solver { bx, by }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bx.m * self.by.m
    }

    /// Solve (sigma - Laplacian) u = b. For the pure Neumann operator with
    /// sigma = 0 the constant mode is removed from b and the mean-zero
    /// solution returned.
    pub fn solve(&self, b: &[f64], sigma: f64) -> Vec<f64> {
        let (mx, my) = (self.bx.m, self.by.m);
        assert_eq!(b.len(), mx * my);
        let mut work = vec![0.0; mx * my];
        // x-analysis, row by row
        for j in 0..my {
            let row = &b[j * mx..(j + 1) * mx];
            let out = &mut work[j * mx..(j + 1) * mx];
            mat_vec(&self.bx.fwd, row, out, mx);
        }
        // y-analysis into coef
        let mut coef = vec![0.0; mx * my];
        for l in 0..my {
            let dst = &mut coef[l * mx..(l + 1) * mx];
            for j in 0..my {
                let c = self.by.fwd[l * my + j];
                let src = &work[j * mx..(j + 1) * mx];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
        // diagonal solve
        for l in 0..my {
            let ey = self.by.eig[l];
            for k in 0..mx {
                let lam = sigma + self.bx.eig[k] + ey;
                let c = &mut coef[l * mx + k];
                if lam.abs() < 1e-300 {
                    *c = 0.0;
                } else {
                    *c /= lam;
                }
            }
        }
        // y-synthesis
        for w in work.iter_mut() {
            *w = 0.0;
        }
        for j in 0..my {
            let dst_range = j * mx..(j + 1) * mx;
            for l in 0..my {
                let c = self.by.inv[j * my + l];
                let src = &coef[l * mx..(l + 1) * mx];
                let dst = &mut work[dst_range.clone()];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
        // x-synthesis, row by row
        let mut out = vec![0.0; mx * my];
        for j in 0..my {
            let row = &work[j * mx..(j + 1) * mx];
            let dst = &mut out[j * mx..(j + 1) * mx];
            mat_vec(&self.bx.inv, row, dst, mx);
        }
        out
    }
}

#[inline]
fn mat_vec(mat: &[f64], x: &[f64], out: &mut [f64], m: usize) {
    for (r, o) in out.iter_mut().enumerate() {
        let row = &mat[r * m..(r + 1) * m];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *o = acc;
    }
}
