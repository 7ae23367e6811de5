//! Dense matrix kernels for the Q-network.
//!
//! Everything is f64 and row-major. The two products are blocked four
//! rows at a time so the accumulator rows stay in vector registers while
//! a B row streams through; these kernels carry essentially the whole
//! training cost.

/// Microkernel tile: rows of A per block.
const MR: usize = 4;
/// Microkernel tile: columns of B per block.
const NR: usize = 8;

/// C += A (m x k) * B (k x n).
///
/// Tall products (many rows, as in the im2col convolutions) run a 4x8
/// register-blocked microkernel. Short-and-wide products (batch rows
/// against big dense weights) instead stream B rows and skip zero A
/// entries, which wins on ReLU-sparse activations.
pub fn matmul_acc(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m < 64 {
        for (i, c_row) in c.chunks_exact_mut(n).enumerate() {
            let a_row = &a[i * k..(i + 1) * k];
            for (p, &x) in a_row.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let b_row = &b[p * n..(p + 1) * n];
                for (cv, bv) in c_row.iter_mut().zip(b_row) {
                    *cv += x * bv;
                }
            }
        }
        return;
    }
    let m_full = m / MR * MR;
    let n_full = n / NR * NR;

    let mut i0 = 0usize;
    while i0 < m_full {
        let mut j0 = 0usize;
        while j0 < n_full {
            let mut acc = [[0.0f64; NR]; MR];
            for p in 0..k {
                let b_row = &b[p * n + j0..p * n + j0 + NR];
                for ii in 0..MR {
                    let x = a[(i0 + ii) * k + p];
                    for jj in 0..NR {
                        acc[ii][jj] += x * b_row[jj];
                    }
                }
            }
            for ii in 0..MR {
                let c_row = &mut c[(i0 + ii) * n + j0..(i0 + ii) * n + j0 + NR];
                for jj in 0..NR {
                    c_row[jj] += acc[ii][jj];
                }
            }
            j0 += NR;
        }
        // Column tail for these four rows.
        if j0 < n {
            for ii in 0..MR {
                let a_row = &a[(i0 + ii) * k..(i0 + ii + 1) * k];
                for (p, &x) in a_row.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    let b_row = &b[p * n + j0..(p + 1) * n];
                    let c_row = &mut c[(i0 + ii) * n + j0..(i0 + ii + 1) * n];
                    for (cv, bv) in c_row.iter_mut().zip(b_row) {
                        *cv += x * bv;
                    }
                }
            }
        }
        i0 += MR;
    }
    // Row tail.
    for i in m_full..m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * n..(i + 1) * n];
        for (p, &x) in a_row.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (cv, bv) in c_row.iter_mut().zip(b_row) {
                *cv += x * bv;
            }
        }
    }
}

/// C += A^T * B, with A (m x k) and B (m x n), so C is (k x n).
pub fn matmul_at_acc(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(c.len(), k * n);
    let m4 = m / 4 * 4;
    let mut r = 0usize;
    while r < m4 {
        let a0 = &a[r * k..(r + 1) * k];
        let a1 = &a[(r + 1) * k..(r + 2) * k];
        let a2 = &a[(r + 2) * k..(r + 3) * k];
        let a3 = &a[(r + 3) * k..(r + 4) * k];
        let b0 = &b[r * n..(r + 1) * n];
        let b1 = &b[(r + 1) * n..(r + 2) * n];
        let b2 = &b[(r + 2) * n..(r + 3) * n];
        let b3 = &b[(r + 3) * n..(r + 4) * n];
        for (i, c_row) in c.chunks_exact_mut(n).enumerate() {
            let (x0, x1, x2, x3) = (a0[i], a1[i], a2[i], a3[i]);
            if x0 == 0.0 && x1 == 0.0 && x2 == 0.0 && x3 == 0.0 {
                continue;
            }
            for j in 0..n {
                c_row[j] += x0 * b0[j] + x1 * b1[j] + x2 * b2[j] + x3 * b3[j];
            }
        }
        r += 4;
    }
    while r < m {
        let a_row = &a[r * k..(r + 1) * k];
        let b_row = &b[r * n..(r + 1) * n];
        for (i, c_row) in c.chunks_exact_mut(n).enumerate() {
            let x = a_row[i];
            if x == 0.0 {
                continue;
            }
            for (cv, bv) in c_row.iter_mut().zip(b_row) {
                *cv += x * bv;
            }
        }
        r += 1;
    }
}

/// dst (cols x rows) = src (rows x cols) transposed.
pub fn transpose_into(dst: &mut Vec<f64>, src: &[f64], rows: usize, cols: usize) {
    debug_assert_eq!(src.len(), rows * cols);
    dst.resize(rows * cols, 0.0);
    for i in 0..rows {
        for j in 0..cols {
            dst[j * rows + i] = src[i * cols + j];
        }
    }
}
