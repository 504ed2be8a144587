//! Orthonormal 8×8 type-II DCT.
//!
//! Computed as `Y = C · X · Cᵀ` with the orthonormal basis matrix, so the
//! transform preserves energy exactly (up to f64 rounding) and inverts as
//! `X = Cᵀ · Y · C`.

pub const BLOCK: usize = 8;

/// Orthonormal DCT-II basis matrix: `C[k][n] = s_k · cos(π(2n+1)k / 16)`
/// with `s_0 = sqrt(1/8)` and `s_k = 1/2` otherwise.
fn basis() -> [[f64; BLOCK]; BLOCK] {
    let mut c = [[0.0; BLOCK]; BLOCK];
    for (k, row) in c.iter_mut().enumerate() {
        let s = if k == 0 {
            (1.0 / BLOCK as f64).sqrt()
        } else {
            (2.0 / BLOCK as f64).sqrt()
        };
        for (n, v) in row.iter_mut().enumerate() {
            *v = s * (std::f64::consts::PI * (2.0 * n as f64 + 1.0) * k as f64
                / (2.0 * BLOCK as f64))
                .cos();
        }
    }
    c
}

fn matmul(a: &[[f64; BLOCK]; BLOCK], b: &[[f64; BLOCK]; BLOCK]) -> [[f64; BLOCK]; BLOCK] {
    let mut out = [[0.0; BLOCK]; BLOCK];
    for i in 0..BLOCK {
        for k in 0..BLOCK {
            let aik = a[i][k];
            for j in 0..BLOCK {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn transpose(a: &[[f64; BLOCK]; BLOCK]) -> [[f64; BLOCK]; BLOCK] {
    let mut out = [[0.0; BLOCK]; BLOCK];
    for i in 0..BLOCK {
        for j in 0..BLOCK {
            out[i][j] = a[j][i];
        }
    }
    out
}

/// Forward orthonormal 2-D DCT of an 8×8 block.
pub fn forward(block: &[[f64; BLOCK]; BLOCK]) -> [[f64; BLOCK]; BLOCK] {
    let c = basis();
    matmul(&matmul(&c, block), &transpose(&c))
}

/// Inverse of [`forward`].
pub fn inverse(coeffs: &[[f64; BLOCK]; BLOCK]) -> [[f64; BLOCK]; BLOCK] {
    let c = basis();
    matmul(&matmul(&transpose(&c), coeffs), &c)
}
