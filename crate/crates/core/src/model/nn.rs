//! Convolution primitives with explicit backward passes.
//!
//! Everything here works on single samples in (C, H, W) layout; batching
//! and parallelism live one level up. Convolutions lower to im2col plus a
//! GEMM, the transposed 2×2 stride-2 convolution is a plain GEMM with a
//! non-overlapping scatter, and backward passes are the exact adjoints.
//! Functions are generic over the float type so gradient checks can run in
//! f64 while training runs in f32.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array3, Array4, ArrayView1, ArrayView3, ArrayView4, Axis, NdFloat};

/// Output spatial size of a k×k convolution.
pub fn conv_out_dim(input: usize, k: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - k) / stride + 1
}

/// Valid output-column range and starting input column for one kernel tap:
/// the `oj` in `[lo, hi]` are exactly those with
/// `0 <= oj·stride + kj - pad < w`. Returns `None` when no column is valid.
fn tap_bounds(w: usize, wo: usize, kj: usize, stride: usize, pad: usize) -> Option<(usize, usize, usize)> {
    let lo = if kj >= pad {
        0
    } else {
        (pad - kj).div_ceil(stride)
    };
    if kj > w - 1 + pad || lo >= wo {
        return None;
    }
    let hi = ((w - 1 + pad - kj) / stride).min(wo - 1);
    if hi < lo {
        return None;
    }
    let jj_start = lo * stride + kj - pad;
    Some((lo, hi, jj_start))
}

/// Lower (C, H, W) into columns of shape (C·k², Ho·Wo); out-of-bounds taps
/// read as zero. Inner loops run over contiguous slices.
fn im2col<F: NdFloat>(
    x: &ArrayView3<F>,
    k: usize,
    stride: usize,
    pad: usize,
    cols: &mut Array2<F>,
) {
    let (c, h, w) = x.dim();
    let ho = conv_out_dim(h, k, stride, pad);
    let wo = conv_out_dim(w, k, stride, pad);
    debug_assert_eq!(cols.dim(), (c * k * k, ho * wo));
    let xs = x.as_slice().expect("conv input is contiguous");
    let cs = cols.as_slice_mut().expect("cols are contiguous");
    let row_len = ho * wo;
    for ci in 0..c {
        let xbase = ci * h * w;
        for ki in 0..k {
            for kj in 0..k {
                let row0 = ((ci * k + ki) * k + kj) * row_len;
                let bounds = tap_bounds(w, wo, kj, stride, pad);
                for oi in 0..ho {
                    let dst0 = row0 + oi * wo;
                    let ii = (oi * stride + ki) as isize - pad as isize;
                    if ii < 0 || ii >= h as isize {
                        cs[dst0..dst0 + wo].fill(F::zero());
                        continue;
                    }
                    let src_row = xbase + ii as usize * w;
                    let Some((lo, hi, jj_start)) = bounds else {
                        cs[dst0..dst0 + wo].fill(F::zero());
                        continue;
                    };
                    cs[dst0..dst0 + lo].fill(F::zero());
                    if stride == 1 {
                        let len = hi + 1 - lo;
                        cs[dst0 + lo..dst0 + lo + len]
                            .copy_from_slice(&xs[src_row + jj_start..src_row + jj_start + len]);
                    } else {
                        let mut jj = jj_start;
                        for oj in lo..=hi {
                            cs[dst0 + oj] = xs[src_row + jj];
                            jj += stride;
                        }
                    }
                    cs[dst0 + hi + 1..dst0 + wo].fill(F::zero());
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add columns back into (C, H, W).
fn col2im<F: NdFloat>(
    cols: &Array2<F>,
    k: usize,
    stride: usize,
    pad: usize,
    dx: &mut Array3<F>,
) {
    let (c, h, w) = dx.dim();
    let ho = conv_out_dim(h, k, stride, pad);
    let wo = conv_out_dim(w, k, stride, pad);
    let cs = cols.as_slice().expect("cols are contiguous");
    let ds = dx.as_slice_mut().expect("grad input is contiguous");
    let row_len = ho * wo;
    for ci in 0..c {
        let xbase = ci * h * w;
        for ki in 0..k {
            for kj in 0..k {
                let row0 = ((ci * k + ki) * k + kj) * row_len;
                let Some((lo, hi, jj_start)) = tap_bounds(w, wo, kj, stride, pad) else {
                    continue;
                };
                for oi in 0..ho {
                    let ii = (oi * stride + ki) as isize - pad as isize;
                    if ii < 0 || ii >= h as isize {
                        continue;
                    }
                    let src0 = row0 + oi * wo;
                    let dst_row = xbase + ii as usize * w;
                    let mut jj = jj_start;
                    for oj in lo..=hi {
                        ds[dst_row + jj] += cs[src0 + oj];
                        jj += stride;
                    }
                }
            }
        }
    }
}

/// k×k convolution, weights (Cout, Cin, k, k).
pub fn conv2d_forward<F: NdFloat>(
    x: &ArrayView3<F>,
    w: &ArrayView4<F>,
    b: &ArrayView1<F>,
    stride: usize,
    pad: usize,
) -> Array3<F> {
    let (cin, h, wid) = x.dim();
    let (cout, cin_w, kh, kw) = w.dim();
    debug_assert_eq!(cin, cin_w);
    debug_assert_eq!(kh, kw);
    let k = kh;
    let ho = conv_out_dim(h, k, stride, pad);
    let wo = conv_out_dim(wid, k, stride, pad);

    let mut cols = Array2::zeros((cin * k * k, ho * wo));
    im2col(x, k, stride, pad, &mut cols);
    let wmat = w
        .to_shape((cout, cin * k * k))
        .expect("weights are contiguous");
    let mut out = Array2::zeros((cout, ho * wo));
    general_mat_mul(F::one(), &wmat, &cols, F::zero(), &mut out);
    for (ci, mut row) in out.rows_mut().into_iter().enumerate() {
        let bias = b[ci];
        row.mapv_inplace(|v| v + bias);
    }
    out.into_shape_with_order((cout, ho, wo))
        .expect("shape math is consistent")
}

/// Gradients of [`conv2d_forward`] with respect to input, weights and bias.
pub fn conv2d_backward<F: NdFloat>(
    x: &ArrayView3<F>,
    w: &ArrayView4<F>,
    dy: &ArrayView3<F>,
    stride: usize,
    pad: usize,
) -> (Array3<F>, Array4<F>, Array1<F>) {
    let (cin, h, wid) = x.dim();
    let (cout, _, k, _) = w.dim();
    let (_, ho, wo) = dy.dim();

    let dy_mat = dy
        .to_shape((cout, ho * wo))
        .expect("grad output is contiguous");

    let mut cols = Array2::zeros((cin * k * k, ho * wo));
    im2col(x, k, stride, pad, &mut cols);

    // dW = dY · colsᵀ
    let mut dw_mat = Array2::zeros((cout, cin * k * k));
    general_mat_mul(F::one(), &dy_mat, &cols.t(), F::zero(), &mut dw_mat);
    let dw = dw_mat
        .into_shape_with_order((cout, cin, k, k))
        .expect("shape math is consistent");

    let db = Array1::from_iter(dy_mat.rows().into_iter().map(|r| r.sum()));

    // dX = col2im(Wᵀ · dY)
    let wmat = w
        .to_shape((cout, cin * k * k))
        .expect("weights are contiguous");
    let mut dcols = Array2::zeros((cin * k * k, ho * wo));
    general_mat_mul(F::one(), &wmat.t(), &dy_mat, F::zero(), &mut dcols);
    let mut dx = Array3::zeros((cin, h, wid));
    col2im(&dcols, k, stride, pad, &mut dx);

    (dx, dw, db)
}

/// Transposed convolution, kernel 2, stride 2: each input pixel expands to
/// a disjoint 2×2 output block, so the whole op is one GEMM plus a reshape.
/// Weights (Cin, Cout, 2, 2).
pub fn convt2x2_forward<F: NdFloat>(
    x: &ArrayView3<F>,
    w: &ArrayView4<F>,
    b: &ArrayView1<F>,
) -> Array3<F> {
    let (cin, h, wid) = x.dim();
    let (cin_w, cout, kh, kw) = w.dim();
    debug_assert_eq!(cin, cin_w);
    debug_assert_eq!((kh, kw), (2, 2));

    let xmat = x.to_shape((cin, h * wid)).expect("input is contiguous");
    let wmat = w.to_shape((cin, cout * 4)).expect("weights are contiguous");
    // m[(co·4 + di·2 + dj), p] = Σ_ci w[ci, co, di, dj] · x[ci, p]
    let mut m = Array2::zeros((cout * 4, h * wid));
    general_mat_mul(F::one(), &wmat.t(), &xmat, F::zero(), &mut m);

    let mut out = Array3::zeros((cout, 2 * h, 2 * wid));
    let ms = m.as_slice().expect("block matrix is contiguous");
    let os = out.as_slice_mut().expect("output is contiguous");
    let ow = 2 * wid;
    for co in 0..cout {
        let bias = b[co];
        for di in 0..2 {
            for dj in 0..2 {
                let src0 = (co * 4 + di * 2 + dj) * h * wid;
                for i in 0..h {
                    let dst_row = co * (2 * h) * ow + (2 * i + di) * ow + dj;
                    let src_row = src0 + i * wid;
                    for j in 0..wid {
                        os[dst_row + 2 * j] = ms[src_row + j] + bias;
                    }
                }
            }
        }
    }
    out
}

/// Gradients of [`convt2x2_forward`].
pub fn convt2x2_backward<F: NdFloat>(
    x: &ArrayView3<F>,
    w: &ArrayView4<F>,
    dy: &ArrayView3<F>,
) -> (Array3<F>, Array4<F>, Array1<F>) {
    let (cin, h, wid) = x.dim();
    let (_, cout, _, _) = w.dim();

    // Gather dY into the block-major matrix that mirrors the forward.
    let mut dm = Array2::zeros((cout * 4, h * wid));
    let mut db = Array1::zeros(cout);
    let dys = dy.as_slice().expect("grad output is contiguous");
    let dms = dm.as_slice_mut().expect("block matrix is contiguous");
    let ow = 2 * wid;
    for co in 0..cout {
        let mut acc = F::zero();
        for di in 0..2 {
            for dj in 0..2 {
                let dst0 = (co * 4 + di * 2 + dj) * h * wid;
                for i in 0..h {
                    let src_row = co * (2 * h) * ow + (2 * i + di) * ow + dj;
                    let dst_row = dst0 + i * wid;
                    for j in 0..wid {
                        let g = dys[src_row + 2 * j];
                        dms[dst_row + j] = g;
                        acc += g;
                    }
                }
            }
        }
        db[co] = acc;
    }

    let xmat = x.to_shape((cin, h * wid)).expect("input is contiguous");
    // dW = X · dMᵀ, reshaped to (Cin, Cout, 2, 2).
    let mut dw_mat = Array2::zeros((cin, cout * 4));
    general_mat_mul(F::one(), &xmat, &dm.t(), F::zero(), &mut dw_mat);
    let dw = dw_mat
        .into_shape_with_order((cin, cout, 2, 2))
        .expect("shape math is consistent");

    // dX = W · dM
    let wmat = w.to_shape((cin, cout * 4)).expect("weights are contiguous");
    let mut dx_mat = Array2::zeros((cin, h * wid));
    general_mat_mul(F::one(), &wmat, &dm, F::zero(), &mut dx_mat);
    let dx = dx_mat
        .into_shape_with_order((cin, h, wid))
        .expect("shape math is consistent");

    (dx, dw, db)
}

pub fn leaky_relu_inplace<F: NdFloat>(x: &mut Array3<F>, slope: F) {
    x.mapv_inplace(|v| if v >= F::zero() { v } else { v * slope });
}

/// Gradient through leaky ReLU using the saved output; the output sign
/// equals the pre-activation sign for any positive slope.
pub fn leaky_relu_backward<F: NdFloat>(y: &ArrayView3<F>, dy: &mut Array3<F>, slope: F) {
    dy.zip_mut_with(y, |g, &out| {
        if out < F::zero() {
            *g = *g * slope;
        }
    });
}

/// Concatenate along the channel axis.
pub fn concat_channels<F: NdFloat>(a: &ArrayView3<F>, b: &ArrayView3<F>) -> Array3<F> {
    ndarray::concatenate(Axis(0), &[a.view(), b.view()]).expect("matching spatial dims")
}

/// Mirror-reflect index (edge not repeated), folding as many times as
/// needed; single-element axes map to 0.
fn reflect_idx(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut t = i.rem_euclid(period);
    if t >= n as isize {
        t = period - t;
    }
    t as usize
}

/// Reflection-pad the spatial axes of an NCHW batch.
pub fn reflect_pad<F: NdFloat>(
    x: &Array4<F>,
    (pt, pb): (usize, usize),
    (pl, pr): (usize, usize),
) -> Array4<F> {
    let (n, c, h, w) = x.dim();
    Array4::from_shape_fn((n, c, h + pt + pb, w + pl + pr), |(ni, ci, i, j)| {
        let si = reflect_idx(i as isize - pt as isize, h);
        let sj = reflect_idx(j as isize - pl as isize, w);
        x[(ni, ci, si, sj)]
    })
}

/// Crop the spatial axes back after [`reflect_pad`].
pub fn crop<F: NdFloat>(x: &Array4<F>, (pt, _pb): (usize, usize), (pl, _pr): (usize, usize), h: usize, w: usize) -> Array4<F> {
    x.slice(s![.., .., pt..pt + h, pl..pl + w]).to_owned()
}
