//! im2col / col2im primitives behind the conv blocks.

use ndarray::{Array2, Array3};

/// Unfolds `input` (`[c, h, w]`) into a `[c*kh*kw, oh*ow]` matrix so that a
/// valid-padding strided convolution becomes one matrix product. Returns the
/// matrix and the output grid size.
pub fn im2col(
    input: &Array3<f64>,
    kernel: (usize, usize),
    stride: (usize, usize),
) -> (Array2<f64>, (usize, usize)) {
    let (c, h, w) = input.dim();
    let (kh, kw) = kernel;
    let (sh, sw) = stride;
    let oh = (h - kh) / sh + 1;
    let ow = (w - kw) / sw + 1;

    let mut cols = Array2::zeros((c * kh * kw, oh * ow));
    for ch in 0..c {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ch * kh + ki) * kw + kj;
                let mut out_row = cols.row_mut(row);
                let out_slice = out_row.as_slice_mut().expect("row is contiguous");
                for oy in 0..oh {
                    let iy = oy * sh + ki;
                    for ox in 0..ow {
                        out_slice[oy * ow + ox] = input[(ch, iy, ox * sw + kj)];
                    }
                }
            }
        }
    }
    (cols, (oh, ow))
}

/// Adjoint of [`im2col`]: scatter-adds column gradients back onto the input
/// grid.
pub fn col2im(
    grad_cols: &Array2<f64>,
    in_channels: usize,
    in_shape: (usize, usize),
    kernel: (usize, usize),
    stride: (usize, usize),
    out_shape: (usize, usize),
) -> Array3<f64> {
    let (kh, kw) = kernel;
    let (sh, sw) = stride;
    let (oh, ow) = out_shape;

    let mut grad_input = Array3::zeros((in_channels, in_shape.0, in_shape.1));
    for ch in 0..in_channels {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ch * kh + ki) * kw + kj;
                let src_row = grad_cols.row(row);
                let src = src_row.as_slice().expect("row is contiguous");
                for oy in 0..oh {
                    let iy = oy * sh + ki;
                    for ox in 0..ow {
                        grad_input[(ch, iy, ox * sw + kj)] += src[oy * ow + ox];
                    }
                }
            }
        }
    }
    grad_input
}
