//! Bilinear resampling of images along a warp field.

use image::{ImageBuffer, Pixel};

use crate::error::{Error, Result};
use crate::score::AttentionScoreMatrix;
use crate::warp::field::WarpField;

/// Channel types the sampler can read and write.
pub trait Sample: Copy + 'static {
    fn to_f32(self) -> f32;
    fn from_f32(v: f32) -> Self;
}

impl Sample for u8 {
    fn to_f32(self) -> f32 {
        self as f32
    }
    fn from_f32(v: f32) -> Self {
        v.round().clamp(0.0, 255.0) as u8
    }
}

impl Sample for u16 {
    fn to_f32(self) -> f32 {
        self as f32
    }
    fn from_f32(v: f32) -> Self {
        v.round().clamp(0.0, 65535.0) as u16
    }
}

impl Sample for f32 {
    fn to_f32(self) -> f32 {
        self
    }
    fn from_f32(v: f32) -> Self {
        v
    }
}

pub type Image<P> = ImageBuffer<P, Vec<<P as Pixel>::Subpixel>>;

/// An image produced by a warp, together with the field that produced it.
#[derive(Clone)]
pub struct WarpedImage<P: Pixel> {
    pub image: Image<P>,
    pub field: WarpField,
}

/// Integer neighbor pair and blend weight for a coordinate clamped to `[0, len - 1]`.
#[derive(Clone, Copy)]
struct Tap {
    lo: usize,
    hi: usize,
    t: f32,
}

fn tap(coord: f64, len: usize) -> Tap {
    let c = coord.clamp(0.0, (len - 1) as f64);
    let lo = c.floor() as usize;
    let hi = (lo + 1).min(len - 1);
    Tap {
        lo,
        hi,
        t: (c - lo as f64) as f32,
    }
}

/// Output pixel `(i, j)` is the bilinear sample of `image` at
/// `(fy(i), fx(j))`, per channel, with clamp-to-edge addressing.
pub fn warp_image<P>(image: &Image<P>, field: &WarpField) -> Result<Image<P>>
where
    P: Pixel,
    P::Subpixel: Sample,
{
    let (w, h) = (image.width() as usize, image.height() as usize);
    if (h, w) != (field.height(), field.width()) {
        return Err(Error::DimensionMismatch {
            expected: (field.height(), field.width()),
            actual: (h, w),
        });
    }
    let cols: Vec<Tap> = field.fx().into_iter().map(|x| tap(x, w)).collect();
    let rows: Vec<Tap> = field.fy().into_iter().map(|y| tap(y, h)).collect();
    let channels = P::CHANNEL_COUNT as usize;
    let src = image.as_raw();
    let stride = w * channels;
    let mut out = vec![P::Subpixel::from_f32(0.0); h * stride];

    for (row, ty) in out.chunks_exact_mut(stride).zip(&rows) {
        let top = &src[ty.lo * stride..(ty.lo + 1) * stride];
        let bottom = &src[ty.hi * stride..(ty.hi + 1) * stride];
        for (px, tx) in row.chunks_exact_mut(channels).zip(&cols) {
            for (c, dst) in px.iter_mut().enumerate() {
                let a = top[tx.lo * channels + c].to_f32();
                let b = top[tx.hi * channels + c].to_f32();
                let cc = bottom[tx.lo * channels + c].to_f32();
                let d = bottom[tx.hi * channels + c].to_f32();
                let upper = a + (b - a) * tx.t;
                let lower = cc + (d - cc) * tx.t;
                *dst = P::Subpixel::from_f32(upper + (lower - upper) * ty.t);
            }
        }
    }
    Ok(ImageBuffer::from_raw(w as u32, h as u32, out).expect("buffer sized from image"))
}

/// Builds the warp from `scores` and applies it.
pub fn warp_with_scores<P>(image: &Image<P>, scores: &AttentionScoreMatrix) -> Result<WarpedImage<P>>
where
    P: Pixel,
    P::Subpixel: Sample,
{
    if scores.dims() != (image.height() as usize, image.width() as usize) {
        return Err(Error::DimensionMismatch {
            expected: (image.height() as usize, image.width() as usize),
            actual: scores.dims(),
        });
    }
    let field = WarpField::from_scores(scores)?;
    let image = warp_image(image, &field)?;
    Ok(WarpedImage { image, field })
}
