use crate::error::{Error, Result};

/// Row-major single-channel raster. `T` carries the channel kind:
/// `Rgb`, `ClassId`, `f64` depth, `bool` masks, `u32` indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T> Raster<T> {
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "raster {height}x{width} needs {} pixels, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Raster {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for p in 0..height {
            for q in 0..width {
                data.push(f(p, q));
            }
        }
        Raster {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize) -> &T {
        &self.data[p * self.width + q]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, value: T) {
        self.data[p * self.width + q] = value;
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn ensure_same_shape<U>(&self, other: &Raster<U>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }
}

impl<T: Clone> Raster<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Raster {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    /// Circular column shift: output column `q` reads input column `(q + shift) mod W`.
    pub fn roll_columns(&self, shift: usize) -> Self {
        let w = self.width;
        Raster::from_fn(self.height, w, |p, q| {
            self.data[p * w + (q + shift) % w].clone()
        })
    }
}

/// Ordered frames of one channel kind, all with the same raster size.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence<T> {
    frames: Vec<Raster<T>>,
}

impl<T> FrameSequence<T> {
    pub fn new(frames: Vec<Raster<T>>) -> Result<Self> {
        if let Some(first) = frames.first() {
            for f in &frames[1..] {
                first.ensure_same_shape(f)?;
            }
        }
        Ok(FrameSequence { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Raster<T>] {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> &Raster<T> {
        &self.frames[t]
    }

    pub fn into_frames(self) -> Vec<Raster<T>> {
        self.frames
    }

    /// (height, width) of the frames, `None` when empty.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|f| f.shape())
    }

    pub fn ensure_same_shape<U>(&self, other: &FrameSequence<U>) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} frames vs {} frames",
                self.len(),
                other.len()
            )));
        }
        for (a, b) in self.frames.iter().zip(&other.frames) {
            a.ensure_same_shape(b)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length() {
        assert!(Raster::from_vec(2, 3, vec![0u8; 5]).is_err());
        let r = Raster::from_vec(2, 3, (0..6).collect::<Vec<u8>>()).unwrap();
        assert_eq!(*r.get(1, 2), 5);
    }

    #[test]
    fn roll_columns_wraps() {
        let r = Raster::from_vec(1, 4, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(r.roll_columns(1).data(), &[1, 2, 3, 0]);
        assert_eq!(r.roll_columns(2).roll_columns(2), r);
    }

    #[test]
    fn sequence_rejects_mixed_shapes() {
        let a = Raster::filled(2, 2, 0u8);
        let b = Raster::filled(2, 3, 0u8);
        assert!(FrameSequence::new(vec![a, b]).is_err());
    }
}
