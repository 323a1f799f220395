//! Multiarrays over a grid index set, viewed as a real inner-product space.
//!
//! A [`Field`] stores its entries in a flat row-major buffer of `f64`.
//! Complex fields interleave real and imaginary parts, so the real scalar
//! product `Re⟨x, y⟩` is simply the dot product of the two buffers, and the
//! canonical real basis of a complex field of `n` entries has `2n` elements
//! (`e_γ` and `i·e_γ` for every index `γ`).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarKind {
    Real,
    Complex,
}

impl ScalarKind {
    /// Number of `f64` values per entry.
    pub const fn width(self) -> usize {
        match self {
            ScalarKind::Real => 1,
            ScalarKind::Complex => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    shape: Vec<usize>,
    kind: ScalarKind,
    data: Vec<f64>,
}

fn entry_count(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.iter().any(|&e| e == 0) {
        return Err(Error::InvalidShape(shape.to_vec()));
    }
    Ok(shape.iter().product())
}

impl Field {
    pub fn zeros(shape: &[usize], kind: ScalarKind) -> Result<Self> {
        let n = entry_count(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            kind,
            data: vec![0.0; n * kind.width()],
        })
    }

    /// Real field with every entry equal to `value`.
    pub fn filled(shape: &[usize], value: f64) -> Result<Self> {
        let n = entry_count(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            kind: ScalarKind::Real,
            data: vec![value; n],
        })
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n = entry_count(shape)?;
        if data.len() != n {
            return Err(Error::ShapeMismatch {
                expected: shape.to_vec(),
                found: vec![data.len()],
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            kind: ScalarKind::Real,
            data,
        })
    }

    pub fn from_complex(shape: &[usize], entries: &[Complex64]) -> Result<Self> {
        let n = entry_count(shape)?;
        if entries.len() != n {
            return Err(Error::ShapeMismatch {
                expected: shape.to_vec(),
                found: vec![entries.len()],
            });
        }
        let data = entries.iter().flat_map(|z| [z.re, z.im]).collect();
        Ok(Self {
            shape: shape.to_vec(),
            kind: ScalarKind::Complex,
            data,
        })
    }

    /// The `j`-th element of the canonical orthonormal real basis.
    ///
    /// For complex fields, even `j` selects `e_{j/2}` and odd `j` selects
    /// `i·e_{j/2}`.
    pub fn basis(shape: &[usize], kind: ScalarKind, j: usize) -> Result<Self> {
        let mut e = Self::zeros(shape, kind)?;
        if j >= e.data.len() {
            return Err(Error::InvalidParameter("basis index out of range"));
        }
        e.data[j] = 1.0;
        Ok(e)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            kind: self.kind,
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }

    /// Number of entries (grid points), regardless of scalar kind.
    pub fn len(&self) -> usize {
        self.data.len() / self.kind.width()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Dimension of the field as a real vector space.
    pub fn real_dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Entry `i` as a complex number (imaginary part zero for real fields).
    pub fn entry(&self, i: usize) -> Complex64 {
        match self.kind {
            ScalarKind::Real => Complex64::new(self.data[i], 0.0),
            ScalarKind::Complex => Complex64::new(self.data[2 * i], self.data[2 * i + 1]),
        }
    }

    pub fn check_conformable(&self, other: &Field) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                found: other.shape.clone(),
            });
        }
        if self.kind != other.kind {
            return Err(Error::KindMismatch {
                expected: self.kind,
                found: other.kind,
            });
        }
        Ok(())
    }

    /// The real scalar product `Re Σ_γ x_γ conj(y_γ)`.
    pub fn inner_real(&self, other: &Field) -> Result<f64> {
        self.check_conformable(other)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// `self += a·x`
    pub fn axpy_mut(&mut self, a: f64, x: &Field) -> Result<()> {
        self.check_conformable(x)?;
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
        Ok(())
    }

    pub fn scale_mut(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Field {
        let mut out = self.clone();
        out.scale_mut(a);
        out
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        axpy(1.0, other, self)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        axpy(-1.0, other, self)
    }

    /// Entrywise product; complex entries multiply as complex numbers.
    pub fn hadamard(&self, other: &Field) -> Result<Field> {
        self.check_conformable(other)?;
        let data = match self.kind {
            ScalarKind::Real => self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
            ScalarKind::Complex => self
                .data
                .chunks_exact(2)
                .zip(other.data.chunks_exact(2))
                .flat_map(|(a, b)| {
                    let z = Complex64::new(a[0], a[1]) * Complex64::new(b[0], b[1]);
                    [z.re, z.im]
                })
                .collect(),
        };
        Ok(Field {
            shape: self.shape.clone(),
            kind: self.kind,
            data,
        })
    }

    /// Applies `f` to every entry of a real field.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        if self.kind != ScalarKind::Real {
            return Err(Error::KindMismatch {
                expected: ScalarKind::Real,
                found: self.kind,
            });
        }
        Ok(Field {
            shape: self.shape.clone(),
            kind: ScalarKind::Real,
            data: self.data.iter().map(|&v| f(v)).collect(),
        })
    }

    /// Applies `f` to every entry, viewing entries as complex numbers.
    /// The result keeps the scalar kind of `self`; for real fields the
    /// imaginary part of `f`'s output is discarded.
    pub fn map_complex(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        let data = match self.kind {
            ScalarKind::Real => self.data.iter().map(|&v| f(Complex64::new(v, 0.0)).re).collect(),
            ScalarKind::Complex => self
                .data
                .chunks_exact(2)
                .flat_map(|c| {
                    let z = f(Complex64::new(c[0], c[1]));
                    [z.re, z.im]
                })
                .collect(),
        };
        Field {
            shape: self.shape.clone(),
            kind: self.kind,
            data,
        }
    }

    /// Sum of the entries of a real field (real part for complex fields).
    pub fn sum(&self) -> f64 {
        self.data.iter().step_by(self.kind.width()).sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    /// Serializes to a little-endian blob: `u32` rank, `u64` extents,
    /// `u8` scalar kind (0 real, 1 complex), then the `f64` payload.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 8 * self.shape.len() + 1 + 8 * self.data.len());
        out.extend_from_slice(&(self.shape.len() as u32).to_le_bytes());
        for &e in &self.shape {
            out.extend_from_slice(&(e as u64).to_le_bytes());
        }
        out.push(match self.kind {
            ScalarKind::Real => 0,
            ScalarKind::Complex => 1,
        });
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Field> {
        let mut rest = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if rest.len() < n {
                return Err(Error::Decode("truncated"));
            }
            let (head, tail) = rest.split_at(n);
            rest = tail;
            Ok(head)
        };
        let rank = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        if rank == 0 || rank > 16 {
            return Err(Error::Decode("bad rank"));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            let e = u64::from_le_bytes(take(8)?.try_into().unwrap());
            shape.push(usize::try_from(e).map_err(|_| Error::Decode("extent overflow"))?);
        }
        let kind = match take(1)?[0] {
            0 => ScalarKind::Real,
            1 => ScalarKind::Complex,
            _ => return Err(Error::Decode("bad scalar kind")),
        };
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .and_then(|n| n.checked_mul(kind.width()))
            .ok_or(Error::Decode("size overflow"))?;
        let mut field = Field::zeros(&shape, kind).map_err(|_| Error::Decode("zero extent"))?;
        let payload = take(n.checked_mul(8).ok_or(Error::Decode("size overflow"))?)?;
        for (v, chunk) in field.data.iter_mut().zip(payload.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        if !rest.is_empty() {
            return Err(Error::Decode("trailing bytes"));
        }
        Ok(field)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a·x + y`
pub fn axpy(a: f64, x: &Field, y: &Field) -> Result<Field> {
    let mut out = y.clone();
    out.axpy_mut(a, x)?;
    Ok(out)
}

pub fn inner_real(x: &Field, y: &Field) -> Result<f64> {
    x.inner_real(y)
}

pub fn norm(x: &Field) -> f64 {
    x.norm()
}

pub fn hadamard(x: &Field, y: &Field) -> Result<Field> {
    x.hadamard(y)
}

pub fn pointwise_map(x: &Field, f: impl Fn(f64) -> f64) -> Result<Field> {
    x.map(f)
}
