//! Dense row-major embedding matrices, generic over the scalar, plus the
//! binary checkpoint format (magic "NEBE").

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use num_traits::Float;
use rand::Rng;

use crate::{Error, Result};

pub const EMB_MAGIC: &[u8; 4] = b"NEBE";
pub const EMB_FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings<F> {
    rows: usize,
    dim: usize,
    data: Vec<F>,
}

impl<F: Float> Embeddings<F> {
    pub fn zeros(rows: usize, dim: usize) -> Embeddings<F> {
        assert!(dim >= 1);
        Embeddings {
            rows,
            dim,
            data: vec![F::zero(); rows * dim],
        }
    }

    /// Vertex-side initialization: uniform in (-0.5/dim, +0.5/dim).
    /// Context rows start at zero, so only the vertex matrix uses this.
    /// A single sequential pass keeps the result independent of worker
    /// count.
    pub fn init_uniform(rows: usize, dim: usize, seed: u64) -> Embeddings<F> {
        let mut rng = crate::stream_rng(seed, &[0x494e_4954]);
        let scale = 1.0 / dim as f64;
        let data = (0..rows * dim)
            .map(|_| {
                let u: f64 = rng.gen::<f64>();
                F::from((u - 0.5) * scale).unwrap()
            })
            .collect();
        Embeddings { rows, dim, data }
    }

    pub fn from_vec(rows: usize, dim: usize, data: Vec<F>) -> Embeddings<F> {
        assert_eq!(data.len(), rows * dim);
        Embeddings { rows, dim, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    /// Copy rows `range` out into a flat buffer (a sub-part or context
    /// partition being staged to a worker).
    pub fn copy_rows(&self, range: Range<usize>) -> Vec<F> {
        self.data[range.start * self.dim..range.end * self.dim].to_vec()
    }

    /// Write a flat buffer back over rows starting at `first_row`.
    pub fn paste_rows(&mut self, first_row: usize, buf: &[F]) {
        assert_eq!(buf.len() % self.dim, 0);
        let start = first_row * self.dim;
        self.data[start..start + buf.len()].copy_from_slice(buf);
    }

    /// Mutable row-range view addressed by global row id.
    pub fn slice_rows_mut(&mut self, range: Range<usize>) -> RowSlice<'_, F> {
        let dim = self.dim;
        RowSlice::new(
            range.start,
            dim,
            &mut self.data[range.start * dim..range.end * dim],
        )
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn write_nebe(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut header = [0u8; 24];
        header[0..4].copy_from_slice(EMB_MAGIC);
        header[4] = EMB_FORMAT_VERSION;
        header[5] = 4; // f32 payload
        header[8..16].copy_from_slice(&(self.rows as u64).to_le_bytes());
        header[16..20].copy_from_slice(&(self.dim as u32).to_le_bytes());
        w.write_all(&header).map_err(|e| Error::io(path, e))?;
        let mut buf = Vec::with_capacity(self.dim * 4);
        for i in 0..self.rows {
            buf.clear();
            for v in self.row(i) {
                buf.extend_from_slice(&(v.to_f64().unwrap() as f32).to_le_bytes());
            }
            w.write_all(&buf).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Text form, one "id v1 ... vd" line per row.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for i in 0..self.rows {
            let mut line = i.to_string();
            for v in self.row(i) {
                line.push(' ');
                line.push_str(&format!("{}", v.to_f64().unwrap() as f32));
            }
            line.push('\n');
            w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

impl Embeddings<f32> {
    pub fn read_nebe(path: impl AsRef<Path>) -> Result<Embeddings<f32>> {
        let path = path.as_ref();
        let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut header = [0u8; 24];
        file.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
        if &header[0..4] != EMB_MAGIC {
            return Err(Error::format(path, "bad magic, expected NEBE"));
        }
        if header[4] != EMB_FORMAT_VERSION {
            return Err(Error::format(path, format!("unsupported version {}", header[4])));
        }
        if header[5] != 4 {
            return Err(Error::format(path, format!("unsupported float width {}", header[5])));
        }
        let rows = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(header[16..20].try_into().unwrap()) as usize;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
        if buf.len() != rows * dim * 4 {
            return Err(Error::format(
                path,
                format!("expected {} value bytes, found {}", rows * dim * 4, buf.len()),
            ));
        }
        let data = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Embeddings { rows, dim, data })
    }
}

/// Mutable window onto a contiguous row range of an embedding matrix,
/// addressed by global row id. Workers train through these; a slice
/// physically cannot write outside its range, which is how block
/// orthogonality stays lock-free.
pub struct RowSlice<'a, F> {
    first_row: usize,
    dim: usize,
    data: &'a mut [F],
}

impl<'a, F: Float> RowSlice<'a, F> {
    pub fn new(first_row: usize, dim: usize, data: &'a mut [F]) -> RowSlice<'a, F> {
        assert_eq!(data.len() % dim, 0);
        RowSlice { first_row, dim, data }
    }

    pub fn range(&self) -> Range<usize> {
        self.first_row..self.first_row + self.data.len() / self.dim
    }

    pub fn contains(&self, global_row: usize) -> bool {
        self.range().contains(&global_row)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row_mut(&mut self, global_row: usize) -> &mut [F] {
        let local = global_row - self.first_row;
        &mut self.data[local * self.dim..(local + 1) * self.dim]
    }

    pub fn row(&self, global_row: usize) -> &[F] {
        let local = global_row - self.first_row;
        &self.data[local * self.dim..(local + 1) * self.dim]
    }

    /// Disjoint mutable rows, for the positive/negative pair updates when
    /// both rows live in the same slice.
    pub fn rows_pair_mut(&mut self, a: usize, b: usize) -> (&mut [F], &mut [F]) {
        assert_ne!(a, b);
        let (la, lb) = (a - self.first_row, b - self.first_row);
        let d = self.dim;
        if la < lb {
            let (left, right) = self.data.split_at_mut(lb * d);
            (&mut left[la * d..(la + 1) * d], &mut right[..d])
        } else {
            let (left, right) = self.data.split_at_mut(la * d);
            let b_row = &mut left[lb * d..(lb + 1) * d];
            (&mut right[..d], b_row)
        }
    }
}
