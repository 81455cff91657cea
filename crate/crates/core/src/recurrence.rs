//! Recurrence matrices and their line-structure measures (DET, LAM).

use std::io::{self, Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::BitMatrix;
use crate::embedding::EmbeddedTrajectory;
use crate::error::{Error, Result};
use crate::scalar::{Fraction, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Euclidean,
    Maximum,
}

impl Norm {
    pub fn distance<T: Scalar>(self, a: &[T], b: &[T]) -> T {
        match self {
            Norm::Euclidean => a
                .iter()
                .zip(b)
                .fold(T::zero(), |acc, (&p, &q)| acc + (p - q) * (p - q))
                .sqrt(),
            Norm::Maximum => a
                .iter()
                .zip(b)
                .fold(T::zero(), |acc, (&p, &q)| acc.max((p - q).abs())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::Euclidean => "euclidean",
            Norm::Maximum => "maximum",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Norm::Euclidean),
            "maximum" | "max" | "supremum" => Ok(Norm::Maximum),
            other => Err(Error::InvalidInput(format!("unknown norm `{other}`"))),
        }
    }
}

/// Symmetric, reflexive binary matrix of ε-recurrences.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceMatrix {
    bits: BitMatrix,
    epsilon: f64,
    norm: Norm,
}

impl RecurrenceMatrix {
    /// Wraps an explicit bit matrix, checking symmetry and the unit diagonal.
    pub fn from_bits(bits: BitMatrix, epsilon: f64, norm: Norm) -> Result<Self> {
        if bits.size() == 0 {
            return Err(Error::InvalidInput("recurrence matrix must be non-empty".into()));
        }
        if (0..bits.size()).any(|i| !bits.get(i, i)) {
            return Err(Error::InvalidInput("recurrence matrix must be reflexive".into()));
        }
        if !bits.is_symmetric() {
            return Err(Error::InvalidInput("recurrence matrix must be symmetric".into()));
        }
        Ok(Self { bits, epsilon, norm })
    }

    pub fn size(&self) -> usize {
        self.bits.size()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits.get(i, j)
    }

    pub fn bits(&self) -> &BitMatrix {
        &self.bits
    }

    /// Number of ones, diagonal included.
    pub fn recurrence_count(&self) -> u64 {
        self.bits.count_ones()
    }

    pub fn recurrence_rate(&self) -> f64 {
        let n = self.size() as f64;
        self.recurrence_count() as f64 / (n * n)
    }
}

/// `R[i][j] = 1` iff the distance between states i and j is at most ε.
pub fn recurrence_matrix<T: Scalar>(
    trajectory: &EmbeddedTrajectory<T>,
    epsilon: T,
    norm: Norm,
) -> Result<RecurrenceMatrix> {
    let n = trajectory.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(Error::InvalidInput("epsilon must be positive and finite".into()));
    }
    if trajectory.points().flatten().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("trajectory has non-finite coordinates".into()));
    }
    let words_per_row = n.div_ceil(64);
    let mut words = vec![0u64; n * words_per_row];
    words
        .par_chunks_mut(words_per_row)
        .enumerate()
        .for_each(|(i, row)| {
            let p = trajectory.point(i);
            for j in 0..n {
                // the distance is symmetric in its arguments, so rows agree with columns
                if norm.distance(p, trajectory.point(j)) <= epsilon {
                    row[j / 64] |= 1u64 << (j % 64);
                }
            }
        });
    Ok(RecurrenceMatrix {
        bits: BitMatrix::from_packed_rows(n, words),
        epsilon: epsilon.to_f64_lossy(),
        norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Diagonal,
    Vertical,
    Horizontal,
}

/// Counts of maximal lines by length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineHistogram {
    orientation: Orientation,
    /// `counts[l]` lines of length `l`; index 0 unused.
    counts: Vec<u64>,
}

impl LineHistogram {
    fn empty(orientation: Orientation, n: usize) -> Self {
        Self {
            orientation,
            counts: vec![0; n + 1],
        }
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn count(&self, length: usize) -> u64 {
        self.counts.get(length).copied().unwrap_or(0)
    }

    /// `(length, count)` pairs with a non-zero count, by increasing length.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &c)| c > 0)
            .map(|(l, &c)| (l, c))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// Recurrence points covered by lines of length at least `min_length`.
    pub fn points_in_lines(&self, min_length: usize) -> u64 {
        self.iter()
            .filter(|&(l, _)| l >= min_length)
            .map(|(l, c)| l as u64 * c)
            .sum()
    }

    pub fn total_points(&self) -> u64 {
        self.points_in_lines(1)
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }

    fn record_runs(&mut self, cells: impl Iterator<Item = bool>) {
        let mut run = 0usize;
        for on in cells {
            if on {
                run += 1;
            } else if run > 0 {
                self.counts[run] += 1;
                run = 0;
            }
        }
        if run > 0 {
            self.counts[run] += 1;
        }
    }
}

/// Maximal runs along every diagonal, both triangles.
///
/// The main diagonal (line of identity) is skipped unless `include_loi`.
pub fn diagonal_histogram(r: &RecurrenceMatrix, include_loi: bool) -> LineHistogram {
    let n = r.size();
    let upper = (1..n)
        .into_par_iter()
        .fold(
            || LineHistogram::empty(Orientation::Diagonal, n),
            |mut h, offset| {
                h.record_runs((0..n - offset).map(|i| r.get(i, i + offset)));
                h
            },
        )
        .reduce(|| LineHistogram::empty(Orientation::Diagonal, n), LineHistogram::merge);
    // the lower triangle mirrors the upper one
    let mut hist = upper;
    hist.counts.iter_mut().for_each(|c| *c *= 2);
    if include_loi {
        hist.record_runs((0..n).map(|i| r.get(i, i)));
    }
    hist
}

/// Maximal runs down every column, main diagonal included.
pub fn vertical_histogram(r: &RecurrenceMatrix) -> LineHistogram {
    let n = r.size();
    (0..n)
        .into_par_iter()
        .fold(
            || LineHistogram::empty(Orientation::Vertical, n),
            |mut h, col| {
                h.record_runs((0..n).map(|row| r.get(row, col)));
                h
            },
        )
        .reduce(|| LineHistogram::empty(Orientation::Vertical, n), LineHistogram::merge)
}

/// Maximal runs along every row.
pub fn horizontal_histogram(r: &RecurrenceMatrix) -> LineHistogram {
    let n = r.size();
    let mut hist = LineHistogram::empty(Orientation::Horizontal, n);
    for row in 0..n {
        hist.record_runs((0..n).map(|col| r.get(row, col)));
    }
    hist
}

fn line_fraction(hist: &LineHistogram, min_length: usize, measure: &'static str) -> Result<Fraction> {
    if min_length == 0 {
        return Err(Error::InvalidInput("minimum line length must be positive".into()));
    }
    let total = hist.total_points();
    if total == 0 {
        return Err(Error::UndefinedMeasure(measure));
    }
    Ok(Fraction::new(hist.points_in_lines(min_length), total))
}

/// Determinism as an exact ratio of recurrence-point counts.
pub fn det_fraction(r: &RecurrenceMatrix, l_min: usize, include_loi: bool) -> Result<Fraction> {
    line_fraction(&diagonal_histogram(r, include_loi), l_min, "DET")
}

/// Fraction of recurrence points on diagonal lines of length at least `l_min`.
pub fn det(r: &RecurrenceMatrix, l_min: usize, include_loi: bool) -> Result<f64> {
    det_fraction(r, l_min, include_loi).map(|f| f.value())
}

pub fn lam_fraction(r: &RecurrenceMatrix, v_min: usize) -> Result<Fraction> {
    line_fraction(&vertical_histogram(r), v_min, "LAM")
}

/// Fraction of recurrence points on vertical lines of length at least `v_min`.
pub fn lam(r: &RecurrenceMatrix, v_min: usize) -> Result<f64> {
    lam_fraction(r, v_min).map(|f| f.value())
}

/// Line-length thresholds and the line-of-identity convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RqaConfig {
    pub l_min: usize,
    pub v_min: usize,
    pub include_loi: bool,
}

impl Default for RqaConfig {
    fn default() -> Self {
        Self {
            l_min: 2,
            v_min: 2,
            include_loi: false,
        }
    }
}

pub const RPV1_MAGIC: &[u8; 4] = b"RPV1";

/// Binary dump: `RPV1`, N (u64 LE), ε (f64 LE), then N rows of ⌈N/8⌉ bytes,
/// bit `j % 8` of byte `j / 8` holding column j.
pub fn write_rpv1<W: Write>(r: &RecurrenceMatrix, mut out: W) -> io::Result<()> {
    let n = r.size();
    out.write_all(RPV1_MAGIC)?;
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&r.epsilon().to_le_bytes())?;
    let bytes_per_row = n.div_ceil(8);
    let mut buf = vec![0u8; bytes_per_row];
    for i in 0..n {
        let row = r.bits().row(i);
        for (k, byte) in buf.iter_mut().enumerate() {
            *byte = (row[k / 8] >> (8 * (k % 8))) as u8;
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

/// Reads a dump written by [`write_rpv1`]; the norm is not stored and is reported as given.
pub fn read_rpv1<R: Read>(mut input: R, norm: Norm) -> Result<RecurrenceMatrix> {
    let io_err = |e: io::Error| Error::InvalidInput(format!("RPV1 read failed: {e}"));
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(io_err)?;
    if &magic != RPV1_MAGIC {
        return Err(Error::InvalidInput("missing RPV1 magic".into()));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word).map_err(io_err)?;
    let n = usize::try_from(u64::from_le_bytes(word))
        .map_err(|_| Error::InvalidInput("matrix too large".into()))?;
    input.read_exact(&mut word).map_err(io_err)?;
    let epsilon = f64::from_le_bytes(word);
    let bytes_per_row = n.div_ceil(8);
    let mut bits = BitMatrix::zeros(n);
    let mut buf = vec![0u8; bytes_per_row];
    for i in 0..n {
        input.read_exact(&mut buf).map_err(io_err)?;
        for j in 0..n {
            if (buf[j / 8] >> (j % 8)) & 1 == 1 {
                bits.set(i, j, true);
            }
        }
    }
    RecurrenceMatrix::from_bits(bits, epsilon, norm)
}

/// Coordinate list `i,j` of the ones with `i <= j`, header row included.
pub fn write_sparse_csv<W: Write>(r: &RecurrenceMatrix, mut out: W) -> io::Result<()> {
    writeln!(out, "i,j")?;
    for i in 0..r.size() {
        for j in r.bits().row_ones(i).filter(|&j| j >= i) {
            writeln!(out, "{i},{j}")?;
        }
    }
    Ok(())
}
