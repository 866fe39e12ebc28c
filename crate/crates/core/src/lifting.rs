//! Two-stage copy-and-permute lifting of base matrices into binary
//! parity-check matrices, girth measurement and file formats.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protograph::BaseMatrix;
use crate::rng::stream;

/// Stage-1 expansion: every entry `a` becomes an `f x f` block holding `a`
/// cyclically shifted identities (shifts `0..a`). Column `k f + t` inherits
/// the level of base column `k`.
pub fn expand_parallel(base: &BaseMatrix, f: usize) -> Result<BaseMatrix> {
    if f == 0 || (base.max_entry() as usize) > f {
        return Err(Error::CannotResolveParallel {
            factor: f,
            max_entry: base.max_entry(),
        });
    }
    let (rows, cols) = (base.rows() * f, base.cols() * f);
    let mut entries = vec![0u32; rows * cols];
    for l in 0..base.rows() {
        for k in 0..base.cols() {
            let a = base.get(l, k) as usize;
            for i in 0..f {
                for j in 0..f {
                    if (j + f - i) % f < a {
                        entries[(l * f + i) * cols + k * f + j] = 1;
                    }
                }
            }
        }
    }
    let levels = base
        .levels()
        .iter()
        .flat_map(|&lv| std::iter::repeat_n(lv, f))
        .collect();
    BaseMatrix::new(rows, cols, entries, levels)
}

/// Circulant shift of each 1-entry of the binary stage-1 matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftTable {
    pub q: usize,
    /// `(row, col, shift)` in the order the search assigned them.
    pub shifts: Vec<(usize, usize, usize)>,
}

/// Where a parity-check matrix came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub base_id: String,
    pub base: Option<BaseMatrix>,
    pub f: usize,
    pub q: usize,
    pub seed: u64,
    pub shifts: Option<ShiftTable>,
    /// Bit level (1-based) of every column of `H`.
    pub column_levels: Vec<usize>,
}

/// FNV-1a digest of the text form, used as a short matrix id.
pub fn base_id(base: &BaseMatrix) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in base.to_string().bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Binary sparse parity-check matrix stored as row and column adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseParityMatrix {
    rows: usize,
    cols: usize,
    row_adj: Vec<Vec<u32>>,
    col_adj: Vec<Vec<u32>>,
    pub origin: Option<Lineage>,
}

impl SparseParityMatrix {
    pub fn from_edges(
        rows: usize,
        cols: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut row_adj = vec![Vec::new(); rows];
        let mut col_adj = vec![Vec::new(); cols];
        for (r, c) in edges {
            if r >= rows || c >= cols {
                return Err(Error::InvalidParameter(format!(
                    "edge ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            row_adj[r].push(c as u32);
            col_adj[c].push(r as u32);
        }
        for (r, list) in row_adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge in row {r}"
                )));
            }
        }
        for list in &mut col_adj {
            list.sort_unstable();
        }
        Ok(SparseParityMatrix {
            rows,
            cols,
            row_adj,
            col_adj,
            origin: None,
        })
    }

    /// Dense 0/1 matrix (row-major) to sparse.
    pub fn from_dense(rows: usize, cols: usize, dense: &[u8]) -> Result<Self> {
        if dense.len() != rows * cols {
            return Err(Error::InvalidParameter(
                "dense matrix has the wrong size".into(),
            ));
        }
        let edges = (0..rows * cols)
            .filter(|&i| dense[i] != 0)
            .map(|i| (i / cols, i % cols));
        Self::from_edges(rows, cols, edges)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.row_adj[r]
    }

    pub fn col(&self, c: usize) -> &[u32] {
        &self.col_adj[c]
    }

    pub fn edge_count(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    /// Edges in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_adj
            .iter()
            .enumerate()
            .flat_map(|(r, cs)| cs.iter().map(move |&c| (r, c as usize)))
    }

    pub fn column_levels(&self) -> Option<&[usize]> {
        self.origin.as_ref().map(|o| o.column_levels.as_slice())
    }

    pub fn with_origin(mut self, origin: Lineage) -> Result<Self> {
        if origin.column_levels.len() != self.cols {
            return Err(Error::InvalidParameter(
                "lineage levels do not match the column count".into(),
            ));
        }
        self.origin = Some(origin);
        Ok(self)
    }

    /// `H x` over GF(2) for a 0/1 vector.
    pub fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        self.row_adj
            .iter()
            .map(|cs| cs.iter().fold(0u8, |acc, &c| acc ^ (word[c as usize] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        self.row_adj
            .iter()
            .all(|cs| cs.iter().fold(0u8, |acc, &c| acc ^ (word[c as usize] & 1)) == 0)
    }

    /// alist text: `n m`, max degrees, column then row degrees, then the
    /// 1-indexed adjacency of each column and each row.
    pub fn to_alist(&self) -> String {
        let join = |v: &[u32]| {
            v.iter()
                .map(|x| (x + 1).to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let degs = |adj: &[Vec<u32>]| {
            adj.iter()
                .map(|v| v.len().to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let max = |adj: &[Vec<u32>]| adj.iter().map(Vec::len).max().unwrap_or(0);
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.cols, self.rows);
        let _ = writeln!(s, "{} {}", max(&self.col_adj), max(&self.row_adj));
        let _ = writeln!(s, "{}", degs(&self.col_adj));
        let _ = writeln!(s, "{}", degs(&self.row_adj));
        for v in &self.col_adj {
            let _ = writeln!(s, "{}", join(v));
        }
        for v in &self.row_adj {
            let _ = writeln!(s, "{}", join(v));
        }
        s
    }

    /// Parses alist text; zero padding in the adjacency lists is accepted.
    pub fn from_alist(text: &str) -> Result<Self> {
        let mut nums = text.split_whitespace().map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad alist token {t:?}")))
        });
        let mut next = || {
            nums.next()
                .unwrap_or_else(|| Err(Error::Parse("truncated alist".into())))
        };
        let (cols, rows) = (next()?, next()?);
        let (max_col, max_row) = (next()?, next()?);
        let col_deg: Vec<usize> = (0..cols).map(|_| next()).collect::<Result<_>>()?;
        let row_deg: Vec<usize> = (0..rows).map(|_| next()).collect::<Result<_>>()?;
        if col_deg.iter().any(|&d| d > max_col) || row_deg.iter().any(|&d| d > max_row) {
            return Err(Error::Parse("alist degree exceeds declared maximum".into()));
        }
        let tokens = text.split_whitespace().count();
        let plain = 4 + cols + rows + col_deg.iter().sum::<usize>() + row_deg.iter().sum::<usize>();
        let padded = tokens != plain && tokens == 4 + cols + rows + cols * max_col + rows * max_row;
        let mut edges = Vec::new();
        for (c, &d) in col_deg.iter().enumerate() {
            let width = if padded { max_col } else { d };
            for i in 0..width {
                let r = next()?;
                if i < d {
                    if r == 0 || r > rows {
                        return Err(Error::Parse(format!(
                            "row index {r} out of range in column {}",
                            c + 1
                        )));
                    }
                    edges.push((r - 1, c));
                }
            }
        }
        let h = Self::from_edges(rows, cols, edges)?;
        for (r, &d) in row_deg.iter().enumerate() {
            let width = if padded { max_row } else { d };
            let mut listed: Vec<u32> = Vec::with_capacity(d);
            for i in 0..width {
                let c = next()?;
                if i < d {
                    if c == 0 || c > cols {
                        return Err(Error::Parse(format!(
                            "column index {c} out of range in row {}",
                            r + 1
                        )));
                    }
                    listed.push((c - 1) as u32);
                }
            }
            listed.sort_unstable();
            if listed != h.row_adj[r] {
                return Err(Error::Parse(format!(
                    "row {} list disagrees with column lists",
                    r + 1
                )));
            }
        }
        Ok(h)
    }

    /// Writes `path` as alist and, when lineage is known, `<path>.lineage.json`.
    pub fn save_alist(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_alist())?;
        if let Some(origin) = &self.origin {
            let json =
                serde_json::to_string_pretty(origin).map_err(|e| Error::Io(e.to_string()))?;
            std::fs::write(lineage_path(path), json)?;
        }
        Ok(())
    }

    /// Reads an alist file and its lineage sidecar if present.
    pub fn load_alist(path: &Path) -> Result<Self> {
        let h = Self::from_alist(&std::fs::read_to_string(path)?)?;
        let side = lineage_path(path);
        if side.exists() {
            let origin: Lineage = serde_json::from_str(&std::fs::read_to_string(side)?)
                .map_err(|e| Error::Parse(format!("lineage: {e}")))?;
            return h.with_origin(origin);
        }
        Ok(h)
    }

    /// Compact binary edge list: magic, lineage JSON, dimensions, `(row, col)` pairs (little endian).
    pub fn write_edge_list(&self, mut out: impl Write) -> Result<()> {
        let lineage = serde_json::to_vec(&self.origin).map_err(|e| Error::Io(e.to_string()))?;
        out.write_all(EDGE_MAGIC)?;
        out.write_all(&(lineage.len() as u32).to_le_bytes())?;
        out.write_all(&lineage)?;
        out.write_all(&(self.rows as u32).to_le_bytes())?;
        out.write_all(&(self.cols as u32).to_le_bytes())?;
        out.write_all(&(self.edge_count() as u64).to_le_bytes())?;
        for (r, c) in self.edges() {
            out.write_all(&(r as u32).to_le_bytes())?;
            out.write_all(&(c as u32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_edge_list(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != EDGE_MAGIC {
            return Err(Error::Parse("not an edge-list file".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |input: &mut dyn Read| -> Result<u32> {
            input.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let len = read_u32(&mut input)? as usize;
        let mut lineage = vec![0u8; len];
        input.read_exact(&mut lineage)?;
        let origin: Option<Lineage> =
            serde_json::from_slice(&lineage).map_err(|e| Error::Parse(format!("lineage: {e}")))?;
        let rows = read_u32(&mut input)? as usize;
        let cols = read_u32(&mut input)? as usize;
        let mut u64buf = [0u8; 8];
        input.read_exact(&mut u64buf)?;
        let count = u64::from_le_bytes(u64buf) as usize;
        let mut edges = Vec::with_capacity(count);
        for _ in 0..count {
            let r = read_u32(&mut input)? as usize;
            let c = read_u32(&mut input)? as usize;
            edges.push((r, c));
        }
        let h = Self::from_edges(rows, cols, edges)?;
        match origin {
            Some(o) => h.with_origin(o),
            None => Ok(h),
        }
    }
}

const EDGE_MAGIC: &[u8; 8] = b"PGEDGE01";

/// Loads a code stored either as a binary edge list or as alist (plus sidecar).
pub fn load_code(path: &Path) -> Result<SparseParityMatrix> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(EDGE_MAGIC) {
        SparseParityMatrix::read_edge_list(bytes.as_slice())
    } else {
        SparseParityMatrix::load_alist(path)
    }
}

fn lineage_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".lineage.json");
    PathBuf::from(s)
}

/// Replaces every 1-entry of `a01` by a `Q x Q` circulant permutation.
///
/// Edges are visited column by column; for each, candidate shifts are scanned
/// in a seeded random order and the first one minimising (new 4-cycles, new
/// 6-cycles) among already placed edges wins.
pub fn lift_circulant(
    a01: &BaseMatrix,
    q: usize,
    seed: u64,
) -> Result<(SparseParityMatrix, ShiftTable)> {
    if q == 0 {
        return Err(Error::InvalidParameter(
            "lifting factor must be positive".into(),
        ));
    }
    if a01.max_entry() > 1 {
        return Err(Error::CannotResolveParallel {
            factor: 1,
            max_entry: a01.max_entry(),
        });
    }
    let (rows, cols) = (a01.rows(), a01.cols());
    let mut shift: Vec<Option<usize>> = vec![None; rows * cols];
    let mut rng = stream(seed, &[q as u64]);
    let mut order: Vec<usize> = (0..q).collect();
    let mut c4 = vec![0u32; q];
    let mut c6 = vec![0u32; q];
    let mut table = Vec::new();
    let at = |shift: &[Option<usize>], r: usize, c: usize| shift[r * cols + c];
    for c1 in 0..cols {
        for r1 in 0..rows {
            if a01.get(r1, c1) == 0 {
                continue;
            }
            c4.iter_mut().for_each(|x| *x = 0);
            c6.iter_mut().for_each(|x| *x = 0);
            // A cycle closes when the alternating shift sum is 0 mod Q; the new
            // shift s11 must equal `s12 - s22 + s21` (4) or `s12 - s22 + s23 - s33 + s31` (6).
            for r2 in (0..rows).filter(|&r| r != r1) {
                let Some(s21) = at(&shift, r2, c1) else {
                    continue;
                };
                for c2 in (0..cols).filter(|&c| c != c1) {
                    let (Some(s12), Some(s22)) = (at(&shift, r1, c2), at(&shift, r2, c2)) else {
                        continue;
                    };
                    c4[(s12 + 2 * q - s22 + s21) % q] += 1;
                }
            }
            for r3 in (0..rows).filter(|&r| r != r1) {
                let Some(s31) = at(&shift, r3, c1) else {
                    continue;
                };
                for c2 in (0..cols).filter(|&c| c != c1) {
                    let Some(s12) = at(&shift, r1, c2) else {
                        continue;
                    };
                    for r2 in (0..rows).filter(|&r| r != r1 && r != r3) {
                        let Some(s22) = at(&shift, r2, c2) else {
                            continue;
                        };
                        for c3 in (0..cols).filter(|&c| c != c1 && c != c2) {
                            let (Some(s23), Some(s33)) = (at(&shift, r2, c3), at(&shift, r3, c3))
                            else {
                                continue;
                            };
                            c6[(s12 + s23 + s31 + 2 * q - s22 - s33) % q] += 1;
                        }
                    }
                }
            }
            order.shuffle(&mut rng);
            let best = *order
                .iter()
                .min_by_key(|&&s| (c4[s], c6[s]))
                .expect("q >= 1");
            shift[r1 * cols + c1] = Some(best);
            table.push((r1, c1, best));
        }
    }
    let edges = table
        .iter()
        .flat_map(|&(r, c, s)| (0..q).map(move |i| (r * q + i, c * q + (i + s) % q)));
    let h = SparseParityMatrix::from_edges(rows * q, cols * q, edges)?;
    let levels = a01
        .levels()
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, q))
        .collect();
    let shifts = ShiftTable { q, shifts: table };
    let origin = Lineage {
        base_id: base_id(a01),
        base: Some(a01.clone()),
        f: 1,
        q,
        seed,
        shifts: Some(shifts.clone()),
        column_levels: levels,
    };
    Ok((h.with_origin(origin)?, shifts))
}

/// Full two-stage pipeline: `expand_parallel(base, f)` then `lift_circulant(.., q, seed)`.
pub fn lift(base: &BaseMatrix, f: usize, q: usize, seed: u64) -> Result<SparseParityMatrix> {
    let stage1 = expand_parallel(base, f)?;
    let (h, _) = lift_circulant(&stage1, q, seed)?;
    let mut origin = h.origin.clone().expect("lift_circulant records lineage");
    origin.base_id = base_id(base);
    origin.base = Some(base.clone());
    origin.f = f;
    h.with_origin(origin)
}

/// Shortest cycle length of the Tanner graph, or `cap + 2` when it exceeds `cap`.
pub fn girth(h: &SparseParityMatrix, cap: usize) -> usize {
    let n = h.cols();
    let total = n + h.rows();
    let mut dist = vec![u32::MAX; total];
    let mut parent = vec![u32::MAX; total];
    let mut touched = Vec::new();
    let mut queue = VecDeque::new();
    let mut best = cap + 2;
    let neighbours = |v: usize| -> Box<dyn Iterator<Item = usize> + '_> {
        if v < n {
            Box::new(h.col(v).iter().map(move |&r| n + r as usize))
        } else {
            Box::new(h.row(v - n).iter().map(|&c| c as usize))
        }
    };
    for root in 0..n {
        for &v in &touched {
            dist[v] = u32::MAX;
            parent[v] = u32::MAX;
        }
        touched.clear();
        queue.clear();
        dist[root] = 0;
        touched.push(root);
        queue.push_back(root);
        'bfs: while let Some(u) = queue.pop_front() {
            let du = dist[u] as usize;
            if 2 * du + 2 > best.min(cap) {
                break;
            }
            for w in neighbours(u) {
                if dist[w] == u32::MAX {
                    dist[w] = (du + 1) as u32;
                    parent[w] = u as u32;
                    touched.push(w);
                    queue.push_back(w);
                } else if parent[u] != w as u32 {
                    let len = du + dist[w] as usize + 1;
                    if len < best && len <= cap {
                        best = len;
                        if best == 4 {
                            return 4;
                        }
                        break 'bfs;
                    }
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protograph::robust_base_matrix;

    #[test]
    fn identity_lifts() {
        let a = BaseMatrix::from_rows(&[&[1, 1, 0], &[0, 1, 1]], vec![1, 1, 1]).unwrap();
        assert_eq!(expand_parallel(&a, 1).unwrap(), a);
        let (h, _) = lift_circulant(&a, 1, 7).unwrap();
        assert_eq!(
            h.edges().collect::<Vec<_>>(),
            vec![(0, 0), (0, 1), (1, 1), (1, 2)]
        );
    }

    #[test]
    fn triple_entry_becomes_all_ones() {
        let a = BaseMatrix::from_rows(&[&[3, 1]], vec![1, 2]).unwrap();
        let e = expand_parallel(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(e.get(i, j), 1);
            }
            assert_eq!(e.row_sum(i), 4);
        }
        assert_eq!(e.levels(), &[1, 1, 1, 2, 2, 2]);
        assert!(expand_parallel(&a, 2).is_err());
    }

    #[test]
    fn robust_expansion_counts() {
        let a = robust_base_matrix();
        let e = expand_parallel(&a, 3).unwrap();
        assert_eq!((e.rows(), e.cols()), (9, 48));
        assert_eq!(e.edge_count(), 3 * a.edge_count());
        for k in 0..48 {
            assert_eq!(e.col_sum(k), a.col_sum(k / 3));
        }
        for l in 0..9 {
            assert_eq!(e.row_sum(l), a.row_sum(l / 3));
        }
    }

    #[test]
    fn girth_small_cases() {
        let square = SparseParityMatrix::from_dense(2, 2, &[1, 1, 1, 1]).unwrap();
        assert_eq!(girth(&square, 12), 4);
        let path = SparseParityMatrix::from_dense(2, 3, &[1, 1, 0, 0, 1, 1]).unwrap();
        assert_eq!(girth(&path, 12), 14);
        // 6-cycle: three checks on a triangle of variables
        let tri = SparseParityMatrix::from_dense(3, 3, &[1, 1, 0, 0, 1, 1, 1, 0, 1]).unwrap();
        assert_eq!(girth(&tri, 12), 6);
        assert_eq!(girth(&tri, 4), 6);
    }

    #[test]
    fn alist_roundtrip_and_padding() {
        let h = SparseParityMatrix::from_dense(2, 3, &[1, 1, 0, 0, 1, 1]).unwrap();
        let text = h.to_alist();
        assert_eq!(text, "3 2\n2 2\n1 2 1\n2 2\n1\n1 2\n2\n1 2\n2 3\n");
        assert_eq!(SparseParityMatrix::from_alist(&text).unwrap(), h);
        let padded = "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 3\n";
        assert_eq!(SparseParityMatrix::from_alist(padded).unwrap(), h);
        assert!(SparseParityMatrix::from_alist("3 2\n2 2\n1 2").is_err());
    }

    #[test]
    fn edge_list_roundtrip() {
        let h = lift(&robust_base_matrix(), 3, 5, 1).unwrap();
        let mut buf = Vec::new();
        h.write_edge_list(&mut buf).unwrap();
        let back = SparseParityMatrix::read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.column_levels().unwrap().len(), 48 * 5);
    }

    #[test]
    fn lift_is_deterministic_and_degree_preserving() {
        let a = robust_base_matrix();
        let h1 = lift(&a, 3, 20, 42).unwrap();
        let h2 = lift(&a, 3, 20, 42).unwrap();
        assert_eq!(h1, h2);
        assert_eq!((h1.rows(), h1.cols()), (9 * 20, 48 * 20));
        for c in 0..h1.cols() {
            assert_eq!(h1.col(c).len() as u32, a.col_sum(c / 60));
        }
        for r in 0..h1.rows() {
            assert_eq!(h1.row(r).len() as u32, a.row_sum(r / 60));
        }
    }
}
