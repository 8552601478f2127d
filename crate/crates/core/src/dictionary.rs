//! Enumeration of all pure `n`-qubit stabilizer states as Pauli-expectation
//! columns, for `n <= 4`.
//!
//! Every stabilizer state is fixed by a signed stabilizer group whose unsigned
//! part is a Lagrangian (maximal isotropic) subspace of `F_2^{2n}`. The
//! Lagrangian subspaces are enumerated by breadth-first search from the
//! Z-basis subspace under the symplectic images of `H`, `S` and `CNOT`,
//! deduplicated by their reduced row echelon form. Each subspace then yields
//! `2^n` states, one per sign assignment of its generators. The total is
//! `2^n prod_{k=1..n} (2^k + 1)`.
//!
//! # Cache file layout (format version 1)
//!
//! All integers little-endian.
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 8    | magic `b"STABDICT"`                    |
//! | 8      | 2    | format version (`1`)                   |
//! | 10     | 1    | `n`                                    |
//! | 11     | 1    | reserved, `0`                          |
//! | 12     | 4    | column count                           |
//! | 16     | ...  | columns, `4^(n-1)` bytes each          |
//!
//! A column holds its `4^n` expectation values in lexicographic Pauli order,
//! packed four per byte, entry `i` in bits `2*(i % 4)..2*(i % 4)+2` of byte
//! `i / 4`, coded `00 = 0`, `01 = +1`, `11 = -1`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pauli::PauliString;

pub const MAX_DICTIONARY_QUBITS: usize = 4;
const CACHE_MAGIC: &[u8; 8] = b"STABDICT";
pub const CACHE_FORMAT_VERSION: u16 = 1;

/// `2^n prod_{k=1..n} (2^k + 1)`.
pub fn stabilizer_state_count(n: usize) -> usize {
    (1..=n).fold(1usize << n, |acc, k| acc * ((1usize << k) + 1))
}

/// All pure stabilizer states on `n_qubits`, stored sparsely: each column has
/// exactly `2^n` nonzero entries, all `+-1`.
#[derive(Clone, Debug)]
pub struct StabilizerDictionary {
    n_qubits: usize,
    support: Vec<u16>,
    signs: Vec<i8>,
    index: HashMap<Vec<i32>, usize>,
}

fn column_key(support: &[u16], signs: &[i8]) -> Vec<i32> {
    support
        .iter()
        .zip(signs)
        .map(|(&p, &s)| (p as i32 + 1) * s as i32)
        .collect()
}

impl StabilizerDictionary {
    fn from_sparse(n_qubits: usize, support: Vec<u16>, signs: Vec<i8>) -> Result<Self> {
        let nnz = 1usize << n_qubits;
        let count = support.len() / nnz;
        let mut index = HashMap::with_capacity(count);
        for c in 0..count {
            let range = c * nnz..(c + 1) * nnz;
            let key = column_key(&support[range.clone()], &signs[range]);
            if index.insert(key, c).is_some() {
                return Err(Error::Cache(format!("duplicate stabilizer column {c}")));
            }
        }
        Ok(Self { n_qubits, support, signs, index })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.support.len() >> self.n_qubits
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Length of each dense column, `4^n`.
    pub fn n_rows(&self) -> usize {
        1 << (2 * self.n_qubits)
    }

    /// Nonzero entries of column `c` as `(pauli index, sign)`, sorted by index.
    pub fn column_entries(&self, c: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let nnz = 1usize << self.n_qubits;
        let range = c * nnz..(c + 1) * nnz;
        self.support[range.clone()]
            .iter()
            .zip(&self.signs[range])
            .map(|(&p, &s)| (p as usize, s))
    }

    /// Dense `{0, +-1}` column.
    pub fn column(&self, c: usize) -> Vec<i8> {
        let mut out = vec![0i8; self.n_rows()];
        for (p, s) in self.column_entries(c) {
            out[p] = s;
        }
        out
    }

    /// Position of a dense column in the dictionary, if present.
    pub fn position(&self, column: &[i8]) -> Option<usize> {
        let (support, signs): (Vec<u16>, Vec<i8>) = column
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != 0)
            .map(|(p, &s)| (p as u16, s))
            .unzip();
        self.index.get(&column_key(&support, &signs)).copied()
    }

    /// `sum_P column_P * y_P`.
    #[inline]
    pub fn dot(&self, c: usize, y: &[f64]) -> f64 {
        let nnz = 1usize << self.n_qubits;
        let base = c * nnz;
        let mut acc = 0.0;
        for k in base..base + nnz {
            let v = y[self.support[k] as usize];
            if self.signs[k] > 0 {
                acc += v;
            } else {
                acc -= v;
            }
        }
        acc
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            w.write_all(CACHE_MAGIC)?;
            w.write_all(&CACHE_FORMAT_VERSION.to_le_bytes())?;
            w.write_all(&[self.n_qubits as u8, 0])?;
            w.write_all(&(self.len() as u32).to_le_bytes())?;
            let bytes_per_column = self.n_rows() / 4;
            let mut buf = vec![0u8; bytes_per_column.max(1)];
            for c in 0..self.len() {
                buf.iter_mut().for_each(|b| *b = 0);
                for (p, s) in self.column_entries(c) {
                    let code: u8 = if s > 0 { 0b01 } else { 0b11 };
                    buf[p / 4] |= code << (2 * (p % 4));
                }
                w.write_all(&buf)?;
            }
            w.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 16 || &bytes[0..8] != CACHE_MAGIC {
            return Err(Error::Cache(format!("{} is not a dictionary cache", path.display())));
        }
        let version = u16::from_le_bytes([bytes[8], bytes[9]]);
        if version != CACHE_FORMAT_VERSION {
            return Err(Error::Cache(format!("unsupported cache format version {version}")));
        }
        let n = bytes[10] as usize;
        if n == 0 || n > MAX_DICTIONARY_QUBITS {
            return Err(Error::UnsupportedDictionarySize(n));
        }
        let count = u32::from_le_bytes([bytes[12], bytes[13], bytes[14], bytes[15]]) as usize;
        if count != stabilizer_state_count(n) {
            return Err(Error::Cache(format!(
                "cache holds {count} columns, expected {}",
                stabilizer_state_count(n)
            )));
        }
        let rows = 1usize << (2 * n);
        let bytes_per_column = (rows / 4).max(1);
        let body = &bytes[16..];
        if body.len() != count * bytes_per_column {
            return Err(Error::Cache("truncated dictionary cache".into()));
        }
        let nnz = 1usize << n;
        let mut support = Vec::with_capacity(count * nnz);
        let mut signs = Vec::with_capacity(count * nnz);
        for col in body.chunks_exact(bytes_per_column) {
            let mut found = 0;
            for p in 0..rows {
                match (col[p / 4] >> (2 * (p % 4))) & 0b11 {
                    0b00 => {}
                    0b01 => {
                        support.push(p as u16);
                        signs.push(1);
                        found += 1;
                    }
                    0b11 => {
                        support.push(p as u16);
                        signs.push(-1);
                        found += 1;
                    }
                    _ => return Err(Error::Cache("invalid entry code".into())),
                }
            }
            if found != nnz {
                return Err(Error::Cache(format!("column with {found} nonzeros, expected {nnz}")));
            }
        }
        Self::from_sparse(n, support, signs)
    }

    /// Reads `dir/stabilizer_n{n}.bin` if present and valid, otherwise
    /// enumerates and writes it. Returns the cache path alongside.
    pub fn load_or_build(n: usize, dir: &Path) -> Result<(Self, PathBuf)> {
        let path = cache_path(dir, n);
        if path.exists() {
            if let Ok(dict) = Self::read_cache(&path) {
                if dict.n_qubits == n {
                    return Ok((dict, path));
                }
            }
        }
        let dict = enumerate_stabilizer_states(n)?;
        dict.write_cache(&path)?;
        Ok((dict, path))
    }
}

pub fn cache_path(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("stabilizer_n{n}.bin"))
}

/// Canonical reduced row echelon form of a set of `2n`-bit rows.
fn rref(rows: &[u32], width: usize) -> Vec<u32> {
    let mut rows = rows.to_vec();
    let mut rank = 0;
    for bit in (0..width).rev() {
        let mask = 1u32 << bit;
        if let Some(pos) = (rank..rows.len()).find(|&i| rows[i] & mask != 0) {
            rows.swap(rank, pos);
            let pivot = rows[rank];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && *row & mask != 0 {
                    *row ^= pivot;
                }
            }
            rank += 1;
        }
    }
    rows.truncate(rank);
    rows
}

/// Symplectic action of the Clifford generators on a row `x << n | z`.
#[derive(Clone, Copy)]
enum Move {
    H(usize),
    S(usize),
    Cnot(usize, usize),
}

fn apply_move(row: u32, mv: Move, n: usize) -> u32 {
    let bit = |q: usize| n - 1 - q;
    let get = |r: u32, pos: usize| (r >> pos) & 1;
    let (mut x, mut z) = (row >> n, row & ((1 << n) - 1));
    match mv {
        Move::H(q) => {
            let b = bit(q);
            let (xb, zb) = (get(x, b), get(z, b));
            x = (x & !(1 << b)) | zb << b;
            z = (z & !(1 << b)) | xb << b;
        }
        Move::S(q) => {
            let b = bit(q);
            z ^= get(x, b) << b;
        }
        Move::Cnot(c, t) => {
            let (bc, bt) = (bit(c), bit(t));
            x ^= get(x, bc) << bt;
            z ^= get(z, bt) << bc;
        }
    }
    x << n | z
}

/// All Lagrangian subspaces of `F_2^{2n}`, each as its canonical RREF basis,
/// sorted.
pub fn lagrangian_subspaces(n: usize) -> Vec<Vec<u32>> {
    let width = 2 * n;
    let mut moves = Vec::new();
    for q in 0..n {
        moves.push(Move::H(q));
        moves.push(Move::S(q));
    }
    for c in 0..n {
        for t in 0..n {
            if c != t {
                moves.push(Move::Cnot(c, t));
            }
        }
    }
    let start = rref(&(0..n).map(|q| 1u32 << (n - 1 - q)).collect::<Vec<_>>(), width);
    let mut seen: HashSet<Vec<u32>> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(basis) = queue.pop_front() {
        for &mv in &moves {
            let image: Vec<u32> = basis.iter().map(|&r| apply_move(r, mv, n)).collect();
            let canon = rref(&image, width);
            if seen.insert(canon.clone()) {
                queue.push_back(canon);
            }
        }
    }
    let mut all: Vec<Vec<u32>> = seen.into_iter().collect();
    all.sort();
    all
}

/// Enumerates every pure stabilizer state for `1 <= n <= 4`.
pub fn enumerate_stabilizer_states(n: usize) -> Result<StabilizerDictionary> {
    if n == 0 || n > MAX_DICTIONARY_QUBITS {
        return Err(Error::UnsupportedDictionarySize(n));
    }
    let subspaces = lagrangian_subspaces(n);
    let nnz = 1usize << n;
    let total = subspaces.len() * nnz;
    let mut support = Vec::with_capacity(total * nnz);
    let mut signs = Vec::with_capacity(total * nnz);
    let mut entries: Vec<(u16, i8, usize)> = Vec::with_capacity(nnz);
    for basis in &subspaces {
        let gens: Vec<PauliString> = basis
            .iter()
            .map(|&r| PauliString::from_bits(n, r >> n, r & ((1 << n) - 1), 0))
            .collect();
        // Unsigned group elements with the sign picked up from the products.
        entries.clear();
        for subset in 0..nnz {
            let elem = (0..n)
                .filter(|i| subset >> i & 1 == 1)
                .fold(PauliString::identity(n), |acc, i| acc * gens[i]);
            let sign = elem.sign().expect("commuting Hermitian products are Hermitian");
            entries.push((elem.index() as u16, sign, subset));
        }
        entries.sort_by_key(|e| e.0);
        for sign_mask in 0..nnz {
            for &(p, s, subset) in &entries {
                let flips = (subset & sign_mask).count_ones();
                support.push(p);
                signs.push(if flips % 2 == 0 { s } else { -s });
            }
        }
    }
    let dict = StabilizerDictionary::from_sparse(n, support, signs)?;
    debug_assert_eq!(dict.len(), stabilizer_state_count(n));
    Ok(dict)
}
