//! Dense GF(2) rows packed into `u64` words.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRow {
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_ones(len: usize, ones: &[usize]) -> Self {
        let mut row = Self::zeros(len);
        for &i in ones {
            row.flip(i);
        }
        row
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Parity of the bitwise AND with `other`, i.e. the GF(2) inner product.
    pub fn dot(&self, other: &BitRow) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }
}

/// Result of reducing a matrix to reduced row echelon form.
#[derive(Debug, Clone)]
pub struct Echelon {
    /// Reduced rows; row `t` has its pivot at `pivot_cols[t]`.
    pub rows: Vec<BitRow>,
    pub pivot_cols: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivot_cols.len()
    }
}

/// Gauss-Jordan elimination over GF(2), scanning pivot columns from the last
/// column towards the first. Rows without a pivot are dropped.
pub fn reduce(mut rows: Vec<BitRow>, n_cols: usize) -> Echelon {
    let m = rows.len();
    let mut pivot_cols = Vec::with_capacity(m);
    let mut r = 0;
    for col in (0..n_cols).rev() {
        if r == m {
            break;
        }
        let Some(found) = (r..m).find(|&i| rows[i].get(col)) else {
            continue;
        };
        rows.swap(r, found);
        let pivot = rows[r].clone();
        for (j, row) in rows.iter_mut().enumerate() {
            if j != r && row.get(col) {
                row.xor_assign(&pivot);
            }
        }
        pivot_cols.push(col);
        r += 1;
    }
    rows.truncate(r);
    Echelon { rows, pivot_cols }
}
