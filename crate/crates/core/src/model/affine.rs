use nalgebra::DMatrix;

/// A matrix-valued affine function of a decision vector,
/// `M(z) = C + Σ_v z_v · A_v`, with the linear part stored sparsely by
/// variable index (`terms` sorted by index, no duplicates).
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMatrix {
    pub constant: DMatrix<f64>,
    pub terms: Vec<(usize, DMatrix<f64>)>,
}

impl AffineMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        AffineMatrix {
            constant: DMatrix::zeros(rows, cols),
            terms: Vec::new(),
        }
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        AffineMatrix {
            constant: m,
            terms: Vec::new(),
        }
    }

    /// The scalar variable `z_var` placed in a `1 × 1` matrix.
    pub fn variable(var: usize) -> Self {
        AffineMatrix {
            constant: DMatrix::zeros(1, 1),
            terms: vec![(var, DMatrix::from_element(1, 1, 1.0))],
        }
    }

    pub fn nrows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.constant.ncols()
    }

    /// Add `coef · unit` to the linear part of variable `var`.
    pub fn add_term(&mut self, var: usize, unit: &DMatrix<f64>, coef: f64) {
        match self.terms.binary_search_by_key(&var, |(v, _)| *v) {
            Ok(i) => self.terms[i].1 += unit * coef,
            Err(i) => self.terms.insert(i, (var, unit * coef)),
        }
    }

    pub fn eval(&self, z: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (v, a) in &self.terms {
            m += a * z[*v];
        }
        m
    }

    /// The linear part alone (`M(z) − C`).
    pub fn eval_linear(&self, z: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows(), self.ncols());
        for (v, a) in &self.terms {
            m += a * z[*v];
        }
        m
    }

    pub fn transpose(&self) -> Self {
        AffineMatrix {
            constant: self.constant.transpose(),
            terms: self.terms.iter().map(|(v, a)| (*v, a.transpose())).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        AffineMatrix {
            constant: &self.constant * s,
            terms: self.terms.iter().map(|(v, a)| (*v, a * s)).collect(),
        }
    }

    /// `L · M(z)`.
    pub fn left_mul(&self, l: &DMatrix<f64>) -> Self {
        AffineMatrix {
            constant: l * &self.constant,
            terms: self.terms.iter().map(|(v, a)| (*v, l * a)).collect(),
        }
    }

    /// `M(z) · R`.
    pub fn right_mul(&self, r: &DMatrix<f64>) -> Self {
        AffineMatrix {
            constant: &self.constant * r,
            terms: self.terms.iter().map(|(v, a)| (*v, a * r)).collect(),
        }
    }

    pub fn add(&self, other: &AffineMatrix) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let take_left = j >= other.terms.len()
                || (i < self.terms.len() && self.terms[i].0 < other.terms[j].0);
            let take_right = i >= self.terms.len()
                || (j < other.terms.len() && other.terms[j].0 < self.terms[i].0);
            if take_left {
                terms.push(self.terms[i].clone());
                i += 1;
            } else if take_right {
                terms.push(other.terms[j].clone());
                j += 1;
            } else {
                terms.push((self.terms[i].0, &self.terms[i].1 + &other.terms[j].1));
                i += 1;
                j += 1;
            }
        }
        AffineMatrix {
            constant: &self.constant + &other.constant,
            terms,
        }
    }

    pub fn sub(&self, other: &AffineMatrix) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn add_constant(&self, c: &DMatrix<f64>) -> Self {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    /// Symmetric part `(M + Mᵀ) / 2`.
    pub fn sym(&self) -> Self {
        self.add(&self.transpose()).scale(0.5)
    }
}

/// Assemble a block matrix from a row-major grid of affine blocks. All
/// blocks in a grid row must share a row count, all in a column a column count.
pub fn block_matrix(grid: &[Vec<AffineMatrix>]) -> AffineMatrix {
    let row_sizes: Vec<usize> = grid.iter().map(|r| r[0].nrows()).collect();
    let col_sizes: Vec<usize> = grid[0].iter().map(|b| b.ncols()).collect();
    let rows: usize = row_sizes.iter().sum();
    let cols: usize = col_sizes.iter().sum();
    let mut out = AffineMatrix::zeros(rows, cols);
    let mut r0 = 0;
    for (bi, row) in grid.iter().enumerate() {
        let mut c0 = 0;
        for (bj, blk) in row.iter().enumerate() {
            debug_assert_eq!(blk.nrows(), row_sizes[bi]);
            debug_assert_eq!(blk.ncols(), col_sizes[bj]);
            let mut padded = AffineMatrix::zeros(rows, cols);
            padded
                .constant
                .view_mut((r0, c0), (blk.nrows(), blk.ncols()))
                .copy_from(&blk.constant);
            for (v, a) in &blk.terms {
                let mut big = DMatrix::zeros(rows, cols);
                big.view_mut((r0, c0), (a.nrows(), a.ncols())).copy_from(a);
                padded.terms.push((*v, big));
            }
            out = out.add(&padded);
            c0 += col_sizes[bj];
        }
        r0 += row_sizes[bi];
    }
    out
}
