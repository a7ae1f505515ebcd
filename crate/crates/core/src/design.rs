//! Data containers and the stacked regression products.
//!
//! At each time point every variable `X_i` is regressed on the others with
//! coefficients `β_ij = ρ_ij √(σ^jj/σ^ii)`. Stacking the `p` responses gives
//! a design with one column per pair `(i, j)`: `√(σ^jj/σ^ii) X_j` in response
//! block `i` and `√(σ^ii/σ^jj) X_i` in response block `j`. The solvers only
//! ever need `X̃ᵀX̃`, `X̃ᵀY` and `‖Y‖²`, which are assembled here directly from
//! the `p × p` Gram matrix.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Real, Result};

/// Number of unordered pairs among `p` variables.
pub const fn num_pairs(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// Flat lexicographic index of the 1-based pair `(i, j)`, `i < j ≤ p`.
pub fn pair_index(i: usize, j: usize, p: usize) -> Result<usize> {
    if i == 0 || i >= j || j > p {
        return Err(Error::InvalidPair { i, j, p });
    }
    Ok(pair_offset(i - 1, j - 1, p))
}

/// 0-based variant of [`pair_index`] without validation.
#[inline]
pub(crate) fn pair_offset(i: usize, j: usize, p: usize) -> usize {
    i * (2 * p - i - 1) / 2 + (j - i - 1)
}

/// All 0-based pairs in lexicographic order.
pub fn pairs(p: usize) -> Vec<(usize, usize)> {
    (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j))).collect()
}

/// Inverse of [`pair_index`]: 1-based `(i, j)` for a flat index.
pub fn pair_from_index(index: usize, p: usize) -> Option<(usize, usize)> {
    pairs(p).get(index).map(|&(i, j)| (i + 1, j + 1))
}

/// `T` centered `n × p` panels on an equidistant time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalDataset<T: Real> {
    data: Vec<DMatrix<T>>,
    time_grid: Vec<T>,
}

/// `k/(T-1)` for `k = 0..T` (just `[0]` when `T = 1`).
pub fn equidistant_grid<T: Real>(times: usize) -> Vec<T> {
    if times <= 1 {
        return vec![T::zero(); times];
    }
    (0..times).map(|k| T::of_usize(k) / T::of_usize(times - 1)).collect()
}

impl<T: Real> TemporalDataset<T> {
    /// Centers each column of each panel; see [`center_per_timepoint`].
    pub fn new(raw: Vec<DMatrix<T>>) -> Result<Self> {
        center_per_timepoint(raw)
    }

    pub fn with_time_grid(mut self, grid: Vec<T>) -> Result<Self> {
        if grid.len() != self.data.len() {
            return Err(Error::ShapeMismatch(format!("time grid has {} points for {} panels", grid.len(), self.data.len())));
        }
        self.time_grid = grid;
        Ok(self)
    }

    pub fn num_times(&self) -> usize {
        self.data.len()
    }

    pub fn n(&self) -> usize {
        self.data[0].nrows()
    }

    pub fn p(&self) -> usize {
        self.data[0].ncols()
    }

    pub fn num_pairs(&self) -> usize {
        num_pairs(self.p())
    }

    pub fn panel(&self, k: usize) -> &DMatrix<T> {
        &self.data[k]
    }

    pub fn panels(&self) -> &[DMatrix<T>] {
        &self.data
    }

    pub fn time_grid(&self) -> &[T] {
        &self.time_grid
    }

    /// Applies a variable permutation: new column `c` is old column `perm[c]`.
    pub fn permute_variables(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.p() {
            return Err(Error::ShapeMismatch("permutation length differs from p".into()));
        }
        let data = self.data.iter().map(|x| DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| x[(r, perm[c])])).collect();
        Ok(Self { data, time_grid: self.time_grid.clone() })
    }
}

/// Subtracts per-time-point column means. No scaling is applied.
pub fn center_per_timepoint<T: Real>(raw: Vec<DMatrix<T>>) -> Result<TemporalDataset<T>> {
    let Some(first) = raw.first() else {
        return Err(Error::ShapeMismatch("no time points".into()));
    };
    let (n, p) = first.shape();
    if n < 2 {
        return Err(Error::ShapeMismatch(format!("need at least 2 subjects, got {n}")));
    }
    if p < 2 {
        return Err(Error::ShapeMismatch(format!("need at least 2 variables, got {p}")));
    }
    if let Some((k, x)) = raw.iter().enumerate().find(|(_, x)| x.shape() != (n, p)) {
        return Err(Error::ShapeMismatch(format!("panel {k} is {}x{}, expected {n}x{p}", x.nrows(), x.ncols())));
    }
    let mut data = Vec::with_capacity(raw.len());
    for (k, mut x) in raw.into_iter().enumerate() {
        for c in 0..p {
            let mut col = x.column_mut(c);
            if col.iter().all(|v| *v == col[0]) {
                return Err(Error::DegenerateColumn { time: k, variable: c });
            }
            let mean = col.sum() / T::of_usize(n);
            col.add_scalar_mut(-mean);
        }
        data.push(x);
    }
    let time_grid = equidistant_grid(data.len());
    Ok(TemporalDataset { data, time_grid })
}

/// `S(t_k) = XᵀX/(n-1)` on the centered panel.
pub fn sample_covariance<T: Real>(dataset: &TemporalDataset<T>, k: usize) -> DMatrix<T> {
    let x = dataset.panel(k);
    x.tr_mul(x) / T::of_usize(dataset.n() - 1)
}

/// Precision diagonals `σ^ii(t_k)`, stored `T × p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionDiagonals<T: Real> {
    values: DMatrix<T>,
}

impl<T: Real> PrecisionDiagonals<T> {
    pub fn new(values: DMatrix<T>) -> Result<Self> {
        if values.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidArgument("precision diagonals must be positive and finite".into()));
        }
        Ok(Self { values })
    }

    pub fn num_times(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> T {
        self.values[(k, i)]
    }

    pub fn at_time(&self, k: usize) -> DVector<T> {
        self.values.row(k).transpose()
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn norm(&self) -> T {
        self.values.norm()
    }

    pub fn distance(&self, other: &Self) -> T {
        (&self.values - &other.values).norm()
    }
}

/// Partial correlations `ρ_ij(t_k)`, stored `T × p(p-1)/2` in lexicographic
/// pair order. The flat vector form is time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCorrField<T: Real> {
    p: usize,
    values: DMatrix<T>,
}

impl<T: Real> PartialCorrField<T> {
    pub fn zeros(times: usize, p: usize) -> Self {
        Self { p, values: DMatrix::zeros(times, num_pairs(p)) }
    }

    pub fn from_matrix(p: usize, values: DMatrix<T>) -> Result<Self> {
        if values.ncols() != num_pairs(p) {
            return Err(Error::DimensionMismatch(format!("{} columns for p = {p} (expected {})", values.ncols(), num_pairs(p))));
        }
        Ok(Self { p, values })
    }

    pub fn from_flat(times: usize, p: usize, flat: &DVector<T>) -> Result<Self> {
        let b = num_pairs(p);
        if flat.len() != times * b {
            return Err(Error::DimensionMismatch(format!("flat length {} != {}", flat.len(), times * b)));
        }
        Ok(Self { p, values: DMatrix::from_row_slice(times, b, flat.as_slice()) })
    }

    pub fn to_flat(&self) -> DVector<T> {
        let (t, b) = self.values.shape();
        DVector::from_fn(t * b, |idx, _| self.values[(idx / b, idx % b)])
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn num_times(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_pairs(&self) -> usize {
        self.values.ncols()
    }

    #[inline]
    pub fn get(&self, k: usize, pair: usize) -> T {
        self.values[(k, pair)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, pair: usize, v: T) {
        self.values[(k, pair)] = v;
    }

    /// `ρ_ij(t_k)` for 0-based `i ≠ j`.
    pub fn rho(&self, k: usize, i: usize, j: usize) -> T {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.values[(k, pair_offset(a, b, self.p))]
    }

    /// Pair trajectory over time.
    pub fn trajectory(&self, pair: usize) -> Vec<T> {
        self.values.column(pair).iter().copied().collect()
    }

    pub fn at_time(&self, k: usize) -> DVector<T> {
        self.values.row(k).transpose()
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn count_nonzero(&self, tol: T) -> usize {
        self.values.iter().filter(|v| v.abs() > tol).count()
    }

    pub fn distance(&self, other: &Self) -> T {
        (&self.values - &other.values).norm()
    }

    pub fn norm(&self) -> T {
        self.values.norm()
    }
}

/// Per-time products of the stacked SPACE regression.
#[derive(Debug, Clone)]
pub struct StackedDesign<T: Real> {
    n: usize,
    p: usize,
    xtx: Vec<DMatrix<T>>,
    xty: Vec<DVector<T>>,
    yty: Vec<T>,
}

impl<T: Real> StackedDesign<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn num_times(&self) -> usize {
        self.xtx.len()
    }

    pub fn num_pairs(&self) -> usize {
        num_pairs(self.p)
    }

    pub fn xtx(&self, k: usize) -> &DMatrix<T> {
        &self.xtx[k]
    }

    pub fn xty(&self, k: usize) -> &DVector<T> {
        &self.xty[k]
    }

    pub fn yty(&self, k: usize) -> T {
        self.yty[k]
    }

    /// `(1/n) Σ_k ‖Y_k − X̃_k θ_k‖²` for a time-major flat `θ`.
    pub fn loss(&self, theta: &DVector<T>) -> T {
        let b = self.num_pairs();
        let mut total = T::zero();
        for k in 0..self.num_times() {
            let th = theta.rows(k * b, b);
            let quad = th.dot(&(&self.xtx[k] * th));
            total += self.yty[k] - T::of(2.0) * th.dot(&self.xty[k]) + quad;
        }
        total / T::of_usize(self.n)
    }

    /// Gradient of [`Self::loss`]: `(2/n)(X̃ᵀX̃θ − X̃ᵀY)`.
    pub fn loss_gradient(&self, theta: &DVector<T>) -> DVector<T> {
        let b = self.num_pairs();
        let scale = T::of(2.0) / T::of_usize(self.n);
        let mut g = DVector::zeros(theta.len());
        for k in 0..self.num_times() {
            let seg = (&self.xtx[k] * theta.rows(k * b, b) - &self.xty[k]) * scale;
            g.rows_mut(k * b, b).copy_from(&seg);
        }
        g
    }

    /// `‖(2/n) X̃ᵀY‖_∞`, the smallest `λ1` giving the all-zero solution.
    pub fn lambda_max(&self) -> T {
        let scale = T::of(2.0) / T::of_usize(self.n);
        self.xty.iter().flat_map(|v| v.iter()).fold(T::zero(), |m, v| m.max(v.abs() * scale))
    }
}

/// Assembles `X̃ᵀX̃`, `X̃ᵀY` and `‖Y‖²` per time point for the given `σ`.
pub fn build_design<T: Real>(dataset: &TemporalDataset<T>, sigma: &PrecisionDiagonals<T>) -> Result<StackedDesign<T>> {
    let (times, p) = (dataset.num_times(), dataset.p());
    if sigma.num_times() != times || sigma.p() != p {
        return Err(Error::DimensionMismatch(format!("sigma is {}x{}, dataset has T = {times}, p = {p}", sigma.num_times(), sigma.p())));
    }
    let pair_list = pairs(p);
    let b = pair_list.len();
    let mut xtx = Vec::with_capacity(times);
    let mut xty = Vec::with_capacity(times);
    let mut yty = Vec::with_capacity(times);
    for k in 0..times {
        let x = dataset.panel(k);
        let gram = x.tr_mul(x);
        // w[(r, o)] = √(σ^oo/σ^rr): weight of X_o inside response block r
        let w = DMatrix::from_fn(p, p, |r, o| (sigma.get(k, o) / sigma.get(k, r)).sqrt());

        let xty_k = DVector::from_fn(b, |idx, _| {
            let (i, j) = pair_list[idx];
            gram[(i, j)] * (w[(i, j)] + w[(j, i)])
        });

        let mut xtx_k = DMatrix::zeros(b, b);
        for (c1, &(i, j)) in pair_list.iter().enumerate() {
            for (c2, &(l, m)) in pair_list.iter().enumerate().skip(c1) {
                let mut acc = T::zero();
                for r in [i, j] {
                    if r != l && r != m {
                        continue;
                    }
                    let o1 = if r == i { j } else { i };
                    let o2 = if r == l { m } else { l };
                    acc += w[(r, o1)] * w[(r, o2)] * gram[(o1, o2)];
                }
                xtx_k[(c1, c2)] = acc;
                xtx_k[(c2, c1)] = acc;
            }
        }
        xtx.push(xtx_k);
        xty.push(xty_k);
        yty.push(gram.trace());
    }
    Ok(StackedDesign { n: dataset.n(), p, xtx, xty, yty })
}

/// The block difference operator `D` with rows `θ(t_k) − θ(t_{k+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifferenceOperator {
    pub times: usize,
    pub pairs: usize,
}

impl DifferenceOperator {
    pub fn new(times: usize, pairs: usize) -> Self {
        Self { times, pairs }
    }

    pub fn apply<T: Real>(&self, theta: &DVector<T>) -> DVector<T> {
        let b = self.pairs;
        let rows = self.times.saturating_sub(1) * b;
        DVector::from_fn(rows, |r, _| theta[r] - theta[r + b])
    }

    pub fn apply_transpose<T: Real>(&self, v: &DVector<T>) -> DVector<T> {
        let b = self.pairs;
        let mut out = DVector::zeros(self.times * b);
        for r in 0..v.len() {
            out[r] += v[r];
            out[r + b] -= v[r];
        }
        out
    }

    /// `DᵀD θ` through the stencil `(I, 2I, …, 2I, I)` / `−I`.
    pub fn gram_apply<T: Real>(&self, theta: &DVector<T>) -> DVector<T> {
        let b = self.pairs;
        let t = self.times;
        DVector::from_fn(t * b, |idx, _| {
            let k = idx / b;
            let mut acc = T::zero();
            if k > 0 {
                acc += theta[idx] - theta[idx - b];
            }
            if k + 1 < t {
                acc += theta[idx] - theta[idx + b];
            }
            acc
        })
    }

    /// Number of neighbours of time `k`, i.e. the diagonal of `DᵀD`.
    pub fn degree(&self, k: usize) -> usize {
        usize::from(k > 0) + usize::from(k + 1 < self.times)
    }

    pub fn dense<T: Real>(&self) -> DMatrix<T> {
        let b = self.pairs;
        let rows = self.times.saturating_sub(1) * b;
        let mut d = DMatrix::zeros(rows, self.times * b);
        for r in 0..rows {
            d[(r, r)] = T::one();
            d[(r, r + b)] = -T::one();
        }
        d
    }
}
