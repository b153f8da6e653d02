//! Synthetic benchmark instances with full ground truth.
//!
//! Three families are provided, each built as `M = max(0, W[H₀, H₁] + N)`
//! followed by column ℓ1 normalization:
//!
//! * [`gen_dirichlet`]: one-hot block plus Dirichlet mixtures, Gaussian noise;
//! * [`gen_midpoints`]: one-hot block plus all pairwise midpoints, with
//!   adversarial noise pushing the midpoints away from the data centroid;
//! * [`gen_outliers`]: noiseless one-hot block plus uniform outlier columns.
//!
//! Draw order within a stream is fixed: `W` first, then the mixing block,
//! then noise or outliers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CssnmfError, Result};
use crate::io::{read_matrix, write_matrix, write_text};
use crate::matrix::DenseMatrix;
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Dirichlet,
    Midpoints,
    Outliers,
    Example,
    Custom,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Dirichlet => "dirichlet",
            Scenario::Midpoints => "midpoints",
            Scenario::Outliers => "outliers",
            Scenario::Example => "example",
            Scenario::Custom => "custom",
        }
    }
}

/// A generated data matrix together with everything used to build it.
#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    /// Column-normalized data matrix.
    pub m: DenseMatrix,
    /// Generating vertices (before column normalization of `M`).
    pub w_true: DenseMatrix,
    /// Generating coefficients (before column normalization of `M`); zero
    /// columns for outliers.
    pub h_true: DenseMatrix,
    /// Indices of the one-hot (labeled) columns, `J₀`.
    pub j0: Vec<usize>,
    /// True class of each column of `j0`, aligned with it.
    pub labels: Vec<usize>,
    /// Pure index sets `S_t`.
    pub pure_sets: Vec<Vec<usize>>,
    /// Indices of appended outlier columns.
    pub outliers: Vec<usize>,
    /// ℓ1 norm each column had before normalization.
    pub col_scale: Vec<f64>,
    pub epsilon: f64,
    pub scenario: Scenario,
    pub seed: u64,
    pub stream: u64,
}

impl SyntheticInstance {
    pub fn rank(&self) -> usize {
        self.pure_sets.len()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.pure_sets.iter().map(Vec::len).collect()
    }

    /// Number of columns a perfect selection would keep: every pure column
    /// plus one per outlier.
    pub fn ideal_selection_size(&self) -> usize {
        self.pure_sets.iter().map(Vec::len).sum::<usize>() + self.outliers.len()
    }

    /// Coefficients of the normalized `M` in terms of the column-normalized
    /// vertices, ignoring noise: `H'(t,j) = H(t,j)‖W(:,t)‖₁ / scale_j`.
    pub fn normalized_h(&self) -> DenseMatrix {
        let wn = self.w_true.col_l1_norms();
        DenseMatrix::from_fn(self.h_true.rows(), self.h_true.cols(), |t, j| {
            let s = self.col_scale[j];
            if s > 0.0 {
                self.h_true[(t, j)] * wn[t] / s
            } else {
                0.0
            }
        })
    }

    /// Writes `M.csv`, `W_true.csv`, `H_true.csv`, `labels.csv` and
    /// `meta.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| CssnmfError::io(dir, e))?;
        write_matrix(dir.join("M.csv"), &self.m)?;
        write_matrix(dir.join("W_true.csv"), &self.w_true)?;
        write_matrix(dir.join("H_true.csv"), &self.h_true)?;
        let labels: String = self
            .j0
            .iter()
            .zip(&self.labels)
            .map(|(j, l)| format!("{j},{l}\n"))
            .collect();
        write_text(dir.join("labels.csv"), &labels)?;
        let meta = InstanceMeta {
            scenario: self.scenario,
            seed: self.seed,
            stream: self.stream,
            eps: self.epsilon,
            p_t: self.class_sizes(),
            s_t: self.pure_sets.clone(),
            outliers: self.outliers.clone(),
            col_scale: self.col_scale.clone(),
        };
        write_text(dir.join("meta.json"), &serde_json::to_string_pretty(&meta)?)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let m = read_matrix(dir.join("M.csv"))?;
        let w_true = read_matrix(dir.join("W_true.csv"))?;
        let h_true = read_matrix(dir.join("H_true.csv"))?;
        let meta_path = dir.join("meta.json");
        let meta_text =
            fs::read_to_string(&meta_path).map_err(|e| CssnmfError::io(&meta_path, e))?;
        let meta: InstanceMeta = serde_json::from_str(&meta_text)?;
        let labels_path = dir.join("labels.csv");
        let text =
            fs::read_to_string(&labels_path).map_err(|e| CssnmfError::io(&labels_path, e))?;
        let mut j0 = Vec::new();
        let mut labels = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (j, l) = line
                .split_once(',')
                .ok_or_else(|| CssnmfError::Parse(format!("bad label line {line:?}")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CssnmfError::Parse(format!("bad label line {line:?}")))
            };
            j0.push(parse(j)?);
            labels.push(parse(l)?);
        }
        Ok(SyntheticInstance {
            m,
            w_true,
            h_true,
            j0,
            labels,
            pure_sets: meta.s_t,
            outliers: meta.outliers,
            col_scale: meta.col_scale,
            epsilon: meta.eps,
            scenario: meta.scenario,
            seed: meta.seed,
            stream: meta.stream,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceMeta {
    scenario: Scenario,
    seed: u64,
    #[serde(default)]
    stream: u64,
    eps: f64,
    p_t: Vec<usize>,
    s_t: Vec<Vec<usize>>,
    #[serde(default)]
    outliers: Vec<usize>,
    col_scale: Vec<f64>,
}

/// Random mixtures with Dirichlet coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirichletParams {
    pub m: usize,
    pub r: usize,
    /// Pure columns per class.
    pub p: usize,
    /// Number of mixed columns.
    pub mixed: usize,
    pub alpha: f64,
    pub eps: f64,
}

impl Default for DirichletParams {
    fn default() -> Self {
        DirichletParams {
            m: 30,
            r: 5,
            p: 10,
            mixed: 50,
            alpha: 1.0,
            eps: 0.0,
        }
    }
}

/// Pure replicates plus every pairwise midpoint, adversarial noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MidpointParams {
    pub m: usize,
    pub r: usize,
    pub p: usize,
    pub eps: f64,
}

impl Default for MidpointParams {
    fn default() -> Self {
        MidpointParams {
            m: 30,
            r: 10,
            p: 5,
            eps: 0.0,
        }
    }
}

/// Noiseless pure replicates plus uniform outlier columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutlierParams {
    pub m: usize,
    pub r: usize,
    pub p: usize,
    pub ell: usize,
}

impl Default for OutlierParams {
    fn default() -> Self {
        OutlierParams {
            m: 30,
            r: 5,
            p: 10,
            ell: 1,
        }
    }
}

pub fn gen_dirichlet(seed: u64, params: &DirichletParams) -> Result<SyntheticInstance> {
    gen_dirichlet_from(&mut RngStream::new(seed), params)
}

pub fn gen_dirichlet_from(rng: &mut RngStream, p: &DirichletParams) -> Result<SyntheticInstance> {
    if p.r == 0 || p.p == 0 || p.m == 0 || !(p.alpha > 0.0) || !(p.eps >= 0.0) {
        return Err(CssnmfError::InvalidArgument(
            "invalid Dirichlet parameters".into(),
        ));
    }
    let w = uniform_matrix(rng, p.m, p.r);
    let h0 = one_hot_block(p.r, p.p);
    let h1 = DenseMatrix::from_columns(
        &(0..p.mixed)
            .map(|_| rng.dirichlet(p.alpha, p.r))
            .collect::<Vec<_>>(),
    )?;
    let h = if p.mixed > 0 { h0.hstack(&h1)? } else { h0 };
    let m0 = w.matmul(&h);
    let noise = gaussian_noise(&m0, p.eps, rng);
    let mut inst = assemble(
        w,
        h,
        m0.add(&noise),
        p.r,
        p.p,
        p.eps,
        Scenario::Dirichlet,
        rng,
    );
    inst.outliers.clear();
    Ok(inst)
}

pub fn gen_midpoints(seed: u64, params: &MidpointParams) -> Result<SyntheticInstance> {
    gen_midpoints_from(&mut RngStream::new(seed), params)
}

pub fn gen_midpoints_from(rng: &mut RngStream, p: &MidpointParams) -> Result<SyntheticInstance> {
    if p.r < 2 || p.p == 0 || p.m == 0 || !(p.eps >= 0.0) {
        return Err(CssnmfError::InvalidArgument(
            "invalid midpoint parameters".into(),
        ));
    }
    let w = uniform_matrix(rng, p.m, p.r);
    let h0 = one_hot_block(p.r, p.p);
    let mut mids = Vec::new();
    for a in 0..p.r {
        for b in (a + 1)..p.r {
            let mut col = vec![0.0; p.r];
            col[a] = 0.5;
            col[b] = 0.5;
            mids.push(col);
        }
    }
    let h = h0.hstack(&DenseMatrix::from_columns(&mids)?)?;
    let m0 = w.matmul(&h);
    let noise = midpoint_noise(&m0, p.r * p.p, p.eps);
    // N itself is clipped to the nonnegative orthant before it is added.
    let noise = noise.map(|v| v.max(0.0));
    Ok(assemble(
        w,
        h,
        m0.add(&noise),
        p.r,
        p.p,
        p.eps,
        Scenario::Midpoints,
        rng,
    ))
}

pub fn gen_outliers(seed: u64, params: &OutlierParams) -> Result<SyntheticInstance> {
    gen_outliers_from(&mut RngStream::new(seed), params)
}

pub fn gen_outliers_from(rng: &mut RngStream, p: &OutlierParams) -> Result<SyntheticInstance> {
    if p.r == 0 || p.p == 0 || p.m == 0 || p.ell == 0 {
        return Err(CssnmfError::InvalidArgument(
            "outlier instances need at least one outlier".into(),
        ));
    }
    let w = uniform_matrix(rng, p.m, p.r);
    let h0 = one_hot_block(p.r, p.p);
    let m0 = w.matmul(&h0);
    let b = uniform_matrix(rng, p.m, p.ell);
    let n0 = p.r * p.p;
    let h = h0.hstack(&DenseMatrix::zeros(p.r, p.ell))?;
    let mut inst = assemble(w, h, m0.hstack(&b)?, p.r, p.p, 0.0, Scenario::Outliers, rng);
    inst.outliers = (n0..n0 + p.ell).collect();
    Ok(inst)
}

/// The three-vertex illustration with class sizes (2, 3, 1) and three
/// midpoints: `M = W H` with
///
/// ```text
/// H = [1 1 0 0 0 0 0   ½ ½]
///     [0 0 1 1 1 0 ½   0 ½]
///     [0 0 0 0 0 1 ½   ½ 0]
/// ```
///
/// Columns of `W` are drawn uniformly in `[0,1]^m` and ℓ1-normalized, so
/// every column of `M` has unit ℓ1 norm.
pub fn gen_example(seed: u64, m: usize) -> Result<SyntheticInstance> {
    let mut rng = RngStream::new(seed);
    let raw = uniform_matrix(&mut rng, m, 3);
    let norms = raw.col_l1_norms();
    let w = DenseMatrix::from_fn(m, 3, |i, j| raw[(i, j)] / norms[j]);
    let h = example_h();
    let data = w.matmul(&h);
    let mut inst = assemble(w, h, data, 3, 1, 0.0, Scenario::Example, &mut rng);
    inst.pure_sets = vec![vec![0, 1], vec![2, 3, 4], vec![5]];
    inst.j0 = (0..6).collect();
    inst.labels = vec![0, 0, 1, 1, 1, 2];
    inst.seed = seed;
    Ok(inst)
}

fn example_h() -> DenseMatrix {
    DenseMatrix::from_rows(&[
        vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5],
        vec![0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.5, 0.0, 0.5],
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.0],
    ])
    .expect("static shape")
}

/// Noiseless optimum of the smooth-separable model: `X(i,:) = H(t,:)/p_t`
/// for `i ∈ S_t` and zero rows elsewhere.
pub fn ideal_self_dictionary(h: &DenseMatrix, pure_sets: &[Vec<usize>]) -> DenseMatrix {
    let n = h.cols();
    let mut x = DenseMatrix::zeros(n, n);
    for (t, set) in pure_sets.iter().enumerate() {
        let p = set.len() as f64;
        for &i in set {
            for j in 0..n {
                x[(i, j)] = h[(t, j)] / p;
            }
        }
    }
    x
}

/// Builds an instance from explicit factors: `M = normalize(max(0, W H + N))`.
/// Pure sets are the columns where `H(:,j)` is a canonical vector.
pub fn from_factors(
    w: DenseMatrix,
    h: DenseMatrix,
    noise: Option<&DenseMatrix>,
) -> Result<SyntheticInstance> {
    if w.cols() != h.rows() {
        return Err(CssnmfError::Dimension("W and H do not conform".into()));
    }
    let r = w.cols();
    let m0 = w.matmul(&h);
    let data = match noise {
        Some(n) if n.shape() == m0.shape() => m0.add(n),
        Some(_) => return Err(CssnmfError::Dimension("noise shape".into())),
        None => m0,
    };
    let mut rng = RngStream::new(0);
    let mut inst = assemble(w, h, data, r, 1, 0.0, Scenario::Custom, &mut rng);
    let mut pure_sets = vec![Vec::new(); r];
    let mut j0 = Vec::new();
    let mut labels = Vec::new();
    for j in 0..inst.h_true.cols() {
        let col = inst.h_true.col(j);
        let ones: Vec<usize> = (0..r).filter(|&t| col[t] == 1.0).collect();
        if ones.len() == 1 && col.iter().filter(|&&v| v != 0.0).count() == 1 {
            pure_sets[ones[0]].push(j);
            j0.push(j);
            labels.push(ones[0]);
        }
    }
    inst.pure_sets = pure_sets;
    inst.j0 = j0;
    inst.labels = labels;
    Ok(inst)
}

/// i.i.d. Gaussian noise scaled to `‖N‖_F = eps ‖M₀‖_F`.
pub fn gaussian_noise(m0: &DenseMatrix, eps: f64, rng: &mut RngStream) -> DenseMatrix {
    let raw = DenseMatrix::from_fn(m0.rows(), m0.cols(), |_, _| rng.normal());
    scale_to(raw, eps * m0.frobenius_norm())
}

/// Adversarial noise on the columns after `n0`: each mixed column is pushed
/// along `M₀(:,j) − w̄`, `w̄` the mean of the first `n0` columns. The
/// result is scaled to `‖N‖_F = eps ‖M₀‖_F` and not yet clipped.
pub fn midpoint_noise(m0: &DenseMatrix, n0: usize, eps: f64) -> DenseMatrix {
    let rows = m0.rows();
    let mut w_bar = vec![0.0; rows];
    for j in 0..n0 {
        for (acc, v) in w_bar.iter_mut().zip(m0.col(j)) {
            *acc += v;
        }
    }
    for v in &mut w_bar {
        *v /= n0 as f64;
    }
    let raw = DenseMatrix::from_fn(rows, m0.cols(), |i, j| {
        if j < n0 {
            0.0
        } else {
            m0[(i, j)] - w_bar[i]
        }
    });
    scale_to(raw, eps * m0.frobenius_norm())
}

fn scale_to(raw: DenseMatrix, target: f64) -> DenseMatrix {
    let norm = raw.frobenius_norm();
    if target == 0.0 || norm == 0.0 {
        DenseMatrix::zeros(raw.rows(), raw.cols())
    } else {
        raw.scale(target / norm)
    }
}

/// `logspace(lo, hi, k)`: `k` points log-spaced between `10^lo` and `10^hi`.
pub fn logspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![10f64.powf(hi)],
        _ => (0..k)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (k - 1) as f64))
            .collect(),
    }
}

/// Noise levels of the Dirichlet sweep: 7 levels in `[1e-5, 10^-0.05]`.
pub fn dirichlet_noise_grid() -> Vec<f64> {
    logspace(-5.0, -0.05, 7)
}

/// Noise levels of the midpoint sweep: 4 levels in `[1e-3, 10^-0.05]`.
pub fn midpoint_noise_grid() -> Vec<f64> {
    logspace(-3.0, -0.05, 4)
}

fn uniform_matrix(rng: &mut RngStream, rows: usize, cols: usize) -> DenseMatrix {
    // Column-major draw order.
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.uniform()).collect();
    DenseMatrix::from_col_major(rows, cols, data).expect("finite uniform draws")
}

/// `r × (r·p)` one-hot matrix, class `t` on columns `t·p .. (t+1)·p`.
fn one_hot_block(r: usize, p: usize) -> DenseMatrix {
    DenseMatrix::from_fn(r, r * p, |t, j| if j / p == t { 1.0 } else { 0.0 })
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    w: DenseMatrix,
    h: DenseMatrix,
    noisy: DenseMatrix,
    r: usize,
    p: usize,
    eps: f64,
    scenario: Scenario,
    rng: &RngStream,
) -> SyntheticInstance {
    let mut m = noisy.map(|v| v.max(0.0));
    let col_scale = m.col_l1_norms();
    for (j, &s) in col_scale.iter().enumerate() {
        if s > 0.0 {
            for v in m.col_mut(j) {
                *v /= s;
            }
        }
    }
    let n0 = r * p;
    let pure_sets: Vec<Vec<usize>> = (0..r).map(|t| (t * p..(t + 1) * p).collect()).collect();
    SyntheticInstance {
        m,
        w_true: w,
        h_true: h,
        j0: (0..n0).collect(),
        labels: (0..n0).map(|j| j / p).collect(),
        pure_sets,
        outliers: Vec::new(),
        col_scale,
        epsilon: eps,
        scenario,
        seed: rng.seed(),
        stream: 0,
    }
}
