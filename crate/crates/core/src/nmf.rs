//! Nonnegative matrix factorization `V ≈ W·H` by alternating multiplicative
//! updates on the Frobenius objective, plus fixed-`H` inference for new
//! documents.
//!
//! Update rules, with `ε = 1e-12` guarding empty denominators:
//!
//! ```text
//! W ← W ∘ (V Hᵀ) ⊘ (W H Hᵀ + ε)
//! H ← H ∘ (Wᵀ V) ⊘ (Wᵀ W H + ε)
//! ```
//!
//! The objective `½‖V − WH‖²_F` is non-increasing under both updates.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::truncated_svd;
use crate::rng::SeededRng;
use crate::sparse::CsrMatrix;
use crate::textprep::TfidfMatrix;

pub const EPSILON: f64 = 1e-12;

/// Entries of the NNDSVD factors below this are treated as zero.
const NNDSVD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    Nndsvda,
    SeededRandom,
}

impl std::str::FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nndsvda" => Ok(Init::Nndsvda),
            "seeded-random" | "random" => Ok(Init::SeededRandom),
            other => Err(Error::InvalidConfig(format!("unknown init `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmfConfig {
    pub n_topics: usize,
    pub max_iter: usize,
    /// Stop once the objective improves by less than `tol` times its initial
    /// value over [`CHECK_EVERY`] iterations; 0 disables early stopping.
    pub tol: f64,
    pub seed: u64,
    pub init: Init,
}

impl Default for NmfConfig {
    fn default() -> Self {
        NmfConfig {
            n_topics: 10,
            max_iter: 200,
            tol: 1e-4,
            seed: 0,
            init: Init::Nndsvda,
        }
    }
}

impl NmfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_topics == 0 {
            return Err(Error::InvalidConfig("n_topics must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Per-document topic weights (`W` for training documents, `W′` at inference).
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopicMatrix {
    pub row_ids: Vec<String>,
    pub values: Array2<f64>,
}

impl DocTopicMatrix {
    pub fn n_docs(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_topics(&self) -> usize {
        self.values.ncols()
    }
}

/// Topic-term weights `H`; row `k` is topic `k` over the vocabulary columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicTermMatrix(pub Array2<f64>);

impl TopicTermMatrix {
    pub fn n_topics(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.0.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct NmfFit {
    pub w: DocTopicMatrix,
    pub h: TopicTermMatrix,
    /// Objective at initialization followed by one value per iteration.
    pub trace: Vec<f64>,
}

impl NmfFit {
    pub fn n_iter(&self) -> usize {
        self.trace.len() - 1
    }
}

fn check_shapes(v: &CsrMatrix, w: &Array2<f64>, h: &Array2<f64>) -> Result<()> {
    if w.nrows() != v.n_rows() || h.ncols() != v.n_cols() || w.ncols() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "V is {}x{}, W is {}x{}, H is {}x{}",
            v.n_rows(),
            v.n_cols(),
            w.nrows(),
            w.ncols(),
            h.nrows(),
            h.ncols()
        )));
    }
    Ok(())
}

/// `½(‖V‖² − 2⟨W, V Hᵀ⟩ + ⟨WᵀW, HHᵀ⟩)`, given `V Hᵀ` precomputed.
fn objective_from_parts(v_sq: f64, w: &Array2<f64>, vht: &Array2<f64>, hht: &Array2<f64>) -> f64 {
    let cross: f64 = Zip::from(w).and(vht).fold(0.0, |acc, a, b| acc + a * b);
    let wtw = w.t().dot(w);
    let quad: f64 = Zip::from(&wtw).and(hht).fold(0.0, |acc, a, b| acc + a * b);
    (0.5 * (v_sq - 2.0 * cross + quad)).max(0.0)
}

/// Reconstruction objective `½‖V − WH‖²_F`.
pub fn objective(v: &CsrMatrix, w: &Array2<f64>, h: &Array2<f64>) -> Result<f64> {
    check_shapes(v, w, h)?;
    let vht = v.mul_dense(&h.t().to_owned());
    let hht = h.dot(&h.t());
    Ok(objective_from_parts(v.frobenius_sq(), w, &vht, &hht))
}

fn random_factor(rng: &mut SeededRng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.unit() * scale)
}

fn nndsvda(v: &CsrMatrix, k: usize) -> (Array2<f64>, Array2<f64>) {
    let (u, s, vt) = truncated_svd(v, k);
    let (n, m) = (v.n_rows(), v.n_cols());
    let mut w = Array2::<f64>::zeros((n, k));
    let mut h = Array2::<f64>::zeros((k, m));

    let lead = s[0].sqrt();
    w.column_mut(0).assign(&u.column(0).mapv(|x| lead * x.abs()));
    h.row_mut(0).assign(&vt.row(0).mapv(|x| lead * x.abs()));

    for j in 1..k {
        let x = u.column(j);
        let y = vt.row(j);
        let pos = |a: f64| a.max(0.0);
        let neg = |a: f64| (-a).max(0.0);
        let (xp, xn) = (x.mapv(pos), x.mapv(neg));
        let (yp, yn) = (y.mapv(pos), y.mapv(neg));
        let norm = |a: &ndarray::Array1<f64>| a.dot(a).sqrt();
        let (xp_n, yp_n, xn_n, yn_n) = (norm(&xp), norm(&yp), norm(&xn), norm(&yn));
        let (mp, mn) = (xp_n * yp_n, xn_n * yn_n);
        let (uu, vv, sigma) = if mp > mn {
            (xp / xp_n, yp / yp_n, mp)
        } else {
            (xn / xn_n, yn / yn_n, mn)
        };
        if sigma > 0.0 {
            let lbd = (s[j] * sigma).sqrt();
            w.column_mut(j).assign(&(uu * lbd));
            h.row_mut(j).assign(&(vv * lbd));
        }
    }

    let fill = v.mean();
    for x in w.iter_mut().chain(h.iter_mut()) {
        if *x < NNDSVD_FLOOR {
            *x = fill;
        }
    }
    (w, h)
}

/// Starting factors `(W0, H0)`.
///
/// * `nndsvda`: nonnegative double SVD; entries below `1e-6` become the mean of `V`.
/// * `seeded-random`: i.i.d. `uniform(0, 1) · sqrt(mean(V) / t)`, `W0` drawn
///   row-major before `H0`.
pub fn init_factors(v: &CsrMatrix, cfg: &NmfConfig) -> Result<(Array2<f64>, Array2<f64>)> {
    cfg.validate()?;
    let (n, m, k) = (v.n_rows(), v.n_cols(), cfg.n_topics);
    if k > n.min(m) {
        return Err(Error::InvalidConfig(format!(
            "n_topics {k} exceeds min(n_docs, n_terms) = {}",
            n.min(m)
        )));
    }
    if v.values().iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    Ok(match cfg.init {
        Init::Nndsvda => nndsvda(v, k),
        Init::SeededRandom => {
            let scale = (v.mean() / k as f64).sqrt();
            let mut rng = SeededRng::new(cfg.seed);
            let w = random_factor(&mut rng, n, k, scale);
            let h = random_factor(&mut rng, k, m, scale);
            (w, h)
        }
    })
}

fn multiplicative_step(target: &mut Array2<f64>, numer: &Array2<f64>, denom: &Array2<f64>) {
    Zip::from(target)
        .and(numer)
        .and(denom)
        .for_each(|x, &a, &b| *x *= a / (b + EPSILON));
}

fn all_finite(a: &Array2<f64>) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Iterations between convergence checks.
pub const CHECK_EVERY: usize = 10;

/// Tracks the stopping rule: every [`CHECK_EVERY`] iterations, stop once the
/// objective fell by less than `tol · initial` since the previous check.
struct Stopping {
    tol: f64,
    initial: f64,
    last_check: f64,
}

impl Stopping {
    fn new(tol: f64, initial: f64) -> Self {
        Stopping { tol, initial, last_check: initial }
    }

    fn done(&mut self, iteration: usize, cur: f64) -> bool {
        if cur == 0.0 {
            return true;
        }
        if self.tol == 0.0 || iteration % CHECK_EVERY != 0 {
            return false;
        }
        let stop = (self.last_check - cur) / self.initial < self.tol;
        self.last_check = cur;
        stop
    }
}

/// Runs multiplicative updates from explicit starting factors.
pub fn train_from(
    v: &CsrMatrix,
    mut w: Array2<f64>,
    mut h: Array2<f64>,
    cfg: &NmfConfig,
) -> Result<(Array2<f64>, Array2<f64>, Vec<f64>)> {
    cfg.validate()?;
    check_shapes(v, &w, &h)?;
    let v_sq = v.frobenius_sq();

    let mut vht = v.mul_dense(&h.t().to_owned());
    let mut hht = h.dot(&h.t());
    let mut trace = vec![objective_from_parts(v_sq, &w, &vht, &hht)];
    let mut stopping = Stopping::new(cfg.tol, trace[0]);

    for iteration in 1..=cfg.max_iter {
        if trace[trace.len() - 1] == 0.0 {
            break;
        }
        let w_denom = w.dot(&hht);
        multiplicative_step(&mut w, &vht, &w_denom);

        let wtv = v.t_mul_dense(&w).reversed_axes();
        let h_denom = w.t().dot(&w).dot(&h);
        multiplicative_step(&mut h, &wtv, &h_denom);

        if !all_finite(&w) || !all_finite(&h) {
            return Err(Error::NonFinite { iteration });
        }

        vht = v.mul_dense(&h.t().to_owned());
        hht = h.dot(&h.t());
        let cur = objective_from_parts(v_sq, &w, &vht, &hht);
        if !cur.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        trace.push(cur);
        if stopping.done(iteration, cur) {
            break;
        }
    }
    if let Some(k) = h.rows().into_iter().position(|row| row.iter().all(|&x| x == 0.0)) {
        return Err(Error::DegenerateTopic(k));
    }
    Ok((w, h, trace))
}

/// Learns `W` and `H` for the feature matrix. Deterministic for a fixed config.
pub fn nmf_train(v: &TfidfMatrix, cfg: &NmfConfig) -> Result<NmfFit> {
    let (w0, h0) = init_factors(&v.matrix, cfg)?;
    let (w, h, trace) = train_from(&v.matrix, w0, h0, cfg)?;
    Ok(NmfFit {
        w: DocTopicMatrix {
            row_ids: v.row_ids.clone(),
            values: w,
        },
        h: TopicTermMatrix(h),
        trace,
    })
}

/// Infers `W′` for new documents with `H` held fixed. `W′` starts from the
/// seeded-random scheme regardless of `cfg.init`.
pub fn nmf_transform(vp: &TfidfMatrix, h: &TopicTermMatrix, cfg: &NmfConfig) -> Result<DocTopicMatrix> {
    cfg.validate()?;
    let v = &vp.matrix;
    let k = h.n_topics();
    if v.n_cols() != h.n_terms() {
        return Err(Error::DimensionMismatch(format!(
            "documents have {} term columns, topic matrix has {}",
            v.n_cols(),
            h.n_terms()
        )));
    }
    let h = &h.0;
    let scale = (v.mean() / k as f64).sqrt();
    let mut w = random_factor(&mut SeededRng::new(cfg.seed), v.n_rows(), k, scale);

    let v_sq = v.frobenius_sq();
    let vht = v.mul_dense(&h.t().to_owned());
    let hht = h.dot(&h.t());
    let initial = objective_from_parts(v_sq, &w, &vht, &hht);
    let mut stopping = Stopping::new(cfg.tol, initial);
    for iteration in 1..=cfg.max_iter {
        if initial == 0.0 {
            break;
        }
        let denom = w.dot(&hht);
        multiplicative_step(&mut w, &vht, &denom);
        if !all_finite(&w) {
            return Err(Error::NonFinite { iteration });
        }
        let cur = objective_from_parts(v_sq, &w, &vht, &hht);
        if !cur.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        if stopping.done(iteration, cur) {
            break;
        }
    }
    Ok(DocTopicMatrix {
        row_ids: vp.row_ids.clone(),
        values: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tfidf(dense: Array2<f64>) -> TfidfMatrix {
        TfidfMatrix {
            row_ids: (0..dense.nrows()).map(|i| format!("d#{i}")).collect(),
            matrix: CsrMatrix::from_dense(&dense),
        }
    }

    #[test]
    fn objective_small_cases() {
        let v = CsrMatrix::from_dense(&array![[1.0, 1.0]]);
        assert_eq!(objective(&v, &array![[1.0]], &array![[0.0, 0.0]]).unwrap(), 1.0);
        let w = array![[1.0], [2.0]];
        let h = array![[3.0, 0.5]];
        let v = CsrMatrix::from_dense(&w.dot(&h));
        assert_eq!(objective(&v, &w, &h).unwrap(), 0.0);
    }

    #[test]
    fn objective_shape_mismatch() {
        let v = CsrMatrix::from_dense(&array![[1.0, 1.0]]);
        assert!(matches!(
            objective(&v, &array![[1.0, 2.0]], &array![[0.0, 0.0]]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn identity_is_a_fixed_point() {
        let v = CsrMatrix::from_dense(&array![[1.0, 0.0], [0.0, 1.0]]);
        let cfg = NmfConfig { n_topics: 2, max_iter: 5, tol: 0.0, ..Default::default() };
        let (w, h, trace) = train_from(&v, Array2::eye(2), Array2::eye(2), &cfg).unwrap();
        assert_eq!(trace, vec![0.0]);
        assert_eq!(w, Array2::<f64>::eye(2));
        assert_eq!(h, Array2::<f64>::eye(2));
    }

    #[test]
    fn nndsvda_diagonal_example() {
        let v = CsrMatrix::from_dense(&array![[2.0, 0.0], [0.0, 2.0]]);
        let cfg = NmfConfig { n_topics: 2, ..Default::default() };
        let (w, h) = init_factors(&v, &cfg).unwrap();
        let r2 = 2f64.sqrt();
        assert_eq!(w, array![[r2, 1.0], [1.0, r2]]);
        assert_eq!(h, array![[r2, 1.0], [1.0, r2]]);
    }

    #[test]
    fn seeded_random_init_is_reproducible() {
        let v = CsrMatrix::from_dense(&array![[1.0, 2.0, 0.0], [0.0, 1.0, 3.0]]);
        let cfg = NmfConfig { n_topics: 2, init: Init::SeededRandom, seed: 17, ..Default::default() };
        let a = init_factors(&v, &cfg).unwrap();
        let b = init_factors(&v, &cfg).unwrap();
        assert_eq!(a, b);
        let scale = (v.mean() / 2.0).sqrt();
        assert!(a.0.iter().chain(a.1.iter()).all(|x| *x >= 0.0 && *x < scale));
    }

    #[test]
    fn rejects_bad_inputs() {
        let zero = tfidf(Array2::zeros((3, 3)));
        assert!(matches!(
            nmf_train(&zero, &NmfConfig { n_topics: 1, ..Default::default() }),
            Err(Error::ZeroMatrix)
        ));
        let v = tfidf(array![[1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(
            nmf_train(&v, &NmfConfig { n_topics: 3, ..Default::default() }),
            Err(Error::InvalidConfig(_))
        ));
        assert!(nmf_train(&v, &NmfConfig { max_iter: 0, n_topics: 1, ..Default::default() }).is_err());
    }

    #[test]
    fn transform_dimension_mismatch() {
        let v = tfidf(array![[1.0, 0.0, 1.0]]);
        let h = TopicTermMatrix(array![[1.0, 1.0]]);
        assert!(matches!(
            nmf_transform(&v, &h, &NmfConfig::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn dead_topic_is_an_error() {
        let v = CsrMatrix::from_dense(&array![[1.0, 2.0], [3.0, 1.0]]);
        let cfg = NmfConfig { n_topics: 2, max_iter: 5, tol: 0.0, ..NmfConfig::default() };
        let w0 = array![[1.0, 1.0], [1.0, 1.0]];
        let h0 = array![[1.0, 1.0], [0.0, 0.0]];
        assert!(matches!(train_from(&v, w0, h0, &cfg), Err(Error::DegenerateTopic(1))));
    }

    #[test]
    fn zero_row_goes_to_zero() {
        let h = TopicTermMatrix(array![[1.0, 0.0], [0.0, 1.0]]);
        let v = tfidf(array![[0.0, 0.0], [0.0, 1.0]]);
        let w = nmf_transform(&v, &h, &NmfConfig { n_topics: 2, ..Default::default() }).unwrap();
        assert!(w.values.row(0).iter().all(|x| *x == 0.0));
        assert!(w.values[[1, 1]] > w.values[[1, 0]]);
    }
}
