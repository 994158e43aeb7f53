//! Random-access scenarios for a C-RAN with `R` RRHs and `N` UEs.
//!
//! The received block at RRH `r` is
//!
//! ```text
//! w_r = Σ_n λ_n γ_{n,r} h_{n,r} s_n + v_r
//! ```
//!
//! with i.i.d. CN(0, Es/M) signature entries, CN(0, 1) small-scale fading and
//! CN(0, σ_v²) noise, where σ_v² = Es / (M·10^{snr_db/10}).
//!
//! The stacked quantize-and-forward system orders rows RRH-major (all `M`
//! samples of RRH 0, then RRH 1, ...) and columns UE-major (`x^{(n)}` holds the
//! `R` channels of UE `n`). Real lifting maps complex row `i` to real rows
//! `2i` (real part) and `2i+1` (imaginary part), and likewise for columns.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{BlockDiagonal, LinearOperator, RealMatrix};

pub type CMatrix = DMatrix<Complex64>;

/// Static system parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_ues: usize,
    pub signature_len: usize,
    pub n_rrh: usize,
    pub activation_prob: f64,
    pub signature_energy: f64,
    pub snr_db: f64,
    /// Large-scale fading, `n_ues × n_rrh`, row-major.
    pub gamma: Vec<f64>,
}

impl SystemConfig {
    /// Dense network (all γ = 1) with `Es = M`.
    pub fn dense(n_ues: usize, signature_len: usize, n_rrh: usize, activation_prob: f64, snr_db: f64) -> Result<Self> {
        let cfg = Self {
            n_ues,
            signature_len,
            n_rrh,
            activation_prob,
            signature_energy: signature_len as f64,
            snr_db,
            gamma: vec![1.0; n_ues * n_rrh],
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_gamma(mut self, gamma: Vec<f64>) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ues == 0 || self.signature_len == 0 || self.n_rrh == 0 {
            return Err(Error::config(format!(
                "N, M and R must be at least 1 (got N={}, M={}, R={})",
                self.n_ues, self.signature_len, self.n_rrh
            )));
        }
        if !(self.activation_prob > 0.0 && self.activation_prob < 1.0) {
            return Err(Error::config(format!(
                "activation probability must lie in (0,1), got {}",
                self.activation_prob
            )));
        }
        if !(self.signature_energy > 0.0 && self.signature_energy.is_finite()) {
            return Err(Error::config(format!(
                "signature energy must be positive, got {}",
                self.signature_energy
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db must be finite"));
        }
        if self.gamma.len() != self.n_ues * self.n_rrh {
            return Err(Error::dims("gamma", self.n_ues * self.n_rrh, self.gamma.len()));
        }
        if self.gamma.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::config("gamma entries must be finite and nonnegative"));
        }
        Ok(())
    }

    #[inline]
    pub fn gamma(&self, n: usize, r: usize) -> f64 {
        self.gamma[n * self.n_rrh + r]
    }

    /// Column `r` of γ, i.e. the gains of every UE towards RRH `r`.
    pub fn gamma_column(&self, r: usize) -> Vec<f64> {
        (0..self.n_ues).map(|n| self.gamma(n, r)).collect()
    }

    /// σ_v² from ρ = Es/(M σ_v²).
    pub fn noise_variance(&self) -> f64 {
        self.signature_energy / (self.signature_len as f64 * 10f64.powf(self.snr_db / 10.0))
    }
}

/// One realization of all random quantities in a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    /// `M × N`, column `n` is the signature of UE `n`.
    pub signatures: CMatrix,
    pub activity: Vec<bool>,
    /// `N × R` small-scale fading.
    pub fading: CMatrix,
    /// `M × R` noise.
    pub noise: CMatrix,
    /// `M × R` received samples.
    pub received: CMatrix,
    pub noise_var: f64,
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let sd = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

fn complex_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, var: f64, rng: &mut R) -> CMatrix {
    // Column-major fill keeps the draw order tied to the storage order.
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_gaussian(rng, var)).collect();
    CMatrix::from_vec(rows, cols, data)
}

/// `M × N` i.i.d. CN(0, Es/M) signatures.
pub fn gen_signatures<R: Rng + ?Sized>(n_ues: usize, signature_len: usize, energy: f64, rng: &mut R) -> Result<CMatrix> {
    if n_ues == 0 || signature_len == 0 {
        return Err(Error::config("signature matrix needs N, M ≥ 1"));
    }
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::config(format!("signature energy must be positive, got {energy}")));
    }
    Ok(complex_gaussian_matrix(
        signature_len,
        n_ues,
        energy / signature_len as f64,
        rng,
    ))
}

/// i.i.d. Bernoulli(p) activity pattern.
pub fn gen_activity<R: Rng + ?Sized>(n_ues: usize, p: f64, rng: &mut R) -> Result<Vec<bool>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::config(format!("activation probability must lie in (0,1), got {p}")));
    }
    Ok((0..n_ues).map(|_| rng.random::<f64>() < p).collect())
}

/// `N × R` i.i.d. CN(0, 1) small-scale fading.
pub fn gen_fading<R: Rng + ?Sized>(n_ues: usize, n_rrh: usize, rng: &mut R) -> CMatrix {
    complex_gaussian_matrix(n_ues, n_rrh, 1.0, rng)
}

/// Received block for given noise: `W[:, r] = Σ_n λ_n γ_{n,r} h_{n,r} s_n + V[:, r]`.
pub fn received_signal(
    config: &SystemConfig,
    signatures: &CMatrix,
    activity: &[bool],
    fading: &CMatrix,
    noise: &CMatrix,
) -> CMatrix {
    let (m, r_count) = (config.signature_len, config.n_rrh);
    let mut w = noise.clone();
    for r in 0..r_count {
        for row in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, &active) in activity.iter().enumerate() {
                if active {
                    acc += signatures[(row, n)] * fading[(n, r)] * config.gamma(n, r);
                }
            }
            w[(row, r)] = acc + noise[(row, r)];
        }
    }
    w
}

/// Draw the noise and assemble a [`Scenario`] from given signatures, activity and fading.
pub fn synthesize_rx<R: Rng + ?Sized>(
    config: &SystemConfig,
    signatures: CMatrix,
    activity: Vec<bool>,
    fading: CMatrix,
    rng: &mut R,
) -> Result<Scenario> {
    config.validate()?;
    let (n, m, r) = (config.n_ues, config.signature_len, config.n_rrh);
    if signatures.shape() != (m, n) {
        return Err(Error::dims("signatures", format!("{m}x{n}"), format!("{:?}", signatures.shape())));
    }
    if activity.len() != n {
        return Err(Error::dims("activity", n, activity.len()));
    }
    if fading.shape() != (n, r) {
        return Err(Error::dims("fading", format!("{n}x{r}"), format!("{:?}", fading.shape())));
    }
    let noise_var = config.noise_variance();
    let noise = complex_gaussian_matrix(m, r, noise_var, rng);
    let received = received_signal(config, &signatures, &activity, &fading, &noise);
    Ok(Scenario {
        config: config.clone(),
        signatures,
        activity,
        fading,
        noise,
        received,
        noise_var,
    })
}

impl Scenario {
    /// Draw every random quantity in the order signatures, activity, fading, noise.
    pub fn draw<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let s = gen_signatures(config.n_ues, config.signature_len, config.signature_energy, rng)?;
        let lambda = gen_activity(config.n_ues, config.activation_prob, rng)?;
        let h = gen_fading(config.n_ues, config.n_rrh, rng);
        synthesize_rx(config, s, lambda, h, rng)
    }

    pub fn active_count(&self) -> usize {
        self.activity.iter().filter(|&&a| a).count()
    }

    /// Received block of RRH `r`.
    pub fn received_at(&self, r: usize) -> Vec<Complex64> {
        self.received.column(r).iter().copied().collect()
    }

    /// `[w_1, …, w_R]` stacked RRH-major.
    pub fn stacked_received(&self) -> Vec<Complex64> {
        self.received.as_slice().to_vec()
    }

    /// Recompute the received block from the stored draws.
    pub fn recompute_received(&self) -> CMatrix {
        received_signal(&self.config, &self.signatures, &self.activity, &self.fading, &self.noise)
    }

    /// Write the scenario as a text table.
    ///
    /// Layout: a `#` header line, one `key=value` line per configuration
    /// field, then rows `field,row,col,re,im` for `S`, `H`, `V`, `W` and
    /// `lambda` (imaginary part 0). Floats use the shortest round-trip form,
    /// so loading reproduces every value bit-exactly.
    pub fn dump(&self) -> String {
        let c = &self.config;
        let mut out = String::from("# cran-uad scenario v1\n");
        let _ = writeln!(out, "n_ues={}", c.n_ues);
        let _ = writeln!(out, "signature_len={}", c.signature_len);
        let _ = writeln!(out, "n_rrh={}", c.n_rrh);
        let _ = writeln!(out, "activation_prob={:?}", c.activation_prob);
        let _ = writeln!(out, "signature_energy={:?}", c.signature_energy);
        let _ = writeln!(out, "snr_db={:?}", c.snr_db);
        let _ = writeln!(out, "noise_var={:?}", self.noise_var);
        let gamma: Vec<String> = c.gamma.iter().map(|g| format!("{g:?}")).collect();
        let _ = writeln!(out, "gamma={}", gamma.join(" "));
        out.push_str("field,row,col,re,im\n");
        for (name, mat) in [
            ("S", &self.signatures),
            ("H", &self.fading),
            ("V", &self.noise),
            ("W", &self.received),
        ] {
            for j in 0..mat.ncols() {
                for i in 0..mat.nrows() {
                    let z = mat[(i, j)];
                    let _ = writeln!(out, "{name},{i},{j},{:?},{:?}", z.re, z.im);
                }
            }
        }
        for (n, &a) in self.activity.iter().enumerate() {
            let _ = writeln!(out, "lambda,{n},0,{},0", u8::from(a));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.dump()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |message: String| Error::Parse {
            path: "<scenario>".into(),
            message,
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("bad number {s:?}: {e}")));
        let int = |s: &str| s.trim().parse::<usize>().map_err(|e| bad(format!("bad integer {s:?}: {e}")));

        let mut kv = std::collections::HashMap::new();
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        for line in lines.by_ref() {
            if line.starts_with("field,") {
                break;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| kv.get(k).map(String::as_str).ok_or_else(|| bad(format!("missing {k}")));
        let (n, m, r) = (int(get("n_ues")?)?, int(get("signature_len")?)?, int(get("n_rrh")?)?);
        let gamma = get("gamma")?
            .split_whitespace()
            .map(num)
            .collect::<Result<Vec<_>>>()?;
        let config = SystemConfig {
            n_ues: n,
            signature_len: m,
            n_rrh: r,
            activation_prob: num(get("activation_prob")?)?,
            signature_energy: num(get("signature_energy")?)?,
            snr_db: num(get("snr_db")?)?,
            gamma,
        };
        config.validate()?;
        let noise_var = num(get("noise_var")?)?;

        let zero = Complex64::new(0.0, 0.0);
        let mut s = CMatrix::from_element(m, n, zero);
        let mut h = CMatrix::from_element(n, r, zero);
        let mut v = CMatrix::from_element(m, r, zero);
        let mut w = CMatrix::from_element(m, r, zero);
        let mut lambda = vec![false; n];
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(format!("expected 5 columns, got {line:?}")));
            }
            let (i, j) = (int(f[1])?, int(f[2])?);
            let z = Complex64::new(num(f[3])?, num(f[4])?);
            let target = match f[0] {
                "S" => &mut s,
                "H" => &mut h,
                "V" => &mut v,
                "W" => &mut w,
                "lambda" => {
                    *lambda.get_mut(i).ok_or_else(|| bad(format!("lambda index {i} out of range")))? = z.re != 0.0;
                    continue;
                }
                other => return Err(bad(format!("unknown field {other:?}"))),
            };
            if i >= target.nrows() || j >= target.ncols() {
                return Err(bad(format!("{} index ({i},{j}) out of range", f[0])));
            }
            target[(i, j)] = z;
        }
        Ok(Scenario {
            config,
            signatures: s,
            activity: lambda,
            fading: h,
            noise: v,
            received: w,
            noise_var,
        })
    }
}

fn check_gamma(signatures: &CMatrix, gamma: &[f64], n_rrh: usize) -> Result<()> {
    if gamma.len() != signatures.ncols() * n_rrh {
        return Err(Error::dims("gamma", signatures.ncols() * n_rrh, gamma.len()));
    }
    Ok(())
}

/// Stacked quantize-and-forward matrix `A = [Γ^{(1)} ⊗ s_1; …; Γ^{(N)} ⊗ s_N]`.
///
/// `gamma` is `N × R` row-major. The result is `RM × RN` with entry
/// `A[r·M + m, n·R + r] = γ_{n,r} s_n[m]` and zeros elsewhere.
pub fn build_qf_matrix(signatures: &CMatrix, gamma: &[f64], n_rrh: usize) -> Result<CMatrix> {
    check_gamma(signatures, gamma, n_rrh)?;
    let (m, n) = signatures.shape();
    let mut a = CMatrix::from_element(n_rrh * m, n_rrh * n, Complex64::new(0.0, 0.0));
    for ue in 0..n {
        for r in 0..n_rrh {
            let g = gamma[ue * n_rrh + r];
            for row in 0..m {
                a[(r * m + row, ue * n_rrh + r)] = signatures[(row, ue)] * g;
            }
        }
    }
    Ok(a)
}

/// Per-RRH matrix `A_r = S Γ_r`.
pub fn per_rrh_matrix(signatures: &CMatrix, gamma_col: &[f64]) -> Result<CMatrix> {
    if gamma_col.len() != signatures.ncols() {
        return Err(Error::dims("gamma column", signatures.ncols(), gamma_col.len()));
    }
    let mut a = signatures.clone();
    for (n, g) in gamma_col.iter().enumerate() {
        a.column_mut(n).scale_mut(*g);
    }
    Ok(a)
}

/// Real lift of a complex matrix: each entry becomes `[[Re, −Im], [Im, Re]]`.
pub fn lift_matrix(a: &CMatrix) -> RealMatrix {
    let (rows, cols) = a.shape();
    RealMatrix::from_fn(2 * rows, 2 * cols, |i, j| {
        let z = a[(i / 2, j / 2)];
        match (i % 2, j % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

/// Interleaved `(Re, Im)` real lift of a complex vector.
pub fn lift_vector(x: &[Complex64]) -> Vec<f64> {
    x.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Inverse of [`lift_vector`].
pub fn unlift_vector(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

/// A real-lifted sensing matrix with its coordinate → UE map ξ.
#[derive(Debug, Clone)]
pub struct RealLift {
    pub matrix: RealMatrix,
    pub group_index: Vec<usize>,
}

impl RealLift {
    /// Dense lift of the stacked QF system; groups have size 2R.
    pub fn qf(signatures: &CMatrix, gamma: &[f64], n_rrh: usize) -> Result<Self> {
        let a = build_qf_matrix(signatures, gamma, n_rrh)?;
        let matrix = lift_matrix(&a);
        let group_index = (0..matrix.cols()).map(|j| j / (2 * n_rrh)).collect();
        Ok(Self { matrix, group_index })
    }

    /// Lift of `A_r = S Γ_r`; groups have size 2.
    pub fn per_rrh(signatures: &CMatrix, gamma_col: &[f64]) -> Result<Self> {
        let matrix = lift_matrix(&per_rrh_matrix(signatures, gamma_col)?);
        let group_index = (0..matrix.cols()).map(|j| j / 2).collect();
        Ok(Self { matrix, group_index })
    }

    pub fn group_size(&self, n: usize) -> usize {
        self.group_index.iter().filter(|&&g| g == n).count()
    }
}

/// Structured form of the lifted QF matrix, one dense block per RRH.
///
/// Equal to `lift_matrix(build_qf_matrix(..))` but costs `R` times less per product.
pub fn qf_operator(signatures: &CMatrix, gamma: &[f64], n_rrh: usize) -> Result<BlockDiagonal> {
    check_gamma(signatures, gamma, n_rrh)?;
    let n = signatures.ncols();
    let mut blocks = Vec::with_capacity(n_rrh);
    let mut columns = Vec::with_capacity(n_rrh);
    for r in 0..n_rrh {
        let col: Vec<f64> = (0..n).map(|ue| gamma[ue * n_rrh + r]).collect();
        blocks.push(lift_matrix(&per_rrh_matrix(signatures, &col)?));
        columns.push(
            (0..n)
                .flat_map(|ue| {
                    let c = 2 * (ue * n_rrh + r);
                    [c, c + 1]
                })
                .collect(),
        );
    }
    BlockDiagonal::new(blocks, columns)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn noise_variance_from_snr() {
        let cfg = SystemConfig::dense(256, 128, 1, 48.0 / 256.0, -10.81).unwrap();
        assert!((cfg.noise_variance() - 10f64.powf(1.081)).abs() < 1e-12);
        assert!((cfg.noise_variance() - 12.05).abs() < 0.01);
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(SystemConfig::dense(0, 4, 1, 0.1, 0.0).is_err());
        assert!(SystemConfig::dense(4, 4, 1, 0.0, 0.0).is_err());
        assert!(SystemConfig::dense(4, 4, 1, 1.0, 0.0).is_err());
        let cfg = SystemConfig::dense(2, 4, 1, 0.5, 0.0).unwrap();
        assert!(cfg.clone().with_gamma(vec![1.0, -1.0]).is_err());
        assert!(cfg.with_gamma(vec![1.0]).is_err());
    }

    #[test]
    fn single_entry_signature_variance() {
        let mut r = rng(5);
        let trials = 200_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            acc += gen_signatures(1, 1, 4.0, &mut r).unwrap()[(0, 0)].norm_sqr();
        }
        assert!((acc / trials as f64 - 4.0).abs() < 0.05);
    }

    #[test]
    fn activity_rejects_degenerate_p() {
        assert!(gen_activity(4, 0.0, &mut rng(1)).is_err());
        assert!(gen_activity(4, 1.0, &mut rng(1)).is_err());
    }

    #[test]
    fn inactive_scenario_is_pure_noise() {
        let cfg = SystemConfig::dense(6, 5, 2, 0.2, 0.0).unwrap();
        let mut r = rng(3);
        let s = gen_signatures(6, 5, 5.0, &mut r).unwrap();
        let h = gen_fading(6, 2, &mut r);
        let sc = synthesize_rx(&cfg, s, vec![false; 6], h, &mut r).unwrap();
        assert_eq!(sc.received, sc.noise);
    }

    #[test]
    fn noiseless_single_user() {
        let mut cfg = SystemConfig::dense(1, 4, 1, 0.5, 0.0).unwrap();
        cfg.snr_db = f64::INFINITY;
        let mut r = rng(9);
        let s = gen_signatures(1, 4, 4.0, &mut r).unwrap();
        let h = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        let noise = CMatrix::from_element(4, 1, Complex64::new(0.0, 0.0));
        let w = received_signal(&cfg, &s, &[true], &h, &noise);
        assert_eq!(w.column(0), s.column(0));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let cfg = SystemConfig::dense(3, 4, 1, 0.2, 0.0).unwrap();
        let mut r = rng(0);
        let s = gen_signatures(2, 4, 4.0, &mut r).unwrap();
        let h = gen_fading(3, 1, &mut r);
        assert!(synthesize_rx(&cfg, s, vec![true; 3], h, &mut r).is_err());
    }

    #[test]
    fn scenario_recomputes_bit_exactly() {
        let cfg = SystemConfig::dense(8, 6, 3, 0.4, 3.0)
            .unwrap()
            .with_gamma((0..24).map(|k| 0.5 + 0.1 * k as f64).collect())
            .unwrap();
        let sc = Scenario::draw(&cfg, &mut rng(11)).unwrap();
        assert_eq!(sc.recompute_received(), sc.received);
    }

    #[test]
    fn dump_round_trips() {
        let cfg = SystemConfig::dense(5, 3, 2, 0.3, -2.5).unwrap();
        let sc = Scenario::draw(&cfg, &mut rng(2)).unwrap();
        let back = Scenario::parse(&sc.dump()).unwrap();
        assert_eq!(back, sc);
        assert_eq!(back.recompute_received(), back.received);
    }

    #[test]
    fn lift_of_imaginary_unit() {
        let a = CMatrix::from_element(1, 1, Complex64::new(0.0, 1.0));
        let l = lift_matrix(&a);
        assert_eq!(l.as_slice(), &[0.0, -1.0, 1.0, 0.0]);
    }

    #[test]
    fn lift_of_real_matrix_duplicates_entries() {
        let a = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i * 3 + j) as f64 - 4.0, 0.0));
        let l = lift_matrix(&a);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l.get(2 * i, 2 * j), a[(i, j)].re);
                assert_eq!(l.get(2 * i + 1, 2 * j + 1), a[(i, j)].re);
                assert_eq!(l.get(2 * i, 2 * j + 1), 0.0);
            }
        }
    }

    #[test]
    fn single_rrh_qf_matrix_is_scaled_signatures() {
        let mut r = rng(4);
        let s = gen_signatures(4, 3, 3.0, &mut r).unwrap();
        let gamma = vec![1.0, 0.5, 2.0, 0.0];
        let a = build_qf_matrix(&s, &gamma, 1).unwrap();
        assert_eq!(a, per_rrh_matrix(&s, &gamma).unwrap());
        assert!(a.column(3).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn qf_lift_groups() {
        let mut r = rng(4);
        let s = gen_signatures(3, 2, 2.0, &mut r).unwrap();
        let lift = RealLift::qf(&s, &[1.0; 6], 2).unwrap();
        for n in 0..3 {
            assert_eq!(lift.group_size(n), 4);
        }
        let local = RealLift::per_rrh(&s, &[1.0; 3]).unwrap();
        assert_eq!(local.group_size(2), 2);
    }

    #[test]
    fn qf_operator_equals_dense_lift() {
        let mut r = rng(8);
        let s = gen_signatures(5, 4, 4.0, &mut r).unwrap();
        let gamma: Vec<f64> = (0..15).map(|k| 0.2 * k as f64).collect();
        let op = qf_operator(&s, &gamma, 3).unwrap();
        let dense = RealLift::qf(&s, &gamma, 3).unwrap().matrix;
        assert_eq!(op.to_dense(), dense);
        assert_eq!(op.rows(), 24);
        assert_eq!(op.cols(), 30);
    }
}
