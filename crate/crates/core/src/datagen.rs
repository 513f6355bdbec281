//! Synthetic benchmark geometries, time-series ingestion and the adjusted Rand index.

use std::collections::HashMap;
use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};
use crate::graph::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DensityProfile {
    #[default]
    Uniform,
    /// Density falls off along the stick: `y = length * u^2`.
    Nonuniform,
}

/// Generator parameters; `generate` draws the point set for a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    GaussianClouds {
        centers: Vec<Vec<f64>>,
        sigma: f64,
        n_per: usize,
    },
    Sticks {
        n_sticks: usize,
        length: f64,
        gap: f64,
        n_per: usize,
        profile: DensityProfile,
        jitter: f64,
    },
    Annuli {
        radii: Vec<f64>,
        width: f64,
        counts: Vec<usize>,
    },
    Tetrahedron {
        q: usize,
        sigma: f64,
        n_per: usize,
    },
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> Result<PointSet> {
        match self {
            GeneratorSpec::GaussianClouds { centers, sigma, n_per } => {
                gen_gaussian_clouds(centers, *sigma, *n_per, seed)
            }
            GeneratorSpec::Sticks {
                n_sticks,
                length,
                gap,
                n_per,
                profile,
                jitter,
            } => gen_sticks(
                &StickParams {
                    n_sticks: *n_sticks,
                    length: *length,
                    gap: *gap,
                    n_per: *n_per,
                    profile: *profile,
                    jitter: *jitter,
                },
                seed,
            ),
            GeneratorSpec::Annuli { radii, width, counts } => gen_annuli(radii, *width, counts, seed),
            GeneratorSpec::Tetrahedron { q, sigma, n_per } => gen_tetrahedron(*q, *sigma, *n_per, seed),
        }
    }
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(QtcError::Parameter(format!("sigma must be > 0, got {sigma}")));
    }
    Normal::new(0.0, sigma).map_err(|e| QtcError::Parameter(e.to_string()))
}

/// `n_per` isotropic Gaussian samples around each center.
pub fn gen_gaussian_clouds(centers: &[Vec<f64>], sigma: f64, n_per: usize, seed: u64) -> Result<PointSet> {
    let noise = normal(sigma)?;
    if centers.is_empty() || n_per == 0 {
        return Err(QtcError::Parameter("need at least one center and n_per >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(centers.len() * n_per);
    let mut truth = Vec::with_capacity(rows.capacity());
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..n_per {
            rows.push(center.iter().map(|&x| x + noise.sample(&mut rng)).collect());
            truth.push(c);
        }
    }
    PointSet::from_rows(&rows, Some(truth))
}

/// Two clouds at `(+-ell, 0)`.
pub fn gen_two_clouds(ell: f64, sigma: f64, n_per: usize, seed: u64) -> Result<PointSet> {
    gen_gaussian_clouds(&[vec![-ell, 0.0], vec![ell, 0.0]], sigma, n_per, seed)
}

/// Outlier position sliding from the left center (`alpha = 0`) to the right one (`alpha = 1`).
pub fn outlier_position(ell: f64, alpha: f64) -> [f64; 2] {
    [-ell * (1.0 - alpha) + ell * alpha, 0.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StickParams {
    pub n_sticks: usize,
    pub length: f64,
    pub gap: f64,
    pub n_per: usize,
    pub profile: DensityProfile,
    /// Standard deviation of the transverse offset.
    pub jitter: f64,
}

impl Default for StickParams {
    fn default() -> Self {
        Self {
            n_sticks: 3,
            length: 3.0,
            gap: 0.5,
            n_per: 100,
            profile: DensityProfile::Uniform,
            jitter: 0.02,
        }
    }
}

/// Parallel vertical sticks at `x = k * gap`.
pub fn gen_sticks(p: &StickParams, seed: u64) -> Result<PointSet> {
    if p.n_sticks < 2 || p.n_per == 0 {
        return Err(QtcError::Parameter("need >= 2 sticks with >= 1 point each".into()));
    }
    if !(p.length > 0.0 && p.gap > 0.0 && p.jitter >= 0.0) {
        return Err(QtcError::Parameter("stick length and gap must be > 0, jitter >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for k in 0..p.n_sticks {
        for _ in 0..p.n_per {
            let u: f64 = rng.random();
            let y = match p.profile {
                DensityProfile::Uniform => p.length * u,
                DensityProfile::Nonuniform => p.length * u * u,
            };
            let dx = if p.jitter > 0.0 {
                Normal::new(0.0, p.jitter).expect("jitter > 0").sample(&mut rng)
            } else {
                0.0
            };
            rows.push(vec![k as f64 * p.gap + dx, y]);
            truth.push(k);
        }
    }
    PointSet::from_rows(&rows, Some(truth))
}

/// Concentric rings; radius uniform in `r +- width/2`, angle uniform.
pub fn gen_annuli(radii: &[f64], width: f64, counts: &[usize], seed: u64) -> Result<PointSet> {
    if radii.is_empty() || radii.len() != counts.len() {
        return Err(QtcError::Parameter("need one count per radius".into()));
    }
    if width.is_nan() || width <= 0.0 || radii[0] - width / 2.0 < 0.0 {
        return Err(QtcError::Parameter("width must be > 0 and rings must not cross the origin".into()));
    }
    if radii.windows(2).any(|w| w[1] - w[0] <= width) {
        return Err(QtcError::Parameter("rings overlap: radii must increase by more than the width".into()));
    }
    if counts.contains(&0) {
        return Err(QtcError::Parameter("every ring needs at least one point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (k, (&r, &n)) in radii.iter().zip(counts).enumerate() {
        for _ in 0..n {
            let rad = r - width / 2.0 + width * rng.random::<f64>();
            let ang = std::f64::consts::TAU * rng.random::<f64>();
            rows.push(vec![rad * ang.cos(), rad * ang.sin()]);
            truth.push(k);
        }
    }
    PointSet::from_rows(&rows, Some(truth))
}

/// Ring sizes proportional to radius, `base` points on a ring of radius 1.
pub fn counts_proportional_to_radius(radii: &[f64], base: usize) -> Vec<usize> {
    radii.iter().map(|r| ((r * base as f64).round() as usize).max(1)).collect()
}

/// Vertices of a regular tetrahedron with unit edge.
pub fn tetrahedron_vertices() -> [[f64; 3]; 4] {
    let a = 1.0 / 8f64.sqrt();
    [[a, a, a], [a, -a, -a], [-a, a, -a], [-a, -a, a]]
}

/// `q` Gaussian clusters in `R^3` centred on tetrahedron vertices.
pub fn gen_tetrahedron(q: usize, sigma: f64, n_per: usize, seed: u64) -> Result<PointSet> {
    if !(1..=4).contains(&q) {
        return Err(QtcError::Parameter(format!("tetrahedron supports q <= 4, got {q}")));
    }
    let centers: Vec<Vec<f64>> = tetrahedron_vertices()[..q].iter().map(|v| v.to_vec()).collect();
    gen_gaussian_clouds(&centers, sigma, n_per, seed)
}

/// Log-price trajectory; row `t` is `(log a_t - log a_0, log b_t - log b_0)`.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub points: PointSet,
    pub dates: Vec<String>,
}

#[derive(Deserialize)]
struct PriceRow {
    date: String,
    price_a: f64,
    price_b: f64,
}

/// Reads `date,price_a,price_b` CSV.
pub fn load_timeseries<R: Read>(reader: R) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    let mut origin = None;
    for (line, rec) in rdr.deserialize::<PriceRow>().enumerate() {
        let r = rec?;
        if !(r.price_a > 0.0 && r.price_b > 0.0) || !r.price_a.is_finite() || !r.price_b.is_finite() {
            return Err(QtcError::Input(format!("row {}: prices must be positive", line + 1)));
        }
        let (la, lb) = (r.price_a.ln(), r.price_b.ln());
        let (a0, b0) = *origin.get_or_insert((la, lb));
        rows.push(vec![la - a0, lb - b0]);
        dates.push(r.date);
    }
    if rows.len() < 2 {
        return Err(QtcError::Input("time series needs at least two rows".into()));
    }
    Ok(TimeSeries {
        points: PointSet::from_rows(&rows, None)?,
        dates,
    })
}

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index from the contingency table.
pub fn ari(labels: &[usize], truth: &[usize]) -> Result<f64> {
    if labels.len() != truth.len() {
        return Err(QtcError::Input("label vectors differ in length".into()));
    }
    let n = labels.len() as u64;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&a, &b) in labels.iter().zip(truth) {
        *table.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        // both partitions trivial in the same way (all singletons or one block)
        return Ok(if sum_a == sum_b { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clouds_shape_and_determinism() {
        let p = gen_two_clouds(0.3, 0.1, 100, 4).unwrap();
        assert_eq!(p.len(), 200);
        let t = p.truth().unwrap();
        assert_eq!(t.iter().filter(|&&l| l == 0).count(), 100);
        assert_eq!(p, gen_two_clouds(0.3, 0.1, 100, 4).unwrap());
        assert!(gen_two_clouds(0.3, 0.0, 10, 4).is_err());
    }

    #[test]
    fn cloud_means_near_centers() {
        let p = gen_two_clouds(0.3, 0.1, 400, 8).unwrap();
        let x = p.points();
        for (c, cx) in [(0usize, -0.3), (1, 0.3)] {
            let idx: Vec<usize> = (0..p.len()).filter(|&i| p.truth().unwrap()[i] == c).collect();
            let mx: f64 = idx.iter().map(|&i| x[(i, 0)]).sum::<f64>() / idx.len() as f64;
            assert!((mx - cx).abs() < 5.0 * 0.1 / 20.0);
        }
    }

    #[test]
    fn single_sample_per_center() {
        let p = gen_gaussian_clouds(&[vec![0.0], vec![5.0], vec![9.0]], 0.1, 1, 2).unwrap();
        assert_eq!(p.truth().unwrap(), &[0, 1, 2]);
    }

    #[test]
    fn tetrahedron_edges() {
        let v = tetrahedron_vertices();
        for a in 0..4 {
            for b in a + 1..4 {
                let d: f64 = (0..3).map(|k| (v[a][k] - v[b][k]).powi(2)).sum::<f64>().sqrt();
                assert!((d - 1.0).abs() < 1e-15);
            }
        }
        assert!(gen_tetrahedron(5, 0.1, 3, 0).is_err());
        assert_eq!(gen_tetrahedron(2, 0.1, 10, 0).unwrap().dim(), 3);
    }

    #[test]
    fn annuli_radial_band() {
        let p = gen_annuli(&[1.0, 2.0], 0.2, &[30, 50], 1).unwrap();
        for i in 0..p.len() {
            let r = p.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            let c = [1.0, 2.0][p.truth().unwrap()[i]];
            assert!((r - c).abs() <= 0.1 + 1e-12);
        }
        assert!(gen_annuli(&[1.0, 1.1], 0.2, &[5, 5], 1).is_err());
        assert_eq!(counts_proportional_to_radius(&[1.0, 2.0, 3.0], 60), vec![60, 120, 180]);
        let single = gen_annuli(&[1.0], 0.2, &[20], 0).unwrap();
        assert!(single.truth().unwrap().iter().all(|&l| l == 0));
    }

    #[test]
    fn sticks_layout() {
        let p = gen_sticks(&StickParams::default(), 3).unwrap();
        assert_eq!(p.len(), 300);
        for i in 0..p.len() {
            let k = p.truth().unwrap()[i] as f64;
            assert!((p.row(i)[0] - 0.5 * k).abs() < 6.0 * 0.02);
        }
    }

    #[test]
    fn timeseries_origin_and_errors() {
        let csv = "date,price_a,price_b\n2020-01-01,10,20\n2020-01-02,11,19\n";
        let ts = load_timeseries(csv.as_bytes()).unwrap();
        assert_eq!(ts.points.row(0), vec![0.0, 0.0]);
        assert!((ts.points.row(1)[0] - 1.1f64.ln()).abs() < 1e-15);
        assert_eq!(ts.dates, vec!["2020-01-01", "2020-01-02"]);
        let bad = "date,price_a,price_b\n2020-01-01,10,0\n2020-01-02,11,19\n";
        assert!(matches!(load_timeseries(bad.as_bytes()), Err(QtcError::Input(_))));
    }

    #[test]
    fn ari_basics() {
        assert_eq!(ari(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(ari(&[1, 1, 0, 0], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert!(ari(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap() < 0.0);
        assert_eq!(ari(&[0, 0, 0], &[0, 0, 0]).unwrap(), 1.0);
        assert!(ari(&[0], &[0, 1]).is_err());
    }
}
