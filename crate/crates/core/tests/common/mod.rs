//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use ckm::d2d::{D2dProblem, GainTensor};
use ckm::dataset::{Dataset, DatasetMeta, MapKind, Row};
use ckm::scene::{BuildingBox, Point3, Rect, Scene, UrbanLayout};
use ckm::SPEED_OF_LIGHT;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One tall wall occupying x ∈ [10, 11], |y| ≤ 20, in a 100 m square.
pub fn wall_scene() -> Scene {
    let wall = BuildingBox::new([10.0, -20.0], [11.0, 20.0], 30.0).unwrap();
    Scene::new(
        vec![wall],
        Rect::new([-50.0, -50.0], [50.0, 50.0]).unwrap(),
        None,
        28e9,
        vec![28e9],
    )
    .unwrap()
}

/// Small street grid used by the D2D experiments.
pub fn d2d_layout() -> UrbanLayout {
    UrbanLayout {
        width: 80.0,
        depth: 80.0,
        blocks_x: 2,
        blocks_y: 2,
        street_width: 14.0,
        max_setback: 3.0,
        open_fraction: 0.15,
        bs_location: None,
        ..UrbanLayout::default()
    }
}

pub fn d2d_scene() -> Scene {
    d2d_layout().generate(7).unwrap()
}

pub fn urban_scene() -> Scene {
    UrbanLayout::default().generate(0).unwrap()
}

pub fn random_outdoor(scene: &Scene, z: f64, rng: &mut ChaCha8Rng) -> Point3 {
    let b = *scene.bounds();
    loop {
        let p = Point3::new(
            rng.random_range(b.min[0]..b.max[0]),
            rng.random_range(b.min[1]..b.max[1]),
            z,
        );
        if !scene.is_indoor(&p) {
            return p;
        }
    }
}

/// Segment visibility by dense sampling. Returns `(clear, margin)`: for a
/// clear segment the closest approach to any box, for a blocked one the
/// deepest penetration below a box surface.
pub fn sampled_visibility(scene: &Scene, a: &Point3, b: &Point3, samples: usize) -> (bool, f64) {
    let mut closest = f64::INFINITY;
    let mut deepest: f64 = 0.0;
    for i in 1..samples {
        let t = i as f64 / samples as f64;
        let p = a.add(&b.sub(a).scale(t));
        for bx in scene.buildings() {
            let (lo, hi) = (bx.min_corner, bx.max_corner);
            let d = [p.x - lo.x, hi.x - p.x, p.y - lo.y, hi.y - p.y, p.z - lo.z, hi.z - p.z];
            if d.iter().all(|&v| v > 0.0) {
                deepest = deepest.max(d.iter().cloned().fold(f64::INFINITY, f64::min));
            } else {
                let ox = (lo.x - p.x).max(p.x - hi.x).max(0.0);
                let oy = (lo.y - p.y).max(p.y - hi.y).max(0.0);
                let oz = (lo.z - p.z).max(p.z - hi.z).max(0.0);
                closest = closest.min((ox * ox + oy * oy + oz * oz).sqrt());
            }
        }
    }
    if deepest > 0.0 {
        (false, deepest)
    } else {
        (true, closest)
    }
}

/// Free-space amplitude gain in dB, written out from the definition.
pub fn friis_db(d: f64, f: f64) -> f64 {
    20.0 * (SPEED_OF_LIGHT / (4.0 * PI * d * f)).log10()
}

/// 20·log10 |Σ a_l e^{-i2πfτ_l}| term by term.
pub fn complex_sum_db(gains_db: &[f64], delays: &[f64], f: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (g, t) in gains_db.iter().zip(delays) {
        let a = 10f64.powf(g / 20.0);
        let ph = -2.0 * PI * f * t;
        re += a * ph.cos();
        im += a * ph.sin();
    }
    10.0 * (re * re + im * im).log10()
}

/// Σ_k log2(1 + SINR_k) over the pairs with a band in `band`.
pub fn oracle_rate(p_w: f64, noise_w: f64, band: &[Option<usize>], g: &GainTensor) -> f64 {
    let mut total = 0.0;
    for k in 0..band.len() {
        let Some(b) = band[k] else { continue };
        let mut interference = 0.0;
        for j in 0..band.len() {
            if j != k && band[j] == Some(b) {
                interference += p_w * g.get(j, k, b);
            }
        }
        let sinr = p_w * g.get(k, k, b) / (noise_w + interference);
        total += (1.0 + sinr).log2();
    }
    total
}

pub fn watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Random gain tensor with strong direct links and weaker cross links.
pub fn random_gains(k: usize, n: usize, rng: &mut ChaCha8Rng) -> GainTensor {
    GainTensor::from_fn(k, n, |from, to, _| {
        let db = if from == to {
            rng.random_range(-90.0..-60.0)
        } else {
            rng.random_range(-120.0..-70.0)
        };
        10f64.powf(db / 10.0)
    })
    .unwrap()
}

pub fn dummy_problem(k: usize, n: usize) -> D2dProblem {
    let pairs = (0..k)
        .map(|i| (Point3::new(i as f64, 0.0, 1.5), Point3::new(i as f64, 5.0, 1.5)))
        .collect();
    D2dProblem::new(pairs, n, 20.0, -90.0).unwrap()
}

/// Exhaustive search in lexicographic order using [`oracle_rate`].
pub fn oracle_brute_force(problem: &D2dProblem, g: &GainTensor) -> (Vec<usize>, f64) {
    let (k, n) = (problem.k(), problem.n_bands);
    let (p, s) = (watts(problem.tx_power_dbm), watts(problem.noise_dbm));
    let mut best = (vec![0; k], f64::NEG_INFINITY);
    let total = n.pow(k as u32);
    for code in 0..total {
        let mut a = vec![0; k];
        let mut c = code;
        for slot in a.iter_mut().rev() {
            *slot = c % n;
            c /= n;
        }
        let band: Vec<Option<usize>> = a.iter().map(|&b| Some(b)).collect();
        let r = oracle_rate(p, s, &band, g);
        if r > best.1 {
            best = (a, r);
        }
    }
    best
}

/// Element-wise UPA inner product a(θ1,φ1)ᴴ a(θ2,φ2).
pub fn steering_inner(n_y: usize, n_z: usize, a: (f64, f64), b: (f64, f64)) -> Complex64 {
    let n = (n_y * n_z) as f64;
    let (u1, v1) = (a.0.sin() * a.1.sin(), a.0.cos());
    let (u2, v2) = (b.0.sin() * b.1.sin(), b.0.cos());
    let mut acc = Complex64::new(0.0, 0.0);
    for my in 0..n_y {
        for mz in 0..n_z {
            let p1 = PI * (my as f64 * u1 + mz as f64 * v1);
            let p2 = PI * (my as f64 * u2 + mz as f64 * v2);
            acc += Complex64::from_polar(1.0 / n, p2 - p1);
        }
    }
    acc
}

pub fn cgm_meta(n: usize) -> DatasetMeta {
    DatasetMeta {
        kind: MapKind::Cgm,
        tx_height: 1.5,
        rx_height: 1.5,
        carrier_hz: 28e9,
        band_plan: (0..n).map(|i| 28e9 + i as f64 * 20e6).collect(),
        bs_location: None,
        gain_sum: "coherent".into(),
    }
}

/// Random CGM dataset with distinct keys in [0, 100)^4.
pub fn random_cgm(rows: usize, n: usize, sentinel_prob: f64, rng: &mut ChaCha8Rng) -> Dataset {
    Dataset {
        meta: cgm_meta(n),
        rows: (0..rows)
            .map(|_| Row {
                key: (0..4).map(|_| rng.random_range(0.0..100.0)).collect(),
                value: (0..n)
                    .map(|_| {
                        if rng.random::<f64>() < sentinel_prob {
                            f64::NEG_INFINITY
                        } else {
                            rng.random_range(-140.0..-60.0)
                        }
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// IDW-KNN by full sort, per band skipping `-inf` neighbors.
pub fn oracle_idw(ds: &Dataset, key: &[f64], k: usize, p: f64) -> (Vec<f64>, Vec<usize>) {
    let mut d: Vec<(f64, usize)> = ds
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let s: f64 = r.key.iter().zip(key).map(|(a, b)| (a - b) * (a - b)).sum();
            (s.sqrt(), i)
        })
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    d.truncate(k);
    if d[0].0 < 1e-9 {
        return (ds.rows[d[0].1].value.clone(), vec![d[0].1]);
    }
    let n = ds.rows[0].value.len();
    let out = (0..n)
        .map(|c| {
            let (mut num, mut den) = (0.0, 0.0);
            for &(dist, i) in &d {
                let v = ds.rows[i].value[c];
                if v.is_finite() {
                    let w = 1.0 / dist.powf(p);
                    num += w * v;
                    den += w;
                }
            }
            if den > 0.0 {
                num / den
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    (out, d.iter().map(|x| x.1).collect())
}
