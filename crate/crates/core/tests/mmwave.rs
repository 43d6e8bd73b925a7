mod common;

use ckm::mmwave::{
    beamformed_rate, channel_from_paths, default_p_over_n, inner, perturb_location, reconstruct_channel,
    select_beam, steering_vector, upa_response, BeamCodebook, UpaGeometry,
};
use ckm::propagation::Path;
use ckm::scene::Point3;
use ckm::store::PathTriple;
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn random_path(r: &mut impl Rng) -> Path {
    Path {
        gain_db: r.random_range(-120.0..-70.0),
        phase_rad: r.random_range(0.0..2.0 * PI),
        delay_s: 1e-7,
        zenith_aod_rad: r.random_range(0.1..PI - 0.1),
        azimuth_aod_rad: r.random_range(-PI..PI),
        bounces: 0,
    }
}

/// Σ a_l e^{iψ_l} √N a(θ_l, φ_l), one element at a time; the √N cancels the
/// steering normalization.
fn oracle_channel(paths: &[Path], n_y: usize, n_z: usize) -> Vec<Complex64> {
    let mut h = Vec::new();
    for my in 0..n_y {
        for mz in 0..n_z {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in paths {
                let u = p.zenith_aod_rad.sin() * p.azimuth_aod_rad.sin();
                let v = p.zenith_aod_rad.cos();
                let amp = 10f64.powf(p.gain_db / 20.0);
                acc += Complex64::from_polar(amp, p.phase_rad + PI * (my as f64 * u + mz as f64 * v));
            }
            h.push(acc);
        }
    }
    h
}

#[test]
fn steering_inner_product_matches_script() {
    let mut r = rng(41);
    for _ in 0..200 {
        let (n_y, n_z) = (r.random_range(1..12), r.random_range(1..6));
        let geom = UpaGeometry::new(n_y, n_z).unwrap();
        let a = (r.random_range(0.0..PI), r.random_range(-PI..PI));
        let b = (r.random_range(0.0..PI), r.random_range(-PI..PI));
        let got = inner(&upa_response(&geom, a.0, a.1), &upa_response(&geom, b.0, b.1));
        let want = steering_inner(n_y, n_z, a, b);
        assert!((got - want).norm() < 1e-12);
    }
}

#[test]
fn codebook_sizes_and_norms() {
    for (n_y, n_z, count) in [(1, 1, 16), (40, 5, 3200)] {
        let geom = UpaGeometry::new(n_y, n_z).unwrap();
        let book = BeamCodebook::build(&geom);
        assert_eq!(book.len(), count);
        for i in (0..book.len()).step_by(37) {
            let norm: f64 = book.beam(i).iter().map(|c| c.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn single_path_selects_nearest_grid_point() {
    let mut r = rng(42);
    let geom = UpaGeometry::new(10, 5).unwrap();
    let book = BeamCodebook::build(&geom);
    let (su, sv) = book.grid_step();
    for _ in 0..300 {
        let (u, v) = (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let h = steering_vector(&geom, u, v);
        let c = select_beam(&book, &h).unwrap();
        let (gu, gv) = book.grid_point(c.index);
        assert!((gu - u).abs() <= su / 2.0 + 1e-12, "u {u} picked {gu}");
        assert!((gv - v).abs() <= sv / 2.0 + 1e-12, "v {v} picked {gv}");
    }
}

#[test]
fn zero_channel_flags_no_signal() {
    let geom = UpaGeometry::new(4, 2).unwrap();
    let book = BeamCodebook::build(&geom);
    let c = select_beam(&book, &vec![Complex64::new(0.0, 0.0); 8]).unwrap();
    assert!(c.no_signal);
    assert_eq!(c.index, 0);
    assert!(select_beam(&book, &vec![Complex64::new(1.0, 0.0); 7]).is_err());
}

#[test]
fn reference_channel_gives_ten_bits() {
    let fc = 28e9;
    let geom = UpaGeometry::new(20, 5).unwrap();
    let g = friis_db(100.0, fc);
    let p = Path { gain_db: g, phase_rad: 0.3, delay_s: 0.0, zenith_aod_rad: 1.2, azimuth_aod_rad: 0.4, bounces: 0 };
    let h = channel_from_paths(&[p], &geom);
    let w = upa_response(&geom, 1.2, 0.4);
    assert!((beamformed_rate(&h, &w, default_p_over_n(fc)) - 10.0).abs() < 1e-9);
}

#[test]
fn rate_matches_hand_computation() {
    let mut r = rng(43);
    let geom = UpaGeometry::new(6, 3).unwrap();
    for _ in 0..50 {
        let paths: Vec<Path> = (0..3).map(|_| random_path(&mut r)).collect();
        let h = oracle_channel(&paths, 6, 3);
        let (th, ph) = (r.random_range(0.0..PI), r.random_range(-PI..PI));
        let w = upa_response(&geom, th, ph);
        let mut acc = Complex64::new(0.0, 0.0);
        for (wi, hi) in w.iter().zip(&h) {
            acc += wi.conj() * hi;
        }
        let pn = 1e11;
        let want = (1.0 + pn * acc.norm_sqr()).log2();
        assert!((beamformed_rate(&h, &w, pn) - want).abs() < 1e-9);
    }
}

#[test]
fn reconstructed_channel_matches_oracle() {
    let mut r = rng(44);
    let geom = UpaGeometry::new(8, 4).unwrap();
    for count in 0..=3 {
        let mut paths: Vec<Path> = (0..count).map(|_| random_path(&mut r)).collect();
        paths.sort_by(|a, b| b.gain_db.total_cmp(&a.gain_db));
        let got = reconstruct_channel(&PathTriple::from_paths(&paths), &geom);
        let want = oracle_channel(&paths, 8, 4);
        let scale: f64 = want.iter().map(|c| c.norm()).fold(1e-300, f64::max);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() <= 1e-12 * scale);
        }
        assert_eq!(got, channel_from_paths(&paths, &geom));
    }
}

#[test]
fn localization_error_is_rayleigh() {
    let mut r = rng(45);
    let loc = Point3::new(10.0, -4.0, 1.5);
    let draws = 100_000;
    for mean in [1.0, 5.0] {
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..draws {
            let p = perturb_location(&loc, mean, &mut r).unwrap();
            assert_eq!(p.z, loc.z);
            let d = p.distance_2d(&loc);
            sum += d;
            sq += d * d;
        }
        let m = sum / draws as f64;
        assert!((m - mean).abs() / mean < 0.02, "mean {m}");
        // E[r²] = 2σ² = 4·mean²/π
        let want_sq = 4.0 * mean * mean / PI;
        assert!((sq / draws as f64 - want_sq).abs() / want_sq < 0.02);
    }
    assert_eq!(perturb_location(&loc, 0.0, &mut r).unwrap(), loc);
    assert!(perturb_location(&loc, -1.0, &mut r).is_err());
}

proptest! {
    #[test]
    fn selection_ignores_global_phase_and_scale(seed in 0u64..1000, phase in 0.0..2.0 * PI, log_scale in -6.0..6.0f64) {
        let mut r = rng(seed);
        let geom = UpaGeometry::new(r.random_range(1..10), r.random_range(1..5)).unwrap();
        let book = BeamCodebook::build(&geom);
        let paths: Vec<Path> = (0..3).map(|_| random_path(&mut r)).collect();
        let h = channel_from_paths(&paths, &geom);
        let k = Complex64::from_polar(10f64.powf(log_scale), phase);
        let scaled: Vec<Complex64> = h.iter().map(|c| c * k).collect();
        let a = select_beam(&book, &h).unwrap();
        let b = select_beam(&book, &scaled).unwrap();
        // near-ties may flip under rounding; the picked gains must agree
        let ga = inner(book.beam(b.index), &h).norm();
        prop_assert!((ga - a.gain).abs() <= 1e-9 * a.gain);
    }

    #[test]
    fn matched_filter_is_an_upper_bound(seed in 0u64..1000) {
        let mut r = rng(seed);
        let geom = UpaGeometry::new(r.random_range(1..10), r.random_range(1..5)).unwrap();
        let book = BeamCodebook::build(&geom);
        let h = channel_from_paths(&[random_path(&mut r), random_path(&mut r)], &geom);
        let c = select_beam(&book, &h).unwrap();
        let norm: f64 = h.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(c.gain <= norm * (1.0 + 1e-12));
        for i in 0..book.len() {
            prop_assert!(inner(book.beam(i), &h).norm() <= c.gain * (1.0 + 1e-12));
        }
    }
}
