//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
//! run with `cargo test --test acceptance -- --nocapture` to see them.

mod common;

use anosov_core::birkhoff;
use anosov_core::cocycle::sample_volume_words;
use anosov_core::geometry::ModelParams;
use anosov_core::hyperbolicity;
use anosov_core::linalg::Mat2;
use anosov_core::report::{verify_all, RunEcho};
use anosov_core::sections::{catmap_fixture, CatmapFixture};
use anosov_core::surgery;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

fn criterion<F>(number: u8, name: &str, limit: Option<Duration>, body: F)
where
    F: FnOnce() + std::panic::UnwindSafe,
{
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(body);
    let elapsed = start.elapsed();
    match outcome {
        Ok(()) => {
            if let Some(limit) = limit {
                if elapsed >= limit {
                    println!(
                        "acceptance criterion {} ({}): FAIL (runtime {:?} over limit {:?})",
                        number, name, elapsed, limit
                    );
                    panic!("criterion {} exceeded its runtime limit", number);
                }
            }
            println!("acceptance criterion {} ({}): PASS [{:?}]", number, name, elapsed);
        }
        Err(cause) => {
            println!("acceptance criterion {} ({}): FAIL", number, name);
            std::panic::resume_unwind(cause);
        }
    }
}

fn fixture() -> &'static (CatmapFixture, Duration) {
    static FIXTURE: OnceLock<(CatmapFixture, Duration)> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let start = Instant::now();
        let fixture = catmap_fixture(10_000, 12, 20240, 256).expect("fixture runs");
        (fixture, start.elapsed())
    })
}

fn default_params() -> ModelParams {
    ModelParams::new(0.5, 1, -1, 1, 0.4, 0.1).unwrap()
}

#[test]
fn criterion_1_volume_preservation() {
    criterion(1, "volume preservation", Some(Duration::from_secs(5)), || {
        let p = default_params();
        for i in 0..10_000 {
            let r = p.r2 * (i as f64 + 0.5) / 10_000.0;
            let err = (surgery::phi_matrix_full(&p, r).det() - 1.0).abs();
            assert!(err <= 1e-12, "glue factor determinant drift {} at r = {}", err, r);
        }
        let words = sample_volume_words(&p, 10_000, 2, 20240).unwrap();
        for (i, w) in words.iter().enumerate() {
            assert!(w.factors.len() <= 40);
            let err = surgery::volume_check(&p, w);
            assert!(err <= 1e-9, "word {} determinant drift {}", i, err);
        }
    });
}

#[test]
fn criterion_2_unipotent_su_structure() {
    criterion(2, "unipotent su-structure", Some(Duration::from_secs(1)), || {
        let p = default_params();
        for i in 0..10_000 {
            let r = p.r2 * (i as f64 + 0.5) / 10_000.0;
            let m = surgery::phi_matrix_su(&p, r);
            assert!((m.trace() - 2.0).abs() <= 1e-12);
            let nilp = m.sub(&Mat2::IDENTITY);
            assert!(nilp.mul(&nilp).frobenius_norm() <= 1e-10);
        }
    });
}

#[test]
fn criterion_3_transit_oracle() {
    criterion(3, "transit closed form vs integration", Some(Duration::from_secs(5)), || {
        let p = default_params();
        for i in 0..1_000 {
            // Log-spaced entries across three decades of the annulus.
            let r = p.r2 * 10f64.powf(-3.0 * (i as f64 + 0.5) / 1_000.0);
            let tau = anosov_core::affine_flow::transit_time(&p, r);
            let numeric = common::rk4_transit_time(&p, r, 5e-3);
            assert!(
                (tau - numeric).abs() <= 1e-6,
                "entry r = {}: closed form {} vs numeric {}",
                r, tau, numeric
            );
        }
    });
}

#[test]
fn criterion_4_cone_feasibility() {
    criterion(4, "cat-map cone feasibility", Some(Duration::from_secs(60)), || {
        let (fixture, build_time) = fixture();
        assert!(build_time < &Duration::from_secs(60), "fixture took {:?}", build_time);
        assert!((fixture.lambda - 0.381966).abs() < 1e-6);
        assert!((fixture.spectral_radius - (3.0 + 5.0f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(fixture.validation.ok());
        assert_eq!(fixture.blowdown[0].prongs, 2);
        assert!(!fixture.blowdown[0].singular);
        assert_eq!(fixture.first_return_agreement, Some(true));
        let search = &fixture.search;
        assert!(search.feasible, "no feasible radii found: {:?}", search.failing_check);
        assert!(search.halvings_used.unwrap() < 12);

        let by_name = |name: &str| {
            search
                .suite
                .iter()
                .find(|r| r.check == name)
                .unwrap_or_else(|| panic!("check {} missing", name))
        };
        let inv = by_name("cone-invariance");
        assert!(inv.passed());
        assert!(inv.extras["qualifying_words"] > 0.0);

        let contraction = by_name("slope-contraction");
        assert!(contraction.passed());
        assert!(contraction.extras["measured_l0_u"].is_finite());

        let expansion = by_name("expansion");
        assert!(expansion.passed());
        let mu_measured = expansion.extras["mu_measured"];
        let mu_formula = expansion.extras["mu_formula"];
        assert!(mu_measured > 1.0);
        assert!(mu_measured >= 0.9 * mu_formula);
        assert!(mu_formula > 1.0 && mu_formula < 1.0 / fixture.lambda);
    });
}

#[test]
fn criterion_5_strong_suite_and_splitting() {
    criterion(5, "strong cones and splitting extraction", None, || {
        let (fixture, _) = fixture();
        let search = &fixture.search;
        assert!(search.feasible);
        for name in ["strong-cone-invariance", "strong-slope-contraction", "strong-expansion"] {
            let report = search.suite.iter().find(|r| r.check == name).unwrap();
            assert!(report.passed(), "{} failed", name);
        }
        let strong_expansion =
            search.suite.iter().find(|r| r.check == "strong-expansion").unwrap();
        assert!(strong_expansion.extras["mu_strong"] > 1.0);

        let splitting = fixture.splitting.as_ref().expect("splitting ran");
        assert!(splitting.converged);
        let t = search.constants.as_ref().unwrap().t_threshold();
        let bound = fixture.lambda.powf(2.0 * t) + 0.05;
        for record in &splitting.history {
            assert!(
                record.contraction_factor <= bound,
                "iteration {} contracted by {} > {}",
                record.iteration, record.contraction_factor, bound
            );
        }
        assert!(splitting.flow_axis_ok);
        assert!(splitting.fu_diameter < 1e-60);
        assert!(splitting.fs_diameter < 1e-60);
    });
}

#[test]
fn criterion_6_combinatorics_exhaustive() {
    criterion(6, "combinatorics over coprime pairs", Some(Duration::from_secs(5)), || {
        let gcd = |mut a: u64, mut b: u64| {
            while b != 0 {
                (a, b) = (b, a % b);
            }
            a
        };
        for n in 1..=50u32 {
            for m_abs in 1..=50i64 {
                if gcd(n as u64, m_abs as u64) != 1 {
                    continue;
                }
                for m in [-m_abs, m_abs] {
                    let perm = birkhoff::quadrant_permutation(n, m).unwrap();
                    // Shift preserves residue classes mod 4.
                    for j in 0..4 * n as u64 {
                        assert_eq!(perm.apply(j) % 4, j % 4);
                    }
                    // Formula order matches iterated application.
                    assert_eq!(perm.order(), n as u64);
                    let mut j = 1 % (4 * n as u64);
                    for step in 1..=n as u64 {
                        j = perm.apply(j);
                        if step < n as u64 {
                            assert_ne!(j, 1 % (4 * n as u64));
                        }
                    }
                    assert_eq!(j, 1 % (4 * n as u64));
                    // k l = 1 mod n ties the two permutation descriptions.
                    if n > 1 {
                        let k = birkhoff::kth_power_shift(n, m).unwrap();
                        assert_eq!((k * perm.l) % n as u64, 1);
                    }
                }
            }
        }
        // Signed-crossing oracle across 20 discretized curve classes.
        let classes: [(i64, i64); 20] = [
            (1, 0), (0, 1), (1, 1), (-1, 1), (2, 1), (1, 2), (-2, 3), (3, -2), (5, 2), (2, 5),
            (-3, -4), (4, -3), (7, 1), (1, -7), (6, 5), (-5, 6), (8, 3), (3, 8), (-9, 2), (2, 9),
        ];
        for (n, m) in [(1u32, 1i64), (2, -1), (3, 2), (5, -3), (7, 4)] {
            for (pc, qc) in classes {
                assert_eq!(
                    birkhoff::crossing_count_oracle(pc, qc, n, m, 4096),
                    birkhoff::homological_intersection(pc, qc, n, m),
                    "class ({}, {}) against ({}, {})",
                    pc, qc, n, m
                );
            }
        }
    });
}

#[test]
fn criterion_7_helicoid_transversality() {
    criterion(7, "helicoid transversality", None, || {
        let (fixture, _) = fixture();
        let report = fixture.transversality.expect("transversality ran");
        assert_eq!(report.grid, 200);
        assert!(report.pass);
        assert!(report.max_det < 0.0);
        assert!(report.horizontal_auto_pass);
        // The deliberately wrong-signature build is detected.
        let wrong = fixture.wrong_signature_max_det.expect("wrong-signature probe ran");
        assert!(wrong > 0.0, "wrong-signature build was not detected: {}", wrong);
    });
}

#[test]
fn criterion_8_deterministic_reports() {
    criterion(8, "byte-identical reports", None, || {
        let p = default_params();
        let echo = || RunEcho {
            lambda: p.lambda,
            n: p.n,
            m: p.m,
            p: p.p,
            r1: p.r1,
            r2: p.r2,
            r1_init: p.r1,
            seed: 20240,
            samples: 500,
            max_factors: 9,
            grid: 64,
            mesh: 64,
            tol_boundary: 1e-12,
            checks: hyperbolicity::check_names().iter().map(|s| s.to_string()).collect(),
        };
        let a = verify_all(&p, echo()).unwrap().to_json();
        let b = verify_all(&p, echo()).unwrap().to_json();
        assert!(!a.is_empty());
        assert_eq!(a, b, "reports differ between identical runs");

        let fixture_a =
            serde_json::to_string(&catmap_fixture(300, 12, 7, 64).unwrap()).unwrap();
        let fixture_b =
            serde_json::to_string(&catmap_fixture(300, 12, 7, 64).unwrap()).unwrap();
        assert_eq!(fixture_a, fixture_b);
    });
}
