use proptest::prelude::*;
use vectorplus_core::assign::{assign, total};
use vectorplus_core::data::{median_bin, ActivityRow, ActivityTable, Provenance};
use vectorplus_core::encoder::contrastive_loss;
use vectorplus_core::eval::metrics;
use vectorplus_core::floats;
use vectorplus_core::generate::{hill_climb, ClimbConfig};
use vectorplus_core::latent::{self, GmmConfig};
use vectorplus_core::linalg::Matrix;
use vectorplus_core::rng::seeded;

fn points(max_n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), 12..max_n)
}

fn brute_force(phi: &Matrix) -> f64 {
    fn go(phi: &Matrix, row: usize, used: &mut Vec<bool>) -> f64 {
        if row == phi.rows {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        for c in 0..phi.cols {
            if !used[c] {
                used[c] = true;
                best = best.max(phi.get(row, c) + go(phi, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    go(phi, 0, &mut vec![false; phi.cols])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contrastive_loss_is_nonnegative_and_order_free(
        z in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 2..8),
        seed in any::<u64>(),
    ) {
        let labels: Vec<usize> = (0..z.len()).map(|i| (seed >> (i % 64)) as usize % 2 + 1).collect();
        let loss = contrastive_loss(&z, &labels, 1.0, 1).unwrap();
        prop_assert!(loss >= 0.0);
        let mut zr = z.clone();
        let mut lr = labels.clone();
        zr.reverse();
        lr.reverse();
        let again = contrastive_loss(&zr, &lr, 1.0, 1).unwrap();
        prop_assert!((loss - again).abs() <= 1e-12 * (1.0 + loss));
    }

    #[test]
    fn median_bin_balances_classes(values in prop::collection::vec(0u8..12, 2..60)) {
        let rows = values
            .iter()
            .enumerate()
            .map(|(i, &v)| ActivityRow { smiles: format!("C{}", "C".repeat(i)), ic50: 1.0, log_ic50: Some(v as f64) })
            .collect();
        let table = ActivityTable { rows, provenance: Provenance::default() };
        let ds = median_bin(&table, false).unwrap();
        let counts = ds.class_counts();
        let mut sorted: Vec<u8> = values.clone();
        sorted.sort();
        let median = sorted[(sorted.len() - 1) / 2];
        // at_median ≥ 1; the inclusive lower median keeps every tie in class 1
        let at_median = values.iter().filter(|&&v| v == median).count();
        prop_assert!(counts[0] >= counts[1]);
        prop_assert!(counts[0] - counts[1] < 2 * at_median);
    }

    #[test]
    fn em_stays_on_the_simplex_and_never_decreases(z in points(60, 2), k in 1usize..4, seed in any::<u64>()) {
        let fit = latent::fit(&z, k, &GmmConfig { seed, ..GmmConfig::default() }).unwrap();
        for w in fit.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "trace dropped {} -> {}", w[0], w[1]);
        }
        let sum: f64 = fit.params.weights.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(fit.params.weights.iter().all(|&w| w >= 0.0));
        prop_assert!(fit.params.factors().is_ok());
        for c in &fit.params.covariances {
            for i in 0..c.rows {
                for j in 0..c.cols {
                    prop_assert_eq!(c.get(i, j), c.get(j, i));
                }
            }
        }
        let resp = latent::e_step(&fit.params, &z).unwrap();
        for i in 0..resp.r.rows {
            let s: f64 = resp.r.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn affinity_columns_count_class_members(z in points(40, 2), seed in any::<u64>()) {
        let fit = latent::fit(&z, 2, &GmmConfig { seed, ..GmmConfig::default() }).unwrap();
        let resp = latent::e_step(&fit.params, &z).unwrap();
        let labels: Vec<usize> = (0..z.len()).map(|i| i % 3 + 1).collect();
        let phi = latent::affinity(&resp, &labels, 3);
        for c in 0..3 {
            let col: f64 = (0..phi.rows).map(|k| phi.get(k, c)).sum();
            let members = labels.iter().filter(|&&l| l == c + 1).count() as f64;
            prop_assert!((col - members).abs() < 1e-10);
        }
    }

    #[test]
    fn assignment_is_an_optimal_permutation(k in 1usize..6, cells in prop::collection::vec(-5i32..5, 36)) {
        let mut phi = Matrix::zeros(k, k);
        for (v, c) in phi.data.iter_mut().zip(&cells) {
            *v = *c as f64;
        }
        let gamma = assign(&phi).unwrap();
        let mut seen = gamma.clone();
        seen.sort();
        prop_assert_eq!(seen, (0..k).collect::<Vec<_>>());
        prop_assert_eq!(total(&phi, &gamma), brute_force(&phi));
    }

    #[test]
    fn metric_fractions_chain(picks in prop::collection::vec(0usize..8, 0..30)) {
        let pool = ["CCO", "OCC", "c1ccccc1", "CC(", "CCN", "C1CC", "CCCl", "N#N"];
        let generated: Vec<&str> = picks.iter().map(|&i| pool[i]).collect();
        let m = metrics(&generated, &["CCO", "CCN"]).unwrap();
        prop_assert_eq!(m.total, generated.len());
        prop_assert!(m.valid <= m.total);
        prop_assert!(m.unique <= m.valid);
        prop_assert!(m.novel <= m.unique);
        for f in [m.validity, m.uniqueness, m.novelty] {
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn hill_climb_rewards_strictly_increase(z0 in prop::collection::vec(-2.0f64..2.0, 3), seed in any::<u64>()) {
        // chain length grows with the first coordinate; a negative second
        // coordinate decodes to an unclosed ring
        let decode = |z: &[f64]| -> vectorplus_core::Result<String> {
            let n = ((z[0] + 3.0) * 2.0).max(1.0) as usize;
            Ok(if z[1] < -1.5 { "C1CC".to_string() } else { "C".repeat(n) })
        };
        let score = |s: &str| vectorplus_chem::parse_smiles(s).ok().map(|m| m.atoms().len() as u32);
        let refs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.3, 0.1 * i as f64, -0.2]).collect();
        let cfg = ClimbConfig { steps: 15, knn: 3, alpha: 1.0 };
        let out = hill_climb(&z0, decode, score, &cfg, &refs, &mut seeded(seed)).unwrap();
        prop_assert!(out.accepted_rewards.windows(2).all(|w| w[1] > w[0]));
        for p in out.proposals.iter().filter(|p| p.accepted) {
            prop_assert!(p.valid && vectorplus_chem::is_valid(&p.smiles));
        }
        if !out.initial_invalid {
            prop_assert_eq!(decode(&out.z).unwrap(), out.smiles);
        }
    }

    #[test]
    fn float_text_round_trips_exactly(v in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..20)) {
        let back = floats::parse(&floats::format(&v)).unwrap();
        prop_assert_eq!(back.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn ties_at_the_median_can_put_every_row_in_class_1() {
    let rows = [0.0, 0.0, 1.0, 1.0, 1.0]
        .iter()
        .enumerate()
        .map(|(i, &v)| ActivityRow {
            smiles: "C".repeat(i + 1),
            ic50: 1.0,
            log_ic50: Some(v),
        })
        .collect();
    let ds = median_bin(
        &ActivityTable {
            rows,
            provenance: Provenance::default(),
        },
        false,
    )
    .unwrap();
    assert_eq!(ds.class_counts(), vec![5, 0]);
}
