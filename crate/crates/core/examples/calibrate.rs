//! Calibration sweep for the ladder gates.
//!
//! Runs a ladder config with many replicates on seeds disjoint from the
//! shipped ones, then bootstraps the median over `R` replicates, `R` being
//! the shipped replicate count, and prints the 0.1% and 99.9% quantiles of
//! each median statistic as a thresholds block.
//!
//! ```text
//! cargo run --release -p bbm-core --example calibrate -- configs/ladder_1.json 140 9100000
//! ```

use std::path::PathBuf;

use bbm_core::harness::{self, ExperimentConfig, Overrides};
use bbm_core::sim::rng::{ParticleRng, StreamDomain};

const RESAMPLES: usize = 20_000;
const TAIL: f64 = 0.001;

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 4 {
        eprintln!("usage: calibrate <config> <sweep replicates> <sweep base seed>");
        std::process::exit(2);
    }
    let shipped = ExperimentConfig::load(&PathBuf::from(&args[1])).expect("config");
    let sweep_n: usize = args[2].parse().expect("replicate count");
    let sweep_seed: u64 = args[3].parse().expect("seed");
    let shipped_seeds = shipped.base_seed..shipped.base_seed + shipped.replicates as u64;
    assert!(
        !shipped_seeds.contains(&sweep_seed) && !(sweep_seed..sweep_seed + sweep_n as u64).contains(&shipped.base_seed),
        "sweep seeds overlap the shipped seeds"
    );
    let cfg = shipped
        .clone()
        .apply(&Overrides {
            replicates: Some(sweep_n),
            base_seed: Some(sweep_seed),
            ..Default::default()
        })
        .expect("overrides");
    let out = harness::simulate(&cfg, harness::workers_from_env().expect("workers")).expect("sweep");
    let t_final = out.aggregate.last().expect("snapshots").time;
    let last: Vec<_> = out.rows.iter().filter(|r| r.time == t_final).collect();

    let stats: [(&str, Vec<Option<f64>>); 5] = [
        (
            "ratio_dn",
            last.iter().map(|r| r.ratio_dn.first().copied().flatten()).collect(),
        ),
        ("zeta_ks", last.iter().map(|r| r.zeta_ks).collect()),
        ("xi_ks", last.iter().map(|r| r.xi_ks).collect()),
        ("max_over_l_star", last.iter().map(|r| r.max_over_l_star).collect()),
        ("min_over_l_dagger", last.iter().map(|r| r.min_over_l_dagger).collect()),
    ];
    let r = shipped.replicates;
    let mut rng = ParticleRng::new(sweep_seed, StreamDomain::Initial, u64::MAX, 0);
    println!(
        "sweep: {} replicates, {} exploded, resampling medians of {r}",
        sweep_n,
        out.exploded.len()
    );
    let mut blocks = Vec::new();
    for (name, values) in &stats {
        // Resample whole replicates; an extinct replicate drops out of the median.
        let mut medians = Vec::with_capacity(RESAMPLES);
        for _ in 0..RESAMPLES {
            let mut pick: Vec<f64> = (0..r)
                .filter_map(|_| values[(rng.uniform() * values.len() as f64) as usize % values.len()])
                .collect();
            if !pick.is_empty() {
                medians.push(median(&mut pick));
            }
        }
        medians.sort_by(f64::total_cmp);
        let q = |p: f64| medians[((medians.len() - 1) as f64 * p).round() as usize];
        let mut all: Vec<f64> = values.iter().flatten().copied().collect();
        println!(
            "{name}: defined {} of {}, pooled median {:.4}, bootstrap median {:.4}, band [{:.4}, {:.4}]",
            all.len(),
            values.len(),
            median(&mut all),
            q(0.5),
            q(TAIL),
            q(1.0 - TAIL)
        );
        blocks.push(format!(
            "\"{name}\": {{ \"lo\": {:.4}, \"hi\": {:.4} }}",
            q(TAIL),
            q(1.0 - TAIL)
        ));
    }
    println!("\"thresholds\": {{\n  {}\n}}", blocks.join(",\n  "));
}
