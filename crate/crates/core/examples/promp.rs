//! Synthesize demonstrations, fit a ProMP, compare basis counts, and condition
//! the model on a new start position.
//!
//! `cargo run --release --example promp`

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use residual_promp::demos::{self, DemoGenConfig};
use residual_promp::promp::{basis_grid_search, fit, FitConfig};

fn main() -> residual_promp::Result<()> {
    let demo_cfg = DemoGenConfig::default();
    let demos = demos::generate(&demo_cfg, &mut ChaCha8Rng::seed_from_u64(0))?;

    // round trip through the CSV format the CLI reads with --demos
    let dir = std::env::temp_dir().join("residual-promp-example-demos");
    demos::save_demo_dir(&demos, &dir)?;
    let demos = demos::load_demo_dir(&dir)?;
    println!("{} demonstrations of {} samples in {}", demos.len(), demos[0].len(), dir.display());

    let fit_cfg = FitConfig::default();
    for (n, ll) in basis_grid_search(&demos, &[4, 6, 8, 10, 12, 16], &fit_cfg, 1e-3)? {
        println!("n_basis {n:>2}: log-likelihood {ll:>10.1}");
    }

    let model = fit(&demos, &fit_cfg)?;
    println!("\nphase   mean (mm)                      std (mm)");
    for z in [0.0, 0.25, 0.5, 0.75, 0.85, 1.0] {
        let (m, s) = (model.mean_at(z) * 1e3, model.std_at(z) * 1e3);
        println!("{z:.2}   [{:7.2} {:7.2} {:7.2}]   [{:5.2} {:5.2} {:5.2}]", m[0], m[1], m[2], s[0], s[1], s[2]);
    }

    let start = model.mean_at(0.0) + DVector::from_column_slice(&[0.004, -0.003, 0.0]);
    println!("\nstart inside the 2σ region: {}", model.in_confidence_region(0.0, &start, 2.0));
    let post = model.condition(0.0, &start, &(DMatrix::identity(3, 3) * 1e-8))?;
    for z in [0.0, 0.5, 1.0] {
        let shift = (post.mean_at(z) - model.mean_at(z)) * 1e3;
        println!("conditioned mean shift at z = {z:.1}: [{:6.3} {:6.3} {:6.3}] mm", shift[0], shift[1], shift[2]);
    }
    Ok(())
}
