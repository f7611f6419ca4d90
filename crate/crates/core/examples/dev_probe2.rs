use geomlab_core::chart::{charts, curvature_at, einstein_hilbert};

fn main() {
    let fs = std::sync::Arc::new(charts::fubini_study());
    for res in [4, 6, 8] {
        let v = einstein_hilbert(&fs, res).unwrap();
        println!("fs res={res}: {v:.10}");
    }
    let sc = std::sync::Arc::new(fs.scaled(1.7));
    for res in [4, 6, 8] {
        let v = einstein_hilbert(&sc, res).unwrap();
        println!("fs*1.7 res={res}: {v:.10}");
    }
    // pointwise scale commutation of the curvature oracle
    for r in [0.5, 5.0, 20.0, 45.0] {
        let x = [r / 2.0, r / 2.0, r / 2.0, r / 2.0];
        let p1 = curvature_at(&fs, &x, 1e-3, false).unwrap();
        let p2 = curvature_at(&sc, &x, 1e-3, false).unwrap();
        println!(
            "x~{r}: R={:.8e} scaled*1.7={:.8e} rel diff {:.2e}",
            p1.scalar,
            p2.scalar,
            (p1.scalar - 1.7 * p2.scalar).abs() / p1.scalar.abs().max(1e-300)
        );
    }
}
