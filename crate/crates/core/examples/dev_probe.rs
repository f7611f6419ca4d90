//! Scratch measurements used while tuning steps and meshes. Not part of the
//! deliverable surface; run with `cargo run -p geomlab-core --example dev_probe`.

use geomlab_core::chart::{charts, nabla_rm_norm};
use geomlab_core::mesh::{icosphere, mesh_mean_curvature, sphere_mesh, triangulate, TriangleMesh};
use geomlab_core::surface::patches;

fn worst_h(m: &TriangleMesh, exclude_near_pole: bool) -> (f64, f64) {
    let c = mesh_mean_curvature(m);
    let mut worst = 0.0f64;
    let mut worst_all = 0.0f64;
    for i in 0..m.vertices.len() {
        if !c.valid[i] {
            continue;
        }
        let e = (c.mean[i] - 1.0).abs();
        worst_all = worst_all.max(e);
        let z = m.vertices[i].z.abs();
        if !exclude_near_pole || z < 0.99 {
            worst = worst.max(e);
        }
    }
    (worst_all, worst)
}

fn main() {
    println!("== lat/long sphere ladder ==");
    for &(nu, nv) in &[(24, 12), (48, 24), (96, 48)] {
        let m = sphere_mesh(1.0, nu, nv).unwrap();
        let (all, nopole) = worst_h(&m, true);
        println!("nu={nu:3} nv={nv:3}: max|H-1| all={all:.6}  away-from-pole={nopole:.6}");
    }
    println!("== icosphere ladder ==");
    for k in 1..=5 {
        let m = icosphere(1.0, k);
        let (all, _) = worst_h(&m, false);
        println!("subdiv={k}: verts={} max|H-1|={all:.8}", m.vertices.len());
    }
    println!("== sphere band ladder (wrap_u, interior only) ==");
    for &(nu, nv) in &[(24, 8), (48, 16), (96, 32)] {
        let patch = patches::sphere(1.0);
        let band = geomlab_core::surface::ParametricPatch::with_jet(
            "band",
            geomlab_core::surface::Rect::new(0.0, 2.0 * std::f64::consts::PI, -0.7, 0.7),
            Box::new({
                let p = patches::sphere(1.0);
                move |u, v| p.position(u, v)
            }),
            Box::new(move |u, v| patch.jet(u, v)),
        );
        let m = triangulate(&band, nu, nv, true, false).unwrap();
        let (all, _) = worst_h(&m, false);
        println!("nu={nu:3} nv={nv:3}: max|H-1|={all:.8}");
    }
    println!("== nabla_rm tuning ==");
    let x = [0.05, -0.04, 0.03, 0.02];
    for name in ["s4", "fs", "s2xs2"] {
        let c = charts::by_name(name).unwrap();
        for h_out in [5e-3, 1e-2, 2e-2, 4e-2] {
            let v = nabla_rm_norm(&c, &x, 1e-3, h_out).unwrap();
            println!("{name}: h_outer={h_out:.0e} -> {v:.3e}");
        }
    }
    let c = charts::perturbed();
    let v = nabla_rm_norm(&c, &[0.3, 0.1, 0.2, -0.1], 1e-3, 1e-2).unwrap();
    println!("perturbed: {v:.3e}");
}
