//! Parametric surfaces in flat 3-space: immersed patches, fundamental forms,
//! principal/mean/Gauss curvature, and the minimal surface equation.
//!
//! Sign conventions, fixed once for the whole crate: the unit normal comes
//! from `du x dv` of the parameterization, the second form is
//! `e = -<X_uu, n>` (so the unit sphere with outward normal has k1 = k2 = +1
//! and H = +1), and `H = (k1 + k2) / 2`.

use nalgebra::Vector3;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Relative floor on `EG - F^2` below which a parameter point is treated as a
/// failed immersion.
pub const IMMERSION_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("degenerate immersion at (u,v)=({u},{v}): EG-F^2 = {eg_f2:e} below floor")]
    DegenerateImmersion { u: f64, v: f64, eg_f2: f64 },
    #[error("parameter point ({u},{v}) outside patch domain")]
    OutsideDomain { u: f64, v: f64 },
}

/// Closed parameter rectangle `[u0,u1] x [v0,v1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Rect {
    pub fn new(u0: f64, u1: f64, v0: f64, v1: f64) -> Self {
        assert!(u1 > u0 && v1 > v0, "empty parameter rectangle");
        Rect { u0, u1, v0, v1 }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u0 && u <= self.u1 && v >= self.v0 && v <= self.v1
    }

    pub fn span(&self) -> f64 {
        (self.u1 - self.u0).max(self.v1 - self.v0)
    }
}

/// Position plus first and second partial derivatives at a parameter point.
#[derive(Debug, Clone, Copy)]
pub struct PatchJet {
    pub p: Vec3,
    pub du: Vec3,
    pub dv: Vec3,
    pub duu: Vec3,
    pub duv: Vec3,
    pub dvv: Vec3,
}

type PosFn = Box<dyn Fn(f64, f64) -> Vec3 + Send + Sync>;
type JetFn = Box<dyn Fn(f64, f64) -> PatchJet + Send + Sync>;

/// A smooth immersion of a parameter rectangle into R^3.
///
/// Derivatives are analytic when the patch was built with [`ParametricPatch::with_jet`],
/// otherwise central finite differences with step `1e-5 * domain span`.
pub struct ParametricPatch {
    pub name: String,
    pub domain: Rect,
    position: PosFn,
    jet: Option<JetFn>,
    fd_step: f64,
}

impl ParametricPatch {
    pub fn new(name: impl Into<String>, domain: Rect, position: PosFn) -> Self {
        let fd_step = 1e-5 * domain.span();
        ParametricPatch {
            name: name.into(),
            domain,
            position,
            jet: None,
            fd_step,
        }
    }

    pub fn with_jet(name: impl Into<String>, domain: Rect, position: PosFn, jet: JetFn) -> Self {
        let fd_step = 1e-5 * domain.span();
        ParametricPatch {
            name: name.into(),
            domain,
            position,
            jet: Some(jet),
            fd_step,
        }
    }

    pub fn has_analytic_jet(&self) -> bool {
        self.jet.is_some()
    }

    pub fn position(&self, u: f64, v: f64) -> Vec3 {
        (self.position)(u, v)
    }

    /// Analytic jet when available, finite differences otherwise.
    pub fn jet(&self, u: f64, v: f64) -> PatchJet {
        match &self.jet {
            Some(j) => j(u, v),
            None => self.fd_jet(u, v),
        }
    }

    /// Central-difference jet, always available. Used to cross-check analytic
    /// evaluators.
    pub fn fd_jet(&self, u: f64, v: f64) -> PatchJet {
        let h = self.fd_step;
        let f = &self.position;
        let p = f(u, v);
        let pu_p = f(u + h, v);
        let pu_m = f(u - h, v);
        let pv_p = f(u, v + h);
        let pv_m = f(u, v - h);
        let pp = f(u + h, v + h);
        let pm = f(u + h, v - h);
        let mp = f(u - h, v + h);
        let mm = f(u - h, v - h);
        PatchJet {
            p,
            du: (pu_p - pu_m) / (2.0 * h),
            dv: (pv_p - pv_m) / (2.0 * h),
            duu: (pu_p - 2.0 * p + pu_m) / (h * h),
            dvv: (pv_p - 2.0 * p + pv_m) / (h * h),
            duv: (pp - pm - mp + mm) / (4.0 * h * h),
        }
    }
}

/// First and second fundamental forms with derived curvatures at one point.
#[derive(Debug, Clone, Copy)]
pub struct FundamentalForms {
    /// First form coefficients E, F, G.
    pub first: [f64; 3],
    /// Second form coefficients e, f, g (`e = -<X_uu, n>` convention).
    pub second: [f64; 3],
    pub normal: Vec3,
    /// Principal curvatures, `k1 >= k2`.
    pub k1: f64,
    pub k2: f64,
    /// Mean curvature H = (k1 + k2)/2.
    pub mean: f64,
    /// Gauss curvature K = k1 k2.
    pub gauss: f64,
    /// Squared norm of the second fundamental form, k1^2 + k2^2.
    pub a2: f64,
}

impl FundamentalForms {
    /// Area element `|X_u x X_v| = sqrt(EG - F^2)`.
    pub fn area_element(&self) -> f64 {
        let [e, f, g] = self.first;
        (e * g - f * f).max(0.0).sqrt()
    }
}

/// Fundamental forms of `patch` at an interior parameter point.
pub fn evaluate_forms(
    patch: &ParametricPatch,
    u: f64,
    v: f64,
) -> Result<FundamentalForms, SurfaceError> {
    if !patch.domain.contains(u, v) {
        return Err(SurfaceError::OutsideDomain { u, v });
    }
    forms_from_jet(&patch.jet(u, v), u, v)
}

/// Forms straight from a jet; split out so mesh code can reuse it.
pub fn forms_from_jet(jet: &PatchJet, u: f64, v: f64) -> Result<FundamentalForms, SurfaceError> {
    let ee = jet.du.dot(&jet.du);
    let ff = jet.du.dot(&jet.dv);
    let gg = jet.dv.dot(&jet.dv);
    let eg_f2 = ee * gg - ff * ff;
    if eg_f2 <= IMMERSION_FLOOR * ee.max(gg).max(1e-300).powi(2) {
        return Err(SurfaceError::DegenerateImmersion { u, v, eg_f2 });
    }
    let n = jet.du.cross(&jet.dv);
    let normal = n / n.norm();
    let le = -jet.duu.dot(&normal);
    let lf = -jet.duv.dot(&normal);
    let lg = -jet.dvv.dot(&normal);
    let mean = (le * gg - 2.0 * lf * ff + lg * ee) / (2.0 * eg_f2);
    let gauss = (le * lg - lf * lf) / eg_f2;
    let disc = (mean * mean - gauss).max(0.0).sqrt();
    let k1 = mean + disc;
    let k2 = mean - disc;
    Ok(FundamentalForms {
        first: [ee, ff, gg],
        second: [le, lf, lg],
        normal,
        k1,
        k2,
        mean,
        gauss,
        a2: k1 * k1 + k2 * k2,
    })
}

/// A graph `z = u(x,y)` with analytic partial derivatives.
pub struct GraphFunction {
    pub name: String,
    pub domain: Rect,
    #[allow(clippy::type_complexity)]
    eval: std::sync::Arc<dyn Fn(f64, f64) -> [f64; 6] + Send + Sync>,
}

impl GraphFunction {
    /// `eval` returns `[u, u_x, u_y, u_xx, u_xy, u_yy]`.
    pub fn new(
        name: impl Into<String>,
        domain: Rect,
        eval: Box<dyn Fn(f64, f64) -> [f64; 6] + Send + Sync>,
    ) -> Self {
        GraphFunction {
            name: name.into(),
            domain,
            eval: eval.into(),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; 6] {
        (self.eval)(x, y)
    }

    /// View the graph as the parametric patch `(x, y, u(x,y))` with analytic jets.
    pub fn as_patch(&self) -> ParametricPatch {
        let e1 = self.eval.clone();
        let e2 = self.eval.clone();
        ParametricPatch::with_jet(
            format!("graph_{}", self.name),
            self.domain,
            Box::new(move |x, y| Vec3::new(x, y, e1(x, y)[0])),
            Box::new(move |x, y| {
                let [u, ux, uy, uxx, uxy, uyy] = e2(x, y);
                PatchJet {
                    p: Vec3::new(x, y, u),
                    du: Vec3::new(1.0, 0.0, ux),
                    dv: Vec3::new(0.0, 1.0, uy),
                    duu: Vec3::new(0.0, 0.0, uxx),
                    duv: Vec3::new(0.0, 0.0, uxy),
                    dvv: Vec3::new(0.0, 0.0, uyy),
                }
            }),
        )
    }
}

/// Residual of the minimal surface equation
/// `(1+u_x^2) u_yy - 2 u_x u_y u_xy + (1+u_y^2) u_xx` at `(x,y)`.
pub fn msq_residual(graph: &GraphFunction, x: f64, y: f64) -> f64 {
    let [_, ux, uy, uxx, uxy, uyy] = graph.eval(x, y);
    (1.0 + ux * ux) * uyy - 2.0 * ux * uy * uxy + (1.0 + uy * uy) * uxx
}

/// Built-in patch and graph catalog.
pub mod patches {
    use super::*;

    /// Flat plane `(u, v, 0)`.
    pub fn plane() -> ParametricPatch {
        ParametricPatch::with_jet(
            "plane",
            Rect::new(-1.0, 1.0, -1.0, 1.0),
            Box::new(|u, v| Vec3::new(u, v, 0.0)),
            Box::new(|u, v| PatchJet {
                p: Vec3::new(u, v, 0.0),
                du: Vec3::new(1.0, 0.0, 0.0),
                dv: Vec3::new(0.0, 1.0, 0.0),
                duu: Vec3::zeros(),
                duv: Vec3::zeros(),
                dvv: Vec3::zeros(),
            }),
        )
    }

    /// Round sphere of radius `r`, longitude u, latitude v.
    pub fn sphere(r: f64) -> ParametricPatch {
        use std::f64::consts::{FRAC_PI_2, PI};
        let pos = move |u: f64, v: f64| {
            Vec3::new(r * v.cos() * u.cos(), r * v.cos() * u.sin(), r * v.sin())
        };
        ParametricPatch::with_jet(
            format!("sphere_r{r}"),
            Rect::new(0.0, 2.0 * PI, -FRAC_PI_2, FRAC_PI_2),
            Box::new(pos),
            Box::new(move |u, v| {
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                PatchJet {
                    p: Vec3::new(r * cv * cu, r * cv * su, r * sv),
                    du: Vec3::new(-r * cv * su, r * cv * cu, 0.0),
                    dv: Vec3::new(-r * sv * cu, -r * sv * su, r * cv),
                    duu: Vec3::new(-r * cv * cu, -r * cv * su, 0.0),
                    duv: Vec3::new(r * sv * su, -r * sv * cu, 0.0),
                    dvv: Vec3::new(-r * cv * cu, -r * cv * su, -r * sv),
                }
            }),
        )
    }

    /// Catenoid `(cosh v cos u, cosh v sin u, v)` truncated to `|v| <= a`.
    pub fn catenoid(a: f64) -> ParametricPatch {
        use std::f64::consts::PI;
        ParametricPatch::with_jet(
            format!("catenoid_a{a}"),
            Rect::new(0.0, 2.0 * PI, -a, a),
            Box::new(|u, v| Vec3::new(v.cosh() * u.cos(), v.cosh() * u.sin(), v)),
            Box::new(|u, v| {
                let (su, cu) = u.sin_cos();
                let (sh, ch) = (v.sinh(), v.cosh());
                PatchJet {
                    p: Vec3::new(ch * cu, ch * su, v),
                    du: Vec3::new(-ch * su, ch * cu, 0.0),
                    dv: Vec3::new(sh * cu, sh * su, 1.0),
                    duu: Vec3::new(-ch * cu, -ch * su, 0.0),
                    duv: Vec3::new(-sh * su, sh * cu, 0.0),
                    dvv: Vec3::new(ch * cu, ch * su, 0.0),
                }
            }),
        )
    }

    /// Enneper's surface on `[-r, r]^2`.
    pub fn enneper(r: f64) -> ParametricPatch {
        ParametricPatch::with_jet(
            format!("enneper_r{r}"),
            Rect::new(-r, r, -r, r),
            Box::new(|u, v| {
                Vec3::new(
                    u - u * u * u / 3.0 + u * v * v,
                    -v + v * v * v / 3.0 - u * u * v,
                    u * u - v * v,
                )
            }),
            Box::new(|u, v| PatchJet {
                p: Vec3::new(
                    u - u * u * u / 3.0 + u * v * v,
                    -v + v * v * v / 3.0 - u * u * v,
                    u * u - v * v,
                ),
                du: Vec3::new(1.0 - u * u + v * v, -2.0 * u * v, 2.0 * u),
                dv: Vec3::new(2.0 * u * v, -1.0 + v * v - u * u, -2.0 * v),
                duu: Vec3::new(-2.0 * u, -2.0 * v, 2.0),
                duv: Vec3::new(2.0 * v, -2.0 * u, 0.0),
                dvv: Vec3::new(2.0 * u, 2.0 * v, -2.0),
            }),
        )
    }

    /// Bour's minimal surface in polar parameters `(r, theta)`, truncated away
    /// from the branch point r = 0 and the theta seam.
    pub fn bour() -> ParametricPatch {
        use std::f64::consts::PI;
        let pos = |r: f64, t: f64| {
            Vec3::new(
                r * t.cos() - 0.5 * r * r * (2.0 * t).cos(),
                -r * t.sin() - 0.5 * r * r * (2.0 * t).sin(),
                4.0 / 3.0 * r.powf(1.5) * (1.5 * t).cos(),
            )
        };
        ParametricPatch::with_jet(
            "bour",
            Rect::new(0.3, 1.2, 0.15, 2.0 * PI - 0.15),
            Box::new(pos),
            Box::new(|r, t| {
                let (st, ct) = t.sin_cos();
                let (s2, c2) = (2.0 * t).sin_cos();
                let (s32, c32) = (1.5 * t).sin_cos();
                let sr = r.sqrt();
                PatchJet {
                    p: Vec3::new(
                        r * ct - 0.5 * r * r * c2,
                        -r * st - 0.5 * r * r * s2,
                        4.0 / 3.0 * r * sr * c32,
                    ),
                    du: Vec3::new(ct - r * c2, -st - r * s2, 2.0 * sr * c32),
                    dv: Vec3::new(
                        -r * st + r * r * s2,
                        -r * ct - r * r * c2,
                        -2.0 * r * sr * s32,
                    ),
                    duu: Vec3::new(-c2, -s2, c32 / sr),
                    duv: Vec3::new(-st + 2.0 * r * s2, -ct - 2.0 * r * c2, -3.0 * sr * s32),
                    dvv: Vec3::new(
                        -r * ct + 2.0 * r * r * c2,
                        r * st + 2.0 * r * r * s2,
                        -3.0 * r * sr * c32,
                    ),
                }
            }),
        )
    }

    /// Scherk's first surface as a graph, `u = ln(cos x) - ln(cos y)`.
    pub fn scherk_graph() -> GraphFunction {
        GraphFunction::new(
            "scherk",
            Rect::new(-1.0, 1.0, -1.0, 1.0),
            Box::new(|x, y| {
                let u = x.cos().ln() - y.cos().ln();
                let sec2x = 1.0 / (x.cos() * x.cos());
                let sec2y = 1.0 / (y.cos() * y.cos());
                [u, -x.tan(), y.tan(), -sec2x, 0.0, sec2y]
            }),
        )
    }

    /// The minimal patches checked by the certification suite.
    pub fn minimal_catalog() -> Vec<ParametricPatch> {
        vec![catenoid(1.0), enneper(0.7), bour(), plane()]
    }

    /// Catalog lookup used by the CLI.
    pub fn by_name(name: &str) -> Option<ParametricPatch> {
        match name {
            "plane" => Some(plane()),
            "sphere" => Some(sphere(1.0)),
            "catenoid" => Some(catenoid(1.0)),
            "enneper" => Some(enneper(0.7)),
            "bour" => Some(bour()),
            "scherk" => Some(scherk_graph().as_patch()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_equator_forms() {
        let p = patches::sphere(1.0);
        let f = evaluate_forms(&p, 1.0, 0.0).unwrap();
        assert_relative_eq!(f.k1, 1.0, max_relative = 1e-12);
        assert_relative_eq!(f.k2, 1.0, max_relative = 1e-12);
        assert_relative_eq!(f.mean, 1.0, max_relative = 1e-12);
        assert_relative_eq!(f.gauss, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn plane_is_flat() {
        let p = patches::plane();
        let f = evaluate_forms(&p, 0.3, -0.4).unwrap();
        assert_eq!(f.mean, 0.0);
        assert_eq!(f.gauss, 0.0);
    }

    #[test]
    fn catenoid_neck_curvatures() {
        // Symbolic oracle: k = (+1, -1), |A|^2 = 2 sech^4 v at v = 0.
        let p = patches::catenoid(1.0);
        let f = evaluate_forms(&p, 0.0, 0.0).unwrap();
        assert_relative_eq!(f.k1, 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.k2, -1.0, epsilon = 1e-12);
        assert!(f.mean.abs() < 1e-14);
        assert_relative_eq!(f.a2, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn builtin_minimal_patches_have_vanishing_h() {
        for patch in patches::minimal_catalog() {
            let d = patch.domain;
            for i in 0..20 {
                for j in 0..20 {
                    let u = d.u0 + (d.u1 - d.u0) * (i as f64 + 0.5) / 20.0;
                    let v = d.v0 + (d.v1 - d.v0) * (j as f64 + 0.5) / 20.0;
                    let f = evaluate_forms(&patch, u, v).unwrap();
                    assert!(
                        f.mean.abs() <= 1e-10,
                        "{}: |H| = {:e} at ({u},{v})",
                        patch.name,
                        f.mean.abs()
                    );
                }
            }
        }
    }

    #[test]
    fn analytic_jets_match_finite_differences() {
        for patch in patches::minimal_catalog() {
            let d = patch.domain;
            let u = 0.5 * (d.u0 + d.u1) + 0.13 * (d.u1 - d.u0);
            let v = 0.5 * (d.v0 + d.v1) - 0.21 * (d.v1 - d.v0);
            let a = patch.jet(u, v);
            let n = patch.fd_jet(u, v);
            assert!((a.du - n.du).norm() < 1e-6, "{} du", patch.name);
            assert!((a.dv - n.dv).norm() < 1e-6, "{} dv", patch.name);
            assert!((a.duu - n.duu).norm() < 2e-4, "{} duu", patch.name);
            assert!((a.duv - n.duv).norm() < 2e-4, "{} duv", patch.name);
            assert!((a.dvv - n.dvv).norm() < 2e-4, "{} dvv", patch.name);
        }
    }

    #[test]
    fn msq_constant_and_parabola() {
        let constant = GraphFunction::new(
            "const",
            Rect::new(-1.0, 1.0, -1.0, 1.0),
            Box::new(|_, _| [3.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        );
        assert_eq!(msq_residual(&constant, 0.2, 0.7), 0.0);

        let parabola = GraphFunction::new(
            "x^2",
            Rect::new(-1.0, 1.0, -1.0, 1.0),
            Box::new(|x, _| [x * x, 2.0 * x, 0.0, 2.0, 0.0, 0.0]),
        );
        for &(x, y) in &[(0.0, 0.0), (0.5, -0.3), (-0.9, 0.9)] {
            assert_eq!(msq_residual(&parabola, x, y), 2.0);
        }
    }

    #[test]
    fn msq_scherk_vanishes() {
        let g = patches::scherk_graph();
        for i in 0..15 {
            for j in 0..15 {
                let x = -0.95 + 1.9 * i as f64 / 14.0;
                let y = -0.95 + 1.9 * j as f64 / 14.0;
                assert!(msq_residual(&g, x, y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn degenerate_immersion_rejected() {
        let bad = ParametricPatch::new(
            "rank1",
            Rect::new(-1.0, 1.0, -1.0, 1.0),
            Box::new(|u, v| Vec3::new(u + v, u + v, 0.0)),
        );
        assert!(matches!(
            evaluate_forms(&bad, 0.0, 0.0),
            Err(SurfaceError::DegenerateImmersion { .. })
        ));
    }

    #[test]
    fn curvature_identities_hold_on_samples() {
        // H^2 >= K and |A|^2 = 4H^2 - 2K on every built-in patch.
        for patch in [
            patches::sphere(1.0),
            patches::catenoid(1.0),
            patches::enneper(0.7),
            patches::bour(),
        ] {
            let d = patch.domain;
            for i in 0..12 {
                for j in 0..12 {
                    let u = d.u0 + (d.u1 - d.u0) * (i as f64 + 0.5) / 12.0;
                    let v = d.v0 + (d.v1 - d.v0) * (j as f64 + 0.5) / 12.0;
                    let f = evaluate_forms(&patch, u, v).unwrap();
                    assert!(f.mean * f.mean >= f.gauss - 1e-12);
                    assert_relative_eq!(
                        f.a2,
                        4.0 * f.mean * f.mean - 2.0 * f.gauss,
                        epsilon = 1e-9,
                        max_relative = 1e-9
                    );
                }
            }
        }
    }
}
