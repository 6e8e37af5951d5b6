use std::collections::HashMap;

use fsl::geometry::{make_family, Aabb, AmbientBox, CompactSet, FamilyKind, Point};
use fsl::mesh::{build_cracked_mesh, CrackedMesh, GridSpec};
use fsl::solver::{
    difference_norm, energy_and_gradient, estimate_p_capacity, field_norm, solve_neumann, Method,
    NormKind, SolverConfig, Source,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn slit_mesh(dim: usize, n: usize, h: f64) -> CrackedMesh {
    let (k, _) = make_family(FamilyKind::Example1, n, dim).unwrap();
    build_cracked_mesh(&GridSpec::unit(dim, h).unwrap(), &k).unwrap()
}

fn corner_source(dim: usize) -> Source {
    let mut hi = vec![1.0; dim];
    hi[0] = 0.25;
    Source::Indicator {
        lo: vec![0.0; dim],
        hi,
        value: 1.0,
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (dim, h) in [(2, 1.0 / 8.0), (3, 0.25)] {
        let mesh = slit_mesh(dim, 4, h);
        let f = corner_source(dim);
        for p in [1.5, 2.0, 3.0] {
            let v: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (_, g) = energy_and_gradient(&mesh, &v, &f, p).unwrap();
            let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let step = 1e-6;
            for _ in 0..40 {
                let i = rng.gen_range(0..v.len());
                let mut w = v.clone();
                w[i] += step;
                let (ep, _) = energy_and_gradient(&mesh, &w, &f, p).unwrap();
                w[i] -= 2.0 * step;
                let (em, _) = energy_and_gradient(&mesh, &w, &f, p).unwrap();
                let fd = (ep - em) / (2.0 * step);
                let rel = (fd - g[i]).abs() / g[i].abs().max(1e-3 * scale);
                assert!(rel <= 1e-5, "dim {dim} p {p} node {i}: {fd} vs {}", g[i]);
            }
        }
    }
}

#[test]
fn minimization_agrees_with_conjugate_gradients() {
    for dim in [2, 3] {
        let mesh = slit_mesh(dim, 4, if dim == 2 { 1.0 / 16.0 } else { 1.0 / 8.0 });
        let f = corner_source(dim);
        let cg = SolverConfig {
            method: Method::ConjugateGradient,
            cg_tol: 1e-13,
            ..SolverConfig::default()
        };
        let min = SolverConfig {
            method: Method::Minimization,
            nonlinear_tol: 1e-12,
            ..SolverConfig::default()
        };
        let a = solve_neumann(&mesh, &f, &cg).unwrap();
        let b = solve_neumann(&mesh, &f, &min).unwrap();
        assert_eq!(b.diagnostics.method, Method::Minimization);
        let diff = a
            .field
            .values()
            .iter()
            .zip(b.field.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff <= 1e-8, "dim {dim}: {diff}");
    }
}

#[test]
fn solutions_pass_minimality_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mesh = slit_mesh(2, 4, 1.0 / 16.0);
    let f = corner_source(2);
    for p in [1.5, 2.0, 3.0] {
        let u = solve_neumann(&mesh, &f, &SolverConfig::with_p(p)).unwrap();
        let u = u.field.values().to_vec();
        let (e0, _) = energy_and_gradient(&mesh, &u, &f, p).unwrap();
        for _ in 0..100 {
            let w: Vec<f64> = u.iter().map(|x| x + rng.gen_range(-1e-3..1e-3)).collect();
            let (e, _) = energy_and_gradient(&mesh, &w, &f, p).unwrap();
            assert!(e >= e0 - 1e-12 * e0.abs(), "p {p}: {e} < {e0}");
        }
    }
}

fn key(p: &Point) -> [i64; 3] {
    std::array::from_fn(|a| (p[a] * 1024.0).round() as i64)
}

/// Maps every node to its image under `x -> 1 - x`, taking the copy on the
/// opposite side for doubled nodes. This is the reflection in the crack
/// plane composed with the in-plane reflections; unlike the plain
/// reflection it maps the Kuhn mesh onto itself.
fn mirror_nodes(mesh: &CrackedMesh) -> Vec<usize> {
    let invert = |p: &Point| -> Point { std::array::from_fn(|a| if a < mesh.dim() { 1.0 - p[a] } else { 0.0 }) };
    let by_centroid: HashMap<[i64; 3], usize> = (0..mesh.num_elements())
        .map(|e| (key(&mesh.centroid(e)), e))
        .collect();
    let mut mirror = vec![usize::MAX; mesh.num_nodes()];
    for e in 0..mesh.num_elements() {
        let m = by_centroid[&key(&invert(&mesh.centroid(e)))];
        for &a in mesh.element(e) {
            let target = key(&invert(mesh.node(a as usize)));
            let b = mesh
                .element(m)
                .iter()
                .find(|&&b| key(mesh.node(b as usize)) == target)
                .unwrap();
            mirror[a as usize] = *b as usize;
        }
    }
    mirror
}

#[test]
fn reflection_symmetry_is_preserved() {
    for dim in [2, 3] {
        let mesh = slit_mesh(dim, 4, if dim == 2 { 1.0 / 32.0 } else { 1.0 / 16.0 });
        // a box centred in the cube, straddling the crack
        let (lo, hi) = if dim == 2 {
            (vec![0.25, 0.375], vec![0.75, 0.625])
        } else {
            (vec![0.25, 0.125, 0.375], vec![0.75, 0.875, 0.625])
        };
        let f = Source::Indicator { lo, hi, value: 1.0 };
        let u = solve_neumann(&mesh, &f, &SolverConfig::default()).unwrap();
        let v = u.field.values();
        let mirror = mirror_nodes(&mesh);
        assert!(mirror.iter().all(|&m| m < v.len()));
        let asym = (0..v.len()).fold(0.0f64, |m, i| m.max((v[i] - v[mirror[i]]).abs()));
        assert!(asym <= 1e-8, "dim {dim}: {asym}");
        assert!(v.iter().any(|x| (x - v[0]).abs() > 1e-3));
    }
}

#[test]
fn norms_split_over_components() {
    let (plane, _) = make_family(FamilyKind::ConstantPlane, 2, 3).unwrap();
    let mesh = build_cracked_mesh(&GridSpec::unit(3, 0.25).unwrap(), &plane).unwrap();
    assert_eq!(mesh.components(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // side of each node, from the elements using it
    let mut above = vec![false; mesh.num_nodes()];
    for e in 0..mesh.num_elements() {
        if mesh.centroid(e)[2] > 0.5 {
            for &n in mesh.element(e) {
                above[n as usize] = true;
            }
        }
    }
    let part = |side: bool| -> Vec<f64> {
        v.iter()
            .zip(&above)
            .map(|(x, &a)| if a == side { *x } else { 0.0 })
            .collect()
    };
    for p in [1.5, 2.0, 3.0] {
        for kind in [NormKind::Lp, NormKind::GradientLp] {
            let whole = field_norm(&mesh, &v, p, kind).powf(p);
            let split = field_norm(&mesh, &part(true), p, kind).powf(p)
                + field_norm(&mesh, &part(false), p, kind).powf(p);
            assert!((whole - split).abs() <= 1e-12 * whole);
        }
    }
    let zero = vec![0.0; mesh.num_nodes()];
    let d = difference_norm((&mesh, &v), (&mesh, &zero), 2.0, NormKind::Lp).unwrap();
    assert!((d - field_norm(&mesh, &v, 2.0, NormKind::Lp)).abs() < 1e-14);
}

#[test]
fn differences_of_fields_on_different_cracks() {
    let grid = GridSpec::unit(2, 1.0 / 16.0).unwrap();
    let (k4, k) = make_family(FamilyKind::Example1, 4, 2).unwrap();
    let m4 = build_cracked_mesh(&grid, &k4).unwrap();
    let m = build_cracked_mesh(&grid, &k).unwrap();
    // the same smooth function on both meshes differs by nothing
    let f = |p: &Point| p[0] * p[0] - p[1];
    let a: Vec<f64> = m4.nodes().iter().map(f).collect();
    let b: Vec<f64> = m.nodes().iter().map(f).collect();
    for kind in [NormKind::Lp, NormKind::GradientLp] {
        assert!(difference_norm((&m4, &a), (&m, &b), 2.0, kind).unwrap() < 1e-14);
    }
    let other = build_cracked_mesh(&GridSpec::unit(2, 1.0 / 8.0).unwrap(), &k).unwrap();
    let c = vec![0.0; other.num_nodes()];
    assert_eq!(
        difference_norm((&m, &b), (&other, &c), 2.0, NormKind::Lp).unwrap_err().kind(),
        "domain"
    );
}

#[test]
fn constant_data_is_reproduced_for_every_p() {
    let mesh = slit_mesh(3, 4, 1.0 / 8.0);
    for p in [1.5, 2.0, 3.0] {
        let u = solve_neumann(&mesh, &Source::constant(1.0), &SolverConfig::with_p(p)).unwrap();
        assert!(u.field.values().iter().all(|x| (x - 1.0).abs() <= 1e-12));
    }
}

fn centre_point() -> CompactSet {
    CompactSet::new(
        AmbientBox::unit(2),
        vec![Aabb::new([0.5, 0.5, 0.0], [0.5, 0.5, 0.0])],
    )
    .unwrap()
}

#[test]
fn capacity_shrinks_with_the_tube() {
    let cfg = SolverConfig::default();
    for p in [1.5, 2.0, 3.0] {
        let values: Vec<f64> = [0.25, 0.125, 0.0625]
            .iter()
            .map(|&r| estimate_p_capacity(&centre_point(), p, r, 1.0 / 32.0, &cfg).unwrap().value)
            .collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]), "p {p}: {values:?}");
    }
}

#[test]
fn capacity_does_not_grow_under_refinement() {
    let cfg = SolverConfig::default();
    for p in [2.0, 3.0] {
        for r in [0.25, 0.125] {
            let coarse = estimate_p_capacity(&centre_point(), p, r, 1.0 / 16.0, &cfg).unwrap();
            let fine = estimate_p_capacity(&centre_point(), p, r, 1.0 / 32.0, &cfg).unwrap();
            assert!(
                fine.value <= coarse.value * (1.0 + 1e-9),
                "p {p} r {r}: {} > {}",
                fine.value,
                coarse.value
            );
        }
    }
}
