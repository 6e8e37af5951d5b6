use std::collections::{BTreeSet, HashMap};

use fsl::geometry::{make_family, Aabb, AmbientBox, CompactSet, FamilyKind, Point};
use fsl::mesh::{build_cracked_mesh, build_mesh_with_voids, parse_dump, GridSpec, MeshDump};
use proptest::prelude::*;

fn dump_of(grid: &GridSpec, k: &CompactSet, voids: bool) -> MeshDump {
    let m = if voids {
        build_mesh_with_voids(grid, k).unwrap()
    } else {
        build_cracked_mesh(grid, k).unwrap()
    };
    let mut buf = Vec::new();
    m.write_dump(&mut buf).unwrap();
    parse_dump(std::str::from_utf8(&buf).unwrap()).unwrap()
}

fn components(d: &MeshDump) -> usize {
    let mut parent: Vec<usize> = (0..d.nodes.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for el in &d.elements {
        for w in el.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a.max(b)] = a.min(b);
        }
    }
    let used: BTreeSet<usize> = d.elements.iter().flatten().copied().collect();
    used.iter()
        .map(|&n| find(&mut parent, n))
        .collect::<BTreeSet<_>>()
        .len()
}

/// A vertex gets two nodes when the crack covers a full neighbourhood of it
/// inside the closed domain (in the crack plane); crack tips keep one.
fn expect_doubled(k: &CompactSet, axis: usize, v: &Point, h: f64) -> bool {
    if !k.contains(v, 1e-12) {
        return false;
    }
    let dim = k.dim();
    let amb = k.ambient();
    let in_plane: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
    (0..1usize << in_plane.len()).all(|mask| {
        let mut q = *v;
        for (i, &a) in in_plane.iter().enumerate() {
            q[a] += if mask >> i & 1 == 1 { h / 2.0 } else { -h / 2.0 };
        }
        let inside = (0..dim).all(|a| q[a] >= amb.lo()[a] && q[a] <= amb.hi()[a]);
        !inside || k.contains(&q, 1e-12)
    })
}

fn faces(el: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..el.len()).map(move |skip| {
        let mut f: Vec<usize> = el
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, &n)| n)
            .collect();
        f.sort_unstable();
        f
    })
}

/// Checks a dump of a planar crack against the grid and the geometry alone.
fn check_planar_crack(grid: &GridSpec, k: &CompactSet, axis: usize) -> MeshDump {
    let d = dump_of(grid, k, false);
    let h = grid.h();
    let nv = grid.num_vertices();
    let dim = grid.dim();

    // node count: one per vertex plus one per doubled vertex
    let doubled: BTreeSet<usize> = (0..nv)
        .filter(|&v| expect_doubled(k, axis, &grid.vertex_point(v), h))
        .collect();
    assert_eq!(d.nodes.len(), nv + doubled.len());
    assert_eq!(d.elements.len(), grid.num_cells() * if dim == 2 { 2 } else { 6 });

    // twins: symmetric, same position, same vertex, exactly the doubled set
    let twin: HashMap<usize, usize> = d.twins.iter().copied().collect();
    for (&a, &b) in &twin {
        assert_ne!(a, b);
        assert_eq!(twin[&b], a);
        assert_eq!(d.nodes[a], d.nodes[b]);
        assert_eq!(d.node_vertex[a], d.node_vertex[b]);
    }
    let twinned: BTreeSet<usize> = twin.keys().map(|&n| d.node_vertex[n]).collect();
    assert_eq!(twinned, doubled);

    // faces by grid vertex: interior faces off the crack share nodes, faces on
    // the crack do not
    let mut by_vertex: HashMap<Vec<usize>, Vec<Vec<usize>>> = HashMap::new();
    for el in &d.elements {
        for f in faces(el) {
            let mut key: Vec<usize> = f.iter().map(|&n| d.node_vertex[n]).collect();
            key.sort_unstable();
            by_vertex.entry(key).or_default().push(f);
        }
    }
    for (key, fs) in &by_vertex {
        assert!(fs.len() <= 2);
        if fs.len() < 2 {
            continue;
        }
        let pts: Vec<Point> = key.iter().map(|&v| grid.vertex_point(v)).collect();
        let centroid: Point =
            std::array::from_fn(|a| pts.iter().map(|p| p[a]).sum::<f64>() / pts.len() as f64);
        let on_plane = pts.iter().all(|p| (p[axis] - pts[0][axis]).abs() < 1e-12);
        let has_doubled = key.iter().any(|v| doubled.contains(v));
        // a crack face spanned only by tips has nothing to split
        if on_plane && k.contains(&centroid, 1e-12) && has_doubled {
            let (f0, f1) = (&fs[0], &fs[1]);
            assert_ne!(f0, f1, "crack face {pts:?} is shared");
            for n in f0 {
                if doubled.contains(&d.node_vertex[*n]) {
                    assert!(!f1.contains(n));
                }
            }
        } else {
            assert_eq!(fs[0], fs[1], "face {pts:?} is not conforming");
        }
    }
    d
}

fn unit_set(dim: usize, boxes: Vec<Aabb>) -> CompactSet {
    CompactSet::new(AmbientBox::unit(dim), boxes).unwrap()
}

#[test]
fn half_slit_in_the_square() {
    let k = unit_set(2, vec![Aabb::new([0.0, 0.5, 0.0], [0.5, 0.5, 0.0])]);
    for h in [0.25, 0.125, 1.0 / 16.0] {
        let d = check_planar_crack(&GridSpec::unit(2, h).unwrap(), &k, 1);
        assert_eq!(components(&d), 1);
    }
}

#[test]
fn named_planar_families() {
    let grid = GridSpec::unit(3, 1.0 / 8.0).unwrap();
    let (plane, _) = make_family(FamilyKind::ConstantPlane, 2, 3).unwrap();
    assert_eq!(components(&check_planar_crack(&grid, &plane, 2)), 2);
    for n in [4, 8] {
        let (k, _) = make_family(FamilyKind::Example1, n, 3).unwrap();
        assert_eq!(components(&check_planar_crack(&grid, &k, 2)), 1);
    }
    let (k, _) = make_family(FamilyKind::TranslatingPlane, 4, 3).unwrap();
    assert_eq!(components(&check_planar_crack(&grid, &k, 2)), 2);
}

#[test]
fn plates_and_slab() {
    let grid = GridSpec::unit(3, 1.0 / 8.0).unwrap();
    for n in [2, 4, 8] {
        let (k, slab) = make_family(FamilyKind::Example2, n, 3).unwrap();
        let d = dump_of(&grid, &k, false);
        assert_eq!(components(&d), 1, "n = {n}");
        let d = dump_of(&grid, &slab, true);
        assert_eq!(components(&d), 2);
        // slab snapped to [3/8, 5/8]: two of the eight cell columns go
        assert_eq!(d.elements.len(), 6 * 8 * 8 * 6);
    }
}

#[test]
fn classification_is_stable_under_refinement() {
    let shapes = [
        unit_set(2, vec![Aabb::new([0.0, 0.5, 0.0], [0.5, 0.5, 0.0])]),
        make_family(FamilyKind::Example1, 4, 3).unwrap().0,
        make_family(FamilyKind::ConstantPlane, 2, 3).unwrap().0,
    ];
    for k in &shapes {
        let dim = k.dim();
        let coarse = GridSpec::unit(dim, 0.25).unwrap();
        let fine = GridSpec::unit(dim, 0.125).unwrap();
        let dc = dump_of(&coarse, k, false);
        let df = dump_of(&fine, k, false);
        assert_eq!(components(&dc), components(&df));
        // doubled vertices of the coarse grid, in units of the coarse spacing
        let doubled = |d: &MeshDump| -> BTreeSet<[i64; 3]> {
            let on_coarse = |p: &Point| p.iter().all(|x| (x * 4.0 - (x * 4.0).round()).abs() < 1e-12);
            d.twins
                .iter()
                .filter(|&&(a, _)| on_coarse(&d.nodes[a]))
                .map(|&(a, _)| std::array::from_fn(|i| (d.nodes[a][i] * 4.0).round() as i64))
                .collect()
        };
        assert_eq!(doubled(&dc), doubled(&df));
    }
}

fn span() -> impl Strategy<Value = (u32, u32)> {
    (0u32..8).prop_flat_map(|a| (Just(a), a + 1..=8))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_facets_match_the_oracle(
        x in span(),
        y in span(),
        z in 1u32..8,
    ) {
        let h = 1.0 / 8.0;
        let lo = [x.0 as f64 * h, y.0 as f64 * h, z as f64 * h];
        let hi = [x.1 as f64 * h, y.1 as f64 * h, z as f64 * h];
        let k = unit_set(3, vec![Aabb::new(lo, hi)]);
        let d = check_planar_crack(&GridSpec::unit(3, h).unwrap(), &k, 2);
        let full = lo[0] == 0.0 && lo[1] == 0.0 && hi[0] == 1.0 && hi[1] == 1.0;
        prop_assert_eq!(components(&d), if full { 2 } else { 1 });
    }
}
