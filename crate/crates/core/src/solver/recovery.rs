use super::{slot_index, NodalField};
use crate::error::{Error, Result};
use crate::geometry::{CompactSet, Hyperplane};
use crate::mesh::CrackedMesh;

/// Transfers a field `u` on the mesh of `Ω \ K` to the mesh of `Ω \ K_n`,
/// where `K_n ⊆ K` lie in one hyperplane and both meshes share the grid.
///
/// Each node of the new mesh collects the copies of its grid vertex that the
/// old mesh uses on the same elements. Away from `K` there is one copy and
/// `v_n = u`; on `K_n` the copy on the node's own side is taken. Nodes in the
/// part of `K` not covered by `K_n` are seen from both sides: each side's
/// reflected extension equals that side's trace there, and the node gets the
/// mean of the two traces.
pub fn build_recovery_sequence<'a>(
    u: &NodalField<'_>,
    mesh_n: &'a CrackedMesh,
    k_n: &CompactSet,
    plane: &Hyperplane,
) -> Result<NodalField<'a>> {
    let mesh = u.mesh();
    if mesh.grid() != mesh_n.grid() {
        return Err(Error::Domain("the two meshes use different grids".into()));
    }
    let tol = 1e-9 * mesh.grid().h();
    let planar = |k: &CompactSet| k.boxes().iter().all(|b| plane.contains_box(b, tol));
    if !planar(k_n) || !planar(mesh.geometry_source()) || !planar(mesh_n.geometry_source()) {
        return Err(Error::Domain(
            "both fracture sets must lie in the given hyperplane".into(),
        ));
    }
    let slots = slot_index(mesh);
    let mut copies: Vec<Vec<u32>> = vec![Vec::new(); mesh_n.num_nodes()];
    for e in 0..mesh_n.num_elements() {
        let other = slots[mesh_n.element_slot(e)];
        if other == u32::MAX {
            continue;
        }
        let old = mesh.element(other as usize);
        for (k, &n) in mesh_n.element(e).iter().enumerate() {
            let c = &mut copies[n as usize];
            if !c.contains(&old[k]) {
                c.push(old[k]);
            }
        }
    }
    let values = u.values();
    let v = copies
        .iter()
        .map(|c| {
            if c.is_empty() {
                0.0
            } else {
                c.iter().map(|&i| values[i as usize]).sum::<f64>() / c.len() as f64
            }
        })
        .collect();
    NodalField::new(mesh_n, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_family, FamilyKind};
    use crate::mesh::{build_cracked_mesh, GridSpec};

    #[test]
    fn field_away_from_the_crack_is_unchanged() {
        let g = GridSpec::unit(2, 1.0 / 16.0).unwrap();
        let (k4, lim) = make_family(FamilyKind::Example1, 4, 2).unwrap();
        let m = build_cracked_mesh(&g, &lim).unwrap();
        let m4 = build_cracked_mesh(&g, &k4).unwrap();
        let bump = |p: &crate::geometry::Point| (0.25 - p[1]).max(0.0);
        let u = NodalField::from_fn(&m, |i| bump(m.node(i))).unwrap();
        let plane = Hyperplane { axis: 1, offset: 0.5 };
        let v = build_recovery_sequence(&u, &m4, &k4, &plane).unwrap();
        for i in 0..m4.num_nodes() {
            assert_eq!(v.values()[i], bump(m4.node(i)));
        }
    }

    #[test]
    fn off_plane_sets_are_rejected() {
        let g = GridSpec::unit(2, 1.0 / 8.0).unwrap();
        let (k4, lim) = make_family(FamilyKind::Example1, 4, 2).unwrap();
        let m = build_cracked_mesh(&g, &lim).unwrap();
        let m4 = build_cracked_mesh(&g, &k4).unwrap();
        let u = NodalField::zeros(&m);
        let plane = Hyperplane { axis: 0, offset: 0.5 };
        let e = build_recovery_sequence(&u, &m4, &k4, &plane).unwrap_err();
        assert_eq!(e.kind(), "domain");
    }
}
