use super::GridSpec;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, CompactSet};

/// A box before and after snapping to the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapRecord {
    pub original: Aabb,
    pub snapped: Aabb,
    /// Largest coordinate displacement, at most `h/2`.
    pub displacement: f64,
}

/// A snapped facet in grid indices.
#[derive(Debug, Clone)]
pub(crate) struct GridFacet {
    pub(crate) axis: usize,
    pub(crate) lo: [usize; 3],
    pub(crate) hi: [usize; 3],
}

pub(crate) struct Snapped {
    pub(crate) record: SnapRecord,
    pub(crate) grid_facet: Option<GridFacet>,
}

pub(crate) fn snap_set(grid: &GridSpec, k: &CompactSet) -> Result<Vec<Snapped>> {
    let dim = grid.dim();
    let mut out = Vec::with_capacity(k.boxes().len());
    for (i, b) in k.boxes().iter().enumerate() {
        let degenerate = b.degenerate_axes(dim);
        if degenerate.len() > 1 {
            return Err(Error::Unsupported(format!(
                "box {i} ({:?}..{:?}) has dimension below N - 1",
                &b.lo[..dim],
                &b.hi[..dim]
            )));
        }
        let mut snapped = *b;
        let (mut lo, mut hi) = ([0usize; 3], [0usize; 3]);
        let mut displacement = 0.0f64;
        for d in 0..dim {
            let (il, xl) = grid.snap_coordinate(d, b.lo[d]);
            let (ih, xh) = grid.snap_coordinate(d, b.hi[d]);
            displacement = displacement.max((xl - b.lo[d]).abs()).max((xh - b.hi[d]).abs());
            if il == ih && !degenerate.contains(&d) {
                return Err(Error::Snapping(format!(
                    "box {i} ({:?}..{:?}) collapses along axis {d} at h = {}",
                    &b.lo[..dim],
                    &b.hi[..dim],
                    grid.h()
                )));
            }
            snapped.lo[d] = xl;
            snapped.hi[d] = xh;
            lo[d] = il;
            hi[d] = ih;
        }
        if displacement > grid.h() / 2.0 + 1e-12 {
            return Err(Error::Snapping(format!(
                "box {i} cannot be aligned within h/2 (displacement {displacement})"
            )));
        }
        out.push(Snapped {
            record: SnapRecord {
                original: *b,
                snapped,
                displacement,
            },
            grid_facet: degenerate.first().map(|&axis| GridFacet { axis, lo, hi }),
        });
    }
    Ok(out)
}

/// Index of a facet containing the face spanned by `vertices`, if any.
pub(crate) fn facet_of_face(
    grid: &GridSpec,
    facets: &[GridFacet],
    vertices: &[u32],
) -> Option<usize> {
    if facets.is_empty() {
        return None;
    }
    let mut ijk = [[0usize; 3]; 3];
    for (slot, &v) in ijk.iter_mut().zip(vertices) {
        *slot = grid.vertex_ijk(v as usize);
    }
    let ijk = &ijk[..vertices.len()];
    let dim = grid.dim();
    facets.iter().position(|f| {
        let a = f.axis;
        ijk.iter().all(|p| {
            p[a] == f.lo[a] && (0..dim).all(|d| d == a || (f.lo[d] <= p[d] && p[d] <= f.hi[d]))
        })
    })
}
