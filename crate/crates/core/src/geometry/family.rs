use serde::{Deserialize, Serialize};

use super::{Aabb, AmbientBox, CompactSet, Point};
use crate::error::{Error, Result};

/// Named fracture families in the unit cube. The last axis is the "vertical"
/// one; cracks are horizontal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Midplane with a centred slit of half-width `1/n`; limit is the full midplane.
    Example1,
    /// `n - 1` stacked plates over the middle third; limit is the solid slab.
    Example2,
    /// The full midplane for every `n`.
    ConstantPlane,
    /// Full horizontal plane at height `1/2 + 1/n`; limit is the midplane.
    TranslatingPlane,
}

impl FamilyKind {
    pub fn min_index(self) -> usize {
        match self {
            FamilyKind::Example1 => 3,
            _ => 2,
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(FamilyKind::Example1),
            "example2" => Ok(FamilyKind::Example2),
            "constant_plane" => Ok(FamilyKind::ConstantPlane),
            "translating_plane" => Ok(FamilyKind::TranslatingPlane),
            other => Err(Error::Argument(format!("unknown family kind `{other}`"))),
        }
    }
}

fn slab(dim: usize, x_range: (f64, f64), height: (f64, f64)) -> Aabb {
    let mut lo: Point = [0.0; 3];
    let mut hi: Point = [0.0; 3];
    lo[0] = x_range.0;
    hi[0] = x_range.1;
    for d in 1..dim - 1 {
        lo[d] = 0.0;
        hi[d] = 1.0;
    }
    lo[dim - 1] = height.0;
    hi[dim - 1] = height.1;
    Aabb::new(lo, hi)
}

/// The `n`-th member of a family and the family's Hausdorff limit, in the
/// closed unit cube of dimension `dim`.
pub fn make_family(kind: FamilyKind, n: usize, dim: usize) -> Result<(CompactSet, CompactSet)> {
    if n < kind.min_index() {
        return Err(Error::Argument(format!(
            "{kind:?} needs n >= {}, got {n}",
            kind.min_index()
        )));
    }
    let ambient = AmbientBox::new(dim, &vec![0.0; dim], &vec![1.0; dim])?;
    let inv = 1.0 / n as f64;
    let mid = (0.5, 0.5);
    let (member, limit) = match kind {
        FamilyKind::Example1 => (
            vec![
                slab(dim, (0.0, 0.5 - inv), mid),
                slab(dim, (0.5 + inv, 1.0), mid),
            ],
            vec![slab(dim, (0.0, 1.0), mid)],
        ),
        FamilyKind::Example2 => (
            (1..n)
                .map(|i| {
                    let z = i as f64 / n as f64;
                    slab(dim, (1.0 / 3.0, 2.0 / 3.0), (z, z))
                })
                .collect(),
            vec![slab(dim, (1.0 / 3.0, 2.0 / 3.0), (0.0, 1.0))],
        ),
        FamilyKind::ConstantPlane => (
            vec![slab(dim, (0.0, 1.0), mid)],
            vec![slab(dim, (0.0, 1.0), mid)],
        ),
        FamilyKind::TranslatingPlane => {
            let z = 0.5 + inv;
            (
                vec![slab(dim, (0.0, 1.0), (z, z))],
                vec![slab(dim, (0.0, 1.0), mid)],
            )
        }
    };
    Ok((
        CompactSet::new(ambient, member)?,
        CompactSet::new(ambient, limit)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_member_n4() {
        let (k, lim) = make_family(FamilyKind::Example1, 4, 3).unwrap();
        assert_eq!(
            k.boxes(),
            &[
                Aabb::new([0.0, 0.0, 0.5], [0.25, 1.0, 0.5]),
                Aabb::new([0.75, 0.0, 0.5], [1.0, 1.0, 0.5]),
            ]
        );
        assert_eq!(lim.boxes(), &[Aabb::new([0.0, 0.0, 0.5], [1.0, 1.0, 0.5])]);
    }

    #[test]
    fn example2_member_n2_is_one_plate() {
        let (k, lim) = make_family(FamilyKind::Example2, 2, 3).unwrap();
        assert_eq!(
            k.boxes(),
            &[Aabb::new([1.0 / 3.0, 0.0, 0.5], [2.0 / 3.0, 1.0, 0.5])]
        );
        assert!(lim.boxes()[0].is_solid(3));
    }

    #[test]
    fn constant_plane_is_its_own_limit() {
        for n in [2, 7, 30] {
            let (k, lim) = make_family(FamilyKind::ConstantPlane, n, 3).unwrap();
            assert_eq!(k, lim);
        }
    }

    #[test]
    fn example1_rejects_small_index() {
        assert_eq!(
            make_family(FamilyKind::Example1, 2, 3).unwrap_err().kind(),
            "argument"
        );
        assert!("example3".parse::<FamilyKind>().is_err());
    }

    #[test]
    fn two_dimensional_slit() {
        let (k, _) = make_family(FamilyKind::Example1, 4, 2).unwrap();
        assert_eq!(k.boxes()[0], Aabb::new([0.0, 0.5, 0.0], [0.25, 0.5, 0.0]));
    }
}
