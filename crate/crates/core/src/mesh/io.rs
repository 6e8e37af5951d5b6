use std::io::Write;

use super::CrackedMesh;
use crate::error::{Error, Result};
use crate::geometry::Point;

impl CrackedMesh {
    /// Legacy VTK ASCII unstructured grid. Duplicated nodes are separate
    /// points; each `(name, values)` pair becomes a scalar point field.
    pub fn write_vtk<W: Write>(&self, w: &mut W, point_data: &[(&str, &[f64])]) -> Result<()> {
        let npe = self.dim() + 1;
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "fsl cracked mesh")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", self.num_nodes())?;
        for p in self.nodes() {
            writeln!(w, "{:e} {:e} {:e}", p[0], p[1], p[2])?;
        }
        let ne = self.num_elements();
        writeln!(w, "CELLS {} {}", ne, ne * (npe + 1))?;
        for el in self.elements() {
            write!(w, "{npe}")?;
            for n in el {
                write!(w, " {n}")?;
            }
            writeln!(w)?;
        }
        writeln!(w, "CELL_TYPES {ne}")?;
        let cell_type = if self.dim() == 2 { 5 } else { 10 };
        for _ in 0..ne {
            writeln!(w, "{cell_type}")?;
        }
        if !point_data.is_empty() {
            writeln!(w, "POINT_DATA {}", self.num_nodes())?;
            for (name, values) in point_data {
                if values.len() != self.num_nodes() {
                    return Err(Error::Argument(format!(
                        "field `{name}` has {} values for {} nodes",
                        values.len(),
                        self.num_nodes()
                    )));
                }
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in values.iter() {
                    writeln!(w, "{v:e}")?;
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump:
    ///
    /// ```text
    /// dim <N>
    /// nodes <count>
    /// <x> <y> <z> <grid vertex>      one line per node
    /// elements <count>
    /// <n_0> ... <n_N>                one line per element
    /// twins <count>
    /// <node> <twin>                  one line per duplicated node
    /// ```
    pub fn write_dump<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "dim {}", self.dim())?;
        writeln!(w, "nodes {}", self.num_nodes())?;
        for (i, p) in self.nodes().iter().enumerate() {
            writeln!(w, "{:?} {:?} {:?} {}", p[0], p[1], p[2], self.node_vertex(i))?;
        }
        writeln!(w, "elements {}", self.num_elements())?;
        for el in self.elements() {
            let s: Vec<String> = el.iter().map(|n| n.to_string()).collect();
            writeln!(w, "{}", s.join(" "))?;
        }
        let twins = self.twins();
        writeln!(w, "twins {}", twins.len())?;
        for (a, b) in twins {
            writeln!(w, "{a} {b}")?;
        }
        Ok(())
    }
}

/// A parsed mesh dump.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDump {
    pub dim: usize,
    pub nodes: Vec<Point>,
    pub node_vertex: Vec<usize>,
    pub elements: Vec<Vec<usize>>,
    pub twins: Vec<(usize, usize)>,
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("mesh dump line {}: {msg}", line + 1))
}

type Lines<'a> = dyn Iterator<Item = (usize, &'a str)> + 'a;

fn count(want: &str, lines: &mut Lines<'_>) -> Result<usize> {
    let (i, l) = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("missing `{want}` header")))?;
    match l.split_whitespace().collect::<Vec<_>>().as_slice() {
        [tag, n] if *tag == want => n.parse().map_err(|e| parse_err(i, e)),
        _ => Err(parse_err(i, format!("expected `{want} <count>`"))),
    }
}

fn row<T: std::str::FromStr>(lines: &mut Lines<'_>, width: usize) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let (i, l) = lines
        .next()
        .ok_or_else(|| Error::Parse("unexpected end of dump".into()))?;
    let v: Vec<T> = l
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|e| parse_err(i, e)))
        .collect::<Result<_>>()?;
    if v.len() != width {
        return Err(parse_err(i, format!("expected {width} fields")));
    }
    Ok(v)
}

pub fn parse_dump(text: &str) -> Result<MeshDump> {
    let mut lines = text.lines().enumerate();
    let dim = count("dim", &mut lines)?;
    if !(2..=3).contains(&dim) {
        return Err(Error::Parse(format!("dimension {dim} not supported")));
    }
    let nn = count("nodes", &mut lines)?;
    let mut nodes = Vec::with_capacity(nn);
    let mut node_vertex = Vec::with_capacity(nn);
    for _ in 0..nn {
        let (i, l) = lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of dump".into()))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 4 {
            return Err(parse_err(i, "expected `x y z vertex`"));
        }
        let mut p = [0.0; 3];
        for d in 0..3 {
            p[d] = t[d].parse().map_err(|e| parse_err(i, e))?;
        }
        nodes.push(p);
        node_vertex.push(t[3].parse().map_err(|e| parse_err(i, e))?);
    }
    let ne = count("elements", &mut lines)?;
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let el: Vec<usize> = row(&mut lines, dim + 1)?;
        if el.iter().any(|&n| n >= nn) {
            return Err(Error::Parse("element references a missing node".into()));
        }
        elements.push(el);
    }
    let nt = count("twins", &mut lines)?;
    let mut twins = Vec::with_capacity(nt);
    for _ in 0..nt {
        let t: Vec<usize> = row(&mut lines, 2)?;
        twins.push((t[0], t[1]));
    }
    if let Some((i, l)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(i, format!("trailing content `{l}`")));
    }
    Ok(MeshDump {
        dim,
        nodes,
        node_vertex,
        elements,
        twins,
    })
}
