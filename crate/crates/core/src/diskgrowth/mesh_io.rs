//! Plain-text mesh format.
//!
//! ```text
//! k d n_vertices n_simplices generation
//! x_1 ... x_d                 (n_vertices lines, lifted coordinates)
//! i_0 ... i_k                 (n_simplices lines)
//! boundary n_boundary
//! i                           (n_boundary lines)
//! ```
//!
//! Simplices are segments for `k = 1` and triangles for `k = 2`. Boundary
//! vertices are listed in order along the boundary.

use std::io::{BufRead, Write};

use super::Disk;
use crate::error::{LabError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MeshData {
    pub k: usize,
    pub d: usize,
    pub generation: usize,
    pub vertices: Vec<Vec<f64>>,
    pub simplices: Vec<Vec<usize>>,
    pub boundary: Vec<usize>,
}

impl MeshData {
    pub fn from_disk(disk: &Disk) -> Self {
        let simplices = if disk.k() == 1 {
            disk.edges().into_iter().map(|(a, b)| vec![a, b]).collect()
        } else {
            disk.triangles().iter().map(|t| t.to_vec()).collect()
        };
        MeshData {
            k: disk.k(),
            d: disk.dim(),
            generation: disk.generation(),
            vertices: (0..disk.vertex_count()).map(|i| disk.vertex(i).as_slice().to_vec()).collect(),
            simplices,
            boundary: disk.boundary_vertices(),
        }
    }
}

pub fn write_mesh<W: Write>(mesh: &MeshData, mut out: W) -> Result<()> {
    writeln!(out, "{} {} {} {} {}", mesh.k, mesh.d, mesh.vertices.len(), mesh.simplices.len(), mesh.generation)?;
    for v in &mesh.vertices {
        let line: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    for s in &mesh.simplices {
        let line: Vec<String> = s.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    writeln!(out, "boundary {}", mesh.boundary.len())?;
    for b in &mesh.boundary {
        writeln!(out, "{b}")?;
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| LabError::Parse(format!("line {line}: bad number `{tok}`")))
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<MeshData> {
    let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
    let mut it = lines.iter().enumerate().map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()));
    let mut next = |what: &str| it.next().ok_or_else(|| LabError::Parse(format!("missing {what}")));

    let (ln, header) = next("header")?;
    if header.len() != 5 {
        return Err(LabError::Parse(format!("line {ln}: header needs 5 fields")));
    }
    let k: usize = parse(header[0], ln)?;
    let d: usize = parse(header[1], ln)?;
    let nv: usize = parse(header[2], ln)?;
    let ns: usize = parse(header[3], ln)?;
    let generation: usize = parse(header[4], ln)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, toks) = next("vertex")?;
        if toks.len() != d {
            return Err(LabError::Parse(format!("line {ln}: expected {d} coordinates")));
        }
        vertices.push(toks.iter().map(|t| parse(t, ln)).collect::<Result<Vec<f64>>>()?);
    }
    let mut simplices = Vec::with_capacity(ns);
    for _ in 0..ns {
        let (ln, toks) = next("simplex")?;
        if toks.len() != k + 1 {
            return Err(LabError::Parse(format!("line {ln}: expected {} indices", k + 1)));
        }
        let s = toks.iter().map(|t| parse(t, ln)).collect::<Result<Vec<usize>>>()?;
        if s.iter().any(|&i| i >= nv) {
            return Err(LabError::Parse(format!("line {ln}: vertex index out of range")));
        }
        simplices.push(s);
    }
    let (ln, toks) = next("boundary section")?;
    if toks.len() != 2 || toks[0] != "boundary" {
        return Err(LabError::Parse(format!("line {ln}: expected `boundary <count>`")));
    }
    let nb: usize = parse(toks[1], ln)?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, toks) = next("boundary index")?;
        let b: usize = parse(toks.first().copied().unwrap_or(""), ln)?;
        if b >= nv {
            return Err(LabError::Parse(format!("line {ln}: vertex index out of range")));
        }
        boundary.push(b);
    }
    Ok(MeshData { k, d, generation, vertices, simplices, boundary })
}
