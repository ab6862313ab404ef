//! Plain-text mesh file format.
//!
//! ```text
//! vivmesh 1
//! points <n>
//! <x> <y>
//! ...
//! faces <m>
//! <a> <b> <owner> <neighbour|->
//! ...
//! patches <k>
//! <name> <start> <count>
//! ...
//! ```
//!
//! Internal faces come first; boundary faces are contiguous per patch.

use super::{Face, Mesh2D, Patch, Vec2};
use crate::error::{Result, VivError};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

const MAGIC: &str = "vivmesh";
const VERSION: u32 = 1;

pub fn write_mesh(mesh: &Mesh2D, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "points {}", mesh.n_points()).unwrap();
    for p in &mesh.points {
        writeln!(out, "{:.17e} {:.17e}", p.x, p.y).unwrap();
    }
    writeln!(out, "faces {}", mesh.n_faces()).unwrap();
    for f in &mesh.faces {
        match f.neighbour {
            Some(n) => writeln!(out, "{} {} {} {}", f.a, f.b, f.owner, n).unwrap(),
            None => writeln!(out, "{} {} {} -", f.a, f.b, f.owner).unwrap(),
        }
    }
    writeln!(out, "patches {}", mesh.patches.len()).unwrap();
    for p in &mesh.patches {
        writeln!(out, "{} {} {}", p.name, p.start, p.count).unwrap();
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<Mesh2D> {
    let err = |msg: String| VivError::Format {
        path: path.display().to_string(),
        msg,
    };
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let mut next = || -> Result<String> {
        loop {
            match lines.next() {
                Some(l) => {
                    let l = l?;
                    let t = l.trim();
                    if !t.is_empty() {
                        return Ok(t.to_string());
                    }
                }
                None => return Err(err("unexpected end of file".into())),
            }
        }
    };

    let header = next()?;
    let mut h = header.split_whitespace();
    if h.next() != Some(MAGIC) {
        return Err(err(format!("missing '{MAGIC}' version tag")));
    }
    let version: u32 = h
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err("unreadable version".into()))?;
    if version != VERSION {
        return Err(err(format!(
            "unsupported mesh version {version}, expected {VERSION}"
        )));
    }

    let count_after = |line: &str, key: &str| -> Result<usize> {
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(err(format!("expected '{key} <count>', got '{line}'")));
        }
        it.next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(format!("bad count in '{line}'")))
    };

    let np = count_after(&next()?, "points")?;
    let mut points = Vec::with_capacity(np);
    for _ in 0..np {
        let l = next()?;
        let mut it = l.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(format!("bad point line '{l}'")))?;
        let y: f64 = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(format!("bad point line '{l}'")))?;
        points.push(Vec2::new(x, y));
    }

    let nf = count_after(&next()?, "faces")?;
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let l = next()?;
        let mut it = l.split_whitespace();
        let mut idx = |name: &str| -> Result<usize> {
            it.next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err(format!("bad {name} in face line '{l}'")))
        };
        let a = idx("point")?;
        let b = idx("point")?;
        let owner = idx("owner")?;
        let nb = it
            .next()
            .ok_or_else(|| err(format!("missing neighbour in '{l}'")))?;
        let neighbour = if nb == "-" {
            None
        } else {
            Some(
                nb.parse()
                    .map_err(|_| err(format!("bad neighbour '{nb}'")))?,
            )
        };
        faces.push(Face {
            a,
            b,
            owner,
            neighbour,
        });
    }

    let npatch = count_after(&next()?, "patches")?;
    let mut patches = Vec::with_capacity(npatch);
    for _ in 0..npatch {
        let l = next()?;
        let mut it = l.split_whitespace();
        let name = it
            .next()
            .ok_or_else(|| err("empty patch line".into()))?
            .to_string();
        let start: usize = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(format!("bad patch line '{l}'")))?;
        let count: usize = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(format!("bad patch line '{l}'")))?;
        patches.push(Patch { name, start, count });
    }

    Mesh2D::from_parts(points, faces, patches)
}
