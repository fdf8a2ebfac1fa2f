//! Plain-text dumps of meshes and assembled systems.

use std::io::{self, Write};

use hpcouple_core::geometry::{ElementKind, Tag};
use hpcouple_core::problem::ProblemSetup;
use hpcouple_core::system::BlockSystem;

fn tag_name(t: Tag) -> &'static str {
    match t {
        Tag::Dirichlet => "dirichlet",
        Tag::Neumann => "neumann",
        Tag::Interface => "interface",
    }
}

fn layer(l: Option<u32>) -> String {
    l.map_or("-".into(), |v| v.to_string())
}

/// Writes the FE mesh, its tagged boundary and the boundary mesh with their
/// degrees. Coordinates use the shortest round-trip representation.
pub fn write_meshes<W: Write>(mut w: W, setup: &ProblemSetup) -> io::Result<()> {
    let m = &setup.fe_mesh;
    writeln!(w, "VERTICES {}", m.vertices.len())?;
    for (i, v) in m.vertices.iter().enumerate() {
        writeln!(w, "{i} {} {}", v.x, v.y)?;
    }
    writeln!(w, "ELEMENTS {}", m.elements.len())?;
    for (k, e) in m.elements.iter().enumerate() {
        let nodes = &e.nodes[..e.kind.n_vertices()];
        let kind = match e.kind {
            ElementKind::Triangle => "tri",
            ElementKind::Parallelogram => "quad",
        };
        write!(w, "{k} {kind}")?;
        for n in nodes {
            write!(w, " {n}")?;
        }
        writeln!(w, " p={} layer={} kappa={}", setup.fe_degrees.0[k], layer(e.layer), e.kappa)?;
    }
    writeln!(w, "TAGS {}", m.boundary.len())?;
    for s in &m.boundary {
        writeln!(w, "{} {} {} {} {}", s.a.x, s.a.y, s.b.x, s.b.y, tag_name(s.tag))?;
    }
    let b = &setup.be_mesh;
    writeln!(w, "PANELS {}", b.panels.len())?;
    for (j, p) in b.panels.iter().enumerate() {
        writeln!(
            w,
            "{j} {} {} {} {} {} arc={} p={} layer={}",
            p.a.x,
            p.a.y,
            p.b.x,
            p.b.y,
            tag_name(p.tag),
            p.arc,
            setup.be_degrees.0[j],
            layer(p.layer)
        )?;
    }
    Ok(())
}

/// Dense matrix rows followed by the right-hand side, one value per entry.
pub fn write_system<W: Write>(mut w: W, sys: &BlockSystem) -> io::Result<()> {
    let n = sys.matrix.rows();
    let off = sys.partition.offsets();
    writeln!(w, "# blocks {} {} {} {}", off[1] - off[0], off[2] - off[1], off[3] - off[2], off[4] - off[3])?;
    writeln!(w, "MATRIX {n} {n}")?;
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:.17e}", sys.matrix[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    writeln!(w, "RHS {n}")?;
    for v in &sys.rhs {
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}
