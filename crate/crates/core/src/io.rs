//! ASCII XYZ, PLY (ASCII and binary little-endian) and OFF readers/writers.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, TriangleMesh, Vec3};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_coords(path: &Path, line_no: usize, fields: &[&str]) -> Result<Vec3> {
    if fields.len() < 3 {
        return Err(parse_err(path, line_no, "expected three coordinates"));
    }
    let mut p = [0.0; 3];
    for (c, f) in p.iter_mut().zip(fields) {
        let v: f64 = f.parse().map_err(|_| parse_err(path, line_no, format!("invalid number '{f}'")))?;
        if !v.is_finite() {
            return Err(parse_err(path, line_no, format!("non-finite coordinate '{f}'")));
        }
        *c = v;
    }
    Ok(p)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `{:?}` on f64 prints the shortest string that round-trips exactly.
fn fmt_point(out: &mut Vec<u8>, p: &Vec3) {
    writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2]).unwrap();
}

pub fn read_xyz(path: &Path) -> Result<PointCloud> {
    let text = read_text(path)?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        points.push(parse_coords(path, i + 1, &fields)?);
    }
    if points.is_empty() {
        return Err(parse_err(path, 1, "no points"));
    }
    PointCloud::new(points)
}

pub fn write_xyz(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut out = Vec::new();
    for p in &cloud.points {
        fmt_point(&mut out, p);
    }
    write_bytes(path, &out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Clone, Copy)]
enum PlyScalar {
    F32,
    F64,
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
}

impl PlyScalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "float" | "float32" => PlyScalar::F32,
            "double" | "float64" => PlyScalar::F64,
            "char" | "int8" => PlyScalar::I8,
            "uchar" | "uint8" => PlyScalar::U8,
            "short" | "int16" => PlyScalar::I16,
            "ushort" | "uint16" => PlyScalar::U16,
            "int" | "int32" => PlyScalar::I32,
            "uint" | "uint32" => PlyScalar::U32,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyScalar::I8 | PlyScalar::U8 => 1,
            PlyScalar::I16 | PlyScalar::U16 => 2,
            PlyScalar::F32 | PlyScalar::I32 | PlyScalar::U32 => 4,
            PlyScalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            PlyScalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyScalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
            PlyScalar::I8 => b[0] as i8 as f64,
            PlyScalar::U8 => b[0] as f64,
            PlyScalar::I16 => i16::from_le_bytes(b[..2].try_into().unwrap()) as f64,
            PlyScalar::U16 => u16::from_le_bytes(b[..2].try_into().unwrap()) as f64,
            PlyScalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyScalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
        }
    }
}

struct LineCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl LineCursor<'_> {
    fn next_line(&mut self) -> Option<(usize, String)> {
        if self.pos >= self.bytes.len() {
            return None;
        }
        let rest = &self.bytes[self.pos..];
        let end = rest.iter().position(|&b| b == b'\n').map_or(self.bytes.len(), |e| self.pos + e);
        let s = String::from_utf8_lossy(&self.bytes[self.pos..end])
            .trim_end_matches('\r')
            .to_string();
        self.pos = (end + 1).min(self.bytes.len());
        self.line += 1;
        Some((self.line, s))
    }
}

/// Reads the `vertex` element of a PLY file (x, y, z; other scalar
/// properties are skipped). Elements after `vertex` are ignored.
pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = LineCursor {
        bytes: &bytes,
        pos: 0,
        line: 0,
    };

    match cur.next_line() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(path, 1, "missing 'ply' magic")),
    }
    let mut encoding = None;
    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut seen_vertex = false;
    let mut props: Vec<(String, PlyScalar)> = Vec::new();
    loop {
        let (ln, line) = cur.next_line().ok_or_else(|| parse_err(path, cur.line, "unterminated header"))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => encoding = Some(PlyEncoding::Ascii),
            ["format", "binary_little_endian", _] => encoding = Some(PlyEncoding::BinaryLittleEndian),
            ["format", other, _] => {
                return Err(parse_err(path, ln, format!("unsupported format '{other}'")));
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                in_vertex = *name == "vertex";
                if in_vertex {
                    if seen_vertex {
                        return Err(parse_err(path, ln, "duplicate vertex element"));
                    }
                    seen_vertex = true;
                    vertex_count = Some(count.parse::<usize>().map_err(|_| parse_err(path, ln, "bad element count"))?);
                } else if !seen_vertex {
                    return Err(parse_err(path, ln, "elements before 'vertex' are not supported"));
                }
            }
            ["property", "list", ..] if in_vertex => {
                return Err(parse_err(path, ln, "list properties on vertices are not supported"));
            }
            ["property", ty, name] if in_vertex => {
                let s = PlyScalar::parse(ty).ok_or_else(|| parse_err(path, ln, format!("unknown type '{ty}'")))?;
                props.push((name.to_string(), s));
            }
            ["property", ..] => {}
            _ => return Err(parse_err(path, ln, format!("unexpected header line '{line}'"))),
        }
    }
    let encoding = encoding.ok_or_else(|| parse_err(path, cur.line, "missing format line"))?;
    let count = vertex_count.ok_or_else(|| parse_err(path, cur.line, "missing vertex element"))?;
    let col = |n: &str| props.iter().position(|(p, _)| p == n);
    let (cx, cy, cz) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(parse_err(path, cur.line, "vertex element lacks x/y/z")),
    };

    let mut points = Vec::with_capacity(count);
    match encoding {
        PlyEncoding::Ascii => {
            while points.len() < count {
                let (ln, line) = cur
                    .next_line()
                    .ok_or_else(|| parse_err(path, cur.line + 1, "truncated vertex list"))?;
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.is_empty() {
                    continue;
                }
                if f.len() < props.len() {
                    return Err(parse_err(path, ln, "too few vertex properties"));
                }
                points.push(parse_coords(path, ln, &[f[cx], f[cy], f[cz]])?);
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            let offsets: Vec<usize> = props
                .iter()
                .scan(0usize, |acc, (_, s)| {
                    let o = *acc;
                    *acc += s.size();
                    Some(o)
                })
                .collect();
            let stride: usize = props.iter().map(|(_, s)| s.size()).sum();
            let header_lines = cur.line;
            for v in 0..count {
                let base = cur.pos + v * stride;
                if base + stride > bytes.len() {
                    return Err(parse_err(path, header_lines + v + 1, "truncated binary vertex data"));
                }
                let rec = &bytes[base..base + stride];
                let p = [cx, cy, cz].map(|c| props[c].1.read_le(&rec[offsets[c]..]));
                if p.iter().any(|x| !x.is_finite()) {
                    // Binary data has no lines; report the vertex record number.
                    return Err(parse_err(
                        path,
                        header_lines + v + 1,
                        format!("non-finite coordinate in vertex {v}"),
                    ));
                }
                points.push(p);
            }
        }
    }
    PointCloud::new(points)
}

pub fn write_ply(path: &Path, cloud: &PointCloud, encoding: PlyEncoding) -> Result<()> {
    let mut out = Vec::new();
    let fmt = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    let ty = "double";
    write!(
        out,
        "ply\nformat {fmt} 1.0\nelement vertex {}\nproperty {ty} x\nproperty {ty} y\nproperty {ty} z\nend_header\n",
        cloud.len()
    )
    .unwrap();
    match encoding {
        PlyEncoding::Ascii => cloud.points.iter().for_each(|p| fmt_point(&mut out, p)),
        PlyEncoding::BinaryLittleEndian => {
            for p in &cloud.points {
                for c in p {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
    }
    write_bytes(path, &out)
}

pub fn read_off(path: &Path) -> Result<TriangleMesh> {
    let text = read_text(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, head) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let mut rest_of_head: Vec<&str> = Vec::new();
    if let Some(r) = head.strip_prefix("OFF") {
        rest_of_head.extend(r.split_whitespace());
    } else {
        return Err(parse_err(path, ln, "missing 'OFF' header"));
    }
    let (ln, counts) = if rest_of_head.len() >= 2 {
        (ln, rest_of_head)
    } else {
        let (l, c) = lines.next().ok_or_else(|| parse_err(path, ln + 1, "missing counts line"))?;
        (l, c.split_whitespace().collect())
    };
    let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(path, ln, format!("bad count '{s}'")));
    if counts.len() < 2 {
        return Err(parse_err(path, ln, "counts line needs vertex and face counts"));
    }
    let (nv, nf) = (num(counts[0])?, num(counts[1])?);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, s) = lines.next().ok_or_else(|| parse_err(path, ln, "truncated vertex list"))?;
        let f: Vec<&str> = s.split_whitespace().collect();
        vertices.push(parse_coords(path, l, &f)?);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, s) = lines.next().ok_or_else(|| parse_err(path, ln, "truncated face list"))?;
        let f: Vec<usize> = s
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| parse_err(path, l, format!("bad index '{t}'"))))
            .collect::<Result<_>>()?;
        if f.is_empty() || f[0] < 3 || f.len() < 1 + f[0] {
            return Err(parse_err(path, l, "malformed face"));
        }
        if f[1..=f[0]].iter().any(|&i| i >= nv) {
            return Err(parse_err(path, l, "face index out of range"));
        }
        // Fan-triangulate polygons.
        for j in 2..f[0] {
            faces.push([f[1], f[j], f[j + 1]]);
        }
    }
    TriangleMesh::new(vertices, faces).map_err(|e| parse_err(path, ln, e.to_string()))
}

pub fn write_off(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "OFF\n{} {} 0", mesh.vertices.len(), mesh.faces.len()).unwrap();
    mesh.vertices.iter().for_each(|p| fmt_point(&mut out, p));
    for f in &mesh.faces {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2]).unwrap();
    }
    write_bytes(path, &out)
}

/// Dispatches on extension: `.ply` or `.xyz`.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ply") => read_ply(path),
        Some("xyz") | Some("txt") => read_xyz(path),
        _ => Err(parse_err(path, 0, "unknown point-cloud extension (expected .ply or .xyz)")),
    }
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("xyz") | Some("txt") => write_xyz(path, cloud),
        _ => write_ply(path, cloud, PlyEncoding::Ascii),
    }
}
