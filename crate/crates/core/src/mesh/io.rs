//! OBJ (`v`/`vn`/`f` records) and PLY (ASCII, binary little-endian) I/O.
//! Polygons with more than three corners are fan-triangulated.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::{Point3, Vector3};

/// Loads an OBJ or PLY mesh, choosing the parser by file extension (falling
/// back to sniffing the `ply` magic).
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("ply") => parse_ply(path, &bytes),
        Some("obj") => parse_obj(path, &bytes),
        _ if bytes.starts_with(b"ply") => parse_ply(path, &bytes),
        _ => parse_obj(path, &bytes),
    }
}

fn parse_obj(path: &Path, bytes: &[u8]) -> Result<TriangleMesh> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse_offset(path, e.valid_up_to() as u64, "invalid UTF-8"))?;
    let mut vertices: Vec<Point3> = Vec::new();
    let mut file_normals: Vec<Vector3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    // per face corner: referenced normal index, if any
    let mut corner_normals: Vec<[Option<usize>; 3]> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tok = line.split_whitespace();
        let Some(kind) = tok.next() else { continue };
        match kind {
            "v" | "vn" => {
                let xyz: Vec<f64> = tok
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::parse_line(path, line_no, format!("bad number: {e}")))?;
                if xyz.len() != 3 {
                    return Err(Error::parse_line(path, line_no, format!("`{kind}` needs 3 coordinates")));
                }
                if kind == "v" {
                    vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
                } else {
                    file_normals.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
                }
            }
            "f" => {
                let mut corners = Vec::new();
                for t in tok {
                    let mut parts = t.split('/');
                    let vi = resolve_obj_index(parts.next(), vertices.len())
                        .ok_or_else(|| Error::parse_line(path, line_no, format!("bad vertex reference `{t}`")))?;
                    let _texture = parts.next();
                    let ni = match parts.next() {
                        Some(s) if !s.is_empty() => Some(
                            resolve_obj_index(Some(s), file_normals.len()).ok_or_else(|| {
                                Error::parse_line(path, line_no, format!("bad normal reference `{t}`"))
                            })?,
                        ),
                        _ => None,
                    };
                    corners.push((vi, ni));
                }
                if corners.len() < 3 {
                    return Err(Error::parse_line(path, line_no, "face needs at least 3 vertices"));
                }
                for i in 1..corners.len() - 1 {
                    let (a, b, c) = (corners[0], corners[i], corners[i + 1]);
                    faces.push([a.0, b.0, c.0]);
                    corner_normals.push([a.1, b.1, c.1]);
                }
            }
            _ => {}
        }
    }
    if faces.is_empty() {
        return Err(Error::EmptyMesh);
    }

    // Trust file normals only if every corner carries one.
    let all_have_normals = corner_normals.iter().all(|c| c.iter().all(Option::is_some));
    if all_have_normals && !file_normals.is_empty() {
        let mut seen: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
        for (f, cn) in faces.iter().zip(&corner_normals) {
            for (v, n) in f.iter().zip(cn) {
                let n = n.expect("checked above");
                if !seen[*v].contains(&n) {
                    seen[*v].push(n);
                }
            }
        }
        let normals = seen
            .iter()
            .map(|ns| ns.iter().fold(Vector3::zeros(), |acc, &n| acc + file_normals[n]))
            .collect();
        TriangleMesh::with_normals(vertices, faces, normals)
    } else {
        TriangleMesh::new(vertices, faces)
    }
}

/// OBJ indices are 1-based; negative values count back from the end.
fn resolve_obj_index(token: Option<&str>, count: usize) -> Option<usize> {
    let i: i64 = token?.parse().ok()?;
    let idx = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return None;
    };
    (0..count as i64).contains(&idx).then_some(idx as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, PartialEq)]
enum PlyFormat {
    Ascii,
    BinaryLe,
}

/// One decoded element record: scalars and lists in property order.
enum Value {
    Scalar(f64),
    List(Vec<f64>),
}

fn parse_ply(path: &Path, bytes: &[u8]) -> Result<TriangleMesh> {
    // header is ASCII up to and including "end_header\n"
    let marker = b"end_header";
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| Error::parse_line(path, 1, "missing end_header"))?;
    let mut body_start = end + marker.len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let header = std::str::from_utf8(&bytes[..end])
        .map_err(|_| Error::parse_line(path, 1, "header is not ASCII"))?;

    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut header_lines = 0;
    for (i, line) in header.lines().enumerate() {
        header_lines = i + 1;
        let ln = i + 1;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            [] => {}
            ["ply"] if i == 0 => {}
            _ if i == 0 => return Err(Error::parse_line(path, 1, "missing `ply` magic")),
            ["format", "ascii", _] => format = Some(PlyFormat::Ascii),
            ["format", "binary_little_endian", _] => format = Some(PlyFormat::BinaryLe),
            ["format", other, ..] => {
                return Err(Error::parse_line(path, ln, format!("unsupported format `{other}`")))
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| Error::parse_line(path, ln, "bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, name] => {
                let (Some(count), Some(item)) = (Scalar::parse(ct), Scalar::parse(it)) else {
                    return Err(Error::parse_line(path, ln, "bad list property type"));
                };
                elements
                    .last_mut()
                    .ok_or_else(|| Error::parse_line(path, ln, "property before element"))?
                    .props
                    .push(Property::List { name: name.to_string(), count, item });
            }
            ["property", ty, name] => {
                let ty = Scalar::parse(ty)
                    .ok_or_else(|| Error::parse_line(path, ln, format!("unknown type `{ty}`")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| Error::parse_line(path, ln, "property before element"))?
                    .props
                    .push(Property::Scalar { name: name.to_string(), ty });
            }
            _ => return Err(Error::parse_line(path, ln, format!("unrecognized header line `{line}`"))),
        }
    }
    let format = format.ok_or_else(|| Error::parse_line(path, 2, "missing format line"))?;

    let mut vertices = Vec::new();
    let mut normals: Vec<Vector3> = Vec::new();
    let mut has_normals = false;
    let mut faces = Vec::new();

    let mut reader: Box<dyn RecordReader> = match format {
        PlyFormat::Ascii => Box::new(AsciiReader {
            lines: std::str::from_utf8(&bytes[body_start..])
                .map_err(|_| Error::parse_line(path, header_lines + 1, "body is not ASCII"))?
                .lines()
                .map(str::to_owned)
                .collect(),
            next: 0,
            first_line: header_lines + 2,
        }),
        PlyFormat::BinaryLe => Box::new(BinaryReader {
            data: &bytes[body_start..],
            pos: 0,
            base: body_start as u64,
        }),
    };

    for el in &elements {
        let col = |n: &str| {
            el.props
                .iter()
                .position(|p| matches!(p, Property::Scalar { name, .. } if name == n))
        };
        let (xi, yi, zi) = (col("x"), col("y"), col("z"));
        let (nxi, nyi, nzi) = (col("nx"), col("ny"), col("nz"));
        let list_i = el.props.iter().position(
            |p| matches!(p, Property::List { name, .. } if name == "vertex_indices" || name == "vertex_index"),
        );
        if el.name == "vertex" && (xi.is_none() || yi.is_none() || zi.is_none()) {
            return Err(Error::parse_line(path, 1, "vertex element lacks x/y/z"));
        }
        has_normals |= el.name == "vertex" && nxi.is_some() && nyi.is_some() && nzi.is_some();
        for _ in 0..el.count {
            let rec = reader.record(path, &el.props)?;
            let scalar = |i: Option<usize>| match i.map(|i| &rec[i]) {
                Some(Value::Scalar(v)) => *v,
                _ => 0.0,
            };
            match el.name.as_str() {
                "vertex" => {
                    vertices.push(Point3::new(scalar(xi), scalar(yi), scalar(zi)));
                    if has_normals {
                        normals.push(Vector3::new(scalar(nxi), scalar(nyi), scalar(nzi)));
                    }
                }
                "face" => {
                    let Some(Value::List(idx)) = list_i.map(|i| &rec[i]) else {
                        return Err(reader.locate(path, "face element lacks vertex_indices".into()));
                    };
                    if idx.len() < 3 {
                        return Err(reader.locate(path, "face needs at least 3 vertices".into()));
                    }
                    let idx: Vec<usize> = idx
                        .iter()
                        .map(|&i| {
                            if i < 0.0 || i.fract() != 0.0 || i as usize >= vertices.len() {
                                Err(reader.locate(
                                    path,
                                    format!("face index {i} out of range for {} vertices", vertices.len()),
                                ))
                            } else {
                                Ok(i as usize)
                            }
                        })
                        .collect::<Result<_>>()?;
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
    }
    if faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if has_normals {
        TriangleMesh::with_normals(vertices, faces, normals)
    } else {
        TriangleMesh::new(vertices, faces)
    }
}

trait RecordReader {
    fn record(&mut self, path: &Path, props: &[Property]) -> Result<Vec<Value>>;
    /// Error located at the most recently read record.
    fn locate(&self, path: &Path, msg: String) -> Error;
}

struct AsciiReader {
    lines: Vec<String>,
    next: usize,
    first_line: usize,
}

impl AsciiReader {
    fn current_line(&self) -> usize {
        self.first_line + self.next.saturating_sub(1)
    }
}

impl RecordReader for AsciiReader {
    fn record(&mut self, path: &Path, props: &[Property]) -> Result<Vec<Value>> {
        let line = loop {
            let Some(l) = self.lines.get(self.next) else {
                self.next += 1;
                return Err(Error::parse_line(path, self.current_line(), "unexpected end of data"));
            };
            self.next += 1;
            if !l.trim().is_empty() {
                break l.clone();
            }
        };
        let ln = self.current_line();
        let mut tok = line.split_whitespace();
        let mut num = |what: &str| -> Result<f64> {
            tok.next()
                .ok_or_else(|| Error::parse_line(path, ln, format!("missing {what}")))?
                .parse::<f64>()
                .map_err(|_| Error::parse_line(path, ln, format!("bad {what}")))
        };
        props
            .iter()
            .map(|p| match p {
                Property::Scalar { name, .. } => num(name).map(Value::Scalar),
                Property::List { name, .. } => {
                    let n = num("list count")?;
                    if n < 0.0 || n.fract() != 0.0 {
                        return Err(Error::parse_line(path, ln, "bad list count"));
                    }
                    (0..n as usize).map(|_| num(name)).collect::<Result<_>>().map(Value::List)
                }
            })
            .collect()
    }

    fn locate(&self, path: &Path, msg: String) -> Error {
        Error::parse_line(path, self.current_line(), msg)
    }
}

struct BinaryReader<'a> {
    data: &'a [u8],
    pos: usize,
    base: u64,
}

impl BinaryReader<'_> {
    fn take(&mut self, path: &Path, ty: Scalar) -> Result<f64> {
        let n = ty.size();
        let b = self.data.get(self.pos..self.pos + n).ok_or_else(|| {
            Error::parse_offset(path, self.base + self.pos as u64, "unexpected end of data")
        })?;
        self.pos += n;
        Ok(ty.read_le(b))
    }
}

impl RecordReader for BinaryReader<'_> {
    fn record(&mut self, path: &Path, props: &[Property]) -> Result<Vec<Value>> {
        props
            .iter()
            .map(|p| match *p {
                Property::Scalar { ty, .. } => self.take(path, ty).map(Value::Scalar),
                Property::List { count, item, .. } => {
                    let n = self.take(path, count)?;
                    if n < 0.0 {
                        return Err(Error::parse_offset(path, self.base + self.pos as u64, "negative list count"));
                    }
                    (0..n as usize).map(|_| self.take(path, item)).collect::<Result<_>>().map(Value::List)
                }
            })
            .collect()
    }

    fn locate(&self, path: &Path, msg: String) -> Error {
        Error::parse_offset(path, self.base + self.pos as u64, msg)
    }
}

/// Writes `v`, `vn` and `f v//vn` records. Coordinates use Rust's shortest
/// round-trip float formatting, so loading the file reproduces the mesh
/// exactly.
pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for p in mesh.vertices() {
        writeln!(out, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for n in mesh.vertex_normals() {
        writeln!(out, "vn {} {} {}", n.x, n.y, n.z)?;
    }
    for f in mesh.faces() {
        let [a, b, c] = f.map(|i| i + 1);
        writeln!(out, "f {a}//{a} {b}//{b} {c}//{c}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_ply_ascii(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    write_ply_header(&mut out, mesh, "ascii")?;
    for (p, n) in mesh.vertices().iter().zip(mesh.vertex_normals()) {
        writeln!(out, "{} {} {} {} {} {}", p.x, p.y, p.z, n.x, n.y, n.z)?;
    }
    for [a, b, c] in mesh.faces() {
        writeln!(out, "3 {a} {b} {c}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_ply_binary(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    write_ply_header(&mut out, mesh, "binary_little_endian")?;
    for (p, n) in mesh.vertices().iter().zip(mesh.vertex_normals()) {
        for c in [p.x, p.y, p.z, n.x, n.y, n.z] {
            out.write_all(&c.to_le_bytes())?;
        }
    }
    for f in mesh.faces() {
        out.write_all(&[3u8])?;
        for &i in f {
            let i = u32::try_from(i).map_err(|_| Error::Format("vertex index exceeds u32".into()))?;
            out.write_all(&i.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn write_ply_header(out: &mut impl Write, mesh: &TriangleMesh, format: &str) -> std::io::Result<()> {
    writeln!(out, "ply")?;
    writeln!(out, "format {format} 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertex_count())?;
    for p in ["x", "y", "z", "nx", "ny", "nz"] {
        writeln!(out, "property double {p}")?;
    }
    writeln!(out, "element face {}", mesh.face_count())?;
    writeln!(out, "property list uchar uint vertex_indices")?;
    writeln!(out, "end_header")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Location;
    use crate::mesh::primitives::{unit_cube, uv_sphere};

    fn write(dir: &tempfile::TempDir, name: &str, body: &[u8]) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn obj_triangle_gets_planar_normals() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.obj", b"# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
        let m = load_mesh(&p).unwrap();
        assert_eq!(m.vertex_count(), 3);
        for n in m.vertex_normals() {
            assert_eq!(*n, Vector3::z());
        }
    }

    #[test]
    fn obj_quads_and_negative_indices() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "q.obj", b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4/1 -3/2 -2/3 -1/4\n");
        let m = load_mesh(&p).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_out_of_range_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::new();
        for p in unit_cube(1).vertices() {
            body.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z));
        }
        body.push_str("f 1 2 3\nf 1 2 9\n");
        let p = write(&dir, "bad.obj", body.as_bytes());
        match load_mesh(&p).unwrap_err() {
            Error::Parse { location, .. } => assert_eq!(location, Location::Line(10)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn obj_without_faces_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.obj", b"v 0 0 0\n");
        assert!(matches!(load_mesh(&p).unwrap_err(), Error::EmptyMesh));
    }

    #[test]
    fn ply_ascii_cube_counts() {
        let dir = tempfile::tempdir().unwrap();
        let cube = unit_cube(1);
        let mut body = format!(
            "ply\nformat ascii 1.0\ncomment unit cube\nelement vertex 8\nproperty float x\nproperty float y\nproperty float z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
            cube.face_count()
        );
        for p in cube.vertices() {
            body.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
        }
        for [a, b, c] in cube.faces() {
            body.push_str(&format!("3 {a} {b} {c}\n"));
        }
        let m = load_mesh(write(&dir, "cube.ply", body.as_bytes())).unwrap();
        assert_eq!(m.vertex_count(), 8);
        assert_eq!(m.face_count(), 12);
        assert!(!m.normals_from_source());
    }

    #[test]
    fn ply_ascii_bad_index_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let body = b"ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n";
        match load_mesh(write(&dir, "b.ply", body)).unwrap_err() {
            Error::Parse { location, .. } => assert_eq!(location, Location::Line(13)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn ply_binary_truncated_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ply");
        save_ply_binary(&unit_cube(1), &p).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(
            load_mesh(&p).unwrap_err(),
            Error::Parse { location: Location::Offset(_), .. }
        ));
    }

    #[test]
    fn round_trips_are_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = uv_sphere(0.123456789, 7, 11);
        let obj = dir.path().join("s.obj");
        let ply_a = dir.path().join("s.ply");
        let ply_b = dir.path().join("sb.ply");
        save_obj(&mesh, &obj).unwrap();
        save_ply_ascii(&mesh, &ply_a).unwrap();
        save_ply_binary(&mesh, &ply_b).unwrap();
        for p in [obj, ply_a, ply_b] {
            let back = load_mesh(&p).unwrap();
            assert_eq!(back.vertices(), mesh.vertices());
            assert_eq!(back.faces(), mesh.faces());
            assert!(back.normals_from_source());
            for (a, b) in back.vertex_normals().iter().zip(mesh.vertex_normals()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
