//! ASCII XYZ, CSV and PLY readers and writers.
//!
//! Coordinates are written with the shortest decimal form that parses back to the
//! same `f64`, so a save/load cycle is lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::{Point3, PointCloud};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    Ply,
    Csv,
}

impl CloudFormat {
    /// Guess the format from a file extension (`.xyz`, `.txt`, `.ply`, `.csv`).
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "xyz" | "txt" | "pts" => Some(Self::Xyz),
            "ply" => Some(Self::Ply),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" => Ok(Self::Xyz),
            "ply" => Ok(Self::Ply),
            "csv" => Ok(Self::Csv),
            other => Err(Error::invalid(format!("unknown cloud format '{other}'"))),
        }
    }
}

pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let (points, labels) = match format {
        CloudFormat::Xyz => read_xyz(reader, path)?,
        CloudFormat::Csv => read_csv(reader, path)?,
        CloudFormat::Ply => read_ply(reader, path)?,
    };
    if points.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    let cloud = PointCloud::with_labels(points, labels)?;
    Ok(match name {
        Some(n) => cloud.named(n),
        None => cloud,
    })
}

pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>, format: CloudFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_cloud(cloud, &mut w, format).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Serialize `cloud` into any writer.
pub fn write_cloud<W: Write>(
    cloud: &PointCloud,
    w: &mut W,
    format: CloudFormat,
) -> std::io::Result<()> {
    let labels = cloud.labels();
    match format {
        CloudFormat::Xyz => {
            for (i, p) in cloud.points().iter().enumerate() {
                write!(w, "{} {} {}", p[0], p[1], p[2])?;
                if let Some(l) = labels {
                    write!(w, " {}", l[i] as u8)?;
                }
                writeln!(w)?;
            }
        }
        CloudFormat::Csv => {
            write!(w, "x,y,z")?;
            if labels.is_some() {
                write!(w, ",edge")?;
            }
            writeln!(w)?;
            for (i, p) in cloud.points().iter().enumerate() {
                write!(w, "{},{},{}", p[0], p[1], p[2])?;
                if let Some(l) = labels {
                    write!(w, ",{}", l[i] as u8)?;
                }
                writeln!(w)?;
            }
        }
        CloudFormat::Ply => {
            writeln!(w, "ply")?;
            writeln!(w, "format ascii 1.0")?;
            writeln!(w, "element vertex {}", cloud.len())?;
            writeln!(w, "property float x")?;
            writeln!(w, "property float y")?;
            writeln!(w, "property float z")?;
            if labels.is_some() {
                writeln!(w, "property uchar edge")?;
            }
            writeln!(w, "end_header")?;
            for (i, p) in cloud.points().iter().enumerate() {
                write!(w, "{} {} {}", p[0], p[1], p[2])?;
                if let Some(l) = labels {
                    write!(w, " {}", l[i] as u8)?;
                }
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

type Parsed = (Vec<Point3>, Option<Vec<bool>>);

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_coord(tok: &str, path: &Path, line: u64) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid number '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(
            path,
            line,
            format!("non-finite coordinate '{tok}'"),
        ));
    }
    Ok(v)
}

fn parse_label(tok: &str, path: &Path, line: u64) -> Result<bool> {
    match tok.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(parse_err(
            path,
            line,
            format!("edge label must be 0 or 1, got '{other}'"),
        )),
    }
}

fn read_xyz<R: BufRead>(reader: R, path: &Path) -> Result<Parsed> {
    let mut points = Vec::new();
    let mut labels: Option<Vec<bool>> = None;
    let mut has_labels: Option<bool> = None;
    for (n, line) in reader.lines().enumerate() {
        let lineno = n as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let labelled = match fields.len() {
            3 => false,
            4 => true,
            k => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("expected 3 or 4 fields, found {k}"),
                ))
            }
        };
        match has_labels {
            None => {
                has_labels = Some(labelled);
                if labelled {
                    labels = Some(Vec::new());
                }
            }
            Some(h) if h != labelled => {
                return Err(parse_err(
                    path,
                    lineno,
                    "inconsistent field count (label column present on some lines only)",
                ))
            }
            _ => {}
        }
        points.push([
            parse_coord(fields[0], path, lineno)?,
            parse_coord(fields[1], path, lineno)?,
            parse_coord(fields[2], path, lineno)?,
        ]);
        if let Some(l) = labels.as_mut() {
            l.push(parse_label(fields[3], path, lineno)?);
        }
    }
    Ok((points, labels))
}

fn read_csv<R: BufRead>(reader: R, path: &Path) -> Result<Parsed> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    if headers.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (cx, cy, cz) = match (column("x"), column("y"), column("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(parse_err(path, 1, "header must contain x, y and z columns")),
    };
    let cedge = column("edge");

    let mut points = Vec::new();
    let mut labels = cedge.map(|_| Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |c: usize| {
            rec.get(c)
                .ok_or_else(|| parse_err(path, line, format!("missing column {}", c + 1)))
        };
        points.push([
            parse_coord(get(cx)?, path, line)?,
            parse_coord(get(cy)?, path, line)?,
            parse_coord(get(cz)?, path, line)?,
        ]);
        if let (Some(c), Some(l)) = (cedge, labels.as_mut()) {
            l.push(parse_label(get(c)?, path, line)?);
        }
    }
    Ok((points, labels))
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
    has_list: bool,
}

fn read_ply<R: BufRead>(reader: R, path: &Path) -> Result<Parsed> {
    let mut lines = reader.lines().enumerate().map(|(n, l)| (n as u64 + 1, l));
    let mut next_line = || -> Result<Option<(u64, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((n, Ok(l))) => Ok(Some((n, l))),
            Some((_, Err(e))) => Err(Error::io(path, e)),
        }
    };

    match next_line()? {
        None => return Err(Error::EmptyFile(path.to_path_buf())),
        Some((_, l)) if l.trim() == "ply" => {}
        Some((n, _)) => return Err(parse_err(path, n, "missing 'ply' magic")),
    }

    let mut elements: Vec<PlyElement> = Vec::new();
    loop {
        let Some((n, line)) = next_line()? else {
            return Err(parse_err(path, 0, "unexpected end of header"));
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(parse_err(
                    path,
                    n,
                    format!("unsupported PLY format '{other}' (only ascii is read)"),
                ))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_err(path, n, format!("bad element count '{count}'")))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                    has_list: false,
                });
            }
            ["property", "list", ..] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, n, "property before any element"))?;
                el.has_list = true;
                el.properties.push(String::new());
            }
            ["property", _ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, n, "property before any element"))?;
                el.properties.push(name.to_string());
            }
            _ => {
                return Err(parse_err(
                    path,
                    n,
                    format!("unrecognized header line '{line}'"),
                ))
            }
        }
    }

    let mut points = Vec::new();
    let mut labels = None;
    for el in &elements {
        if el.name != "vertex" {
            for _ in 0..el.count {
                if next_line()?.is_none() {
                    return Err(parse_err(
                        path,
                        0,
                        format!("truncated '{}' element", el.name),
                    ));
                }
            }
            continue;
        }
        if el.has_list {
            return Err(parse_err(
                path,
                0,
                "list properties on vertices are not supported",
            ));
        }
        let col = |name: &str| el.properties.iter().position(|p| p == name);
        let (cx, cy, cz) = match (col("x"), col("y"), col("z")) {
            (Some(x), Some(y), Some(z)) => (x, y, z),
            _ => return Err(parse_err(path, 0, "vertex element lacks x, y or z")),
        };
        let cedge = col("edge");
        let mut lab = cedge.map(|_| Vec::with_capacity(el.count));
        points.reserve(el.count);
        let mut read = 0;
        while read < el.count {
            let Some((n, line)) = next_line()? else {
                return Err(parse_err(
                    path,
                    0,
                    format!("expected {} vertices, found {read}", el.count),
                ));
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() != el.properties.len() {
                return Err(parse_err(
                    path,
                    n,
                    format!(
                        "expected {} values, found {}",
                        el.properties.len(),
                        toks.len()
                    ),
                ));
            }
            points.push([
                parse_coord(toks[cx], path, n)?,
                parse_coord(toks[cy], path, n)?,
                parse_coord(toks[cz], path, n)?,
            ]);
            if let (Some(c), Some(l)) = (cedge, lab.as_mut()) {
                l.push(parse_label(toks[c], path, n)?);
            }
            read += 1;
        }
        labels = lab;
    }
    Ok((points, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn xyz_three_points() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.xyz", "# comment\n0 0 0\n1 0 0\n\n0 1 0\n");
        let c = load_cloud(&p, CloudFormat::Xyz).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.point(0), &[0.0, 0.0, 0.0]);
        assert!(c.labels().is_none());
        assert_eq!(c.name(), Some("a"));
    }

    #[test]
    fn xyz_reports_bad_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "bad.xyz", "0 0 0\n1 zero 0\n");
        match load_cloud(&p, CloudFormat::Xyz) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let p = write(&dir, "mixed.xyz", "0 0 0 1\n1 0 0\n");
        assert!(matches!(
            load_cloud(&p, CloudFormat::Xyz),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn csv_with_edge_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,y,z,edge\n1,2,3,1\n");
        let c = load_cloud(&p, CloudFormat::Csv).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.point(0), &[1.0, 2.0, 3.0]);
        assert_eq!(c.labels(), Some(&[true][..]));
    }

    #[test]
    fn csv_requires_header_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "a,b,c\n1,2,3\n");
        assert!(matches!(
            load_cloud(&p, CloudFormat::Csv),
            Err(Error::Parse { .. })
        ));
        let p = write(&dir, "b.csv", "x,y,z\n1,2,3\n4,oops,6\n");
        assert!(matches!(
            load_cloud(&p, CloudFormat::Csv),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn empty_files() {
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt, body) in [
            ("e.xyz", CloudFormat::Xyz, "# nothing\n"),
            ("e.csv", CloudFormat::Csv, "x,y,z\n"),
            ("e.ply", CloudFormat::Ply, ""),
        ] {
            let p = write(&dir, name, body);
            assert!(
                matches!(load_cloud(&p, fmt), Err(Error::EmptyFile(_))),
                "{name}"
            );
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_cloud("/nonexistent/cloud.xyz", CloudFormat::Xyz).unwrap_err();
        assert!(err.is_io());
    }

    #[test]
    fn ply_with_faces_and_extra_properties() {
        let dir = tempfile::tempdir().unwrap();
        let body = "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\n\
                    property float x\nproperty float y\nproperty float z\n\
                    property uchar red\nproperty uchar edge\n\
                    element face 1\nproperty list uchar int vertex_indices\nend_header\n\
                    0 0 0 255 1\n1 0 0 0 0\n0 1 0 3 1\n3 0 1 2\n";
        let p = write(&dir, "a.ply", body);
        let c = load_cloud(&p, CloudFormat::Ply).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.labels(), Some(&[true, false, true][..]));
    }

    #[test]
    fn ply_rejects_binary() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "b.ply",
            "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nend_header\n",
        );
        assert!(matches!(
            load_cloud(&p, CloudFormat::Ply),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn writers_follow_format_rules() {
        let labelled = PointCloud::with_labels(vec![[0.5, 1.0, -2.25]], Some(vec![true])).unwrap();
        let mut buf = Vec::new();
        write_cloud(&labelled, &mut buf, CloudFormat::Csv).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,y,z,edge\n0.5,1,-2.25,1\n"
        );

        let plain = PointCloud::new(vec![[0.5, 1.0, -2.25]]).unwrap();
        let mut buf = Vec::new();
        write_cloud(&plain, &mut buf, CloudFormat::Ply).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("element vertex 1\n"));
        assert!(!text.contains("edge"));
        assert!(!text.contains("element face"));
    }

    #[test]
    fn round_trip_all_formats() {
        let dir = tempfile::tempdir().unwrap();
        let pts = vec![
            [0.1, -0.2, 1.0 / 3.0],
            [1e-12, 123456.789, -7.0],
            [std::f64::consts::PI, 2.0f64.sqrt(), 1e300],
        ];
        let labels = Some(vec![true, false, true]);
        let cloud = PointCloud::with_labels(pts, labels).unwrap();
        for fmt in [CloudFormat::Xyz, CloudFormat::Csv, CloudFormat::Ply] {
            let p = dir.path().join(format!("rt.{fmt:?}"));
            save_cloud(&cloud, &p, fmt).unwrap();
            let back = load_cloud(&p, fmt).unwrap();
            assert_eq!(back.points(), cloud.points(), "{fmt:?}");
            assert_eq!(back.labels(), cloud.labels(), "{fmt:?}");
        }
    }

    #[test]
    fn format_from_path() {
        assert_eq!(
            CloudFormat::from_path(Path::new("a/b.PLY")),
            Some(CloudFormat::Ply)
        );
        assert_eq!(
            CloudFormat::from_path(Path::new("a.csv")),
            Some(CloudFormat::Csv)
        );
        assert_eq!(
            CloudFormat::from_path(Path::new("a.xyz")),
            Some(CloudFormat::Xyz)
        );
        assert_eq!(CloudFormat::from_path(Path::new("a.bin")), None);
        assert!("obj".parse::<CloudFormat>().is_err());
    }
}
