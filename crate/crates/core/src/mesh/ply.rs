//! Binary little-endian PLY with per-vertex scalar channels.
//!
//! Layout: float32 vertex properties `x, y, z` followed by one float32
//! property per scalar channel (in channel order), then an int32 face
//! list with uchar counts (always 3). The reader accepts exactly this
//! subset, which is enough to round-trip meshes written here.

use super::TriMesh;
use crate::{Error, Result};
use std::fs;
use std::io::Write;
use std::path::Path;

pub fn write_ply(path: impl AsRef<Path>, mesh: &TriMesh) -> Result<()> {
    let path = path.as_ref();
    for (name, values) in &mesh.channels {
        if values.len() != mesh.vertices.len() {
            return Err(Error::InvalidParameter(format!(
                "channel {name} has {} values for {} vertices",
                values.len(),
                mesh.vertices.len()
            )));
        }
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::InvalidParameter(format!(
                "channel name {name:?} is not a valid PLY property name"
            )));
        }
    }
    if mesh.vertices.len() > i32::MAX as usize {
        return Err(Error::InvalidParameter(
            "mesh too large for int32 PLY indices".into(),
        ));
    }

    let mut header = String::new();
    header.push_str("ply\n");
    header.push_str("format binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", mesh.vertices.len()));
    header.push_str("property float x\nproperty float y\nproperty float z\n");
    for (name, _) in &mesh.channels {
        header.push_str(&format!("property float {name}\n"));
    }
    header.push_str(&format!("element face {}\n", mesh.triangles.len()));
    header.push_str("property list uchar int vertex_indices\n");
    header.push_str("end_header\n");

    let mut payload: Vec<u8> =
        Vec::with_capacity(mesh.vertices.len() * (3 + mesh.channels.len()) * 4 + mesh.triangles.len() * 13);
    for (i, v) in mesh.vertices.iter().enumerate() {
        for c in v {
            payload.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        for (_, values) in &mesh.channels {
            payload.extend_from_slice(&(values[i] as f32).to_le_bytes());
        }
    }
    for t in &mesh.triangles {
        payload.push(3u8);
        for &i in t {
            payload.extend_from_slice(&(i as i32).to_le_bytes());
        }
    }

    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(header.as_bytes())
        .and_then(|_| f.write_all(&payload))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let err = |reason: String| Error::MeshFormat {
        path: path.display().to_string(),
        reason,
    };

    let header_end = bytes
        .windows(11)
        .position(|w| w == b"end_header\n")
        .ok_or_else(|| err("missing end_header".into()))?
        + 11;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| err("header is not UTF-8".into()))?;

    let mut lines = header.lines();
    if lines.next() != Some("ply") {
        return Err(err("missing ply magic".into()));
    }
    let mut vertex_count = 0usize;
    let mut face_count = 0usize;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut in_vertex_element = false;
    let mut format_seen = false;
    for line in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "binary_little_endian", "1.0"] => format_seen = true,
            ["format", ..] => return Err(err(format!("unsupported format {line:?}"))),
            ["comment", ..] => {}
            ["element", "vertex", n] => {
                vertex_count = n.parse().map_err(|_| err("bad vertex count".into()))?;
                in_vertex_element = true;
            }
            ["element", "face", n] => {
                face_count = n.parse().map_err(|_| err("bad face count".into()))?;
                in_vertex_element = false;
            }
            ["element", ..] => return Err(err(format!("unsupported element {line:?}"))),
            ["property", "float", name] if in_vertex_element => {
                vertex_props.push((*name).to_string());
            }
            ["property", "list", "uchar", "int", "vertex_indices"] if !in_vertex_element => {}
            ["property", ..] => {
                return Err(err(format!("unsupported property {line:?}")))
            }
            ["end_header"] => break,
            _ => return Err(err(format!("unrecognized header line {line:?}"))),
        }
    }
    if !format_seen {
        return Err(err("missing format line".into()));
    }
    if vertex_props.len() < 3 || vertex_props[..3] != ["x", "y", "z"] {
        return Err(err(format!(
            "vertex properties must start with x, y, z; got {vertex_props:?}"
        )));
    }

    let stride = vertex_props.len() * 4;
    let mut off = header_end;
    let need = vertex_count * stride;
    if bytes.len() < off + need {
        return Err(err("vertex payload truncated".into()));
    }
    let mut vertices = Vec::with_capacity(vertex_count);
    let mut channels: Vec<(String, Vec<f64>)> = vertex_props[3..]
        .iter()
        .map(|n| (n.clone(), Vec::with_capacity(vertex_count)))
        .collect();
    for _ in 0..vertex_count {
        let mut props = [0.0f64; 3];
        for (slot, p) in props.iter_mut().enumerate() {
            let b = &bytes[off + slot * 4..off + slot * 4 + 4];
            *p = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
        }
        vertices.push(props);
        for (ci, (_, values)) in channels.iter_mut().enumerate() {
            let base = off + (3 + ci) * 4;
            let b = &bytes[base..base + 4];
            values.push(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64);
        }
        off += stride;
    }

    let mut triangles = Vec::with_capacity(face_count);
    for _ in 0..face_count {
        if bytes.len() < off + 1 {
            return Err(err("face payload truncated".into()));
        }
        let n = bytes[off];
        off += 1;
        if n != 3 {
            return Err(err(format!("only triangles supported, got {n}-gon")));
        }
        if bytes.len() < off + 12 {
            return Err(err("face payload truncated".into()));
        }
        let mut tri = [0u32; 3];
        for t in tri.iter_mut() {
            let b = &bytes[off..off + 4];
            let v = i32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            if v < 0 || v as usize >= vertex_count {
                return Err(err(format!("vertex index {v} out of range")));
            }
            *t = v as u32;
            off += 4;
        }
        triangles.push(tri);
    }

    Ok(TriMesh {
        vertices,
        triangles,
        channels,
    })
}
