//! MetaImage-subset volume files.
//!
//! A volume is a small text header (`.mhd`) next to a little-endian raw
//! payload. The subset understood here:
//!
//! ```text
//! ObjectType = Image
//! NDims = 3
//! DimSize = 89 89 89
//! ElementSpacing = 0.5 0.5 0.5
//! Offset = 0 0 0
//! ElementType = MET_FLOAT
//! ElementByteOrderMSB = False
//! ElementDataFile = volume.raw
//! ```
//!
//! `ElementType` may be `MET_UCHAR`, `MET_FLOAT` or `MET_DOUBLE`. Unknown
//! keys are ignored with a warning; extension keys written by this crate
//! (embedding provenance) are preserved through [`read_volume_with_meta`].

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Dims3, ScalarGrid3, Spacing3};
use crate::{BinaryGrid3, Error, Result};

/// On-disk element type of the raw payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementType {
    UChar,
    Float,
    Double,
}

impl ElementType {
    fn name(self) -> &'static str {
        match self {
            ElementType::UChar => "MET_UCHAR",
            ElementType::Float => "MET_FLOAT",
            ElementType::Double => "MET_DOUBLE",
        }
    }

    fn byte_size(self) -> usize {
        match self {
            ElementType::UChar => 1,
            ElementType::Float => 4,
            ElementType::Double => 8,
        }
    }

    fn parse(s: &str) -> Option<ElementType> {
        match s {
            "MET_UCHAR" => Some(ElementType::UChar),
            "MET_FLOAT" => Some(ElementType::Float),
            "MET_DOUBLE" => Some(ElementType::Double),
            _ => None,
        }
    }
}

/// Keys this reader understands beyond the required set; they carry
/// embedding provenance and never trigger the unknown-key warning.
const EXTENSION_KEYS: [&str; 3] = ["EmbedMethod", "EmbedSigma", "EmbedThreshold"];

/// Read a volume header and its raw payload.
pub fn read_volume(path: impl AsRef<Path>) -> Result<ScalarGrid3> {
    read_volume_with_meta(path).map(|(grid, _)| grid)
}

/// As [`read_volume`], also returning any extension keys found.
pub(crate) fn read_volume_with_meta(
    path: impl AsRef<Path>,
) -> Result<(ScalarGrid3, BTreeMap<String, String>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;

    let mut keys: BTreeMap<String, String> = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format_err(path, format!("malformed header line {line:?}")))?;
        keys.insert(key.trim().to_string(), value.trim().to_string());
    }

    let get = |k: &str| -> Result<&str> {
        keys.get(k)
            .map(String::as_str)
            .ok_or_else(|| format_err(path, format!("missing required key {k}")))
    };

    if let Some(ot) = keys.get("ObjectType") {
        if ot != "Image" {
            return Err(format_err(path, format!("ObjectType must be Image, got {ot}")));
        }
    }
    let ndims: usize = get("NDims")?
        .parse()
        .map_err(|_| format_err(path, "NDims is not an integer".into()))?;
    if ndims != 3 {
        return Err(format_err(path, format!("NDims must be 3, got {ndims}")));
    }
    if let Some(msb) = keys.get("ElementByteOrderMSB") {
        if msb != "False" {
            return Err(format_err(
                path,
                "big-endian payloads are not supported (ElementByteOrderMSB must be False)".into(),
            ));
        }
    }
    if let Some(c) = keys.get("CompressedData") {
        if c != "False" {
            return Err(format_err(path, "compressed payloads are not supported".into()));
        }
    }

    let dim_size = parse_triplet::<usize>(path, "DimSize", get("DimSize")?)?;
    let dims = Dims3::new(dim_size[0], dim_size[1], dim_size[2]);
    let sp = parse_triplet::<f64>(path, "ElementSpacing", get("ElementSpacing")?)?;
    let spacing = Spacing3::new(sp[0], sp[1], sp[2])?;
    let origin = match keys.get("Offset") {
        Some(v) => parse_triplet::<f64>(path, "Offset", v)?,
        None => [0.0; 3],
    };
    let elem = ElementType::parse(get("ElementType")?).ok_or_else(|| {
        format_err(
            path,
            format!(
                "unsupported ElementType {:?} (supported: MET_UCHAR, MET_FLOAT, MET_DOUBLE)",
                keys["ElementType"]
            ),
        )
    })?;

    let data_file = get("ElementDataFile")?;
    if data_file == "LOCAL" || data_file == "LIST" {
        return Err(format_err(path, format!("ElementDataFile {data_file} is not supported")));
    }
    let raw_path = path.parent().unwrap_or_else(|| Path::new(".")).join(data_file);

    const KNOWN: [&str; 9] = [
        "ObjectType",
        "NDims",
        "DimSize",
        "ElementSpacing",
        "Offset",
        "ElementType",
        "ElementByteOrderMSB",
        "CompressedData",
        "ElementDataFile",
    ];
    let mut extra = BTreeMap::new();
    for (k, v) in &keys {
        if EXTENSION_KEYS.contains(&k.as_str()) {
            extra.insert(k.clone(), v.clone());
        } else if !KNOWN.contains(&k.as_str()) {
            log::warn!("{}: ignoring unknown header key {k}", path.display());
        }
    }

    let raw = fs::read(&raw_path).map_err(|e| Error::io(raw_path.display().to_string(), e))?;
    let expected = dims.len() * elem.byte_size();
    if raw.len() != expected {
        return Err(format_err(
            path,
            format!(
                "raw payload {} holds {} bytes but DimSize implies {expected}",
                raw_path.display(),
                raw.len()
            ),
        ));
    }

    let values: Vec<f64> = match elem {
        ElementType::UChar => raw.iter().map(|&b| b as f64).collect(),
        ElementType::Float => raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        ElementType::Double => raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };

    let grid = ScalarGrid3::new(dims, spacing, origin, values)?;
    Ok((grid, extra))
}

/// Write a volume as header + raw pair. The raw file sits next to the
/// header, named after it with the extension replaced by `.raw`.
pub fn write_volume(path: impl AsRef<Path>, grid: &ScalarGrid3, elem: ElementType) -> Result<()> {
    write_volume_with_meta(path, grid, elem, &[])
}

/// Write a binary grid as a `MET_UCHAR` volume.
pub fn write_binary_volume(path: impl AsRef<Path>, grid: &BinaryGrid3) -> Result<()> {
    write_volume_with_meta(path, &grid.to_scalar(), ElementType::UChar, &[])
}

pub(crate) fn write_volume_with_meta(
    path: impl AsRef<Path>,
    grid: &ScalarGrid3,
    elem: ElementType,
    extra: &[(&str, String)],
) -> Result<()> {
    let path = path.as_ref();
    let raw_name = {
        let stem = path
            .file_stem()
            .ok_or_else(|| format_err(path, "header path has no file name".into()))?;
        let mut n = stem.to_os_string();
        n.push(".raw");
        n
    };
    let raw_path = path.with_file_name(&raw_name);

    let mut payload: Vec<u8> = Vec::with_capacity(grid.values().len() * elem.byte_size());
    match elem {
        ElementType::UChar => {
            for &v in grid.values() {
                if !(0.0..=255.0).contains(&v) || v.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "value {v} cannot be stored losslessly as MET_UCHAR"
                    )));
                }
                payload.push(v as u8);
            }
        }
        ElementType::Float => {
            for &v in grid.values() {
                payload.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        ElementType::Double => {
            for &v in grid.values() {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
    }

    let d = grid.dims();
    let s = grid.spacing();
    let o = grid.origin();
    let mut header = String::new();
    header.push_str("ObjectType = Image\n");
    header.push_str("NDims = 3\n");
    header.push_str(&format!("DimSize = {} {} {}\n", d.nx, d.ny, d.nz));
    header.push_str(&format!("ElementSpacing = {} {} {}\n", s.hx, s.hy, s.hz));
    header.push_str(&format!("Offset = {} {} {}\n", o[0], o[1], o[2]));
    header.push_str(&format!("ElementType = {}\n", elem.name()));
    header.push_str("ElementByteOrderMSB = False\n");
    for (k, v) in extra {
        header.push_str(&format!("{k} = {v}\n"));
    }
    header.push_str(&format!("ElementDataFile = {}\n", raw_name.to_string_lossy()));

    write_file(path, header.as_bytes())?;
    write_file(&raw_path, &payload)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn parse_triplet<T: std::str::FromStr>(path: &Path, key: &str, value: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(format_err(path, format!("{key} must have 3 components, got {value:?}")));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| format_err(path, format!("{key} component {p:?} is not a number")))?,
        );
    }
    Ok(out.try_into().map_err(|_| ()).unwrap())
}

fn format_err(path: &Path, reason: String) -> Error {
    Error::VolumeFormat {
        path: path.display().to_string(),
        reason,
    }
}
