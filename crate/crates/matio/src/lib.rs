//! Minimal reader for the MAT-v5 binary container format.
//!
//! Supports the subset actually used by hyperspectral benchmark scenes:
//! real numeric matrices of class `double`, `single`, `int32`, `uint16`
//! or `uint8`, 2- or 3-dimensional, stored uncompressed or inside a
//! zlib-compressed element. Everything else (cells, structs, char data,
//! sparse or complex matrices) is skipped with a recorded warning.
//!
//! Values are returned in the container's native column-major order;
//! callers that want row-major layouts reorder themselves.

use std::collections::BTreeMap;
use std::io::Read;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use thiserror::Error;

#[cfg(any(test, feature = "fixtures"))]
pub mod fixture;

/// Length of the fixed MAT-v5 file header.
pub const HEADER_LEN: usize = 128;

const MI_INT8: u32 = 1;
const MI_UINT8: u32 = 2;
const MI_INT16: u32 = 3;
const MI_UINT16: u32 = 4;
const MI_INT32: u32 = 5;
const MI_UINT32: u32 = 6;
const MI_SINGLE: u32 = 7;
const MI_DOUBLE: u32 = 9;
const MI_INT64: u32 = 12;
const MI_UINT64: u32 = 13;
const MI_MATRIX: u32 = 14;
const MI_COMPRESSED: u32 = 15;

const MX_CHAR: u8 = 4;
const MX_SPARSE: u8 = 5;
const MX_DOUBLE: u8 = 6;
const MX_SINGLE: u8 = 7;
const MX_INT32: u8 = 12;
const MX_UINT16: u8 = 11;
const MX_UINT8: u8 = 9;

const FLAG_COMPLEX: u32 = 0x0800;

/// Errors raised while parsing a MAT-v5 buffer.
#[derive(Debug, Error)]
pub enum MatError {
    /// The 128-byte header is missing, does not start with "MATL", or
    /// carries an unrecognized version/endianness marker.
    #[error("not a MAT-v5 file: {0}")]
    BadMagic(String),
    /// The buffer ends inside a declared element.
    #[error("truncated file: {0}")]
    TruncatedFile(String),
    /// A numeric matrix uses a scalar kind outside the supported set.
    #[error("unsupported element kind for matrix '{name}': {detail}")]
    UnsupportedElementKind { name: String, detail: String },
    /// A compressed element failed to inflate.
    #[error("zlib inflate failed: {0}")]
    Inflate(#[from] std::io::Error),
}

/// Scalar kinds the reader supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    F64,
    F32,
    I32,
    U16,
    U8,
}

/// Flat numeric payload of a matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub enum MatData {
    F64(Vec<f64>),
    F32(Vec<f32>),
    I32(Vec<i32>),
    U16(Vec<u16>),
    U8(Vec<u8>),
}

impl MatData {
    pub fn len(&self) -> usize {
        match self {
            MatData::F64(v) => v.len(),
            MatData::F32(v) => v.len(),
            MatData::I32(v) => v.len(),
            MatData::U16(v) => v.len(),
            MatData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ElementKind {
        match self {
            MatData::F64(_) => ElementKind::F64,
            MatData::F32(_) => ElementKind::F32,
            MatData::I32(_) => ElementKind::I32,
            MatData::U16(_) => ElementKind::U16,
            MatData::U8(_) => ElementKind::U8,
        }
    }

    /// Widen the payload to `f64`, preserving order.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match self {
            MatData::F64(v) => v.clone(),
            MatData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            MatData::I32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            MatData::U16(v) => v.iter().map(|&x| f64::from(x)).collect(),
            MatData::U8(v) => v.iter().map(|&x| f64::from(x)).collect(),
        }
    }
}

/// One numeric matrix recovered from the container.
///
/// Invariants enforced on construction: `dims` has length 2 or 3 with all
/// extents >= 1, and `product(dims) == values.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatArray {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: MatData,
}

impl MatArray {
    pub fn element_kind(&self) -> ElementKind {
        self.values.kind()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Result of parsing one buffer: named arrays plus warnings for skipped
/// elements.
#[derive(Debug, Default)]
pub struct MatFile {
    pub arrays: BTreeMap<String, MatArray>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endian {
    Little,
    Big,
}

impl Endian {
    fn u16(self, b: &[u8]) -> u16 {
        match self {
            Endian::Little => LittleEndian::read_u16(b),
            Endian::Big => BigEndian::read_u16(b),
        }
    }

    fn u32(self, b: &[u8]) -> u32 {
        match self {
            Endian::Little => LittleEndian::read_u32(b),
            Endian::Big => BigEndian::read_u32(b),
        }
    }
}

/// Parse a complete MAT-v5 buffer into its numeric matrices.
///
/// Compressed data elements are inflated transparently; unsupported
/// top-level elements are skipped and noted in [`MatFile::warnings`].
pub fn parse_mat(bytes: &[u8]) -> Result<MatFile, MatError> {
    if bytes.len() < HEADER_LEN {
        return Err(MatError::BadMagic(format!(
            "buffer holds {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != b"MATL" {
        return Err(MatError::BadMagic(
            "header text does not start with \"MATL\"".into(),
        ));
    }
    let endian = match &bytes[126..128] {
        b"IM" => Endian::Little,
        b"MI" => Endian::Big,
        other => {
            return Err(MatError::BadMagic(format!(
                "endian indicator is {other:?}, expected \"IM\" or \"MI\""
            )))
        }
    };
    let version = endian.u16(&bytes[124..126]);
    if version != 0x0100 {
        return Err(MatError::BadMagic(format!(
            "version field is 0x{version:04x}, expected 0x0100"
        )));
    }

    let mut out = MatFile::default();
    let mut pos = HEADER_LEN;
    while pos < bytes.len() {
        // Tolerate zero padding between top-level elements.
        if bytes.len() - pos < 8 {
            if bytes[pos..].iter().all(|&b| b == 0) {
                break;
            }
            return Err(MatError::TruncatedFile(format!(
                "{} trailing bytes are not a full element tag",
                bytes.len() - pos
            )));
        }
        if bytes[pos..pos + 8].iter().all(|&b| b == 0) {
            pos += 8;
            continue;
        }
        let (element, consumed) = read_element(&bytes[pos..], endian, "top-level")?;
        handle_element(&element, endian, &mut out)?;
        pos += consumed;
        // Elements are 8-byte aligned, except that some writers do not
        // pad compressed payloads; the zero-skip above absorbs padding
        // when it is present.
        if element.mi_type != MI_COMPRESSED {
            pos += (8 - pos % 8) % 8;
        }
    }
    Ok(out)
}

struct RawElement<'a> {
    mi_type: u32,
    payload: &'a [u8],
}

/// Read one tagged element starting at `buf[0]`. Returns the element and
/// the exact number of bytes it occupies (tag + payload, unpadded).
fn read_element<'a>(
    buf: &'a [u8],
    endian: Endian,
    ctx: &str,
) -> Result<(RawElement<'a>, usize), MatError> {
    if buf.len() < 8 {
        return Err(MatError::TruncatedFile(format!(
            "{ctx}: {} bytes left, tag needs 8",
            buf.len()
        )));
    }
    let word0 = endian.u32(&buf[0..4]);
    let small_size = (word0 >> 16) as usize;
    if small_size != 0 {
        // Small data element: type and size packed in the first word,
        // up to 4 payload bytes in the second.
        if small_size > 4 {
            return Err(MatError::TruncatedFile(format!(
                "{ctx}: small element declares {small_size} bytes (max 4)"
            )));
        }
        let mi_type = word0 & 0xFFFF;
        let payload = &buf[4..4 + small_size];
        return Ok((RawElement { mi_type, payload }, 8));
    }
    let mi_type = word0;
    let size = endian.u32(&buf[4..8]) as usize;
    if buf.len() < 8 + size {
        return Err(MatError::TruncatedFile(format!(
            "{ctx}: element of type {mi_type} declares {size} payload bytes, {} available",
            buf.len() - 8
        )));
    }
    Ok((
        RawElement {
            mi_type,
            payload: &buf[8..8 + size],
        },
        8 + size,
    ))
}

fn handle_element(element: &RawElement, endian: Endian, out: &mut MatFile) -> Result<(), MatError> {
    match element.mi_type {
        MI_MATRIX => {
            if let Some(array) = parse_matrix(element.payload, endian, &mut out.warnings)? {
                out.arrays.insert(array.name.clone(), array);
            }
            Ok(())
        }
        MI_COMPRESSED => {
            let mut inflated = Vec::new();
            flate2::read::ZlibDecoder::new(element.payload).read_to_end(&mut inflated)?;
            let (inner, _) = read_element(&inflated, endian, "compressed stream")?;
            handle_element(&inner, endian, out)
        }
        other => {
            out.warnings
                .push(format!("skipped top-level element of type {other}"));
            Ok(())
        }
    }
}

/// Parse a miMATRIX payload. Returns `Ok(None)` for matrices we skip
/// (non-numeric classes, complex data, unusual shapes), recording why.
fn parse_matrix(
    payload: &[u8],
    endian: Endian,
    warnings: &mut Vec<String>,
) -> Result<Option<MatArray>, MatError> {
    let mut pos = 0usize;
    let mut next = |ctx: &str| -> Result<RawElement, MatError> {
        let (el, used) = read_element(&payload[pos..], endian, ctx)?;
        pos += used + (8 - (pos + used) % 8) % 8;
        Ok(el)
    };

    let flags_el = next("array flags")?;
    if flags_el.payload.len() < 4 {
        return Err(MatError::TruncatedFile("array flags subelement".into()));
    }
    let flags = endian.u32(&flags_el.payload[0..4]);
    let class = (flags & 0xFF) as u8;

    let dims_el = next("dimensions")?;
    let ndims = dims_el.payload.len() / 4;
    let mut dims = Vec::with_capacity(ndims);
    for i in 0..ndims {
        let extent = endian.u32(&dims_el.payload[4 * i..4 * i + 4]) as i32;
        dims.push(extent.max(0) as usize);
    }

    let name_el = next("array name")?;
    let name = String::from_utf8_lossy(name_el.payload)
        .trim_end_matches('\0')
        .to_string();

    match class {
        MX_DOUBLE | MX_SINGLE | MX_INT32 | MX_UINT16 | MX_UINT8 => {}
        MX_CHAR | MX_SPARSE | 1 | 2 | 3 => {
            warnings.push(format!(
                "skipped matrix '{name}': non-numeric class {class}"
            ));
            return Ok(None);
        }
        other => {
            return Err(MatError::UnsupportedElementKind {
                name,
                detail: format!("numeric class {other} is outside the supported set"),
            });
        }
    }
    if flags & FLAG_COMPLEX != 0 {
        warnings.push(format!("skipped matrix '{name}': complex data"));
        return Ok(None);
    }
    if !(dims.len() == 2 || dims.len() == 3) || dims.iter().any(|&d| d == 0) {
        warnings.push(format!(
            "skipped matrix '{name}': unsupported shape {dims:?}"
        ));
        return Ok(None);
    }

    let data_el = next("real part")?;
    let count: usize = dims.iter().product();
    let stored = read_numeric(&data_el, endian, count, &name)?;
    let values = convert_to_class(stored, class);
    debug_assert_eq!(values.len(), count);

    Ok(Some(MatArray { name, dims, values }))
}

/// Decode a numeric subelement into f64 working values, checking that it
/// holds exactly `count` entries of its declared storage type.
fn read_numeric(
    el: &RawElement,
    endian: Endian,
    count: usize,
    name: &str,
) -> Result<Vec<f64>, MatError> {
    let width = match el.mi_type {
        MI_INT8 | MI_UINT8 => 1,
        MI_INT16 | MI_UINT16 => 2,
        MI_INT32 | MI_UINT32 | MI_SINGLE => 4,
        MI_DOUBLE | MI_INT64 | MI_UINT64 => 8,
        other => {
            return Err(MatError::UnsupportedElementKind {
                name: name.to_string(),
                detail: format!("storage type {other} is not a supported numeric type"),
            })
        }
    };
    if el.payload.len() < count * width {
        return Err(MatError::TruncatedFile(format!(
            "matrix '{name}' needs {count} values of {width} bytes, payload holds {} bytes",
            el.payload.len()
        )));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let b = &el.payload[i * width..(i + 1) * width];
        let v = match (el.mi_type, endian) {
            (MI_INT8, _) => f64::from(b[0] as i8),
            (MI_UINT8, _) => f64::from(b[0]),
            (MI_INT16, e) => f64::from(e.u16(b) as i16),
            (MI_UINT16, e) => f64::from(e.u16(b)),
            (MI_INT32, e) => f64::from(e.u32(b) as i32),
            (MI_UINT32, e) => f64::from(e.u32(b)),
            (MI_SINGLE, Endian::Little) => f64::from(f32::from_bits(LittleEndian::read_u32(b))),
            (MI_SINGLE, Endian::Big) => f64::from(f32::from_bits(BigEndian::read_u32(b))),
            (MI_DOUBLE, Endian::Little) => f64::from_bits(LittleEndian::read_u64(b)),
            (MI_DOUBLE, Endian::Big) => f64::from_bits(BigEndian::read_u64(b)),
            (MI_INT64, Endian::Little) => LittleEndian::read_i64(b) as f64,
            (MI_INT64, Endian::Big) => BigEndian::read_i64(b) as f64,
            (MI_UINT64, Endian::Little) => LittleEndian::read_u64(b) as f64,
            (MI_UINT64, Endian::Big) => BigEndian::read_u64(b) as f64,
            _ => unreachable!(),
        };
        out.push(v);
    }
    Ok(out)
}

/// Narrow decoded values to the matrix's declared class. MAT writers
/// routinely store e.g. a double array as packed uint8 when lossless.
fn convert_to_class(values: Vec<f64>, class: u8) -> MatData {
    match class {
        MX_DOUBLE => MatData::F64(values),
        MX_SINGLE => MatData::F32(values.into_iter().map(|v| v as f32).collect()),
        MX_INT32 => MatData::I32(values.into_iter().map(|v| v as i32).collect()),
        MX_UINT16 => MatData::U16(values.into_iter().map(|v| v as u16).collect()),
        MX_UINT8 => MatData::U8(values.into_iter().map(|v| v as u8).collect()),
        _ => unreachable!("caller filtered classes"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::{write_mat, FixtureArray, FixtureValues};

    /// 128-byte header + one uncompressed 2x2 float64 matrix "gt" holding
    /// [[1,2],[3,4]], assembled byte by byte from the format definition.
    fn handcrafted_gt() -> Vec<u8> {
        let mut buf = Vec::new();
        let mut header = [0u8; 128];
        header[..19].copy_from_slice(b"MATLAB 5.0 MAT-file");
        header[124] = 0x00;
        header[125] = 0x01; // version 0x0100, little-endian layout
        header[126] = b'I';
        header[127] = b'M';
        buf.extend_from_slice(&header);

        let mut body = Vec::new();
        // Array flags: miUINT32, 8 bytes, class double.
        body.extend_from_slice(&6u32.to_le_bytes());
        body.extend_from_slice(&8u32.to_le_bytes());
        body.extend_from_slice(&(MX_DOUBLE as u32).to_le_bytes());
        body.extend_from_slice(&0u32.to_le_bytes());
        // Dimensions: miINT32, [2, 2].
        body.extend_from_slice(&5u32.to_le_bytes());
        body.extend_from_slice(&8u32.to_le_bytes());
        body.extend_from_slice(&2i32.to_le_bytes());
        body.extend_from_slice(&2i32.to_le_bytes());
        // Name "gt" as a small data element (miINT8, 2 bytes).
        body.extend_from_slice(&(1u32 | (2u32 << 16)).to_le_bytes());
        body.extend_from_slice(b"gt\0\0");
        // Real part: miDOUBLE, column-major [1,3,2,4].
        body.extend_from_slice(&9u32.to_le_bytes());
        body.extend_from_slice(&32u32.to_le_bytes());
        for v in [1.0f64, 3.0, 2.0, 4.0] {
            body.extend_from_slice(&v.to_le_bytes());
        }

        buf.extend_from_slice(&14u32.to_le_bytes());
        buf.extend_from_slice(&(body.len() as u32).to_le_bytes());
        buf.extend_from_slice(&body);
        buf
    }

    #[test]
    fn parses_handcrafted_double_matrix() {
        let parsed = parse_mat(&handcrafted_gt()).unwrap();
        assert!(parsed.warnings.is_empty());
        let gt = &parsed.arrays["gt"];
        assert_eq!(gt.dims, vec![2, 2]);
        assert_eq!(gt.element_kind(), ElementKind::F64);
        assert_eq!(gt.values, MatData::F64(vec![1.0, 3.0, 2.0, 4.0]));
    }

    #[test]
    fn truncated_buffer_is_an_error() {
        let full = handcrafted_gt();
        let err = parse_mat(&full[..100]).unwrap_err();
        assert!(matches!(err, MatError::TruncatedFile(_)), "got {err:?}");
    }

    #[test]
    fn bad_magic_is_an_error() {
        let mut bytes = handcrafted_gt();
        bytes[0] = b'X';
        assert!(matches!(parse_mat(&bytes), Err(MatError::BadMagic(_))));

        bytes = handcrafted_gt();
        bytes[126] = b'Z';
        assert!(matches!(parse_mat(&bytes), Err(MatError::BadMagic(_))));
    }

    #[test]
    fn parse_is_deterministic() {
        let bytes = write_mat(
            &[FixtureArray {
                name: "a".into(),
                dims: vec![3, 2],
                values: FixtureValues::F64(vec![0.5, -1.0, 2.0, 3.5, 4.0, -0.25]),
            }],
            true,
        );
        let first = parse_mat(&bytes).unwrap();
        let second = parse_mat(&bytes).unwrap();
        assert_eq!(first.arrays, second.arrays);
    }

    #[test]
    fn flat_buffer_invariant_holds_for_parsed_arrays() {
        let bytes = write_mat(
            &[
                FixtureArray {
                    name: "cube".into(),
                    dims: vec![2, 3, 4],
                    values: FixtureValues::U16((0..24).collect()),
                },
                FixtureArray {
                    name: "gt".into(),
                    dims: vec![2, 3],
                    values: FixtureValues::U8(vec![0, 1, 2, 3, 4, 5]),
                },
            ],
            false,
        );
        let parsed = parse_mat(&bytes).unwrap();
        for arr in parsed.arrays.values() {
            assert_eq!(arr.dims.iter().product::<usize>(), arr.len());
        }
    }

    #[test]
    fn compressed_and_uncompressed_agree() {
        let arrays = [FixtureArray {
            name: "m".into(),
            dims: vec![2, 2],
            values: FixtureValues::I32(vec![-5, 7, 100_000, -1]),
        }];
        let plain = parse_mat(&write_mat(&arrays, false)).unwrap();
        let packed = parse_mat(&write_mat(&arrays, true)).unwrap();
        assert_eq!(plain.arrays, packed.arrays);
    }

    #[test]
    fn truncation_inside_compressed_element_is_an_error() {
        let bytes = write_mat(
            &[FixtureArray {
                name: "m".into(),
                dims: vec![4, 4],
                values: FixtureValues::F64((0..16).map(f64::from).collect()),
            }],
            true,
        );
        let err = parse_mat(&bytes[..bytes.len() - 9]).unwrap_err();
        assert!(
            matches!(err, MatError::TruncatedFile(_) | MatError::Inflate(_)),
            "got {err:?}"
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_values(len: usize) -> BoxedStrategy<FixtureValues> {
            prop_oneof![
                proptest::collection::vec(-1e6f64..1e6, len).prop_map(FixtureValues::F64),
                proptest::collection::vec(-1e3f32..1e3, len).prop_map(FixtureValues::F32),
                proptest::collection::vec(any::<i32>(), len).prop_map(FixtureValues::I32),
                proptest::collection::vec(any::<u16>(), len).prop_map(FixtureValues::U16),
                proptest::collection::vec(any::<u8>(), len).prop_map(FixtureValues::U8),
            ]
            .boxed()
        }

        fn arb_array() -> impl Strategy<Value = FixtureArray> {
            (1usize..5, 1usize..5, proptest::option::of(1usize..4))
                .prop_flat_map(|(rows, cols, depth)| {
                    let mut dims = vec![rows, cols];
                    if let Some(d) = depth {
                        dims.push(d);
                    }
                    let len = dims.iter().product::<usize>();
                    arb_values(len).prop_map(move |values| FixtureArray {
                        name: "x".into(),
                        dims: dims.clone(),
                        values,
                    })
                })
        }

        proptest! {
            // Round trip: write(dims, values) then parse recovers both
            // exactly, for every supported kind, compressed or not.
            #[test]
            fn roundtrip_recovers_dims_and_values(arr in arb_array(), compress in any::<bool>()) {
                let bytes = write_mat(std::slice::from_ref(&arr), compress);
                let parsed = parse_mat(&bytes).unwrap();
                let got = &parsed.arrays["x"];
                prop_assert_eq!(&got.dims, &arr.dims);
                prop_assert_eq!(&got.values, &arr.values.to_mat_data());
            }
        }
    }
}
