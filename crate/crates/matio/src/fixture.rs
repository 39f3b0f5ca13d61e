//! Tiny MAT-v5 writer for test fixtures.
//!
//! Emits little-endian files covering exactly the subset the parser
//! reads: real numeric matrices, optionally wrapped in a compressed
//! element. Not a general-purpose writer.

use std::io::Write;

use flate2::write::ZlibEncoder;
use flate2::Compression;

use crate::MatData;

/// Values for one fixture matrix, stored by their MAT class.
#[derive(Debug, Clone, PartialEq)]
pub enum FixtureValues {
    F64(Vec<f64>),
    F32(Vec<f32>),
    I32(Vec<i32>),
    U16(Vec<u16>),
    U8(Vec<u8>),
}

impl FixtureValues {
    pub fn len(&self) -> usize {
        match self {
            FixtureValues::F64(v) => v.len(),
            FixtureValues::F32(v) => v.len(),
            FixtureValues::I32(v) => v.len(),
            FixtureValues::U16(v) => v.len(),
            FixtureValues::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The [`MatData`] the parser is expected to return for these values.
    pub fn to_mat_data(&self) -> MatData {
        match self {
            FixtureValues::F64(v) => MatData::F64(v.clone()),
            FixtureValues::F32(v) => MatData::F32(v.clone()),
            FixtureValues::I32(v) => MatData::I32(v.clone()),
            FixtureValues::U16(v) => MatData::U16(v.clone()),
            FixtureValues::U8(v) => MatData::U8(v.clone()),
        }
    }

    fn class(&self) -> u32 {
        match self {
            FixtureValues::F64(_) => 6,
            FixtureValues::F32(_) => 7,
            FixtureValues::I32(_) => 12,
            FixtureValues::U16(_) => 11,
            FixtureValues::U8(_) => 9,
        }
    }

    fn mi_type(&self) -> u32 {
        match self {
            FixtureValues::F64(_) => 9,
            FixtureValues::F32(_) => 7,
            FixtureValues::I32(_) => 5,
            FixtureValues::U16(_) => 4,
            FixtureValues::U8(_) => 2,
        }
    }

    fn raw_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            FixtureValues::F64(v) => v.iter().for_each(|x| out.extend(x.to_le_bytes())),
            FixtureValues::F32(v) => v.iter().for_each(|x| out.extend(x.to_le_bytes())),
            FixtureValues::I32(v) => v.iter().for_each(|x| out.extend(x.to_le_bytes())),
            FixtureValues::U16(v) => v.iter().for_each(|x| out.extend(x.to_le_bytes())),
            FixtureValues::U8(v) => out.extend_from_slice(v),
        }
        out
    }
}

/// One matrix to write. `values` must be column-major, matching
/// `product(dims)` in length.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureArray {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: FixtureValues,
}

/// Serialize fixtures into a complete MAT-v5 buffer.
pub fn write_mat(arrays: &[FixtureArray], compress: bool) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut header = [0u8; 128];
    let text = b"MATLAB 5.0 MAT-file, fixture writer";
    header[..text.len()].copy_from_slice(text);
    for b in header[text.len()..116].iter_mut() {
        *b = b' ';
    }
    header[124] = 0x00;
    header[125] = 0x01;
    header[126] = b'I';
    header[127] = b'M';
    buf.extend_from_slice(&header);

    for arr in arrays {
        assert_eq!(
            arr.dims.iter().product::<usize>(),
            arr.values.len(),
            "fixture dims and value count disagree"
        );
        let matrix = matrix_element(arr);
        if compress {
            let mut enc = ZlibEncoder::new(Vec::new(), Compression::default());
            enc.write_all(&matrix).unwrap();
            let packed = enc.finish().unwrap();
            write_element_tag(&mut buf, 15, packed.len());
            buf.extend_from_slice(&packed);
            pad_to_8(&mut buf);
        } else {
            buf.extend_from_slice(&matrix);
        }
    }
    buf
}

/// Build a complete miMATRIX element (tag included, 8-byte aligned).
fn matrix_element(arr: &FixtureArray) -> Vec<u8> {
    let mut body = Vec::new();

    write_element_tag(&mut body, 6, 8); // array flags: miUINT32 x 2
    body.extend((arr.values.class()).to_le_bytes());
    body.extend(0u32.to_le_bytes());

    write_element_tag(&mut body, 5, 4 * arr.dims.len());
    for &d in &arr.dims {
        body.extend((d as i32).to_le_bytes());
    }
    pad_to_8(&mut body);

    write_small_or_full(&mut body, 1, arr.name.as_bytes());

    write_small_or_full(&mut body, arr.values.mi_type(), &arr.values.raw_bytes());

    let mut out = Vec::with_capacity(body.len() + 8);
    write_element_tag(&mut out, 14, body.len());
    out.extend_from_slice(&body);
    out
}

fn write_element_tag(buf: &mut Vec<u8>, mi_type: u32, size: usize) {
    buf.extend(mi_type.to_le_bytes());
    buf.extend((size as u32).to_le_bytes());
}

/// Use the packed small-data-element form when the payload fits in 4
/// bytes, as MATLAB's own writer does; full tag otherwise.
fn write_small_or_full(buf: &mut Vec<u8>, mi_type: u32, payload: &[u8]) {
    if payload.len() <= 4 && !payload.is_empty() {
        let word0 = mi_type | ((payload.len() as u32) << 16);
        buf.extend(word0.to_le_bytes());
        let mut data = [0u8; 4];
        data[..payload.len()].copy_from_slice(payload);
        buf.extend_from_slice(&data);
    } else {
        write_element_tag(buf, mi_type, payload.len());
        buf.extend_from_slice(payload);
        pad_to_8(buf);
    }
}

fn pad_to_8(buf: &mut Vec<u8>) {
    while buf.len() % 8 != 0 {
        buf.push(0);
    }
}
