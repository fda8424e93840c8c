//! File formats: dense tensors as text (`tensor v1`) or binary (`MLTIT1`),
//! and TOML manifests for systems (`mlti-system v1`) and factored tensors
//! (`mlti-factored v1`). Paired tensors are stored as plain tensors with
//! interleaved extents `(J1,I1,...,JN,IN)`.
//!
//! The `parse_*`/`decode_*` functions work on in-memory input and never
//! touch the file system; the `load_*`/`save_*` functions resolve file
//! names relative to the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decomp::{GenCpFactors, GenTtCores};
use crate::einstein::{EvenPairedTensor, PairedShape};
use crate::error::{Error, Result};
use crate::system::{Factored, FactoredMltiSystem, MltiSystem};
use crate::tensor::{DenseTensor, Shape};

pub const TEXT_HEADER: &str = "tensor v1";
pub const BINARY_MAGIC: &[u8; 6] = b"MLTIT1";
pub const SYSTEM_FORMAT: &str = "mlti-system v1";
pub const FACTORED_FORMAT: &str = "mlti-factored v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    #[default]
    Text,
    Binary,
}

impl Encoding {
    fn extension(self) -> &'static str {
        match self {
            Encoding::Text => "tensor",
            Encoding::Binary => "mltit",
        }
    }
}

/// Parses the text format. Entries may be spread over any number of lines;
/// non-finite values are rejected.
pub fn parse_tensor_text(src: &str) -> Result<DenseTensor> {
    let mut lines = src.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim_end() == TEXT_HEADER => {}
        Some((_, l)) => return Err(Error::parse(1, format!("expected `{TEXT_HEADER}`, found `{}`", l.trim_end()))),
        None => return Err(Error::parse(1, "empty input")),
    }
    let (line, ext) = lines.next().ok_or_else(|| Error::parse(2, "missing extents line"))?;
    let dims = ext
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::parse(line, format!("bad extent `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    let shape = Shape::new(dims).map_err(|e| Error::parse(line, e.to_string()))?;
    let numel = shape.numel();
    let mut data = Vec::new();
    let mut last = line;
    for (line, l) in lines {
        for t in l.split_whitespace() {
            let v: f64 = t.parse().map_err(|_| Error::parse(line, format!("bad entry `{t}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(line, format!("non-finite entry `{t}`")));
            }
            if data.len() == numel {
                return Err(Error::parse(line, format!("more than {numel} entries")));
            }
            data.push(v);
        }
        last = line;
    }
    if data.len() != numel {
        return Err(Error::parse(last, format!("expected {numel} entries, found {}", data.len())));
    }
    DenseTensor::from_vec(shape, data)
}

/// Writes the text format, one entry per line in shortest round-trip form.
pub fn format_tensor_text(t: &DenseTensor) -> String {
    let mut s = String::with_capacity(16 * t.numel() + 32);
    s.push_str(TEXT_HEADER);
    s.push('\n');
    let dims: Vec<String> = t.dims().iter().map(|d| d.to_string()).collect();
    s.push_str(&dims.join(" "));
    s.push('\n');
    for v in t.data() {
        let _ = writeln!(s, "{v:e}");
    }
    s
}

fn take<'a>(bytes: &'a [u8], at: &mut usize, n: usize, what: &str) -> Result<&'a [u8]> {
    let end = at.checked_add(n).filter(|&e| e <= bytes.len()).ok_or_else(|| Error::Decode {
        offset: *at,
        message: format!("truncated {what}"),
    })?;
    let s = &bytes[*at..end];
    *at = end;
    Ok(s)
}

/// Decodes the binary format: magic, little-endian `u32` order, `u64`
/// extents, then the `f64` payload.
pub fn decode_tensor_binary(bytes: &[u8]) -> Result<DenseTensor> {
    let mut at = 0;
    if take(bytes, &mut at, 6, "magic")? != BINARY_MAGIC {
        return Err(Error::Decode {
            offset: 0,
            message: "bad magic".into(),
        });
    }
    let order = u32::from_le_bytes(take(bytes, &mut at, 4, "order")?.try_into().expect("4 bytes")) as usize;
    let ext_bytes = order.checked_mul(8).ok_or_else(|| Error::Decode {
        offset: 6,
        message: format!("order {order} too large"),
    })?;
    let ext_at = at;
    let dims = take(bytes, &mut at, ext_bytes, "extents")?
        .chunks_exact(8)
        .map(|c| {
            usize::try_from(u64::from_le_bytes(c.try_into().expect("8 bytes"))).map_err(|_| Error::Decode {
                offset: ext_at,
                message: "extent exceeds the address space".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let shape = Shape::new(dims).map_err(|e| Error::Decode {
        offset: ext_at,
        message: e.to_string(),
    })?;
    let payload_at = at;
    let payload = bytes.len() - at;
    if shape.numel().checked_mul(8) != Some(payload) {
        return Err(Error::Decode {
            offset: payload_at,
            message: format!("payload of {payload} bytes for {} entries", shape.numel()),
        });
    }
    let mut data = Vec::with_capacity(shape.numel());
    for (k, c) in bytes[payload_at..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(c.try_into().expect("8 bytes"));
        if !v.is_finite() {
            return Err(Error::Decode {
                offset: payload_at + 8 * k,
                message: "non-finite entry".into(),
            });
        }
        data.push(v);
    }
    DenseTensor::from_vec(shape, data)
}

pub fn encode_tensor_binary(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(10 + 8 * (t.order() + t.numel()));
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(t.order() as u32).to_le_bytes());
    for &d in t.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Either encoding, told apart by the binary magic.
pub fn decode_tensor(bytes: &[u8]) -> Result<DenseTensor> {
    if bytes.starts_with(BINARY_MAGIC) {
        decode_tensor_binary(bytes)
    } else {
        let s = std::str::from_utf8(bytes).map_err(|e| Error::Decode {
            offset: e.valid_up_to(),
            message: "text tensor is not UTF-8".into(),
        })?;
        parse_tensor_text(s)
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        Error::Decode { offset, message } => Error::Decode {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        e => e,
    }
}

pub fn read_tensor(path: &Path) -> Result<DenseTensor> {
    decode_tensor(&read(path)?).map_err(|e| in_file(path, e))
}

pub fn write_tensor(path: &Path, t: &DenseTensor, enc: Encoding) -> Result<()> {
    match enc {
        Encoding::Text => write(path, format_tensor_text(t).as_bytes()),
        Encoding::Binary => write(path, &encode_tensor_binary(t)),
    }
}

/// Reads a paired tensor stored with interleaved extents.
pub fn read_paired(path: &Path) -> Result<EvenPairedTensor> {
    EvenPairedTensor::from_interleaved(read_tensor(path)?)
}

pub fn write_paired(path: &Path, t: &EvenPairedTensor, enc: Encoding) -> Result<()> {
    write_tensor(path, t.as_dense(), enc)
}

fn toml_error(src: &str, e: toml::de::Error) -> Error {
    let line = e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1).unwrap_or(1);
    Error::parse(line, e.message().to_string())
}

fn check_format(found: &str, want: &str) -> Result<()> {
    if found != want {
        return Err(Error::parse(1, format!("format `{found}` where `{want}` expected")));
    }
    Ok(())
}

/// One of the three system tensors: a tensor file or a factored manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factored: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemManifest {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// `J`, `K` and `I`.
    pub state: Vec<usize>,
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    pub a: TensorRef,
    pub b: TensorRef,
    pub c: TensorRef,
}

pub fn parse_system_manifest(src: &str) -> Result<SystemManifest> {
    let m: SystemManifest = toml::from_str(src).map_err(|e| toml_error(src, e))?;
    check_format(&m.format, SYSTEM_FORMAT)?;
    for (name, r) in [("a", &m.a), ("b", &m.b), ("c", &m.c)] {
        if r.tensor.is_some() == r.factored.is_some() {
            return Err(Error::parse(1, format!("`{name}` needs exactly one of `tensor` or `factored`")));
        }
    }
    for (name, d) in [("state", &m.state), ("input", &m.input), ("output", &m.output)] {
        if d.len() != m.state.len() || d.is_empty() || d.contains(&0) {
            return Err(Error::parse(1, format!("`{name}` extents {d:?} do not fit a system of order {}", m.state.len())));
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactoredKind {
    Cpd,
    Ttd,
}

/// CPD: `ranks = [R]` and one component file `R×Jn×In` per mode. TTD: the
/// `N−1` internal ranks and one core file `R_{n−1}×Jn×In×Rn` per mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactoredManifest {
    pub format: String,
    pub kind: FactoredKind,
    pub pairs: Vec<(usize, usize)>,
    pub ranks: Vec<usize>,
    pub files: Vec<String>,
}

pub fn parse_factored_manifest(src: &str) -> Result<FactoredManifest> {
    let m: FactoredManifest = toml::from_str(src).map_err(|e| toml_error(src, e))?;
    check_format(&m.format, FACTORED_FORMAT)?;
    PairedShape::new(&m.pairs).map_err(|e| Error::parse(1, e.to_string()))?;
    let n = m.pairs.len();
    if m.files.len() != n {
        return Err(Error::parse(1, format!("{} files for order {n}", m.files.len())));
    }
    let want = match m.kind {
        FactoredKind::Cpd => 1,
        FactoredKind::Ttd => n - 1,
    };
    if m.ranks.len() != want || m.ranks.contains(&0) {
        return Err(Error::parse(1, format!("ranks {:?} invalid for {:?} of order {n}", m.ranks, m.kind)));
    }
    Ok(m)
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn shape_error(what: &str, found: &[usize], want: &[usize]) -> Error {
    Error::domain(format!("{what} has extents {found:?} where {want:?} is declared"))
}

/// Assembles factors from a parsed manifest, reading files through `load`.
pub fn factored_from_manifest(m: &FactoredManifest, mut load: impl FnMut(&str) -> Result<DenseTensor>) -> Result<Factored> {
    let pshape = PairedShape::new(&m.pairs)?;
    let tensors = m.files.iter().map(|f| load(f)).collect::<Result<Vec<_>>>()?;
    match m.kind {
        FactoredKind::Cpd => {
            let r = m.ranks[0];
            for (t, &(j, i)) in tensors.iter().zip(&m.pairs) {
                if t.dims() != [r, j, i] {
                    return Err(shape_error("CPD component", t.dims(), &[r, j, i]));
                }
            }
            let slices = (0..r)
                .map(|k| {
                    tensors
                        .iter()
                        .zip(&m.pairs)
                        .map(|(t, &(j, i))| nalgebra::DMatrix::from_fn(j, i, |a, b| t.get(&[k, a, b])))
                        .collect()
                })
                .collect();
            Ok(Factored::Cp(GenCpFactors::new(pshape, slices)?))
        }
        FactoredKind::Ttd => {
            let mut ranks = vec![1];
            ranks.extend(&m.ranks);
            ranks.push(1);
            for (n, (t, &(j, i))) in tensors.iter().zip(&m.pairs).enumerate() {
                let want = [ranks[n], j, i, ranks[n + 1]];
                if t.dims() != want {
                    return Err(shape_error("TT core", t.dims(), &want));
                }
            }
            Ok(Factored::Tt(GenTtCores::new(pshape, tensors)?))
        }
    }
}

pub fn load_factored(path: &Path) -> Result<Factored> {
    let src = String::from_utf8(read(path)?).map_err(|_| Error::parse(1, "manifest is not UTF-8"))?;
    let m = parse_factored_manifest(&src).map_err(|e| in_file(path, e))?;
    let dir = base_dir(path);
    factored_from_manifest(&m, |f| read_tensor(&dir.join(f)))
}

/// Writes `<stem>.toml` plus one tensor file per core or component into
/// `dir` and returns the manifest path.
pub fn save_factored(dir: &Path, stem: &str, f: &Factored, enc: Encoding) -> Result<PathBuf> {
    let pairs = f.pshape().pairs();
    let (kind, tensors): (_, Vec<DenseTensor>) = match f {
        Factored::Cp(c) => (FactoredKind::Cpd, (0..c.order()).map(|n| c.component(n)).collect()),
        Factored::Tt(t) => (FactoredKind::Ttd, t.cores().to_vec()),
    };
    let mut files = Vec::new();
    for (n, t) in tensors.iter().enumerate() {
        let name = format!("{stem}.{}.{}", n + 1, enc.extension());
        write_tensor(&dir.join(&name), t, enc)?;
        files.push(name);
    }
    let m = FactoredManifest {
        format: FACTORED_FORMAT.into(),
        kind,
        pairs,
        ranks: f.ranks(),
        files,
    };
    let path = dir.join(format!("{stem}.toml"));
    write(&path, toml::to_string(&m).expect("serializable").as_bytes())?;
    Ok(path)
}

/// A system as read from disk: dense, or fully factored when all three
/// tensors are factored.
#[derive(Debug, Clone)]
pub enum LoadedSystem {
    Full(MltiSystem),
    Factored(FactoredMltiSystem),
}

impl LoadedSystem {
    pub fn to_full(&self) -> Result<MltiSystem> {
        match self {
            LoadedSystem::Full(s) => Ok(s.clone()),
            LoadedSystem::Factored(f) => Ok(f.to_full()),
        }
    }
}

enum Part {
    Dense(EvenPairedTensor),
    Factored(Factored),
}

impl Part {
    fn pshape(&self) -> PairedShape {
        match self {
            Part::Dense(t) => t.pshape().clone(),
            Part::Factored(f) => f.pshape().clone(),
        }
    }

    fn into_dense(self) -> EvenPairedTensor {
        match self {
            Part::Dense(t) => t,
            Part::Factored(f) => f.to_full(),
        }
    }
}

pub fn load_system(path: &Path) -> Result<LoadedSystem> {
    let src = String::from_utf8(read(path)?).map_err(|_| Error::parse(1, "manifest is not UTF-8"))?;
    let m = parse_system_manifest(&src).map_err(|e| in_file(path, e))?;
    let dir = base_dir(path);
    let load = |r: &TensorRef| -> Result<Part> {
        match (&r.tensor, &r.factored) {
            (Some(t), _) => Ok(Part::Dense(read_paired(&dir.join(t))?)),
            (_, Some(f)) => Ok(Part::Factored(load_factored(&dir.join(f))?)),
            _ => unreachable!("validated by parse_system_manifest"),
        }
    };
    let (a, b, c) = (load(&m.a)?, load(&m.b)?, load(&m.c)?);
    let declared = [
        ("a", PairedShape::from_row_col(&m.state, &m.state)?, a.pshape()),
        ("b", PairedShape::from_row_col(&m.state, &m.input)?, b.pshape()),
        ("c", PairedShape::from_row_col(&m.output, &m.state)?, c.pshape()),
    ];
    for (name, want, found) in declared {
        if want != found {
            return Err(Error::domain(format!(
                "tensor `{name}` has paired shape {:?} where {:?} is declared",
                found.pairs(),
                want.pairs()
            )));
        }
    }
    match (a, b, c) {
        (Part::Factored(a), Part::Factored(b), Part::Factored(c)) => {
            Ok(LoadedSystem::Factored(FactoredMltiSystem::new(a, b, c)?))
        }
        (a, b, c) => Ok(LoadedSystem::Full(MltiSystem::new(a.into_dense(), b.into_dense(), c.into_dense())?)),
    }
}

fn system_manifest(id: Option<&str>, s_dims: [Vec<usize>; 3], refs: [TensorRef; 3]) -> String {
    let [state, input, output] = s_dims;
    let [a, b, c] = refs;
    let m = SystemManifest {
        format: SYSTEM_FORMAT.into(),
        id: id.map(str::to_string),
        state,
        input,
        output,
        a,
        b,
        c,
    };
    toml::to_string(&m).expect("serializable")
}

fn stem_of(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("system").to_string()
}

/// Writes the manifest at `path` and `<stem>.a.tensor` etc. beside it.
pub fn save_system(path: &Path, s: &MltiSystem, id: Option<&str>, enc: Encoding) -> Result<()> {
    let dir = base_dir(path);
    let stem = stem_of(path);
    let mut refs = Vec::new();
    for (name, t) in [("a", s.a()), ("b", s.b()), ("c", s.c())] {
        let file = format!("{stem}.{name}.{}", enc.extension());
        write_paired(&dir.join(&file), t, enc)?;
        refs.push(TensorRef {
            tensor: Some(file),
            factored: None,
        });
    }
    let dims = [s.state_dims().to_vec(), s.b().pshape().cols().to_vec(), s.c().pshape().rows().to_vec()];
    write(path, system_manifest(id, dims, refs.try_into().expect("three")).as_bytes())
}

/// Writes the manifest at `path` and one factored manifest per tensor.
pub fn save_factored_system(path: &Path, s: &FactoredMltiSystem, id: Option<&str>, enc: Encoding) -> Result<()> {
    let dir = base_dir(path);
    let stem = stem_of(path);
    let mut refs = Vec::new();
    for (name, f) in [("a", &s.a), ("b", &s.b), ("c", &s.c)] {
        let m = save_factored(&dir, &format!("{stem}.{name}"), f, enc)?;
        refs.push(TensorRef {
            tensor: None,
            factored: Some(m.file_name().expect("file").to_string_lossy().into_owned()),
        });
    }
    let dims = [s.a.pshape().rows().to_vec(), s.b.pshape().cols().to_vec(), s.c.pshape().rows().to_vec()];
    write(path, system_manifest(id, dims, refs.try_into().expect("three")).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;
    use crate::system::{compress, random_system, small_siso_tucker, tucker_to_einstein, CompressFormat, Construction, SystemSpec};
    use crate::decomp::{CpOptions, Truncation};

    fn sample() -> DenseTensor {
        DenseTensor::from_fn(Shape::new(vec![2, 3, 1]).unwrap(), |i| {
            (i[0] as f64 - 0.3) * 1e-7 + i[1] as f64 * 123.456 - 1.0 / 3.0
        })
    }

    #[test]
    fn text_round_trip_is_exact() {
        let t = sample();
        let s = format_tensor_text(&t);
        assert!(s.starts_with("tensor v1\n2 3 1\n"));
        assert_eq!(parse_tensor_text(&s).unwrap(), t);
        let scalar = parse_tensor_text("tensor v1\n\n2.5\n").unwrap();
        assert_eq!(scalar.order(), 0);
        assert_eq!(scalar.data(), &[2.5]);
        let spread = parse_tensor_text("tensor v1\r\n2 2\r\n1 2\r\n3\r\n 4e0").unwrap();
        assert_eq!(spread.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn text_errors_carry_lines() {
        let line = |s: &str| match parse_tensor_text(s) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(line(""), 1);
        assert_eq!(line("tensor v2\n1\n0"), 1);
        assert_eq!(line("tensor v1"), 2);
        assert_eq!(line("tensor v1\n2 x\n"), 2);
        assert_eq!(line("tensor v1\n0\n"), 2);
        assert_eq!(line("tensor v1\n2\n1\nfoo\n"), 4);
        assert_eq!(line("tensor v1\n2\n1\nNaN\n"), 4);
        assert_eq!(line("tensor v1\n2\n1 2 3\n"), 3);
        assert_eq!(line("tensor v1\n3\n1 2\n\n"), 4);
    }

    #[test]
    fn binary_round_trip_and_errors() {
        let t = sample();
        let b = encode_tensor_binary(&t);
        assert_eq!(&b[..6], b"MLTIT1");
        assert_eq!(b.len(), 6 + 4 + 3 * 8 + 6 * 8);
        assert_eq!(decode_tensor_binary(&b).unwrap(), t);
        assert_eq!(decode_tensor(&b).unwrap(), t);
        for cut in [0, 5, 9, 20, b.len() - 1] {
            assert!(matches!(decode_tensor_binary(&b[..cut]), Err(Error::Decode { .. })), "cut {cut}");
        }
        let mut extra = b.clone();
        extra.push(0);
        assert!(decode_tensor_binary(&extra).is_err());
        let mut huge = b"MLTIT1".to_vec();
        huge.extend_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_tensor_binary(&huge).is_err());
        let mut big = b"MLTIT1".to_vec();
        big.extend_from_slice(&2u32.to_le_bytes());
        big.extend_from_slice(&u64::MAX.to_le_bytes());
        big.extend_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode_tensor_binary(&big).is_err());
        let mut nan = b.clone();
        let n = nan.len();
        nan[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode_tensor_binary(&nan), Err(Error::Decode { offset, .. }) if offset == n - 8));
    }

    #[test]
    fn manifests_validate() {
        let ok = r#"
format = "mlti-system v1"
state = [2, 2]
input = [1, 1]
output = [1, 1]
a = { tensor = "a.tensor" }
b = { tensor = "b.tensor" }
c = { factored = "c.toml" }
"#;
        let m = parse_system_manifest(ok).unwrap();
        assert_eq!(m.c.factored.as_deref(), Some("c.toml"));
        let both = ok.replace(r#"c = { factored = "c.toml" }"#, r#"c = { factored = "c.toml", tensor = "c" }"#);
        assert!(parse_system_manifest(&both).is_err());
        assert!(parse_system_manifest(&ok.replace("v1", "v2")).is_err());
        assert!(parse_system_manifest(&ok.replace("input = [1, 1]", "input = [1]")).is_err());
        match parse_system_manifest(&ok.replace("output = [1, 1]", "output = [1, 1\nbogus")) {
            Err(Error::Parse { line, .. }) => assert!(line >= 6, "line {line}"),
            other => panic!("{other:?}"),
        }
        let f = r#"
format = "mlti-factored v1"
kind = "ttd"
pairs = [[2, 2], [3, 3]]
ranks = [4]
files = ["1.tensor", "2.tensor"]
"#;
        assert_eq!(parse_factored_manifest(f).unwrap().kind, FactoredKind::Ttd);
        assert!(parse_factored_manifest(&f.replace("[4]", "[4, 1]")).is_err());
        assert!(parse_factored_manifest(&f.replace("[4]", "[0]")).is_err());
        assert!(parse_factored_manifest(&f.replace(r#", "2.tensor""#, "")).is_err());
        assert!(parse_factored_manifest(&f.replace("[3, 3]", "[0, 3]")).is_err());
    }

    #[test]
    fn system_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = tucker_to_einstein(&small_siso_tucker()).unwrap();
        for enc in [Encoding::Text, Encoding::Binary] {
            let p = dir.path().join(format!("sys-{enc:?}.toml"));
            save_system(&p, &s, Some("worked"), enc).unwrap();
            match load_system(&p).unwrap() {
                LoadedSystem::Full(l) => assert_eq!(l, s),
                other => panic!("{other:?}"),
            }
        }
        let bad = dir.path().join("bad.toml");
        let src = fs::read_to_string(dir.path().join("sys-Text.toml")).unwrap().replace("state = [3, 2]", "state = [2, 3]");
        assert!(src.contains("state = [2, 3]"));
        fs::write(&bad, src).unwrap();
        assert!(matches!(load_system(&bad), Err(Error::Domain(_))));
        assert!(matches!(load_system(&dir.path().join("missing.toml")), Err(Error::Io(_))));
    }

    #[test]
    fn factored_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut g = rng(401);
        let s = random_system(&mut g, &SystemSpec::new(&[2, 2], &[1, 2], &[2, 1], Construction::Dense).stable(0.8)).unwrap();
        let e = Truncation::exact();
        let formats = [
            CompressFormat::Ttd { a: e.clone(), b: e.clone(), c: e },
            CompressFormat::Cpd { ranks: [2, 1, 1], opts: CpOptions::default() },
        ];
        for (k, f) in formats.iter().enumerate() {
            let r = compress(&s, f).unwrap();
            let p = dir.path().join(format!("f{k}.toml"));
            save_factored_system(&p, &r.system, None, Encoding::Binary).unwrap();
            match load_system(&p).unwrap() {
                LoadedSystem::Factored(l) => {
                    assert_eq!(l.a, r.system.a);
                    assert_eq!(l.b, r.system.b);
                    assert_eq!(l.c, r.system.c);
                }
                other => panic!("{other:?}"),
            }
        }
        // a factored entry inside an otherwise dense system is expanded
        let p = dir.path().join("mixed.toml");
        save_system(&p, &s, None, Encoding::Text).unwrap();
        let src = fs::read_to_string(&p).unwrap();
        let mixed = src.replace(r#"tensor = "mixed.a.tensor""#, r#"factored = "f0.a.toml""#);
        assert_ne!(mixed, src);
        fs::write(&p, mixed).unwrap();
        let LoadedSystem::Full(l) = load_system(&p).unwrap() else { panic!("expected dense") };
        assert!(l.a().sub(s.a()).unwrap().frobenius_norm() <= 1e-12 * s.a().frobenius_norm());
    }
}
