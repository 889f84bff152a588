//! Input formats: SNAP edge lists, FASTA, FASTQ and the binary seed-index file.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use dpim_core::align::normalize_bases;
use dpim_core::apsp::{load_graph, DistanceMatrix};
use dpim_core::seed::SeedIndex;

use crate::error::{CliError, Result};

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

/// A parsed edge list with vertex ids renumbered densely in ascending id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    pub n: usize,
    pub edges: Vec<(usize, usize, i64)>,
    /// Original id of each dense vertex.
    pub ids: Vec<u64>,
}

impl EdgeList {
    pub fn to_matrix(&self) -> Result<DistanceMatrix> {
        Ok(load_graph(&self.edges, self.n)?)
    }
}

/// SNAP text format: `#` comments, then `src dst [weight]` per line (whitespace
/// separated). Missing weights are 1.
pub fn parse_edge_list(text: &str, name: &str) -> Result<EdgeList> {
    let mut raw = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 2 || f.len() > 3 {
            return Err(parse_err(name, ln + 1, format!("expected 2 or 3 fields, found {}", f.len())));
        }
        let id = |s: &str| s.parse::<u64>().map_err(|_| parse_err(name, ln + 1, format!("bad vertex id {s:?}")));
        let w = match f.get(2) {
            Some(s) => s.parse::<i64>().map_err(|_| parse_err(name, ln + 1, format!("bad weight {s:?}")))?,
            None => 1,
        };
        raw.push((id(f[0])?, id(f[1])?, w));
    }
    let mut dense: BTreeMap<u64, usize> = BTreeMap::new();
    for &(u, v, _) in &raw {
        dense.insert(u, 0);
        dense.insert(v, 0);
    }
    let ids: Vec<u64> = dense.keys().copied().collect();
    for (i, v) in dense.values_mut().enumerate() {
        *v = i;
    }
    let edges = raw.into_iter().map(|(u, v, w)| (dense[&u], dense[&v], w)).collect();
    Ok(EdgeList {
        n: ids.len(),
        edges,
        ids,
    })
}

pub fn read_edge_list(path: &Path) -> Result<EdgeList> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_edge_list(&text, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqRecord {
    pub name: String,
    /// Uppercase, non-ACGT mapped to `N`.
    pub seq: Vec<u8>,
}

pub fn parse_fasta<R: BufRead>(r: R, name: &str) -> Result<Vec<SeqRecord>> {
    let mut out: Vec<SeqRecord> = Vec::new();
    for (ln, line) in r.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(name, e))?;
        let line = line.trim_end();
        if let Some(h) = line.strip_prefix('>') {
            out.push(SeqRecord {
                name: h.split_whitespace().next().unwrap_or("").to_string(),
                seq: Vec::new(),
            });
        } else if line.is_empty() || line.starts_with(';') {
            continue;
        } else {
            let rec = out
                .last_mut()
                .ok_or_else(|| parse_err(name, ln + 1, "sequence data before the first '>' header"))?;
            rec.seq.extend(normalize_bases(line.as_bytes()));
        }
    }
    Ok(out)
}

pub fn parse_fastq<R: BufRead>(r: R, name: &str) -> Result<Vec<SeqRecord>> {
    let lines: Vec<String> = r
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| CliError::io(name, e))?;
    let lines: Vec<&str> = lines.iter().map(|l| l.trim_end()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].is_empty() {
            i += 1;
            continue;
        }
        if i + 3 >= lines.len() {
            return Err(parse_err(name, i + 1, "truncated FASTQ record"));
        }
        let header = lines[i]
            .strip_prefix('@')
            .ok_or_else(|| parse_err(name, i + 1, "FASTQ record must start with '@'"))?;
        if !lines[i + 2].starts_with('+') {
            return Err(parse_err(name, i + 3, "expected '+' separator line"));
        }
        if lines[i + 3].len() != lines[i + 1].len() {
            return Err(parse_err(name, i + 4, "quality length differs from sequence length"));
        }
        out.push(SeqRecord {
            name: header.split_whitespace().next().unwrap_or("").to_string(),
            seq: normalize_bases(lines[i + 1].as_bytes()),
        });
        i += 4;
    }
    Ok(out)
}

/// FASTA or FASTQ, picked by the first non-blank character.
pub fn read_sequences(path: &Path) -> Result<Vec<SeqRecord>> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| CliError::io(path, e))?;
    let name = path.display().to_string();
    match text.trim_start().chars().next() {
        Some('@') => parse_fastq(text.as_bytes(), &name),
        Some('>') => parse_fasta(text.as_bytes(), &name),
        None => Ok(Vec::new()),
        Some(c) => Err(parse_err(&name, 1, format!("not FASTA or FASTQ (starts with {c:?})"))),
    }
}

const INDEX_MAGIC: &[u8; 8] = b"DPIMIDX1";

/// Little-endian layout: magic, k (u32), reference length (u64), PTR count (u64),
/// CAL count (u64), PTR entries (u64 each), CAL entries (u32 each).
pub fn write_index<W: Write>(idx: &SeedIndex, mut w: W) -> std::io::Result<()> {
    w.write_all(INDEX_MAGIC)?;
    w.write_all(&(idx.k() as u32).to_le_bytes())?;
    w.write_all(&idx.reference_length().to_le_bytes())?;
    w.write_all(&(idx.ptr().len() as u64).to_le_bytes())?;
    w.write_all(&(idx.cal().len() as u64).to_le_bytes())?;
    for p in idx.ptr() {
        w.write_all(&p.to_le_bytes())?;
    }
    for c in idx.cal() {
        w.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

pub fn decode_index(bytes: &[u8]) -> Result<SeedIndex> {
    let bad = |m: &str| CliError::Core(dpim_core::Error::Input(format!("index file: {m}")));
    if bytes.len() < 36 || &bytes[..8] != INDEX_MAGIC {
        return Err(bad("missing magic header"));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let k = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let ref_len = u64_at(12);
    let (np, nc) = (u64_at(20), u64_at(28));
    let want = np
        .checked_mul(8)
        .and_then(|p| nc.checked_mul(4).and_then(|c| p.checked_add(c)))
        .and_then(|b| b.checked_add(36));
    if want != Some(bytes.len() as u64) {
        return Err(bad("length does not match the header counts"));
    }
    let body = &bytes[36..];
    let (p, c) = body.split_at(np as usize * 8);
    let ptr = p.chunks_exact(8).map(|x| u64::from_le_bytes(x.try_into().unwrap())).collect();
    let cal = c.chunks_exact(4).map(|x| u32::from_le_bytes(x.try_into().unwrap())).collect();
    Ok(SeedIndex::from_parts(k, ref_len, ptr, cal)?)
}

pub fn save_index(idx: &SeedIndex, path: &Path) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_index(idx, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn load_index(path: &Path) -> Result<SeedIndex> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_index(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dpim_core::seed::build_index;
    use proptest::prelude::*;

    #[test]
    fn snap_ids_are_densified_in_order() {
        let e = parse_edge_list("# comment\n10 30\n30 20 5\n\n20\t10 2\n", "g").unwrap();
        assert_eq!(e.ids, vec![10, 20, 30]);
        assert_eq!(e.edges, vec![(0, 2, 1), (2, 1, 5), (1, 0, 2)]);
        let m = e.to_matrix().unwrap();
        assert_eq!(m.get(2, 1), 5);
    }

    #[test]
    fn snap_errors_carry_line_numbers() {
        let err = parse_edge_list("1 2\n1 x\n", "g.txt").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_edge_list("1 2 3 4\n", "g").is_err());
        assert!(parse_edge_list("1 2 -3\n", "g").unwrap().to_matrix().is_err());
    }

    #[test]
    fn fasta_and_fastq() {
        let fa = parse_fasta(">chr1 desc\nACgt\nnNA\n>chr2\nTT\n".as_bytes(), "x").unwrap();
        assert_eq!(fa[0].name, "chr1");
        assert_eq!(fa[0].seq, b"ACGTNNA");
        assert_eq!(fa[1].seq, b"TT");
        assert!(parse_fasta("ACGT\n".as_bytes(), "x").is_err());
        let fq = parse_fastq("@r1\nACGT\n+\nIIII\n@r2 x\nGG\n+r2\nII\n".as_bytes(), "x").unwrap();
        assert_eq!(fq.len(), 2);
        assert_eq!(fq[1].name, "r2");
        assert!(parse_fastq("@r1\nACGT\n+\nIII\n".as_bytes(), "x").is_err());
        assert!(parse_fastq("@r1\nACGT\n".as_bytes(), "x").is_err());
    }

    #[test]
    fn index_file_round_trip_and_corruption() {
        let idx = build_index(b"ACGTACGTTTGACCA", 4).unwrap();
        let mut buf = Vec::new();
        write_index(&idx, &mut buf).unwrap();
        assert_eq!(decode_index(&buf).unwrap(), idx);
        assert!(decode_index(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(decode_index(&bad).is_err());
        // Non-monotone pointer table.
        let mut bad = buf.clone();
        bad[36 + 8..36 + 16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode_index(&bad).is_err());
    }

    proptest! {
        #[test]
        fn parsers_reject_garbage_without_panicking(text in "[0-9a-zA-Z#>@+ \t\n-]{0,200}") {
            let _ = parse_edge_list(&text, "fuzz");
            let _ = parse_fasta(text.as_bytes(), "fuzz");
            let _ = parse_fastq(text.as_bytes(), "fuzz");
        }

        #[test]
        fn index_decoder_survives_truncation(cut in 0usize..200) {
            let idx = build_index(b"ACGTACGTTTGACCAGGT", 4).unwrap();
            let mut buf = Vec::new();
            write_index(&idx, &mut buf).unwrap();
            let cut = cut.min(buf.len());
            let r = decode_index(&buf[..cut]);
            prop_assert_eq!(r.is_ok(), cut == buf.len());
        }
    }
}
