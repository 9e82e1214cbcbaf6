//! Samples file: a `#mrf-samples` header line followed by one CSV row per sample.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{Provenance, SampleMatrix};
use crate::error::{MrfError, Result};

const MAGIC: &str = "#mrf-samples";

impl SampleMatrix {
    pub fn header(&self) -> String {
        format!(
            "{MAGIC} n={} A={} k={} seed={} provenance={}",
            self.n, self.alphabet, self.k, self.seed, self.provenance
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header())?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.rows() {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<SampleMatrix> {
        let mut reader = BufReader::new(input);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let fields = first.trim_end().strip_prefix(MAGIC).ok_or_else(|| MrfError::Parse("missing #mrf-samples header".into()))?;
        let get = |key: &str| -> Result<String> {
            fields
                .split_whitespace()
                .find_map(|f| f.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .map(str::to_string)
                .ok_or_else(|| MrfError::Parse(format!("header lacks {key}=")))
        };
        let parse_num = |s: String, key: &str| s.parse::<u64>().map_err(|_| MrfError::Parse(format!("bad {key} in header")));
        let n = parse_num(get("n")?, "n")? as usize;
        let alphabet = parse_num(get("A")?, "A")? as usize;
        let k = parse_num(get("k")?, "k")? as usize;
        let seed = parse_num(get("seed")?, "seed")?;
        let provenance: Provenance = get("provenance")?.parse()?;
        let mut data = Vec::with_capacity(k * n);
        let mut rows = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        for (i, record) in rows.records().enumerate() {
            let record = record?;
            if record.len() != n {
                return Err(MrfError::Parse(format!("row {} has {} columns, expected {n}", i + 1, record.len())));
            }
            for field in record.iter() {
                let x: u16 = field.trim().parse().map_err(|_| MrfError::Parse(format!("row {}: bad symbol {field:?}", i + 1)))?;
                if x as usize >= alphabet {
                    return Err(MrfError::Parse(format!("row {}: symbol {x} outside alphabet of size {alphabet}", i + 1)));
                }
                data.push(x as u8);
            }
        }
        if data.len() != k * n {
            return Err(MrfError::Parse(format!("header declares k={k} but file has {} rows", data.len() / n.max(1))));
        }
        SampleMatrix::new(n, alphabet, data, provenance, seed)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SampleMatrix> {
        SampleMatrix::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SampleMatrix {
        SampleMatrix::new(3, 3, vec![0, 1, 2, 2, 2, 0], Provenance::Gibbs { burn_in: 5, thinning: 2 }, 42).unwrap()
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        small().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "#mrf-samples n=3 A=3 k=2 seed=42 provenance=gibbs(burn_in=5,thinning=2)\n0,1,2\n2,2,0\n");
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        small().write_csv(&mut buf).unwrap();
        assert_eq!(SampleMatrix::read_csv(&buf[..]).unwrap(), small());
    }

    #[test]
    fn csv_rejects_bad_input() {
        let cases = [
            "0,1\n",
            "#mrf-samples n=2 A=2 k=1 seed=0 provenance=exact\n0,2\n",
            "#mrf-samples n=2 A=2 k=2 seed=0 provenance=exact\n0,1\n",
            "#mrf-samples n=2 A=2 k=1 seed=0 provenance=exact\n0,1,1\n",
        ];
        for text in cases {
            assert!(SampleMatrix::read_csv(text.as_bytes()).is_err(), "{text}");
        }
    }
}
