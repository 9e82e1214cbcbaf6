use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Model, Potential};
use crate::error::Result;

/// On-disk model: `{"n", "alphabet", "potentials": [{"clique", "table"}]}`.
///
/// `-inf` table entries are written as the string `"-inf"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub alphabet: usize,
    pub potentials: Vec<PotentialFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialFile {
    pub clique: Vec<usize>,
    #[serde(serialize_with = "write_table", deserialize_with = "read_table")]
    pub table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Num(f64),
    Str(String),
}

fn write_table<S: Serializer>(table: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::{Error, SerializeSeq};
    let mut seq = s.serialize_seq(Some(table.len()))?;
    for &t in table {
        if t == f64::NEG_INFINITY {
            seq.serialize_element(&Entry::Str("-inf".into()))?;
        } else if t.is_finite() {
            seq.serialize_element(&Entry::Num(t))?;
        } else {
            return Err(S::Error::custom(format!("unserializable table entry {t}")));
        }
    }
    seq.end()
}

fn read_table<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    use serde::de::Error;
    Vec::<Entry>::deserialize(d)?
        .into_iter()
        .map(|e| match e {
            Entry::Num(x) => Ok(x),
            Entry::Str(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            Entry::Str(s) => Err(D::Error::custom(format!("unexpected table entry {s:?}"))),
        })
        .collect()
}

impl From<&Model> for ModelFile {
    fn from(m: &Model) -> Self {
        ModelFile {
            n: m.n(),
            alphabet: m.alphabet(),
            potentials: m
                .potentials()
                .iter()
                .map(|p| PotentialFile { clique: p.clique.clone(), table: p.table.clone() })
                .collect(),
        }
    }
}

impl TryFrom<ModelFile> for Model {
    type Error = crate::error::MrfError;

    fn try_from(f: ModelFile) -> Result<Model> {
        let potentials = f.potentials.into_iter().map(|p| Potential::new(p.clique, p.table)).collect();
        Model::new(f.n, f.alphabet, potentials)
    }
}

impl Model {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let file: ModelFile = serde_json::from_str(text)?;
        Model::try_from(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        Model::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}
