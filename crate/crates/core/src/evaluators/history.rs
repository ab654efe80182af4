use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::fourier::BooleanPoint;
use crate::{Error, Result};

/// Resource level rounded to 6 decimals, used to key history levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResourceKey(i64);

impl ResourceKey {
    pub fn of(resource: f64) -> Self {
        Self((resource * 1e6).round() as i64)
    }

    pub fn resource(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

/// One observed `(point, resource, loss)` triple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationRecord {
    pub seq: u64,
    pub point: BooleanPoint,
    pub resource: f64,
    /// `+inf` marks a failed evaluation.
    #[serde(serialize_with = "ser_loss", deserialize_with = "de_loss")]
    pub loss: f64,
    /// Seconds spent in the evaluator.
    pub wall_time: f64,
    pub evaluator: String,
}

impl EvaluationRecord {
    /// Equality ignoring `wall_time`.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.seq == other.seq
            && self.point == other.point
            && self.resource.to_bits() == other.resource.to_bits()
            && self.loss.to_bits() == other.loss.to_bits()
            && self.evaluator == other.evaluator
    }
}

fn ser_loss<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else if *v < 0.0 {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("nan")
    }
}

fn de_loss<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Loss {
        Num(f64),
        Str(String),
    }
    match Loss::deserialize(d)? {
        Loss::Num(v) => Ok(v),
        Loss::Str(s) if s == "inf" => Ok(f64::INFINITY),
        Loss::Str(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Loss::Str(s) => Err(serde::de::Error::custom(format!("bad loss {s:?}"))),
    }
}

/// Append-only log of evaluations, indexed by resource level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvaluationHistory {
    records: Vec<EvaluationRecord>,
    levels: BTreeMap<ResourceKey, Vec<usize>>,
}

impl EvaluationHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; sequence numbers must increase and dimensions agree.
    pub fn append(&mut self, record: EvaluationRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.seq <= last.seq {
                return Err(Error::Input(format!(
                    "sequence {} does not follow {}",
                    record.seq, last.seq
                )));
            }
            record.point.check_dim(last.point.dim())?;
        }
        if !(record.resource > 0.0 && record.resource.is_finite()) {
            return Err(Error::Input(format!(
                "resource {} is not positive",
                record.resource
            )));
        }
        if record.loss.is_nan() {
            return Err(Error::Input(format!("record {} has NaN loss", record.seq)));
        }
        self.levels
            .entry(ResourceKey::of(record.resource))
            .or_default()
            .push(self.records.len());
        self.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EvaluationRecord] {
        &self.records
    }

    /// First unused sequence number.
    pub fn next_seq(&self) -> u64 {
        self.records.last().map_or(0, |r| r.seq + 1)
    }

    /// Resource levels in increasing order.
    pub fn level_keys(&self) -> impl DoubleEndedIterator<Item = ResourceKey> + '_ {
        self.levels.keys().copied()
    }

    pub fn level(&self, key: ResourceKey) -> impl Iterator<Item = &EvaluationRecord> {
        self.levels
            .get(&key)
            .into_iter()
            .flatten()
            .map(|&i| &self.records[i])
    }

    pub fn level_len(&self, key: ResourceKey) -> usize {
        self.levels.get(&key).map_or(0, Vec::len)
    }

    /// Field-exact comparison ignoring wall time.
    pub fn same_outcomes(&self, other: &Self) -> bool {
        self.records.len() == other.records.len()
            && self
                .records
                .iter()
                .zip(&other.records)
                .all(|(a, b)| a.same_outcome(b))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(std::io::Error::other)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// One JSON object per line. Blank lines and `#` comment lines are
    /// skipped when reading.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn read_from<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut h = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let record: EvaluationRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
            h.append(record).map_err(|e| err(e.to_string()))?;
        }
        Ok(h)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?), path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seq: u64, resource: f64, loss: f64) -> EvaluationRecord {
        EvaluationRecord {
            seq,
            point: BooleanPoint::from_index(seq, 4),
            resource,
            loss,
            wall_time: 0.001 * seq as f64,
            evaluator: "test".into(),
        }
    }

    #[test]
    fn levels_and_ordering() {
        let mut h = EvaluationHistory::new();
        h.append(rec(0, 1.0, 0.5)).unwrap();
        h.append(rec(1, 3.0, 0.25)).unwrap();
        h.append(rec(2, 1.0000000001, f64::INFINITY)).unwrap();
        assert!(h.append(rec(2, 1.0, 0.0)).is_err());
        assert!(h.append(rec(5, 0.0, 0.0)).is_err());
        assert!(h.append(rec(5, 1.0, f64::NAN)).is_err());
        let keys: Vec<_> = h.level_keys().collect();
        assert_eq!(keys, vec![ResourceKey::of(1.0), ResourceKey::of(3.0)]);
        assert_eq!(h.level_len(ResourceKey::of(1.0)), 2);
        assert_eq!(h.next_seq(), 3);
    }

    #[test]
    fn round_trip_is_field_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.jsonl");
        EvaluationHistory::new().save(&path).unwrap();
        assert!(EvaluationHistory::load(&path).unwrap().is_empty());

        let mut h = EvaluationHistory::new();
        h.append(rec(0, 1.0, 0.1 + 0.2)).unwrap();
        h.append(rec(4, 1.0 / 3.0, f64::INFINITY)).unwrap();
        h.append(rec(9, 243.0, -1e-300)).unwrap();
        h.save(&path).unwrap();
        let back = EvaluationHistory::load(&path).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn corrupt_line_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.jsonl");
        let mut text = Vec::new();
        let mut h = EvaluationHistory::new();
        h.append(rec(0, 1.0, 0.1)).unwrap();
        h.write_to(&mut text).unwrap();
        text.extend_from_slice(b"{\"seq\": 1, \"point\": [1, 0]}\n");
        std::fs::write(&path, text).unwrap();
        match EvaluationHistory::load(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let mut text = Vec::new();
        h.write_to(&mut text).unwrap();
        h.write_to(&mut text).unwrap();
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            EvaluationHistory::load(&path),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
