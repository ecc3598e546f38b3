//! CSV datasets: one header row, real-valued feature columns, integer label
//! in the last column.

use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, SampleShape, Split};
use crate::error::{Error, Result};

pub fn read_csv<R: Read>(input: R, split: Split) -> Result<Dataset<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let width = rdr.headers()?.len();
    if width < 2 {
        return Err(Error::Csv("need at least one feature column and a label column".into()));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != width {
            return Err(Error::Csv(format!("row {} has {} fields, expected {width}", row + 1, rec.len())));
        }
        for field in rec.iter().take(width - 1) {
            let x: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Csv(format!("row {}: bad feature '{field}'", row + 1)))?;
            features.push(x);
        }
        let label = rec[width - 1].trim();
        labels.push(
            label
                .parse::<usize>()
                .map_err(|_| Error::Csv(format!("row {}: bad label '{label}'", row + 1)))?,
        );
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::new(features, labels, n_classes, SampleShape::Flat { dim: width - 1 }, split)
}

pub fn load_csv(path: impl AsRef<Path>, split: Split) -> Result<Dataset<f64>> {
    read_csv(std::fs::File::open(path)?, split)
}

/// Writes `x0..x{d-1},label` rows; floats use the shortest round-trip form.
pub fn write_csv<W: Write>(ds: &Dataset<f64>, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let d = ds.dim();
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    wtr.write_record(&header)?;
    let mut rec: Vec<String> = Vec::with_capacity(d + 1);
    for i in 0..ds.len() {
        rec.clear();
        rec.extend(ds.sample(i).iter().map(|x| x.to_string()));
        rec.push(ds.label(i).to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rows() {
        let text = "a,b,label\n0.5,1,2\n-3,0.25,0\n";
        let ds = read_csv(text.as_bytes(), Split::Test).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.n_classes(), 3);
        assert_eq!(ds.sample(1), &[-3.0, 0.25]);
        assert_eq!(ds.split(), Split::Test);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(read_csv("a,label\n0.5,x\n".as_bytes(), Split::Train).is_err());
        assert!(read_csv("a,label\nfoo,1\n".as_bytes(), Split::Train).is_err());
        assert!(read_csv("label\n1\n".as_bytes(), Split::Train).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = Dataset::new(vec![0.1, 1.0 / 3.0, -2.5e-17, 7.0], vec![1, 0], 2, SampleShape::Flat { dim: 2 }, Split::Train).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), Split::Train).unwrap();
        assert_eq!(back, ds);
    }
}
