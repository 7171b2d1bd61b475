use std::path::Path;

use super::Masks;
use crate::error::DataError;
use crate::model::LatentState;
use crate::numerics::Matrix;

/// `node, split, y, s` precede the `C` and `E` columns.
pub const EMBEDDING_FIXED_COLUMNS: usize = 4;

/// CSV with one row per node: id, split tag, label (empty when unknown),
/// sensitive value, then `c0..`, `e0..`.
pub fn export_embeddings(
    state: &LatentState,
    labels: &[Option<u8>],
    sensitive: &[u8],
    masks: Option<&Masks>,
    path: &Path,
) -> Result<(), DataError> {
    let n = state.h.rows();
    let tags = masks.map_or_else(|| vec!["none"; n], |m| m.tags(n));
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["node".to_string(), "split".into(), "y".into(), "s".into()];
    header.extend((0..state.c.cols()).map(|i| format!("c{i}")));
    header.extend((0..state.e.cols()).map(|i| format!("e{i}")));
    w.write_record(&header)?;
    for v in 0..n {
        let mut rec = vec![
            v.to_string(),
            tags[v].to_string(),
            labels[v].map(|y| y.to_string()).unwrap_or_default(),
            sensitive[v].to_string(),
        ];
        rec.extend(state.c.row(v).iter().chain(state.e.row(v)).map(|x| format!("{x}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Read back the numeric block `[C | E]` of an exported file.
pub fn read_embeddings(path: &Path) -> Result<Matrix, DataError> {
    let mut r = csv::Reader::from_path(path)?;
    let width = r.headers()?.len().saturating_sub(EMBEDDING_FIXED_COLUMNS);
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        for cell in rec.iter().skip(EMBEDDING_FIXED_COLUMNS) {
            data.push(cell.parse::<f64>().map_err(|e| DataError::Parse {
                file: path.display().to_string(),
                row: i + 2,
                msg: e.to_string(),
            })?);
        }
        rows += 1;
    }
    Matrix::from_vec(rows, width, data).map_err(|e| DataError::Parse {
        file: path.display().to_string(),
        row: 0,
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_shape() {
        let h = Matrix::from_rows(&[vec![0.1, -2.5, 1.0 / 3.0, 7e-13], vec![1e10, 0.0, -0.0, 2.0_f64.sqrt()]]).unwrap();
        let state = LatentState {
            c: h.slice_cols(0, 2).unwrap(),
            e: h.slice_cols(2, 4).unwrap(),
            h: h.clone(),
        };
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("emb.csv");
        let masks = Masks {
            train: vec![1],
            val: vec![],
            test: vec![0],
        };
        export_embeddings(&state, &[Some(1), None], &[0, 1], Some(&masks), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').count(), EMBEDDING_FIXED_COLUMNS + 4);
        assert!(text.lines().nth(2).unwrap().starts_with("1,train,,1,"));
        let back = read_embeddings(&path).unwrap();
        for (a, b) in back.data().iter().zip(h.data()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
