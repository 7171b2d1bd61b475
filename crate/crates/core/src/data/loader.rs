use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use super::Dataset;
use crate::error::DataError;
use crate::graph::io::parse_edge_pairs;
use crate::graph::Graph;
use crate::numerics::Matrix;

/// Environment variable naming the directory that holds one sub-directory per
/// dataset. Defaults to `./data`.
pub const DATA_DIR_ENV: &str = "FAIRGRAPH_DATA_DIR";

pub const PRESETS: [&str; 5] = ["german", "bail", "credit", "nba", "pokec_n"];

fn scalar_string<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    let v = Option::<serde_json::Value>::deserialize(d)?;
    Ok(match v {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(s)) => Some(s),
        Some(other) => Some(other.to_string()),
    })
}

fn scalar_strings<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    let v = Vec::<serde_json::Value>::deserialize(d)?;
    Ok(v.into_iter()
        .map(|x| match x {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        })
        .collect())
}

fn yes() -> bool {
    true
}

/// Column mapping for a tabular node file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub label_col: String,
    pub sensitive_col: String,
    /// Label cells equal to this value map to class 1, others to 0.
    #[serde(default, deserialize_with = "scalar_string")]
    pub positive_value: Option<String>,
    /// Alternatively: numeric labels `≥` this map to class 1.
    #[serde(default)]
    pub positive_threshold: Option<f64>,
    #[serde(deserialize_with = "scalar_string")]
    pub sensitive_positive_value: Option<String>,
    /// Column holding node ids referenced by the edge file; row indices when absent.
    #[serde(default)]
    pub id_col: Option<String>,
    #[serde(default)]
    pub drop_cols: Vec<String>,
    /// Label cells that mark an unlabeled node (empty cells always do).
    #[serde(default, deserialize_with = "scalar_strings")]
    pub missing_label_values: Vec<String>,
    /// Keep the (mapped) sensitive column among the features.
    #[serde(default = "yes")]
    pub sensitive_as_feature: bool,
    #[serde(default)]
    pub features_file: Option<String>,
    #[serde(default)]
    pub edges_file: Option<String>,
}

/// Built-in column mappings and file names for the benchmark datasets.
pub fn preset(name: &str) -> Option<DatasetMeta> {
    let base = |label: &str, sens: &str, pos: &str, spos: &str, feat: &str, edges: &str| DatasetMeta {
        label_col: label.into(),
        sensitive_col: sens.into(),
        positive_value: Some(pos.into()),
        positive_threshold: None,
        sensitive_positive_value: Some(spos.into()),
        id_col: None,
        drop_cols: Vec::new(),
        missing_label_values: Vec::new(),
        sensitive_as_feature: true,
        features_file: Some(feat.into()),
        edges_file: Some(edges.into()),
    };
    let meta = match name {
        "german" => DatasetMeta {
            drop_cols: vec!["OtherLoansAtStore".into(), "PurposeOfLoan".into()],
            ..base("GoodCustomer", "Gender", "1", "Female", "german.csv", "german_edges.txt")
        },
        "bail" => base("RECID", "WHITE", "1", "1", "bail.csv", "bail_edges.txt"),
        "credit" => DatasetMeta {
            drop_cols: vec!["Single".into()],
            ..base("NoDefaultNextMonth", "Age", "1", "1", "credit.csv", "credit_edges.txt")
        },
        "nba" => DatasetMeta {
            id_col: Some("user_id".into()),
            missing_label_values: vec!["-1".into()],
            sensitive_as_feature: false,
            ..base("SALARY", "country", "1", "1", "nba.csv", "nba_relationship.txt")
        },
        "pokec_n" => DatasetMeta {
            id_col: Some("user_id".into()),
            missing_label_values: vec!["-1".into()],
            positive_value: None,
            positive_threshold: Some(1.0),
            sensitive_as_feature: false,
            ..base(
                "I_am_working_in_field",
                "region",
                "1",
                "1",
                "region_job_2.csv",
                "region_job_2_relationship.txt",
            )
        },
        _ => return None,
    };
    Some(meta)
}

pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub features_path: PathBuf,
    pub edges_path: PathBuf,
    pub meta: DatasetMeta,
}

impl DatasetSpec {
    /// A dataset directory: `meta.json` when present, otherwise the preset
    /// named after the directory (or `name`).
    pub fn from_dir(dir: &Path, name: &str) -> Result<Self, DataError> {
        let meta_path = dir.join("meta.json");
        let meta = if meta_path.exists() {
            serde_json::from_reader(BufReader::new(File::open(&meta_path)?))?
        } else {
            preset(name).ok_or_else(|| DataError::UnknownDataset(format!("{name} (no meta.json in {})", dir.display())))?
        };
        let features = meta.features_file.clone().unwrap_or_else(|| "features.csv".into());
        let edges = meta.edges_file.clone().unwrap_or_else(|| "edges.txt".into());
        Ok(Self {
            name: name.to_string(),
            features_path: dir.join(features),
            edges_path: dir.join(edges),
            meta,
        })
    }

    /// A directory path, or a preset name looked up under [`data_dir`].
    pub fn resolve(name_or_path: &str) -> Result<Self, DataError> {
        let p = Path::new(name_or_path);
        if p.is_dir() {
            let name = p
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| name_or_path.to_string());
            return Self::from_dir(p, &name);
        }
        if preset(name_or_path).is_none() {
            return Err(DataError::UnknownDataset(name_or_path.to_string()));
        }
        let dir = data_dir().join(name_or_path);
        if !dir.is_dir() {
            return Err(DataError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!(
                    "dataset `{name_or_path}` not found: expected directory {} (set {DATA_DIR_ENV})",
                    dir.display()
                ),
            )));
        }
        Self::from_dir(&dir, name_or_path)
    }
}

fn same_value(cell: &str, target: &str) -> bool {
    let (a, b) = (cell.trim(), target.trim());
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn canonical(cell: &str) -> String {
    let t = cell.trim();
    match t.parse::<f64>() {
        Ok(x) => format!("{x}"),
        Err(_) => t.to_string(),
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, DataError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| DataError::MissingColumn(name.to_string()))
}

/// Read the node table and edge list described by `spec`. Edges are
/// deduplicated; self-loops and edges naming unknown ids are dropped and
/// counted.
pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset, DataError> {
    let meta = &spec.meta;
    let file = spec.features_path.display().to_string();
    if meta.positive_value.is_none() && meta.positive_threshold.is_none() {
        return Err(DataError::Parse {
            file: "meta.json".into(),
            row: 0,
            msg: "one of positive_value / positive_threshold is required".into(),
        });
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&spec.features_path)?;
    let headers = rdr.headers()?.clone();
    let label_idx = column(&headers, &meta.label_col)?;
    let sens_idx = column(&headers, &meta.sensitive_col)?;
    let id_idx = meta.id_col.as_deref().map(|c| column(&headers, c)).transpose()?;
    let mut skip: BTreeSet<usize> = [label_idx].into_iter().collect();
    skip.extend(id_idx);
    if !meta.sensitive_as_feature {
        skip.insert(sens_idx);
    }
    for c in &meta.drop_cols {
        skip.insert(column(&headers, c)?);
    }
    let feat_cols: Vec<usize> = (0..headers.len()).filter(|c| !skip.contains(c)).collect();
    let feature_names: Vec<String> = feat_cols.iter().map(|&c| headers[c].trim().to_string()).collect();
    let spos = meta.sensitive_positive_value.clone().unwrap_or_else(|| "1".into());

    let mut labels = Vec::new();
    let mut sensitive = Vec::new();
    let mut feats = Vec::new();
    let mut ids = Vec::new();
    let mut sens_seen = BTreeSet::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 2; // 1-based, after header
        let parse_err = |msg: String| DataError::Parse {
            file: file.clone(),
            row,
            msg,
        };
        let lab = rec.get(label_idx).unwrap_or("").trim();
        let label = if lab.is_empty() || meta.missing_label_values.iter().any(|m| same_value(lab, m)) {
            None
        } else if let Some(thr) = meta.positive_threshold {
            let v: f64 = lab.parse().map_err(|_| parse_err(format!("label `{lab}` is not numeric")))?;
            Some(u8::from(v >= thr))
        } else {
            Some(u8::from(same_value(lab, meta.positive_value.as_deref().unwrap_or_default())))
        };
        labels.push(label);

        let s = rec.get(sens_idx).unwrap_or("").trim();
        if s.is_empty() {
            return Err(parse_err(format!("empty sensitive value in `{}`", meta.sensitive_col)));
        }
        sens_seen.insert(canonical(s));
        if sens_seen.len() > 2 {
            return Err(DataError::NonBinarySensitive {
                col: meta.sensitive_col.clone(),
                value: s.to_string(),
            });
        }
        let sv = u8::from(same_value(s, &spos));
        sensitive.push(sv);

        for &c in &feat_cols {
            let cell = rec.get(c).unwrap_or("").trim();
            let v = if c == sens_idx {
                f64::from(sv)
            } else {
                cell.parse::<f64>().map_err(|_| {
                    parse_err(format!("feature `{}` has non-numeric value `{cell}`", headers[c].trim()))
                })?
            };
            feats.push(v);
        }
        if let Some(i) = id_idx {
            let cell = rec.get(i).unwrap_or("").trim();
            let id = cell
                .parse::<f64>()
                .ok()
                .filter(|x| x.fract() == 0.0)
                .ok_or_else(|| parse_err(format!("id `{cell}` is not an integer")))?;
            ids.push(id as i64);
        }
    }
    let n = labels.len();
    let features = Matrix::from_vec(n, feat_cols.len(), feats).expect("row-major fill");

    let pairs = parse_edge_pairs(BufReader::new(File::open(&spec.edges_path)?))?;
    let mut dangling = 0usize;
    let mapped: Vec<(usize, usize)> = match id_idx {
        Some(_) => {
            let index: HashMap<i64, usize> = ids.iter().enumerate().map(|(r, &id)| (id, r)).collect();
            pairs
                .into_iter()
                .filter_map(|(a, b)| match (index.get(&a), index.get(&b)) {
                    (Some(&u), Some(&v)) => Some((u, v)),
                    _ => {
                        dangling += 1;
                        None
                    }
                })
                .collect()
        }
        None => {
            let mut out = Vec::with_capacity(pairs.len());
            for (line, (a, b)) in pairs.into_iter().enumerate() {
                if a < 0 || b < 0 || a as usize >= n || b as usize >= n {
                    return Err(DataError::Parse {
                        file: spec.edges_path.display().to_string(),
                        row: line + 1,
                        msg: format!("edge ({a}, {b}) outside 0..{n}"),
                    });
                }
                out.push((a as usize, b as usize));
            }
            out
        }
    };
    let (graph, dup) = Graph::from_pairs_dedup(n, mapped)?;
    let dropped_edges = dup + dangling;
    if dropped_edges > 0 {
        log::warn!(
            "{}: dropped {dropped_edges} edges ({dup} self-loops/duplicates, {dangling} with unknown ids)",
            spec.name
        );
    }
    Ok(Dataset {
        name: spec.name.clone(),
        graph,
        features,
        feature_names,
        labels,
        sensitive,
        dropped_edges,
    })
}

/// Write `ds` as a loadable directory (`features.csv`, `edges.txt`,
/// `meta.json`). Unlabeled nodes are written as `-1`.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<DatasetSpec, DataError> {
    std::fs::create_dir_all(dir)?;
    let label_col = "__label".to_string();
    let sens_col = "__sensitive".to_string();
    let mut w = csv::Writer::from_path(dir.join("features.csv"))?;
    let mut header = ds.feature_names.clone();
    header.push(label_col.clone());
    header.push(sens_col.clone());
    w.write_record(&header)?;
    for v in 0..ds.n() {
        let mut rec: Vec<String> = ds.features.row(v).iter().map(|x| format!("{x}")).collect();
        rec.push(ds.labels[v].map_or("-1".to_string(), |y| y.to_string()));
        rec.push(ds.sensitive[v].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    let mut edges = std::io::BufWriter::new(File::create(dir.join("edges.txt"))?);
    crate::graph::io::write_edge_list(&ds.graph, &mut edges)?;
    edges.flush()?;
    let meta = DatasetMeta {
        label_col,
        sensitive_col: sens_col,
        positive_value: Some("1".into()),
        positive_threshold: None,
        sensitive_positive_value: Some("1".into()),
        id_col: None,
        drop_cols: Vec::new(),
        missing_label_values: vec!["-1".into()],
        sensitive_as_feature: false,
        features_file: Some("features.csv".into()),
        edges_file: Some("edges.txt".into()),
    };
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    DatasetSpec::from_dir(dir, &ds.name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeCensus;

    fn write(dir: &Path, name: &str, body: &str) {
        std::fs::write(dir.join(name), body).unwrap();
    }

    fn german_like(dir: &Path) {
        write(
            dir,
            "german.csv",
            "Gender,Age,PurposeOfLoan,OtherLoansAtStore,GoodCustomer\n\
             Female,30,car,0,1\nMale,40,tv,1,-1\nFemale,22,car,0,-1\nMale,51,tv,0,1\n",
        );
        write(dir, "german_edges.txt", "0 1\n1 2\n2 3\n3 0\n1 0\n2 2\n");
    }

    #[test]
    fn german_preset_layout() {
        let tmp = tempfile::tempdir().unwrap();
        german_like(tmp.path());
        let spec = DatasetSpec::from_dir(tmp.path(), "german").unwrap();
        let ds = load_dataset(&spec).unwrap();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.feature_names, vec!["Gender", "Age"]);
        assert_eq!(ds.labels, vec![Some(1), Some(0), Some(0), Some(1)]);
        assert_eq!(ds.sensitive, vec![1, 0, 1, 0]);
        assert_eq!(ds.features.row(0), &[1.0, 30.0]);
        assert_eq!(ds.graph.m(), 4);
        assert_eq!(ds.dropped_edges, 2);
    }

    #[test]
    fn id_mapped_edges_and_missing_labels() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "nba.csv", "user_id,SALARY,country,AGE\n10,1,0,25\n20,-1,1,30\n30,0,1,28\n");
        write(tmp.path(), "nba_relationship.txt", "10 20\n20 30\n30 99\n");
        let ds = load_dataset(&DatasetSpec::from_dir(tmp.path(), "nba").unwrap()).unwrap();
        assert_eq!(ds.labels, vec![Some(1), None, Some(0)]);
        assert_eq!(ds.feature_names, vec!["AGE"]);
        assert_eq!(ds.graph.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(ds.dropped_edges, 1);
        assert_eq!(ds.labeled_ids(), vec![0, 2]);
    }

    #[test]
    fn typed_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let meta = r#"{"label_col":"y","sensitive_col":"s","positive_value":1,"sensitive_positive_value":1}"#;
        write(tmp.path(), "meta.json", meta);
        write(tmp.path(), "edges.txt", "0 1\n");

        write(tmp.path(), "features.csv", "a,s\n1,0\n2,1\n");
        let spec = DatasetSpec::from_dir(tmp.path(), "x").unwrap();
        assert!(matches!(load_dataset(&spec), Err(DataError::MissingColumn(c)) if c == "y"));

        write(tmp.path(), "features.csv", "a,y,s\n1,1,0\n2,0,2\n3,1,1\n");
        assert!(matches!(load_dataset(&spec), Err(DataError::NonBinarySensitive { .. })));

        write(tmp.path(), "features.csv", "a,y,s\n1,1,0\nabc,0,1\n");
        assert!(matches!(load_dataset(&spec), Err(DataError::Parse { row: 3, .. })));

        assert!(matches!(DatasetSpec::resolve("no-such-set"), Err(DataError::UnknownDataset(_))));
    }

    #[test]
    fn write_then_load_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        german_like(tmp.path());
        let ds = load_dataset(&DatasetSpec::from_dir(tmp.path(), "german").unwrap()).unwrap();
        let out = tmp.path().join("copy");
        let spec = write_dataset(&ds, &out).unwrap();
        let back = load_dataset(&spec).unwrap();
        assert_eq!(back.features, ds.features);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.sensitive, ds.sensitive);
        assert_eq!(back.graph.edges(), ds.graph.edges());
        let labels = ds.node_labels();
        assert_eq!(
            EdgeCensus::of(&ds.graph, &labels).unwrap(),
            EdgeCensus::of(&back.graph, &back.node_labels()).unwrap()
        );
    }
}
