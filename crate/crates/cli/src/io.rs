//! CSV dataset format shared by every subcommand: header
//! `x,y,value[,cov1,...]`, one site per row. Values print through the
//! shortest-round-trip float formatter, so a simulate → fit cycle is
//! lossless.

use copulafield::correlation::SpatialConfig;
use ndarray::Array2;
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum IoError {
    Csv(String),
    Parse(String),
    Shape(String),
}

impl fmt::Display for IoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoError::Csv(m) => write!(f, "csv: {m}"),
            IoError::Parse(m) => write!(f, "parse: {m}"),
            IoError::Shape(m) => write!(f, "shape: {m}"),
        }
    }
}

impl std::error::Error for IoError {}

/// Point-referenced records plus optional covariate columns.
pub struct Dataset {
    pub coords: Array2<f64>,
    pub values: Vec<f64>,
    pub covariates: Option<Array2<f64>>,
    pub covariate_names: Vec<String>,
}

impl Dataset {
    pub fn read(path: &Path) -> Result<Dataset, IoError> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| IoError::Csv(e.to_string()))?;
        let headers = reader
            .headers()
            .map_err(|e| IoError::Csv(e.to_string()))?
            .clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols.len() < 3 || cols[0] != "x" || cols[1] != "y" || cols[2] != "value" {
            return Err(IoError::Shape(format!(
                "expected header starting with x,y,value; got {cols:?}"
            )));
        }
        let covariate_names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| IoError::Csv(e.to_string()))?;
            let parsed: Result<Vec<f64>, _> = record
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| IoError::Parse(format!("row {}: bad number {s:?}", line + 2)))
                })
                .collect();
            let parsed = parsed?;
            if parsed.len() != cols.len() {
                return Err(IoError::Shape(format!(
                    "row {} has {} fields, header has {}",
                    line + 2,
                    parsed.len(),
                    cols.len()
                )));
            }
            rows.push(parsed);
        }
        if rows.is_empty() {
            return Err(IoError::Shape("no data rows".into()));
        }
        let n = rows.len();
        let k = covariate_names.len();
        let mut coords = Array2::<f64>::zeros((n, 2));
        let mut values = Vec::with_capacity(n);
        let mut covs = Array2::<f64>::zeros((n, k));
        for (i, row) in rows.iter().enumerate() {
            coords[[i, 0]] = row[0];
            coords[[i, 1]] = row[1];
            values.push(row[2]);
            for j in 0..k {
                covs[[i, j]] = row[3 + j];
            }
        }
        Ok(Dataset {
            coords,
            values,
            covariates: if k > 0 { Some(covs) } else { None },
            covariate_names,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| IoError::Csv(e.to_string()))?;
        let mut header = vec!["x".to_string(), "y".to_string(), "value".to_string()];
        header.extend(self.covariate_names.iter().cloned());
        writer
            .write_record(&header)
            .map_err(|e| IoError::Csv(e.to_string()))?;
        for i in 0..self.values.len() {
            let mut row = vec![
                format!("{}", self.coords[[i, 0]]),
                format!("{}", self.coords[[i, 1]]),
                format!("{}", self.values[i]),
            ];
            if let Some(c) = &self.covariates {
                for j in 0..c.ncols() {
                    row.push(format!("{}", c[[i, j]]));
                }
            }
            writer.write_record(&row).map_err(|e| IoError::Csv(e.to_string()))?;
        }
        writer.flush().map_err(|e| IoError::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn spatial_config(&self) -> Result<SpatialConfig, IoError> {
        let cfg = match &self.covariates {
            Some(c) => SpatialConfig::with_covariates(self.coords.clone(), c.clone()),
            None => SpatialConfig::new(self.coords.clone()),
        };
        cfg.map_err(|e| IoError::Shape(e.to_string()))
    }
}
