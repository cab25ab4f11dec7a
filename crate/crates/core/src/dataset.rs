//! Dataset manifests, pixel and mask decoding, feature and score tables.
//!
//! File formats:
//!
//! * manifest: JSON-Lines, one `{"id", "image", "mask"?, "feature_row"?}` object per line
//! * features: CSV with header `id,f0,f1,...`, rows in manifest order
//! * scores: CSV with header `id,<name>[,<name>...]`
//! * selection: CSV with header `rank,id,original_score,final_score`
//!
//! Every CSV this crate writes starts with `# ` comment lines that echo the
//! parameters that produced it. Readers skip them.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use image::{ColorType, DynamicImage, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::Selection;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: String,
    #[serde(rename = "image")]
    pub image_path: PathBuf,
    #[serde(rename = "mask", default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_row: Option<usize>,
}

/// Ordered sample records. Record order defines the canonical sample index
/// used by every other stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    pub records: Vec<SampleRecord>,
    pub feature_file: Option<PathBuf>,
    pub score_file: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.id.clone()).collect()
    }

    /// Checks that every `feature_row` indexes into a matrix with `rows` rows.
    pub fn check_feature_rows(&self, rows: usize) -> Result<()> {
        for r in &self.records {
            if let Some(row) = r.feature_row {
                if row >= rows {
                    return Err(Error::InvalidArgument(format!(
                        "sample \"{}\" has feature_row {row} but the feature matrix has {rows} rows",
                        r.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reads a JSON-Lines manifest. Relative image and mask paths are resolved
/// against the manifest's directory, so the returned records hold absolute
/// paths.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = std::path::absolute(path)
        .map_err(|e| Error::io(path, e))?
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();

    let mut records: Vec<SampleRecord> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: SampleRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        if let Some(&first_line) = seen.get(&rec.id) {
            return Err(Error::DuplicateId {
                id: rec.id,
                first_line,
                line: lineno,
            });
        }
        seen.insert(rec.id.clone(), lineno);
        rec.image_path = base.join(&rec.image_path);
        rec.mask_path = rec.mask_path.map(|m| base.join(m));
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::EmptyManifest(path.to_path_buf()));
    }
    Ok(DatasetManifest {
        records,
        feature_file: None,
        score_file: None,
    })
}

/// Writes records as JSON-Lines, paths verbatim.
pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for r in &manifest.records {
        // SampleRecord only holds strings, paths and integers.
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Row-major 8-bit image with one (gray) or three (RGB) channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelBuffer {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl PixelBuffer {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "pixel buffers have 1 or 3 channels, got {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height}x{channels} buffer needs {expected} bytes, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel_count(&self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

/// Row-major class-id mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskBuffer {
    width: u32,
    height: u32,
    labels: Vec<u32>,
}

impl MaskBuffer {
    pub fn new(width: u32, height: u32, labels: Vec<u32>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if labels.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} mask needs {expected} labels, got {}",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }
}

/// Decodes a PNG or JPEG into an 8-bit gray or RGB buffer. Deeper bit
/// depths and alpha channels are rejected instead of converted.
pub fn load_image(record: &SampleRecord) -> Result<PixelBuffer> {
    let path = &record.image_path;
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::Decode {
            path: path.clone(),
            message: e.to_string(),
        })?;
    let (width, height) = (img.width(), img.height());
    match img {
        DynamicImage::ImageLuma8(buf) => PixelBuffer::new(width, height, 1, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => PixelBuffer::new(width, height, 3, buf.into_raw()),
        other => Err(Error::UnsupportedFormat {
            path: path.clone(),
            message: describe_color(other.color()),
        }),
    }
}

fn describe_color(color: ColorType) -> String {
    let bits = color.bits_per_pixel() / color.channel_count() as u16;
    if bits != 8 {
        format!("{bits}-bit samples ({color:?}); only 8-bit images are accepted")
    } else {
        format!(
            "{} channels ({color:?}); only gray or RGB without alpha is accepted",
            color.channel_count()
        )
    }
}

/// Decodes a single-channel or paletted PNG mask. Palette indices are passed
/// through as class ids, never mapped to colours.
pub fn load_mask(record: &SampleRecord) -> Result<MaskBuffer> {
    let path = record
        .mask_path
        .as_ref()
        .ok_or_else(|| Error::MissingMask(record.id.clone()))?;
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let decode_err = |e: png::DecodingError| Error::Decode {
        path: path.clone(),
        message: e.to_string(),
    };
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let (color, depth) = reader.output_color_type();
    match color {
        png::ColorType::Grayscale | png::ColorType::Indexed => {}
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.clone(),
                message: format!("{other:?} mask; masks must be single-channel or paletted"),
            })
        }
    }
    let bits = match depth {
        png::BitDepth::One => 1,
        png::BitDepth::Two => 2,
        png::BitDepth::Four => 4,
        png::BitDepth::Eight => 8,
        png::BitDepth::Sixteen => {
            return Err(Error::UnsupportedFormat {
                path: path.clone(),
                message: "16-bit mask; class ids must be 8-bit".into(),
            })
        }
    };
    let size = reader.output_buffer_size().ok_or_else(|| Error::Decode {
        path: path.clone(),
        message: "image too large".into(),
    })?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(decode_err)?;
    let (width, height) = (info.width, info.height);

    let mut labels = Vec::with_capacity(width as usize * height as usize);
    let per_byte = 8 / bits;
    let mask = ((1u16 << bits) - 1) as u8;
    for row in buf.chunks(info.line_size).take(height as usize) {
        for x in 0..width as usize {
            let byte = row[x / per_byte];
            let shift = 8 - bits * (x % per_byte + 1);
            labels.push(((byte >> shift) & mask) as u32);
        }
    }
    MaskBuffer::new(width, height, labels)
}

/// Dense row-major `n x d` matrix of finite reals.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n * d != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{n}x{d} matrix needs {} values, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature value at row {}, column {}",
                i / d.max(1),
                i % d.max(1)
            )));
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} columns, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n).map(move |i| self.row(i))
    }
}

/// Splits leading `#` comment lines off a text file.
fn split_comments(text: &str) -> (Vec<String>, &str, usize) {
    let mut comments = Vec::new();
    let mut rest = text;
    let mut skipped = 0;
    while rest.starts_with('#') {
        let end = rest.find('\n').map_or(rest.len(), |i| i + 1);
        comments.push(rest[1..end].trim().to_string());
        rest = &rest[end..];
        skipped += 1;
    }
    (comments, rest, skipped)
}

/// Comment lines, header fields, and data records with their 1-based line numbers.
type ParsedCsv = (Vec<String>, Vec<String>, Vec<(usize, csv::StringRecord)>);

fn read_csv(path: &Path) -> Result<ParsedCsv> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (comments, body, skipped) = split_comments(&text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    let parse_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize) + skipped;
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        }
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(parse_err)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some("id") {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: skipped + 1,
            message: "first header column must be \"id\"".into(),
        });
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(parse_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize) + skipped;
        rows.push((line, rec));
    }
    Ok((comments, header, rows))
}

fn parse_cell(path: &Path, line: usize, column: &str, cell: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("column \"{column}\": \"{cell}\" is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!(
            "{}:{line}: column \"{column}\"",
            path.display()
        )));
    }
    Ok(v)
}

/// Reads a feature CSV whose rows must follow `ids` exactly. Values are kept
/// as parsed.
pub fn load_features(path: impl AsRef<Path>, ids: &[String]) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let (_, header, rows) = read_csv(path)?;
    if rows.len() != ids.len() {
        return Err(Error::RowCount {
            path: path.to_path_buf(),
            expected: ids.len(),
            found: rows.len(),
        });
    }
    let d = header.len() - 1;
    let mut values = Vec::with_capacity(rows.len() * d);
    for (k, ((line, rec), expected)) in rows.iter().zip(ids).enumerate() {
        let found = &rec[0];
        if found != expected {
            return Err(Error::IdMismatch {
                path: path.to_path_buf(),
                row: k + 1,
                expected: expected.clone(),
                found: found.to_string(),
            });
        }
        for (col, cell) in header[1..].iter().zip(rec.iter().skip(1)) {
            values.push(parse_cell(path, *line, col, cell)?);
        }
    }
    FeatureMatrix::new(ids.len(), d, values)
}

/// Writes a feature CSV (`id,f0,f1,...`) preceded by `comments`.
pub fn write_features(
    path: impl AsRef<Path>,
    ids: &[String],
    features: &FeatureMatrix,
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    if ids.len() != features.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} ids for {} feature rows",
            ids.len(),
            features.n()
        )));
    }
    let mut header = vec!["id".to_string()];
    header.extend((0..features.d()).map(|j| format!("f{j}")));
    let rows = ids.iter().zip(features.rows()).map(|(id, row)| {
        std::iter::once(id.clone())
            .chain(row.iter().map(|v| v.to_string()))
            .collect::<Vec<_>>()
    });
    write_csv(path, comments, &header, rows)
}

pub(crate) fn write_csv<I>(path: &Path, comments: &[String], header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out: Vec<u8> = Vec::new();
    for c in comments {
        writeln!(out, "# {c}").expect("write to Vec");
    }
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Named per-sample score columns aligned with an id list.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    ids: Vec<String>,
    columns: Vec<(String, Vec<f64>)>,
    provenance: BTreeMap<String, String>,
}

impl ScoreTable {
    pub fn new(ids: Vec<String>) -> Self {
        Self {
            ids,
            columns: Vec::new(),
            provenance: BTreeMap::new(),
        }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Parameter echo recorded for a column, if any.
    pub fn provenance(&self, name: &str) -> Option<&str> {
        self.provenance.get(name).map(String::as_str)
    }

    /// Inserts or replaces a column. Replacement keeps the column's position.
    pub fn set_column(
        &mut self,
        name: &str,
        values: Vec<f64>,
        provenance: Option<String>,
    ) -> Result<()> {
        if values.len() != self.ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "column \"{name}\" has {} values for {} ids",
                values.len(),
                self.ids.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "column \"{name}\", sample \"{}\"",
                self.ids[i]
            )));
        }
        if name.is_empty() || name == "id" || name.contains([',', '\n', '"']) {
            return Err(Error::InvalidArgument(format!("bad column name {name:?}")));
        }
        match self.columns.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => *v = values,
            None => self.columns.push((name.to_string(), values)),
        }
        match provenance {
            Some(p) => {
                self.provenance.insert(name.to_string(), p);
            }
            None => {
                self.provenance.remove(name);
            }
        }
        Ok(())
    }

    /// Copies every column of `other` into `self`. Both tables must hold the
    /// same ids, in any order.
    pub fn merge(&mut self, other: &ScoreTable) -> Result<()> {
        let other = other.aligned_to(&self.ids)?;
        for (name, values) in other.columns {
            let prov = other.provenance.get(&name).cloned();
            self.set_column(&name, values, prov)?;
        }
        Ok(())
    }

    /// Reorders rows to follow `ids`. Every id must be present exactly once.
    pub fn aligned_to(&self, ids: &[String]) -> Result<ScoreTable> {
        if ids.len() != self.ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "score table has {} samples, manifest has {}",
                self.ids.len(),
                ids.len()
            )));
        }
        let index: HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let order = ids
            .iter()
            .map(|id| {
                index.get(id.as_str()).copied().ok_or_else(|| {
                    Error::MissingInput(format!("score table has no row for sample \"{id}\""))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScoreTable {
            ids: ids.to_vec(),
            columns: self
                .columns
                .iter()
                .map(|(n, v)| (n.clone(), order.iter().map(|&i| v[i]).collect()))
                .collect(),
            provenance: self.provenance.clone(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let comments: Vec<String> = self
            .columns
            .iter()
            .filter_map(|(n, _)| self.provenance.get(n).map(|p| format!("{n}: {p}")))
            .collect();
        let mut header = vec!["id".to_string()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        let rows = self.ids.iter().enumerate().map(|(i, id)| {
            std::iter::once(id.clone())
                .chain(self.columns.iter().map(|(_, v)| v[i].to_string()))
                .collect()
        });
        write_csv(path, &comments, &header, rows)
    }
}

/// Reads a score CSV (`id,<name>...`). Comment lines of the form
/// `# <name>: <echo>` are kept as column provenance.
pub fn load_score_table(path: impl AsRef<Path>) -> Result<ScoreTable> {
    let path = path.as_ref();
    let (comments, header, rows) = read_csv(path)?;
    let mut seen = HashMap::new();
    let mut ids = Vec::with_capacity(rows.len());
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(rows.len()); header.len() - 1];
    for (line, rec) in &rows {
        let id = rec[0].to_string();
        if let Some(first_line) = seen.insert(id.clone(), *line) {
            return Err(Error::DuplicateId {
                id,
                first_line,
                line: *line,
            });
        }
        for (j, name) in header[1..].iter().enumerate() {
            cols[j].push(parse_cell(path, *line, name, &rec[j + 1])?);
        }
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(Error::MissingInput(format!(
            "{}: score table has no rows",
            path.display()
        )));
    }
    let mut table = ScoreTable::new(ids);
    let provenance: HashMap<&str, &str> = comments
        .iter()
        .filter_map(|c| c.split_once(": "))
        .collect();
    for (name, values) in header[1..].iter().zip(cols) {
        let prov = provenance.get(name.as_str()).map(|p| p.to_string());
        table.set_column(name, values, prov)?;
    }
    Ok(table)
}

/// Writes a selection as `rank,id,original_score,final_score`, preceded by a
/// comment line echoing the selection parameters.
pub fn write_selection(selection: &Selection, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if selection.entries.is_empty() {
        return Err(Error::InvalidArgument("selection is empty".into()));
    }
    let header: Vec<String> = ["rank", "id", "original_score", "final_score"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = selection.entries.iter().enumerate().map(|(i, e)| {
        vec![
            (i + 1).to_string(),
            e.id.clone(),
            e.original_score.to_string(),
            e.final_score.to_string(),
        ]
    });
    write_csv(path, &[selection.params.echo()], &header, rows)
}

/// Reads back the ids of a selection CSV in rank order.
pub fn load_selection_ids(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (_, body, skipped) = split_comments(&text);
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: skipped + 1,
        message: e.to_string(),
    })?;
    let id_col = header.iter().position(|h| h == "id").ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: skipped + 1,
        message: "selection file has no \"id\" column".into(),
    })?;
    reader
        .records()
        .map(|r| {
            r.map(|r| r[id_col].to_string()).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.position().map_or(0, |p| p.line() as usize) + skipped,
                message: e.to_string(),
            })
        })
        .collect()
}

pub(crate) fn read_commented(path: &Path) -> Result<(Vec<String>, String)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (comments, body, _) = split_comments(&text);
    Ok((comments, body.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn manifest_keeps_file_order() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "m.jsonl",
            "{\"id\":\"c\",\"image\":\"c.png\"}\n{\"id\":\"a\",\"image\":\"a.png\",\"mask\":\"a_m.png\"}\n{\"id\":\"b\",\"image\":\"/abs/b.jpg\",\"feature_row\":2}\n",
        );
        let m = load_manifest(&p).unwrap();
        assert_eq!(m.ids(), ["c", "a", "b"]);
        assert!(m.records[0].image_path.is_absolute());
        assert_eq!(m.records[0].image_path, dir.path().join("c.png"));
        assert_eq!(m.records[1].mask_path, Some(dir.path().join("a_m.png")));
        assert_eq!(m.records[2].image_path, PathBuf::from("/abs/b.jpg"));
        assert_eq!(m.records[2].feature_row, Some(2));
        assert!(m.check_feature_rows(3).is_ok());
        assert!(m.check_feature_rows(2).is_err());
    }

    #[test]
    fn manifest_duplicate_id_names_the_id() {
        let dir = TempDir::new().unwrap();
        let lines: Vec<String> = ["img1", "img7", "img3", "img4", "img7"]
            .iter()
            .map(|id| format!("{{\"id\":\"{id}\",\"image\":\"{id}.png\"}}"))
            .collect();
        let p = write(&dir, "m.jsonl", &lines.join("\n"));
        match load_manifest(&p).unwrap_err() {
            Error::DuplicateId {
                id,
                first_line,
                line,
            } => {
                assert_eq!(id, "img7");
                assert_eq!((first_line, line), (2, 5));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn manifest_errors() {
        let dir = TempDir::new().unwrap();
        let empty = write(&dir, "empty.jsonl", "");
        assert!(matches!(
            load_manifest(&empty),
            Err(Error::EmptyManifest(_))
        ));
        assert!(matches!(
            load_manifest(dir.path().join("nope.jsonl")),
            Err(Error::Io { .. })
        ));
        let bad = write(&dir, "bad.jsonl", "{\"id\":\"a\",\"image\":\"a\"}\n{\"id\":3}\n");
        match load_manifest(&bad).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "m.jsonl",
            "{\"id\":\"x\",\"image\":\"x.png\",\"mask\":\"m/x.png\",\"feature_row\":0}\n{\"id\":\"y\",\"image\":\"y.jpg\"}\n",
        );
        let m1 = load_manifest(&p).unwrap();
        let sub = dir.path().join("sub");
        fs::create_dir(&sub).unwrap();
        let p2 = sub.join("copy.jsonl");
        write_manifest(&m1, &p2).unwrap();
        assert_eq!(load_manifest(&p2).unwrap(), m1);
    }

    #[test]
    fn features_load_and_validate() {
        let dir = TempDir::new().unwrap();
        let ids: Vec<String> = ["img1", "img2", "img3"].map(String::from).to_vec();
        let p = write(
            &dir,
            "f.csv",
            "# produced elsewhere\nid,f0,f1,f2,f3\nimg1,1,2,3,4\nimg2,0.1,-0.2,1e-3,5\nimg3,0,0,0,0.30000000000000004\n",
        );
        let f = load_features(&p, &ids).unwrap();
        assert_eq!((f.n(), f.d()), (3, 4));
        assert_eq!(f.row(1), &[0.1, -0.2, 1e-3, 5.0]);
        assert_eq!(f.row(2)[3], 0.30000000000000004);

        let four: Vec<String> = ["img1", "img2", "img3", "img4"].map(String::from).to_vec();
        assert!(matches!(
            load_features(&p, &four),
            Err(Error::RowCount {
                expected: 4,
                found: 3,
                ..
            })
        ));

        let p = write(&dir, "g.csv", "id,f0\nimg1,1\nimgB,2\nimg3,3\n");
        match load_features(&p, &ids).unwrap_err() {
            Error::IdMismatch {
                row,
                found,
                expected,
                ..
            } => {
                assert_eq!(row, 2);
                assert_eq!(found, "imgB");
                assert_eq!(expected, "img2");
            }
            e => panic!("unexpected {e}"),
        }

        let p = write(&dir, "h.csv", "id,f0\nimg1,1\nimg2,abc\nimg3,3\n");
        assert!(matches!(load_features(&p, &ids), Err(Error::Parse { line: 3, .. })));

        let p = write(&dir, "r.csv", "id,f0,f1\nimg1,1,2\nimg2,3\nimg3,3,4\n");
        assert!(matches!(load_features(&p, &ids), Err(Error::Parse { .. })));

        let p = write(&dir, "n.csv", "id,f0\nimg1,1\nimg2,NaN\nimg3,3\n");
        assert!(matches!(load_features(&p, &ids), Err(Error::NonFinite(_))));
    }

    #[test]
    fn score_table_merge_and_align() {
        let ids: Vec<String> = ["a", "b"].map(String::from).to_vec();
        let mut t = ScoreTable::new(ids.clone());
        t.set_column("bpp", vec![1.0, 2.0], Some("q=100".into()))
            .unwrap();
        let mut other = ScoreTable::new(vec!["b".into(), "a".into()]);
        other.set_column("nll", vec![5.0, 4.0], None).unwrap();
        t.merge(&other).unwrap();
        assert_eq!(t.column("nll").unwrap(), &[4.0, 5.0]);
        assert!(t.set_column("x", vec![f64::NAN, 1.0], None).is_err());
        assert!(t.set_column("x", vec![1.0], None).is_err());

        let dir = TempDir::new().unwrap();
        let p = dir.path().join("s.csv");
        t.write(&p).unwrap();
        let back = load_score_table(&p).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.provenance("bpp"), Some("q=100"));
    }

    #[test]
    fn pixel_and_mask_buffers_check_lengths() {
        assert!(PixelBuffer::new(2, 2, 3, vec![0; 12]).is_ok());
        assert!(PixelBuffer::new(2, 2, 3, vec![0; 11]).is_err());
        assert!(PixelBuffer::new(2, 2, 4, vec![0; 16]).is_err());
        assert!(MaskBuffer::new(3, 1, vec![0, 1, 2]).is_ok());
        assert!(MaskBuffer::new(3, 1, vec![0, 1]).is_err());
    }
}
