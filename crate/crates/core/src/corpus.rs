//! Page-level document model and the line-delimited JSON manifest.
//!
//! Every manifest line is one object with the fields `page_id`, `article_id`,
//! `journal`, `year`, `month`, `page_number`, `kind`, `text` and an optional
//! `title`. Unknown fields are ignored, which lets mock connector fixtures
//! reuse the format.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const MAX_PAGE_ID_LEN: usize = 64;
pub const MAX_ARTICLE_ID_LEN: usize = 32;
pub const MAX_JOURNAL_LEN: usize = 16;
pub const MIN_YEAR: i32 = 1600;
pub const MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageKind {
    ArticlePage,
    Unattached,
}

impl PageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PageKind::ArticlePage => "article_page",
            PageKind::Unattached => "unattached",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "article_page" => Some(PageKind::ArticlePage),
            "unattached" => Some(PageKind::Unattached),
            _ => None,
        }
    }
}

/// One OCR'd scanned page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageRecord {
    pub page_id: String,
    /// Empty for pages without pagination information.
    pub article_id: String,
    pub journal: String,
    pub year: i32,
    /// 0 means unknown.
    pub month: u8,
    pub page_number: u32,
    pub kind: PageKind,
    pub text: String,
    /// Article title, when the bibliographic record carries one.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub title: String,
}

/// A single failed invariant reported by [`validate_record`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Returns every violated record invariant; an empty list means the record is valid.
pub fn validate_record(r: &PageRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field: &'static str, message: String| out.push(Violation { field, message });

    if r.page_id.is_empty() {
        push("page_id", "page_id must be nonempty".into());
    } else if r.page_id.chars().count() > MAX_PAGE_ID_LEN {
        push("page_id", format!("page_id longer than {MAX_PAGE_ID_LEN} characters"));
    }
    if r.article_id.chars().count() > MAX_ARTICLE_ID_LEN {
        push(
            "article_id",
            format!("article_id longer than {MAX_ARTICLE_ID_LEN} characters"),
        );
    }
    if r.journal.is_empty() {
        push("journal", "journal must be nonempty".into());
    } else if r.journal.chars().count() > MAX_JOURNAL_LEN {
        push("journal", format!("journal longer than {MAX_JOURNAL_LEN} characters"));
    }
    if !(MIN_YEAR..=MAX_YEAR).contains(&r.year) {
        push("year", "year out of range".into());
    }
    if r.month > 12 {
        push("month", "month out of range".into());
    }
    match r.kind {
        PageKind::Unattached if !r.article_id.is_empty() => {
            push("kind", "unattached requires empty article_id".into())
        }
        PageKind::ArticlePage if r.article_id.is_empty() => {
            push("kind", "article_page requires nonempty article_id".into())
        }
        _ => {}
    }
    out
}

/// Immutable, manifest-ordered collection of pages.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStore {
    records: Vec<PageRecord>,
    journals: BTreeSet<String>,
}

impl CorpusStore {
    /// Builds a store from already-validated records, checking page_id uniqueness.
    pub fn from_records(records: Vec<PageRecord>) -> Result<Self> {
        let mut seen: HashMap<&str, usize> = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if let Some(v) = validate_record(r).into_iter().next() {
                return Err(Error::Manifest {
                    line: i + 1,
                    field: v.field.to_string(),
                    message: v.message,
                });
            }
            if let Some(first) = seen.insert(&r.page_id, i + 1) {
                return Err(Error::DuplicatePage {
                    page_id: r.page_id.clone(),
                    first_line: first,
                    second_line: i + 1,
                });
            }
        }
        let journals = records.iter().map(|r| r.journal.clone()).collect();
        Ok(CorpusStore { records, journals })
    }

    pub fn records(&self) -> &[PageRecord] {
        &self.records
    }

    pub fn journals(&self) -> &BTreeSet<String> {
        &self.journals
    }

    pub fn record_count(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes the store back out in manifest format.
    pub fn write_manifest<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn write_manifest_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_manifest(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Reads a manifest file into a [`CorpusStore`].
pub fn ingest_corpus(manifest_path: &Path) -> Result<CorpusStore> {
    let file = std::fs::File::open(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    ingest_reader(BufReader::new(file), manifest_path)
}

/// Same as [`ingest_corpus`] but over any buffered reader; `origin` is used in I/O errors.
pub fn ingest_reader<R: BufRead>(reader: R, origin: &Path) -> Result<CorpusStore> {
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut journals = BTreeSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_line(&line, lineno)?;
        if let Some(v) = validate_record(&record).into_iter().next() {
            return Err(Error::Manifest {
                line: lineno,
                field: v.field.to_string(),
                message: v.message,
            });
        }
        if let Some(&first) = seen.get(&record.page_id) {
            return Err(Error::DuplicatePage {
                page_id: record.page_id,
                first_line: first,
                second_line: lineno,
            });
        }
        seen.insert(record.page_id.clone(), lineno);
        journals.insert(record.journal.clone());
        records.push(record);
    }
    Ok(CorpusStore { records, journals })
}

fn parse_line(line: &str, lineno: usize) -> Result<PageRecord> {
    let bad = |field: &str, message: String| Error::Manifest {
        line: lineno,
        field: field.to_string(),
        message,
    };
    let value: Value =
        serde_json::from_str(line).map_err(|e| bad("<line>", format!("invalid JSON: {e}")))?;
    let Value::Object(obj) = value else {
        return Err(bad("<line>", "expected a JSON object".into()));
    };

    let string = |obj: &Map<String, Value>, field: &str, required: bool| -> Result<String> {
        match obj.get(field) {
            Some(Value::String(s)) => Ok(s.clone()),
            None if !required => Ok(String::new()),
            None => Err(bad(field, "missing field".into())),
            Some(_) => Err(bad(field, "expected a string".into())),
        }
    };
    let integer = |obj: &Map<String, Value>, field: &str| -> Result<Option<i64>> {
        match obj.get(field) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_i64()
                .map(Some)
                .ok_or_else(|| bad(field, "expected an integer".into())),
        }
    };

    let page_id = string(&obj, "page_id", true)?;
    let article_id = string(&obj, "article_id", true)?;
    let journal = string(&obj, "journal", true)?;
    let year = integer(&obj, "year")?.ok_or_else(|| bad("year", "missing field".into()))?;
    let year = i32::try_from(year)
        .ok()
        .filter(|y| (MIN_YEAR..=MAX_YEAR).contains(y))
        .ok_or_else(|| bad("year", "year out of range".into()))?;
    let month = integer(&obj, "month")?.unwrap_or(0);
    let month = u8::try_from(month)
        .ok()
        .filter(|m| *m <= 12)
        .ok_or_else(|| bad("month", "month out of range".into()))?;
    let page_number = integer(&obj, "page_number")?
        .ok_or_else(|| bad("page_number", "missing field".into()))?;
    let page_number =
        u32::try_from(page_number).map_err(|_| bad("page_number", "out of range".into()))?;
    let kind_str = string(&obj, "kind", true)?;
    let kind = PageKind::parse(&kind_str)
        .ok_or_else(|| bad("kind", format!("unknown kind '{kind_str}'")))?;
    let text = string(&obj, "text", true)?;
    let title = string(&obj, "title", false)?;

    Ok(PageRecord {
        page_id,
        article_id,
        journal,
        year,
        month,
        page_number,
        kind,
        text,
        title,
    })
}
