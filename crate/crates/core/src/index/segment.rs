//! On-disk segment: one directory, six files.
//!
//! ```text
//! meta       "FTS1" | u32 version | u64 page_count | u64 term_count
//!            | u64 article_count | u32 file_count
//!            | file_count * (name | u64 length | u32 crc32) | u32 crc32(meta so far)
//! lexicon    term_count * (term | varint doc_freq | varint coll_freq
//!            | u64 postings_offset | u64 postings_len)
//! postings   concatenated posting lists, lexicon order
//! pagetable  page_count * (page_id | article_id | journal | title | varint year
//!            | u8 month | varint page_number | u8 kind | u64 text_offset | u64 text_len)
//! text       concatenated page text, UTF-8
//! synonyms   synonym file, canonical form
//! ```
//!
//! Strings are varint length-prefixed, fixed-width integers are little endian.

use std::fs;
use std::path::Path;

use super::{InvertedIndex, LexiconEntry, PageEntry, PageMeta};
use crate::codec::{self, DecodeError, Reader};
use crate::corpus::PageKind;
use crate::error::{Error, Result};
use crate::textprep::SynonymTable;

pub const MAGIC: &[u8; 4] = b"FTS1";
pub const FORMAT_VERSION: u32 = 1;

const META: &str = "meta";
const LEXICON: &str = "lexicon";
const POSTINGS: &str = "postings";
const PAGETABLE: &str = "pagetable";
const TEXT: &str = "text";
const SYNONYMS: &str = "synonyms";
const DATA_FILES: [&str; 5] = [LEXICON, POSTINGS, PAGETABLE, TEXT, SYNONYMS];

/// Writes `index` into `dir`, creating it if needed. Data files go first and
/// `meta` last, so a crash mid-write leaves a directory that fails to open.
pub fn write_segment(index: &InvertedIndex, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let files: [(&str, Vec<u8>); 5] = [
        (LEXICON, encode_lexicon(index)),
        (POSTINGS, index.postings.clone()),
        (PAGETABLE, encode_pagetable(index)),
        (TEXT, index.text.as_bytes().to_vec()),
        (SYNONYMS, index.synonyms.to_text().into_bytes()),
    ];

    let mut meta = Vec::new();
    meta.extend_from_slice(MAGIC);
    meta.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    meta.extend_from_slice(&(index.pages.len() as u64).to_le_bytes());
    meta.extend_from_slice(&(index.lexicon.len() as u64).to_le_bytes());
    meta.extend_from_slice(&index.article_count.to_le_bytes());
    meta.extend_from_slice(&(files.len() as u32).to_le_bytes());
    for (name, bytes) in &files {
        codec::write_len_prefixed(&mut meta, name.as_bytes());
        meta.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
        meta.extend_from_slice(&crc32fast::hash(bytes).to_le_bytes());
    }
    let meta_crc = crc32fast::hash(&meta);
    meta.extend_from_slice(&meta_crc.to_le_bytes());

    for (name, bytes) in &files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))?;
    }
    let path = dir.join(META);
    fs::write(&path, &meta).map_err(|e| Error::io(path, e))
}

fn encode_lexicon(index: &InvertedIndex) -> Vec<u8> {
    let mut buf = Vec::new();
    for e in &index.lexicon {
        codec::write_len_prefixed(&mut buf, e.term.as_bytes());
        codec::write_varint(&mut buf, u64::from(e.doc_freq));
        codec::write_varint(&mut buf, e.coll_freq);
        buf.extend_from_slice(&e.postings_offset.to_le_bytes());
        buf.extend_from_slice(&e.postings_len.to_le_bytes());
    }
    buf
}

fn encode_pagetable(index: &InvertedIndex) -> Vec<u8> {
    let mut buf = Vec::new();
    for p in &index.pages {
        let m = &p.meta;
        for s in [&m.page_id, &m.article_id, &m.journal, &m.title] {
            codec::write_len_prefixed(&mut buf, s.as_bytes());
        }
        codec::write_varint(&mut buf, m.year as u64);
        buf.push(m.month);
        codec::write_varint(&mut buf, u64::from(m.page_number));
        buf.push(match m.kind {
            PageKind::ArticlePage => 0,
            PageKind::Unattached => 1,
        });
        buf.extend_from_slice(&p.text_offset.to_le_bytes());
        buf.extend_from_slice(&p.text_len.to_le_bytes());
    }
    buf
}

struct Meta {
    page_count: u64,
    term_count: u64,
    article_count: u64,
    files: Vec<(String, u64, u32)>,
}

/// Opens a segment written by [`write_segment`], verifying checksums and the
/// structure of every posting list.
pub fn open_segment(dir: &Path) -> Result<InvertedIndex> {
    let meta_path = dir.join(META);
    let meta_bytes = match fs::read(&meta_path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::UnsupportedSegment(format!(
                "no {META} file in {}",
                dir.display()
            )))
        }
        Err(e) => return Err(Error::io(meta_path, e)),
    };
    let meta = parse_meta(&meta_bytes)?;

    let mut contents = Vec::with_capacity(DATA_FILES.len());
    for name in DATA_FILES {
        let (_, len, crc) = meta
            .files
            .iter()
            .find(|(n, _, _)| n == name)
            .ok_or_else(|| Error::corrupt(META, format!("no entry for {name}")))?;
        let path = dir.join(name);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::corrupt(name, "file missing"))
            }
            Err(e) => return Err(Error::io(path, e)),
        };
        if bytes.len() as u64 != *len {
            return Err(Error::corrupt(
                name,
                format!("truncated: expected {len} bytes, found {}", bytes.len()),
            ));
        }
        if crc32fast::hash(&bytes) != *crc {
            return Err(Error::corrupt(name, "checksum mismatch"));
        }
        contents.push(bytes);
    }
    let synonyms = contents.pop().unwrap();
    let text = contents.pop().unwrap();
    let pagetable = contents.pop().unwrap();
    let postings = contents.pop().unwrap();
    let lexicon = contents.pop().unwrap();

    let text = String::from_utf8(text).map_err(|_| Error::corrupt(TEXT, "invalid UTF-8"))?;
    let synonyms = std::str::from_utf8(&synonyms)
        .map_err(|_| Error::corrupt(SYNONYMS, "invalid UTF-8"))
        .and_then(|s| {
            SynonymTable::parse(s).map_err(|e| Error::corrupt(SYNONYMS, e.to_string()))
        })?;
    let pages = decode_pagetable(&pagetable, meta.page_count, &text)?;
    let lexicon = decode_lexicon(&lexicon, meta.term_count, &postings, pages.len())?;

    let index = InvertedIndex::assemble(lexicon, postings, pages, text, synonyms);
    if index.article_count != meta.article_count {
        return Err(Error::corrupt(META, "article count disagrees with page table"));
    }
    Ok(index)
}

fn parse_meta(bytes: &[u8]) -> Result<Meta> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::UnsupportedSegment("bad magic".into()));
    }
    let truncated = |_: DecodeError| Error::corrupt(META, "truncated");
    let mut r = Reader::new(bytes);
    r.bytes(4).map_err(truncated)?;
    let version = r.u32_le().map_err(truncated)?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedSegment(format!(
            "format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let page_count = r.u64_le().map_err(truncated)?;
    let term_count = r.u64_le().map_err(truncated)?;
    let article_count = r.u64_le().map_err(truncated)?;
    let file_count = r.u32_le().map_err(truncated)?;
    let mut files = Vec::new();
    for _ in 0..file_count {
        let name = r.len_prefixed().map_err(truncated)?;
        let name = String::from_utf8(name.to_vec())
            .map_err(|_| Error::corrupt(META, "file name is not UTF-8"))?;
        let len = r.u64_le().map_err(truncated)?;
        let crc = r.u32_le().map_err(truncated)?;
        files.push((name, len, crc));
    }
    let body_end = r.position();
    let stored = r.u32_le().map_err(truncated)?;
    if !r.is_empty() {
        return Err(Error::corrupt(META, "trailing bytes"));
    }
    if crc32fast::hash(&bytes[..body_end]) != stored {
        return Err(Error::corrupt(META, "checksum mismatch"));
    }
    Ok(Meta {
        page_count,
        term_count,
        article_count,
        files,
    })
}

fn utf8(file: &str, bytes: &[u8]) -> Result<String> {
    String::from_utf8(bytes.to_vec()).map_err(|_| Error::corrupt(file, "invalid UTF-8 string"))
}

fn decode_pagetable(bytes: &[u8], page_count: u64, text: &str) -> Result<Vec<PageEntry>> {
    let bad = |_: DecodeError| Error::corrupt(PAGETABLE, "truncated or malformed record");
    let mut r = Reader::new(bytes);
    let mut pages = Vec::new();
    let mut expected_offset = 0u64;
    for _ in 0..page_count {
        let page_id = utf8(PAGETABLE, r.len_prefixed().map_err(bad)?)?;
        let article_id = utf8(PAGETABLE, r.len_prefixed().map_err(bad)?)?;
        let journal = utf8(PAGETABLE, r.len_prefixed().map_err(bad)?)?;
        let title = utf8(PAGETABLE, r.len_prefixed().map_err(bad)?)?;
        let year = i32::try_from(r.varint().map_err(bad)?)
            .map_err(|_| Error::corrupt(PAGETABLE, "year out of range"))?;
        let month = r.u8().map_err(bad)?;
        let page_number = r.varint_u32().map_err(bad)?;
        let kind = match r.u8().map_err(bad)? {
            0 => PageKind::ArticlePage,
            1 => PageKind::Unattached,
            k => return Err(Error::corrupt(PAGETABLE, format!("unknown page kind {k}"))),
        };
        let text_offset = r.u64_le().map_err(bad)?;
        let text_len = r.u64_le().map_err(bad)?;
        let end = text_offset.checked_add(text_len);
        if text_offset != expected_offset
            || end.is_none_or(|e| e > text.len() as u64)
            || !text.is_char_boundary(end.unwrap() as usize)
        {
            return Err(Error::corrupt(PAGETABLE, "text range out of bounds"));
        }
        expected_offset = end.unwrap();
        pages.push(PageEntry {
            meta: PageMeta {
                page_id,
                article_id,
                journal,
                title,
                year,
                month,
                page_number,
                kind,
            },
            text_offset,
            text_len,
        });
    }
    if !r.is_empty() || expected_offset != text.len() as u64 {
        return Err(Error::corrupt(PAGETABLE, "page count disagrees with file contents"));
    }
    Ok(pages)
}

fn decode_lexicon(
    bytes: &[u8],
    term_count: u64,
    postings: &[u8],
    page_count: usize,
) -> Result<Vec<LexiconEntry>> {
    let bad = |_: DecodeError| Error::corrupt(LEXICON, "truncated or malformed entry");
    let mut r = Reader::new(bytes);
    let mut lexicon: Vec<LexiconEntry> = Vec::new();
    let mut expected_offset = 0u64;
    for _ in 0..term_count {
        let term = utf8(LEXICON, r.len_prefixed().map_err(bad)?)?;
        let doc_freq = r.varint_u32().map_err(bad)?;
        let coll_freq = r.varint().map_err(bad)?;
        let postings_offset = r.u64_le().map_err(bad)?;
        let postings_len = r.u64_le().map_err(bad)?;
        if lexicon.last().is_some_and(|prev| prev.term >= term) {
            return Err(Error::corrupt(LEXICON, "terms not in strictly ascending order"));
        }
        if doc_freq == 0 || coll_freq < u64::from(doc_freq) {
            return Err(Error::corrupt(LEXICON, format!("bad frequencies for '{term}'")));
        }
        let end = postings_offset.checked_add(postings_len);
        if postings_offset != expected_offset || end.is_none_or(|e| e > postings.len() as u64) {
            return Err(Error::corrupt(POSTINGS, format!("range out of bounds for '{term}'")));
        }
        expected_offset = end.unwrap();
        let slice = &postings[postings_offset as usize..expected_offset as usize];
        check_posting_list(slice, doc_freq, coll_freq, page_count)
            .map_err(|m| Error::corrupt(POSTINGS, format!("{m} for '{term}'")))?;
        lexicon.push(LexiconEntry {
            term,
            doc_freq,
            coll_freq,
            postings_offset,
            postings_len,
        });
    }
    if !r.is_empty() || expected_offset != postings.len() as u64 {
        return Err(Error::corrupt(LEXICON, "term count disagrees with file contents"));
    }
    Ok(lexicon)
}

// Walks one posting list end to end so later on-demand decoding cannot fail.
fn check_posting_list(
    bytes: &[u8],
    doc_freq: u32,
    coll_freq: u64,
    page_count: usize,
) -> Result<(), String> {
    let malformed = |e: DecodeError| format!("malformed varint ({e:?})");
    let mut r = Reader::new(bytes);
    let mut page = 0u32;
    let mut total = 0u64;
    for i in 0..doc_freq {
        let gap = r.varint_u32().map_err(malformed)?;
        if i > 0 && gap == 0 {
            return Err("page ordinals not strictly increasing".into());
        }
        page = page.checked_add(gap).ok_or("page ordinal overflow")?;
        if page as usize >= page_count {
            return Err("page ordinal out of range".into());
        }
        let n = r.varint_u32().map_err(malformed)?;
        if n == 0 {
            return Err("entry without positions".into());
        }
        let positions = codec::decode_deltas(&mut r, n as usize).map_err(malformed)?;
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err("positions not strictly increasing".into());
        }
        total += u64::from(n);
    }
    if !r.is_empty() {
        return Err("trailing bytes".into());
    }
    if total != coll_freq {
        return Err("position total disagrees with coll_freq".into());
    }
    Ok(())
}
