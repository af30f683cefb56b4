//! On-disk persistence for enumerated program tables.
//!
//! A cache file carries a fixed header (magic, instruction set version,
//! the three budget components, record count, SHA-256 of the record
//! segment) followed by length-prefixed records. Files are written to a
//! temporary sibling and renamed into place, so readers never observe a
//! half-written table. Any structural damage surfaces as `CacheCorrupt`;
//! `load_or_build` treats that as a miss and rebuilds.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::bits::Bits;
use super::enumerate::{enumerate, Enumeration};
use super::vm::{Budget, ProgramRecord, INSTRUCTION_SET_VERSION};
use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"MVM1";

/// Everything the fixed-size portion of a cache file says about it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheHeader {
    pub version: u32,
    pub budget: Budget,
    pub count: u64,
    pub digest: [u8; 32],
}

/// File name a table for this budget lives under, unique per budget.
#[must_use]
pub fn cache_file_name(budget: &Budget) -> String {
    format!(
        "mvm{}-L{}-T{}-O{}.bin",
        INSTRUCTION_SET_VERSION, budget.max_len, budget.max_steps, budget.max_output
    )
}

#[must_use]
pub fn cache_path(dir: &Path, budget: &Budget) -> PathBuf {
    dir.join(cache_file_name(budget))
}

fn push_bits(buf: &mut Vec<u8>, bits: &Bits) {
    let len = u16::try_from(bits.len()).expect("bit length fits sixteen bits");
    buf.extend_from_slice(&len.to_le_bytes());
    buf.extend_from_slice(bits.packed());
}

fn encode_records(records: &[ProgramRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    for record in records {
        push_bits(&mut buf, &record.program);
        push_bits(&mut buf, &record.output);
        buf.push(u8::from(record.halted));
        buf.extend_from_slice(&record.steps.to_le_bytes());
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(slice)
            }
            None => Err(Error::CacheCorrupt {
                reason: format!("file truncated at byte {}", self.pos),
            }),
        }
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn bits(&mut self) -> Result<Bits> {
        let len = self.u16()? as usize;
        let bytes = self.take(len.div_ceil(8))?;
        Bits::from_packed(len, bytes.to_vec()).ok_or_else(|| Error::CacheCorrupt {
            reason: "bit string has dirty padding".into(),
        })
    }
}

fn decode_header(reader: &mut Reader) -> Result<CacheHeader> {
    let magic = reader.take(4)?;
    if magic != MAGIC {
        return Err(Error::CacheCorrupt {
            reason: format!("bad magic {magic:02x?}"),
        });
    }
    let version = reader.u32()?;
    if version != INSTRUCTION_SET_VERSION {
        return Err(Error::CacheCorrupt {
            reason: format!(
                "instruction set version {version} does not match this binary ({INSTRUCTION_SET_VERSION})"
            ),
        });
    }
    let max_len = reader.u32()? as usize;
    let max_steps = reader.u64()?;
    let max_output = reader.u32()? as usize;
    let count = reader.u64()?;
    let digest: [u8; 32] = reader.take(32)?.try_into().unwrap();
    Ok(CacheHeader {
        version,
        budget: Budget {
            max_len,
            max_steps,
            max_output,
        },
        count,
        digest,
    })
}

/// Writes the table into `dir`, creating it if needed, and returns the
/// final path. The write is atomic with respect to concurrent readers.
pub fn save(dir: &Path, table: &Enumeration) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let records = encode_records(table.records());
    let digest: [u8; 32] = Sha256::digest(&records).into();
    let budget = table.budget();

    let mut buf = Vec::with_capacity(56 + records.len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&INSTRUCTION_SET_VERSION.to_le_bytes());
    buf.extend_from_slice(&(budget.max_len as u32).to_le_bytes());
    buf.extend_from_slice(&budget.max_steps.to_le_bytes());
    buf.extend_from_slice(&(budget.max_output as u32).to_le_bytes());
    buf.extend_from_slice(&(table.len() as u64).to_le_bytes());
    buf.extend_from_slice(&digest);
    buf.extend_from_slice(&records);

    let path = cache_path(dir, budget);
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    let mut file = fs::File::create(&tmp)?;
    file.write_all(&buf)?;
    file.sync_all()?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Reads the header alone; record bytes are neither hashed nor parsed.
pub fn inspect(path: &Path) -> Result<CacheHeader> {
    let bytes = fs::read(path)?;
    let mut reader = Reader {
        bytes: &bytes,
        pos: 0,
    };
    decode_header(&mut reader)
}

fn decode_table(bytes: &[u8]) -> Result<(CacheHeader, Vec<ProgramRecord>)> {
    let mut reader = Reader { bytes, pos: 0 };
    let header = decode_header(&mut reader)?;
    let actual: [u8; 32] = Sha256::digest(&bytes[reader.pos..]).into();
    if actual != header.digest {
        return Err(Error::CacheCorrupt {
            reason: "record checksum mismatch".into(),
        });
    }
    let mut records = Vec::with_capacity(header.count.min(1 << 24) as usize);
    for _ in 0..header.count {
        let program = reader.bits()?;
        let output = reader.bits()?;
        let halted = match reader.take(1)?[0] {
            0 => false,
            1 => true,
            other => {
                return Err(Error::CacheCorrupt {
                    reason: format!("halted flag has value {other}"),
                })
            }
        };
        let steps = reader.u64()?;
        records.push(ProgramRecord {
            program,
            output,
            halted,
            steps,
        });
    }
    if reader.pos != bytes.len() {
        return Err(Error::CacheCorrupt {
            reason: format!("{} trailing bytes after last record", bytes.len() - reader.pos),
        });
    }
    Ok((header, records))
}

/// Loads a table, checking magic, version, checksum, and exact framing.
pub fn load(path: &Path) -> Result<Enumeration> {
    let bytes = fs::read(path)?;
    let (header, records) = decode_table(&bytes)?;
    header.budget.validate()?;
    Ok(Enumeration::from_parts(header.budget, records))
}

/// Full structural audit: everything `load` checks, plus prefix-freeness
/// and the Kraft budget over the decoded table.
pub fn verify(path: &Path) -> Result<CacheHeader> {
    let bytes = fs::read(path)?;
    let (header, records) = decode_table(&bytes)?;
    let table = Enumeration::from_parts(header.budget, records);
    if !table.is_prefix_free() {
        return Err(Error::CacheCorrupt {
            reason: "program table is not prefix-free".into(),
        });
    }
    if !table.kraft_sum().holds() {
        return Err(Error::CacheCorrupt {
            reason: "Kraft sum exceeds one".into(),
        });
    }
    Ok(header)
}

/// Returns the cached table for the budget, building and saving it on a
/// miss. A damaged file is rebuilt from scratch rather than trusted.
pub fn load_or_build(dir: &Path, budget: &Budget) -> Result<Enumeration> {
    budget.validate()?;
    let path = cache_path(dir, budget);
    if path.exists() {
        match load(&path) {
            Ok(table) if table.budget() == budget => return Ok(table),
            Ok(table) => log::warn!(
                "cache {} holds budget {:?}, wanted {:?}; rebuilding",
                path.display(),
                table.budget(),
                budget
            ),
            Err(err) => log::warn!("cache {} unusable ({err}); rebuilding", path.display()),
        }
    }
    let table = enumerate(budget)?;
    save(dir, &table)?;
    Ok(table)
}
