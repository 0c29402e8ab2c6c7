//! Line-oriented `key = value` text shared by the config, camera and scene
//! files. `#` starts a comment, `[name]` opens a block.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Empty for entries before the first `[name]` line.
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

pub fn parse(source: &str, text: &str) -> Result<Vec<Block>> {
    let mut blocks = vec![Block { name: String::new(), line: 0, entries: Vec::new() }];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::parse(source, Some(line), "empty block name"));
            }
            blocks.push(Block { name: name.to_string(), line, entries: Vec::new() });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::parse(source, Some(line), format!("expected 'key = value', got '{content}'")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::parse(source, Some(line), format!("invalid key '{key}'")));
        }
        let block = blocks.last_mut().expect("root block");
        if block.entries.iter().any(|e| e.key == key) {
            return Err(Error::parse(source, Some(line), format!("duplicate key '{key}'")));
        }
        block.entries.push(Entry { line, key: key.to_string(), value: value.to_string() });
    }
    Ok(blocks)
}

/// Typed access to one block's entries; every key must be consumed.
pub struct Fields<'a> {
    source: &'a str,
    block: &'a Block,
    used: Vec<bool>,
}

impl<'a> Fields<'a> {
    pub fn new(source: &'a str, block: &'a Block) -> Self {
        Self { source, block, used: vec![false; block.entries.len()] }
    }

    fn take(&mut self, key: &str) -> Option<&'a Entry> {
        let i = self.block.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(&self.block.entries[i])
    }

    fn err(&self, line: usize, msg: String) -> Error {
        Error::parse(self.source, Some(line), msg)
    }

    pub fn reals(&mut self, key: &str, n: usize) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        let vals: Vec<f64> = e
            .value
            .split_whitespace()
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| self.err(e.line, format!("'{key}' needs finite numbers, got '{}'", e.value)))?;
        if vals.len() != n {
            return Err(self.err(e.line, format!("'{key}' needs {n} numbers, got {}", vals.len())));
        }
        Ok(Some(vals))
    }

    pub fn real(&mut self, key: &str) -> Result<Option<f64>> {
        Ok(self.reals(key, 1)?.map(|v| v[0]))
    }

    pub fn require_reals(&mut self, key: &str, n: usize) -> Result<Vec<f64>> {
        let line = self.block.line;
        self.reals(key, n)?.ok_or_else(|| self.err(line, format!("[{}] is missing '{key}'", self.block.name)))
    }

    pub fn require_real(&mut self, key: &str) -> Result<f64> {
        Ok(self.require_reals(key, 1)?[0])
    }

    pub fn integer(&mut self, key: &str) -> Result<Option<usize>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        e.value
            .parse()
            .map(Some)
            .map_err(|_| self.err(e.line, format!("'{key}' needs a non-negative integer, got '{}'", e.value)))
    }

    pub fn require_integer(&mut self, key: &str) -> Result<usize> {
        let line = self.block.line;
        self.integer(key)?.ok_or_else(|| self.err(line, format!("missing '{key}'")))
    }

    pub fn raw(&mut self, key: &str) -> Option<(usize, &'a str)> {
        self.take(key).map(|e| (e.line, e.value.as_str()))
    }

    /// Fails on the first entry no getter asked for.
    pub fn finish(self) -> Result<()> {
        match self.used.iter().position(|u| !u) {
            Some(i) => {
                let e = &self.block.entries[i];
                Err(self.err(e.line, format!("unknown key '{}'", e.key)))
            }
            None => Ok(()),
        }
    }
}
