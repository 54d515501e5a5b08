//! Tab-separated record reader shared by the ingest formats.

/// One data line: 1-based line number and its tab-separated fields.
pub(crate) struct Record<'a> {
    pub line: usize,
    pub fields: Vec<&'a str>,
}

impl<'a> Record<'a> {
    pub fn get(&self, i: usize) -> Option<&'a str> {
        self.fields.get(i).copied()
    }

    /// Field `i`, required and non-empty after trimming.
    pub fn field(&self, i: usize, what: &str) -> crate::Result<&'a str> {
        match self.get(i).map(str::trim) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(crate::Error::parse(self.line, format!("missing {what}"))),
        }
    }

    pub fn expect_len(&self, min: usize, max: usize) -> crate::Result<()> {
        let n = self.fields.len();
        if n < min || n > max {
            let want = if min == max {
                min.to_string()
            } else {
                format!("{min}-{max}")
            };
            return Err(crate::Error::parse(
                self.line,
                format!("expected {want} fields, found {n}"),
            ));
        }
        Ok(())
    }
}

/// Skips blank lines and `#` comments; strips a trailing `\r`.
pub(crate) fn records(text: &str) -> impl Iterator<Item = Record<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            return None;
        }
        Some(Record {
            line: i + 1,
            fields: line.split('\t').collect(),
        })
    })
}
