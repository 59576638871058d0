use std::io::{self, Write};

use serde::Serialize;

/// CSV with a leading `# schema: ...` comment line and a header row.
pub fn write_csv<R: Serialize, W: Write>(mut out: W, schema: &str, rows: &[R]) -> io::Result<()> {
    writeln!(out, "# schema: {schema}")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(io::Error::other)?;
    }
    w.flush()
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    schema: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON object with a `schema` field first.
pub fn write_json<T: Serialize, W: Write>(mut out: W, schema: &str, body: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, &Tagged { schema, body }).map_err(io::Error::other)?;
    writeln!(out)
}
