//! Plain-text task snapshots.
//!
//! ```text
//! sfwfl-task <family> <d> <n_ues>
//! regularization <r>            (logistic only)
//! ue <index> <m>
//! <x_1> ... <x_d> <target>      (m rows)
//! ...
//! w_star <w_1> ... <w_d>
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting, so parsing a snapshot
//! reproduces the task exactly. Blank lines and lines starting with `#` are
//! ignored.

use std::fmt::Write as _;

use super::{LocalData, LogisticTask, Objective, QuadraticTask, Task, TaskFamily};
use crate::error::{Error, Result};
use crate::vector::ModelVector;

const MAGIC: &str = "sfwfl-task";

pub fn write_snapshot(task: &Task) -> String {
    let mut out = String::new();
    let (data, reg) = match task {
        Task::Quadratic(t) => (t.local_data(), None),
        Task::Logistic(t) => (t.local_data(), Some(t.regularization())),
    };
    let _ = writeln!(out, "{MAGIC} {} {} {}", task.family(), task.dim(), task.n_ues());
    if let Some(r) = reg {
        let _ = writeln!(out, "regularization {r}");
    }
    for (n, ue) in data.iter().enumerate() {
        let _ = writeln!(out, "ue {n} {}", ue.len());
        for i in 0..ue.len() {
            let mut line: Vec<String> = ue.row(i).iter().map(|x| x.to_string()).collect();
            line.push(ue.target(i).to_string());
            let _ = writeln!(out, "{}", line.join(" "));
        }
    }
    let w: Vec<String> = task.w_star().iter().map(|x| x.to_string()).collect();
    let _ = writeln!(out, "w_star {}", w.join(" "));
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok((i + 1, line.split_whitespace().collect()));
        }
        Err(Error::Parse { line: 0, message: "unexpected end of snapshot".into() })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("bad number `{tok}`")))
}

fn expect_key(line: usize, toks: &[&str], key: &str, arity: usize) -> Result<()> {
    if toks.first() != Some(&key) || toks.len() != arity + 1 {
        return Err(parse_err(line, format!("expected `{key}` with {arity} value(s)")));
    }
    Ok(())
}

pub fn parse_snapshot(text: &str) -> Result<Task> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let (ln, head) = lines.next()?;
    if head.len() != 4 || head[0] != MAGIC {
        return Err(parse_err(ln, format!("expected `{MAGIC} <family> <d> <n_ues>`")));
    }
    let family: TaskFamily = head[1].parse().map_err(|e: String| parse_err(ln, e))?;
    let d: usize = num(ln, head[2])?;
    let n_ues: usize = num(ln, head[3])?;
    let reg = if family == TaskFamily::Logistic {
        let (ln, toks) = lines.next()?;
        expect_key(ln, &toks, "regularization", 1)?;
        Some(num::<f64>(ln, toks[1])?)
    } else {
        None
    };
    let mut ues = Vec::with_capacity(n_ues);
    for n in 0..n_ues {
        let (ln, toks) = lines.next()?;
        expect_key(ln, &toks, "ue", 2)?;
        if num::<usize>(ln, toks[1])? != n {
            return Err(parse_err(ln, format!("expected ue {n}")));
        }
        let m: usize = num(ln, toks[2])?;
        let mut rows = Vec::with_capacity(m * d);
        let mut targets = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, toks) = lines.next()?;
            if toks.len() != d + 1 {
                return Err(parse_err(ln, format!("expected {} numbers, found {}", d + 1, toks.len())));
            }
            for t in &toks[..d] {
                rows.push(num(ln, t)?);
            }
            targets.push(num(ln, toks[d])?);
        }
        ues.push(LocalData::new(d, rows, targets).map_err(|e| parse_err(ln, e.to_string()))?);
    }
    let (ln, toks) = lines.next()?;
    expect_key(ln, &toks, "w_star", d)?;
    let w_star = toks[1..].iter().map(|t| num(ln, t)).collect::<Result<ModelVector>>()?;
    if let Ok((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content"));
    }
    Ok(match reg {
        None => Task::Quadratic(QuadraticTask::with_w_star(ues, w_star)?),
        Some(r) => Task::Logistic(LogisticTask::with_w_star(ues, r, w_star)?),
    })
}
