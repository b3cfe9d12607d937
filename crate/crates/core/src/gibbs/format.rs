use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gibbs::{Factor, FactorGraph};

pub fn load_factor_graph(path: impl AsRef<Path>) -> Result<FactorGraph> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_factor_graph(BufReader::new(file), path)
}

/// Text format, `#` comments allowed:
///
/// ```text
/// V F
/// domains d_0 ... d_{V-1}          (optional, default binary)
/// factor arity v_1 .. v_arity table_size w_0 .. w_{table_size-1}
/// ```
///
/// The leading `factor` keyword may be omitted.
pub fn parse_factor_graph(reader: impl BufRead, path: &Path) -> Result<FactorGraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut domains: Option<Vec<u32>> = None;
    let mut factors = Vec::new();
    let mut last_line = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        last_line = lineno;
        let line = line.map_err(|e| Error::io(path, e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: String| Error::parse(path, lineno, msg);
        let mut toks = body.split_whitespace().peekable();
        let Some((n_vars, n_factors)) = header else {
            let mut num = |what: &str| -> Result<usize> {
                let t = toks
                    .next()
                    .ok_or_else(|| err(format!("missing {what} in header")))?;
                t.parse().map_err(|_| err(format!("bad {what} {t:?}")))
            };
            let h = (num("variable count")?, num("factor count")?);
            if toks.next().is_some() {
                return Err(err("header must be `V F`".into()));
            }
            header = Some(h);
            continue;
        };
        if toks.peek() == Some(&"domains") {
            toks.next();
            if domains.is_some() || !factors.is_empty() {
                return Err(err("domains line must directly follow the header".into()));
            }
            let d: Vec<u32> = toks
                .map(|t| t.parse().map_err(|_| err(format!("bad domain size {t:?}"))))
                .collect::<Result<_>>()?;
            if d.len() != n_vars || d.contains(&0) {
                return Err(err(format!("expected {n_vars} positive domain sizes")));
            }
            domains = Some(d);
            continue;
        }
        if toks.peek() == Some(&"factor") {
            toks.next();
        }
        let mut next = |what: &str| -> Result<&str> {
            toks.next().ok_or_else(|| err(format!("missing {what}")))
        };
        let arity: usize = next("arity")?
            .parse()
            .map_err(|_| err("bad arity".into()))?;
        if arity == 0 {
            return Err(err("factor arity must be at least 1".into()));
        }
        let mut vars = Vec::with_capacity(arity);
        for _ in 0..arity {
            let t = next("variable id")?;
            let v: usize = t
                .parse()
                .map_err(|_| err(format!("bad variable id {t:?}")))?;
            if v >= n_vars {
                return Err(err(format!("variable {v} out of range (V = {n_vars})")));
            }
            vars.push(v);
        }
        let size: usize = next("table size")?
            .parse()
            .map_err(|_| err("bad table size".into()))?;
        let mut log_weights = Vec::with_capacity(size);
        for _ in 0..size {
            let t = next("log weight")?;
            let w: f64 = t
                .parse()
                .map_err(|_| err(format!("bad log weight {t:?}")))?;
            if !w.is_finite() {
                return Err(err(format!("non-finite log weight {t:?}")));
            }
            log_weights.push(w);
        }
        if toks.next().is_some() {
            return Err(err("trailing tokens after factor table".into()));
        }
        if factors.len() == n_factors {
            return Err(err(format!("more than the declared {n_factors} factors")));
        }
        let doms = domains.get_or_insert_with(|| vec![2; n_vars]);
        let expected: usize = vars.iter().map(|&v| doms[v] as usize).product();
        if size != expected {
            return Err(err(format!("table size {size}, expected {expected}")));
        }
        factors.push(Factor { vars, log_weights });
    }
    let Some((n_vars, n_factors)) = header else {
        return Err(Error::parse(path, 0, "empty factor graph file"));
    };
    if factors.len() != n_factors {
        return Err(Error::parse(
            path,
            last_line,
            format!("declared {n_factors} factors, found {}", factors.len()),
        ));
    }
    FactorGraph::new(domains.unwrap_or_else(|| vec![2; n_vars]), factors)
}

pub fn write_factor_graph(g: &FactorGraph, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {}", g.n_vars(), g.n_factors())?;
    if g.domains().iter().any(|&d| d != 2) {
        let d: Vec<String> = g.domains().iter().map(u32::to_string).collect();
        writeln!(out, "domains {}", d.join(" "))?;
    }
    for f in g.factors() {
        let vars: Vec<String> = f.vars.iter().map(usize::to_string).collect();
        let w: Vec<String> = f.log_weights.iter().map(|w| format!("{w:?}")).collect();
        writeln!(
            out,
            "factor {} {} {} {}",
            f.vars.len(),
            vars.join(" "),
            f.log_weights.len(),
            w.join(" ")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<FactorGraph> {
        parse_factor_graph(s.as_bytes(), Path::new("g.fg"))
    }

    #[test]
    fn parses_and_round_trips() {
        let g = parse("# chain\n3 2\nfactor 2 0 1 4 1 -1 -1 1\n2 1 2 4 0.5 0 0 0.5\n").unwrap();
        assert_eq!(g.n_vars(), 3);
        assert_eq!(g.factors_of(1), &[0, 1]);
        let mut buf = Vec::new();
        write_factor_graph(&g, &mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), g);
    }

    #[test]
    fn k_ary_domains() {
        let g = parse("2 1\ndomains 3 2\nfactor 2 0 1 6 0 1 2 3 4 5\n").unwrap();
        assert_eq!(g.domain(0), 3);
        let mut buf = Vec::new();
        write_factor_graph(&g, &mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), g);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("2 1\n\nfactor 2 0 5 4 0 0 0 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse("2 1\nfactor 1 0 3 0 0 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse("2 1\nfactor 1 0 2 0 x\n").unwrap_err();
        assert!(e.to_string().contains("line 2"));
        assert!(parse("2 2\nfactor 1 0 2 0 0\n").is_err());
        assert!(parse("").is_err());
    }
}
