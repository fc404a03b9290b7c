//! Text format for bodies, one per line:
//!
//! ```text
//! body ball radius=<r> center=<c1,...,cN>
//! body ellipsoid semiaxes=<s1,...,sN>
//! body tube m=<m> eps=<e> psi=quadratic diag=<w1,...,wm>
//! body tube m=<m> eps=<e> psi=radial coeffs=<c2,c4,...>
//! body implicit dim=<N> poly=<coef,e1,...,eN>;<coef,e1,...,eN>;... [bound=<r>]
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;

use super::body::{BodyModel, ImplicitPolynomial, Monomial};
use super::psi::PsiSpec;
use crate::error::{Error, Result};

/// Parses every body in `text`.
pub fn parse_bodies(text: &str) -> Result<Vec<BodyModel>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_line(raw, idx + 1)?);
    }
    Ok(out)
}

/// Parses exactly one body (the first one in `text`).
pub fn parse_body(text: &str) -> Result<BodyModel> {
    parse_bodies(text)?.into_iter().next().ok_or(Error::Parse {
        line: 1,
        column: 1,
        message: "no body definition found".into(),
    })
}

struct Field<'a> {
    value: &'a str,
    column: usize,
}

fn parse_line(raw: &str, line: usize) -> Result<BodyModel> {
    let err = |column: usize, message: String| Error::Parse { line, column, message };

    let mut tokens = Vec::new();
    let mut col = 0;
    for tok in raw.split(' ') {
        if !tok.is_empty() {
            tokens.push((tok, col + 1));
        }
        col += tok.len() + 1;
    }

    let (head, head_col) = tokens[0];
    if head != "body" {
        return Err(err(head_col, format!("expected 'body', found '{head}'")));
    }
    let (kind, kind_col) = *tokens
        .get(1)
        .ok_or_else(|| err(raw.len() + 1, "missing body kind".into()))?;

    let mut fields: BTreeMap<&str, Field> = BTreeMap::new();
    for &(tok, column) in &tokens[2..] {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| err(column, format!("expected key=value, found '{tok}'")))?;
        if fields
            .insert(
                key,
                Field {
                    value,
                    column: column + key.len() + 1,
                },
            )
            .is_some()
        {
            return Err(err(column, format!("duplicate key '{key}'")));
        }
    }

    let mut take = |key: &str| -> Result<Field> {
        fields
            .remove(key)
            .ok_or_else(|| err(kind_col, format!("body {kind} requires '{key}='")))
    };

    let body = match kind {
        "ball" => {
            let r = take("radius")?;
            let c = take("center")?;
            let radius = real(&r, line)?;
            let center = reals(&c, line)?;
            BodyModel::ball(center, radius).map_err(|e| at(e, line, r.column))?
        }
        "ellipsoid" => {
            let s = take("semiaxes")?;
            BodyModel::ellipsoid(reals(&s, line)?).map_err(|e| at(e, line, s.column))?
        }
        "tube" => {
            let mf = take("m")?;
            let ef = take("eps")?;
            let pf = take("psi")?;
            let m = integer(&mf, line)?;
            let eps = real(&ef, line)?;
            let psi = match pf.value {
                "quadratic" => {
                    let d = take("diag")?;
                    let w = reals(&d, line)?;
                    if w.len() != m {
                        return Err(err(d.column, format!("diag has {} entries, m = {m}", w.len())));
                    }
                    PsiSpec::quadratic(w).map_err(|e| at(e, line, d.column))?
                }
                "radial" => {
                    let c = take("coeffs")?;
                    PsiSpec::radial(m, reals(&c, line)?).map_err(|e| at(e, line, c.column))?
                }
                other => {
                    return Err(err(pf.column, format!("unknown psi form '{other}'")));
                }
            };
            BodyModel::tube(psi, eps).map_err(|e| at(e, line, ef.column))?
        }
        "implicit" => {
            let df = take("dim")?;
            let pf = take("poly")?;
            let dim = integer(&df, line)?;
            let mut terms = Vec::new();
            let mut offset = 0;
            for chunk in pf.value.split(';') {
                let field = Field {
                    value: chunk,
                    column: pf.column + offset,
                };
                offset += chunk.len() + 1;
                let nums = reals(&field, line)?;
                if nums.len() != dim + 1 {
                    return Err(err(
                        field.column,
                        format!("term '{chunk}' needs 1 coefficient and {dim} exponents"),
                    ));
                }
                let mut exps = Vec::with_capacity(dim);
                for &e in &nums[1..] {
                    if e < 0.0 || e.fract() != 0.0 || e > 64.0 {
                        return Err(err(field.column, format!("bad exponent {e} in '{chunk}'")));
                    }
                    exps.push(e as u32);
                }
                terms.push(Monomial { coef: nums[0], exps });
            }
            let bound = match fields.remove("bound") {
                Some(b) => Some(real(&b, line)?),
                None => None,
            };
            let poly = ImplicitPolynomial::new(dim, terms).map_err(|e| at(e, line, pf.column))?;
            BodyModel::implicit(poly, bound).map_err(|e| at(e, line, pf.column))?
        }
        other => return Err(err(kind_col, format!("unknown body kind '{other}'"))),
    };

    if let Some((key, f)) = fields.into_iter().next() {
        return Err(err(f.column - key.len() - 1, format!("unexpected key '{key}'")));
    }
    Ok(body)
}

fn at(e: Error, line: usize, column: usize) -> Error {
    match e {
        Error::InvalidPsi(msg) => Error::InvalidPsi(format!("line {line}: {msg}")),
        Error::InvalidBody(msg) => Error::Parse {
            line,
            column,
            message: msg,
        },
        Error::DimensionMismatch { expected, got } => Error::Parse {
            line,
            column,
            message: format!("expected {expected} entries, got {got}"),
        },
        other => other,
    }
}

fn real(f: &Field, line: usize) -> Result<f64> {
    f.value.parse::<f64>().map_err(|_| Error::Parse {
        line,
        column: f.column,
        message: format!("'{}' is not a number", f.value),
    })
}

fn integer(f: &Field, line: usize) -> Result<usize> {
    f.value.parse::<usize>().map_err(|_| Error::Parse {
        line,
        column: f.column,
        message: format!("'{}' is not a non-negative integer", f.value),
    })
}

fn reals(f: &Field, line: usize) -> Result<Vec<f64>> {
    let mut col = f.column;
    let mut out = Vec::new();
    for part in f.value.split(',') {
        out.push(real(
            &Field {
                value: part,
                column: col,
            },
            line,
        )?);
        col += part.len() + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BodyKind;

    #[test]
    fn parses_examples() {
        let b = parse_body("body ball radius=1.0 center=0,0,0").unwrap();
        assert_eq!(b.dim(), 3);
        assert!(matches!(b.kind(), BodyKind::Ball { radius, .. } if *radius == 1.0));

        let t = parse_body("body tube m=1 eps=0.3 psi=quadratic diag=1").unwrap();
        assert_eq!(t.dim(), 4);

        let r = parse_body("body tube m=2 eps=0.8 psi=radial coeffs=1,-1.2,0.5").unwrap();
        assert_eq!(r.dim(), 5);

        let d = parse_body("body implicit dim=2 poly=1,2,0;1,0,2;-1,0,0").unwrap();
        assert_eq!(d.evaluate(&[0.0, 0.0]), -1.0);
        assert_eq!(d.evaluate(&[0.6, 0.8]), 0.0);

        let e = parse_body("# comment\n\nbody ellipsoid semiaxes=2,1,1\n").unwrap();
        assert_eq!(e.dim(), 3);
    }

    #[test]
    fn eps_out_of_range() {
        let e = parse_body("body tube m=1 eps=1.5 psi=quadratic diag=1").unwrap_err();
        assert!(
            matches!(
                e,
                Error::Parse {
                    line: 1,
                    column: 19,
                    ..
                }
            ),
            "{e:?}"
        );
    }

    #[test]
    fn invalid_psi_reports_condition() {
        let e = parse_body("body tube m=1 eps=0.3 psi=quadratic diag=-1").unwrap_err();
        match e {
            Error::InvalidPsi(msg) => assert!(msg.contains("minimum point at the origin")),
            other => panic!("{other:?}"),
        }
        let e = parse_body("body tube m=2 eps=0.3 psi=radial coeffs=1,-2,1").unwrap_err();
        assert!(matches!(e, Error::InvalidPsi(_)));
    }

    #[test]
    fn parse_errors_have_positions() {
        let e = parse_body("body ball radius=abc center=0,0").unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 1,
                column: 18,
                message: "'abc' is not a number".into()
            }
        );
        let e = parse_body("\nbody cube side=1").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, column: 6, .. }));
        let e = parse_body("body ball radius=1 center=0,x").unwrap_err();
        assert!(
            matches!(
                e,
                Error::Parse {
                    line: 1,
                    column: 29,
                    ..
                }
            ),
            "{e:?}"
        );
        let e = parse_body("body ball radius=1 center=0,0 color=red").unwrap_err();
        assert!(matches!(e, Error::Parse { column: 31, .. }), "{e:?}");
        let e = parse_body("body implicit dim=2 poly=1,2,0;1,0").unwrap_err();
        assert!(matches!(e, Error::Parse { column: 32, .. }), "{e:?}");
    }
}
