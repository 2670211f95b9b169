use anyhow::{anyhow, Context, Result};

use hamext_core::symexpr::{parse, Rational, SymbolTable};

/// Accepts integers, fractions and exact decimals such as `-3/4` or `0.25`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let e = parse(text, &SymbolTable::new()).with_context(|| format!("`{text}` is not a number"))?;
    e.to_poly()?
        .as_constant()
        .ok_or_else(|| anyhow!("`{text}` is not a constant"))
}

/// `name=value` from `--param`.
pub fn parse_assignment(text: &str) -> Result<(String, Rational), String> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{text}`"))?;
    let name = name.trim();
    if name.is_empty() {
        return Err("parameter name is empty".into());
    }
    let value = parse_rational(value.trim()).map_err(|e| format!("{e:#}"))?;
    Ok((name.to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hamext_core::symexpr::rat;

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("c2=1/3").unwrap(), ("c2".into(), rat(1, 3)));
        assert_eq!(parse_assignment(" a = 0.25").unwrap(), ("a".into(), rat(1, 4)));
        assert_eq!(parse_assignment("b=-2").unwrap(), ("b".into(), rat(-2, 1)));
        assert!(parse_assignment("c2").is_err());
        assert!(parse_assignment("=1").is_err());
        assert!(parse_assignment("c=x").is_err());
    }
}
