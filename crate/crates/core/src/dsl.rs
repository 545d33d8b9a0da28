//! Scripts: a prime, named sets and forms, and commands.
//!
//! ```text
//! prime 5;
//! set X = cell(v(1) <= v(x) <= v(25), x in 1*P_2 level 1);
//! form b = (e=2, beta=5, mu=[3]);
//! classify X;
//! rectilinearize X with [b];
//! verify X samples=10000 seed=42 modulus=5;
//! dim X;
//! ```

use std::fmt;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::setmodel::{MonomialForm, SetDescriptor};
use crate::text::{Parser, Tok};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub modulus: Option<u32>,
    pub forms: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Classify(String),
    Rectilinearize { set: String, forms: Vec<String> },
    Verify { set: String, options: VerifyOptions },
    Dim(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Script {
    pub prime: u32,
    pub sets: Vec<(String, SetDescriptor)>,
    pub forms: Vec<(String, MonomialForm)>,
    pub commands: Vec<Command>,
}

impl Script {
    pub fn set(&self, name: &str) -> Result<&SetDescriptor> {
        self.sets
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::UnboundName(name.into()))
    }

    pub fn form(&self, name: &str) -> Result<&MonomialForm> {
        self.forms
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::UnboundName(name.into()))
    }

    pub fn forms_named(&self, names: &[String]) -> Result<Vec<MonomialForm>> {
        names.iter().map(|n| self.form(n).cloned()).collect()
    }
}

const KEYWORDS: &[&str] = &[
    "prime",
    "set",
    "form",
    "classify",
    "rectilinearize",
    "verify",
    "dim",
    "with",
];

/// Parses a script. `prime` overrides the declared prime.
pub fn parse_dsl(src: &str, prime: Option<u32>) -> Result<Script> {
    let mut ps = Parser::new(src, prime)?;
    let mut sets: Vec<(String, SetDescriptor)> = Vec::new();
    let mut forms: Vec<(String, MonomialForm)> = Vec::new();
    let mut commands = Vec::new();
    let stmt_starts = [
        "`prime`",
        "`set`",
        "`form`",
        "`classify`",
        "`rectilinearize`",
        "`verify`",
        "`dim`",
    ];
    while !ps.at_eof() {
        let Tok::Ident(word) = ps.peek().clone() else {
            return ps.error(format!("unexpected {}", ps.peek()), &stmt_starts);
        };
        match word.as_str() {
            "prime" => {
                ps.advance();
                let p = ps.int()?;
                ps.set_prime(p.to_u64().unwrap_or(0))?;
            }
            "set" | "form" => {
                ps.advance();
                let name = binding_name(&mut ps)?;
                if sets.iter().any(|(n, _)| *n == name) || forms.iter().any(|(n, _)| *n == name) {
                    return ps.error(format!("`{name}` is already bound"), &[]);
                }
                ps.expect_sym("=")?;
                if word == "set" {
                    let known = sets.clone();
                    let d =
                        ps.descriptor_with(&mut |n: &str| known.iter().find(|(k, _)| k == n).map(|(_, s)| s.clone()))?;
                    d.validate()?;
                    sets.push((name, d));
                } else {
                    forms.push((name, ps.form()?));
                }
            }
            "classify" | "dim" => {
                ps.advance();
                let set = bound_set(&mut ps, &sets)?;
                commands.push(if word == "classify" {
                    Command::Classify(set)
                } else {
                    Command::Dim(set)
                });
            }
            "rectilinearize" => {
                ps.advance();
                let set = bound_set(&mut ps, &sets)?;
                let fs = if ps.eat_kw("with") {
                    form_list(&mut ps, &forms)?
                } else {
                    vec![]
                };
                commands.push(Command::Rectilinearize { set, forms: fs });
            }
            "verify" => {
                ps.advance();
                let set = bound_set(&mut ps, &sets)?;
                let mut options = VerifyOptions::default();
                loop {
                    if ps.eat_kw("with") {
                        options.forms = form_list(&mut ps, &forms)?;
                        continue;
                    }
                    let key = match ps.peek().clone() {
                        Tok::Ident(k) if ["samples", "seed", "modulus"].contains(&k.as_str()) => k,
                        _ => break,
                    };
                    ps.advance();
                    ps.expect_sym("=")?;
                    match key.as_str() {
                        "samples" => options.samples = Some(ps.small()?),
                        "seed" => options.seed = Some(ps.small()?),
                        _ => options.modulus = Some(ps.small()?),
                    }
                }
                commands.push(Command::Verify { set, options });
            }
            _ => return ps.error(format!("unknown statement `{word}`"), &stmt_starts),
        }
        ps.expect_sym(";")?;
    }
    let prime = match ps.p {
        Some(p) => p,
        None => return ps.error("no prime declared", &["`prime`"]),
    };
    Ok(Script {
        prime,
        sets,
        forms,
        commands,
    })
}

fn binding_name(ps: &mut Parser) -> Result<String> {
    let name = ps.ident()?;
    if KEYWORDS.contains(&name.as_str()) {
        return ps.error(format!("`{name}` is a keyword"), &["name"]);
    }
    Ok(name)
}

fn bound_set(ps: &mut Parser, sets: &[(String, SetDescriptor)]) -> Result<String> {
    let name = ps.ident()?;
    if sets.iter().any(|(n, _)| *n == name) {
        Ok(name)
    } else {
        Err(Error::UnboundName(name))
    }
}

fn form_list(ps: &mut Parser, forms: &[(String, MonomialForm)]) -> Result<Vec<String>> {
    ps.expect_sym("[")?;
    let mut out = Vec::new();
    if ps.eat_sym("]") {
        return Ok(out);
    }
    loop {
        let name = ps.ident()?;
        if !forms.iter().any(|(n, _)| *n == name) {
            return Err(Error::UnboundName(name));
        }
        out.push(name);
        if ps.eat_sym("]") {
            return Ok(out);
        }
        ps.expect_sym(",")?;
    }
}

fn names(v: &[String]) -> String {
    format!("[{}]", v.join(", "))
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Classify(s) => write!(f, "classify {s};"),
            Command::Dim(s) => write!(f, "dim {s};"),
            Command::Rectilinearize { set, forms } if forms.is_empty() => write!(f, "rectilinearize {set};"),
            Command::Rectilinearize { set, forms } => write!(f, "rectilinearize {set} with {};", names(forms)),
            Command::Verify { set, options } => {
                write!(f, "verify {set}")?;
                if !options.forms.is_empty() {
                    write!(f, " with {}", names(&options.forms))?;
                }
                if let Some(n) = options.samples {
                    write!(f, " samples={n}")?;
                }
                if let Some(s) = options.seed {
                    write!(f, " seed={s}")?;
                }
                if let Some(m) = options.modulus {
                    write!(f, " modulus={m}")?;
                }
                write!(f, ";")
            }
        }
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "prime {};", self.prime)?;
        for (n, s) in &self.sets {
            writeln!(f, "set {n} = {s};")?;
        }
        for (n, b) in &self.forms {
            writeln!(f, "form {n} = {b};")?;
        }
        for c in &self.commands {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
