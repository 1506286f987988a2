//! Plain-text instance files.
//!
//! Header line: `q n eta eta_bound seed`, whitespace-separated.  The body
//! is either one line of n coefficients (an *open* instance whose target
//! is disclosed) or one or more example lines of n+1 values `a_1 … a_n b`
//! (a *challenge* instance carrying only recorded examples).  The two are
//! distinguished by token count, which never collides since an example
//! line always has one extra token.  Blank lines and `#` comments are
//! skipped.
//!
//! [`Instance::to_oracle`] turns an open instance into a planted
//! simulated oracle and a challenge instance into a replay oracle over
//! the recorded examples.

use crate::error::Error;
use crate::field::FieldCtx;
use crate::Result;

use super::{ExampleOracle, LabeledExample, LinearFn};

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceBody {
    /// Target disclosed in the file.
    Open { target: LinearFn },
    /// Only recorded examples; the target is withheld.
    Challenge { examples: Vec<LabeledExample> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub ctx: FieldCtx,
    pub n: usize,
    pub eta: f64,
    pub eta_bound: f64,
    pub seed: u64,
    pub body: InstanceBody,
}

fn bad(line_no: usize, msg: impl std::fmt::Display) -> Error {
    Error::ParseInstance(format!("line {line_no}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(tok: &str, line_no: usize, what: &str) -> Result<T> {
    tok.parse::<T>()
        .map_err(|_| bad(line_no, format!("cannot parse {what} from `{tok}`")))
}

impl Instance {
    pub fn open(
        ctx: FieldCtx,
        target: LinearFn,
        eta: f64,
        eta_bound: f64,
        seed: u64,
    ) -> Instance {
        Instance {
            ctx,
            n: target.dim(),
            eta,
            eta_bound,
            seed,
            body: InstanceBody::Open { target },
        }
    }

    pub fn challenge(
        ctx: FieldCtx,
        n: usize,
        examples: Vec<LabeledExample>,
        eta: f64,
        eta_bound: f64,
        seed: u64,
    ) -> Instance {
        Instance {
            ctx,
            n,
            eta,
            eta_bound,
            seed,
            body: InstanceBody::Challenge { examples },
        }
    }

    /// The disclosed target, when there is one.
    pub fn target(&self) -> Option<&LinearFn> {
        match &self.body {
            InstanceBody::Open { target } => Some(target),
            InstanceBody::Challenge { .. } => None,
        }
    }

    pub fn parse(text: &str) -> Result<Instance> {
        // (1-based line number, tokens) for every content line.
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .map(|(i, l)| (i, l.split_whitespace().collect::<Vec<_>>()));

        let (hdr_no, hdr) = lines
            .next()
            .ok_or_else(|| Error::ParseInstance("empty file".into()))?;
        if hdr.len() != 5 {
            return Err(bad(
                hdr_no,
                format!("header needs 5 fields `q n eta eta_bound seed`, got {}", hdr.len()),
            ));
        }
        let q: u64 = parse_num(hdr[0], hdr_no, "q")?;
        let n: usize = parse_num(hdr[1], hdr_no, "n")?;
        let eta: f64 = parse_num(hdr[2], hdr_no, "eta")?;
        let eta_bound: f64 = parse_num(hdr[3], hdr_no, "eta_bound")?;
        let seed: u64 = parse_num(hdr[4], hdr_no, "seed")?;

        let ctx = FieldCtx::new(q).map_err(|e| bad(hdr_no, e))?;
        if n == 0 {
            return Err(bad(hdr_no, "n must be positive"));
        }
        let max = 1.0 - 1.0 / ctx.qf();
        if !eta.is_finite() || !eta_bound.is_finite() || eta < 0.0 || eta > eta_bound || eta_bound >= max
        {
            return Err(bad(
                hdr_no,
                format!("need 0 ≤ eta ({eta}) ≤ eta_bound ({eta_bound}) < 1 − 1/q ({max})"),
            ));
        }

        let parse_values = |toks: &[&str], line_no: usize| -> Result<Vec<u64>> {
            toks.iter()
                .map(|t| {
                    let v: u64 = parse_num(t, line_no, "field element")?;
                    if !ctx.is_canonical(v) {
                        return Err(bad(line_no, format!("{v} is not in 0..{q}")));
                    }
                    Ok(v)
                })
                .collect()
        };

        let (first_no, first) = lines
            .next()
            .ok_or_else(|| Error::ParseInstance("missing body after header".into()))?;
        if first.len() == n {
            // Open instance: one coefficient line, nothing after it.
            let coeffs = parse_values(&first, first_no)?;
            if let Some((extra_no, _)) = lines.next() {
                return Err(bad(extra_no, "unexpected line after coefficient line"));
            }
            let target = LinearFn::new(ctx, coeffs).expect("canonical checked");
            Ok(Instance::open(ctx, target, eta, eta_bound, seed))
        } else if first.len() == n + 1 {
            let mut examples = Vec::new();
            let mut push = |toks: &[&str], line_no: usize| -> Result<()> {
                if toks.len() != n + 1 {
                    return Err(bad(
                        line_no,
                        format!("example line needs {} values, got {}", n + 1, toks.len()),
                    ));
                }
                let mut vals = parse_values(toks, line_no)?;
                let b = vals.pop().expect("n+1 values");
                examples.push(LabeledExample { a: vals, b });
                Ok(())
            };
            push(&first, first_no)?;
            for (line_no, toks) in lines {
                push(&toks, line_no)?;
            }
            Ok(Instance::challenge(ctx, n, examples, eta, eta_bound, seed))
        } else {
            Err(bad(
                first_no,
                format!(
                    "body line needs {n} values (coefficients) or {} (example), got {}",
                    n + 1,
                    first.len()
                ),
            ))
        }
    }

    /// Canonical text form; `parse` round-trips it.
    pub fn print(&self) -> String {
        let mut out = format!(
            "{} {} {} {} {}\n",
            self.ctx.q(),
            self.n,
            self.eta,
            self.eta_bound,
            self.seed
        );
        match &self.body {
            InstanceBody::Open { target } => {
                let line: Vec<String> = target.coeffs().iter().map(|c| c.to_string()).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            InstanceBody::Challenge { examples } => {
                for ex in examples {
                    let mut line: Vec<String> = ex.a.iter().map(|c| c.to_string()).collect();
                    line.push(ex.b.to_string());
                    out.push_str(&line.join(" "));
                    out.push('\n');
                }
            }
        }
        out
    }

    /// Oracle over this instance: planted simulation for an open
    /// instance, replay of the recorded examples for a challenge.
    pub fn to_oracle(&self) -> Result<ExampleOracle> {
        match &self.body {
            InstanceBody::Open { target } => {
                ExampleOracle::planted(target.clone(), self.eta, self.eta_bound, self.seed)
            }
            InstanceBody::Challenge { examples } => ExampleOracle::replay(
                self.ctx,
                self.n,
                examples.clone(),
                self.eta,
                self.eta_bound,
                self.seed,
            ),
        }
    }
}
