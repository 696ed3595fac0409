//! Bit-exact DIMACS dialect.
//!
//! Header `p cnf <n> <m>` or `p dnf <n> <m>`; clause/cube lines are
//! whitespace-separated nonzero integers terminated by `0`; `x <lits> 0`
//! states that the XOR of the listed literals is true; `c ind <vars> 0`
//! lines are unioned into the sampling set; `c w <var> <weight>` gives the
//! weight of the positive literal as an exact decimal in (0,1) (a `p/q`
//! fraction is also accepted so that any weight map can round-trip); all
//! other `c` lines are ignored.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use super::{
    CnfFormula, DnfFormula, Formula, Lit, ProblemInstance, SamplingSet, Var, VarWeight, WeightMap,
    XorClause,
};

/// Parse failure with 1-based line and column of the offending token.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("missing `p cnf`/`p dnf` header")]
    MissingHeader,
    #[error("literal {0} out of range (header declares {1} variables)")]
    LiteralOutOfRange(i32, u32),
    #[error("expected an integer, found `{0}`")]
    BadInteger(String),
    #[error("unterminated {0} line (missing trailing 0)")]
    Unterminated(&'static str),
    #[error("inconsistent duplicate weight for variable {0}")]
    DuplicateWeight(u32),
    #[error("weight {0} outside the open interval (0,1)")]
    WeightRange(String),
    #[error("malformed weight `{0}`")]
    BadWeight(String),
    #[error("cube contains {0} and its negation")]
    InconsistentCube(i32),
    #[error("clause data before header")]
    DataBeforeHeader,
}

fn err(line: usize, column: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, column, kind }
}

struct Tok<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

fn tokens_of(line: &str, line_no: usize) -> impl Iterator<Item = Tok<'_>> {
    line.split_whitespace().map(move |w| {
        // Byte offset is adequate for column reporting on ASCII input.
        let column = w.as_ptr() as usize - line.as_ptr() as usize + 1;
        Tok {
            text: w,
            line: line_no,
            column,
        }
    })
}

/// Parses the DIMACS dialect into a [`ProblemInstance`].
///
/// Defaults: sampling set = all variables, weight map all-indifferent.
///
/// ```
/// use cellcount::formula::{parse_dimacs, SamplingSet, Var};
///
/// let p = parse_dimacs("p cnf 3 1\nc ind 1 2 0\nc w 1 0.3125\n1 -2 3 0\n")?;
/// assert_eq!(p.num_vars(), 3);
/// assert_eq!(p.sampling_set, SamplingSet::new(vec![Var::new(1), Var::new(2)]));
/// assert!(p.is_weighted());
/// # Ok::<(), cellcount::formula::ParseError>(())
/// ```
pub fn parse_dimacs(text: &str) -> Result<ProblemInstance, ParseError> {
    let mut header: Option<(bool, u32)> = None; // (is_cnf, num_vars)
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut xors: Vec<XorClause> = Vec::new();
    let mut ind_vars: Vec<Var> = Vec::new();
    let mut saw_ind = false;
    let mut weights: Vec<(u32, BigRational, usize, usize)> = Vec::new();
    // Clause tokens may continue across lines until the terminating 0.
    let mut pending: Vec<Lit> = Vec::new();
    let mut pending_xor: Option<Vec<Lit>> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut toks = tokens_of(raw, line_no).peekable();
        let Some(first) = toks.peek() else { continue };

        match first.text {
            "c" => {
                let c = toks.next().unwrap();
                match toks.peek().map(|t| t.text) {
                    Some("ind") => {
                        toks.next();
                        let n = header_vars(&header, c.line, c.column)?;
                        let mut terminated = false;
                        for t in toks {
                            let v = parse_int(&t)?;
                            if v == 0 {
                                terminated = true;
                                break;
                            }
                            if v < 0 || v as u32 > n {
                                return Err(err(
                                    t.line,
                                    t.column,
                                    ParseErrorKind::LiteralOutOfRange(v, n),
                                ));
                            }
                            ind_vars.push(Var::new(v as u32));
                        }
                        if !terminated {
                            return Err(err(line_no, raw.len(), ParseErrorKind::Unterminated("c ind")));
                        }
                        saw_ind = true;
                    }
                    Some("w") => {
                        toks.next();
                        let n = header_vars(&header, c.line, c.column)?;
                        let vt = toks.next().ok_or_else(|| {
                            err(line_no, raw.len(), ParseErrorKind::Unterminated("c w"))
                        })?;
                        let v = parse_int(&vt)?;
                        if v <= 0 || v as u32 > n {
                            return Err(err(
                                vt.line,
                                vt.column,
                                ParseErrorKind::LiteralOutOfRange(v, n),
                            ));
                        }
                        let wt = toks.next().ok_or_else(|| {
                            err(line_no, raw.len(), ParseErrorKind::Unterminated("c w"))
                        })?;
                        let w = parse_weight(&wt)?;
                        weights.push((v as u32, w, wt.line, wt.column));
                    }
                    _ => {} // ordinary comment
                }
            }
            "p" => {
                let p = toks.next().unwrap();
                let kind = toks
                    .next()
                    .ok_or_else(|| bad_header(p.line, p.column, raw))?;
                let is_cnf = match kind.text {
                    "cnf" => true,
                    "dnf" => false,
                    _ => return Err(bad_header(kind.line, kind.column, raw)),
                };
                let nv = toks
                    .next()
                    .ok_or_else(|| bad_header(p.line, p.column, raw))?;
                let n: u32 = nv
                    .text
                    .parse()
                    .map_err(|_| bad_header(nv.line, nv.column, raw))?;
                let mc = toks
                    .next()
                    .ok_or_else(|| bad_header(p.line, p.column, raw))?;
                mc.text
                    .parse::<u64>()
                    .map_err(|_| bad_header(mc.line, mc.column, raw))?;
                if header.is_some() {
                    return Err(bad_header(p.line, p.column, "duplicate header"));
                }
                header = Some((is_cnf, n));
            }
            "x" => {
                toks.next();
                let n = header_vars(&header, 1, 1)
                    .map_err(|_| err(line_no, 1, ParseErrorKind::DataBeforeHeader))?;
                let mut lits = pending_xor.take().unwrap_or_default();
                let mut terminated = false;
                for t in toks {
                    let v = parse_int(&t)?;
                    if v == 0 {
                        terminated = true;
                        break;
                    }
                    check_range(v, n, &t)?;
                    lits.push(Lit::from_dimacs(v));
                }
                if terminated {
                    push_xor(&mut xors, lits);
                } else {
                    pending_xor = Some(lits);
                }
            }
            _ => {
                let n = header_vars(&header, 1, 1)
                    .map_err(|_| err(line_no, first.column, ParseErrorKind::DataBeforeHeader))?;
                for t in toks {
                    let v = parse_int(&t)?;
                    if v == 0 {
                        if let Some((false, _)) = header {
                            check_cube(&pending, &t)?;
                        }
                        clauses.push(std::mem::take(&mut pending));
                    } else {
                        check_range(v, n, &t)?;
                        pending.push(Lit::from_dimacs(v));
                    }
                }
            }
        }
    }

    let Some((is_cnf, n)) = header else {
        return Err(err(1, 1, ParseErrorKind::MissingHeader));
    };
    if !pending.is_empty() || pending_xor.is_some() {
        let what = if pending_xor.is_some() { "xor" } else { "clause" };
        return Err(err(text.lines().count(), 1, ParseErrorKind::Unterminated(what)));
    }

    let mut weight_map = WeightMap::new();
    let mut seen: Vec<(u32, BigRational)> = Vec::new();
    for (v, w, line, column) in weights {
        if let Some((_, prev)) = seen.iter().find(|(pv, _)| *pv == v) {
            if *prev != w {
                return Err(err(line, column, ParseErrorKind::DuplicateWeight(v)));
            }
            continue;
        }
        weight_map
            .set_normal(Var::new(v), w.clone())
            .map_err(|e| err(line, column, ParseErrorKind::WeightRange(e.0)))?;
        seen.push((v, w));
    }

    let sampling_set = if saw_ind {
        SamplingSet::new(ind_vars)
    } else {
        SamplingSet::all(n)
    };

    let formula = if is_cnf {
        let mut f = CnfFormula::new(n);
        for c in clauses {
            f.add_clause(c);
        }
        for x in xors {
            f.add_xor(x);
        }
        Formula::Cnf(f)
    } else {
        let mut f = DnfFormula::new(n);
        for c in clauses {
            // Consistency was checked at the terminating 0.
            f.add_cube(c).expect("cube checked during parse");
        }
        Formula::Dnf(f)
    };

    Ok(ProblemInstance {
        formula,
        sampling_set,
        weights: weight_map,
    })
}

fn bad_header(line: usize, column: usize, raw: &str) -> ParseError {
    err(
        line,
        column,
        ParseErrorKind::MalformedHeader(raw.trim().to_string()),
    )
}

fn header_vars(
    header: &Option<(bool, u32)>,
    line: usize,
    column: usize,
) -> Result<u32, ParseError> {
    header
        .map(|(_, n)| n)
        .ok_or_else(|| err(line, column, ParseErrorKind::DataBeforeHeader))
}

fn parse_int(t: &Tok<'_>) -> Result<i32, ParseError> {
    t.text
        .parse()
        .map_err(|_| err(t.line, t.column, ParseErrorKind::BadInteger(t.text.to_string())))
}

fn check_range(v: i32, n: u32, t: &Tok<'_>) -> Result<(), ParseError> {
    if v.unsigned_abs() > n {
        return Err(err(t.line, t.column, ParseErrorKind::LiteralOutOfRange(v, n)));
    }
    Ok(())
}

fn check_cube(cube: &[Lit], t: &Tok<'_>) -> Result<(), ParseError> {
    for l in cube {
        if cube.contains(&l.negated()) {
            return Err(err(
                t.line,
                t.column,
                ParseErrorKind::InconsistentCube(l.to_dimacs()),
            ));
        }
    }
    Ok(())
}

/// XOR line semantics: `x l₁ … l_k 0` asserts `l₁ ⊕ … ⊕ l_k = 1`. Each
/// negative literal flips the constant, so the variable parity is
/// `1 ⊕ (#negative literals mod 2)`. Vacuously true results are dropped so
/// that serialization round-trips on the canonical form.
fn push_xor(xors: &mut Vec<XorClause>, lits: Vec<Lit>) {
    let negs = lits.iter().filter(|l| !l.is_positive()).count();
    let parity = (1 + negs) % 2 == 1;
    let x = XorClause::new(lits.iter().map(|l| l.var()).collect(), parity);
    if !(x.vars().is_empty() && !x.parity()) {
        xors.push(x);
    }
}

/// Exact decimal (or `p/q`) in the open interval (0,1).
fn parse_weight(t: &Tok<'_>) -> Result<BigRational, ParseError> {
    let s = t.text;
    let bad = || err(t.line, t.column, ParseErrorKind::BadWeight(s.to_string()));
    let w = if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.parse().map_err(|_| bad())?;
        let q: BigInt = q.parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        BigRational::new(p, q)
    } else if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: BigInt = if int.is_empty() {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        let digits: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        BigRational::new(int * &scale + digits, scale)
    } else {
        let int: BigInt = s.parse().map_err(|_| bad())?;
        BigRational::from_integer(int)
    };
    if w <= BigRational::zero() || w >= BigRational::one() {
        return Err(err(
            t.line,
            t.column,
            ParseErrorKind::WeightRange(s.to_string()),
        ));
    }
    Ok(w)
}

/// Serializes an instance; the output parses back to an equal instance.
///
/// Deterministic ordering: header, sampling set (omitted when it is all
/// variables), weights ascending by variable, clauses in order, XOR clauses
/// in order (parity 0 encoded by negating the first literal).
pub fn serialize_dimacs(instance: &ProblemInstance) -> String {
    let mut out = String::new();
    let n = instance.num_vars();
    let (kind, num_clauses) = match &instance.formula {
        Formula::Cnf(f) => ("cnf", f.clauses().len()),
        Formula::Dnf(f) => ("dnf", f.cubes().len()),
    };
    out.push_str(&format!("p {kind} {n} {num_clauses}\n"));

    if instance.sampling_set != SamplingSet::all(n) {
        out.push_str("c ind");
        for v in instance.sampling_set.vars() {
            out.push_str(&format!(" {v}"));
        }
        out.push_str(" 0\n");
    }

    for (v, entry) in instance.weights.iter() {
        if let VarWeight::Normal { positive, .. } = entry {
            out.push_str(&format!("c w {v} {}\n", weight_text(positive)));
        }
    }

    let lines: &[Vec<Lit>] = match &instance.formula {
        Formula::Cnf(f) => f.clauses(),
        Formula::Dnf(f) => f.cubes(),
    };
    for clause in lines {
        for l in clause {
            out.push_str(&format!("{l} "));
        }
        out.push_str("0\n");
    }

    if let Formula::Cnf(f) = &instance.formula {
        for x in f.xor_clauses() {
            // Vacuously true constraints have no textual form and are not
            // part of the canonical shape; drop them.
            if x.vars().is_empty() && !x.parity() {
                continue;
            }
            out.push('x');
            for (i, v) in x.vars().iter().enumerate() {
                if i == 0 && !x.parity() {
                    out.push_str(&format!(" -{v}"));
                } else {
                    out.push_str(&format!(" {v}"));
                }
            }
            out.push_str(" 0\n");
        }
    }
    out
}

/// Exact decimal expansion when the denominator is of the form 2^a·5^b,
/// `p/q` otherwise.
fn weight_text(w: &BigRational) -> String {
    let mut denom = w.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if denom.is_one() {
        let digits = twos.max(fives);
        // w = numer / (2^twos·5^fives); scale to denominator 10^digits.
        let scale = BigInt::from(2).pow(digits - twos) * BigInt::from(5).pow(digits - fives);
        let scaled = w.numer() * scale;
        let s = format!("{:0>width$}", scaled.to_string(), width = digits as usize);
        let split = s.len() - digits as usize;
        format!("{}.{}", if split == 0 { "0" } else { &s[..split] }, &s[split..])
    } else {
        format!("{}/{}", w.numer(), w.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    #[test]
    fn parse_basic_cnf() {
        let p = parse_dimacs("p cnf 2 2\n1 -2 0\n-1 2 0\n").unwrap();
        let f = p.formula.as_cnf().unwrap();
        assert_eq!(f.num_vars(), 2);
        assert_eq!(f.clauses().len(), 2);
        assert_eq!(p.sampling_set, SamplingSet::all(2));
        assert!(p.weights.is_all_indifferent());
    }

    #[test]
    fn parse_ind_line() {
        let p = parse_dimacs("p cnf 3 1\nc ind 1 2 0\n1 2 3 0\n").unwrap();
        assert_eq!(
            p.sampling_set,
            SamplingSet::new(vec![Var::new(1), Var::new(2)])
        );
    }

    #[test]
    fn ind_lines_union() {
        let p = parse_dimacs("p cnf 3 0\nc ind 1 0\nc ind 3 0\n").unwrap();
        assert_eq!(
            p.sampling_set,
            SamplingSet::new(vec![Var::new(1), Var::new(3)])
        );
    }

    #[test]
    fn parse_weight_line() {
        let p = parse_dimacs("p cnf 1 1\nc w 1 0.3125\n1 0\n").unwrap();
        assert_eq!(
            p.weights.literal_weight(Var::new(1).positive()),
            BigRational::from_f64(0.3125).unwrap()
        );
        assert_eq!(
            p.weights.dyadic(Var::new(1)),
            Some(crate::formula::Dyadic { k: 5, m: 4 })
        );
    }

    #[test]
    fn weight_errors() {
        let e = parse_dimacs("p cnf 1 0\nc w 1 1.5\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::WeightRange(_)));
        let e = parse_dimacs("p cnf 1 0\nc w 1 0.3\nc w 1 0.4\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::DuplicateWeight(1)));
        // consistent duplicate is fine
        assert!(parse_dimacs("p cnf 1 0\nc w 1 0.3\nc w 1 0.3\n").is_ok());
    }

    #[test]
    fn error_positions() {
        let e = parse_dimacs("p cnf 2 1\n1 x 0\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        assert!(matches!(e.kind, ParseErrorKind::BadInteger(_)));
        let e = parse_dimacs("p cnf 2 1\n1 3 0\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::LiteralOutOfRange(3, 2)));
        let e = parse_dimacs("p qbf 2 1\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::MalformedHeader(_)));
    }

    #[test]
    fn xor_parity_convention() {
        let p = parse_dimacs("p cnf 2 0\nx 1 2 0\n").unwrap();
        let f = p.formula.as_cnf().unwrap();
        assert_eq!(f.xor_clauses().len(), 1);
        assert!(f.xor_clauses()[0].parity());

        let p = parse_dimacs("p cnf 2 0\nx -1 2 0\n").unwrap();
        let f = p.formula.as_cnf().unwrap();
        assert!(!f.xor_clauses()[0].parity());
    }

    #[test]
    fn xor_serialization_convention() {
        let mut f = CnfFormula::new(2);
        f.add_xor(XorClause::new(vec![Var::new(1), Var::new(2)], true));
        f.add_xor(XorClause::new(vec![Var::new(1), Var::new(2)], false));
        let text = serialize_dimacs(&ProblemInstance::unweighted(Formula::Cnf(f)));
        assert!(text.contains("x 1 2 0\n"));
        assert!(text.contains("x -1 2 0\n"));
    }

    #[test]
    fn empty_formula_serializes_header_only() {
        let p = ProblemInstance::unweighted(Formula::Cnf(CnfFormula::new(3)));
        assert_eq!(serialize_dimacs(&p), "p cnf 3 0\n");
    }

    #[test]
    fn dnf_parse_and_cube_consistency() {
        let p = parse_dimacs("p dnf 2 2\n1 2 0\n-1 0\n").unwrap();
        let f = p.formula.as_dnf().unwrap();
        assert_eq!(f.cubes().len(), 2);

        let e = parse_dimacs("p dnf 2 1\n1 -1 0\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::InconsistentCube(_)));
    }

    #[test]
    fn weight_text_exact() {
        assert_eq!(weight_text(&BigRational::new(5.into(), 16.into())), "0.3125");
        assert_eq!(weight_text(&BigRational::new(3.into(), 10.into())), "0.3");
        assert_eq!(weight_text(&BigRational::new(1.into(), 3.into())), "1/3");
        assert_eq!(weight_text(&BigRational::new(1.into(), 2.into())), "0.5");
    }

    #[test]
    fn round_trip_weighted_xor_instance() {
        let text = "p cnf 4 2\nc ind 1 3 0\nc w 2 0.3125\n1 -2 0\n3 4 0\nx 1 4 0\nx -2 3 0\n";
        let p = parse_dimacs(text).unwrap();
        let back = serialize_dimacs(&p);
        let p2 = parse_dimacs(&back).unwrap();
        assert_eq!(p, p2);
    }
}
