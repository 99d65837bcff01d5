//! Text form of operator specs, e.g. `R[site={1,2,3}]`, `R[m=4]`,
//! `R[nn,I=1..n-2]`, `R[brickwork,dist=des2]`, `Q[loo]`.
//!
//! Bounds may use the symbol `n` (optionally minus a constant) so configs
//! stay valid across wire counts.

use super::OperatorSpec;
use crate::circuit::GateDist;
use crate::error::{Error, Result};

pub fn parse_operator(text: &str, n: usize, k: usize) -> Result<OperatorSpec> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let (family, body) = split_brackets(&t)?;
    match family {
        "R" => parse_r(body, n, k),
        "Q" => parse_q(body, n, k),
        other => Err(Error::Parse(format!("unknown operator family {other:?}"))),
    }
}

fn split_brackets(t: &str) -> Result<(&str, &str)> {
    let open = t.find('[').ok_or_else(|| Error::Parse(format!("missing '[' in {t:?}")))?;
    if !t.ends_with(']') {
        return Err(Error::Parse(format!("missing trailing ']' in {t:?}")));
    }
    Ok((&t[..open], &t[open + 1..t.len() - 1]))
}

fn parse_r(body: &str, n: usize, k: usize) -> Result<OperatorSpec> {
    if body == "full" {
        return OperatorSpec::r_full(n, k);
    }
    if body == "nn" {
        return OperatorSpec::r_nn(n, k);
    }
    if let Some(rest) = body.strip_prefix("nn,I=") {
        let anchors = parse_index_list(rest, n)?;
        return OperatorSpec::r_nn_anchors(n, k, anchors);
    }
    if let Some(rest) = body.strip_prefix("site=") {
        let site = parse_set(rest, n)?;
        return OperatorSpec::r_site(n, k, site);
    }
    if let Some(rest) = body.strip_prefix("m=") {
        let m = parse_bound(rest, n)?;
        return OperatorSpec::r_subset(n, k, m);
    }
    if let Some(rest) = body.strip_prefix("brickwork") {
        let dist = match rest {
            "" | ",dist=alt" => GateDist::Alternating,
            ",dist=des2" => GateDist::Des2,
            other => return Err(Error::Parse(format!("unknown brickwork option {other:?}"))),
        };
        return OperatorSpec::r_brickwork(n, k, dist);
    }
    Err(Error::Parse(format!("unrecognized R form R[{body}]")))
}

fn parse_q(body: &str, n: usize, k: usize) -> Result<OperatorSpec> {
    if body == "full" {
        return OperatorSpec::q_full(n, k);
    }
    if body == "loo" {
        return OperatorSpec::q_loo(n, k);
    }
    if let Some(rest) = body.strip_prefix("site=") {
        let site = parse_set(rest, n)?;
        return OperatorSpec::q_site(n, k, site);
    }
    Err(Error::Parse(format!("unrecognized Q form Q[{body}]")))
}

/// `{1,3,5}` or a range `1..n-2`.
fn parse_index_list(t: &str, n: usize) -> Result<Vec<usize>> {
    if t.starts_with('{') {
        return parse_set(t, n);
    }
    if let Some((lo, hi)) = t.split_once("..") {
        let lo = parse_bound(lo, n)?;
        let hi = parse_bound(hi, n)?;
        if lo > hi {
            return Err(Error::Parse(format!("empty range {t:?}")));
        }
        return Ok((lo..=hi).collect());
    }
    Ok(vec![parse_bound(t, n)?])
}

fn parse_set(t: &str, n: usize) -> Result<Vec<usize>> {
    let inner = t
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::Parse(format!("expected {{..}} set, got {t:?}")))?;
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(|part| parse_bound(part, n)).collect()
}

/// Integer literal, `n`, or `n-<int>`.
fn parse_bound(t: &str, n: usize) -> Result<usize> {
    if let Some(rest) = t.strip_prefix('n') {
        if rest.is_empty() {
            return Ok(n);
        }
        if let Some(sub) = rest.strip_prefix('-') {
            let d: usize =
                sub.parse().map_err(|_| Error::Parse(format!("bad offset in {t:?}")))?;
            return n.checked_sub(d).ok_or_else(|| {
                Error::Parse(format!("bound {t:?} is negative at n={n}"))
            });
        }
        return Err(Error::Parse(format!("bad bound {t:?}")));
    }
    t.parse().map_err(|_| Error::Parse(format!("bad integer {t:?}")))
}
